"""Polynomials in bosonic ladder operators with oscillating phase labels.

Every term is kept normal ordered: within a mode all creation operators
precede all annihilation operators, and modes appear in a fixed global
order (system modes before bath modes, then by label).  A term carries the
factor ``exp(i * phase * t)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from .coeff import CoeffSum, QQi
from .freq import FreqExpr, ZERO


@dataclass(frozen=True)
class ModeId:
    label: str
    kind: str = "system"  # "system" | "bath"
    freq: str | None = None  # symbolic frequency carried by a bath family

    def __post_init__(self):
        if self.kind not in ("system", "bath"):
            raise ValueError(f"mode kind must be 'system' or 'bath', got {self.kind!r}")
        if self.kind == "bath" and self.freq is None:
            raise ValueError("bath modes carry a symbolic frequency")

    @property
    def order_key(self) -> tuple[int, str]:
        return (0 if self.kind == "system" else 1, self.label)


C = ModeId("c")
R = ModeId("r")
A = ModeId("a", "bath", "w")

MODES = {m.label: m for m in (C, R, A)}

Op = tuple[ModeId, bool]  # (mode, dagger)
TermKey = tuple[tuple[Op, ...], FreqExpr]


@dataclass(frozen=True)
class NormalTerm:
    coeff: CoeffSum
    ops: tuple[Op, ...] = ()
    phase: FreqExpr = ZERO


@lru_cache(maxsize=None)
def _order_single(word: tuple[bool, ...]) -> tuple[tuple[tuple[int, int], int], ...]:
    # word of dagger flags for one mode -> {(n_dag, n_ann): integer multiplicity}
    for k in range(len(word) - 1):
        if not word[k] and word[k + 1]:
            acc: dict[tuple[int, int], int] = {}
            swapped = word[:k] + (True, False) + word[k + 2:]
            dropped = word[:k] + word[k + 2:]
            for sub in (swapped, dropped):
                for key, n in _order_single(sub):
                    acc[key] = acc.get(key, 0) + n
            return tuple(sorted(acc.items()))
    n_dag = sum(word)
    return (((n_dag, len(word) - n_dag), 1),)


def _normal_words(ops: tuple[Op, ...]) -> list[tuple[tuple[Op, ...], int]]:
    by_mode: dict[ModeId, list[bool]] = {}
    for mode, dag in ops:
        by_mode.setdefault(mode, []).append(dag)
    modes = sorted(by_mode, key=lambda m: m.order_key)
    per_mode = []
    for m in modes:
        opts = []
        for (nd, na), mult in _order_single(tuple(by_mode[m])):
            opts.append((((m, True),) * nd + ((m, False),) * na, mult))
        per_mode.append(opts)
    out = []
    for combo in product(*per_mode):
        word: tuple[Op, ...] = ()
        mult = 1
        for w, n in combo:
            word += w
            mult *= n
        out.append((word, mult))
    return out


class OperatorPoly:
    """Merged sum of :class:`NormalTerm` s keyed by ``(ops, phase)``."""

    __slots__ = ("_terms",)

    def __init__(self, terms: dict[TermKey, CoeffSum] | None = None):
        self._terms: dict[TermKey, CoeffSum] = {}
        for k, c in (terms or {}).items():
            if not c.is_zero():
                self._terms[k] = c

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls) -> OperatorPoly:
        return cls()

    @classmethod
    def scalar(cls, coeff: CoeffSum, phase: FreqExpr = ZERO) -> OperatorPoly:
        return cls({((), phase): coeff})

    @classmethod
    def term(cls, coeff: CoeffSum, ops=(), phase: FreqExpr = ZERO) -> OperatorPoly:
        return normal_order(NormalTerm(coeff, tuple(ops), phase))

    @classmethod
    def ladder(cls, mode: ModeId, dagger: bool, phase: FreqExpr = ZERO,
               coeff: CoeffSum | None = None) -> OperatorPoly:
        return cls({(((mode, dagger),), phase): coeff if coeff is not None else CoeffSum.const(1)})

    @classmethod
    def from_terms(cls, terms) -> OperatorPoly:
        acc: dict[TermKey, CoeffSum] = {}
        for t in terms:
            for (ops, ph), c in normal_order(t)._terms.items():
                acc[(ops, ph)] = acc[(ops, ph)] + c if (ops, ph) in acc else c
        return cls(acc)

    # views --------------------------------------------------------------
    def terms(self) -> list[NormalTerm]:
        return [NormalTerm(self._terms[k], *k) for k in sorted(self._terms, key=_term_sort_key)]

    def items(self):
        return [(k, self._terms[k]) for k in sorted(self._terms, key=_term_sort_key)]

    def coeff(self, ops=(), phase: FreqExpr = ZERO) -> CoeffSum:
        return self._terms.get((tuple(ops), phase), CoeffSum())

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self.terms())

    def is_zero(self) -> bool:
        return not self._terms

    def equals(self, other: OperatorPoly) -> bool:
        return (self - other).is_zero()

    def __repr__(self) -> str:
        from .text import render_poly

        return f"OperatorPoly({render_poly(self)!r})"

    # arithmetic ---------------------------------------------------------
    def __add__(self, other: OperatorPoly) -> OperatorPoly:
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc[k] + c if k in acc else c
        return OperatorPoly(acc)

    def __neg__(self) -> OperatorPoly:
        return OperatorPoly({k: -c for k, c in self._terms.items()})

    def __sub__(self, other: OperatorPoly) -> OperatorPoly:
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, OperatorPoly):
            return multiply(self, other)
        return self.scale(other)

    __rmul__ = lambda self, other: self.scale(other)  # noqa: E731

    def scale(self, factor: CoeffSum | QQi | int) -> OperatorPoly:
        if isinstance(factor, int):
            factor = QQi.make(factor)
        if isinstance(factor, QQi):
            return OperatorPoly({k: c.scale(factor) for k, c in self._terms.items()})
        return OperatorPoly({k: c * factor for k, c in self._terms.items()})

    def subs(self, mapping: dict[str, FreqExpr]) -> OperatorPoly:
        """Substitute frequency symbols in phases and coefficients."""
        acc: dict[TermKey, CoeffSum] = {}
        for (ops, ph), c in self._terms.items():
            k = (ops, ph.subs(mapping))
            nc = c.subs(mapping)
            acc[k] = acc[k] + nc if k in acc else nc
        return OperatorPoly(acc)

    def time_derivative(self) -> OperatorPoly:
        """Formal d/dt: each term picks up ``i * phase``."""
        acc = {}
        for (ops, ph), c in self._terms.items():
            if not ph.is_zero():
                acc[(ops, ph)] = c.scale(QQi.make(0, 1)) * _freq_coeff(ph)
        return OperatorPoly(acc)

    def filter(self, pred) -> OperatorPoly:
        return OperatorPoly({k: c for k, c in self._terms.items() if pred(NormalTerm(c, *k))})


def _freq_coeff(ph: FreqExpr) -> CoeffSum:
    return CoeffSum.monomial(1, factors={ph: 1})


def _term_sort_key(k: TermKey):
    ops, ph = k
    return (len(ops), tuple((m.order_key, not d) for m, d in ops), ph)


def normal_order(term: NormalTerm) -> OperatorPoly:
    """Rewrite one term in normal order using ``[a, a+] = 1``; distinct modes commute."""
    acc: dict[TermKey, CoeffSum] = {}
    for word, mult in _normal_words(term.ops):
        k = (word, term.phase)
        c = term.coeff.scale(QQi.make(mult))
        acc[k] = acc[k] + c if k in acc else c
    return OperatorPoly(acc)


def multiply(a: OperatorPoly, b: OperatorPoly) -> OperatorPoly:
    acc: dict[TermKey, CoeffSum] = {}
    for (ops1, ph1), c1 in a._terms.items():
        for (ops2, ph2), c2 in b._terms.items():
            c = c1 * c2
            ph = ph1 + ph2
            for word, mult in _normal_words(ops1 + ops2):
                k = (word, ph)
                cm = c.scale(QQi.make(mult)) if mult != 1 else c
                acc[k] = acc[k] + cm if k in acc else cm
    return OperatorPoly(acc)


def commutator(a: OperatorPoly, b: OperatorPoly) -> OperatorPoly:
    return multiply(a, b) - multiply(b, a)


def adjoint(a: OperatorPoly) -> OperatorPoly:
    """Formal Hermitian conjugate: reverse and dagger ops, conjugate, negate phase."""
    terms = []
    for (ops, ph), c in a._terms.items():
        rev = tuple((m, not d) for m, d in reversed(ops))
        terms.append(NormalTerm(c.conj(), rev, -ph))
    return OperatorPoly.from_terms(terms)


def is_hermitian(a: OperatorPoly) -> bool:
    return adjoint(a).equals(a)
