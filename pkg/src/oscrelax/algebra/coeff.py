"""Exact coefficients: Gaussian rationals times parameter powers times
powers of linear frequency factors.

Equality of two :class:`CoeffSum` values is decided numerically, by
evaluating both at a fixed set of random strictly positive assignments of
every symbol.  The structural form is only a display normal form; it is not
unique (partial-fraction identities are not applied).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .freq import FREQ_SYMBOLS, FreqExpr

PARAM_SYMBOLS = ("g", "gamma_c", "hbar")
ALL_SYMBOLS = PARAM_SYMBOLS + FREQ_SYMBOLS

REL_TOL = 1e-12
N_POINTS = 10


@dataclass(frozen=True)
class QQi:
    """Exact Gaussian rational ``re + i*im``."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @classmethod
    def make(cls, re=0, im=0) -> QQi:
        return cls(Fraction(re), Fraction(im))

    def __add__(self, o: QQi) -> QQi:
        return QQi(self.re + o.re, self.im + o.im)

    def __sub__(self, o: QQi) -> QQi:
        return QQi(self.re - o.re, self.im - o.im)

    def __mul__(self, o: QQi) -> QQi:
        return QQi(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    def __neg__(self) -> QQi:
        return QQi(-self.re, -self.im)

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def conj(self) -> QQi:
        return QQi(self.re, -self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self) -> str:
        re, im = self.re, self.im
        fr = lambda q: f"{q.numerator}/{q.denominator}"  # noqa: E731
        if not im:
            return fr(re)
        if not re:
            return f"{fr(im)}i"
        sign = "-" if im < 0 else "+"
        return f"{fr(re)}{sign}{fr(abs(im))}i"


ONE_Q = QQi.make(1)
I_Q = QQi.make(0, 1)

# key = (parameter powers, frequency-factor powers), both sorted tuples
MonoKey = tuple[tuple[tuple[str, int], ...], tuple[tuple[FreqExpr, int], ...]]


class _Points:
    """Shared random evaluation points for numeric coefficient equality."""

    def __init__(self, seed: int = 20240917):
        self.reseed(seed)

    def reseed(self, seed: int) -> None:
        rng = np.random.default_rng(seed)
        pts = []
        while len(pts) < N_POINTS:
            vals = {s: float(rng.uniform(0.5, 3.0)) for s in ALL_SYMBOLS}
            fr = [vals[s] for s in FREQ_SYMBOLS]
            # keep the frequency symbols well separated so difference factors stay O(1)
            if min(abs(a - b) for k, a in enumerate(fr) for b in fr[k + 1:]) < 0.2:
                continue
            pts.append(vals)
        self.points = pts
        self.seed = seed


POINTS = _Points()


def set_seed(seed: int) -> None:
    """Reseed the random evaluation points used for coefficient equality."""
    POINTS.reseed(seed)


def _mono_value(key: MonoKey, values: dict[str, float]) -> float:
    syms, facs = key
    v = 1.0
    for s, p in syms:
        v *= values[s] ** p
    for f, p in facs:
        v *= f.evaluate(values) ** p
    return v


def _merge_powers(a, b):
    d = dict(a)
    for k, p in b:
        d[k] = d.get(k, 0) + p
    return tuple(sorted(((k, p) for k, p in d.items() if p), key=lambda kp: _sort_key(kp[0])))


def _sort_key(k):
    if isinstance(k, str):
        return (0, ALL_SYMBOLS.index(k) if k in ALL_SYMBOLS else 99, k)
    return (1, k)


class CoeffSum:
    """Sum of fraction-monomials with exact Gaussian-rational prefactors."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[MonoKey, QQi] | None = None):
        self.terms: dict[MonoKey, QQi] = {k: v for k, v in (terms or {}).items() if v}

    # construction -------------------------------------------------------
    @classmethod
    def const(cls, re=0, im=0) -> CoeffSum:
        return cls({((), ()): QQi.make(re, im)})

    @classmethod
    def monomial(cls, q: QQi | int | Fraction = 1, syms: dict[str, int] | None = None,
                 factors: dict[FreqExpr, int] | None = None) -> CoeffSum:
        if not isinstance(q, QQi):
            q = QQi.make(q)
        sym_t = _merge_powers((), tuple((syms or {}).items()))
        fac_acc: dict[FreqExpr, int] = {}
        for f, p in (factors or {}).items():
            k, cf = f.canonical()
            fac_acc[cf] = fac_acc.get(cf, 0) + p
            q = q * QQi(Fraction(k) ** p)
        fac_t = _merge_powers((), tuple(fac_acc.items()))
        return cls({(sym_t, fac_t): q})

    @classmethod
    def symbol(cls, name: str, power: int = 1) -> CoeffSum:
        return cls.monomial(1, {name: power})

    # arithmetic ---------------------------------------------------------
    def __add__(self, other: CoeffSum) -> CoeffSum:
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        return CoeffSum(out)

    def __neg__(self) -> CoeffSum:
        return CoeffSum({k: -v for k, v in self.terms.items()})

    def __sub__(self, other: CoeffSum) -> CoeffSum:
        return self + (-other)

    def __mul__(self, other: CoeffSum) -> CoeffSum:
        out: dict[MonoKey, QQi] = {}
        for (s1, f1), v1 in self.terms.items():
            for (s2, f2), v2 in other.terms.items():
                k = (_merge_powers(s1, s2), _merge_powers(f1, f2))
                v = v1 * v2
                out[k] = out[k] + v if k in out else v
        return CoeffSum(out)

    def scale(self, q: QQi) -> CoeffSum:
        return CoeffSum({k: v * q for k, v in self.terms.items()})

    def conj(self) -> CoeffSum:
        # every symbol is real
        return CoeffSum({k: v.conj() for k, v in self.terms.items()})

    def subs(self, mapping: dict[str, FreqExpr]) -> CoeffSum:
        """Substitute frequency symbols inside the linear factors."""
        out = CoeffSum()
        for (syms, facs), v in self.terms.items():
            factors: dict[FreqExpr, int] = {}
            for f, p in facs:
                nf = f.subs(mapping)
                if nf.is_zero():
                    raise ZeroDivisionError(f"factor ({f}) vanishes under substitution")
                factors[nf] = factors.get(nf, 0) + p
            m = CoeffSum.monomial(v, dict(syms))
            for nf, p in factors.items():
                m = m * CoeffSum.monomial(1, factors={nf: p})
            out = out + m
        return out

    # numerics -----------------------------------------------------------
    def evaluate(self, values: dict[str, float]) -> complex:
        return sum((complex(v) * _mono_value(k, values) for k, v in self.terms.items()), 0j)

    def _scale_at(self, values) -> float:
        return sum(abs(complex(v)) * abs(_mono_value(k, values)) for k, v in self.terms.items())

    def is_zero(self) -> bool:
        if not self.terms:
            return True
        if len(self.terms) == 1:
            return False
        for pt in POINTS.points:
            if abs(self.evaluate(pt)) > REL_TOL * self._scale_at(pt):
                return False
        return True

    def equals(self, other: CoeffSum) -> bool:
        return (self - other).is_zero()

    def is_constant(self) -> bool:
        return all(not s and not f for s, f in self.terms)

    def __repr__(self) -> str:
        from .text import render_coeff

        return f"CoeffSum({render_coeff(self)})"
