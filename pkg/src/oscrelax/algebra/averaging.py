"""Secular averaging and generator extraction for oscillating operator polynomials.

A term ``v * O * exp(i*Omega*t)`` is *slow* when ``Omega`` vanishes, equals
the difference of a declared resonant pair, or has the bath form
``+-(w - w_x)`` with ``w_x`` a positive combination of system frequencies.
Everything else is fast and is removed by a near-identity transformation
with generator ``S`` satisfying ``hbar * dS/dt = -(fast part)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import SecularTermError
from .coeff import CoeffSum, QQi
from .freq import BATH_FREQ, SYSTEM_FREQS, FreqExpr
from .poly import OperatorPoly, commutator

MINUS_HALF_I = QQi.make(0, -0.5)


@dataclass(frozen=True)
class ResonanceDecl:
    """Which phase combinations count as slow during averaging."""

    pairs: frozenset = field(default_factory=frozenset)
    bath_rule: bool = True

    @classmethod
    def resonant(cls, *pairs: tuple[str, str], bath_rule: bool = True) -> ResonanceDecl:
        return cls(frozenset(frozenset(p) for p in pairs), bath_rule)

    @property
    def is_resonant(self) -> bool:
        return bool(self.pairs)


NONRESONANT = ResonanceDecl()
CLOSE_FREQUENCIES = ResonanceDecl.resonant(("wc", "wr"))


def spectral_region(phase: FreqExpr) -> FreqExpr | None:
    """Central frequency ``w_x`` if ``phase == +-(w - w_x)``, else ``None``."""
    s = phase.get(BATH_FREQ)
    if s not in (1, -1):
        return None
    centre = FreqExpr.of(w=1) - phase.scale(s)
    d = centre.as_dict()
    if not d or any(sym not in SYSTEM_FREQS or n < 0 for sym, n in d.items()):
        return None
    return centre


def is_slow(phase: FreqExpr, decl: ResonanceDecl = NONRESONANT) -> bool:
    if phase.is_zero():
        return True
    for pair in decl.pairs:
        x, y = sorted(pair)
        diff = FreqExpr.from_dict({x: 1, y: -1})
        if phase == diff or phase == -diff:
            return True
    return decl.bath_rule and spectral_region(phase) is not None


def average(a: OperatorPoly, decl: ResonanceDecl = NONRESONANT) -> OperatorPoly:
    """Keep exactly the slow terms."""
    return a.filter(lambda t: is_slow(t.phase, decl))


def region_tags(a: OperatorPoly, decl: ResonanceDecl = NONRESONANT) -> list[tuple[object, FreqExpr]]:
    """Pairs ``(term, w_x)`` for every bath-rule term of ``a``."""
    out = []
    for t in a.terms():
        if t.phase.is_zero():
            continue
        centre = spectral_region(t.phase) if decl.bath_rule else None
        if centre is not None:
            out.append((t, centre))
    return out


def integrate_phase(a: OperatorPoly, decl: ResonanceDecl = NONRESONANT) -> OperatorPoly:
    """Generator ``S`` with ``hbar * dS/dt = -a``, term by term.

    ``v * O * exp(i*Omega*t)`` maps to ``-v * O * exp(i*Omega*t) / (i*hbar*Omega)``.
    """
    acc = {}
    for t in a.terms():
        if is_slow(t.phase, decl):
            raise SecularTermError(f"slow phase {t.phase} cannot be integrated; average first")
        factor = CoeffSum.monomial(QQi.make(0, 1), {"hbar": -1}, {t.phase: -1})
        acc[(t.ops, t.phase)] = t.coeff * factor
    return OperatorPoly(acc)


def first_order(v: OperatorPoly, decl: ResonanceDecl = NONRESONANT) -> tuple[OperatorPoly, OperatorPoly]:
    """``(V1, S1)``: averaged coupling and the generator that removes the rest."""
    v1 = average(v, decl)
    return v1, integrate_phase(v - v1, decl)


def second_order(v: OperatorPoly, s1: OperatorPoly, v1: OperatorPoly,
                 decl: ResonanceDecl = NONRESONANT) -> tuple[OperatorPoly, OperatorPoly]:
    """Second-order effective coupling ``V2`` and generator ``S2``."""
    c = (commutator(s1, v1) + commutator(s1, v)).scale(MINUS_HALF_I)
    v2 = average(c, decl)
    return v2, integrate_phase(c - v2, decl)


def interference(s10: OperatorPoly, s01: OperatorPoly, vc: OperatorPoly, vcr: OperatorPoly,
                 v01: OperatorPoly, v10: OperatorPoly,
                 decl: ResonanceDecl = NONRESONANT) -> OperatorPoly:
    """Slow part of the mixed-order cross commutators of two first-order generators."""
    c = (commutator(s10, vc) + commutator(s10, v01)
         + commutator(s01, vcr) + commutator(s01, v10)).scale(MINUS_HALF_I)
    return average(c, decl)
