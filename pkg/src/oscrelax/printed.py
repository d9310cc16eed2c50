"""Closed forms exactly as printed in the source derivation, typed in by hand.

These are reference objects for comparison only; the derivation engine never
uses them.
"""

from __future__ import annotations

from .algebra.coeff import CoeffSum, QQi
from .algebra.freq import FreqExpr, W, WC, WR, ZERO
from .algebra.poly import A, C, OperatorPoly, R

WC_PLUS_WR = WC + WR
WC_MINUS_WR = WC - WR
W_MINUS_WR = W - WR


def _mono(q, syms, factors=None) -> CoeffSum:
    return CoeffSum.monomial(q if isinstance(q, QQi) else QQi.make(q), syms, factors or {})


def _term(coeff, ops, phase) -> OperatorPoly:
    return OperatorPoly.term(coeff, ops, phase)


MINUS_I = QQi.make(0, -1)
PLUS_I = QQi.make(0, 1)


def generator_nonresonant() -> OperatorPoly:
    """Four-term first-order generator; ``1/i = -i``."""
    g_h = {"g": 1, "hbar": -1}
    return (
        _term(_mono(MINUS_I, g_h, {WC_PLUS_WR: -1}), [(C, False), (R, False)], -WC_PLUS_WR)
        + _term(_mono(PLUS_I, g_h, {WC_PLUS_WR: -1}), [(C, True), (R, True)], WC_PLUS_WR)
        + _term(_mono(MINUS_I, g_h, {WC_MINUS_WR: -1}), [(C, False), (R, True)], -WC_MINUS_WR)
        + _term(_mono(PLUS_I, g_h, {WC_MINUS_WR: -1}), [(C, True), (R, False)], WC_MINUS_WR)
    )


def generator_resonant() -> OperatorPoly:
    """Resonant-branch generator with the ``1/(i 2 hbar wc)`` denominator."""
    g_h = {"g": 1, "hbar": -1}
    half = QQi.make(0, -0.5)
    return (
        _term(_mono(half, g_h, {WC: -1}), [(C, False), (R, False)], -WC_PLUS_WR)
        + _term(_mono(-half, g_h, {WC: -1}), [(C, True), (R, True)], WC_PLUS_WR)
    )


def shift_c() -> CoeffSum:
    """``(g^2/hbar) (1/(wc+wr) + 1/(wc-wr))``."""
    s = {"g": 2, "hbar": -1}
    return _mono(1, s, {WC_PLUS_WR: -1}) + _mono(1, s, {WC_MINUS_WR: -1})


def shift_r() -> CoeffSum:
    """``(g^2/hbar) (1/(wr+wc) + 1/(wr-wc))``."""
    s = {"g": 2, "hbar": -1}
    return _mono(1, s, {WC_PLUS_WR: -1}) + _mono(1, s, {WR - WC: -1})


def constant_shift() -> CoeffSum:
    return _mono(-1, {"g": 2, "hbar": -1}, {WC_PLUS_WR: -1})


def second_order_nonresonant(swapped: bool = False) -> OperatorPoly:
    """``-c+c Pi_c - r+r Pi_r - g^2/(hbar(wc+wr))``; ``swapped`` exchanges the two labels."""
    pc, pr = (shift_r(), shift_c()) if swapped else (shift_c(), shift_r())
    return (
        _term(-pc, [(C, True), (C, False)], ZERO)
        + _term(-pr, [(R, True), (R, False)], ZERO)
        + OperatorPoly.scalar(constant_shift())
    )


def shift_resonant() -> CoeffSum:
    """``Pi(wc) = g^2 / (2 hbar wc)``."""
    return _mono(QQi.make(0.5), {"g": 2, "hbar": -1}, {WC: -1})


def second_order_resonant() -> OperatorPoly:
    pi = shift_resonant()
    return (
        _term(-pi, [(C, True), (C, False)], ZERO)
        + _term(-pi, [(R, True), (R, False)], ZERO)
        + OperatorPoly.scalar(-pi)
    )


def first_order_resonant() -> OperatorPoly:
    """``g (c r+ e^{-i(wc-wr)t} + c+ r e^{i(wc-wr)t})``."""
    g = _mono(1, {"g": 1})
    return (
        _term(g, [(C, False), (R, True)], -WC_MINUS_WR)
        + _term(g, [(C, True), (R, False)], WC_MINUS_WR)
    )


def bath_first_order() -> OperatorPoly:
    """``gamma_c (c a+ e^{-i(wc-w)t} + c+ a e^{i(wc-w)t})`` over the region near wc."""
    gc = _mono(1, {"gamma_c": 1})
    return (
        _term(gc, [(C, False), (A, True)], -(WC - W))
        + _term(gc, [(C, True), (A, False)], WC - W)
    )


def interference_coefficient() -> CoeffSum:
    """``-g gamma_c / (2 hbar wc)``."""
    return _mono(QQi.make(-0.5), {"g": 1, "gamma_c": 1, "hbar": -1}, {WC: -1})


def interference_channel() -> OperatorPoly:
    """``-g gamma_c/(2 hbar wc) (r+ a e^{-i(w-wr)t} + r a+ e^{i(w-wr)t})`` over the region near wr."""
    k = interference_coefficient()
    return (
        _term(k, [(R, True), (A, False)], -W_MINUS_WR)
        + _term(k, [(R, False), (A, True)], W_MINUS_WR)
    )


def region(label: str) -> FreqExpr:
    return {"wc": WC, "wr": WR}[label]
