"""Interaction-picture couplings of the two-oscillator + bath problem."""

from __future__ import annotations

from .coeff import CoeffSum
from .freq import W, WC, WR
from .poly import A, C, OperatorPoly, R


def quadrature(mode, freq) -> OperatorPoly:
    """``a exp(-i w t) + a+ exp(i w t)`` for one mode."""
    return OperatorPoly.ladder(mode, False, -freq) + OperatorPoly.ladder(mode, True, freq)


def oscillator_coupling() -> OperatorPoly:
    """``g (c e^{-i wc t} + h.c.)(r e^{-i wr t} + h.c.)``."""
    return (quadrature(C, WC) * quadrature(R, WR)).scale(CoeffSum.symbol("g"))


def bath_coupling() -> OperatorPoly:
    """``gamma_c (c e^{-i wc t} + h.c.)(a_w e^{-i w t} + h.c.)`` for the bath family ``a_w``."""
    return (quadrature(C, WC) * quadrature(A, W)).scale(CoeffSum.symbol("gamma_c"))
