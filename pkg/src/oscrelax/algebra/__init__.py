"""Exact symbolic calculus on bosonic ladder-operator polynomials."""

from .averaging import (
    CLOSE_FREQUENCIES,
    NONRESONANT,
    ResonanceDecl,
    average,
    first_order,
    integrate_phase,
    interference,
    is_slow,
    region_tags,
    second_order,
    spectral_region,
)
from .coeff import CoeffSum, QQi, set_seed
from .freq import FreqExpr, W, WC, WR, ZERO, parse_freq
from .models import bath_coupling, oscillator_coupling
from .poly import (
    A,
    C,
    ModeId,
    NormalTerm,
    OperatorPoly,
    R,
    adjoint,
    commutator,
    is_hermitian,
    multiply,
    normal_order,
)
from .text import parse_coeff, parse_poly, render_coeff, render_poly

__all__ = [
    "A", "C", "CLOSE_FREQUENCIES", "CoeffSum", "FreqExpr", "ModeId", "NONRESONANT",
    "NormalTerm", "OperatorPoly", "QQi", "R", "ResonanceDecl", "W", "WC", "WR", "ZERO",
    "adjoint", "average", "bath_coupling", "commutator", "first_order", "integrate_phase",
    "interference", "is_hermitian", "is_slow", "multiply", "normal_order", "oscillator_coupling",
    "parse_coeff", "parse_freq", "parse_poly", "region_tags", "render_coeff", "render_poly",
    "second_order", "set_seed", "spectral_region",
]
