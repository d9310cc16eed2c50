"""Effective parameters of the two-oscillator problem and the end-to-end
symbolic derivation of its effective Hamiltonian.

Closed-form helpers (:func:`compute_shifts`, :func:`compute_rates`) use the
printed formulas verbatim.  :func:`derive_effective` runs the averaging engine
from the bare couplings and tabulates its exact output against those printed
forms; the two are never merged.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from . import printed
from .algebra import (
    A, C, NONRESONANT, R, OperatorPoly, ResonanceDecl, bath_coupling, first_order,
    interference, oscillator_coupling, region_tags, render_coeff, render_poly, second_order,
)
from .algebra.freq import WC, WR, W
from .errors import NearResonanceError

EPS_RES = 1e-3
# |g| above this fraction of hbar*min(wc, wr, |wc-wr|) triggers the perturbative-regime warning
PERTURBATIVE_FRACTION = 0.25
# 5x5 grid used to tabulate the interference coefficient against its printed value
GRID_OMEGA_C = (1.0, 1.5, 2.0, 2.5, 3.0)
GRID_OMEGA_R = (0.1, 0.25, 0.4, 0.55, 0.7)


@dataclass(frozen=True)
class SystemSpec:
    """Physical inputs.

    Bath occupation ``n(w)`` is given either as the two values ``n_wc = n(wc)``
    and ``n_wr = n(wr)`` (a two-plateau spectrum split at the midpoint of the
    two frequencies) or as a table of ``(w, n)`` pairs, linearly interpolated.
    """

    omega_c: float = 1.0
    omega_r: float = 0.5
    g: float = 0.1
    gamma_c: float = 0.05
    hbar: float = 1.0
    n_wc: float = 0.0
    n_wr: float = 0.0
    n_table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (self.omega_c > 0 and self.omega_r > 0):
            raise ValueError("frequencies must be positive")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        if self.n_wc < 0 or self.n_wr < 0:
            raise ValueError("bath occupations must be non-negative")
        if self.n_table is not None:
            ws = [w for w, _ in self.n_table]
            if any(n < 0 for _, n in self.n_table):
                raise ValueError("bath occupations must be non-negative")
            if len(ws) < 2 or any(b <= a for a, b in zip(ws, ws[1:])):
                raise ValueError("n_table frequencies must be strictly increasing (>= 2 rows)")
        scale = self.hbar * min(self.omega_c, self.omega_r, abs(self.omega_c - self.omega_r) or np.inf)
        if abs(self.g) > PERTURBATIVE_FRACTION * scale:
            warnings.warn(
                f"|g| = {abs(self.g):g} is not small against hbar*min(wc, wr, |wc-wr|) = {scale:g}",
                stacklevel=3,
            )

    def occupation(self, omega):
        """Bath photon density ``n(w)``, vectorized."""
        omega = np.asarray(omega, dtype=float)
        if self.n_table is not None:
            ws, ns = np.array(self.n_table, dtype=float).T
            return np.interp(omega, ws, ns)
        split = 0.5 * (self.omega_c + self.omega_r)
        hi, lo = (self.n_wc, self.n_wr) if self.omega_c >= self.omega_r else (self.n_wr, self.n_wc)
        return np.where(omega >= split, hi, lo)

    def symbol_values(self, omega: float | None = None) -> dict[str, float]:
        """Numeric assignment of every engine symbol; the bath frequency defaults to wr."""
        return {
            "g": self.g, "gamma_c": self.gamma_c, "hbar": self.hbar,
            "wc": self.omega_c, "wr": self.omega_r, "w": self.omega_r if omega is None else omega,
        }


class Shifts(NamedTuple):
    pi_c: float
    pi_r: float
    branch: str


class Rates(NamedTuple):
    gamma_bar_c: float
    gamma_bar_r: float
    n_bar_c: float
    n_bar_r: float


@dataclass(frozen=True)
class EffectiveParams:
    pi_c: float
    pi_r: float
    omega_tilde_c: float
    omega_tilde_r: float
    gamma_bar_c: float
    gamma_bar_r: float
    n_bar_c: float
    n_bar_r: float
    branch: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LindbladChannel:
    """Thermal dissipator on one mode: downward rate ``rate*(n+1)``, upward ``rate*n``."""

    mode: str
    rate: float
    occupation: float

    def __post_init__(self):
        if self.mode not in ("c", "r"):
            raise ValueError(f"channel mode must be 'c' or 'r', got {self.mode!r}")
        if self.rate < 0 or self.occupation < 0:
            raise ValueError("channel rate and occupation must be non-negative")


def classify_branch(spec: SystemSpec, eps_res: float = EPS_RES) -> str:
    detuning = abs(spec.omega_c - spec.omega_r)
    if detuning < eps_res * spec.omega_c:
        return "resonant"
    if detuning >= 10 * eps_res * spec.omega_c:
        return "nonresonant"
    raise NearResonanceError(
        f"|wc - wr| = {detuning:g} lies between {eps_res:g}*wc and {10 * eps_res:g}*wc; "
        "choose branch='resonant' or branch='nonresonant' explicitly"
    )


def compute_shifts(spec: SystemSpec, branch: str | None = None, eps_res: float = EPS_RES) -> Shifts:
    """Second-order frequency shifts as printed.

    The resonant branch returns the single shift ``g^2/(2 hbar wc)`` in both slots.
    """
    branch = branch or classify_branch(spec, eps_res)
    g2 = spec.g ** 2 / spec.hbar
    wc, wr = spec.omega_c, spec.omega_r
    if branch == "resonant":
        pi = g2 / (2 * wc)
        return Shifts(pi, pi, branch)
    if branch != "nonresonant":
        raise ValueError(f"unknown branch {branch!r}")
    if wc == wr:
        raise NearResonanceError("non-resonant shifts diverge at wc == wr")
    return Shifts(g2 * (1 / (wc + wr) + 1 / (wc - wr)), g2 * (1 / (wr + wc) + 1 / (wr - wc)), branch)


def compute_rates(spec: SystemSpec, convention: float = 1.0) -> Rates:
    """Dimensionless rates and occupations in units of ``tbar = wc * t``.

    ``convention`` multiplies both rates; it stands for the unspecified
    renormalization of the bath coupling constants and defaults to 1.
    """
    wc, h = spec.omega_c, spec.hbar
    gamma_bar_c = convention * 2 * math.pi * spec.gamma_c ** 2 / (h * wc ** 2)
    gamma_bar_r = convention * math.pi * spec.g ** 2 * spec.gamma_c ** 2 / (2 * h ** 2 * wc ** 4)
    n_c, n_r = spec.occupation([wc, spec.omega_r])
    return Rates(gamma_bar_c, gamma_bar_r, float(n_c) / wc, float(n_r) / wc)


def effective_params(spec: SystemSpec, branch: str | None = None, convention: float = 1.0,
                     eps_res: float = EPS_RES) -> EffectiveParams:
    sh = compute_shifts(spec, branch, eps_res)
    rt = compute_rates(spec, convention)
    return EffectiveParams(
        pi_c=sh.pi_c, pi_r=sh.pi_r,
        omega_tilde_c=spec.omega_c - sh.pi_c / spec.hbar,
        omega_tilde_r=spec.omega_r - sh.pi_r / spec.hbar,
        gamma_bar_c=rt.gamma_bar_c, gamma_bar_r=rt.gamma_bar_r,
        n_bar_c=rt.n_bar_c, n_bar_r=rt.n_bar_r, branch=sh.branch,
    )


def build_channels(spec: SystemSpec, convention: float = 1.0,
                   eps_res: float = EPS_RES) -> tuple[LindbladChannel, LindbladChannel]:
    if classify_branch(spec, eps_res) != "nonresonant":
        raise NearResonanceError("Lindblad channels are defined for the non-resonant branch only")
    rt = compute_rates(spec, convention)
    return (LindbladChannel("c", rt.gamma_bar_c, rt.n_bar_c),
            LindbladChannel("r", rt.gamma_bar_r, rt.n_bar_r))


# --- symbolic derivation ----------------------------------------------------

CT_C = ((C, True), (C, False))
RT_R = ((R, True), (R, False))
R_AT = ((R, False), (A, True))
RT_A = ((R, True), (A, False))


@dataclass
class DerivationReport:
    decl: ResonanceDecl
    spec: SystemSpec
    v10: OperatorPoly
    s10: OperatorPoly
    s01: OperatorPoly
    v2_cr: OperatorPoly
    s2_cr: OperatorPoly
    vc1: OperatorPoly
    vr2: OperatorPoly
    regions: list = field(default_factory=list)
    comparisons: dict = field(default_factory=dict)

    @property
    def effective(self) -> OperatorPoly:
        """Total effective coupling: bath channel + interference channel + second-order shifts."""
        return self.vc1 + self.vr2 + self.v2_cr + self.v10

    def to_dict(self) -> dict:
        return {
            "branch": "resonant" if self.decl.is_resonant else "nonresonant",
            "resonance_pairs": sorted(sorted(p) for p in self.decl.pairs),
            "spec": {k: v for k, v in asdict(self.spec).items()},
            "operators": {
                "S10": render_poly(self.s10),
                "S01": render_poly(self.s01),
                "V10": render_poly(self.v10),
                "V2_cr": render_poly(self.v2_cr),
                "S2_cr": render_poly(self.s2_cr),
                "Vc1": render_poly(self.vc1),
                "Vr2": render_poly(self.vr2),
            },
            "regions": self.regions,
            "comparisons": self.comparisons,
        }

    def render_text(self) -> str:
        blocks = []
        for name, poly in self.to_dict()["operators"].items():
            blocks.append(f"## {name}\n{poly}\n")
        blocks.append("## regions")
        for r in self.regions:
            blocks.append(f"{r['operator']}: {r['term']}  ->  ({r['region']})")
        return "\n".join(blocks) + "\n"


def _number_coeffs(v2: OperatorPoly):
    from .algebra.freq import ZERO

    return v2.coeff(CT_C, ZERO), v2.coeff(RT_R, ZERO), v2.coeff((), ZERO)


def _complex_pair(z: complex) -> list[float]:
    return [z.real, z.imag]


def interference_ratio_grid() -> dict:
    """Engine / printed interference coefficient at ``w = wr`` over a fixed 5x5 grid."""
    vr2 = interference_poly(NONRESONANT)
    engine = vr2.coeff(R_AT, W - WR)
    ref = printed.interference_coefficient()
    rows = []
    for wc in GRID_OMEGA_C:
        row = []
        for wr in GRID_OMEGA_R:
            vals = {"g": 1.0, "gamma_c": 1.0, "hbar": 1.0, "wc": wc, "wr": wr, "w": wr}
            row.append((engine.evaluate(vals) / ref.evaluate(vals)).real)
        rows.append(row)
    return {"omega_c": list(GRID_OMEGA_C), "omega_r": list(GRID_OMEGA_R), "ratio": rows}


def interference_poly(decl: ResonanceDecl = NONRESONANT) -> OperatorPoly:
    vcr, vc = oscillator_coupling(), bath_coupling()
    v10, s10 = first_order(vcr, decl)
    v01, s01 = first_order(vc, decl)
    return interference(s10, s01, vc, vcr, v01, v10, decl)


def derive_effective(spec: SystemSpec | None = None, decl: ResonanceDecl = NONRESONANT) -> DerivationReport:
    """Run the averaging engine end to end and compare against the printed forms."""
    spec = spec or SystemSpec()
    vcr = oscillator_coupling() if spec.g != 0 else OperatorPoly()
    vc = bath_coupling() if spec.gamma_c != 0 else OperatorPoly()

    v10, s10 = first_order(vcr, decl)
    v01, s01 = first_order(vc, decl)
    v2, s2 = second_order(vcr, s10, v10, decl)
    vr2 = interference(s10, s01, vc, vcr, v01, v10, decl)

    regions = []
    for name, poly in (("Vc1", v01), ("Vr2", vr2)):
        for term, centre in region_tags(poly, decl):
            regions.append({"operator": name, "term": render_poly(OperatorPoly.from_terms([term])),
                            "region": str(centre)})

    report = DerivationReport(decl, spec, v10, s10, s01, v2, s2, v01, vr2, regions)
    report.comparisons = _compare(report)
    return report


def _compare(rep: DerivationReport) -> dict:
    spec, decl = rep.spec, rep.decl
    vals = spec.symbol_values()
    out: dict = {}
    resonant = decl.is_resonant
    on_res = {"wr": WC}

    if spec.g != 0:
        if resonant:
            ref_s1 = printed.generator_resonant()
            out["S10"] = {"printed_match": rep.s10.subs(on_res).equals(ref_s1.subs(on_res)),
                          "evaluated_at": "wr = wc"}
            out["V10"] = {"printed_match": rep.v10.equals(printed.first_order_resonant())}
            ref_v2 = printed.second_order_resonant()
            out["V2_cr"] = {"printed_match": rep.v2_cr.subs(on_res).equals(ref_v2),
                            "evaluated_at": "wr = wc"}
        else:
            out["S10"] = {"printed_match": rep.s10.equals(printed.generator_nonresonant())}
            n_c, n_r, const = _number_coeffs(rep.v2_cr)
            ref_const = printed.constant_shift()
            as_printed = printed.second_order_nonresonant(swapped=False)
            as_swapped = printed.second_order_nonresonant(swapped=True)
            match_p = rep.v2_cr.equals(as_printed)
            match_s = rep.v2_cr.equals(as_swapped)
            out["V2_cr"] = {
                "constant_match": const.equals(ref_const),
                "constant_engine": const.evaluate(vals).real,
                "constant_printed": ref_const.evaluate(vals).real,
                "matches_printed_assignment": match_p,
                "matches_swapped_assignment": match_s,
                "assignment": "printed" if match_p else ("swapped" if match_s else "neither"),
                "ct_c_engine": render_coeff(n_c),
                "rt_r_engine": render_coeff(n_r),
                "ct_c_value": n_c.evaluate(vals).real,
                "rt_r_value": n_r.evaluate(vals).real,
                "minus_pi_c_printed": -printed.shift_c().evaluate(vals).real,
                "minus_pi_r_printed": -printed.shift_r().evaluate(vals).real,
                "engine_shift_c": n_c.evaluate(vals).real / spec.hbar,
                "engine_shift_r": n_r.evaluate(vals).real / spec.hbar,
            } if spec.omega_c != spec.omega_r else {"note": "wc == wr; non-resonant shifts diverge"}

    if spec.gamma_c != 0:
        out["Vc1"] = {"printed_match": rep.vc1.equals(printed.bath_first_order())}
        if spec.g != 0 and not resonant:
            engine = rep.vr2.coeff(R_AT, W - WR)
            ref = printed.interference_coefficient()
            e, p = engine.evaluate(vals), ref.evaluate(vals)
            out["Vr2"] = {
                "present": not engine.is_zero(),
                "engine_coefficient": render_coeff(engine),
                "printed_coefficient": render_coeff(ref),
                "engine_value_at_w_eq_wr": _complex_pair(e),
                "printed_value": _complex_pair(p),
                "ratio_engine_over_printed": (e / p).real,
                "grid": interference_ratio_grid(),
            }
    return out


def engine_shifts(spec: SystemSpec) -> tuple[float, float]:
    """Frequency shifts ``(s_c, s_r)`` of c and r from the engine's second-order result."""
    vcr = oscillator_coupling()
    v10, s10 = first_order(vcr)
    v2, _ = second_order(vcr, s10, v10)
    n_c, n_r, _ = _number_coeffs(v2)
    vals = spec.symbol_values()
    return n_c.evaluate(vals).real / spec.hbar, n_r.evaluate(vals).real / spec.hbar


__all__ = [
    "EPS_RES", "DerivationReport", "EffectiveParams", "LindbladChannel", "Rates", "Shifts",
    "SystemSpec", "build_channels", "classify_branch", "compute_rates",
    "compute_shifts", "derive_effective", "effective_params", "engine_shifts",
    "interference_ratio_grid",
]
