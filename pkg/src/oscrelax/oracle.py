"""Exact moment dynamics of the full quadratic model: two oscillators plus a discretized bath.

Heisenberg equations for ``v = (a_1..a_K, a_1+..a_K+)`` are linear, ``dv/dt = M v``,
so first and second moments propagate exactly through ``U(t) = expm(M t)``.
No secular averaging is involved anywhere in this module; it is the
independent check on the effective theory.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import OptimizeWarning, curve_fit
from scipy.signal import find_peaks

from .errors import FitIllConditioned, RecurrenceHorizonExceeded
from .lindblad import write_csv

HORIZON_FRACTION = 0.8
BAND_MARGIN_LINEWIDTHS = 10.0


@dataclass(frozen=True)
class BathDiscretization:
    """``n_modes`` equally spaced bath frequencies on ``[omega_min, omega_max]`` (cell midpoints)."""

    n_modes: int = 400
    omega_min: float = 0.125
    omega_max: float = 2.0
    coupling: float = 0.0  # flat per-mode gamma_eff

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("bath needs at least one mode")
        if not 0 < self.omega_min < self.omega_max:
            raise ValueError("bath band must satisfy 0 < omega_min < omega_max")

    @classmethod
    def default_band(cls, omega_c: float, omega_r: float, n_modes: int = 400,
                     coupling: float = 0.0) -> BathDiscretization:
        """Band ``[omega_r / 4, 2 omega_c]``."""
        return cls(n_modes, omega_r / 4, 2 * omega_c, coupling)

    @property
    def spacing(self) -> float:
        return (self.omega_max - self.omega_min) / self.n_modes

    @property
    def frequencies(self) -> np.ndarray:
        return self.omega_min + self.spacing * (np.arange(self.n_modes) + 0.5)

    @property
    def recurrence_time(self) -> float:
        return 2 * math.pi / self.spacing

    @property
    def horizon(self) -> float:
        return HORIZON_FRACTION * self.recurrence_time

    def golden_rule_rate(self, hbar: float = 1.0) -> float:
        """Decay rate of a mode coupled through ``gamma (x)(a + a+)``: ``2 pi gamma^2 / (hbar^2 d_omega)``."""
        return 2 * math.pi * (self.coupling / hbar) ** 2 / self.spacing

    def with_rate(self, rate: float, hbar: float = 1.0) -> BathDiscretization:
        """Copy whose flat coupling reproduces ``rate`` through the golden rule."""
        if rate < 0:
            raise ValueError("rate must be non-negative")
        gamma = hbar * math.sqrt(rate * self.spacing / (2 * math.pi))
        return BathDiscretization(self.n_modes, self.omega_min, self.omega_max, gamma)

    def check_band(self, lines: Sequence[tuple[float, float]]) -> None:
        """Every ``(omega, linewidth)`` must sit at least 10 linewidths inside the band."""
        for w, width in lines:
            margin = BAND_MARGIN_LINEWIDTHS * width
            if not (self.omega_min + margin <= w <= self.omega_max - margin):
                raise ValueError(f"frequency {w:g} closer than {BAND_MARGIN_LINEWIDTHS:g} "
                                 f"linewidths ({margin:g}) to the bath band edge")


@dataclass(frozen=True)
class QuadraticModel:
    """``H/hbar = sum w_k a_k+ a_k + sum_{j<k} G_jk (a_j + a_j+)(a_k + a_k+)``."""

    labels: tuple[str, ...]
    omegas: np.ndarray
    coupling: np.ndarray  # G, frequency units
    bath: BathDiscretization | None = None

    def __post_init__(self):
        g = np.asarray(self.coupling, float)
        k = len(self.labels)
        if g.shape != (k, k) or len(self.omegas) != k:
            raise ValueError("labels, omegas and coupling sizes disagree")
        if not np.allclose(g, g.T, atol=0, rtol=0):
            raise ValueError("coupling matrix must be symmetric")
        if np.any(np.diag(g) != 0):
            raise ValueError("coupling matrix must have zero diagonal")
        if np.any(np.asarray(self.omegas) <= 0):
            raise ValueError("mode frequencies must be positive")

    @property
    def n_modes(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    @classmethod
    def two_oscillators(cls, omega_c: float, omega_r: float, g: float,
                        bath: BathDiscretization | None = None, hbar: float = 1.0) -> QuadraticModel:
        """``c`` and ``r`` coupled by ``g``; an optional bath couples to ``c`` only."""
        n_bath = bath.n_modes if bath is not None else 0
        k = 2 + n_bath
        omegas = np.empty(k)
        omegas[:2] = omega_c, omega_r
        G = np.zeros((k, k))
        G[0, 1] = G[1, 0] = g / hbar
        labels = ("c", "r")
        if bath is not None:
            omegas[2:] = bath.frequencies
            G[0, 2:] = G[2:, 0] = bath.coupling / hbar
            labels += tuple(f"a{j}" for j in range(n_bath))
        return cls(labels, omegas, G, bath)


def heisenberg_matrix(model: QuadraticModel) -> np.ndarray:
    """``M`` with ``dv/dt = M v`` for ``v = (a, a+)``."""
    k = model.n_modes
    w = np.diag(np.asarray(model.omegas, float))
    G = np.asarray(model.coupling, float)
    M = np.empty((2 * k, 2 * k), complex)
    M[:k, :k] = -1j * (w + G)
    M[:k, k:] = -1j * G
    M[k:, :k] = 1j * G
    M[k:, k:] = 1j * (w + G)
    return M


def symplectic_form(k: int) -> np.ndarray:
    """Commutators ``[v_p, v_q]`` for ``v = (a, a+)``."""
    J = np.zeros((2 * k, 2 * k))
    J[:k, k:] = np.eye(k)
    J[k:, :k] = -np.eye(k)
    return J


def normal_modes(model: QuadraticModel) -> np.ndarray:
    """Normal-mode frequencies, ascending (positive imaginary parts of ``eig(M)``)."""
    lam = np.linalg.eigvals(heisenberg_matrix(model))
    return np.sort(lam.imag[lam.imag > 0])


def closed_form_normal_modes(omega_c: float, omega_r: float, g: float) -> tuple[float, float]:
    """``(Omega_-, Omega_+)`` of two oscillators coupled through their positions."""
    s = omega_c ** 2 + omega_r ** 2
    d = math.sqrt((omega_c ** 2 - omega_r ** 2) ** 2 + 16 * g ** 2 * omega_c * omega_r)
    return math.sqrt(0.5 * (s - d)), math.sqrt(0.5 * (s + d))


@dataclass
class MomentState:
    """Means ``<v>`` and the normal / anomalous second moments of ``K`` modes."""

    mean: np.ndarray  # length 2K, (<a>, <a+>)
    N: np.ndarray  # N_jk = <a_j+ a_k>
    M: np.ndarray  # M_jk = <a_j a_k>
    t: float = 0.0

    @classmethod
    def vacuum(cls, k: int) -> MomentState:
        return cls(np.zeros(2 * k, complex), np.zeros((k, k), complex), np.zeros((k, k), complex))

    @property
    def n_modes(self) -> int:
        return len(self.N)

    def occupations(self) -> np.ndarray:
        return np.diagonal(self.N).real.copy()

    def correlation(self) -> np.ndarray:
        """``C_pq = <v_p v_q>``."""
        k = self.n_modes
        C = np.empty((2 * k, 2 * k), complex)
        C[:k, :k] = self.M
        C[:k, k:] = np.eye(k) + self.N.T
        C[k:, :k] = self.N
        C[k:, k:] = self.M.conj()
        return C

    @classmethod
    def from_correlation(cls, C: np.ndarray, mean: np.ndarray, t: float = 0.0) -> MomentState:
        k = len(C) // 2
        return cls(mean.copy(), C[k:, :k].copy(), C[:k, :k].copy(), t)

    def is_physical(self, tol: float = 1e-9) -> bool:
        """Robertson-Schroedinger condition ``cov + J/2 >= 0`` in the ``(a, a+)`` basis."""
        k = self.n_modes
        perm = np.r_[np.arange(k, 2 * k), np.arange(k)]
        dv = self.correlation() - np.outer(self.mean, self.mean)
        # <dv_p dv_q+> is the PSD Gram matrix of the state
        gram = dv[:, perm]
        gram = 0.5 * (gram + gram.conj().T)
        return bool(np.linalg.eigvalsh(gram)[0] >= -tol)


def thermal_bath_init(model: QuadraticModel, occupation: Callable[[np.ndarray], np.ndarray] | float,
                      system: dict[str, float] | None = None) -> MomentState:
    """Diagonal thermal moments: bath mode ``k`` at ``n(omega_k)``, system modes as requested."""
    state = MomentState.vacuum(model.n_modes)
    n = np.zeros(model.n_modes)
    bath_idx = [j for j, lab in enumerate(model.labels) if lab not in ("c", "r")]
    if bath_idx:
        w = np.asarray(model.omegas)[bath_idx]
        occ = occupation(w) if callable(occupation) else np.full(len(w), float(occupation))
        occ = np.asarray(occ, float)
        if np.any(occ < 0):
            raise ValueError("bath occupation must be non-negative")
        n[bath_idx] = occ
    for lab, val in (system or {}).items():
        if val < 0:
            raise ValueError("occupations must be non-negative")
        n[model.index(lab)] = val
    state.N[:] = np.diag(n)
    return state


def two_plateau(split: float, low: float, high: float) -> Callable[[np.ndarray], np.ndarray]:
    """``n(omega) = low`` below ``split`` and ``high`` above it."""
    return lambda w: np.where(np.asarray(w) < split, low, high)


def _check_horizon(model: QuadraticModel, t_final: float) -> None:
    if model.bath is not None and t_final > model.bath.horizon:
        raise RecurrenceHorizonExceeded(
            f"T = {t_final:g} exceeds {HORIZON_FRACTION:g} of the recurrence time "
            f"{model.bath.recurrence_time:g}; refine the bath spacing")


def _grid(t_final: float, dt: float) -> tuple[int, float]:
    if t_final < 0 or dt <= 0:
        raise ValueError("need t_final >= 0 and dt > 0")
    n = 0 if t_final == 0 else math.ceil(t_final / dt - 1e-9)
    return n, (t_final / n if n else dt)


def evolve_moments(state: MomentState, model: QuadraticModel, t_final: float, dt: float,
                   sample_every: int = 1) -> list[MomentState]:
    """Full moment trajectory by congruence, ``C(t) = U C(0) U^T``."""
    _check_horizon(model, t_final)
    n, h = _grid(t_final, dt)
    U1 = expm(heisenberg_matrix(model) * h)
    C0, m0 = state.correlation(), state.mean
    U = np.eye(len(C0), dtype=complex)
    out = [MomentState.from_correlation(C0, m0, state.t)]
    for step in range(1, n + 1):
        U = U1 @ U
        if step % sample_every == 0 or step == n:
            out.append(MomentState.from_correlation(U @ C0 @ U.T, U @ m0, state.t + step * h))
    return out


@dataclass
class OccupationSeries:
    t: np.ndarray
    labels: tuple[str, ...]
    occupations: np.ndarray  # (n_samples, n_labels)
    symplectic_error: float = 0.0

    def column(self, label: str) -> np.ndarray:
        return self.occupations[:, self.labels.index(label)]

    def to_csv(self, path) -> None:
        header = ("t",) + tuple(f"n_{lab}" for lab in self.labels)
        write_csv(path, header, (np.r_[t, row] for t, row in zip(self.t, self.occupations)))


def _creation_row(row: np.ndarray) -> np.ndarray:
    """Coefficients of ``b+`` in ``v`` given those of ``b``."""
    k = len(row) // 2
    return np.conj(np.r_[row[k:], row[:k]])


def normal_mode_rows(model: QuadraticModel) -> tuple[np.ndarray, np.ndarray]:
    """Annihilators of the normal modes as rows over ``v``, with ascending frequencies.

    Row ``w`` is a left eigenvector of ``M`` (``w M = -i Omega w``), scaled so that
    ``[b, b+] = 1``.
    """
    k = model.n_modes
    lam, vl = np.linalg.eig(heisenberg_matrix(model).T)
    pick = np.where(lam.imag < 0)[0]
    pick = pick[np.argsort(-lam.imag[pick])]
    J = symplectic_form(k)
    rows = []
    for j in pick:
        w = vl[:, j]
        norm = w @ J @ _creation_row(w)
        if norm.real <= 0:
            raise ValueError("normal mode with non-positive symplectic norm")
        rows.append(w / np.sqrt(norm.real))
    return np.array(rows), -lam.imag[pick]


def dressed_state(model: QuadraticModel, system: QuadraticModel, occupations: Sequence[float],
                  bath_occupation: Callable[[np.ndarray], np.ndarray] | float = 0.0) -> MomentState:
    """Thermal state of the *system's* normal modes (ascending frequency) times a thermal bath.

    ``system`` must be the first ``system.n_modes`` modes of ``model`` without the bath.
    """
    ks, k = system.n_modes, model.n_modes
    rows, _ = normal_mode_rows(system)
    T = np.vstack([rows, np.array([_creation_row(w) for w in rows])])  # u = T v_system
    Cu = np.zeros((2 * ks, 2 * ks), complex)
    for j, n in enumerate(occupations):
        if n < 0:
            raise ValueError("occupations must be non-negative")
        Cu[j, ks + j] = n + 1  # <b b+>
        Cu[ks + j, j] = n  # <b+ b>
    Ti = np.linalg.inv(T)
    state = thermal_bath_init(model, bath_occupation)
    C = state.correlation()
    sys_idx = np.r_[np.arange(ks), k + np.arange(ks)]
    C[np.ix_(sys_idx, sys_idx)] = Ti @ Cu @ Ti.T
    return MomentState.from_correlation(C, state.mean)


def embed_row(row: np.ndarray, ks: int, k: int) -> np.ndarray:
    """Pad a row over a ``ks``-mode ``v`` to ``k`` modes (extra modes get zero weight)."""
    out = np.zeros(2 * k, complex)
    out[:ks] = row[:ks]
    out[k:k + ks] = row[ks:]
    return out


def track_occupations(state: MomentState, model: QuadraticModel, t_final: float, dt: float,
                      labels: Sequence[str] = ("c", "r"),
                      extra: dict[str, np.ndarray] | None = None) -> OccupationSeries:
    """``<b+ b>`` for selected modes only, propagating just their rows of ``U(t)``.

    ``labels`` pick bare modes; ``extra`` maps names to annihilator rows over ``v``
    (e.g. normal modes).  Cost per step is ``O(n_obs K^2)`` rather than the
    ``O(K^3)`` congruence.
    """
    _check_horizon(model, t_final)
    n, h = _grid(t_final, dt)
    k = model.n_modes
    U1 = expm(heisenberg_matrix(model) * h)
    ann = []
    for lab in labels:
        w = np.zeros(2 * k, complex)
        w[model.index(lab)] = 1.0
        ann.append(w)
    names = tuple(labels) + tuple(extra or {})
    ann += list((extra or {}).values())
    rows = np.array([r for w in ann for r in (w, _creation_row(w))])
    C0 = state.correlation()
    occ = np.empty((n + 1, len(names)))

    def measure(step: int) -> None:
        occ[step] = np.einsum("pq,pq->p", rows[1::2] @ C0, rows[0::2]).real

    measure(0)
    for step in range(1, n + 1):
        rows = rows @ U1
        measure(step)
    # [b, b+] = 1 must survive the propagation
    comm = np.einsum("pq,pq->p", rows[0::2] @ symplectic_form(k), rows[1::2])
    err = float(np.abs(comm - 1).max())
    t = state.t + h * np.arange(n + 1)
    return OccupationSeries(t, names, occ, err)


@dataclass
class DecayFit:
    rate: float
    asymptote: float
    amplitude: float
    residual_norm: float
    rate_stderr: float
    n_points: int
    t_start: float = 0.0

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("rate", "asymptote", "amplitude", "residual_norm", "rate_stderr", "n_points",
                 "t_start")}


def envelope_indices(t: np.ndarray, x: np.ndarray, b: float, min_peaks: int = 8,
                     coverage: float = 0.8) -> np.ndarray:
    """Local maxima of ``|x - b|``, or every index when they are too few or too clustered."""
    peaks, _ = find_peaks(np.abs(x - b))
    span = t[-1] - t[0]
    if len(peaks) >= min_peaks and t[peaks[-1]] - t[peaks[0]] >= coverage * span:
        return peaks
    return np.arange(len(t))


def _exp_model(b_fixed):
    if b_fixed is None:
        return lambda s, a, r, c: a * np.exp(-r * s) + c
    return lambda s, a, r: a * np.exp(-r * s) + b_fixed


def fit_decay(t: np.ndarray, x: np.ndarray, asymptote: float | None = None,
              t_start: float = 0.0, iterations: int = 5) -> DecayFit:
    """Fit ``x(t) = A exp(-rate (t - t_start)) + B`` on the envelope of ``x``.

    Fast oscillations riding on the decay are stripped by keeping the local
    maxima of ``|x - B|``, with ``B`` re-estimated from each fit.  Smooth
    series are fitted point by point.  With ``asymptote`` given, ``B`` is held
    fixed.
    """
    t = np.asarray(t, float)
    x = np.asarray(x, float)
    keep = t >= t_start
    t, x = t[keep], x[keep]
    if len(t) < 4:
        raise FitIllConditioned("fewer than 4 samples to fit")
    span = t[-1] - t[0]
    if span <= 0:
        raise FitIllConditioned("zero time span")
    scale = float(np.abs(x).max()) or 1.0
    b = float(asymptote) if asymptote is not None else float(x[-max(len(x) // 10, 1):].mean())
    rate, amp = 1.0 / span, float(x[0] - b)
    for _ in range(iterations if asymptote is None else 1):
        sel = envelope_indices(t, x, b)
        tau, xx = t[sel] - t[0], x[sel]
        p0 = (amp, rate) if asymptote is not None else (amp, rate, b)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", OptimizeWarning)
                popt, cov = curve_fit(_exp_model(asymptote), tau, xx, p0=p0, maxfev=20000)
        except (RuntimeError, ValueError) as exc:
            raise FitIllConditioned(str(exc)) from exc
        amp, rate = float(popt[0]), float(popt[1])
        b_new = b if asymptote is not None else float(popt[2])
        converged = abs(b_new - b) <= 1e-12 * scale
        b = b_new
        if converged:
            break
    if not np.isfinite(rate):
        raise FitIllConditioned("non-finite rate")
    err = math.sqrt(cov[1, 1]) if np.isfinite(cov[1, 1]) and cov[1, 1] >= 0 else math.inf
    res = float(np.linalg.norm(xx - (amp * np.exp(-rate * tau) + b)))
    return DecayFit(rate, b, amp, res, err, len(tau), float(t[0]))


def indirect_rate_estimate(omega_c: float, omega_r: float, g: float, rate_c: float,
                           hbar: float = 1.0) -> float:
    """Golden-rule width of ``r`` borrowed through ``c``: ``rate_c (2 g w_c / (hbar (w_c^2 - w_r^2)))^2``.

    Position-position coupling mixes ``x_c`` into the ``r`` normal mode with this
    amplitude; only a sizing aid for band margins and run lengths.
    """
    if omega_c == omega_r:
        return rate_c
    return rate_c * (2 * g * omega_c / (hbar * (omega_c ** 2 - omega_r ** 2))) ** 2


MODE_COLUMNS = ("c", "r", "c_mode", "r_mode")


@dataclass
class OracleRun:
    """The two oscillators plus a bath on ``c``, prepared in a thermal state of their normal modes.

    ``initial`` holds occupations of the ``c``-like and ``r``-like normal modes of
    the closed pair (equal to the bare modes when ``g = 0``).  The run records the
    bare occupations ``c``, ``r`` and the normal-mode occupations ``c_mode``, ``r_mode``.
    """

    omega_c: float = 1.0
    omega_r: float = 0.5
    g: float = 0.1
    rate_c: float = 0.04  # golden-rule target for the c linewidth
    n_modes: int = 400
    t_final: float | None = None  # default: the recurrence horizon, floored
    dt: float = 0.5
    hbar: float = 1.0
    bath_occupation: Callable | float = 0.0
    initial: dict = field(default_factory=lambda: {"c": 0.0, "r": 1.0})

    def __post_init__(self):
        if self.omega_c == self.omega_r:
            raise ValueError("the oracle needs distinct oscillator frequencies")
        if unknown := set(self.initial) - {"c", "r"}:
            raise ValueError(f"unknown modes in initial: {sorted(unknown)}")

    def bath(self) -> BathDiscretization:
        return BathDiscretization.default_band(self.omega_c, self.omega_r, self.n_modes).with_rate(
            self.rate_c, self.hbar)

    def system(self) -> QuadraticModel:
        return QuadraticModel.two_oscillators(self.omega_c, self.omega_r, self.g, None, self.hbar)

    def model(self) -> QuadraticModel:
        return QuadraticModel.two_oscillators(self.omega_c, self.omega_r, self.g, self.bath(),
                                              self.hbar)

    @property
    def duration(self) -> float:
        return float(math.floor(self.bath().horizon)) if self.t_final is None else self.t_final

    def _mode_order(self) -> tuple[str, str]:
        # normal modes ascend in frequency and stay attached to their bare partners
        return ("r", "c") if self.omega_r < self.omega_c else ("c", "r")

    def run(self) -> OccupationSeries:
        bath = self.bath()
        bath.check_band([(self.omega_c, self.rate_c),
                         (self.omega_r, indirect_rate_estimate(self.omega_c, self.omega_r, self.g,
                                                               self.rate_c, self.hbar))])
        model, system = self.model(), self.system()
        order = self._mode_order()
        state = dressed_state(model, system, [self.initial.get(m, 0.0) for m in order],
                              self.bath_occupation)
        rows, _ = normal_mode_rows(system)
        extra = {f"{m}_mode": embed_row(w, system.n_modes, model.n_modes)
                 for m, w in zip(order, rows)}
        extra = {k: extra[k] for k in ("c_mode", "r_mode")}
        return track_occupations(state, model, self.duration, self.dt, ("c", "r"), extra)
