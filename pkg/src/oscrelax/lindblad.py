"""Thermal-dissipator master equation for two oscillators in a truncated Fock space.

The composite basis is row-major with ``c`` outer: flat index
``n_c * dim_r + n_r``.  Only the dissipators are integrated (interaction
picture, renormalized frequencies absorbed); an optional diagonal detuning
Hamiltonian can be switched on for sensitivity studies.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .effective import LindbladChannel
from .errors import NoConvergence, StepRejected

log = logging.getLogger(__name__)

TRACE_RENORM_TOL = 1e-12
TRACE_REJECT_TOL = 1e-8
TAIL_WARN = 1e-8


@dataclass(frozen=True)
class FockBasis:
    dim_c: int = 15
    dim_r: int = 15

    def __post_init__(self):
        if self.dim_c < 2 or self.dim_r < 2:
            raise ValueError("Fock truncation dimensions must be >= 2")

    @property
    def dim(self) -> int:
        return self.dim_c * self.dim_r

    @property
    def shape4(self) -> tuple[int, int, int, int]:
        return (self.dim_c, self.dim_r, self.dim_c, self.dim_r)

    def index(self, n_c: int, n_r: int) -> int:
        return n_c * self.dim_r + n_r

    def mode_dim(self, mode: str) -> int:
        return {"c": self.dim_c, "r": self.dim_r}[mode]


def annihilation(dim: int) -> np.ndarray:
    """Truncated ``a`` with ``<n-1|a|n> = sqrt(n)``."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


@dataclass(frozen=True)
class ModeMatrices:
    c: np.ndarray
    r: np.ndarray
    basis: FockBasis

    def __getitem__(self, mode: str) -> np.ndarray:
        return {"c": self.c, "r": self.r}[mode]


def build_ops(basis: FockBasis) -> ModeMatrices:
    ac, ar = annihilation(basis.dim_c), annihilation(basis.dim_r)
    return ModeMatrices(np.kron(ac, np.eye(basis.dim_r)), np.kron(np.eye(basis.dim_c), ar), basis)


def thermal_state(n_bar: float, dim: int) -> np.ndarray:
    """Single-mode Bose-Einstein state, normalized on the truncated space."""
    if n_bar < 0:
        raise ValueError("occupation must be non-negative")
    p = np.zeros(dim)
    if n_bar == 0:
        p[0] = 1.0
    else:
        x = n_bar / (n_bar + 1.0)
        p = x ** np.arange(dim)
        p /= p.sum()
    return np.diag(p).astype(complex)


def fock_state(n: int, dim: int) -> np.ndarray:
    rho = np.zeros((dim, dim), complex)
    rho[n, n] = 1.0
    return rho


def product_state(rho_c: np.ndarray, rho_r: np.ndarray) -> np.ndarray:
    return np.kron(rho_c, rho_r)


@dataclass
class DensityMatrix:
    rho: np.ndarray
    basis: FockBasis
    tbar: float = 0.0

    @classmethod
    def product(cls, rho_c, rho_r, tbar: float = 0.0) -> DensityMatrix:
        return cls(product_state(rho_c, rho_r), FockBasis(len(rho_c), len(rho_r)), tbar)

    @classmethod
    def vacuum(cls, basis: FockBasis) -> DensityMatrix:
        return cls.product(fock_state(0, basis.dim_c), fock_state(0, basis.dim_r))

    @classmethod
    def thermal(cls, basis: FockBasis, n_c: float, n_r: float) -> DensityMatrix:
        return cls.product(thermal_state(n_c, basis.dim_c), thermal_state(n_r, basis.dim_r))

    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def purity(self) -> float:
        return float(np.vdot(self.rho, self.rho).real)  # tr(rho^2) for Hermitian rho

    def hermiticity_error(self) -> float:
        return float(np.abs(self.rho - self.rho.conj().T).max())

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))[0])

    def populations(self, mode: str) -> np.ndarray:
        diag = np.diagonal(self.rho).real.reshape(self.basis.dim_c, self.basis.dim_r)
        return diag.sum(axis=1) if mode == "c" else diag.sum(axis=0)

    def number(self, mode: str) -> float:
        p = self.populations(mode)
        return float(np.arange(len(p)) @ p)

    def reduced(self, mode: str) -> np.ndarray:
        r4 = self.rho.reshape(self.basis.shape4)
        return np.einsum("ijkj->ik", r4) if mode == "c" else np.einsum("ijil->jl", r4)

    def mutual_information(self) -> float:
        """``S(rho_c) + S(rho_r) - S(rho)`` in nats."""
        return (von_neumann_entropy(self.reduced("c")) + von_neumann_entropy(self.reduced("r"))
                - von_neumann_entropy(self.rho))


def von_neumann_entropy(rho: np.ndarray) -> float:
    p = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    p = p[p > 1e-300]
    return float(-(p * np.log(p)).sum())


def dissipator_apply(rho: np.ndarray, ch: LindbladChannel, ops: ModeMatrices) -> np.ndarray:
    """``-Gamma_i rho`` from the dense mode matrices (reference path).

    ``g n Y+ rho Y + g (n+1) Y rho Y+ - g {((n+1)/2) Y+Y + (n/2) YY+, rho}``.
    """
    if ch.rate == 0:
        return np.zeros_like(rho)
    y = ops[ch.mode]
    yd = y.conj().T
    g, n = ch.rate, ch.occupation
    k = 0.5 * (n + 1) * (yd @ y) + 0.5 * n * (y @ yd)
    return g * n * (yd @ rho @ y) + g * (n + 1) * (y @ rho @ yd) - g * (k @ rho + rho @ k)


@numba.njit(cache=True)
def _liouville_kernel(x, out, alpha, base, active, dense, dc, sc_down, sc_up, dr, sr_down,
                      sr_up, ham, use_ham):
    # out = base + alpha * L(x) on the (dim_c, dim_r, dim_c, dim_r) tensor, written only on
    # active coherence sectors (n_c - n_c', n_r - n_r'); L never mixes sectors.
    # s*_down / s*_up: sqrt ladders pre-scaled by sqrt(downward / upward rate);
    # d*: diagonal of the anticommutator term
    nc, nr = x.shape[0], x.shape[1]
    if dense:
        for i in range(nc):
            for j in range(nr):
                for k in range(nc):
                    for l in range(nr):
                        v = -(dc[i] + dc[k] + dr[j] + dr[l]) * x[i, j, k, l]
                        if use_ham:
                            v += ham[i, j, k, l] * x[i, j, k, l]
                        if i < nc - 1 and k < nc - 1:
                            v += sc_down[i] * sc_down[k] * x[i + 1, j, k + 1, l]
                        if i > 0 and k > 0:
                            v += sc_up[i] * sc_up[k] * x[i - 1, j, k - 1, l]
                        if j < nr - 1 and l < nr - 1:
                            v += sr_down[j] * sr_down[l] * x[i, j + 1, k, l + 1]
                        if j > 0 and l > 0:
                            v += sr_up[j] * sr_up[l] * x[i, j - 1, k, l - 1]
                        out[i, j, k, l] = base[i, j, k, l] + alpha * v
        return
    for i in range(nc):
        for k in range(nc):
            p = i - k + nc - 1
            for qi in range(active.shape[1]):
                if not active[p, qi]:
                    continue
                q = qi - nr + 1
                for j in range(max(0, q), min(nr, nr + q)):
                    l = j - q
                    v = -(dc[i] + dc[k] + dr[j] + dr[l]) * x[i, j, k, l]
                    if use_ham:
                        v += ham[i, j, k, l] * x[i, j, k, l]
                    if i < nc - 1 and k < nc - 1:
                        v += sc_down[i] * sc_down[k] * x[i + 1, j, k + 1, l]
                    if i > 0 and k > 0:
                        v += sc_up[i] * sc_up[k] * x[i - 1, j, k - 1, l]
                    if j < nr - 1 and l < nr - 1:
                        v += sr_down[j] * sr_down[l] * x[i, j + 1, k, l + 1]
                    if j > 0 and l > 0:
                        v += sr_up[j] * sr_up[l] * x[i, j - 1, k, l - 1]
                    out[i, j, k, l] = base[i, j, k, l] + alpha * v


@numba.njit(cache=True)
def _symmetrize(x, active):
    # in place x <- (x + x^H)/2 on active sectors; returns max |x - x^H| beforehand
    nc, nr = x.shape[0], x.shape[1]
    err = 0.0
    for i in range(nc):
        for k in range(i, nc):
            p = i - k + nc - 1
            for j in range(nr):
                for l in range(nr):
                    if (k == i and l < j) or not active[p, j - l + nr - 1]:
                        continue
                    a = x[i, j, k, l]
                    b = x[k, l, i, j]
                    d = abs(a - b.conjugate())
                    if d > err:
                        err = d
                    m = 0.5 * (a + b.conjugate())
                    x[i, j, k, l] = m
                    x[k, l, i, j] = m.conjugate()
    return err


def sector_mask(rho: np.ndarray, basis: FockBasis) -> np.ndarray:
    """Boolean ``(2 dim_c - 1, 2 dim_r - 1)`` mask of coherence sectors holding nonzero entries.

    The mask is closed under conjugation, ``(p, q) -> (-p, -q)``.
    """
    i, j, k, l = np.nonzero(rho.reshape(basis.shape4))
    mask = np.zeros((2 * basis.dim_c - 1, 2 * basis.dim_r - 1), dtype=np.bool_)
    mask[i - k + basis.dim_c - 1, j - l + basis.dim_r - 1] = True
    return mask | mask[::-1, ::-1]


class Liouvillian:
    """Fused implementation of ``sum_i -Gamma_i`` (plus optional diagonal detuning)."""

    def __init__(self, basis: FockBasis, channels: Sequence[LindbladChannel],
                 detuning: tuple[float, float] | None = None):
        self.basis = basis
        self.channels = [ch for ch in channels if ch.rate > 0]
        modes = [ch.mode for ch in self.channels]
        if len(set(modes)) != len(modes):
            raise ValueError("at most one channel per mode")
        ladders = {}
        for mode in ("c", "r"):
            d = basis.mode_dim(mode)
            ladders[mode] = [np.zeros(d), np.zeros(d), np.zeros(d)]
        for ch in self.channels:
            d = basis.mode_dim(ch.mode)
            g, n = ch.rate, ch.occupation
            num = np.arange(d, dtype=float)
            yyd = np.append(np.arange(1, d, dtype=float), 0.0)  # truncated diag(Y Y+)
            ladders[ch.mode] = [
                g * (0.5 * (n + 1) * num + 0.5 * n * yyd),
                # entry (i, k) of Y rho Y+ carries sqrt(i+1) sqrt(k+1); of Y+ rho Y, sqrt(i) sqrt(k)
                np.sqrt(g * (n + 1)) * np.sqrt(num + 1),
                np.sqrt(g * n) * np.sqrt(num),
            ]
        self._args = (*ladders["c"], *ladders["r"])
        self.has_detuning = detuning is not None and any(detuning)
        self._ham = np.zeros((1, 1, 1, 1), complex)
        if self.has_detuning:
            h = (detuning[0] * np.arange(basis.dim_c)[:, None]
                 + detuning[1] * np.arange(basis.dim_r)[None, :])
            self._ham = -1j * (h[:, :, None, None] - h[None, None, :, :])
        self._all = np.ones((2 * basis.dim_c - 1, 2 * basis.dim_r - 1), dtype=np.bool_)
        self._bufs: tuple | None = None  # (mask, y1, y2) scratch for rk4

    def apply(self, x: np.ndarray, alpha: float = 1.0, base: np.ndarray | None = None,
              active: np.ndarray | None = None, out: np.ndarray | None = None) -> np.ndarray:
        """``base + alpha * L(x)`` for D x D matrices.

        With ``active`` given, only those sectors are written; entries of ``out``
        outside them are left untouched.
        """
        shape = self.basis.shape4
        if out is None:
            out = np.zeros(x.shape, complex) if base is None else np.array(base, complex)
        b = np.zeros(shape, complex) if base is None else np.ascontiguousarray(base).reshape(shape)
        if active is None:
            active = self._all
        _liouville_kernel(np.ascontiguousarray(x).reshape(shape), out.reshape(shape), alpha, b,
                          active, bool(active.all()), *self._args, self._ham, self.has_detuning)
        return out

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return self.apply(rho)

    def rk4(self, rho: np.ndarray, dt: float, active: np.ndarray | None = None) -> np.ndarray:
        """One classical RK4 step.

        For a linear autonomous generator RK4 is the polynomial
        ``1 + z + z^2/2 + z^3/6 + z^4/24`` in ``z = dt*L``, evaluated here in nested form.
        """
        if active is None:
            active = sector_mask(rho, self.basis)
        # scratch entries outside the active sectors must stay zero
        if self._bufs is None or not np.array_equal(self._bufs[0], active):
            self._bufs = (active.copy(), np.zeros(rho.shape, complex), np.zeros(rho.shape, complex))
        _, y1, y2 = self._bufs
        self.apply(rho, dt / 4, rho, active, y1)
        self.apply(y1, dt / 3, rho, active, y2)
        self.apply(y2, dt / 2, rho, active, y1)
        return self.apply(y1, dt, rho, active, np.zeros(rho.shape, complex))

    def suggest_dt(self, safety: float = 0.5) -> float:
        """Step well inside the RK4 stability region (Gershgorin bound on the spectrum)."""
        lam = 0.0
        for ch in self.channels:
            d = self.basis.mode_dim(ch.mode)
            lam += 2 * ch.rate * (2 * ch.occupation + 1) * (d - 1)
        if self.has_detuning:
            lam += float(np.abs(self._ham).max())
        return math.inf if lam == 0 else safety * 2.78 / lam


@dataclass
class StepAudit:
    """Invariant bookkeeping accumulated over a run."""

    steps: int = 0
    max_trace_error: float = 0.0  # |tr rho - 1| before any correction
    max_step_drift: float = 0.0
    max_hermiticity_error: float = 0.0  # before re-symmetrization
    min_eigenvalue: float = math.inf
    renormalizations: int = 0
    truncation_warned: bool = False

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "max_trace_error": self.max_trace_error,
            "max_step_drift": self.max_step_drift,
            "max_hermiticity_error": self.max_hermiticity_error,
            "min_eigenvalue": None if math.isinf(self.min_eigenvalue) else self.min_eigenvalue,
            "renormalizations": self.renormalizations,
        }


def _advance(L: Liouvillian, rho: np.ndarray, dt: float, audit: StepAudit,
             active: np.ndarray | None = None) -> np.ndarray:
    if active is None:
        active = sector_mask(rho, L.basis)
    tr0 = np.trace(rho).real
    new = L.rk4(rho, dt, active)
    tr1 = np.trace(new).real
    drift = abs(tr1 - tr0)
    if drift > TRACE_REJECT_TOL:
        raise StepRejected(f"trace drift {drift:.3e} per step exceeds {TRACE_REJECT_TOL:g}; "
                           "reduce dt or enlarge the truncation")
    audit.steps += 1
    audit.max_step_drift = max(audit.max_step_drift, drift)
    audit.max_trace_error = max(audit.max_trace_error, abs(tr1 - 1.0))
    herm = _symmetrize(new.reshape(L.basis.shape4), active)
    audit.max_hermiticity_error = max(audit.max_hermiticity_error, herm)
    if abs(tr1 - 1.0) > TRACE_RENORM_TOL:
        log.info("renormalizing trace drift %.3e at step %d", tr1 - 1.0, audit.steps)
        audit.renormalizations += 1
        new = new / tr1
    return new


def step(state: DensityMatrix, channels: Sequence[LindbladChannel], dt: float,
         detuning: tuple[float, float] | None = None, audit: StepAudit | None = None) -> DensityMatrix:
    """One classical RK4 step of the dissipative kinetic equation."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    L = Liouvillian(state.basis, channels, detuning)
    rho = _advance(L, state.rho, dt, audit or StepAudit())
    return DensityMatrix(rho, state.basis, state.tbar + dt)


@dataclass
class TimeSeries:
    tbar: np.ndarray
    n_c: np.ndarray
    n_r: np.ndarray
    trace: np.ndarray
    purity: np.ndarray
    final: DensityMatrix | None = None
    audit: StepAudit = field(default_factory=StepAudit)
    dt: float = 0.0

    HEADER = ("tbar", "n_c", "n_r", "trace", "purity")

    def rows(self):
        return zip(self.tbar, self.n_c, self.n_r, self.trace, self.purity)

    def to_csv(self, path) -> None:
        write_csv(path, self.HEADER, self.rows())


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["%.17g" % float(v) for v in row])


def _check_tail(state: DensityMatrix, audit: StepAudit) -> None:
    if audit.truncation_warned:
        return
    for mode in ("c", "r"):
        p = state.populations(mode)
        # top two levels, never counting the ground state
        if p[max(1, len(p) - 2):].sum() > TAIL_WARN:
            warnings.warn(f"top Fock levels of mode {mode} hold more than {TAIL_WARN:g}; "
                          "enlarge the truncation", RuntimeWarning, stacklevel=3)
            audit.truncation_warned = True
            return


def evolve(state: DensityMatrix, channels: Sequence[LindbladChannel], t_final: float, dt: float,
           sample_every: int = 1, detuning: tuple[float, float] | None = None,
           check_positivity: bool = True) -> TimeSeries:
    """Integrate to ``t_final`` with fixed steps, sampling every ``sample_every`` steps.

    ``dt`` is shrunk, if needed, so that an integer number of steps lands on ``t_final``.
    """
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    n_steps = 0 if t_final == 0 else math.ceil(t_final / dt - 1e-9)
    h = t_final / n_steps if n_steps else dt
    L = Liouvillian(state.basis, channels, detuning)
    audit = StepAudit()
    rho = state.rho.copy()
    active = sector_mask(rho, state.basis)
    samples = []

    def record(k: int):
        cur = DensityMatrix(rho, state.basis, state.tbar + k * h)
        samples.append((cur.tbar, cur.number("c"), cur.number("r"), cur.trace(), cur.purity()))
        if check_positivity:
            audit.min_eigenvalue = min(audit.min_eigenvalue, cur.min_eigenvalue())
        _check_tail(cur, audit)

    record(0)
    for k in range(1, n_steps + 1):
        rho = _advance(L, rho, h, audit, active)
        if k % sample_every == 0 or k == n_steps:
            record(k)
    cols = np.array(samples).T
    final = DensityMatrix(rho, state.basis, state.tbar + n_steps * h)
    return TimeSeries(*cols, final=final, audit=audit, dt=h)


def steady_state(state: DensityMatrix, channels: Sequence[LindbladChannel], tol: float = 1e-10,
                 dt: float | None = None, max_steps: int = 1_000_000, check_every: int = 50,
                 detuning: tuple[float, float] | None = None) -> DensityMatrix:
    """Long-time integration until ``max |d rho / d tbar| < tol``."""
    L = Liouvillian(state.basis, channels, detuning)
    h = dt or L.suggest_dt()
    if math.isinf(h):
        return state
    audit = StepAudit()
    rho = state.rho.copy()
    active = sector_mask(rho, state.basis)
    for k in range(max_steps + 1):
        if k % check_every == 0 and np.abs(L.apply(rho, active=active)).max() < tol:
            log.info("steady state reached after %d steps (tbar = %g)", k, state.tbar + k * h)
            return DensityMatrix(rho, state.basis, state.tbar + k * h)
        if k == max_steps:
            break
        rho = _advance(L, rho, h, audit, active)
    raise NoConvergence(f"max |L rho| still above {tol:g} after {max_steps} steps")
