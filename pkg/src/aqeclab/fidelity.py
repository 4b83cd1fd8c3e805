"""Fidelity metrics: state overlap, code-space averages, analytic baselines and
the temporally coarse-grained variant.

The production path for the code-space mean is the six-state formula

    Fbar = (1/6) sum_{j = +-x, +-y, +-z} Tr(rho_j M[rho_j]),
    rho_{+-j} = (sigma_0 +- sigma_j) / 2,

which equals the uniform Bloch-sphere average of Tr(rho_0 M[rho_0]) for any
linear trace-preserving map.  The sphere quadrature is kept as an independent
oracle for that identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .codes import CodePair, logical_paulis
from .dynamics import evolve_states
from .fock import DensityMatrix, Ket
from .models import SystemModel
from .serialize import write_csv

Channel = Callable[[DensityMatrix], DensityMatrix]

# Residual dephasing exponent of the equal-weight recovery on the |2>/|4> code
# (exp(-u * gamma_a * t) decay of the logical coherence in the strong-pumping
# limit); the unequal-weight recovery gives 1/3.
RL_CODE_U = 3.0 - 2.0 * math.sqrt(2.0)
NAIVE_U = 1.0 / 3.0

VALUE_ATOL = 1e-9
CLIP_ATOL = 1e-8
PURITY_ATOL = 1e-8
TRACE_PRESERVING_ATOL = 1e-6


@dataclass(frozen=True)
class BlochPoint:
    theta: float
    phi: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta {self.theta} outside [0, pi]")
        if not 0.0 <= self.phi < 2.0 * math.pi:
            raise ValueError(f"phi {self.phi} outside [0, 2*pi)")


@dataclass(frozen=True)
class FidelityCurve:
    """Time grid plus mean (and optional min/max over states) fidelity samples."""

    times: np.ndarray
    mean: np.ndarray
    fmin: Optional[np.ndarray] = None
    fmax: Optional[np.ndarray] = None
    time_label: str = "gamma_a*t"

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        mean = np.asarray(self.mean, dtype=float)
        if times.shape != mean.shape or times.ndim != 1:
            raise ValueError("times and mean must be 1-d arrays of equal length")
        for arr in (mean, self.fmin, self.fmax):
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float)
            if arr.min() < -VALUE_ATOL or arr.max() > 1.0 + VALUE_ATOL:
                raise ValueError("fidelity values outside [0, 1] beyond tolerance")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "mean", mean)

    def to_csv(self, path, units: str = "dimensionless time") -> None:
        cols = {"t": self.times, "F_mean": self.mean}
        if self.fmin is not None:
            cols["F_min"] = np.asarray(self.fmin)
        if self.fmax is not None:
            cols["F_max"] = np.asarray(self.fmax)
        write_csv(path, cols, units=units)


def bloch_state(code: CodePair, point: BlochPoint) -> Ket:
    """cos(theta/2)|0_L> + e^{i phi} sin(theta/2)|1_L>."""
    amps = (math.cos(point.theta / 2.0) * code.zero_logical.amplitudes
            + np.exp(1j * point.phi) * math.sin(point.theta / 2.0) * code.one_logical.amplitudes)
    return Ket(code.space, amps)


def state_fidelity(rho0: DensityMatrix, rho_t: DensityMatrix) -> float:
    """Tr(rho0 rho_t) against a pure reference rho0, clipped to [0, 1].

    This overlap formula is a fidelity only when the reference is pure, so
    Tr(rho0^2) must equal 1 to 1e-8.  Clipping beyond 1e-8 signals an invalid
    evolved state and raises.
    """
    purity = rho0.purity()
    if abs(purity - 1.0) > PURITY_ATOL:
        raise ValueError(f"reference state not pure: Tr(rho^2) = {purity!r}")
    val = float(np.trace(rho0.data @ rho_t.data).real)
    clipped = min(1.0, max(0.0, val))
    if abs(clipped - val) > CLIP_ATOL:
        raise ValueError(f"fidelity value {val!r} outside [0, 1] beyond {CLIP_ATOL}")
    return clipped


def six_code_states(code: CodePair) -> list[DensityMatrix]:
    """The six Pauli eigenstate mixtures (sigma_0 +- sigma_j)/2, j = x, y, z."""
    paulis = logical_paulis(code)
    out = []
    for s in (paulis.sx, paulis.sy, paulis.sz):
        for sign in (1.0, -1.0):
            data = 0.5 * (paulis.s0.data + sign * s.data)
            out.append(DensityMatrix(code.space, data))
    return out


def mean_fidelity_six(channel: Channel, code: CodePair) -> float:
    """Six-state production formula for the code-space mean fidelity."""
    total = 0.0
    for rho in six_code_states(code):
        out = channel(rho)
        tr = float(np.trace(out.data).real)
        if abs(tr - 1.0) > TRACE_PRESERVING_ATOL:
            raise ValueError(f"channel is not trace preserving: Tr = {tr!r}")
        total += float(np.trace(rho.data @ out.data).real)
    return total / 6.0


def mean_fidelity_sphere(channel: Channel, code: CodePair,
                         n_theta: int = 32, n_phi: int = 32) -> float:
    """Bloch-sphere quadrature oracle for the mean fidelity.

    Gauss-Legendre nodes in cos(theta), uniform grid in phi.  Exists as the
    independent check of the six-state identity; not the production path.
    """
    if n_theta < 16 or n_phi < 16:
        raise ValueError("need at least 16 nodes per angle")
    nodes, weights = np.polynomial.legendre.leggauss(int(n_theta))
    total = 0.0
    for x, w in zip(nodes, weights):
        theta = math.acos(float(x))
        for k in range(int(n_phi)):
            phi = 2.0 * math.pi * k / int(n_phi)
            psi = bloch_state(code, BlochPoint(theta, phi))
            rho0 = DensityMatrix(code.space, np.outer(psi.amplitudes, psi.amplitudes.conj()))
            out = channel(rho0)
            total += w * float(np.trace(rho0.data @ out.data).real)
    return total / (2.0 * int(n_phi))


def break_even_mean_fidelity(gamma_a_t) -> np.ndarray | float:
    """Closed-form mean fidelity of the uncorrected |0>, |1> encoding."""
    x = np.asarray(gamma_a_t, dtype=float)
    if np.any(x < 0.0):
        raise ValueError("gamma_a * t must be >= 0")
    out = (np.exp(-x) + 2.0 * np.exp(-x / 2.0) + 3.0) / 6.0
    return float(out) if np.isscalar(gamma_a_t) or out.ndim == 0 else out


def rl_analytic_mean_fidelity(gamma_a_t) -> np.ndarray | float:
    """Strong-pumping limit of the |2>/|4> code: 2/3 + exp(-u gamma_a t)/3."""
    x = np.asarray(gamma_a_t, dtype=float)
    if np.any(x < 0.0):
        raise ValueError("gamma_a * t must be >= 0")
    out = 2.0 / 3.0 + np.exp(-RL_CODE_U * x) / 3.0
    return float(out) if np.isscalar(gamma_a_t) or out.ndim == 0 else out


def rl_analytic_state_fidelity(point: BlochPoint, gamma_a_t: float) -> float:
    """Per-state strong-pumping fidelity; depends on theta only."""
    x = float(gamma_a_t)
    if x < 0.0:
        raise ValueError("gamma_a * t must be >= 0")
    s = math.sin(point.theta / 2.0) * math.cos(point.theta / 2.0)
    return 1.0 + 2.0 * s * s * (math.exp(-RL_CODE_U * x) - 1.0)


def coarse_grained(curve: FidelityCurve, tau: float) -> FidelityCurve:
    """Sliding-window maximum F*(t) = max over [t, t + tau] on the sample grid.

    Separates irreversible fidelity loss from the recoverable dip caused by
    the delay between an error and its recovery jump.  The window is
    truncated at the final sample; the grid must resolve tau (spacing
    <= tau/6) whenever tau > 0.
    """
    tau = float(tau)
    if tau < 0.0:
        raise ValueError("tau must be >= 0")
    t = curve.times
    if tau > 0.0 and t.size > 1:
        max_dt = float(np.diff(t).max())
        if max_dt > tau / 6.0 + 1e-15:
            raise ValueError(f"sample spacing {max_dt:.3g} too coarse for tau = {tau:.3g}")
    out = np.empty_like(curve.mean)
    j_hi = 0
    for i in range(t.size):
        j_hi = max(j_hi, i)
        while j_hi + 1 < t.size and t[j_hi + 1] <= t[i] + tau + 1e-15:
            j_hi += 1
        out[i] = curve.mean[i:j_hi + 1].max()
    return FidelityCurve(times=t, mean=out, time_label=curve.time_label)


def mean_fidelity_curve(model: SystemModel, code: CodePair, t_grid,
                        rtol: float = 1e-8, atol: float = 1e-10,
                        time_label: str = "gamma_a*t",
                        method: str = "direct") -> FidelityCurve:
    """Six-state mean fidelity versus time under one system model.

    ``method='direct'`` integrates all six initial states as one batch
    sharing the adaptive steps.  ``method='basis'`` exploits linearity of
    the map and the adjoint covariance M[X^dag] = M[X]^dag to integrate only
    the three independent code-space basis matrices (|0><0|, |1><1|,
    |0><1|), halving the work for expensive models; the two routes agree to
    integration accuracy.
    """
    t = np.asarray(t_grid, dtype=float)
    states = six_code_states(code)
    if method == "direct":
        full0 = [model.embed_matrix(s.data) for s in states]
        raw = evolve_states(full0, model.H, model.channel, t_grid, rtol=rtol, atol=atol)
        per_state = np.empty((t.size, len(states)))
        for i in range(t.size):
            for j, s in enumerate(states):
                red = model.reduce_matrix(raw[i, j])
                per_state[i, j] = float(np.trace(s.data @ red).real)
    elif method == "basis":
        per_state = _basis_per_state_fidelities(model, code, t_grid, rtol, atol)
    else:
        raise ValueError(f"unknown method {method!r}")
    per_state = np.clip(per_state, 0.0, 1.0)
    return FidelityCurve(times=t, mean=per_state.mean(axis=1),
                         fmin=per_state.min(axis=1), fmax=per_state.max(axis=1),
                         time_label=time_label)


def _basis_per_state_fidelities(model: SystemModel, code: CodePair, t_grid,
                                rtol: float, atol: float) -> np.ndarray:
    z = code.zero_logical.amplitudes
    o = code.one_logical.amplitudes
    b00 = np.outer(z, z.conj())
    b11 = np.outer(o, o.conj())
    b01 = np.outer(z, o.conj())
    full0 = [model.embed_matrix(b) for b in (b00, b11, b01)]
    raw = evolve_states(full0, model.H, model.channel, t_grid,
                        rtol=rtol, atol=atol, hermitize=False)
    t = np.asarray(t_grid, dtype=float)
    states = six_code_states(code)
    per_state = np.empty((t.size, 6))
    for i in range(t.size):
        m00 = model.reduce_matrix(raw[i, 0])
        m11 = model.reduce_matrix(raw[i, 1])
        m01 = model.reduce_matrix(raw[i, 2])
        m_s0 = m00 + m11
        m_sx = m01 + m01.conj().T
        m_sy = 1j * (m01 - m01.conj().T)
        m_sz = m11 - m00
        for j, m_sj in enumerate((m_sx, m_sy, m_sz)):
            for k, sign in enumerate((1.0, -1.0)):
                out = 0.5 * (m_s0 + sign * m_sj)
                out = 0.5 * (out + out.conj().T)
                per_state[i, 2 * j + k] = float(np.trace(states[2 * j + k].data @ out).real)
    return per_state


def bloch_grid_fidelity(channel: Channel, code: CodePair,
                        thetas: Sequence[float], phis: Sequence[float]) -> np.ndarray:
    """F(theta, phi) on a rectangular Bloch grid; shape (len(thetas), len(phis))."""
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    out = np.empty((thetas.size, phis.size))
    for i, th in enumerate(thetas):
        for k, ph in enumerate(phis):
            psi = bloch_state(code, BlochPoint(float(th), float(ph)))
            rho0 = DensityMatrix(code.space, np.outer(psi.amplitudes, psi.amplitudes.conj()))
            out[i, k] = state_fidelity(rho0, channel(rho0))
    return out


def write_bloch_grid_csv(path, thetas, phis, grid: np.ndarray,
                         units: str = "theta, phi in radians") -> None:
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    tt = np.repeat(thetas, phis.size)
    pp = np.tile(phis, thetas.size)
    write_csv(path, {"theta": tt, "phi": pp, "F": np.asarray(grid).reshape(-1)}, units=units)
