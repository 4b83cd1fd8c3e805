"""Time evolution under the Lindblad master equation and its MCWF unraveling.

Master-equation convention used throughout the package:

    drho/dt = -i[H, rho] + sum_k (rate_k / 2) * (2 L_k rho L_k^dag
                                                 - L_k^dag L_k rho
                                                 - rho L_k^dag L_k)

so ``rate_k`` is the population decay rate of the corresponding channel
(a single excitation subject to a lowering-type jump decays as
exp(-rate * t)).

The right-hand side is always computed with direct matrix products; the
d^2 x d^2 generator matrix is only materialized by :func:`propagator`,
which is restricted to small spaces and exists for the many-initial-states
use case (heatmaps, repeated channel evaluations at one fixed time).

The integrator is an explicit adaptive Runge-Kutta pair of order 5(4)
(Dormand-Prince coefficients, embedded error estimate) with elementwise
scaled RMS error control.  Density-matrix evolution re-symmetrizes the
state after every accepted step; a fixed-step classical RK4 route is
provided as an independent cross-validation path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .fock import DensityMatrix, Ket, Operator, SpaceSignature, _check_same_space
from .serialize import write_csv

__all__ = [
    "NoiseChannel",
    "EvolutionResult",
    "Trajectory",
    "EnsembleCurve",
    "StiffnessError",
    "lindblad_rhs",
    "evolve",
    "evolve_states",
    "evolve_fixed_rk4",
    "propagator",
    "Propagator",
    "mcwf_trajectory",
    "mcwf_ensemble",
    "ensemble_seeds",
    "average_trajectories",
]


class StiffnessError(RuntimeError):
    """Raised when the adaptive step size underflows; carries the time reached."""

    def __init__(self, t_reached: float):
        self.t_reached = float(t_reached)
        super().__init__(f"adaptive step size underflow at t = {t_reached:.6g}; "
                         "the problem is too stiff for the explicit integrator")


@dataclass(frozen=True)
class NoiseChannel:
    """List of (jump operator, rate) pairs defining the dissipators."""

    jumps: tuple[tuple[Operator, float], ...]

    def __post_init__(self) -> None:
        jumps = tuple((op, float(rate)) for op, rate in self.jumps)
        if jumps:
            space = jumps[0][0].space
            for op, rate in jumps:
                if rate < 0.0:
                    raise ValueError(f"negative rate {rate}")
                _check_same_space(space, op.space)
        object.__setattr__(self, "jumps", jumps)

    @property
    def space(self) -> Optional[SpaceSignature]:
        return self.jumps[0][0].space if self.jumps else None

    def __len__(self) -> int:
        return len(self.jumps)


def empty_channel() -> NoiseChannel:
    return NoiseChannel(())


@dataclass(frozen=True)
class EvolutionResult:
    times: np.ndarray
    states: tuple[DensityMatrix, ...]
    stats: dict

    def expectation_series(self, op: Operator) -> np.ndarray:
        return np.array([np.trace(op.data @ s.data).real for s in self.states])

    def to_csv(self, path, observables: dict[str, Operator], units: str = "arbitrary") -> None:
        cols = {"t": np.asarray(self.times)}
        for name, op in observables.items():
            cols[name] = self.expectation_series(op)
        write_csv(path, cols, units=units)

    def to_json(self, path, observables: dict[str, Operator]) -> None:
        payload = {
            "times": list(map(float, self.times)),
            "observables": {name: [float(v) for v in self.expectation_series(op)]
                            for name, op in observables.items()},
            "stats": self.stats,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    kets: tuple[Ket, ...]
    jump_events: tuple[tuple[float, int], ...]

    def observable_series(self, extract: Callable[[Ket], float]) -> np.ndarray:
        return np.array([float(extract(k)) for k in self.kets])

    def to_csv(self, path, observables: dict[str, Callable[[Ket], float]],
               units: str = "arbitrary") -> None:
        cols = {"t": np.asarray(self.times)}
        for name, extract in observables.items():
            cols[name] = self.observable_series(extract)
        write_csv(path, cols, units=units)

    def to_json(self, path, observables: dict[str, Callable[[Ket], float]]) -> None:
        payload = {
            "times": list(map(float, self.times)),
            "observables": {name: [float(v) for v in self.observable_series(f)]
                            for name, f in observables.items()},
            "jump_events": [[float(t), int(k)] for t, k in self.jump_events],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)


@dataclass(frozen=True)
class EnsembleCurve:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n: int


def lindblad_rhs(H: Optional[Operator], channel: NoiseChannel, rho: DensityMatrix) -> np.ndarray:
    """Single evaluation of the master-equation right-hand side."""
    if H is not None:
        _check_same_space(H.space, rho.space)
    if channel.space is not None:
        _check_same_space(channel.space, rho.space)
    f = _rhs_function(H, channel)
    return f(rho.data)


def _rhs_function(H: Optional[Operator], channel: NoiseChannel):
    """Build rhs(y) for y of shape (..., d, d); batched over leading axes."""
    hmat = None if H is None else H.data
    ops = [op.data for op, _ in channel.jumps]
    rates = [rate for _, rate in channel.jumps]
    ldl = [op.conj().T @ op for op in ops]

    def rhs(y: np.ndarray) -> np.ndarray:
        if hmat is not None:
            out = -1j * (hmat @ y - y @ hmat)
        else:
            out = np.zeros_like(y)
        for op, n_op, rate in zip(ops, ldl, rates):
            if rate == 0.0:
                continue
            ly = op @ y
            out += rate * (ly @ op.conj().T) - (rate / 2.0) * (n_op @ y + y @ n_op)
        return out

    return rhs


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# b - b_hat: weights of the embedded 4th-order error estimate
_DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                  -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray,
                rtol: float, atol: float) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))


class _AdaptiveStepper:
    """Explicit adaptive RK 5(4) over an arbitrary complex ndarray state."""

    def __init__(self, f, t0: float, y0: np.ndarray, rtol: float, atol: float,
                 t_span: float, post_step=None):
        self.f = f
        self.t = float(t0)
        self.y = np.array(y0, dtype=complex)
        self.rtol = float(rtol)
        self.atol = float(atol)
        self.post_step = post_step
        # steps below 1e-13 of the span (or absolute, for sub-unit spans, in
        # the caller's time units) cannot make progress and flag stiffness
        self.h_min = 1e-13 * max(abs(t_span), 1.0)
        self.h = self._initial_step(t_span)
        self.n_accepted = 0
        self.n_rejected = 0

    def _initial_step(self, t_span: float) -> float:
        f0 = self.f(self.y)
        scale = self.atol + self.rtol * np.abs(self.y)
        d0 = float(np.sqrt(np.mean((np.abs(self.y) / scale) ** 2)))
        d1 = float(np.sqrt(np.mean((np.abs(f0) / scale) ** 2)))
        if d0 < 1e-5 or d1 < 1e-5:
            h0 = 1e-6 * abs(t_span)
        else:
            h0 = 0.01 * d0 / d1
        y1 = self.y + h0 * f0
        f1 = self.f(y1)
        d2 = float(np.sqrt(np.mean((np.abs(f1 - f0) / scale) ** 2))) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6 * abs(t_span), h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        return min(100 * h0, h1, abs(t_span))

    def step(self, t_limit: float) -> tuple[float, np.ndarray]:
        """Advance one accepted step with t_new <= t_limit.

        Returns (t_prev, y_prev) so callers can bracket events inside the
        step that was just taken.
        """
        if t_limit <= self.t:
            raise ValueError("t_limit must exceed current time")
        k = [None] * 7
        while True:
            h_cap = t_limit - self.t
            h = min(self.h, h_cap)
            # underflow only counts when the error controller drove h down;
            # a span-limited step of any size has negligible local error
            if h < self.h_min and h < h_cap:
                raise StiffnessError(self.t)
            capped = h < self.h
            k[0] = self.f(self.y)
            for i in range(1, 7):
                yi = self.y + h * sum(a * ki for a, ki in zip(_DP_A[i], k[:i]))
                k[i] = self.f(yi)
            y_new = self.y + h * sum(b * ki for b, ki in zip(_DP_B, k) if b != 0.0)
            err = h * sum(e * ki for e, ki in zip(_DP_E, k) if e != 0.0)
            enorm = _error_norm(err, self.y, y_new, self.rtol, self.atol)
            if enorm <= 1.0:
                factor = _MAX_FACTOR if enorm == 0.0 else min(
                    _MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * enorm ** -0.2))
                t_prev, y_prev = self.t, self.y
                self.t = self.t + h
                self.y = self.post_step(y_new) if self.post_step is not None else y_new
                if not capped:
                    # keep the natural step size across sampling boundaries
                    self.h = h * factor
                self.n_accepted += 1
                return t_prev, y_prev
            self.h = h * min(1.0, max(_MIN_FACTOR, _SAFETY * enorm ** -0.2))
            self.n_rejected += 1


def _hermitize(y: np.ndarray) -> np.ndarray:
    return 0.5 * (y + np.conj(np.swapaxes(y, -1, -2)))


def _validate_t_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise ValueError("t_grid must be a 1-d array of times")
    if abs(t[0]) > 0.0:
        raise ValueError("t_grid must start at 0")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    return t


def evolve_states(rho0s, H: Optional[Operator], channel: NoiseChannel, t_grid,
                  rtol: float = 1e-8, atol: float = 1e-10,
                  hermitize: bool = True) -> np.ndarray:
    """Integrate a batch of matrices under one generator; shape (nt, nb, d, d).

    This is the vectorized sibling of :func:`evolve`: the same adaptive
    stepper drives all batch members simultaneously (shared step size,
    error controlled over the worst member).  ``hermitize=False`` supports
    propagating non-Hermitian basis matrices of a linear map.
    """
    t = _validate_t_grid(t_grid)
    y0 = np.stack([r.data if isinstance(r, DensityMatrix) else np.asarray(r, dtype=complex)
                   for r in rho0s])
    f = _rhs_function(H, channel)
    post = _hermitize if hermitize else None
    out = np.empty((t.size,) + y0.shape, dtype=complex)
    out[0] = y0
    if t.size == 1:
        return out
    stepper = _AdaptiveStepper(f, t[0], y0, rtol, atol, t_span=t[-1] - t[0], post_step=post)
    for i in range(1, t.size):
        while stepper.t < t[i] - 1e-14 * max(t[-1], 1.0):
            stepper.step(t[i])
        out[i] = stepper.y
    return out


def evolve(rho0: DensityMatrix, H: Optional[Operator], channel: NoiseChannel, t_grid,
           rtol: float = 1e-8, atol: float = 1e-10,
           eig_floor: float = 1e-7) -> EvolutionResult:
    """Adaptive integration of the master equation, sampled on ``t_grid``.

    The state is re-symmetrized, (rho + rho^dag)/2, after every accepted
    step; trace drift over the run must stay below 1e-7 and positivity is
    validated at every sample against ``eig_floor``.
    """
    if H is not None:
        _check_same_space(H.space, rho0.space)
    if channel.space is not None:
        _check_same_space(channel.space, rho0.space)
    t = _validate_t_grid(t_grid)
    f = _rhs_function(H, channel)
    out = [rho0]
    y = np.array(rho0.data)
    drift = 0.0
    n_acc = n_rej = 0
    if t.size > 1:
        stepper = _AdaptiveStepper(f, t[0], y, rtol, atol,
                                   t_span=t[-1] - t[0], post_step=_hermitize)
        for i in range(1, t.size):
            while stepper.t < t[i] - 1e-14 * max(t[-1], 1.0):
                stepper.step(t[i])
            drift = max(drift, abs(np.trace(stepper.y).real - 1.0))
            out.append(DensityMatrix(rho0.space, stepper.y, eig_floor=eig_floor))
        n_acc, n_rej = stepper.n_accepted, stepper.n_rejected
    if drift > 1e-7:
        raise RuntimeError(f"trace drift {drift:.3e} exceeds 1e-7; tighten tolerances")
    stats = {"n_accepted": n_acc, "n_rejected": n_rej, "max_trace_drift": drift,
             "rtol": rtol, "atol": atol}
    return EvolutionResult(times=t, states=tuple(out), stats=stats)


def evolve_fixed_rk4(rho0: DensityMatrix, H: Optional[Operator], channel: NoiseChannel,
                     t_grid, substeps: int = 200,
                     eig_floor: float = 1e-7) -> EvolutionResult:
    """Fixed-step classical RK4 cross-validation route.

    ``substeps`` RK4 steps are taken inside every t_grid interval; running
    it again with doubled substeps provides the independent convergence
    check for the adaptive integrator.
    """
    t = _validate_t_grid(t_grid)
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    f = _rhs_function(H, channel)
    y = np.array(rho0.data)
    out = [rho0]
    for i in range(1, t.size):
        h = (t[i] - t[i - 1]) / substeps
        for _ in range(substeps):
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            y = _hermitize(y)
        out.append(DensityMatrix(rho0.space, y, eig_floor=eig_floor))
    stats = {"n_accepted": substeps * (t.size - 1), "n_rejected": 0,
             "max_trace_drift": abs(np.trace(y).real - 1.0) if t.size > 1 else 0.0,
             "method": "fixed_rk4"}
    return EvolutionResult(times=t, states=tuple(out), stats=stats)


# -- propagator: e^{Lt} on small spaces ------------------------------------

_PADE13_B = (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
             1187353796428800.0, 129060195264000.0, 10559470521600.0,
             670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
             960960.0, 16380.0, 182.0, 1.0)
_PADE13_THETA = 4.25


def _expm(a: np.ndarray) -> np.ndarray:
    """Scaling-and-squaring matrix exponential (degree-13 Pade approximant)."""
    a = np.asarray(a, dtype=complex)
    norm = float(np.linalg.norm(a, 1))
    s = max(0, int(np.ceil(np.log2(norm / _PADE13_THETA)))) if norm > _PADE13_THETA else 0
    a = a / (2.0 ** s)
    b = _PADE13_B
    eye = np.eye(a.shape[0], dtype=complex)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * eye)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * eye)
    p = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        p = p @ p
    return p


def liouvillian_matrix(H: Optional[Operator], channel: NoiseChannel) -> np.ndarray:
    """Generator as a d^2 x d^2 matrix acting on column-stacked matrices."""
    if H is not None:
        d = H.space.dim
    elif channel.space is not None:
        d = channel.space.dim
    else:
        raise ValueError("need at least a Hamiltonian or one jump operator")
    eye = np.eye(d, dtype=complex)
    gen = np.zeros((d * d, d * d), dtype=complex)
    if H is not None:
        gen += -1j * (np.kron(eye, H.data) - np.kron(H.data.T, eye))
    for op, rate in channel.jumps:
        if rate == 0.0:
            continue
        l = op.data
        n = l.conj().T @ l
        gen += (rate / 2.0) * (2.0 * np.kron(l.conj(), l)
                               - np.kron(eye, n) - np.kron(n.T, eye))
    return gen


@dataclass(frozen=True)
class Propagator:
    """e^{Lt} restricted to the generator components reachable from a support."""

    space: SpaceSignature
    t: float
    sel: Optional[np.ndarray]
    block: np.ndarray

    def apply_matrix(self, mat: np.ndarray) -> np.ndarray:
        d = self.space.dim
        v = np.asarray(mat, dtype=complex).reshape(-1, order="F")
        if self.sel is None:
            return (self.block @ v).reshape(d, d, order="F")
        mask = np.zeros(d * d, dtype=bool)
        mask[self.sel] = True
        outside = float(np.abs(v[~mask]).max()) if (~mask).any() else 0.0
        if outside > 1e-12:
            raise ValueError("input state has support outside the propagator block; "
                             "rebuild the propagator with a larger support")
        out = np.zeros(d * d, dtype=complex)
        out[self.sel] = self.block @ v[self.sel]
        return out.reshape(d, d, order="F")

    def apply(self, state: DensityMatrix, eig_floor: float = 1e-7) -> DensityMatrix:
        raw = self.apply_matrix(state.data)
        return DensityMatrix(self.space, 0.5 * (raw + raw.conj().T), eig_floor=eig_floor)


def propagator(H: Optional[Operator], channel: NoiseChannel, t: float,
               support: Optional[Sequence[np.ndarray]] = None,
               max_dim: int = 28) -> Propagator:
    """Matrix exponential of the generator for repeated channel application.

    Only allowed on small spaces (total dimension <= ``max_dim``); larger
    systems must use :func:`evolve`, which never materializes the
    d^2 x d^2 generator.  When ``support`` matrices are given, the
    exponential is taken on the union of generator connected components
    touched by their nonzero entries, which is exact and much cheaper.
    """
    space = H.space if H is not None else channel.space
    if space is None:
        raise ValueError("need at least a Hamiltonian or one jump operator")
    d = space.dim
    if d > max_dim:
        raise ValueError(f"propagator limited to dim <= {max_dim} (got {d}); use evolve()")
    gen = liouvillian_matrix(H, channel)
    sel = None
    if support is not None:
        sel = _component_support(gen, support, d)
        block = _expm(gen[np.ix_(sel, sel)] * float(t))
    else:
        block = _expm(gen * float(t))
    return Propagator(space=space, t=float(t), sel=sel, block=block)


def _component_support(gen: np.ndarray, support: Sequence[np.ndarray], d: int) -> np.ndarray:
    import scipy.sparse as sp
    from scipy.sparse.csgraph import connected_components

    adj = sp.csr_matrix((np.abs(gen) > 0.0).astype(np.int8))
    _, labels = connected_components(adj, directed=False)
    seeds = set()
    for mat in support:
        v = np.asarray(mat, dtype=complex).reshape(-1, order="F")
        seeds.update(labels[np.abs(v) > 1e-14].tolist())
    return np.where(np.isin(labels, sorted(seeds)))[0]


# -- Monte-Carlo wavefunction ------------------------------------------------

_JUMP_NORM_RTOL = 1e-10


def mcwf_trajectory(psi0: Ket, H: Optional[Operator], channel: NoiseChannel, t_grid,
                    seed: int, rtol: float = 1e-8, atol: float = 1e-10) -> Trajectory:
    """One quantum trajectory (first-order MCWF scheme).

    The unnormalized state is integrated under the non-Hermitian drift
    H - (i/2) sum_k rate_k L_k^dag L_k with the same adaptive stepper as
    :func:`evolve`.  A jump fires when the squared norm crosses a uniform
    random threshold; the jump time is located by bisection until the norm
    matches the threshold to 1e-10 relative, the jump channel is drawn with
    probability proportional to rate_k ||L_k psi||^2, and the state is
    renormalized.  The same seed reproduces the trajectory bit for bit.
    """
    if H is not None:
        _check_same_space(H.space, psi0.space)
    if channel.space is not None:
        _check_same_space(channel.space, psi0.space)
    t = _validate_t_grid(t_grid)
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    ops = [op.data for op, _ in channel.jumps]
    rates = [rate for _, rate in channel.jumps]
    drift = np.zeros((psi0.dim, psi0.dim), dtype=complex)
    if H is not None:
        drift += H.data
    for op, rate in zip(ops, rates):
        drift += -0.5j * rate * (op.conj().T @ op)
    mdrift = -1j * drift

    def f(y: np.ndarray) -> np.ndarray:
        return mdrift @ y

    def integrate_to(t0: float, y0: np.ndarray, t1: float) -> np.ndarray:
        if t1 <= t0:
            return y0
        st = _AdaptiveStepper(f, t0, y0, rtol, atol, t_span=max(t1 - t0, 1e-30))
        while st.t < t1 - 1e-15 * max(abs(t1), 1.0):
            st.step(t1)
        return st.y

    span = t[-1] - t[0] if t.size > 1 else 1.0
    psi = np.array(psi0.amplitudes, dtype=complex)
    threshold = rng.uniform()
    kets = [Ket(psi0.space, psi / np.linalg.norm(psi))]
    jump_events: list[tuple[float, int]] = []

    stepper = _AdaptiveStepper(f, t[0], psi, rtol, atol, t_span=max(span, 1e-30))
    for i in range(1, t.size):
        while stepper.t < t[i] - 1e-14 * max(t[-1], 1.0):
            t_prev, y_prev = stepper.step(t[i])
            nrm2 = float(np.vdot(stepper.y, stepper.y).real)
            if nrm2 < threshold:
                t_jump, psi_at = _bisect_jump(integrate_to, t_prev, y_prev,
                                              stepper.t, stepper.y, threshold)
                k_idx = _draw_jump_channel(psi_at, ops, rates, rng)
                jumped = ops[k_idx] @ (psi_at / np.linalg.norm(psi_at))
                jumped /= np.linalg.norm(jumped)
                jump_events.append((t_jump, k_idx))
                threshold = rng.uniform()
                stepper = _AdaptiveStepper(f, t_jump, jumped, rtol, atol,
                                           t_span=max(t[-1] - t_jump, 1e-30))
        kets.append(Ket(psi0.space, stepper.y / np.linalg.norm(stepper.y)))
    return Trajectory(times=t, kets=tuple(kets), jump_events=tuple(jump_events))


def _bisect_jump(integrate_to, t_lo: float, y_lo: np.ndarray,
                 t_hi: float, y_hi: np.ndarray, threshold: float,
                 max_iter: int = 80) -> tuple[float, np.ndarray]:
    """Bisection on the squared-norm threshold crossing inside one step."""
    y_at = y_hi
    t_at = t_hi
    for _ in range(max_iter):
        nrm2 = float(np.vdot(y_at, y_at).real)
        if abs(nrm2 - threshold) <= _JUMP_NORM_RTOL * threshold:
            return t_at, y_at
        t_mid = 0.5 * (t_lo + t_hi)
        if t_mid == t_lo or t_mid == t_hi:
            return t_at, y_at
        y_mid = integrate_to(t_lo, y_lo, t_mid)
        if float(np.vdot(y_mid, y_mid).real) < threshold:
            t_hi = t_mid
        else:
            t_lo, y_lo = t_mid, y_mid
        t_at, y_at = t_mid, y_mid
    return t_at, y_at


def _draw_jump_channel(psi: np.ndarray, ops, rates, rng) -> int:
    weights = np.array([rate * float(np.vdot(op @ psi, op @ psi).real)
                        for op, rate in zip(ops, rates)])
    total = weights.sum()
    if total <= 0.0:
        raise RuntimeError("norm crossed the jump threshold but all jump weights vanish")
    return int(rng.choice(len(ops), p=weights / total))


def ensemble_seeds(master_seed: int, n: int) -> list[int]:
    """Deterministic per-trajectory seeds derived from (master seed, index)."""
    ss = np.random.SeedSequence(master_seed)
    return [int(child.generate_state(1)[0]) for child in ss.spawn(n)]


def mcwf_ensemble(psi0s: Sequence[Ket], H: Optional[Operator], channel: NoiseChannel,
                  t_grid, n_traj: int, master_seed: int,
                  rtol: float = 1e-8, atol: float = 1e-10) -> list[tuple[int, Trajectory]]:
    """Round-robin ensemble over initial states; returns (state index, trajectory)."""
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    seeds = ensemble_seeds(master_seed, n_traj)
    out = []
    for i in range(n_traj):
        which = i % len(psi0s)
        out.append((which, mcwf_trajectory(psi0s[which], H, channel, t_grid,
                                           seed=seeds[i], rtol=rtol, atol=atol)))
    return out


def average_trajectories(trajectories: Sequence[Trajectory],
                         extract: Callable[[Ket], float]) -> EnsembleCurve:
    """Pointwise mean and standard error of an observable over an ensemble."""
    if len(trajectories) == 0:
        raise ValueError("empty trajectory ensemble")
    times = np.asarray(trajectories[0].times)
    for tr in trajectories:
        if tr.times.shape != times.shape or np.any(tr.times != times):
            raise ValueError("trajectories must share one time grid")
    samples = np.stack([tr.observable_series(extract) for tr in trajectories])
    mean = samples.mean(axis=0)
    n = samples.shape[0]
    stderr = (samples.std(axis=0, ddof=1) / np.sqrt(n)) if n > 1 else np.zeros_like(mean)
    return EnsembleCurve(times=times, mean=mean, stderr=stderr, n=n)
