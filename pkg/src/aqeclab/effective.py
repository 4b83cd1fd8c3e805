"""Reduced models of the engineered-dissipation dynamics.

Three layers, each an oracle for the one above:

  * the adiabatically eliminated single-mode master equation
    (gamma_a/2) D[loss] + (gamma_a lambda/2) D[L_eng], lambda = 8 C;
  * its restriction to the first five Fock states, with the coefficient
    tables hard-coded exactly as derived for the three recovery variants
    (equal-weight "rl", unequal-weight "naive", loss-compensated
    "kl_modified") and the rho_00 row closed via trace conservation;
  * closed-form first-order solutions in 1/lambda and gamma_a t / lambda
    for the rl and kl_modified variants, plus the lambda -> infinity
    dephasing exponents.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .codes import (
    CodePair,
    kl_compensator,
    naive_jump,
    rl_code,
    shifted_fock_code,
)
from .dynamics import NoiseChannel, _expm, lindblad_rhs
from .fidelity import (
    BlochPoint,
    bloch_state,
    break_even_mean_fidelity,
    mean_fidelity_six,
    state_fidelity,
)
from .fock import DensityMatrix, Operator, annihilation, density_from_ket
from .models import effective_recovery_model, fixed_time_channel, full_recovery_model

VARIANTS = ("rl", "naive", "kl_modified")

SQRT8 = 2.0 * math.sqrt(2.0)
ASYMPTOTIC_LAMBDA = 100.0


class RegimeWarning(UserWarning):
    """First-order formulas evaluated outside their asymptotic regime."""


@dataclass(frozen=True)
class EffectiveParams:
    lam: float
    gamma_a: float

    def __post_init__(self) -> None:
        if self.lam <= 0.0:
            raise ValueError("lambda must be > 0")
        if self.gamma_a <= 0.0:
            raise ValueError("gamma_a must be > 0")

    @property
    def cooperativity(self) -> float:
        return self.lam / 8.0


def effective_lambda(g: float, gamma_a: float, gamma_b: float) -> EffectiveParams:
    """Engineered-dissipation strength lambda = 8 g^2 / (gamma_a gamma_b)."""
    if g <= 0.0 or gamma_a <= 0.0 or gamma_b <= 0.0:
        raise ValueError("all rates must be > 0")
    lam = 8.0 * g * g / (gamma_a * gamma_b)
    return EffectiveParams(lam=lam, gamma_a=gamma_a)


def effective_rhs(rho: DensityMatrix, params: EffectiveParams, L: Operator,
                  loss_op: Optional[Operator] = None) -> np.ndarray:
    """RHS of the eliminated master equation (no Hamiltonian, two dissipators)."""
    loss = loss_op if loss_op is not None else annihilation(rho.dim)
    channel = NoiseChannel(((loss, params.gamma_a), (L, params.gamma_a * params.lam)))
    return lindblad_rhs(None, channel, rho)


@dataclass(frozen=True)
class FiveLevelState:
    """Tracked elements of the 5-level restriction.

    The restriction closes on the diagonal plus the (2,4) and (1,3)
    coherences; all other matrix elements are generated downstream but never
    feed back.  ``derivative`` marks tangent vectors, for which the
    probability constraints do not apply.
    """

    rho00: float
    rho11: float
    rho22: float
    rho33: float
    rho44: float
    rho24: complex
    rho42: complex
    rho13: complex
    rho31: complex
    derivative: bool = False

    def __post_init__(self) -> None:
        if abs(self.rho42 - np.conj(self.rho24)) > 1e-12:
            raise ValueError("rho42 must equal conj(rho24)")
        if abs(self.rho31 - np.conj(self.rho13)) > 1e-12:
            raise ValueError("rho31 must equal conj(rho13)")
        if not self.derivative:
            diag = (self.rho00, self.rho11, self.rho22, self.rho33, self.rho44)
            if min(diag) < -1e-9:
                raise ValueError(f"negative population {min(diag)!r}")
            if sum(diag) > 1.0 + 1e-8:
                raise ValueError(f"populations sum to {sum(diag)!r} > 1")

    def to_vector(self) -> np.ndarray:
        return np.array([self.rho00, self.rho11, self.rho22, self.rho33, self.rho44,
                         self.rho24, self.rho42, self.rho13, self.rho31], dtype=complex)

    @classmethod
    def from_vector(cls, v: np.ndarray, derivative: bool = False) -> "FiveLevelState":
        return cls(rho00=float(v[0].real), rho11=float(v[1].real), rho22=float(v[2].real),
                   rho33=float(v[3].real), rho44=float(v[4].real),
                   rho24=complex(v[5]), rho42=complex(v[6]),
                   rho13=complex(v[7]), rho31=complex(v[8]), derivative=derivative)

    @classmethod
    def from_density(cls, rho: DensityMatrix) -> "FiveLevelState":
        if rho.dim < 5:
            raise ValueError("need at least 5 Fock levels")
        d = rho.data
        return cls(rho00=float(d[0, 0].real), rho11=float(d[1, 1].real),
                   rho22=float(d[2, 2].real), rho33=float(d[3, 3].real),
                   rho44=float(d[4, 4].real),
                   rho24=complex(d[2, 4]), rho42=complex(d[4, 2]),
                   rho13=complex(d[1, 3]), rho31=complex(d[3, 1]))

    def to_matrix(self, dim: int = 5) -> np.ndarray:
        """Tracked elements placed in a dim x dim matrix, zeros elsewhere."""
        if dim < 5:
            raise ValueError("need at least 5 Fock levels")
        out = np.zeros((dim, dim), dtype=complex)
        for i, v in enumerate((self.rho00, self.rho11, self.rho22, self.rho33, self.rho44)):
            out[i, i] = v
        out[2, 4] = self.rho24
        out[4, 2] = self.rho42
        out[1, 3] = self.rho13
        out[3, 1] = self.rho31
        return out


def five_level_generator(lam: float, variant: str) -> np.ndarray:
    """Generator of the tracked-element vector, in units of gamma_a.

    Vector ordering: (rho00, rho11, rho22, rho33, rho44, rho24, rho42,
    rho13, rho31).  The printed tables omit the rho00 row; it is recovered
    from trace conservation (drho00/dt = gamma_a rho11 for every variant).
    """
    lam = float(lam)
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    gen = np.zeros((9, 9), dtype=complex)
    if variant == "rl":
        diag_rows = {
            0: {1: 2.0},
            1: {2: 4.0, 1: -2.0 - lam},
            2: {3: 6.0, 2: -4.0, 1: lam},
            3: {4: 8.0, 3: -6.0 - lam},
            4: {4: -8.0, 3: lam},
        }
        coh = {5: {5: -6.0, 7: lam}, 7: {5: 2.0 * SQRT8, 7: -4.0 - lam}}
    elif variant == "naive":
        diag_rows = {
            0: {1: 2.0},
            1: {2: 4.0, 1: -2.0 - 4.0 * lam / 3.0},
            2: {3: 6.0, 2: -4.0, 1: 4.0 * lam / 3.0},
            3: {4: 8.0, 3: -6.0 - 2.0 * lam / 3.0},
            4: {4: -8.0, 3: 2.0 * lam / 3.0},
        }
        coh = {5: {5: -6.0, 7: 2.0 * math.sqrt(2.0) * lam / 3.0},
               7: {5: 2.0 * SQRT8, 7: -4.0 - lam}}
    else:  # kl_modified
        diag_rows = {
            0: {1: 2.0},
            1: {2: 8.0, 1: -2.0 - lam},
            2: {3: 6.0, 2: -8.0, 1: lam},
            3: {4: 8.0, 3: -6.0 - lam},
            4: {4: -8.0, 3: lam},
        }
        coh = {5: {5: -8.0, 7: lam}, 7: {5: 8.0, 7: -4.0 - lam}}
    for row, entries in diag_rows.items():
        for col, val in entries.items():
            gen[row, col] = 0.5 * val
    for row, entries in coh.items():
        for col, val in entries.items():
            gen[row, col] = 0.5 * val
            # conjugate coherence block: rho42/rho31 rows mirror rho24/rho13
            gen[row + 1, col + 1] = 0.5 * val
    return gen


def five_level_rhs(state: FiveLevelState, lam: float, variant: str) -> FiveLevelState:
    """Time derivative of the tracked elements, in units of gamma_a."""
    gen = five_level_generator(lam, variant)
    return FiveLevelState.from_vector(gen @ state.to_vector(), derivative=True)


def integrate_five_level(initial: FiveLevelState, lam: float, gamma_a_t: float,
                         variant: str) -> FiveLevelState:
    """Exact propagation of the linear tracked-element system (matrix exponential)."""
    gen = five_level_generator(lam, variant)
    vec = _expm(gen * float(gamma_a_t)) @ initial.to_vector()
    return FiveLevelState.from_vector(vec)


def asymptotic_regime(lam: float) -> bool:
    return float(lam) >= ASYMPTOTIC_LAMBDA


def analytic_elements(initial: FiveLevelState, lam: float, gamma_a_t: float,
                      variant: str) -> FiveLevelState:
    """First-order closed-form solution, dropping O(1/lambda^2) remainders.

    Available for the ``rl`` and ``kl_modified`` variants (the unequal-weight
    recovery has no published closed form; use :func:`integrate_five_level`).
    Outside the asymptotic regime (lambda < 100) a :class:`RegimeWarning` is
    emitted and the formulas are evaluated regardless.
    """
    lam = float(lam)
    t = float(gamma_a_t)
    if lam <= 0.0:
        raise ValueError("lambda must be > 0")
    if not asymptotic_regime(lam):
        warnings.warn(f"lambda = {lam} below the asymptotic regime; "
                      "first-order formulas are unreliable", RegimeWarning)
    if variant == "rl":
        e_slow = math.exp(-4.0 * t / lam)
        e_fast = math.exp(-24.0 * t / lam)
        relax = e_slow - e_fast
        p00 = (1.0 - (6.0 / 5.0 + 48.0 / (25.0 * lam)) * initial.rho44 * relax
               - initial.rho22 * e_slow - initial.rho44 * e_fast)
        p11 = (24.0 / (5.0 * lam) * initial.rho44 * relax
               + 4.0 / lam * initial.rho22 * e_slow)
        p22 = ((6.0 / 5.0 - 72.0 / (25.0 * lam)) * initial.rho44 * relax
               + (1.0 - 4.0 / lam) * initial.rho22 * e_slow)
        p33 = 8.0 / lam * initial.rho44 * e_fast
        p44 = (1.0 - 8.0 / lam) * initial.rho44 * e_fast
        coh = math.exp(4.0 * (math.sqrt(2.0) - 4.0) * t / lam
                       + (2.0 * math.sqrt(2.0) - 3.0) * t)
        c24 = (1.0 - 4.0 * math.sqrt(2.0) / lam) * initial.rho24 * coh
        c13 = 4.0 * math.sqrt(2.0) / lam * initial.rho24 * coh
        c42 = (1.0 - 4.0 * math.sqrt(2.0) / lam) * initial.rho42 * coh
        c31 = 4.0 * math.sqrt(2.0) / lam * initial.rho42 * coh
    elif variant == "kl_modified":
        e_slow = math.exp(-8.0 * t / lam)
        e_fast = math.exp(-24.0 * t / lam)
        e_coh = math.exp(-16.0 * t / lam)
        relax = e_slow - e_fast
        p00 = (1.0 - (3.0 / lam + 1.5) * initial.rho44 * relax
               - initial.rho44 * e_fast - initial.rho22 * e_slow)
        p11 = (12.0 / lam * initial.rho44 * relax
               + 8.0 / lam * initial.rho22 * e_slow)
        # rho22 amplitude is time independent at first order, mirroring the
        # (1 - 4/lam) structure of the equal-weight variant; the exact
        # five-level propagator confirms (1 - 8/lam) to O(1/lam^2)
        p22 = ((1.5 - 9.0 / lam) * initial.rho44 * relax
               + (1.0 - 8.0 / lam) * initial.rho22 * e_slow)
        p33 = 8.0 / lam * initial.rho44 * e_fast
        p44 = (1.0 - 8.0 / lam) * initial.rho44 * e_fast
        c24 = (1.0 - 8.0 / lam) * initial.rho24 * e_coh
        c13 = 8.0 / lam * initial.rho24 * e_coh
        c42 = (1.0 - 8.0 / lam) * initial.rho42 * e_coh
        c31 = 8.0 / lam * initial.rho42 * e_coh
    elif variant == "naive":
        raise ValueError("no closed-form first-order solution for the unequal-weight "
                         "recovery; integrate the five-level system instead")
    else:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return FiveLevelState(rho00=p00, rho11=p11, rho22=p22, rho33=p33, rho44=p44,
                          rho24=c24, rho42=c42, rho13=c13, rho31=c31, derivative=True)


def coherence_decay_rate(lam: float, variant: str) -> float:
    """Slow decay rate (in units gamma_a) of the logical (2,4) coherence.

    The coherence pair (rho24, rho13) evolves under a closed 2x2 linear
    block; the eigenvalue closest to zero sets the residual dephasing.
    As lambda -> infinity this tends to 3 - 2 sqrt(2) for the equal-weight
    recovery, 1/3 for the unequal-weight one, and 0 for the compensated
    loss operator.
    """
    gen = five_level_generator(lam, variant)
    block = np.array([[gen[5, 5], gen[5, 7]],
                      [gen[7, 5], gen[7, 7]]])
    eigs = np.linalg.eigvals(block)
    slow = eigs[np.argmax(eigs.real)]
    return float(-slow.real)


def limit_density(initial: DensityMatrix, gamma_a_t: float, u: float) -> DensityMatrix:
    """Strong-pumping limit: populations frozen, coherence damped by e^{-u t}.

    The initial state must be supported on the {|2>, |4>} code space.
    """
    d = initial.data
    dim = initial.dim
    if dim < 5:
        raise ValueError("need at least 5 Fock levels")
    mask = np.zeros((dim, dim), dtype=bool)
    for i in (2, 4):
        for j in (2, 4):
            mask[i, j] = True
    outside = float(np.abs(d[~mask]).max())
    if outside > 1e-12:
        raise ValueError(f"initial state has support outside the code space ({outside:.3e})")
    damp = math.exp(-float(u) * float(gamma_a_t))
    out = np.zeros_like(d)
    out[2, 2] = d[2, 2]
    out[4, 4] = d[4, 4]
    out[2, 4] = d[2, 4] * damp
    out[4, 2] = d[4, 2] * damp
    return DensityMatrix(initial.space, out)


def mean_jump_probability(m: int, gamma_a: float) -> float:
    """Code-space-averaged single-photon jump rate (m+1) gamma_a."""
    m = int(m)
    if m < 0:
        raise ValueError("m must be >= 0")
    return (m + 1) * float(gamma_a)


# -- parameter sweeps ----------------------------------------------------------

@dataclass(frozen=True)
class ShiftedSweepPoint:
    m: int
    mean_fidelity: float
    equator_fidelity: float
    valid: bool


def shifted_code_sweep(m_values: Sequence[int], g: float, gamma_a: float,
                       gamma_b: float, t: float) -> list[ShiftedSweepPoint]:
    """Full-model mean fidelity of the shifted pairs |m>, |m+2> at time t.

    A point is flagged invalid when its worst equatorial state fidelity
    falls below the break-even mean at the same exposure gamma_a * t (the
    vacuum-containing m = 0 pair fails this test; its recovery acts on the
    |2> branch only).
    """
    be = break_even_mean_fidelity(gamma_a * t)
    out = []
    for m in m_values:
        code = shifted_fock_code(int(m))
        model = full_recovery_model(code, g=g, gamma_a=gamma_a, gamma_b=gamma_b)
        channel = fixed_time_channel(model, t, code=code, method="propagator")
        fbar = mean_fidelity_six(channel, code)
        feq = min(
            state_fidelity(
                rho0 := density_from_ket(bloch_state(code, BlochPoint(math.pi / 2.0, phi))),
                channel(rho0))
            for phi in (0.0, math.pi / 2.0, math.pi, 3.0 * math.pi / 2.0))
        out.append(ShiftedSweepPoint(m=int(m), mean_fidelity=fbar,
                                     equator_fidelity=feq, valid=bool(feq >= be)))
    return out


def lambda_sweep(lams: Sequence[float], t: float, code: Optional[CodePair] = None,
                 loss_op: Optional[Operator] = None) -> list[tuple[float, float]]:
    """Mean fidelity of the eliminated model at time t for each lambda."""
    code = code if code is not None else rl_code()
    out = []
    for lam in lams:
        model = effective_recovery_model(code, lam=float(lam), loss_op=loss_op)
        channel = fixed_time_channel(model, t, code=code, method="propagator")
        out.append((float(lam), mean_fidelity_six(channel, code)))
    return out


def kl_compensated_sweep(lams: Sequence[float], t: float) -> list[tuple[float, float, float]]:
    """(lambda, mean F with compensated loss a + a1, mean F with bare loss a)."""
    code = rl_code()
    comp_loss = annihilation(code.dim) + kl_compensator(code.dim)
    rows = []
    for lam in lams:
        modified = lambda_sweep([lam], t, code=code, loss_op=comp_loss)[0][1]
        plain = lambda_sweep([lam], t, code=code)[0][1]
        rows.append((float(lam), modified, plain))
    return rows


def naive_vs_equal_weight_curves(lam: float, t_grid) -> tuple[np.ndarray, np.ndarray]:
    """Mean-fidelity curves of the two recovery operators at the same lambda."""
    from .fidelity import mean_fidelity_curve

    code = rl_code()
    model_eq = effective_recovery_model(code, lam=float(lam))
    model_nv = effective_recovery_model(code, lam=float(lam), jump=naive_jump(code.dim))
    curve_eq = mean_fidelity_curve(model_eq, code, t_grid)
    curve_nv = mean_fidelity_curve(model_nv, code, t_grid)
    return curve_eq.mean, curve_nv.mean
