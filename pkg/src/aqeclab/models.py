"""Assembly of the simulated systems: loss-plus-recovery model and the
adiabatically eliminated single-mode form.

The full model couples the encoding mode to a lossy auxiliary qubit through
the recovery Hamiltonian g (L_o sigma_+ + L_o^dag sigma_-), where L_o carries
unit branch weights (:func:`aqeclab.codes.recovery_coupling`); photon loss on
the mode (rate gamma_a) and qubit decay (rate gamma_b) are the dissipators.
Eliminating the qubit for gamma_b >> g, gamma_a yields the single-mode master
equation with dissipators (gamma_a/2) D[loss] + (gamma_a lambda/2) D[L_eng],
lambda = 8 g^2 / (gamma_a gamma_b), with the trace-normalized L_eng.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .codes import (
    CodePair,
    engineered_jump,
    has_vacuum_branch,
    recovery_coupling,
    single_branch_coupling,
    single_branch_jump,
)
from .dynamics import NoiseChannel, evolve, propagator
from .fock import (
    DensityMatrix,
    Operator,
    SpaceSignature,
    annihilation,
    identity,
    qubit_lowering,
    tensor,
)

Channel = Callable[[DensityMatrix], DensityMatrix]


@dataclass(frozen=True)
class SystemModel:
    """Hamiltonian + dissipators together with the encoding-mode embedding.

    The encoding mode is always the first tensor factor.  ``ancilla``
    holds the amplitudes of the ancilla rest state (ground/vacuum), or None
    for single-mode models.
    """

    H: Optional[Operator]
    channel: NoiseChannel
    mode_space: SpaceSignature
    full_space: SpaceSignature
    ancilla: Optional[np.ndarray]

    def embed_matrix(self, mat_mode: np.ndarray) -> np.ndarray:
        if self.ancilla is None:
            return np.asarray(mat_mode, dtype=complex)
        anc = np.outer(self.ancilla, self.ancilla.conj())
        return np.kron(np.asarray(mat_mode, dtype=complex), anc)

    def reduce_matrix(self, mat_full: np.ndarray) -> np.ndarray:
        if self.ancilla is None:
            return np.asarray(mat_full, dtype=complex)
        dm = self.mode_space.dim
        da = self.full_space.dim // dm
        resh = np.asarray(mat_full, dtype=complex).reshape(dm, da, dm, da)
        return np.einsum("iaja->ij", resh)


def loss_only_model(dim: int, gamma_a: float) -> SystemModel:
    """Bare single-photon loss on one mode (the break-even setting)."""
    a = annihilation(dim)
    channel = NoiseChannel(((a, float(gamma_a)),))
    return SystemModel(H=None, channel=channel, mode_space=a.space,
                       full_space=a.space, ancilla=None)


def full_recovery_model(code: CodePair, g: float, gamma_a: float, gamma_b: float) -> SystemModel:
    """Mode x qubit model: H = g(L_o sigma_+ + h.c.), loss + qubit decay."""
    dim = code.dim
    lo = single_branch_coupling(code) if has_vacuum_branch(code) else recovery_coupling(code)
    sm = qubit_lowering()
    h = float(g) * (tensor(lo, sm.dag()) + tensor(lo.dag(), sm))
    h = Operator(h.space, h.data, hermitian=True)
    a_full = tensor(annihilation(dim), identity(2))
    sm_full = tensor(identity(dim), sm)
    channel = NoiseChannel(((a_full, float(gamma_a)), (sm_full, float(gamma_b))))
    ancilla = np.array([1.0, 0.0], dtype=complex)
    return SystemModel(H=h, channel=channel, mode_space=code.space,
                       full_space=h.space, ancilla=ancilla)


def effective_recovery_model(code: CodePair, lam: float, gamma_a: float = 1.0,
                             loss_op: Optional[Operator] = None,
                             jump: Optional[Operator] = None) -> SystemModel:
    """Single-mode reduced model: (gamma_a/2) D[loss] + (gamma_a lam/2) D[L_eng]."""
    if lam < 0.0:
        raise ValueError("lambda must be >= 0")
    loss = loss_op if loss_op is not None else annihilation(code.dim)
    if jump is None:
        jump = single_branch_jump(code) if has_vacuum_branch(code) else engineered_jump(code)
    channel = NoiseChannel(((loss, float(gamma_a)), (jump, float(gamma_a) * float(lam))))
    return SystemModel(H=None, channel=channel, mode_space=code.space,
                       full_space=code.space, ancilla=None)


def fixed_time_channel(model: SystemModel, t: float, code: Optional[CodePair] = None,
                       method: str = "propagator",
                       rtol: float = 1e-8, atol: float = 1e-10,
                       eig_floor: float = 1e-7) -> Channel:
    """Closure mapping an encoding-mode density matrix to its image at time t.

    ``method='propagator'`` exponentiates the generator once (restricted to
    the components reachable from the code space when ``code`` is given) and
    is the fast path for many initial states; ``method='evolve'`` integrates
    each input with the adaptive stepper.
    """
    if method == "evolve":
        def channel_fn(rho: DensityMatrix) -> DensityMatrix:
            full0 = DensityMatrix(model.full_space, model.embed_matrix(rho.data),
                                  eig_floor=rho.eig_floor)
            res = evolve(full0, model.H, model.channel, np.array([0.0, float(t)]),
                         rtol=rtol, atol=atol, eig_floor=eig_floor)
            red = model.reduce_matrix(res.states[-1].data)
            return DensityMatrix(model.mode_space, 0.5 * (red + red.conj().T),
                                 eig_floor=eig_floor)
        return channel_fn
    if method != "propagator":
        raise ValueError(f"unknown channel method {method!r}")
    support = None
    if code is not None:
        words = [code.zero_logical.amplitudes, code.one_logical.amplitudes]
        support = [model.embed_matrix(np.outer(u, v.conj())) for u in words for v in words]
    prop = propagator(model.H, model.channel, float(t), support=support)

    def channel_fn(rho: DensityMatrix) -> DensityMatrix:
        out = prop.apply_matrix(model.embed_matrix(rho.data))
        red = model.reduce_matrix(out)
        return DensityMatrix(model.mode_space, 0.5 * (red + red.conj().T),
                             eig_floor=eig_floor)

    return channel_fn
