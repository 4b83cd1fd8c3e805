"""aqeclab: simulation lab for autonomous quantum error correction with
bosonic codes.

Subsystems: operator algebra (:mod:`aqeclab.fock`), master-equation and
trajectory integrators (:mod:`aqeclab.dynamics`), codeword constructions
(:mod:`aqeclab.codes`), fidelity metrics (:mod:`aqeclab.fidelity`), reduced
analytic models (:mod:`aqeclab.effective`), code search
(:mod:`aqeclab.rlsearch`), the hardware-level coupling model
(:mod:`aqeclab.hardware`) and the experiment runner
(:mod:`aqeclab.experiments`, CLI in :mod:`aqeclab.cli`).
"""

__version__ = "0.1.0"

from .fock import (
    DensityMatrix,
    Ket,
    Operator,
    SpaceSignature,
    annihilation,
    creation,
    density_from_ket,
    expectation,
    fock_ket,
    identity,
    number,
    partial_trace,
    projector,
    qubit_lowering,
    qubit_raising,
    tensor,
)
from .dynamics import (
    EnsembleCurve,
    EvolutionResult,
    NoiseChannel,
    StiffnessError,
    Trajectory,
    average_trajectories,
    evolve,
    evolve_fixed_rk4,
    lindblad_rhs,
    mcwf_trajectory,
    propagator,
)
from .codes import (
    CodePair,
    KLReport,
    binomial_code,
    break_even_pair,
    code_pair_from_coeffs,
    engineered_jump,
    hamiltonian_distance,
    kl_check,
    kl_compensator,
    logical_paulis,
    naive_jump,
    rl_code,
    shifted_fock_code,
)
from .fidelity import (
    BlochPoint,
    FidelityCurve,
    break_even_mean_fidelity,
    coarse_grained,
    mean_fidelity_six,
    mean_fidelity_sphere,
    rl_analytic_mean_fidelity,
    rl_analytic_state_fidelity,
    state_fidelity,
)
from .effective import (
    EffectiveParams,
    FiveLevelState,
    analytic_elements,
    effective_lambda,
    effective_rhs,
    five_level_rhs,
    limit_density,
    mean_jump_probability,
    shifted_code_sweep,
)
from .hardware import HardwareConfig, build_heff0, build_heff1, simulate_hardware
