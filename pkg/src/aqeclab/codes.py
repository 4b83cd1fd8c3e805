"""Codeword families, engineered recovery operators, logical Paulis and
Knill-Laflamme diagnostics.

Codeword ordering convention: ``zero_logical`` lives on the |4n> Fock ladder
and ``one_logical`` on |4n+2>.  For the two-Fock-state code found by the RL
search this fixes zero_logical = |4>, one_logical = |2>.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .fock import (
    Ket,
    Operator,
    SpaceSignature,
    annihilation,
    as_space,
    identity,
    number,
)

ORTHOGONALITY_ATOL = 1e-10
COEFF_NORM_ATOL = 1e-10
JUMP_TRACE_ATOL = 1e-12
DISTANCE_THRESHOLD = 1e-10

SQRT3_MEAN_PHOTON_ATOL = 1e-6


@dataclass(frozen=True)
class CodePair:
    """Two logical codewords spanning the protected subspace of one mode."""

    zero_logical: Ket
    one_logical: Ket

    def __post_init__(self) -> None:
        if self.zero_logical.space.factors != self.one_logical.space.factors:
            raise ValueError("codewords must live in the same space")
        overlap = abs(self.zero_logical.inner(self.one_logical))
        if overlap > ORTHOGONALITY_ATOL:
            raise ValueError(f"codewords not orthogonal: |<0L|1L>| = {overlap:.3e}")

    @property
    def space(self) -> SpaceSignature:
        return self.zero_logical.space

    @property
    def dim(self) -> int:
        return self.zero_logical.dim


@dataclass(frozen=True)
class ErrorBasis:
    """Normalized single-photon-loss images of the codewords."""

    zero_error: Ket
    one_error: Ket
    xi0: float
    xi1: float


@dataclass(frozen=True)
class KLReport:
    """Knill-Laflamme diagnostics over a set of error operators.

    ``alpha`` maps an ordered error pair (j, i) to the 2x2 logical matrix
    with entries <u_L| E_j^dag E_i |v_L>.  Exact correctability requires
    every such matrix to be a multiple of the identity; the violations
    quantify the worst deviation.
    """

    alpha: dict[tuple[int, int], np.ndarray]
    offdiag_violation: float
    diag_violation: float


def code_pair_from_coeffs(c0: Sequence[float], c1: Sequence[float], truncation: int) -> CodePair:
    """Codewords on the |4n> / |4n+2> ladders from real coefficient vectors.

    ``truncation`` is the number of Fock levels of the mode; it must
    accommodate the highest populated index.
    """
    c0 = np.asarray(c0, dtype=float)
    c1 = np.asarray(c1, dtype=float)
    if c0.ndim != 1 or c1.ndim != 1 or c0.size < 1 or c1.size < 1:
        raise ValueError("coefficient vectors must be non-empty and 1-d")
    for name, c in (("c0", c0), ("c1", c1)):
        nrm = float(np.linalg.norm(c))
        if abs(nrm - 1.0) > COEFF_NORM_ATOL:
            raise ValueError(f"{name} must have unit 2-norm, got {nrm!r}")
    truncation = int(truncation)
    highest = max(4 * (c0.size - 1), 4 * (c1.size - 1) + 2)
    if truncation <= highest:
        raise ValueError(f"truncation {truncation} too small for highest Fock index {highest}")
    amp0 = np.zeros(truncation, dtype=complex)
    amp0[0:4 * c0.size:4] = c0
    amp1 = np.zeros(truncation, dtype=complex)
    amp1[2:4 * (c1.size - 1) + 3:4] = c1
    space = as_space(truncation)
    return CodePair(Ket(space, amp0), Ket(space, amp1))


def rl_code(truncation: int = 7) -> CodePair:
    """The two-Fock-state code |0_L> = |4>, |1_L> = |2>."""
    return code_pair_from_coeffs([0.0, 1.0], [1.0], truncation)


def binomial_code(truncation: int = 7) -> CodePair:
    """Lowest-order binomial code |0_L> = (|0>+|4>)/sqrt(2), |1_L> = |2>."""
    s = 1.0 / math.sqrt(2.0)
    return code_pair_from_coeffs([s, s], [1.0], truncation)


def break_even_pair(truncation: int = 4) -> CodePair:
    """Trivial |0>, |1> encoding used as the no-correction baseline."""
    space = as_space(truncation)
    amp0 = np.zeros(truncation, dtype=complex)
    amp0[0] = 1.0
    amp1 = np.zeros(truncation, dtype=complex)
    amp1[1] = 1.0
    return CodePair(Ket(space, amp0), Ket(space, amp1))


def shifted_fock_code(m: int, truncation: Optional[int] = None) -> CodePair:
    """Shifted two-Fock-state pair |0_L> = |m+2>, |1_L> = |m>.

    m = 2 reproduces the RL code.  m = 0 contains the vacuum codeword, so
    its error basis is only defined on the |2> branch (see
    :func:`single_branch_jump`) and :func:`has_vacuum_branch` flags it.
    """
    m = int(m)
    if m < 0:
        raise ValueError("m must be >= 0")
    if truncation is None:
        truncation = m + 5
    truncation = int(truncation)
    if truncation < m + 5:
        raise ValueError(f"truncation must be >= m+5 = {m + 5}")
    space = as_space(truncation)
    amp0 = np.zeros(truncation, dtype=complex)
    amp0[m + 2] = 1.0
    amp1 = np.zeros(truncation, dtype=complex)
    amp1[m] = 1.0
    return CodePair(Ket(space, amp0), Ket(space, amp1))


def mean_photon_number(code: CodePair) -> float:
    """Code-space average photon number, (n0 + n1)/2."""
    n = number(code.dim).data
    n0 = float(np.vdot(code.zero_logical.amplitudes, n @ code.zero_logical.amplitudes).real)
    n1 = float(np.vdot(code.one_logical.amplitudes, n @ code.one_logical.amplitudes).real)
    return 0.5 * (n0 + n1)


def _xi(codeword: Ket) -> float:
    n = number(codeword.dim).data
    return math.sqrt(float(np.vdot(codeword.amplitudes, n @ codeword.amplitudes).real))


def has_vacuum_branch(code: CodePair) -> bool:
    """True when a codeword has no photon content (error basis undefined)."""
    return _xi(code.zero_logical) == 0.0 or _xi(code.one_logical) == 0.0


def error_basis(code: CodePair) -> ErrorBasis:
    """Normalized states a|u_L>/xi_u reached after one photon loss."""
    a = annihilation(code.dim).data
    xi0 = _xi(code.zero_logical)
    xi1 = _xi(code.one_logical)
    if xi0 == 0.0 or xi1 == 0.0:
        raise ValueError("codeword with zero photon content has no error basis")
    e0 = a @ code.zero_logical.amplitudes / xi0
    e1 = a @ code.one_logical.amplitudes / xi1
    return ErrorBasis(Ket(code.space, e0), Ket(code.space, e1), xi0=xi0, xi1=xi1)


def _raw_recovery(code: CodePair) -> np.ndarray:
    basis = error_basis(code)
    return (np.outer(code.zero_logical.amplitudes, basis.zero_error.amplitudes.conj())
            + np.outer(code.one_logical.amplitudes, basis.one_error.amplitudes.conj()))


def engineered_jump(code: CodePair) -> Operator:
    """Trace-normalized recovery jump |0_L><0_er| + |1_L><1_er|.

    The returned operator satisfies Tr[L^dag L] = 1 to 1e-12 and enters the
    engineered dissipator of the reduced master equation.
    """
    raw = _raw_recovery(code)
    norm = math.sqrt(float(np.trace(raw.conj().T @ raw).real))
    return Operator(code.space, raw / norm)


def recovery_coupling(code: CodePair) -> Operator:
    """Unnormalized recovery operator with unit branch weights.

    This is the operator that enters the recovery Hamiltonian
    g (L_o sigma_+ + L_o^dag sigma_-): the sideband control amplitudes are
    chosen so that each error-to-code branch carries the same unit weight
    (for the RL code, |2><1| + |4><3|).  The dissipator-side operator is the
    trace-normalized :func:`engineered_jump`.
    """
    return Operator(code.space, _raw_recovery(code))


def single_branch_jump(code: CodePair) -> Operator:
    """Recovery restricted to codewords with photon content, renormalized.

    Supports the m = 0 shifted pair, where only the |2> branch has an error
    state; the result there is the single term |2><1|.
    """
    a = annihilation(code.dim).data
    raw = np.zeros((code.dim, code.dim), dtype=complex)
    for word in (code.zero_logical, code.one_logical):
        xi = _xi(word)
        if xi > 0.0:
            err = a @ word.amplitudes / xi
            raw += np.outer(word.amplitudes, err.conj())
    norm = math.sqrt(float(np.trace(raw.conj().T @ raw).real))
    if norm == 0.0:
        raise ValueError("no codeword has photon content; recovery undefined")
    return Operator(code.space, raw / norm)


def single_branch_coupling(code: CodePair) -> Operator:
    """Unit-weight analogue of :func:`single_branch_jump` for the Hamiltonian."""
    a = annihilation(code.dim).data
    raw = np.zeros((code.dim, code.dim), dtype=complex)
    for word in (code.zero_logical, code.one_logical):
        xi = _xi(word)
        if xi > 0.0:
            err = a @ word.amplitudes / xi
            raw += np.outer(word.amplitudes, err.conj())
    if np.abs(raw).max() == 0.0:
        raise ValueError("no codeword has photon content; recovery undefined")
    return Operator(code.space, raw)


def naive_jump(truncation: int = 7) -> Operator:
    """Alternative recovery sqrt(2)|2><1| + |4><3| normalized by sqrt(3).

    It returns error states to the code space undisturbed, but weights the
    two branches unequally, so the no-jump drift between recovery events
    dephases the encoded information faster than the equal-weight operator.
    """
    truncation = int(truncation)
    if truncation < 5:
        raise ValueError("need at least 5 Fock levels")
    raw = np.zeros((truncation, truncation), dtype=complex)
    raw[2, 1] = math.sqrt(2.0)
    raw[4, 3] = 1.0
    return Operator(as_space(truncation), raw / math.sqrt(3.0))


def kl_compensator(truncation: int = 7) -> Operator:
    """Loss-compensation term (2 - sqrt(2)) |1><2|.

    Added to the bare lowering operator it equalizes the error probabilities
    of the two RL codewords, so the Knill-Laflamme condition holds exactly.
    """
    truncation = int(truncation)
    if truncation < 3:
        raise ValueError("need at least 3 Fock levels")
    mat = np.zeros((truncation, truncation), dtype=complex)
    mat[1, 2] = 2.0 - math.sqrt(2.0)
    return Operator(as_space(truncation), mat)


@dataclass(frozen=True)
class LogicalPaulis:
    s0: Operator
    sx: Operator
    sy: Operator
    sz: Operator


def logical_paulis(code: CodePair) -> LogicalPaulis:
    """Pauli operators on the code space.

    sigma_x = |0_L><1_L| + |1_L><0_L|, sigma_y = i(|0_L><1_L| - |1_L><0_L|),
    sigma_z = |1_L><1_L| - |0_L><0_L|; they satisfy the Pauli algebra
    restricted to the code space.
    """
    z = code.zero_logical.amplitudes
    o = code.one_logical.amplitudes
    p00 = np.outer(z, z.conj())
    p11 = np.outer(o, o.conj())
    p01 = np.outer(z, o.conj())
    p10 = np.outer(o, z.conj())
    sp = code.space
    return LogicalPaulis(
        s0=Operator(sp, p00 + p11, hermitian=True),
        sx=Operator(sp, p01 + p10, hermitian=True),
        sy=Operator(sp, 1j * (p01 - p10), hermitian=True),
        sz=Operator(sp, p11 - p00, hermitian=True),
    )


def hamiltonian_distance(op: Operator, threshold: float = DISTANCE_THRESHOLD) -> int:
    """Largest Fock-index offset |d| coupled by a mode operator.

    A proxy for the nonlinearity order needed to implement the operator;
    diagonal operators have distance 0.
    """
    if len(op.space) != 1:
        raise ValueError("Hamiltonian distance is defined for single-mode operators")
    rows, cols = np.nonzero(np.abs(op.data) > threshold)
    if rows.size == 0:
        return 0
    return int(np.abs(cols - rows).max())


def kl_check(code: CodePair, errors: Optional[Sequence[Operator]] = None) -> KLReport:
    """Knill-Laflamme diagnostics for a code under a set of error operators.

    Defaults to {identity, a}.  The off-diagonal violation is the largest
    logical coherence |<0_L|E_j^dag E_i|1_L>| over all pairs; the diagonal
    violation is the largest error-probability imbalance
    |<0_L|E_j^dag E_i|0_L> - <1_L|E_j^dag E_i|1_L>|.
    """
    if errors is None:
        errors = [identity(code.space), annihilation(code.dim)]
    words = [code.zero_logical.amplitudes, code.one_logical.amplitudes]
    alpha: dict[tuple[int, int], np.ndarray] = {}
    offdiag = 0.0
    diag = 0.0
    for j, ej in enumerate(errors):
        for i, ei in enumerate(errors):
            prod = ej.data.conj().T @ ei.data
            mat = np.array([[np.vdot(words[u], prod @ words[v]) for v in (0, 1)]
                            for u in (0, 1)])
            alpha[(j, i)] = mat
            offdiag = max(offdiag, abs(mat[0, 1]), abs(mat[1, 0]))
            diag = max(diag, abs(mat[0, 0] - mat[1, 1]))
    return KLReport(alpha=alpha, offdiag_violation=float(offdiag), diag_violation=float(diag))


# -- coefficient files --------------------------------------------------------

def save_code_file(path, c0: Sequence[float], c1: Sequence[float], truncation: int) -> None:
    payload = {"c0": [float(v) for v in c0],
               "c1": [float(v) for v in c1],
               "truncation": int(truncation)}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_code_file(path) -> CodePair:
    """Load a codeword coefficient file {"c0": [...], "c1": [...], "truncation": N}."""
    raw = json.loads(Path(path).read_text())
    for key in ("c0", "c1", "truncation"):
        if key not in raw:
            raise ValueError(f"code file missing key {key!r}")
    return code_pair_from_coeffs(raw["c0"], raw["c1"], raw["truncation"])


def load_sqrt3_code_file(path) -> CodePair:
    """Load user-supplied sqrt(3)-code coefficients.

    The codewords of this code are defined in an external reference and are
    not reproduced here, so the file is only accepted when its code-space
    mean photon number equals sqrt(3) to 1e-6.
    """
    code = load_code_file(path)
    nbar = mean_photon_number(code)
    if abs(nbar - math.sqrt(3.0)) > SQRT3_MEAN_PHOTON_ATOL:
        raise ValueError(
            f"rejected sqrt(3)-code file: mean photon number {nbar!r} != sqrt(3)")
    return code
