"""Truncated Fock-space and qubit operator algebra.

Dense complex matrices throughout; every space in this package has total
dimension <= 64, so dense linear algebra is both simpler and faster than any
sparse format.

Basis ordering convention (used everywhere in the package):
  * bosonic modes: Fock index ascending, |0>, |1>, ..., |dim-1>;
  * qubits: index 0 = ground |g>, index 1 = excited |e>;
  * tensor products: the space signature lists factors left to right, and
    composite indices follow numpy's Kronecker convention (leftmost factor
    is the slowest index).

At the truncation edge the creation operator annihilates the top Fock state
(adjoint of the truncated lowering operator).  Experiments must therefore
declare a truncation at least two levels above the highest populated
codeword level.

All objects are immutable after construction (backing arrays are marked
read-only) and safe to share across concurrent tasks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

HERMITIAN_ATOL = 1e-12
KET_NORM_ATOL = 1e-10
DM_TRACE_ATOL = 1e-8
DM_HERMITIAN_ATOL = 1e-10
DM_EIG_FLOOR = 1e-8


@dataclass(frozen=True)
class SpaceSignature:
    """Ordered list of subsystem dimensions, e.g. (7,) or (7, 2)."""

    factors: tuple[int, ...]

    def __post_init__(self) -> None:
        factors = tuple(int(f) for f in self.factors)
        if not factors:
            raise ValueError("space needs at least one factor")
        if any(f < 1 for f in factors):
            raise ValueError(f"every factor dimension must be >= 1, got {factors}")
        object.__setattr__(self, "factors", factors)

    @property
    def dim(self) -> int:
        out = 1
        for f in self.factors:
            out *= f
        return out

    def __len__(self) -> int:
        return len(self.factors)


SpaceLike = Union[int, Sequence[int], SpaceSignature]


def as_space(space: SpaceLike) -> SpaceSignature:
    if isinstance(space, SpaceSignature):
        return space
    if isinstance(space, (int, np.integer)):
        return SpaceSignature((int(space),))
    return SpaceSignature(tuple(int(f) for f in space))


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Operator:
    """Dense complex matrix together with its space signature.

    The ``hermitian`` flag is a promise checked at construction time
    (max-norm deviation from the adjoint below 1e-12), not an automatic
    detection.
    """

    space: SpaceSignature
    data: np.ndarray
    hermitian: bool = False

    def __post_init__(self) -> None:
        space = as_space(self.space)
        data = _freeze(self.data)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {data.shape}")
        if data.shape[0] != space.dim:
            raise ValueError(
                f"operator dimension {data.shape[0]} does not match space dim {space.dim}"
            )
        if self.hermitian:
            dev = np.abs(data - data.conj().T).max()
            if dev > HERMITIAN_ATOL:
                raise ValueError(f"operator flagged Hermitian but |A - A^dag|_max = {dev:.3e}")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return self.space.dim

    def dag(self) -> "Operator":
        return Operator(self.space, self.data.conj().T, hermitian=self.hermitian)

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same_space(self.space, other.space)
        return Operator(self.space, self.data @ other.data)

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_space(self.space, other.space)
        return Operator(self.space, self.data + other.data,
                        hermitian=self.hermitian and other.hermitian)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_space(self.space, other.space)
        return Operator(self.space, self.data - other.data,
                        hermitian=self.hermitian and other.hermitian)

    def __mul__(self, scalar: complex) -> "Operator":
        s = complex(scalar)
        return Operator(self.space, self.data * s,
                        hermitian=self.hermitian and s.imag == 0.0)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.space, -self.data, hermitian=self.hermitian)


@dataclass(frozen=True)
class Ket:
    """Pure state vector; when ``normalized`` the 2-norm is 1 +- 1e-10."""

    space: SpaceSignature
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self) -> None:
        space = as_space(self.space)
        amps = _freeze(self.amplitudes).reshape(-1)
        if amps.size != space.dim:
            raise ValueError(f"ket length {amps.size} does not match space dim {space.dim}")
        if self.normalized:
            nrm = np.linalg.norm(amps)
            if abs(nrm - 1.0) > KET_NORM_ATOL:
                raise ValueError(f"ket flagged normalized but ||psi|| = {nrm!r}")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.space.dim

    def inner(self, other: "Ket") -> complex:
        _check_same_space(self.space, other.space)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state: unit trace, Hermitian, positive up to a small floor.

    ``eig_floor`` is the validation tolerance on the minimum eigenvalue
    (default 1e-8); integrators that only guarantee positivity to 1e-7 pass
    a looser floor explicitly.
    """

    space: SpaceSignature
    data: np.ndarray
    eig_floor: float = DM_EIG_FLOOR

    def __post_init__(self) -> None:
        space = as_space(self.space)
        data = _freeze(self.data)
        if data.ndim != 2 or data.shape != (space.dim, space.dim):
            raise ValueError(f"density matrix shape {data.shape} does not match space dim {space.dim}")
        tr = np.trace(data)
        if abs(tr - 1.0) > DM_TRACE_ATOL:
            raise ValueError(f"density matrix trace {tr!r} deviates from 1 beyond {DM_TRACE_ATOL}")
        herm_dev = np.abs(data - data.conj().T).max()
        if herm_dev > DM_HERMITIAN_ATOL:
            raise ValueError(f"density matrix not Hermitian: deviation {herm_dev:.3e}")
        min_eig = float(np.linalg.eigvalsh(0.5 * (data + data.conj().T)).min())
        if min_eig < -self.eig_floor:
            raise ValueError(f"density matrix has eigenvalue {min_eig:.3e} below -{self.eig_floor}")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return self.space.dim

    def purity(self) -> float:
        return float(np.trace(self.data @ self.data).real)


def _check_same_space(a: SpaceSignature, b: SpaceSignature) -> None:
    if a.factors != b.factors:
        raise ValueError(f"space mismatch: {a.factors} vs {b.factors}")


def annihilation(dim: int) -> Operator:
    """Lowering operator a|n> = sqrt(n)|n-1> on a mode truncated at dim levels."""
    dim = int(dim)
    if dim < 2:
        raise ValueError(f"mode dimension must be >= 2, got {dim}")
    mat = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    return Operator(as_space(dim), mat)


def creation(dim: int) -> Operator:
    """Raising operator; annihilates the top Fock state at the truncation edge."""
    return annihilation(dim).dag()


def number(dim: int) -> Operator:
    dim = int(dim)
    if dim < 1:
        raise ValueError(f"mode dimension must be >= 1, got {dim}")
    return Operator(as_space(dim), np.diag(np.arange(dim, dtype=float)), hermitian=True)


def identity(space: SpaceLike) -> Operator:
    sp = as_space(space)
    return Operator(sp, np.eye(sp.dim), hermitian=True)


def qubit_lowering() -> Operator:
    """sigma_minus = |g><e| in the ground-first qubit ordering."""
    return Operator(as_space(2), np.array([[0.0, 1.0], [0.0, 0.0]]))


def qubit_raising() -> Operator:
    return qubit_lowering().dag()


def fock_ket(dim: int, n: int) -> Ket:
    dim, n = int(dim), int(n)
    if not 0 <= n < dim:
        raise ValueError(f"Fock index {n} outside [0, {dim})")
    amps = np.zeros(dim, dtype=complex)
    amps[n] = 1.0
    return Ket(as_space(dim), amps)


def qubit_ground() -> Ket:
    return fock_ket(2, 0)


def qubit_excited() -> Ket:
    return fock_ket(2, 1)


def ket(space: SpaceLike, amplitudes: Sequence[complex], normalized: bool = True) -> Ket:
    return Ket(as_space(space), np.asarray(amplitudes, dtype=complex), normalized=normalized)


def tensor(*operands):
    """Kronecker product of Operators or of Kets; signatures concatenate."""
    if len(operands) < 2:
        raise ValueError("tensor needs at least two operands")
    out = operands[0]
    for nxt in operands[1:]:
        out = _tensor2(out, nxt)
    return out


def _tensor2(a, b):
    factors = a.space.factors + b.space.factors
    if isinstance(a, Operator) and isinstance(b, Operator):
        return Operator(SpaceSignature(factors), np.kron(a.data, b.data),
                        hermitian=a.hermitian and b.hermitian)
    if isinstance(a, Ket) and isinstance(b, Ket):
        return Ket(SpaceSignature(factors), np.kron(a.amplitudes, b.amplitudes),
                   normalized=a.normalized and b.normalized)
    raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")


def projector(k: Ket) -> Operator:
    """|psi><psi| for a normalized ket: Hermitian, idempotent, unit trace."""
    if not k.normalized:
        raise ValueError("projector requires a normalized ket")
    nrm = np.linalg.norm(k.amplitudes)
    if abs(nrm - 1.0) > KET_NORM_ATOL:
        raise ValueError(f"projector requires a normalized ket, got norm {nrm!r}")
    return Operator(k.space, np.outer(k.amplitudes, k.amplitudes.conj()), hermitian=True)


def density_from_ket(k: Ket) -> DensityMatrix:
    p = projector(k)
    return DensityMatrix(k.space, p.data)


def expectation(op: Operator, state: DensityMatrix) -> complex:
    """Tr(op . state).

    For operators flagged Hermitian the imaginary part must vanish to 1e-10;
    a larger residue signals an invalid state or operator and raises.
    """
    _check_same_space(op.space, state.space)
    val = complex(np.trace(op.data @ state.data))
    if op.hermitian and abs(val.imag) > 1e-10:
        raise ValueError(f"Hermitian expectation has imaginary part {val.imag:.3e}")
    return val


def partial_trace(state: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Trace out all factors not listed in ``keep`` (indices into the signature).

    The kept factors retain their original relative order.
    """
    factors = state.space.factors
    keep = sorted(set(int(i) for i in keep))
    if any(i < 0 or i >= len(factors) for i in keep):
        raise ValueError(f"keep indices {keep} outside signature of length {len(factors)}")
    if not keep:
        raise ValueError("must keep at least one factor")
    n = len(factors)
    resh = state.data.reshape(factors + factors)
    # trace out dropped factors from the right so axis numbers stay valid
    dropped = [i for i in range(n) if i not in keep]
    out = resh
    n_cur = n
    for i in reversed(dropped):
        out = np.trace(out, axis1=i, axis2=i + n_cur)
        n_cur -= 1
    kept_factors = tuple(factors[i] for i in keep)
    d = 1
    for f in kept_factors:
        d *= f
    return DensityMatrix(SpaceSignature(kept_factors), out.reshape(d, d),
                         eig_floor=state.eig_floor)
