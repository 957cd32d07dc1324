"""Angular-momentum operators, spin-coherent states and rotations.

All matrices are expressed in the |F, m> basis with m descending from +F to -F,
in units where hbar = 1.
"""
import functools
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import structlog

from faraday_sim.constants import (
    HERMITIAN_TOLERANCE,
    IMAGINARY_TOLERANCE,
    NORM_TOLERANCE,
    POSITIVITY_TOLERANCE,
)
from faraday_sim.exceptions import (
    DimensionMismatchError,
    InvalidAxisError,
    InvalidHamiltonianError,
    InvalidSpinError,
    NumericalConsistencyError,
)

log = structlog.get_logger(__name__)

AxisLike = Union[Sequence[float], np.ndarray]


def _frozen(matrix: np.ndarray) -> np.ndarray:
    matrix.setflags(write=False)
    return matrix


def is_hermitian(matrix: np.ndarray, tolerance: float = HERMITIAN_TOLERANCE) -> bool:
    return bool(np.max(np.abs(matrix - matrix.conj().T), initial=0.0) <= tolerance)


@dataclass(frozen=True, eq=False)
class SpinOperators:
    """Matrix representation of the spin-f angular momentum.

    The arrays are read-only and shared between callers, see
    :func:`build_spin_operators`.
    """

    f: float
    fx: np.ndarray
    fy: np.ndarray
    fz: np.ndarray
    f_plus: np.ndarray
    f_minus: np.ndarray

    @property
    def dim(self) -> int:
        return self.fz.shape[0]

    @property
    def m_values(self) -> np.ndarray:
        return np.real(np.diag(self.fz))

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def along(self, axis: AxisLike) -> np.ndarray:
        """Return n.F for the (not necessarily normalized) 3-vector `axis`."""
        nx, ny, nz = np.asarray(axis, dtype=float)
        return nx * self.fx + ny * self.fy + nz * self.fz


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if amplitudes.ndim != 1 or amplitudes.size < 2:
            raise DimensionMismatchError(
                f"State vector must be one-dimensional with at least two entries, "
                f"got shape {amplitudes.shape}"
            )
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise NumericalConsistencyError(f"State vector is not normalized: |psi|^2 = {norm}")
        object.__setattr__(self, "amplitudes", _frozen(amplitudes))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def f(self) -> float:
        return (self.dim - 1) / 2


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semi-definite state of the spin manifold.

    The trace is one for closed dynamics and lies in (0, 1] once population
    has been lost to an unobserved manifold.
    """

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DimensionMismatchError(f"Density matrix must be square, got shape {rho.shape}")
        if not is_hermitian(rho):
            raise NumericalConsistencyError("Density matrix is not Hermitian")
        trace = float(np.trace(rho).real)
        if not 0.0 < trace <= 1.0 + 1e-9:
            raise NumericalConsistencyError(f"Density matrix trace {trace} outside (0, 1]")
        min_eigenvalue = float(np.linalg.eigvalsh(rho)[0])
        if min_eigenvalue < -POSITIVITY_TOLERANCE:
            raise NumericalConsistencyError(
                f"Density matrix has negative eigenvalue {min_eigenvalue}"
            )
        object.__setattr__(self, "rho", _frozen(rho))

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        return cls(np.outer(state.amplitudes, state.amplitudes.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    @property
    def purity(self) -> float:
        """Tr(rho^2) / Tr(rho)^2, equal to one for pure states."""
        return float(np.trace(self.rho @ self.rho).real) / self.trace ** 2


@functools.lru_cache(maxsize=None)
def build_spin_operators(f: float) -> SpinOperators:
    """Build F_x, F_y, F_z and the ladder operators for spin `f`.

    :raises InvalidSpinError: if `f` is not a positive multiple of 1/2.
    """
    twice_f = 2 * f
    if f <= 0 or not math.isclose(twice_f, round(twice_f), abs_tol=1e-12):
        raise InvalidSpinError(f"Spin must be a positive multiple of 1/2, got {f}")
    f = round(twice_f) / 2
    dim = round(twice_f) + 1
    m = f - np.arange(dim)

    f_plus = np.zeros((dim, dim), dtype=complex)
    # F+ |m> = sqrt(f(f+1) - m(m+1)) |m+1>, and |m+1> sits one row above |m>.
    for i in range(1, dim):
        f_plus[i - 1, i] = math.sqrt(f * (f + 1) - m[i] * (m[i] + 1))
    f_minus = f_plus.conj().T.copy()

    return SpinOperators(
        f=f,
        fx=_frozen((f_plus + f_minus) / 2),
        fy=_frozen((f_plus - f_minus) / 2j),
        fz=_frozen(np.diag(m).astype(complex)),
        f_plus=_frozen(f_plus),
        f_minus=_frozen(f_minus),
    )


def unitary_from_generator(generator: np.ndarray, angle: float) -> np.ndarray:
    """exp(-i angle G) for a Hermitian generator G, by eigendecomposition."""
    if not is_hermitian(generator):
        raise InvalidHamiltonianError("Generator of a unitary must be Hermitian")
    eigenvalues, eigenvectors = np.linalg.eigh(generator)
    return (eigenvectors * np.exp(-1j * angle * eigenvalues)) @ eigenvectors.conj().T


def coherent_state(ops: SpinOperators, polar: float, azimuth: float) -> StateVector:
    """Spin-coherent state pointing along (polar, azimuth).

    Obtained as exp(-i azimuth F_z) exp(-i polar F_y) |F, F>.
    """
    top = np.zeros(ops.dim, dtype=complex)
    top[0] = 1.0
    tilted = unitary_from_generator(ops.fy, polar) @ top
    amplitudes = np.exp(-1j * azimuth * ops.m_values) * tilted
    return StateVector(amplitudes / np.linalg.norm(amplitudes))


def expectation(rho: DensityMatrix, op: np.ndarray) -> float:
    """Tr(rho op) for a Hermitian operator.

    :raises DimensionMismatchError: if the operator does not act on the state space.
    :raises NumericalConsistencyError: if the result carries an imaginary residue.
    """
    if op.shape != rho.rho.shape:
        raise DimensionMismatchError(
            f"Operator of shape {op.shape} does not act on a {rho.dim}-dimensional state"
        )
    value = np.trace(rho.rho @ op)
    if abs(value.imag) > IMAGINARY_TOLERANCE:
        raise NumericalConsistencyError(
            f"Expectation value has imaginary residue {value.imag:.3e}"
        )
    return float(value.real)


def spin_variance(rho: DensityMatrix, ops: SpinOperators, axis: AxisLike) -> float:
    """Variance of n.F for the unit vector along `axis`."""
    generator = ops.along(_unit_axis(axis))
    mean = expectation(rho, generator)
    return expectation(rho, generator @ generator) - mean ** 2


def _unit_axis(axis: AxisLike) -> np.ndarray:
    vector = np.asarray(axis, dtype=float)
    if vector.shape != (3,):
        raise InvalidAxisError(f"Rotation axis must be a 3-vector, got shape {vector.shape}")
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise InvalidAxisError("Rotation axis must not be the zero vector")
    if abs(norm - 1.0) > 1e-9:
        log.debug("Normalizing rotation axis", norm=norm)
    return vector / norm


def rotate_state(state: StateVector, axis: AxisLike, angle: float) -> StateVector:
    """Apply exp(-i angle n.F) to `state`.

    :raises InvalidAxisError: for a zero axis.
    """
    ops = build_spin_operators(state.f)
    unitary = unitary_from_generator(ops.along(_unit_axis(axis)), angle)
    rotated = unitary @ state.amplitudes
    return StateVector(rotated / np.linalg.norm(rotated))
