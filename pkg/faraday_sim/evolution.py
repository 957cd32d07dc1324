"""Density-matrix propagation under unitary and Lindblad dynamics.

Unitary runs are exact at every grid point (eigendecomposition of the
Hamiltonian). Lindblad runs use classical fourth-order Runge-Kutta on the
vectorized master equation: for a time-independent generator one RK4 step is
the fixed matrix polynomial

    P(h) = 1 + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24

so an output interval split into n substeps is advanced by P(h/n)^n, and step
halving compares P(h/n)^n with P(h/2n)^2n.

The rotating frame turns about y at the frame frequency Omega and coincides
with the lab frame at t = 0:

    rho_lab(t) = R(t) rho_rot(t) R(t)^dagger,  R(t) = exp(-i Omega t F_y)
"""
import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from faraday_sim.constants import (
    DEFAULT_INTEGRATOR_TOLERANCE,
    DEFAULT_MAX_SUBSTEPS,
    IMAGINARY_TOLERANCE,
    POSITIVITY_FAILURE,
    POSITIVITY_TOLERANCE,
)
from faraday_sim.exceptions import (
    DimensionMismatchError,
    GridMismatchError,
    IntegrationError,
    NumericalConsistencyError,
    StepSizeUnderflowError,
)
from faraday_sim.exceptions.config import GridConfigurationError
from faraday_sim.light_shift import (
    FieldConfig,
    Frame,
    HamiltonianSpec,
    ProbeConfig,
    build_full_hamiltonian,
    build_rwa_hamiltonian,
)
from faraday_sim.spin_algebra import DensityMatrix, SpinOperators, build_spin_operators

if TYPE_CHECKING:
    from faraday_sim.decoherence import DecoherenceChannel

log = structlog.get_logger(__name__)

#: Number of output points propagated per vectorized block.
CHUNK_SIZE = 4096
#: Largest |h L| for a single RK4 substep before step halving starts.
INITIAL_STEP_BOUND = 0.5


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    n_points: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise GridConfigurationError(
                f"grid: end time {self.t_end} must exceed start time {self.t_start}"
            )
        if self.n_points < 2:
            raise GridConfigurationError(f"grid.n_points: must be >= 2, got {self.n_points}")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_points)

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / (self.n_points - 1)

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    """Expectation values of the surviving population along a time grid.

    The F series are Tr(rho F)/Tr(rho); `trace_series` carries Tr(rho).
    """

    times: np.ndarray
    fx_series: np.ndarray
    fy_series: np.ndarray
    fz_series: np.ndarray
    trace_series: np.ndarray
    frame: Frame = Frame.LAB
    frame_frequency: float = 0.0
    spin: float = 4.0
    states: Optional[np.ndarray] = None
    config_digest: str = ""
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        length = len(self.times)
        for name in ("fx_series", "fy_series", "fz_series", "trace_series"):
            if len(getattr(self, name)) != length:
                raise GridMismatchError(
                    f"{name} has {len(getattr(self, name))} entries, expected {length}"
                )
        if self.states is not None and len(self.states) != length:
            raise GridMismatchError(f"{len(self.states)} states for {length} grid points")
        if length and (
            np.min(self.trace_series) < 0 or np.max(self.trace_series) > 1 + 1e-9
        ):
            raise NumericalConsistencyError("Trace series left the interval [0, 1]")

    @property
    def n_points(self) -> int:
        return len(self.times)

    @property
    def transverse_series(self) -> np.ndarray:
        """|<F_perp>| in the x-z plane, identical in both frames."""
        return np.hypot(self.fx_series, self.fz_series)

    def with_digest(self, digest: str) -> "EvolutionResult":
        return replace(self, config_digest=digest)


def _check_dimensions(hamiltonian: HamiltonianSpec, rho0: DensityMatrix) -> None:
    if hamiltonian.matrix.shape != rho0.rho.shape:
        raise DimensionMismatchError(
            f"Hamiltonian of shape {hamiltonian.matrix.shape} does not act on a "
            f"{rho0.dim}-dimensional state"
        )


def _expectation_series(
    states: np.ndarray, operators: Sequence[np.ndarray]
) -> Tuple[np.ndarray, List[np.ndarray]]:
    traces = np.einsum("tii->t", states)
    values = [np.einsum("tij,ji->t", states, op) for op in operators]
    residue = max(
        [np.max(np.abs(traces.imag), initial=0.0)]
        + [np.max(np.abs(v.imag), initial=0.0) for v in values]
    )
    if residue > IMAGINARY_TOLERANCE:
        raise NumericalConsistencyError(f"Expectation series has imaginary residue {residue:.3e}")
    real_traces = traces.real
    return real_traces, [v.real / real_traces for v in values]


def _result_from_parts(
    times: np.ndarray,
    traces: np.ndarray,
    series: List[np.ndarray],
    hamiltonian: HamiltonianSpec,
    ops: SpinOperators,
    states: Optional[np.ndarray],
    **metadata: Any,
) -> EvolutionResult:
    fx, fy, fz = series
    return EvolutionResult(
        times=times,
        fx_series=fx,
        fy_series=fy,
        fz_series=fz,
        trace_series=traces,
        frame=hamiltonian.frame,
        frame_frequency=hamiltonian.frame_frequency,
        spin=ops.f,
        states=states,
        metadata={"hamiltonian": hamiltonian.description, **metadata},
    )


def propagate_unitary(
    hamiltonian: HamiltonianSpec,
    rho0: DensityMatrix,
    grid: TimeGrid,
    keep_states: bool = False,
) -> EvolutionResult:
    """Exact propagation rho(t) = U rho0 U^dagger, U = exp(-iH(t - t_start)).

    Every grid point is computed directly from rho0, so no error accumulates.
    """
    _check_dimensions(hamiltonian, rho0)
    ops = build_spin_operators((rho0.dim - 1) / 2)
    energies, basis = np.linalg.eigh(hamiltonian.matrix)
    basis_h = basis.conj().T
    rho_eig = basis_h @ rho0.rho @ basis
    operators_eig = [basis_h @ op @ basis for op in (ops.fx, ops.fy, ops.fz)]

    times = grid.times
    traces_parts, series_parts = [], []
    states_parts = []
    for start in range(0, len(times), CHUNK_SIZE):
        elapsed = times[start : start + CHUNK_SIZE] - grid.t_start
        phases = np.exp(-1j * np.outer(elapsed, energies))
        chunk = rho_eig[None, :, :] * phases[:, :, None] * phases.conj()[:, None, :]
        traces, series = _expectation_series(chunk, operators_eig)
        traces_parts.append(traces)
        series_parts.append(series)
        if keep_states:
            states_parts.append(basis[None] @ chunk @ basis_h[None])

    traces = np.concatenate(traces_parts)
    series = [np.concatenate([part[i] for part in series_parts]) for i in range(3)]
    states = np.concatenate(states_parts) if keep_states else None
    return _result_from_parts(
        times, traces, series, hamiltonian, ops, states, propagator="unitary"
    )


def build_liouvillian(
    hamiltonian: np.ndarray, channels: Sequence["DecoherenceChannel"]
) -> np.ndarray:
    """Matrix of the master equation acting on row-major vec(rho).

    Uses vec(A rho B) = (A kron B^T) vec(rho). Channels that are not trace
    preserving only contribute the anticommutator term: the population they
    remove leaves the simulated manifold.
    """
    dim = hamiltonian.shape[0]
    identity = np.eye(dim, dtype=complex)
    liouvillian = -1j * (np.kron(hamiltonian, identity) - np.kron(identity, hamiltonian.T))
    for channel in channels:
        for jump in channel.lindblad_ops:
            if jump.shape != hamiltonian.shape:
                raise DimensionMismatchError(
                    f"Jump operator of channel '{channel.label}' has shape {jump.shape}"
                )
            rate_op = jump.conj().T @ jump
            if channel.trace_preserving:
                liouvillian += np.kron(jump, jump.conj())
            liouvillian -= 0.5 * (np.kron(rate_op, identity) + np.kron(identity, rate_op.T))
    return liouvillian


def _rk4_polynomial(liouvillian: np.ndarray, substep: float) -> np.ndarray:
    generator = substep * liouvillian
    power = np.eye(len(generator), dtype=complex)
    propagator = power.copy()
    for order in range(1, 5):
        power = power @ generator / order
        propagator += power
    return propagator


def interval_propagator(
    liouvillian: np.ndarray,
    interval: float,
    tolerance: float = DEFAULT_INTEGRATOR_TOLERANCE,
    max_substeps: int = DEFAULT_MAX_SUBSTEPS,
    min_substeps: int = 1,
) -> Tuple[np.ndarray, int]:
    """RK4 propagator over one output interval, with step halving.

    The substep count doubles until two successive propagators agree to
    `tolerance` (max-norm). Once the difference stops shrinking below
    sqrt(tolerance), round-off dominates and the finer propagator is accepted.

    :raises StepSizeUnderflowError: if more than `max_substeps` substeps are needed.
    """
    norm = float(np.max(np.sum(np.abs(liouvillian), axis=1), initial=0.0))
    substeps = max(min_substeps, 1, math.ceil(interval * norm / INITIAL_STEP_BOUND))
    current = np.linalg.matrix_power(_rk4_polynomial(liouvillian, interval / substeps), substeps)
    previous_difference = math.inf
    while True:
        if 2 * substeps > max_substeps:
            raise StepSizeUnderflowError(
                f"Step halving needs more than {max_substeps} substeps per output interval "
                f"(interval {interval:.3e} s, |L| {norm:.3e} 1/s)"
            )
        finer = np.linalg.matrix_power(
            _rk4_polynomial(liouvillian, interval / (2 * substeps)), 2 * substeps
        )
        difference = float(np.max(np.abs(finer - current)))
        substeps *= 2
        if difference <= tolerance:
            return finer, substeps
        if difference <= math.sqrt(tolerance) and difference >= previous_difference / 2:
            log.debug(
                "Step halving reached round-off floor", difference=difference, substeps=substeps
            )
            return finer, substeps
        previous_difference = difference
        current = finer


def propagate_lindblad(
    hamiltonian: HamiltonianSpec,
    channels: Sequence["DecoherenceChannel"],
    rho0: DensityMatrix,
    grid: TimeGrid,
    tolerance: float = DEFAULT_INTEGRATOR_TOLERANCE,
    max_substeps: int = DEFAULT_MAX_SUBSTEPS,
    keep_states: bool = False,
    min_substeps: int = 1,
) -> EvolutionResult:
    """Integrate the Lindblad master equation on the output grid.

    rho is re-symmetrized at every output point and its spectrum checked.

    :raises StepSizeUnderflowError: if step halving runs out of substeps.
    :raises IntegrationError: if an eigenvalue drops below -1e-6.
    """
    _check_dimensions(hamiltonian, rho0)
    ops = build_spin_operators((rho0.dim - 1) / 2)
    dim = rho0.dim
    liouvillian = build_liouvillian(np.asarray(hamiltonian.matrix), channels)
    propagator, substeps = interval_propagator(
        liouvillian, grid.step, tolerance, max_substeps, min_substeps
    )
    log.debug(
        "Lindblad propagator ready",
        channels=[c.label for c in channels],
        substeps=substeps,
        interval=grid.step,
    )

    states = np.empty((grid.n_points, dim, dim), dtype=complex)
    vec = rho0.rho.reshape(-1).copy()
    states[0] = rho0.rho
    for index in range(1, grid.n_points):
        vec = propagator @ vec
        rho = vec.reshape(dim, dim)
        rho = (rho + rho.conj().T) / 2
        vec = rho.reshape(-1)
        states[index] = rho

    min_eigenvalues = np.linalg.eigvalsh(states)[:, 0]
    worst = float(np.min(min_eigenvalues))
    if worst < POSITIVITY_FAILURE:
        failed_at = grid.times[int(np.argmin(min_eigenvalues))]
        raise IntegrationError(
            f"Density matrix lost positivity: eigenvalue {worst:.3e} at t={failed_at:.6e} s"
        )
    if worst < -POSITIVITY_TOLERANCE:
        log.warning("Small negative eigenvalue in Lindblad run", min_eigenvalue=worst)

    traces, series = _expectation_series(states, (ops.fx, ops.fy, ops.fz))
    return _result_from_parts(
        grid.times,
        traces,
        series,
        hamiltonian,
        ops,
        states if keep_states else None,
        propagator="lindblad",
        substeps=substeps,
        channels=[c.label for c in channels],
    )


def _rotate_states(states: np.ndarray, ops: SpinOperators, angles: np.ndarray) -> np.ndarray:
    """R(angle) rho R(angle)^dagger with R = exp(-i angle F_y), per time."""
    m_values, basis = np.linalg.eigh(ops.fy)
    basis_h = basis.conj().T
    phases = np.exp(-1j * np.outer(angles, m_values))
    in_basis = basis_h[None] @ states @ basis[None]
    rotated = in_basis * phases[:, :, None] * phases.conj()[:, None, :]
    return basis[None] @ rotated @ basis_h[None]


def to_lab_frame(result: EvolutionResult) -> EvolutionResult:
    """Map a rotating-frame result back to the lab frame.

    <F_z>_lab = <F_z> cos(Omega t) - <F_x> sin(Omega t) and
    <F_x>_lab = <F_x> cos(Omega t) + <F_z> sin(Omega t).
    """
    if result.frame is Frame.LAB:
        return result
    angles = result.frame_frequency * result.times
    cos, sin = np.cos(angles), np.sin(angles)
    states = None
    if result.states is not None:
        states = _rotate_states(result.states, build_spin_operators(result.spin), angles)
    return replace(
        result,
        fx_series=result.fx_series * cos + result.fz_series * sin,
        fz_series=result.fz_series * cos - result.fx_series * sin,
        frame=Frame.LAB,
        frame_frequency=0.0,
        states=states,
        metadata={**result.metadata, "mapped_from": Frame.ROTATING.value},
    )


def to_rotating_frame(result: EvolutionResult, larmor_frequency: float) -> EvolutionResult:
    """Inverse of :func:`to_lab_frame` for a frame turning at `larmor_frequency`."""
    if result.frame is Frame.ROTATING:
        if result.frame_frequency != larmor_frequency:
            raise GridMismatchError(
                f"Result already rotates at {result.frame_frequency}, not {larmor_frequency}"
            )
        return result
    angles = larmor_frequency * result.times
    cos, sin = np.cos(angles), np.sin(angles)
    states = None
    if result.states is not None:
        states = _rotate_states(result.states, build_spin_operators(result.spin), -angles)
    return replace(
        result,
        fx_series=result.fx_series * cos - result.fz_series * sin,
        fz_series=result.fz_series * cos + result.fx_series * sin,
        frame=Frame.ROTATING,
        frame_frequency=larmor_frequency,
        states=states,
        metadata={**result.metadata, "mapped_from": Frame.LAB.value},
    )


def compare_full_vs_rwa(
    field: FieldConfig,
    probe: ProbeConfig,
    rho0: DensityMatrix,
    grid: TimeGrid,
    envelope: bool = False,
) -> float:
    """Largest lab-frame difference between full and RWA dynamics, in units of f.

    By default compares <F_z>(t) directly, which includes the slow phase drift
    of the Larmor precession caused by the counter-rotating terms. With
    `envelope` set, compares the transverse-spin magnitudes instead.
    """
    ops = build_spin_operators((rho0.dim - 1) / 2)
    full = propagate_unitary(build_full_hamiltonian(ops, field, probe), rho0, grid)

    # The frames coincide at t = 0, so a grid starting later needs rho0 expressed
    # in the rotating frame at t_start.
    start_angle = np.array([-field.larmor_frequency * grid.t_start])
    rho0_rot = DensityMatrix(_rotate_states(rho0.rho[None], ops, start_angle)[0])
    rwa = to_lab_frame(propagate_unitary(build_rwa_hamiltonian(ops, field, probe), rho0_rot, grid))

    if envelope:
        difference = full.transverse_series - rwa.transverse_series
    else:
        difference = full.fz_series - rwa.fz_series
    return float(np.max(np.abs(difference))) / ops.f
