"""
Chirpsim - Propagators
Liouville-von Neumann integration of rho(t) with a state-vector cross-check

The Hamiltonian is any callable mapping an array of n times to an (n, M, M)
complex stack (see quantum_system.FMHamiltonian).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.integrate import solve_ivp

import kernels

logger = logging.getLogger(__name__)

HamiltonianBuilder = Callable[[np.ndarray], np.ndarray]

STATE_TOL = 1e-9
# amplitudes of a valid rho or psi never exceed 1
BOUND_TOL = 1e-6
STEP_SAFETY = 50.0
NORM_SAMPLES = 4001
CHUNK_STEPS = 20000


class IntegrationError(RuntimeError):
    """Integration produced a non-finite or unbounded state."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t = {time:.6g} ps")
        self.time = time


class ScenarioMismatchError(ValueError):
    """Two trajectories do not describe the same scenario."""


@dataclass(frozen=True)
class IntegratorConfig:
    """
    method: "rk4" (fixed step) or "rk45" (adaptive, scipy).
    step: fixed RK4 step in ps; None picks one from the Hamiltonian norm.
    samples: stored grid points across the window.
    """

    method: str = "rk4"
    step: Optional[float] = None
    tolerance: float = 1e-10
    samples: int = 2000

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"integrator method must be 'rk4' or 'rk45', got '{self.method}'")
        if self.step is not None and not (math.isfinite(self.step) and self.step > 0):
            raise ValueError(f"integrator step must be positive and finite, got {self.step}")
        if not (math.isfinite(self.tolerance) and self.tolerance > 0):
            raise ValueError(f"integrator tolerance must be positive and finite, got {self.tolerance}")
        if int(self.samples) != self.samples or self.samples < 2:
            raise ValueError(f"integrator samples must be an integer >= 2, got {self.samples}")


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray = field(compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        check_density_matrix(m)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def basis(cls, dim: int, level: int = 0) -> "DensityMatrix":
        rho = np.zeros((dim, dim), dtype=complex)
        rho[level, level] = 1.0
        return cls(rho)

    @classmethod
    def ground(cls, dim: int) -> "DensityMatrix":
        return cls.basis(dim, 0)

    @classmethod
    def from_state(cls, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()))

    def populations(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()


def check_density_matrix(rho: np.ndarray, tol: float = STATE_TOL) -> None:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError(f"density matrix trace is {np.trace(rho).real:.12g}, expected 1")
    eigenvalues = linalg.eigvalsh(rho)
    if eigenvalues.min() < -tol or eigenvalues.max() > 1 + tol:
        raise ValueError(f"density matrix eigenvalues outside [0, 1]: {eigenvalues}")


@dataclass
class DensityTrajectory:
    """rho on the stored grid; times are monotonic in integration order."""

    times: np.ndarray
    states: np.ndarray  # (n, M, M)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) < 2 or len(self.times) != len(self.states):
            raise ValueError("trajectory needs matching times/states with at least 2 entries")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def final(self) -> DensityMatrix:
        try:
            return DensityMatrix(self.states[-1])
        except ValueError as e:
            raise IntegrationError(f"final state is not a density matrix ({e})", float(self.times[-1])) from e

    def populations(self) -> np.ndarray:
        return np.real(np.einsum("nii->ni", self.states))

    def trace_deviation(self) -> float:
        return float(np.max(np.abs(np.einsum("nii->n", self.states) - 1.0)))

    def hermiticity_drift(self) -> float:
        return float(np.max(np.abs(self.states - np.conj(np.swapaxes(self.states, 1, 2)))))

    def purity(self) -> np.ndarray:
        return np.real(np.einsum("nij,nji->n", self.states, self.states))


@dataclass
class StateTrajectory:
    times: np.ndarray
    states: np.ndarray  # (n, M)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def norm_deviation(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.states, axis=1) - 1.0)))

    def to_density(self) -> DensityTrajectory:
        rho = np.einsum("ni,nj->nij", self.states, self.states.conj())
        return DensityTrajectory(times=self.times, states=rho, metadata=dict(self.metadata))


def estimate_step(hamiltonian: HamiltonianBuilder, window: Tuple[float, float]) -> float:
    """
    Largest safe RK4 step: (1/50) / ||H||_max, with ||H|| estimated as the
    max absolute element times M over the window.
    """
    t0, t1 = window
    stack = hamiltonian(np.linspace(min(t0, t1), max(t0, t1), NORM_SAMPLES))
    norm = float(np.max(np.abs(stack))) * stack.shape[1]
    if norm == 0.0:
        return abs(t1 - t0)
    return 1.0 / (STEP_SAFETY * norm)


def _stored_grid(window: Tuple[float, float], cfg: IntegratorConfig) -> np.ndarray:
    t0, t1 = window
    if t0 == t1:
        raise ValueError(f"integration window must have nonzero length, got [{t0}, {t1}]")
    return np.linspace(t0, t1, int(cfg.samples))


def check_bounded(y: np.ndarray, time: float) -> None:
    """
    Raise IntegrationError once y has left the physical region: non-finite
    entries, any |amplitude| above 1, or (for rho) a trace away from 1.
    """
    if not np.all(np.isfinite(y)):
        raise IntegrationError("non-finite state (step too large?)", time)
    largest = float(np.max(np.abs(y)))
    if largest > 1.0 + BOUND_TOL:
        raise IntegrationError(f"state amplitude {largest:.3g} exceeds 1 (step too large?)", time)
    if y.ndim == 2 and abs(np.trace(y) - 1.0) > BOUND_TOL:
        raise IntegrationError(f"trace drifted to {np.trace(y).real:.6g}", time)


def _integrate_rk4(kernel, y0: np.ndarray, hamiltonian: HamiltonianBuilder,
                   grid: np.ndarray, cfg: IntegratorConfig) -> np.ndarray:
    step = cfg.step if cfg.step is not None else estimate_step(hamiltonian, (grid[0], grid[-1]))
    out = np.empty((len(grid),) + y0.shape, dtype=complex)
    out[0] = y0
    y = np.ascontiguousarray(y0, dtype=complex)
    total_steps = 0

    for k in range(1, len(grid)):
        span = grid[k] - grid[k - 1]
        n_sub = max(1, int(math.ceil(abs(span) / step - 1e-9)))
        dt = span / n_sub
        # Hamiltonian samples are built CHUNK_STEPS steps at a time
        for first in range(0, n_sub, CHUNK_STEPS):
            count = min(CHUNK_STEPS, n_sub - first)
            sub_times = grid[k - 1] + dt * (first + 0.5 * np.arange(2 * count + 1))
            if first + count == n_sub:
                sub_times[-1] = grid[k]
            samples = np.ascontiguousarray(hamiltonian(sub_times), dtype=complex)
            y = kernel(y, samples, dt)
            check_bounded(y, float(sub_times[-1]))
        out[k] = y
        total_steps += n_sub

    logger.debug("rk4: %d steps of <= %.3e ps over %d stored points", total_steps, step, len(grid))
    return out


def _integrate_rk45(rhs, y0: np.ndarray, grid: np.ndarray, cfg: IntegratorConfig) -> np.ndarray:
    shape = y0.shape
    solution = solve_ivp(
        lambda t, y: rhs(t, y.reshape(shape)).ravel(),
        (grid[0], grid[-1]),
        y0.astype(complex).ravel(),
        method="RK45",
        t_eval=grid,
        rtol=cfg.tolerance,
        atol=cfg.tolerance * 1e-2,
    )
    if not solution.success:
        t_fail = float(solution.t[-1]) if solution.t.size else float(grid[0])
        raise IntegrationError(f"adaptive integration failed: {solution.message}", t_fail)
    states = solution.y.T.reshape((len(grid),) + shape)
    for t, y in zip(grid, states):
        check_bounded(y, float(t))
    return states


def evolve_density(hamiltonian: HamiltonianBuilder, rho0: DensityMatrix,
                   window: Tuple[float, float], cfg: IntegratorConfig = IntegratorConfig(),
                   metadata: Optional[Dict[str, Any]] = None) -> DensityTrajectory:
    """
    Integrate d rho/dt = i [rho, H] across `window`.

    A reversed window (start > end) integrates backwards in time. No
    renormalization is applied along the way.
    """
    grid = _stored_grid(window, cfg)
    rho = np.array(rho0.matrix, dtype=complex)
    if rho.shape[0] != hamiltonian(grid[:1]).shape[1]:
        raise ValueError(f"rho0 is {rho.shape[0]}x{rho.shape[0]} but the Hamiltonian is "
                         f"{hamiltonian(grid[:1]).shape[1]}-dimensional")

    if cfg.method == "rk4":
        states = _integrate_rk4(kernels.rk4_density, rho, hamiltonian, grid, cfg)
    else:
        def rhs(t, r):
            h = hamiltonian(np.array([t]))[0]
            return 1j * (r @ h - h @ r)
        states = _integrate_rk45(rhs, rho, grid, cfg)

    return DensityTrajectory(times=grid, states=states, metadata=dict(metadata or {}))


def evolve_statevector(hamiltonian: HamiltonianBuilder, psi0: np.ndarray,
                       window: Tuple[float, float], cfg: IntegratorConfig = IntegratorConfig(),
                       metadata: Optional[Dict[str, Any]] = None) -> StateTrajectory:
    """Integrate i d psi/dt = H psi; same grid and stepping as evolve_density."""
    psi = np.array(psi0, dtype=complex)
    if abs(np.linalg.norm(psi) - 1.0) > STATE_TOL:
        raise ValueError(f"psi0 must be normalized, |psi0| = {np.linalg.norm(psi):.12g}")
    grid = _stored_grid(window, cfg)

    if cfg.method == "rk4":
        states = _integrate_rk4(kernels.rk4_state, psi, hamiltonian, grid, cfg)
    else:
        def rhs(t, y):
            return -1j * (hamiltonian(np.array([t]))[0] @ y)
        states = _integrate_rk45(rhs, psi, grid, cfg)

    return StateTrajectory(times=grid, states=states, metadata=dict(metadata or {}))


def free_evolution(rho: DensityMatrix, hamiltonian: np.ndarray, times: np.ndarray,
                   t0: float = 0.0) -> DensityTrajectory:
    """
    Exact propagation under a constant Hamiltonian:
    rho(t) = U rho U^dagger with U = exp(-i H (t - t0)), via eigendecomposition.
    """
    times = np.asarray(times, dtype=float)
    energies, vectors = linalg.eigh(hamiltonian)
    rho_eig = vectors.conj().T @ rho.matrix @ vectors
    gaps = energies[:, None] - energies[None, :]
    phases = np.exp(-1j * gaps[None, :, :] * (times - t0)[:, None, None])
    states = np.einsum("ik,nkl,jl->nij", vectors, rho_eig[None] * phases, vectors.conj())
    return DensityTrajectory(times=times, states=states, metadata={"free_evolution": True})


def convergence_check(coarse: DensityTrajectory, fine: DensityTrajectory) -> float:
    """max over time and level of |P_i(h) - P_i(h/2)| on a shared stored grid."""
    if coarse.states.shape != fine.states.shape:
        raise ScenarioMismatchError(
            f"trajectory shapes differ: {coarse.states.shape} vs {fine.states.shape}")
    if not np.array_equal(coarse.times, fine.times):
        raise ScenarioMismatchError("trajectories were stored on different time grids")
    return float(np.max(np.abs(coarse.populations() - fine.populations())))
