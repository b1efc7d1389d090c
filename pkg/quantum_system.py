"""
Chirpsim - Level Structures and FM-Frame Hamiltonians
Two-level and bright/dark multilevel systems, H^FM(t) builders and the dressed-state frame

Basis ordering: index 0 is the ground state, index 1 the bright state, the rest dark states.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment

from pulse import GHZ_TO_RAD_PER_PS, PulseSpec, rabi_frequency

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
TIE_TOL = 1e-12


class HamiltonianError(ValueError):
    """Malformed level structure or non-Hermitian Hamiltonian."""


@dataclass(frozen=True)
class QuantumSystem:
    """
    Excited-level detunings Delta_1..Delta_{M-1} and intramolecular couplings
    V_ij between excited levels, all in rad/ps. The ground state couples only
    to level 1, and only through the field.
    """

    detunings: Tuple[float, ...]
    couplings: Tuple[Tuple[float, ...], ...] = ()
    mu_eff: float = 1.0
    name: str = ""

    def __post_init__(self):
        detunings = tuple(float(d) for d in self.detunings)
        if not detunings:
            raise HamiltonianError("a system needs at least one excited level")
        n = len(detunings)
        if self.couplings:
            couplings = tuple(tuple(float(v) for v in row) for row in self.couplings)
        else:
            couplings = tuple(tuple(0.0 for _ in range(n)) for _ in range(n))

        matrix = np.array(couplings, dtype=float)
        if matrix.shape != (n, n):
            raise HamiltonianError(
                f"couplings must be {n}x{n} to match {n} detunings, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)) or not all(np.isfinite(detunings)):
            raise HamiltonianError("detunings and couplings must be finite")
        if np.any(np.diag(matrix) != 0.0):
            raise HamiltonianError("coupling matrix diagonal must be zero (use detunings instead)")
        if not np.array_equal(matrix, matrix.T):
            raise HamiltonianError("coupling matrix must be symmetric")
        if not np.isfinite(self.mu_eff):
            raise HamiltonianError(f"mu_eff must be finite, got {self.mu_eff}")

        object.__setattr__(self, "detunings", detunings)
        object.__setattr__(self, "couplings", couplings)
        object.__setattr__(self, "mu_eff", float(self.mu_eff))

    @property
    def dim(self) -> int:
        return len(self.detunings) + 1

    @property
    def coupling_matrix(self) -> np.ndarray:
        return np.array(self.couplings, dtype=float)

    @classmethod
    def two_level(cls, delta: float = 0.0, mu_eff: float = 1.0, name: str = "two-level") -> "QuantumSystem":
        return cls(detunings=(delta,), mu_eff=mu_eff, name=name)

    def two_level_reduction(self) -> "QuantumSystem":
        """Ground + bright state only, dark states dropped."""
        suffix = "" if self.dim == 2 else "/2lvl"
        return QuantumSystem(detunings=(self.detunings[0],), mu_eff=self.mu_eff, name=f"{self.name}{suffix}")


# Excited-level data quoted in GHz (ordinary frequency). Couplings keyed by
# excited-level index pairs, 1 = bright.
PRESETS_GHZ: Dict[str, Dict] = {
    "anthracene-5lvl": {
        "detunings": [3.23, 1.7, 7.57, 3.7],
        "couplings": {
            (1, 2): -0.28, (1, 3): -4.24, (1, 4): -1.86,
            (2, 3): 0.29, (2, 4): 1.82, (3, 4): 0.94,
        },
    },
}


def preset(name: str, mu_eff: float = 1.0) -> QuantumSystem:
    """Named level structure converted to rad/ps."""
    if name not in PRESETS_GHZ:
        raise HamiltonianError(f"unknown preset '{name}', available: {sorted(PRESETS_GHZ)}")
    data = PRESETS_GHZ[name]
    n = len(data["detunings"])
    v = np.zeros((n, n))
    for (i, j), value in data["couplings"].items():
        v[i - 1, j - 1] = v[j - 1, i - 1] = value
    return QuantumSystem(
        detunings=tuple(d * GHZ_TO_RAD_PER_PS for d in data["detunings"]),
        couplings=tuple(tuple(row) for row in v * GHZ_TO_RAD_PER_PS),
        mu_eff=mu_eff,
        name=name,
    )


def excited_submatrix(system: QuantumSystem) -> np.ndarray:
    """diag(Delta_1..Delta_{M-1}) + V, real symmetric."""
    return np.diag(np.array(system.detunings)) + system.coupling_matrix


def static_hamiltonian(system: QuantumSystem) -> np.ndarray:
    """H^FM with the field off and no sweep: ground at zero energy, excited block after it."""
    h = np.zeros((system.dim, system.dim), dtype=complex)
    h[1:, 1:] = excited_submatrix(system)
    return h


def check_hermitian(matrix: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise HamiltonianError(f"expected a square matrix, got shape {m.shape}")
    drift = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if drift > tol:
        raise HamiltonianError(f"matrix is not Hermitian (max |H - H^dagger| = {drift:.3e})")


@dataclass(frozen=True)
class HamiltonianSnapshot:
    time: float
    matrix: np.ndarray = field(compare=False, repr=False)

    def __post_init__(self):
        check_hermitian(self.matrix)
        if abs(self.matrix[0, 0]) > HERMITIAN_TOL:
            raise HamiltonianError(f"ground state must sit at zero energy, got H[0][0] = {self.matrix[0, 0]}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class FMHamiltonian:
    """
    Vectorized H^FM(t) for a pulse acting on a system.

    Calling it with an array of n times returns an (n, M, M) complex stack;
    that is the builder shape the propagator consumes.
    """

    pulse: PulseSpec
    system: QuantumSystem

    @property
    def dim(self) -> int:
        return self.system.dim

    @property
    def window(self) -> Tuple[float, float]:
        return self.pulse.window

    def __call__(self, times: np.ndarray) -> np.ndarray:
        t = np.atleast_1d(np.asarray(times, dtype=float))
        stack = np.broadcast_to(static_hamiltonian(self.system), (t.size, self.dim, self.dim)).copy()

        idx = np.arange(1, self.dim)
        stack[:, idx, idx] += self.pulse.sweep(t)[:, None]

        omega = rabi_frequency(t, self.pulse, self.system.mu_eff)
        stack[:, 0, 1] = omega
        stack[:, 1, 0] = np.conj(omega)
        return stack

    def snapshot(self, t: float) -> HamiltonianSnapshot:
        return HamiltonianSnapshot(time=float(t), matrix=self(np.array([t]))[0])


def two_level_hamiltonian(t: float, pulse: PulseSpec, delta: float, mu_eff: float = 1.0) -> HamiltonianSnapshot:
    """[[0, Omega], [Omega*, Delta + N phi_dot]] at time t."""
    return FMHamiltonian(pulse, QuantumSystem.two_level(delta, mu_eff)).snapshot(t)


def multilevel_hamiltonian(t: float, pulse: PulseSpec, system: QuantumSystem) -> HamiltonianSnapshot:
    return FMHamiltonian(pulse, system).snapshot(t)


def _as_matrix(h: Union[HamiltonianSnapshot, np.ndarray]) -> np.ndarray:
    if isinstance(h, HamiltonianSnapshot):
        return h.matrix
    matrix = np.asarray(h)
    check_hermitian(matrix)
    return matrix


def _fix_gauge(vectors: np.ndarray, reference: Optional[np.ndarray]) -> np.ndarray:
    """
    Remove the arbitrary phase of each eigenvector: align with the matching
    reference vector, or make the largest component real positive.
    """
    out = vectors.astype(complex)
    for k in range(out.shape[1]):
        if reference is not None:
            anchor = np.vdot(reference[:, k], out[:, k])
        else:
            anchor = out[np.argmax(np.abs(out[:, k])), k]
        if abs(anchor) > 0:
            out[:, k] *= np.conj(anchor) / abs(anchor)
    return out


def dressed_eigensystem(h: Union[HamiltonianSnapshot, np.ndarray],
                        previous: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigenvalues and orthonormal eigenvectors (columns) of a Hermitian matrix.

    Without `previous` the order is ascending. With it, columns are permuted to
    maximize the total overlap |<prev_k|v_k>| so curves stay continuous through
    avoided crossings; ascending order is kept when it ties the best
    permutation within 1e-12.
    """
    matrix = _as_matrix(h)
    values, vectors = linalg.eigh(matrix)
    if previous is None:
        return values, _fix_gauge(vectors, None)

    if previous.shape != vectors.shape:
        raise HamiltonianError(f"previous eigenvectors have shape {previous.shape}, expected {vectors.shape}")
    overlap = np.abs(previous.conj().T @ vectors)
    rows, cols = linear_sum_assignment(-overlap)
    if overlap[rows, cols].sum() - np.trace(overlap) > TIE_TOL:
        values, vectors = values[cols], vectors[:, cols]
    return values, _fix_gauge(vectors, previous)


@dataclass
class DressedFrame:
    """Continuity-tracked instantaneous eigenbasis on a time grid."""

    times: np.ndarray
    eigenvalues: np.ndarray    # (n, M)
    eigenvectors: np.ndarray   # (n, M, M), columns are states

    def character(self, level: int) -> np.ndarray:
        """|<level|v_k(t)>|^2 per time and dressed state, shape (n, M)."""
        if not 0 <= level < self.eigenvectors.shape[1]:
            raise HamiltonianError(f"level {level} outside 0..{self.eigenvectors.shape[1] - 1}")
        return np.abs(self.eigenvectors[:, level, :]) ** 2

    def min_step_overlap(self) -> np.ndarray:
        """Per dressed state, the smallest |<v_k(t_j)|v_k(t_j+1)>| along the grid."""
        if len(self.times) < 2:
            return np.ones(self.eigenvalues.shape[1])
        step = np.abs(np.einsum("nik,nik->nk", self.eigenvectors[:-1].conj(), self.eigenvectors[1:]))
        return step.min(axis=0)


def dressed_frame(times: Sequence[float], hamiltonian: FMHamiltonian) -> DressedFrame:
    times = np.asarray(times, dtype=float)
    stack = hamiltonian(times)
    values: List[np.ndarray] = []
    vectors: List[np.ndarray] = []
    previous = None
    for matrix in stack:
        e, v = dressed_eigensystem(matrix, previous)
        values.append(e)
        vectors.append(v)
        previous = v
    logger.debug("dressed frame built over %d times (M=%d)", len(times), hamiltonian.dim)
    return DressedFrame(times=times, eigenvalues=np.array(values), eigenvectors=np.array(vectors))
