"""
Chirpsim - Observables
Populations, photon locking, quantum-beat spectra, adiabaticity and the chirp-order parity rule
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import signal
from scipy.interpolate import interp1d

from propagator import DensityMatrix, DensityTrajectory, IntegratorConfig, evolve_density
from pulse import (ChirpCoefficients, EnvelopeShape, EnvelopeSpec, PulseError, PulseSpec,
                   single_term_chirp)
from quantum_system import DressedFrame, FMHamiltonian, QuantumSystem, dressed_eigensystem

logger = logging.getLogger(__name__)

CLOSURE_TOL = 1e-8
IMAG_TOL = 1e-10
MIN_BEAT_SAMPLES = 16
PEAK_THRESHOLD = 0.05
ZERO_PAD = 4
NOISE_FLOOR = 1e-10


class WindowError(ValueError):
    """Requested window is not covered by the series."""


class SpectrumError(ValueError):
    """Series unsuitable for spectral analysis."""


class IndeterminateOutcome(RuntimeError):
    """Neither inversion nor transparency threshold met."""

    def __init__(self, order: int, p_excited: float, p_ground: float):
        super().__init__(f"chirp order {order}: P_excited={p_excited:.4f}, P_ground={p_ground:.4f} "
                         f"meets neither threshold (non-adiabatic parameters?)")
        self.order = order
        self.p_excited = p_excited
        self.p_ground = p_ground


class ChirpOutcome(str, Enum):
    INVERSION = "inversion"
    TRANSPARENCY = "transparency"


@dataclass
class PopulationSeries:
    times: np.ndarray
    values: np.ndarray  # (n, M)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or len(self.times) != self.values.shape[0]:
            raise ValueError(f"populations shape {self.values.shape} does not match {len(self.times)} times")
        closure = np.max(np.abs(self.values.sum(axis=1) - 1.0))
        if closure > CLOSURE_TOL:
            raise ValueError(f"populations do not sum to 1 (max deviation {closure:.3e})")
        if self.values.min() < -1e-9 or self.values.max() > 1 + 1e-9:
            raise ValueError("population outside [0, 1]")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def level(self, index: int) -> np.ndarray:
        return self.values[:, index]

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]


def populations(traj: DensityTrajectory) -> PopulationSeries:
    diagonal = np.einsum("nii->ni", traj.states)
    worst_imag = float(np.max(np.abs(diagonal.imag)))
    if worst_imag > IMAG_TOL:
        raise ValueError(f"populations carry imaginary parts up to {worst_imag:.3e}")
    return PopulationSeries(times=traj.times, values=diagonal.real)


def envelope_fwhm_window(pulse: PulseSpec) -> Tuple[float, float]:
    return pulse.fwhm_window()


@dataclass(frozen=True)
class LockReport:
    window: Tuple[float, float]
    min_bright: float
    mean_bright: float
    max_bright: float
    final_bright: float
    final_ground: float


def lock_report(series: PopulationSeries, pulse: PulseSpec, bright_index: int = 1) -> LockReport:
    """Bright-state statistics over the intensity FWHM plus final populations."""
    if not 0 <= bright_index < series.dim:
        raise ValueError(f"bright_index {bright_index} outside 0..{series.dim - 1}")
    t_a, t_b = envelope_fwhm_window(pulse)
    lo, hi = float(series.times.min()), float(series.times.max())
    if t_a < lo or t_b > hi:
        raise WindowError(f"FWHM window [{t_a}, {t_b}] ps outside trajectory [{lo}, {hi}] ps")
    inside = (series.times >= t_a) & (series.times <= t_b)
    if not inside.any():
        raise WindowError(f"no stored samples inside [{t_a}, {t_b}] ps")
    bright = series.level(bright_index)[inside]
    return LockReport(
        window=(t_a, t_b),
        min_bright=float(bright.min()),
        mean_bright=float(bright.mean()),
        max_bright=float(bright.max()),
        final_bright=float(series.final[bright_index]),
        final_ground=float(series.final[0]),
    )


@dataclass
class BeatSpectrum:
    frequencies: np.ndarray  # rad/ps
    power: np.ndarray
    peaks: np.ndarray        # rad/ps, strongest first
    resolution: float        # rad/ps, 2 pi / record length


def _uniform(times: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    steps = np.diff(times)
    if np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        return times, values
    grid = np.linspace(times[0], times[-1], len(times))
    logger.debug("resampling %d non-uniform samples onto a uniform grid", len(times))
    return grid, interp1d(times, values, kind="cubic")(grid)


def beat_spectrum(series: PopulationSeries, level: int,
                  window: Optional[Tuple[float, float]] = None) -> BeatSpectrum:
    """
    Detrended, Hann-windowed, 4x zero-padded power spectrum of P_level(t).

    Peaks are local maxima above 5% of the largest, refined by a parabola
    through the three bins around each maximum.
    """
    if not 0 <= level < series.dim:
        raise SpectrumError(f"level {level} outside 0..{series.dim - 1}")
    times, values = series.times, series.level(level)
    if window is not None:
        mask = (times >= window[0]) & (times <= window[1])
        times, values = times[mask], values[mask]
    if len(times) < MIN_BEAT_SAMPLES:
        raise SpectrumError(f"need at least {MIN_BEAT_SAMPLES} samples, got {len(times)}")

    times, values = _uniform(times, values)
    dt = float(times[1] - times[0])
    n = len(values)
    nfft = ZERO_PAD * n
    detrended = signal.detrend(values, type="linear")
    tapered = detrended * signal.windows.hann(n, sym=False)

    power = np.abs(np.fft.rfft(tapered, n=nfft)) ** 2
    bin_width = 2 * math.pi / (nfft * abs(dt))
    frequencies = bin_width * np.arange(len(power))
    resolution = 2 * math.pi / (n * abs(dt))

    if np.std(detrended) < NOISE_FLOOR:
        return BeatSpectrum(frequencies, power, np.array([]), resolution)

    indices, _ = signal.find_peaks(power, height=PEAK_THRESHOLD * power.max())
    refined = []
    for k in indices:
        a, b, c = power[k - 1], power[k], power[k + 1]
        denom = a - 2 * b + c
        offset = 0.5 * (a - c) / denom if denom != 0 else 0.0
        refined.append(((k + offset) * bin_width, b))
    refined.sort(key=lambda item: -item[1])
    return BeatSpectrum(frequencies, power, np.array([f for f, _ in refined]), resolution)


def adiabaticity_margin(pulse: PulseSpec, system: QuantumSystem, samples: int = 20001) -> float:
    """
    min over the window of (delta^2 + 4|Omega|^2) / |d delta/dt| on the
    ground + bright reduction. Points with no sweep count as +inf; points
    where both field and sweep vanish are skipped.
    """
    times = np.linspace(pulse.start, pulse.end, samples)
    stack = FMHamiltonian(pulse, system.two_level_reduction())(times)
    delta = stack[:, 1, 1].real
    omega = np.abs(stack[:, 0, 1])
    delta_dot = np.abs(pulse.sweep_derivative(times))

    active = delta_dot > 0
    if not active.any():
        return math.inf
    generalized = delta[active] ** 2 + 4 * omega[active] ** 2
    return float(np.min(generalized / delta_dot[active]))


@dataclass(frozen=True)
class ParityScenario:
    """Base pulse plus the sweep magnitude every single-term chirp reaches at t = +/- fwhm."""

    pulse: PulseSpec
    system: QuantumSystem
    sweep_at_fwhm: float
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    threshold: float = 0.99

    def pulse_for(self, order: int) -> PulseSpec:
        if order < 2:
            raise PulseError(f"parity classification needs chirp order >= 2, got {order}")
        return self.pulse.with_chirp(single_term_chirp(order, self.sweep_at_fwhm, self.pulse.envelope.fwhm))


@dataclass(frozen=True)
class ParityResult:
    order: int
    p_excited: float
    p_ground: float
    outcome: Optional[ChirpOutcome]


def final_populations(pulse: PulseSpec, system: QuantumSystem, rho0: Optional[DensityMatrix] = None,
                      cfg: IntegratorConfig = IntegratorConfig()) -> np.ndarray:
    rho0 = rho0 if rho0 is not None else DensityMatrix.ground(system.dim)
    traj = evolve_density(FMHamiltonian(pulse, system), rho0, pulse.window,
                          IntegratorConfig(cfg.method, cfg.step, cfg.tolerance, 2))
    return traj.populations()[-1]


def parity_run(order: int, scenario: ParityScenario) -> ParityResult:
    final = final_populations(scenario.pulse_for(order), scenario.system, cfg=scenario.integrator)
    p_ground, p_excited = float(final[0]), float(final[1])
    outcome = None
    if p_excited > scenario.threshold:
        outcome = ChirpOutcome.INVERSION
    elif p_ground > scenario.threshold:
        outcome = ChirpOutcome.TRANSPARENCY
    logger.debug("order %d: P_g=%.6f P_e=%.6f -> %s", order, p_ground, p_excited, outcome)
    return ParityResult(order, p_excited, p_ground, outcome)


def chirp_parity_outcome(order: int, scenario: ParityScenario) -> ChirpOutcome:
    """
    Inversion if the final excited population exceeds the threshold,
    transparency if the ground population does. Orders follow the phase
    polynomial: b_2 (linear sweep) is in the inversion class.
    """
    result = parity_run(order, scenario)
    if result.outcome is None:
        raise IndeterminateOutcome(order, result.p_excited, result.p_ground)
    return result.outcome


def robustness_grid(scenario: ParityScenario, orders: Sequence[int],
                    shapes: Sequence[EnvelopeShape] = (EnvelopeShape.GAUSSIAN, EnvelopeShape.SECH),
                    rabi_scales: Sequence[float] = (1.0,),
                    workers: Optional[int] = None) -> List[Dict[str, Any]]:
    """
    Parity outcome over envelope shape x Rabi scale x chirp order.
    Failed cells carry an 'error' entry instead of raising.
    """
    cells = [(shape, scale, order) for shape in shapes for scale in rabi_scales for order in orders]

    def run(cell):
        shape, scale, order = cell
        row: Dict[str, Any] = {"shape": EnvelopeShape(shape).value, "rabi_scale": scale, "order": order}
        variant = ParityScenario(scenario.pulse.with_shape(shape).scaled(scale), scenario.system,
                                 scenario.sweep_at_fwhm, scenario.integrator, scenario.threshold)
        try:
            result = parity_run(order, variant)
        except Exception as e:
            logger.warning("grid cell %s failed: %s", row, e)
            row["error"] = str(e)
            return row
        row.update(p_excited=result.p_excited, p_ground=result.p_ground,
                   outcome=result.outcome.value if result.outcome else None)
        return row

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, cells))


def landau_zener_formula(sweep_rate: float, omega: float) -> float:
    """Diabatic survival exp(-2 pi Omega^2 / |d delta/dt|) for H = [[0, Omega], [Omega, delta(t)]]."""
    return math.exp(-2 * math.pi * omega ** 2 / abs(sweep_rate))


def landau_zener_check(sweep_rate: float, omega_peak: float, extent: float = 40.0,
                       cfg: IntegratorConfig = IntegratorConfig(samples=2)) -> float:
    """
    Numerical diabatic survival for a constant coupling and a linear sweep
    delta(t) = sweep_rate * t through resonance.

    The sweep runs until |delta| = extent * Omega at both ends. The system starts in the
    adiabatic state correlated with |0> and the survival is read as the
    population of the adiabatic state correlated with |0> at the end.
    """
    if sweep_rate == 0:
        raise ValueError("sweep_rate must be nonzero")
    scale = abs(omega_peak) if omega_peak != 0 else 1.0
    half_span = extent * scale / abs(sweep_rate)
    pulse = PulseSpec(
        envelope=EnvelopeSpec(EnvelopeShape.CONSTANT, peak_amplitude=abs(omega_peak), fwhm=2 * half_span),
        chirp=ChirpCoefficients((0.0, 0.0, sweep_rate / 2)),
        start=-half_span,
        end=half_span,
    )
    hamiltonian = FMHamiltonian(pulse, QuantumSystem.two_level())

    def ground_like(t: float) -> np.ndarray:
        _, vectors = dressed_eigensystem(hamiltonian(np.array([t]))[0])
        return vectors[:, np.argmax(np.abs(vectors[0, :]))]

    rho0 = DensityMatrix.from_state(ground_like(pulse.start))
    final = evolve_density(hamiltonian, rho0, pulse.window, cfg).states[-1]
    v = ground_like(pulse.end)
    return float(np.real(v.conj() @ final @ v))


def dressed_character(frame: DressedFrame, level: int) -> np.ndarray:
    """Weight of bare `level` in each dressed state over time, shape (n, M)."""
    return frame.character(level)
