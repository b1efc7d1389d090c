"""
Chirpsim - Chirped Pulse Model
Envelope, Taylor-series phase, instantaneous frequency sweep and N-photon Rabi frequency

Units: time in ps, every frequency in angular rad/ps.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import trapezoid

ArrayLike = Union[float, np.ndarray]

GHZ_TO_RAD_PER_PS = 2 * math.pi * 1e-3
WAVENUMBER_TO_GHZ = 29.9792458
SPEED_OF_LIGHT_CM_PER_PS = 2.99792458e-2

# 2*ln(1+sqrt(2)) makes sech^2 drop to 1/2 at +/- fwhm/2
_SECH_FWHM_FACTOR = 2 * math.log(1 + math.sqrt(2))
_GAUSS_FWHM_FACTOR = 2 * math.log(2)


class PulseError(ValueError):
    """Invalid pulse parameters."""


class EnvelopeShape(str, Enum):
    GAUSSIAN = "gaussian"
    SECH = "sech"
    CONSTANT = "constant"


def ghz_to_rad_per_ps(value: ArrayLike) -> ArrayLike:
    """Ordinary frequency in GHz -> angular frequency in rad/ps."""
    return np.asarray(value, dtype=float) * GHZ_TO_RAD_PER_PS if np.ndim(value) else value * GHZ_TO_RAD_PER_PS


def rad_per_ps_to_ghz(value: ArrayLike) -> ArrayLike:
    return np.asarray(value, dtype=float) / GHZ_TO_RAD_PER_PS if np.ndim(value) else value / GHZ_TO_RAD_PER_PS


def wavenumber_to_rad_per_ps(value: ArrayLike) -> ArrayLike:
    """cm^-1 -> GHz -> rad/ps."""
    return ghz_to_rad_per_ps(np.asarray(value, dtype=float) * WAVENUMBER_TO_GHZ if np.ndim(value) else value * WAVENUMBER_TO_GHZ)


@dataclass(frozen=True)
class ChirpCoefficients:
    """Taylor coefficients b_0..b_K of the phase, b_n in rad/ps^n."""

    coeffs: Tuple[float, ...] = (0.0,)

    def __post_init__(self):
        values = tuple(float(c) for c in self.coeffs)
        if not values:
            raise PulseError("chirp needs at least b_0")
        if not all(math.isfinite(c) for c in values):
            raise PulseError(f"chirp coefficients must be finite, got {values}")
        object.__setattr__(self, "coeffs", values)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_transform_limited(self) -> bool:
        return all(c == 0.0 for c in self.coeffs[1:])

    def single_term_order(self) -> Optional[int]:
        """Index n of the only nonzero b_n (n >= 1), or None if there is not exactly one."""
        nonzero = [n for n, c in enumerate(self.coeffs) if n >= 1 and c != 0.0]
        return nonzero[0] if len(nonzero) == 1 else None


def single_term_chirp(order: int, sweep_at: float, at_time: float) -> ChirpCoefficients:
    """
    Chirp with only b_order set, scaled so the sweep n*b_n*t^(n-1) equals
    `sweep_at` (rad/ps) at t = `at_time` (ps).
    """
    if order < 1:
        raise PulseError(f"single-term chirp order must be >= 1, got {order}")
    if order > 1 and at_time == 0:
        raise PulseError("at_time must be nonzero for order >= 2")
    b_n = sweep_at / (order * at_time ** (order - 1))
    return ChirpCoefficients(tuple([0.0] * order + [b_n]))


def chirp_from_wavenumbers(coeffs_cm: Sequence[float],
                           c_cm_per_ps: float = SPEED_OF_LIGHT_CM_PER_PS) -> ChirpCoefficients:
    """
    Convert b_n quoted in cm^-n under the convention t -> c*t:
    phi = sum b_n (c t)^n, so b_n[rad/ps^n] = b_n[cm^-n] * c^n.
    """
    return ChirpCoefficients(tuple(b * c_cm_per_ps ** n for n, b in enumerate(coeffs_cm)))


def phase(t: ArrayLike, chirp: ChirpCoefficients) -> ArrayLike:
    """phi(t) = sum_n b_n t^n, Horner evaluation."""
    return P.polyval(t, chirp.coeffs)


def instantaneous_frequency(t: ArrayLike, chirp: ChirpCoefficients) -> ArrayLike:
    """phi_dot(t) = sum_{n>=1} n b_n t^(n-1)."""
    if len(chirp.coeffs) == 1:
        return np.zeros_like(np.asarray(t, dtype=float)) if np.ndim(t) else 0.0
    return P.polyval(t, P.polyder(chirp.coeffs))


def sweep_rate(t: ArrayLike, chirp: ChirpCoefficients) -> ArrayLike:
    """phi_ddot(t), the time derivative of the sweep."""
    if len(chirp.coeffs) <= 2:
        return np.zeros_like(np.asarray(t, dtype=float)) if np.ndim(t) else 0.0
    return P.polyval(t, P.polyder(chirp.coeffs, 2))


@dataclass(frozen=True)
class EnvelopeSpec:
    shape: EnvelopeShape = EnvelopeShape.GAUSSIAN
    peak_amplitude: float = 1.0
    fwhm: float = 1.0
    center: float = 0.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "shape", EnvelopeShape(self.shape))
        except ValueError:
            raise PulseError(f"unknown envelope shape '{self.shape}'")
        if not (math.isfinite(self.peak_amplitude) and self.peak_amplitude >= 0):
            raise PulseError(f"peak_amplitude must be finite and >= 0, got {self.peak_amplitude}")
        if not (math.isfinite(self.fwhm) and self.fwhm > 0):
            raise PulseError(f"fwhm must be finite and > 0, got {self.fwhm}")
        if not math.isfinite(self.center):
            raise PulseError(f"center must be finite, got {self.center}")


def envelope_amplitude(t: ArrayLike, env: EnvelopeSpec,
                       window: Optional[Tuple[float, float]] = None) -> ArrayLike:
    """
    Field envelope eps(t). The fwhm is that of the intensity eps^2.

    Constant envelopes are `peak_amplitude` inside `window` (everywhere when
    no window is given) and zero outside.
    """
    t_arr = np.asarray(t, dtype=float)
    x = t_arr - env.center
    if env.shape is EnvelopeShape.GAUSSIAN:
        values = env.peak_amplitude * np.exp(-_GAUSS_FWHM_FACTOR * (x / env.fwhm) ** 2)
    elif env.shape is EnvelopeShape.SECH:
        values = env.peak_amplitude / np.cosh(_SECH_FWHM_FACTOR * x / env.fwhm)
    else:
        values = np.full_like(x, env.peak_amplitude)
        if window is not None:
            values = np.where((t_arr >= window[0]) & (t_arr <= window[1]), values, 0.0)
    return values if np.ndim(t) else float(values)


@dataclass(frozen=True)
class PulseSpec:
    """
    A chirped pulse over the simulation window [start, end].

    The chirp polynomial is evaluated in time relative to the envelope
    center, so single-term chirps are (anti)symmetric about the pulse peak.
    """

    envelope: EnvelopeSpec = field(default_factory=EnvelopeSpec)
    chirp: ChirpCoefficients = field(default_factory=ChirpCoefficients)
    photon_order: int = 1
    start: float = -1.0
    end: float = 1.0

    def __post_init__(self):
        if int(self.photon_order) != self.photon_order or self.photon_order < 1:
            raise PulseError(f"photon_order must be an integer >= 1, got {self.photon_order}")
        object.__setattr__(self, "photon_order", int(self.photon_order))
        if not (math.isfinite(self.start) and math.isfinite(self.end)) or self.start >= self.end:
            raise PulseError(f"pulse window needs start < end, got [{self.start}, {self.end}]")

    @property
    def window(self) -> Tuple[float, float]:
        return (self.start, self.end)

    def envelope_at(self, t: ArrayLike) -> ArrayLike:
        return envelope_amplitude(t, self.envelope, self.window)

    def phi_dot(self, t: ArrayLike) -> ArrayLike:
        """phi_dot evaluated at t - center."""
        return instantaneous_frequency(np.asarray(t, dtype=float) - self.envelope.center if np.ndim(t)
                                       else t - self.envelope.center, self.chirp)

    def sweep(self, t: ArrayLike) -> ArrayLike:
        """N * phi_dot(t): the resonance offset added to every excited level."""
        return self.photon_order * self.phi_dot(t)

    def sweep_derivative(self, t: ArrayLike) -> ArrayLike:
        return self.photon_order * sweep_rate(np.asarray(t, dtype=float) - self.envelope.center if np.ndim(t)
                                              else t - self.envelope.center, self.chirp)

    def fwhm_window(self) -> Tuple[float, float]:
        """Intensity-FWHM span around the envelope center."""
        half = self.envelope.fwhm / 2
        return (self.envelope.center - half, self.envelope.center + half)

    def with_chirp(self, chirp: ChirpCoefficients) -> "PulseSpec":
        return replace(self, chirp=chirp)

    def with_shape(self, shape: EnvelopeShape) -> "PulseSpec":
        return replace(self, envelope=replace(self.envelope, shape=EnvelopeShape(shape)))

    def scaled(self, factor: float) -> "PulseSpec":
        """Same pulse with the peak amplitude multiplied by `factor`."""
        return replace(self, envelope=replace(self.envelope, peak_amplitude=self.envelope.peak_amplitude * factor))


def rabi_frequency(t: ArrayLike, pulse: PulseSpec, mu_eff: float = 1.0) -> Union[complex, np.ndarray]:
    """
    Omega(t) = (mu_eff * eps(t))^N with hbar = 1.

    Real-valued here (the phase lives in the FM frame); returned as complex.
    """
    field_ = mu_eff * pulse.envelope_at(t)
    omega = np.asarray(field_, dtype=float) ** pulse.photon_order
    return omega.astype(complex) if np.ndim(t) else complex(omega)


def pulse_area(pulse: PulseSpec, mu_eff: float = 1.0, samples: int = 20001) -> float:
    """
    2 * integral |Omega| dt over the window.

    H^FM carries Omega (not Omega/2) off the diagonal, so on resonance the
    excited population after the pulse is sin^2(area / 2).
    """
    times = np.linspace(pulse.start, pulse.end, samples)
    return 2.0 * float(trapezoid(np.abs(rabi_frequency(times, pulse, mu_eff)), times))
