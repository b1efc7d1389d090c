"""
Chirpsim - Scenario Configuration
Strict JSON scenario files, unit conversion, presets and environment settings
"""

import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from propagator import IntegratorConfig
from pulse import (ChirpCoefficients, EnvelopeShape, EnvelopeSpec, GHZ_TO_RAD_PER_PS, PulseError,
                   PulseSpec, WAVENUMBER_TO_GHZ, chirp_from_wavenumbers, single_term_chirp)
from quantum_system import PRESETS_GHZ, HamiltonianError, QuantumSystem, preset

logger = logging.getLogger(__name__)

UNIT_FACTORS = {
    "rad/ps": 1.0,
    "GHz": GHZ_TO_RAD_PER_PS,
    "cm-1": WAVENUMBER_TO_GHZ * GHZ_TO_RAD_PER_PS,
}
OUTPUTS = ("populations", "eigen", "pulse", "character", "plots")
# highest chirp order accepted unless the chirp sets allow_high_order
MAX_CHIRP_ORDER = 8

SECTION_KEYS = {
    "": {"name", "description", "system", "pulse", "integrator", "outputs", "sweep", "gate", "beats"},
    "system": {"preset", "units", "detunings", "couplings", "mu_eff", "name"},
    "pulse": {"shape", "peak_amplitude", "fwhm", "center", "start", "end", "photon_order", "chirp"},
    "chirp": {"coeffs", "order", "sweep_at_fwhm", "coeffs_cm", "allow_high_order"},
    "integrator": {"method", "step", "tolerance", "samples"},
    "sweep": {"orders", "sweep_at_fwhm", "shapes", "rabi_scales", "threshold"},
    "gate": {"threshold", "inverting", "dark"},
    "beats": {"record_ps", "samples", "level"},
}


class ConfigError(ValueError):
    """Bad scenario file; `key` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class SweepConfig:
    orders: Tuple[int, ...] = (2, 3, 4, 5)
    sweep_at_fwhm: float = 3.0
    shapes: Tuple[EnvelopeShape, ...] = (EnvelopeShape.GAUSSIAN, EnvelopeShape.SECH)
    rabi_scales: Tuple[float, ...] = (0.8, 1.2)
    threshold: float = 0.99


@dataclass(frozen=True)
class GateConfig:
    inverting: PulseSpec
    dark: PulseSpec
    threshold: float = 0.9


@dataclass(frozen=True)
class BeatConfig:
    record_ps: float = 20480.0
    samples: int = 4096
    level: int = 1


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    system: QuantumSystem
    pulse: PulseSpec
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    outputs: Tuple[str, ...] = ("populations", "eigen", "pulse")
    sweep: Optional[SweepConfig] = None
    gate: Optional[GateConfig] = None
    beats: Optional[BeatConfig] = None
    description: str = ""


# --- parsing helpers ---------------------------------------------------------

def _check_keys(section: str, data: Any, kind: Optional[str] = None) -> Dict[str, Any]:
    if not isinstance(data, dict):
        raise ConfigError(section or "<root>", "expected an object")
    if kind is None:
        kind = section.split(".")[-1] if section else ""
    allowed = SECTION_KEYS[kind]
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{section}.{key}" if section else key, "unknown key")
    return data


def _number(key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(key, f"expected a finite number, got {value!r}")
    return float(value)


def _integer(key: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return value


def _numbers(key: str, values: Any) -> List[float]:
    if not isinstance(values, list):
        raise ConfigError(key, "expected a list of numbers")
    return [_number(f"{key}[{i}]", v) for i, v in enumerate(values)]


def _parse_system(data: Any) -> QuantumSystem:
    data = _check_keys("system", data)
    mu_eff = _number("system.mu_eff", data.get("mu_eff", 1.0))
    try:
        if "preset" in data:
            extra = set(data) - {"preset", "mu_eff"}
            if extra:
                raise ConfigError(f"system.{sorted(extra)[0]}", "not allowed together with a preset")
            name = data["preset"]
            if name not in PRESETS_GHZ:
                raise ConfigError("system.preset", f"unknown preset '{name}', available: {sorted(PRESETS_GHZ)}")
            return preset(name, mu_eff)

        units = data.get("units", "rad/ps")
        if units not in UNIT_FACTORS:
            raise ConfigError("system.units", f"expected one of {sorted(UNIT_FACTORS)}, got '{units}'")
        factor = UNIT_FACTORS[units]
        if "detunings" not in data:
            raise ConfigError("system.detunings", "required unless a preset is given")
        detunings = [d * factor for d in _numbers("system.detunings", data["detunings"])]
        couplings_raw = data.get("couplings", [])
        if not isinstance(couplings_raw, list):
            raise ConfigError("system.couplings", "expected a matrix (list of rows)")
        couplings = [[v * factor for v in _numbers(f"system.couplings[{i}]", row)]
                     for i, row in enumerate(couplings_raw)]
        return QuantumSystem(detunings=tuple(detunings), couplings=tuple(tuple(r) for r in couplings),
                             mu_eff=mu_eff, name=str(data.get("name", "")))
    except HamiltonianError as e:
        raise ConfigError("system", str(e))


def _parse_chirp(data: Any, fwhm: float) -> ChirpCoefficients:
    data = _check_keys("pulse.chirp", data)
    forms = [k for k in ("coeffs", "order", "coeffs_cm") if k in data]
    if len(forms) != 1:
        raise ConfigError("pulse.chirp", "give exactly one of 'coeffs', 'order' (+ 'sweep_at_fwhm') or 'coeffs_cm'")
    form = forms[0]
    if form != "order" and "sweep_at_fwhm" in data:
        raise ConfigError("pulse.chirp.sweep_at_fwhm", "only valid together with 'order'")
    allow_high_order = data.get("allow_high_order", False)
    if not isinstance(allow_high_order, bool):
        raise ConfigError("pulse.chirp.allow_high_order", f"expected true or false, got {allow_high_order!r}")

    if form == "coeffs":
        chirp = ChirpCoefficients(tuple(_numbers("pulse.chirp.coeffs", data["coeffs"])))
    elif form == "coeffs_cm":
        chirp = chirp_from_wavenumbers(_numbers("pulse.chirp.coeffs_cm", data["coeffs_cm"]))
    else:
        if "sweep_at_fwhm" not in data:
            raise ConfigError("pulse.chirp.sweep_at_fwhm", "required with 'order'")
        chirp = single_term_chirp(_integer("pulse.chirp.order", data["order"]),
                                  _number("pulse.chirp.sweep_at_fwhm", data["sweep_at_fwhm"]), fwhm)

    if chirp.order > MAX_CHIRP_ORDER and not allow_high_order:
        raise ConfigError(f"pulse.chirp.{form}",
                          f"chirp order {chirp.order} is above {MAX_CHIRP_ORDER}; set allow_high_order to accept it")
    return chirp


def check_sweep_orders(key: str, orders: Sequence[int]) -> None:
    for i, order in enumerate(orders):
        if order > MAX_CHIRP_ORDER:
            raise ConfigError(f"{key}[{i}]", f"chirp order {order} is above {MAX_CHIRP_ORDER}")


def _parse_pulse(data: Any, section: str = "pulse") -> PulseSpec:
    data = _check_keys(section, data, "pulse")
    for required in ("peak_amplitude", "fwhm", "start", "end"):
        if required not in data:
            raise ConfigError(f"{section}.{required}", "required")
    try:
        shape = data.get("shape", "gaussian")
        if shape not in [s.value for s in EnvelopeShape]:
            raise ConfigError(f"{section}.shape", f"expected one of {[s.value for s in EnvelopeShape]}")
        envelope = EnvelopeSpec(
            shape=EnvelopeShape(shape),
            peak_amplitude=_number(f"{section}.peak_amplitude", data["peak_amplitude"]),
            fwhm=_number(f"{section}.fwhm", data["fwhm"]),
            center=_number(f"{section}.center", data.get("center", 0.0)),
        )
        chirp = _parse_chirp(data.get("chirp", {"coeffs": [0.0]}), envelope.fwhm)
        return PulseSpec(
            envelope=envelope,
            chirp=chirp,
            photon_order=_integer(f"{section}.photon_order", data.get("photon_order", 1)),
            start=_number(f"{section}.start", data["start"]),
            end=_number(f"{section}.end", data["end"]),
        )
    except PulseError as e:
        raise ConfigError(section, str(e))


def _parse_integrator(data: Any) -> IntegratorConfig:
    data = _check_keys("integrator", data)
    step = data.get("step")
    try:
        return IntegratorConfig(
            method=str(data.get("method", "rk4")),
            step=None if step is None else _number("integrator.step", step),
            tolerance=_number("integrator.tolerance", data.get("tolerance", 1e-10)),
            samples=_integer("integrator.samples", data.get("samples", 2000)),
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError("integrator", str(e))


def _parse_outputs(data: Any) -> Tuple[str, ...]:
    if not isinstance(data, list) or not all(isinstance(o, str) for o in data):
        raise ConfigError("outputs", "expected a list of artifact names")
    for name in data:
        if name not in OUTPUTS:
            raise ConfigError("outputs", f"unknown artifact '{name}', expected one of {list(OUTPUTS)}")
    return tuple(data)


def _parse_sweep(data: Any) -> SweepConfig:
    data = _check_keys("sweep", data)
    orders = data.get("orders", [2, 3, 4, 5])
    if not isinstance(orders, list):
        raise ConfigError("sweep.orders", "expected a list of integers")
    shapes = data.get("shapes", ["gaussian", "sech"])
    valid_shapes = [s.value for s in EnvelopeShape]
    if not isinstance(shapes, list) or any(s not in valid_shapes for s in shapes):
        raise ConfigError("sweep.shapes", f"expected a list drawn from {valid_shapes}")
    orders = tuple(_integer(f"sweep.orders[{i}]", o) for i, o in enumerate(orders))
    check_sweep_orders("sweep.orders", orders)
    return SweepConfig(
        orders=orders,
        sweep_at_fwhm=_number("sweep.sweep_at_fwhm", data.get("sweep_at_fwhm", 3.0)),
        shapes=tuple(EnvelopeShape(s) for s in shapes),
        rabi_scales=tuple(_numbers("sweep.rabi_scales", data.get("rabi_scales", [0.8, 1.2]))),
        threshold=_number("sweep.threshold", data.get("threshold", 0.99)),
    )


def _parse_gate(data: Any, base_pulse: Dict[str, Any]) -> GateConfig:
    data = _check_keys("gate", data)
    for role in ("inverting", "dark"):
        if role not in data:
            raise ConfigError(f"gate.{role}", "required")
    pulses = {}
    for role in ("inverting", "dark"):
        override = data[role]
        if not isinstance(override, dict):
            raise ConfigError(f"gate.{role}", "expected an object of pulse overrides")
        pulses[role] = _parse_pulse({**base_pulse, **override}, f"gate.{role}")
    return GateConfig(inverting=pulses["inverting"], dark=pulses["dark"],
                      threshold=_number("gate.threshold", data.get("threshold", 0.9)))


def _parse_beats(data: Any) -> BeatConfig:
    data = _check_keys("beats", data)
    return BeatConfig(
        record_ps=_number("beats.record_ps", data.get("record_ps", 20480.0)),
        samples=_integer("beats.samples", data.get("samples", 4096)),
        level=_integer("beats.level", data.get("level", 1)),
    )


def parse_scenario(data: Any) -> ScenarioConfig:
    data = _check_keys("", data)
    for required in ("system", "pulse"):
        if required not in data:
            raise ConfigError(required, "required section missing")
    system = _parse_system(data["system"])
    pulse = _parse_pulse(data["pulse"])
    config = ScenarioConfig(
        name=str(data.get("name", "scenario")),
        description=str(data.get("description", "")),
        system=system,
        pulse=pulse,
        integrator=_parse_integrator(data.get("integrator", {})),
        outputs=_parse_outputs(data.get("outputs", ["populations", "eigen", "pulse"])),
        sweep=_parse_sweep(data["sweep"]) if "sweep" in data else None,
        gate=_parse_gate(data["gate"], data["pulse"]) if "gate" in data else None,
        beats=_parse_beats(data["beats"]) if "beats" in data else None,
    )
    if config.beats and not 0 <= config.beats.level < system.dim:
        raise ConfigError("beats.level", f"level must lie in 0..{system.dim - 1}")
    return config


# --- serialization -----------------------------------------------------------

def _system_to_dict(system: QuantumSystem) -> Dict[str, Any]:
    if system.name in PRESETS_GHZ and preset(system.name, system.mu_eff) == system:
        return {"preset": system.name, "mu_eff": system.mu_eff}
    return {
        "name": system.name,
        "units": "rad/ps",
        "detunings": list(system.detunings),
        "couplings": [list(row) for row in system.couplings],
        "mu_eff": system.mu_eff,
    }


def _pulse_to_dict(pulse: PulseSpec) -> Dict[str, Any]:
    chirp: Dict[str, Any] = {"coeffs": list(pulse.chirp.coeffs)}
    if len(pulse.chirp.coeffs) - 1 > MAX_CHIRP_ORDER:
        chirp["allow_high_order"] = True
    return {
        "shape": pulse.envelope.shape.value,
        "peak_amplitude": pulse.envelope.peak_amplitude,
        "fwhm": pulse.envelope.fwhm,
        "center": pulse.envelope.center,
        "start": pulse.start,
        "end": pulse.end,
        "photon_order": pulse.photon_order,
        "chirp": chirp,
    }


def scenario_to_dict(config: ScenarioConfig) -> Dict[str, Any]:
    """Internal units throughout, so parse_scenario(scenario_to_dict(c)) == c."""
    data: Dict[str, Any] = {
        "name": config.name,
        "description": config.description,
        "system": _system_to_dict(config.system),
        "pulse": _pulse_to_dict(config.pulse),
        "integrator": {
            "method": config.integrator.method,
            "step": config.integrator.step,
            "tolerance": config.integrator.tolerance,
            "samples": config.integrator.samples,
        },
        "outputs": list(config.outputs),
    }
    if config.sweep:
        data["sweep"] = {
            "orders": list(config.sweep.orders),
            "sweep_at_fwhm": config.sweep.sweep_at_fwhm,
            "shapes": [s.value for s in config.sweep.shapes],
            "rabi_scales": list(config.sweep.rabi_scales),
            "threshold": config.sweep.threshold,
        }
    if config.gate:
        data["gate"] = {
            "threshold": config.gate.threshold,
            "inverting": _pulse_to_dict(config.gate.inverting),
            "dark": _pulse_to_dict(config.gate.dark),
        }
    if config.beats:
        data["beats"] = {"record_ps": config.beats.record_ps, "samples": config.beats.samples,
                         "level": config.beats.level}
    return data


def serialize_scenario(config: ScenarioConfig) -> str:
    return json.dumps(scenario_to_dict(config), indent=2, sort_keys=True)


def scenario_hash(config: ScenarioConfig) -> str:
    return hashlib.sha256(serialize_scenario(config).encode("utf-8")).hexdigest()


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(str(path), "scenario file not found")
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(str(path), f"invalid JSON ({e})")
    config = parse_scenario(data)
    logger.debug("loaded scenario '%s' from %s", config.name, path)
    return config


def save_scenario(config: ScenarioConfig, path) -> Path:
    path = Path(path)
    path.write_text(serialize_scenario(config) + "\n", encoding="utf-8")
    return path


def with_overrides(config: ScenarioConfig, step: Optional[float] = None,
                   preset_name: Optional[str] = None) -> ScenarioConfig:
    """Apply command-line overrides (--step, --preset)."""
    if step is not None:
        try:
            config = replace(config, integrator=replace(config.integrator, step=step))
        except ValueError as e:
            raise ConfigError("--step", str(e))
    if preset_name is not None:
        if preset_name not in PRESETS_GHZ:
            raise ConfigError("--preset", f"unknown preset '{preset_name}', available: {sorted(PRESETS_GHZ)}")
        config = replace(config, system=preset(preset_name, config.system.mu_eff))
    return config


# --- environment -------------------------------------------------------------

def load_env(env_path: Optional[Path] = None) -> None:
    """Load CHIRPSIM_* settings from a .env file; the real environment wins."""
    env_path = env_path or Path(__file__).parent / ".env"
    if env_path.exists():
        with open(env_path) as f:
            for line in f:
                line = line.strip()
                if line and not line.startswith('#') and '=' in line:
                    key, value = line.split('=', 1)
                    os.environ.setdefault(key.strip(), value.strip().strip('"').strip("'"))


def thread_count() -> Optional[int]:
    """Worker cap from CHIRPSIM_THREADS; None lets the pool decide."""
    raw = os.getenv("CHIRPSIM_THREADS")
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError("CHIRPSIM_THREADS", f"expected a positive integer, got '{raw}'")
    if value < 1:
        raise ConfigError("CHIRPSIM_THREADS", f"expected a positive integer, got '{raw}'")
    return value


def log_level() -> str:
    return os.getenv("CHIRPSIM_LOG_LEVEL", "INFO").upper()
