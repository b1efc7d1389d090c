"""
Chirpsim - Ensemble CNOT with Chirped Pulses
Control bit A selects the pulse (1 = inverting, 0 = dark); target bit B is the prepared state.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from propagator import DensityMatrix, IntegratorConfig, evolve_density
from pulse import PulseSpec
from quantum_system import FMHamiltonian, QuantumSystem

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.9

# (A, B) in the order rows are reported
TRUTH_TABLE_INPUTS = ((1, 1), (1, 0), (0, 1), (0, 0))


class ClassificationError(RuntimeError):
    """A gate pulse does not behave as its role requires."""


class PulseClass(str, Enum):
    INVERTING = "inverting"
    DARK = "dark"
    NEITHER = "neither"


def apply_pulses(pulses: Sequence[PulseSpec], system: QuantumSystem, rho0: DensityMatrix,
                 cfg: IntegratorConfig = IntegratorConfig()) -> np.ndarray:
    """Apply pulses back to back, each over its own window; returns the final rho."""
    stored = IntegratorConfig(cfg.method, cfg.step, cfg.tolerance, 2)
    rho = rho0
    for pulse in pulses:
        traj = evolve_density(FMHamiltonian(pulse, system), rho, pulse.window, stored)
        rho = traj.final
    return rho.matrix


def _transfer(pulse: PulseSpec, system: QuantumSystem, initial: int, cfg: IntegratorConfig) -> np.ndarray:
    rho = apply_pulses([pulse], system, DensityMatrix.basis(system.dim, initial), cfg)
    return rho.diagonal().real


def classify_pulse(pulse: PulseSpec, system: QuantumSystem, threshold: float = DEFAULT_THRESHOLD,
                   cfg: IntegratorConfig = IntegratorConfig()) -> PulseClass:
    """
    Inverting: ground -> bright population above threshold.
    Dark: ground and bright each preserved above threshold.
    """
    from_ground = _transfer(pulse, system, 0, cfg)
    if from_ground[1] > threshold:
        return PulseClass.INVERTING
    if from_ground[0] > threshold:
        from_bright = _transfer(pulse, system, 1, cfg)
        if from_bright[1] > threshold:
            return PulseClass.DARK
    return PulseClass.NEITHER


@dataclass(frozen=True)
class GateRow:
    control: int
    target: int
    output: int
    expected: int
    fidelity: float


@dataclass(frozen=True)
class GateReport:
    rows: List[GateRow]
    threshold: float
    system_name: str = ""

    @property
    def passed(self) -> bool:
        return len(self.rows) == 4 and all(r.fidelity >= self.threshold and r.output == r.expected
                                           for r in self.rows)

    def render(self) -> str:
        lines = [f"{'A':>3} {'B':>3} {'out':>5} {'A^B':>5} {'fidelity':>10}",
                 "-" * 30]
        for r in self.rows:
            mark = "✓" if r.fidelity >= self.threshold and r.output == r.expected else "✗"
            lines.append(f"{r.control:>3} {r.target:>3} {r.output:>5} {r.expected:>5} {r.fidelity:>10.6f} {mark}")
        return "\n".join(lines)


def _run_row(control: int, target: int, pulses: dict, system: QuantumSystem, cfg: IntegratorConfig) -> GateRow:
    final = _transfer(pulses[control], system, target, cfg)
    readout = np.array([final[0], final[1]])
    expected = control ^ target
    return GateRow(control=control, target=target, output=int(np.argmax(readout)),
                   expected=expected, fidelity=float(readout[expected]))


def cnot_truth_table(inverting: PulseSpec, dark: PulseSpec, system: QuantumSystem,
                     threshold: float = DEFAULT_THRESHOLD, cfg: IntegratorConfig = IntegratorConfig(),
                     workers: Optional[int] = None, check_pulses: bool = True) -> GateReport:
    """
    All four (A, B) rows. B is prepared exactly as |0> or |1> (bright state);
    the output bit is the more populated of the two.
    """
    if check_pulses:
        for role, pulse, wanted in (("inverting", inverting, PulseClass.INVERTING),
                                    ("dark", dark, PulseClass.DARK)):
            found = classify_pulse(pulse, system, threshold, cfg)
            if found is not wanted:
                raise ClassificationError(f"{role} pulse classified as {found.value} on {system.name or 'system'}")

    pulses = {1: inverting, 0: dark}
    with ThreadPoolExecutor(max_workers=workers or len(TRUTH_TABLE_INPUTS)) as pool:
        rows = list(pool.map(lambda ab: _run_row(ab[0], ab[1], pulses, system, cfg), TRUTH_TABLE_INPUTS))
    report = GateReport(rows=rows, threshold=threshold, system_name=system.name)
    logger.info("CNOT on %s: %s", system.name or "system", "pass" if report.passed else "fail")
    return report
