import math
from dataclasses import replace

import numpy as np
import pytest

from gates import (ClassificationError, PulseClass, TRUTH_TABLE_INPUTS, apply_pulses, classify_pulse,
                   cnot_truth_table)
from propagator import DensityMatrix


@pytest.fixture(scope="module")
def gate(load):
    return load("gate_two_level")


def test_linear_sweep_pulse_is_inverting(gate):
    assert classify_pulse(gate.gate.inverting, gate.system) is PulseClass.INVERTING


def test_quadratic_sweep_pulse_is_dark(gate):
    assert classify_pulse(gate.gate.dark, gate.system) is PulseClass.DARK


def test_field_off_pulse_is_dark(gate):
    assert classify_pulse(gate.pulse.scaled(0.0), gate.system) is PulseClass.DARK


def test_truth_table_passes(gate):
    report = cnot_truth_table(gate.gate.inverting, gate.gate.dark, gate.system, gate.gate.threshold)
    assert report.passed
    assert [(r.control, r.target) for r in report.rows] == list(TRUTH_TABLE_INPUTS)
    for row in report.rows:
        assert row.output == row.control ^ row.target
        assert row.fidelity > 0.99


def test_render_lists_every_row(gate):
    report = cnot_truth_table(gate.gate.inverting, gate.gate.dark, gate.system, gate.gate.threshold)
    lines = report.render().splitlines()
    assert len(lines) == 2 + 4
    assert all(line.endswith("✓") for line in lines[2:])


def test_unreachable_threshold_fails_the_gate(gate):
    report = cnot_truth_table(gate.gate.inverting, gate.gate.dark, gate.system, threshold=1.0,
                              check_pulses=False)
    assert not report.passed
    # outputs are still right, only the fidelity bar is missed
    assert all(r.output == r.expected for r in report.rows)


@pytest.mark.parametrize('level', [0, 1])
def test_dark_pulse_twice_changes_nothing(level, gate):
    rho = apply_pulses([gate.gate.dark, gate.gate.dark], gate.system, DensityMatrix.basis(2, level))
    assert rho[level, level].real > 0.99


@pytest.mark.parametrize('level', [0, 1])
def test_inverting_pulse_twice_restores_the_bit(level, gate):
    rho = apply_pulses([gate.gate.inverting, gate.gate.inverting], gate.system, DensityMatrix.basis(2, level))
    assert rho[level, level].real > 0.99


def test_apply_pulses_keeps_a_valid_state(gate):
    rho = apply_pulses([gate.gate.inverting, gate.gate.dark], gate.system, DensityMatrix.ground(2))
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)


def test_swapped_roles_raise(gate):
    with pytest.raises(ClassificationError):
        cnot_truth_table(gate.gate.dark, gate.gate.inverting, gate.system, gate.gate.threshold)


@pytest.fixture(scope="module")
def half_transfer(load):
    # area pi/2 on resonance: half the population moves, so neither role fits
    rabi = load("rabi_pi")
    return replace(rabi.pulse, end=math.pi / 4), rabi.system


def test_half_transfer_pulse_is_neither(half_transfer):
    pulse, system = half_transfer
    assert classify_pulse(pulse, system) is PulseClass.NEITHER


@pytest.mark.parametrize('role', ['inverting', 'dark'])
def test_half_transfer_pulse_cannot_play_either_role(half_transfer, gate, role):
    pulse, system = half_transfer
    pulses = {"inverting": gate.gate.inverting, "dark": gate.gate.dark, role: pulse}
    with pytest.raises(ClassificationError, match=f"{role} pulse classified as neither"):
        cnot_truth_table(pulses["inverting"], pulses["dark"], system)
