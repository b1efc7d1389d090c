import math

import numpy as np
import pytest

from propagator import (DensityMatrix, DensityTrajectory, IntegrationError, IntegratorConfig,
                        ScenarioMismatchError, convergence_check, estimate_step, evolve_density,
                        evolve_statevector, free_evolution)
from pulse import EnvelopeShape, EnvelopeSpec, PulseSpec
from quantum_system import FMHamiltonian, QuantumSystem, preset, static_hamiltonian


def _zero_hamiltonian(dim):
    return lambda times: np.zeros((len(times), dim, dim), dtype=complex)


def _square_pulse(duration, omega=1.0):
    return PulseSpec(EnvelopeSpec(EnvelopeShape.CONSTANT, peak_amplitude=omega, fwhm=duration,
                                  center=duration / 2), start=0.0, end=duration)


def _mixed_state():
    rho = np.diag([0.6, 0.3, 0.1]).astype(complex)
    rho[0, 1], rho[1, 0] = 0.1 + 0.05j, 0.1 - 0.05j
    return DensityMatrix(rho)


def test_zero_hamiltonian_leaves_rho_unchanged():
    rho0 = _mixed_state()
    traj = evolve_density(_zero_hamiltonian(3), rho0, (0.0, 10.0), IntegratorConfig(samples=11))
    for state in traj.states:
        np.testing.assert_array_equal(state, rho0.matrix)


def test_zero_hamiltonian_leaves_psi_unchanged():
    psi0 = np.array([0.6, 0.8j])
    traj = evolve_statevector(_zero_hamiltonian(2), psi0, (0.0, 10.0), IntegratorConfig(samples=5))
    for state in traj.states:
        np.testing.assert_array_equal(state, psi0)


@pytest.mark.parametrize('method', ['rk4', 'rk45'])
def test_pi_pulse_inverts(method):
    '''area pi: sin^2(area/2) = 1'''
    pulse = _square_pulse(math.pi / 2)
    h = FMHamiltonian(pulse, QuantumSystem.two_level())
    traj = evolve_density(h, DensityMatrix.ground(2), pulse.window, IntegratorConfig(method=method, samples=50))
    assert traj.populations()[-1, 1] == pytest.approx(1.0, abs=1e-6)


def test_two_pi_pulse_returns_to_ground():
    pulse = _square_pulse(math.pi)
    h = FMHamiltonian(pulse, QuantumSystem.two_level())
    traj = evolve_density(h, DensityMatrix.ground(2), pulse.window, IntegratorConfig(samples=50))
    assert traj.populations()[-1, 0] == pytest.approx(1.0, abs=1e-6)


def test_statevector_pi_pulse():
    pulse = _square_pulse(math.pi / 2)
    h = FMHamiltonian(pulse, QuantumSystem.two_level())
    traj = evolve_statevector(h, np.array([1.0, 0.0]), pulse.window, IntegratorConfig(samples=50))
    assert abs(traj.states[-1, 1]) ** 2 == pytest.approx(1.0, abs=1e-6)
    assert traj.norm_deviation() < 1e-9


def test_rabi_flopping_follows_closed_form():
    pulse = _square_pulse(3.0, omega=0.8)
    h = FMHamiltonian(pulse, QuantumSystem.two_level())
    traj = evolve_density(h, DensityMatrix.ground(2), pulse.window, IntegratorConfig(samples=31))
    expected = np.sin(0.8 * traj.times) ** 2
    np.testing.assert_allclose(traj.populations()[:, 1], expected, atol=1e-7)


def test_density_and_statevector_agree_on_anthracene(load):
    config = load("anthracene_beats")
    h = FMHamiltonian(config.pulse, config.system)
    psi0 = np.zeros(config.system.dim, dtype=complex)
    psi0[0] = 1.0
    rho_traj = evolve_density(h, DensityMatrix.from_state(psi0), config.pulse.window, config.integrator)
    psi_traj = evolve_statevector(h, psi0, config.pulse.window, config.integrator)
    assert np.max(np.abs(psi_traj.to_density().states - rho_traj.states)) < 1e-8


def test_conservation_laws_hold_without_renormalization(load):
    config = load("anthracene_locking")
    traj = evolve_density(FMHamiltonian(config.pulse, config.system), DensityMatrix.ground(config.system.dim),
                          config.pulse.window, config.integrator)
    assert traj.trace_deviation() < 1e-9
    assert traj.hermiticity_drift() < 1e-9
    assert np.max(np.abs(traj.purity() - 1.0)) < 1e-8


def test_forward_then_backward_returns_to_start():
    system = preset("anthracene-5lvl")
    pulse = PulseSpec(EnvelopeSpec(peak_amplitude=0.3, fwhm=40.0), start=-100.0, end=100.0)
    h = FMHamiltonian(pulse, system)
    rho0 = DensityMatrix.ground(system.dim)
    forward = evolve_density(h, rho0, (pulse.start, pulse.end), IntegratorConfig(samples=100))
    backward = evolve_density(h, forward.final, (pulse.end, pulse.start), IntegratorConfig(samples=100))
    assert backward.times[0] == pulse.end and backward.times[-1] == pulse.start
    assert np.max(np.abs(backward.states[-1] - rho0.matrix)) < 1e-7


def test_free_evolution_matches_integrator():
    system = preset("anthracene-5lvl")
    rho0 = DensityMatrix.basis(system.dim, 1)
    h_static = static_hamiltonian(system)
    times = np.linspace(0.0, 200.0, 41)
    exact = free_evolution(rho0, h_static, times)
    integrated = evolve_density(lambda t: np.broadcast_to(h_static, (len(t),) + h_static.shape),
                                rho0, (0.0, 200.0), IntegratorConfig(samples=41))
    assert np.max(np.abs(exact.states - integrated.states)) < 1e-8


def test_convergence_check_identical_is_zero():
    traj = evolve_density(_zero_hamiltonian(2), DensityMatrix.ground(2), (0.0, 1.0), IntegratorConfig(samples=3))
    assert convergence_check(traj, traj) == 0.0


def test_convergence_check_zero_hamiltonian_any_step():
    coarse = evolve_density(_zero_hamiltonian(2), DensityMatrix.ground(2), (0.0, 5.0),
                            IntegratorConfig(step=0.5, samples=6))
    fine = evolve_density(_zero_hamiltonian(2), DensityMatrix.ground(2), (0.0, 5.0),
                          IntegratorConfig(step=0.25, samples=6))
    assert convergence_check(coarse, fine) == 0.0


def test_convergence_check_rejects_mismatched_runs():
    a = evolve_density(_zero_hamiltonian(2), DensityMatrix.ground(2), (0.0, 1.0), IntegratorConfig(samples=3))
    b = evolve_density(_zero_hamiltonian(2), DensityMatrix.ground(2), (0.0, 2.0), IntegratorConfig(samples=3))
    c = evolve_density(_zero_hamiltonian(3), DensityMatrix.ground(3), (0.0, 1.0), IntegratorConfig(samples=3))
    with pytest.raises(ScenarioMismatchError):
        convergence_check(a, b)
    with pytest.raises(ScenarioMismatchError):
        convergence_check(a, c)


def test_step_halving_converges_on_locking_scenario(load):
    config = load("anthracene_locking")
    h = FMHamiltonian(config.pulse, config.system)
    step = estimate_step(h, config.pulse.window)
    runs = [evolve_density(h, DensityMatrix.ground(config.system.dim), config.pulse.window,
                           IntegratorConfig(step=s, samples=config.integrator.samples)) for s in (step, step / 2)]
    assert convergence_check(*runs) < 1e-6


def test_oversized_step_reports_failure_time():
    pulse = _square_pulse(200.0, omega=50.0)
    h = FMHamiltonian(pulse, QuantumSystem.two_level(40.0))
    with pytest.raises(IntegrationError) as excinfo:
        evolve_density(h, DensityMatrix.ground(2), pulse.window, IntegratorConfig(step=1.0, samples=201))
    assert 0.0 < excinfo.value.time <= 200.0


def test_finite_but_growing_rho_is_rejected():
    # step 2 ps puts the Liouvillian eigenvalues (+-4 rad/ps) outside RK4 stability
    pulse = _square_pulse(20.0, omega=2.0)
    h = FMHamiltonian(pulse, QuantumSystem.two_level())
    with pytest.raises(IntegrationError, match="exceeds 1") as excinfo:
        evolve_density(h, DensityMatrix.ground(2), pulse.window, IntegratorConfig(step=2.0, samples=11))
    assert excinfo.value.time == pytest.approx(2.0)


def test_finite_but_growing_psi_is_rejected():
    pulse = _square_pulse(20.0, omega=2.0)
    h = FMHamiltonian(pulse, QuantumSystem.two_level())
    with pytest.raises(IntegrationError, match="exceeds 1"):
        evolve_statevector(h, np.array([1.0, 0.0]), pulse.window, IntegratorConfig(step=2.0, samples=11))


def test_invalid_final_state_raises_integration_error():
    states = np.array([np.diag([1.0, 0.0]), np.diag([1.5, -0.5])], dtype=complex)
    traj = DensityTrajectory(times=np.array([0.0, 3.0]), states=states)
    with pytest.raises(IntegrationError) as excinfo:
        traj.final
    assert excinfo.value.time == 3.0


def test_estimate_step_uses_max_element():
    h = lambda t: np.broadcast_to(np.array([[0, 2.0], [2.0, 1.0]], dtype=complex), (len(t), 2, 2))
    assert estimate_step(h, (0.0, 1.0)) == pytest.approx(1.0 / (50 * 2.0 * 2))


@pytest.mark.parametrize('rho', [
    np.array([[1.0, 0.0], [0.0, 0.5]]),
    np.array([[0.5, 0.5j], [0.5j, 0.5]]),
    np.array([[1.5, 0.0], [0.0, -0.5]]),
])
def test_invalid_density_matrices_raise(rho):
    with pytest.raises(ValueError):
        DensityMatrix(rho)


@pytest.mark.parametrize('kwargs', [{'step': 0.0}, {'step': math.inf}, {'tolerance': -1.0},
                                    {'method': 'euler'}, {'samples': 1}])
def test_invalid_integrator_config_raises(kwargs):
    with pytest.raises(ValueError):
        IntegratorConfig(**kwargs)


def test_trajectory_requires_two_points():
    with pytest.raises(ValueError):
        DensityTrajectory(times=np.array([0.0]), states=np.eye(2)[None].astype(complex))
