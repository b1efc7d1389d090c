"""
Chirpsim - Compiled RK4 Kernels
Fixed-step Runge-Kutta for the Liouville equation and the Schroedinger equation

Each call advances one state through n steps of size dt. `samples` holds the
Hamiltonian at t_k, t_k + dt/2, t_k + dt for every step, stacked as
(2n + 1, M, M) with shared endpoints.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _liouville_rhs(h, rho, out):
    # d rho/dt = i [rho, H]
    m = rho.shape[0]
    for i in range(m):
        for j in range(m):
            acc = 0j
            for k in range(m):
                acc += rho[i, k] * h[k, j] - h[i, k] * rho[k, j]
            out[i, j] = 1j * acc


@njit(cache=True, nogil=True)
def _schroedinger_rhs(h, psi, out):
    # d psi/dt = -i H psi
    m = psi.shape[0]
    for i in range(m):
        acc = 0j
        for k in range(m):
            acc += h[i, k] * psi[k]
        out[i] = -1j * acc


@njit(cache=True, nogil=True)
def rk4_density(rho, samples, dt):
    m = rho.shape[0]
    n_steps = (samples.shape[0] - 1) // 2
    y = rho.copy()
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    tmp = np.empty_like(y)
    half = 0.5 * dt
    sixth = dt / 6.0

    for s in range(n_steps):
        _liouville_rhs(samples[2 * s], y, k1)
        for i in range(m):
            for j in range(m):
                tmp[i, j] = y[i, j] + half * k1[i, j]
        _liouville_rhs(samples[2 * s + 1], tmp, k2)
        for i in range(m):
            for j in range(m):
                tmp[i, j] = y[i, j] + half * k2[i, j]
        _liouville_rhs(samples[2 * s + 1], tmp, k3)
        for i in range(m):
            for j in range(m):
                tmp[i, j] = y[i, j] + dt * k3[i, j]
        _liouville_rhs(samples[2 * s + 2], tmp, k4)
        for i in range(m):
            for j in range(m):
                y[i, j] += sixth * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
    return y


@njit(cache=True, nogil=True)
def rk4_state(psi, samples, dt):
    m = psi.shape[0]
    n_steps = (samples.shape[0] - 1) // 2
    y = psi.copy()
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    tmp = np.empty_like(y)
    half = 0.5 * dt
    sixth = dt / 6.0

    for s in range(n_steps):
        _schroedinger_rhs(samples[2 * s], y, k1)
        for i in range(m):
            tmp[i] = y[i] + half * k1[i]
        _schroedinger_rhs(samples[2 * s + 1], tmp, k2)
        for i in range(m):
            tmp[i] = y[i] + half * k2[i]
        _schroedinger_rhs(samples[2 * s + 1], tmp, k3)
        for i in range(m):
            tmp[i] = y[i] + dt * k3[i]
        _schroedinger_rhs(samples[2 * s + 2], tmp, k4)
        for i in range(m):
            y[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return y
