"""Compiled RK4 loop for the block-diagonal dressed generator.

State layout: rho[b] is the b-th diagonal block (padded to a common size),
flat population index of (b, k) is b * n + k.  Padding rows carry zero
energy, rate and drive coupling and stay identically zero.
"""
import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def _rhs(elementwise, M_re, M_c, W, real_M, drive, rho, out, buf_re, buf_im, pops):
    nb, n, _ = rho.shape
    for b in range(nb):
        for k in range(n):
            pops[b * n + k] = rho[b, k, k].real
    gain = np.dot(W, pops)
    coef = -1j * drive
    for b in range(nb):
        if drive != 0.0:
            if real_M:
                for k in range(n):
                    for l in range(n):
                        buf_re[k, l] = rho[b, k, l].real
                        buf_im[k, l] = rho[b, k, l].imag
                xr = np.dot(M_re[b], buf_re)
                xi = np.dot(M_re[b], buf_im)
                for k in range(n):
                    for l in range(n):
                        x_kl = xr[k, l] + 1j * xi[k, l]
                        x_lk = xr[l, k] - 1j * xi[l, k]
                        out[b, k, l] = elementwise[b, k, l] * rho[b, k, l] + coef * (x_kl - x_lk)
            else:
                x = np.dot(M_c[b], rho[b])
                for k in range(n):
                    for l in range(n):
                        out[b, k, l] = elementwise[b, k, l] * rho[b, k, l] + coef * (x[k, l] - np.conj(x[l, k]))
        else:
            for k in range(n):
                for l in range(n):
                    out[b, k, l] = elementwise[b, k, l] * rho[b, k, l]
        for k in range(n):
            out[b, k, k] += gain[b * n + k]


@numba.njit(cache=True, nogil=True)
def trace_with(op_t, rho):
    """sum_b Tr[op_b rho_b] with op_t[b] = op_b^T."""
    nb, n, _ = rho.shape
    acc = 0.0
    for b in range(nb):
        for k in range(n):
            for l in range(n):
                acc += (op_t[b, k, l] * rho[b, k, l]).real
    return acc


@numba.njit(cache=True, nogil=True)
def heat_rate(energies, out_rate, decay, W, M_t, M_diag, drive, rho, pops):
    """Tr[H L_D rho] for H = diag(E) + drive * M."""
    nb, n, _ = rho.shape
    for b in range(nb):
        for k in range(n):
            pops[b * n + k] = rho[b, k, k].real
    gain = np.dot(W, pops)
    rate = 0.0
    for i in range(nb * n):
        rate += energies[i] * (gain[i] - out_rate[i] * pops[i])
    if drive != 0.0:
        coh = 0.0
        for b in range(nb):
            for k in range(n):
                for l in range(n):
                    coh += (M_t[b, k, l] * decay[b, k, l] * rho[b, k, l]).real
        diag = 0.0
        for i in range(nb * n):
            diag += M_diag[i] * gain[i]
        rate += drive * (coh + diag)
    return rate


@numba.njit(cache=True, nogil=True)
def rk4_run(rho, h, drives, fdots, elementwise, M_re, M_c, M_t, M_diag, W, real_M,
            energies, out_rate, decay, delta_omega, power0, heat0):
    """Advance len(fdots) RK4 steps in place.

    drives[3*s + {0,1,2}] hold the drive amplitude at t, t + h/2, t + h of
    step s; fdots[s] is f'(t + h).  Returns (work increment, heat increment,
    power, heat rate) with trapezoidal quadrature over every step.
    """
    nb, n, _ = rho.shape
    k1 = np.empty_like(rho)
    k2 = np.empty_like(rho)
    k3 = np.empty_like(rho)
    k4 = np.empty_like(rho)
    tmp = np.empty_like(rho)
    buf_re = np.empty((n, n))
    buf_im = np.empty((n, n))
    pops = np.empty(nb * n)
    dW = 0.0
    dQ = 0.0
    p_prev = power0
    q_prev = heat0
    for s in range(fdots.shape[0]):
        _rhs(elementwise, M_re, M_c, W, real_M, drives[3 * s], rho, k1, buf_re, buf_im, pops)
        for b in range(nb):
            for k in range(n):
                for l in range(n):
                    tmp[b, k, l] = rho[b, k, l] + 0.5 * h * k1[b, k, l]
        _rhs(elementwise, M_re, M_c, W, real_M, drives[3 * s + 1], tmp, k2, buf_re, buf_im, pops)
        for b in range(nb):
            for k in range(n):
                for l in range(n):
                    tmp[b, k, l] = rho[b, k, l] + 0.5 * h * k2[b, k, l]
        _rhs(elementwise, M_re, M_c, W, real_M, drives[3 * s + 1], tmp, k3, buf_re, buf_im, pops)
        for b in range(nb):
            for k in range(n):
                for l in range(n):
                    tmp[b, k, l] = rho[b, k, l] + h * k3[b, k, l]
        _rhs(elementwise, M_re, M_c, W, real_M, drives[3 * s + 2], tmp, k4, buf_re, buf_im, pops)
        c = h / 6.0
        for b in range(nb):
            for k in range(n):
                for l in range(n):
                    rho[b, k, l] += c * (k1[b, k, l] + 2.0 * k2[b, k, l] + 2.0 * k3[b, k, l] + k4[b, k, l])
        drive = drives[3 * s + 2]
        if fdots[s] != 0.0:
            p_new = fdots[s] * delta_omega * trace_with(M_t, rho)
        else:
            p_new = 0.0
        q_new = heat_rate(energies, out_rate, decay, W, M_t, M_diag, drive, rho, pops)
        dW += 0.5 * h * (p_prev + p_new)
        dQ += 0.5 * h * (q_prev + q_new)
        p_prev = p_new
        q_prev = q_new
    return dW, dQ, p_prev, q_prev
