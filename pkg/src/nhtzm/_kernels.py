"""Compiled right-hand side and RK4 stepper for the pumped chain."""
import numba as nb
import numpy as np


@nb.njit(cache=True, nogil=True)
def rhs(t, y, bi, bj, hij, hji, g, onsite, pump, xi, freq):
    """-i H_eff(y) y + xi P exp(-i freq t) for the bond-table Hamiltonian."""
    out = -1j * onsite * y
    p2 = y.real**2 + y.imag**2
    for k in range(bi.size):
        i = bi[k]
        j = bj[k]
        s = g[k] * (p2[i] + p2[j])
        out[i] += -1j * (hij[k] + s) * y[j]
        out[j] += -1j * (hji[k] + s) * y[i]
    drive = xi * np.exp(-1j * freq * t)
    for m in range(y.size):
        out[m] += drive * pump[m]
    return out


@nb.njit(cache=True, nogil=True)
def rk4_steps(y, t0, dt, n_steps, bi, bj, hij, hji, g, onsite, pump, xi, freq):
    """Advance ``y`` by ``n_steps`` classical RK4 steps of size ``dt``."""
    y = y.copy()
    t = t0
    half = 0.5 * dt
    for _ in range(n_steps):
        k1 = rhs(t, y, bi, bj, hij, hji, g, onsite, pump, xi, freq)
        k2 = rhs(t + half, y + half * k1, bi, bj, hij, hji, g, onsite, pump, xi, freq)
        k3 = rhs(t + half, y + half * k2, bi, bj, hij, hji, g, onsite, pump, xi, freq)
        k4 = rhs(t + dt, y + dt * k3, bi, bj, hij, hji, g, onsite, pump, xi, freq)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t0 + dt * (_ + 1)
    return y
