import numpy as np
import pytest

from nhtzm import LatticeSpec1D

FIG2_BASE = dict(
    n_hermitian_cells=31, n_sites=121, tau=2.5, t_bar=1.0, alpha=0.05,
    j_hop=1.5, delta=1.0, lambda_bar=2.5, beta=0.0, t_d=2.5,
)
FIG3_BASE = dict(FIG2_BASE, t_bar=1.5, lambda_bar=1.5, beta=0.05)
SMALL = dict(
    n_hermitian_cells=2, n_sites=9, tau=2.5, t_bar=1.0, alpha=0.05,
    j_hop=1.5, delta=1.0, lambda_bar=2.5, beta=0.05, t_d=2.5,
)


def fig2_spec(delta=1.0):
    return LatticeSpec1D(**dict(FIG2_BASE, delta=delta))


def fig3_spec(delta=1.0, beta=0.05):
    return LatticeSpec1D(**dict(FIG3_BASE, delta=delta, beta=beta))


def reference_hamiltonian(psi, L, N, tau, tt, alpha, J, d, lt, beta, td):
    """Entry-by-entry chain Hamiltonian, written independently of the bond table."""
    M = (L + 1) // 2
    H = np.zeros((L, L), dtype=complex)
    p2 = np.abs(psi) ** 2

    def a(j):
        return 2 * (j - 1)

    def b(j):
        return 2 * (j - 1) + 1

    tt = np.broadcast_to(np.asarray(tt, dtype=float), (N - 1,))
    lt = np.broadcast_to(np.asarray(lt, dtype=float), (M - N - 1,))
    for j in range(1, M + 1):
        if b(j) >= L:
            continue
        if j <= N:
            H[a(j), b(j)] = H[b(j), a(j)] = tau
        else:
            H[a(j), b(j)] = J - d
            H[b(j), a(j)] = J + d
        if j < M:
            w = p2[a(j + 1)] + p2[b(j)]
            if j < N:
                v = tt[j - 1] + alpha * w
            elif j == N:
                v = td
            else:
                v = lt[j - N - 1] + beta * w
            H[a(j + 1), b(j)] = H[b(j), a(j + 1)] = v
    return H


def reference_from_spec(spec, psi):
    return reference_hamiltonian(
        psi, spec.n_sites, spec.n_hermitian_cells, spec.tau, spec.t_bar, spec.alpha,
        spec.j_hop, spec.delta, spec.lambda_bar, spec.beta, spec.t_d,
    )


@pytest.fixture
def small_spec():
    return LatticeSpec1D(**SMALL)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
