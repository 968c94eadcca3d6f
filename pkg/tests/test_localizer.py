import numpy as np
import pytest

from nhtzm import (
    ChiralSymmetryError,
    LatticeSpec1D,
    build_hamiltonian_1d,
    chiral_operator,
    full_localizer,
    intensity_shoot,
    local_invariant_scan,
    locate_invariant_jumps,
    position_operator,
    protection_margin,
    reduced_localizer,
    similarity_map,
    similarity_transform,
    topological_mu_max,
)

from conftest import FIG2_BASE, SMALL, fig2_spec


def test_similarity_map_values():
    spec = fig2_spec(1.0)
    S = similarity_map(spec)
    assert S.r == pytest.approx(np.sqrt(0.5 / 2.5))
    n = 2 * spec.n_hermitian_cells
    np.testing.assert_array_equal(S.diagonal[:n], 1.0)
    np.testing.assert_allclose(S.diagonal[n : n + 5], [1, S.r, S.r, S.r**2, S.r**2])


def test_similarity_transform_is_hermitian_and_isospectral(rng):
    spec = LatticeSpec1D(**SMALL)
    psi = rng.normal(size=spec.n_sites)
    H_S, S = similarity_transform(spec, psi)
    np.testing.assert_allclose(H_S, H_S.conj().T, atol=1e-14)
    w = np.sort(np.linalg.eigvals(build_hamiltonian_1d(spec, psi)).real)
    np.testing.assert_allclose(np.linalg.eigvalsh(H_S), w, atol=1e-10)
    # off-diagonal NH bonds become the geometric mean
    a, b = spec.a_index(4), spec.b_index(4)
    assert H_S[a, b].real == pytest.approx(np.sqrt((spec.j_hop - spec.delta) * (spec.j_hop + spec.delta)))


@pytest.mark.parametrize("delta", [1.5, -1.5, 2.0])
def test_similarity_rejects_non_hermitizable(delta):
    spec = LatticeSpec1D(**dict(FIG2_BASE, delta=delta))
    with pytest.raises(ValueError):
        similarity_map(spec)


def test_full_and_reduced_localizer_share_gap(rng):
    spec = LatticeSpec1D(**SMALL)
    H_S, _ = similarity_transform(spec, rng.normal(size=spec.n_sites))
    X, Pi = position_operator(spec.n_sites), chiral_operator(spec.n_sites)
    for x in (1.0, 3.3, 7.5):
        full = np.linalg.eigvalsh(full_localizer(H_S, X, x))
        red = np.linalg.eigvalsh(reduced_localizer(H_S, X, Pi, x))
        np.testing.assert_allclose(np.sort(np.abs(full))[::2], np.sort(np.abs(red)), atol=1e-12)


def test_localizer_input_checks():
    H = np.array([[0, 1], [2, 0]], dtype=complex)
    X, Pi = position_operator(2), chiral_operator(2)
    with pytest.raises(ValueError, match="Hermitian"):
        full_localizer(H, X, 0.0)
    with pytest.raises(ValueError, match="eta"):
        reduced_localizer(np.eye(2), X, Pi, 0.0, eta=0.0)
    with pytest.raises(ChiralSymmetryError):
        reduced_localizer(np.eye(2), X, Pi, 0.0)


def test_invariant_far_field_and_jump():
    spec = fig2_spec(1.0)
    psi = intensity_shoot(spec, 900.0)
    grid = np.arange(-5.0, spec.n_sites + 7.0)
    probes = local_invariant_scan(spec, psi, grid)
    assert probes[0].invariant == 0.5 and probes[-1].invariant == -0.5
    c = np.array([p.invariant for p in probes])
    assert set(c) <= {0.5, -0.5}
    jumps = locate_invariant_jumps(spec, psi, probes)
    assert len(jumps) == 1 and jumps[0][2] == -1.0
    assert jumps[0][1] < 1e-10
    mu = topological_mu_max(probes, spec.n_sites)
    assert mu > 0.5


def test_scan_rejects_empty_grid():
    spec = fig2_spec(1.0)
    with pytest.raises(ValueError):
        local_invariant_scan(spec, np.zeros(spec.n_sites), [])


def test_protection_margin():
    base = np.diag([1.0, -1.0])
    margin, ok = protection_margin(base, base + 0.3 * np.eye(2), 0.5)
    assert margin == pytest.approx(0.2) and ok
    assert not protection_margin(base, base + np.eye(2), 0.5)[1]
    with pytest.raises(ValueError):
        protection_margin(base, np.eye(3), 0.5)
