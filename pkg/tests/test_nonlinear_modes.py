import numpy as np
import pytest
from scipy.optimize import root

from nhtzm import (
    BracketError,
    InfeasibleProfile,
    LatticeSpec1D,
    ModeClass,
    ProfileTarget,
    RecursionOverflow,
    build_hamiltonian_1d,
    chiral_zero_mode,
    design_hoppings,
    fix_gauge,
    intensity_shoot,
    participation_ratio,
    plateau_heights,
    profile_target,
    solve_modes_at_intensity,
    state_distance,
    sublattice_a_mask,
    total_intensity,
    trace_tzm_branch,
    tzm_recursion,
)

from conftest import FIG2_BASE, SMALL, fig2_spec, fig3_spec, reference_from_spec


def test_participation_ratio_limits():
    assert participation_ratio(np.ones(121)) == pytest.approx(1.0)
    e = np.zeros(121)
    e[7] = 3.0
    assert participation_ratio(e) == pytest.approx(1 / 121)
    with pytest.raises(ValueError):
        participation_ratio(np.zeros(4))


def test_fix_gauge_makes_largest_entry_real_positive():
    psi = fix_gauge(np.array([0.1, -2j, 1.0]))
    assert psi[1].real == pytest.approx(2.0) and psi[1].imag == 0


def test_linear_limit_recursion_is_geometric():
    spec = LatticeSpec1D(**dict(FIG2_BASE, alpha=0.0, beta=0.0))
    a = tzm_recursion(spec, 1e-3, side="right")[0::2].real
    n = spec.n_hermitian_cells
    np.testing.assert_allclose(a[1:n] / a[: n - 1], -spec.tau / spec.t_bar[0])
    np.testing.assert_allclose(a[n + 1 :] / a[n:-1], -(spec.j_hop + spec.delta) / spec.lambda_bar[0])


def test_interface_step():
    spec = fig3_spec()
    for side in ("left", "right"):
        a = np.abs(tzm_recursion(spec, 0.7, side=side)[0::2])
        n = spec.n_hermitian_cells
        assert a[n] == pytest.approx(spec.tau * a[n - 1] / spec.t_d)


def test_recursion_sides_agree_off_plateau():
    spec = fig3_spec()
    left = tzm_recursion(spec, 1e-12, side="left")
    right = tzm_recursion(spec, abs(left[-1].real), side="right")
    assert state_distance(left, right) < 1e-9


def test_recursion_overflow():
    spec = LatticeSpec1D(**dict(FIG2_BASE, alpha=0.0, beta=0.0))
    with pytest.raises(RecursionOverflow):
        tzm_recursion(spec, 1e140, side="left")  # grows by tau / t_bar per cell


def test_plateau_formula_values():
    a_l, a_r = plateau_heights(fig3_spec(1.5, 0.075))
    assert a_l == pytest.approx(np.sqrt(20)) and a_r == pytest.approx(np.sqrt(20))
    flat = LatticeSpec1D(**dict(FIG2_BASE, t_bar=2.5, lambda_bar=3.0, beta=0.05))
    assert plateau_heights(LatticeSpec1D(**dict(FIG2_BASE, t_bar=2.5, lambda_bar=1.5, beta=0.05)))[0] == 0.0
    with pytest.raises(ValueError):
        plateau_heights(flat)  # lambda_bar 3.0 > J + delta


def test_deep_plateau_value():
    spec = fig3_spec()
    psi = intensity_shoot(spec, 2500.0)
    a = np.abs(psi[0::2])
    assert a[45] == pytest.approx(np.sqrt(20), rel=1e-3)


def test_intensity_shoot_round_trip():
    spec = fig3_spec()
    psi = tzm_recursion(spec, 0.05)
    again = intensity_shoot(spec, total_intensity(psi))
    assert abs(abs(again[0]) - 0.05) < 1e-8 * 0.05


def test_intensity_shoot_bracket_failure():
    spec = LatticeSpec1D(**dict(FIG2_BASE, alpha=0.0, beta=0.0))
    with pytest.raises(BracketError):
        intensity_shoot(spec, 1e308)


def test_linear_limit_solver_matches_linear_spectrum():
    spec = LatticeSpec1D(**SMALL)
    H0 = build_hamiltonian_1d(spec, np.zeros(spec.n_sites))
    w, V = np.linalg.eig(H0)
    modes = solve_modes_at_intensity(spec, 1e-10, V.T, method="fixed_point")
    got = np.sort_complex(np.array([m.omega for m in modes]))
    np.testing.assert_allclose(got, np.sort_complex(w), atol=1e-8)


def test_solver_rejects_zero_seed_and_negative_intensity():
    spec = LatticeSpec1D(**SMALL)
    with pytest.raises(ValueError):
        solve_modes_at_intensity(spec, 1.0, np.zeros(spec.n_sites))
    with pytest.raises(ValueError):
        solve_modes_at_intensity(spec, -1.0, np.ones(spec.n_sites))


def test_unconverged_results_are_flagged():
    spec = fig3_spec()
    seed = np.random.default_rng(0).normal(size=spec.n_sites)
    (mode,) = solve_modes_at_intensity(spec, 900.0, seed, max_iter=2, method="fixed_point")
    assert not mode.converged


def _oracle_solutions(spec, intensity, seeds):
    """Independent dense Newton (MINPACK) on [H psi - w psi, |psi|^2 - I, Im psi_0]."""
    n = spec.n_sites
    found = []
    for seed in seeds:
        def f(x):
            psi = x[:n] + 1j * x[n : 2 * n]
            w = x[2 * n] + 1j * x[2 * n + 1]
            r = reference_from_spec(spec, psi) @ psi - w * psi
            k = int(np.argmax(np.abs(seed)))
            return np.concatenate([r.real, r.imag, [np.sum(np.abs(psi) ** 2) - intensity, psi[k].imag]])

        psi0 = seed * np.sqrt(intensity / np.sum(np.abs(seed) ** 2))
        w0 = np.vdot(psi0, reference_from_spec(spec, psi0) @ psi0) / intensity
        sol = root(f, np.concatenate([psi0.real, psi0.imag, [w0.real, w0.imag]]), method="hybr", tol=1e-14)
        if np.linalg.norm(f(sol.x)) < 1e-9:
            found.append((sol.x[2 * n] + 1j * sol.x[2 * n + 1], sol.x[:n] + 1j * sol.x[n : 2 * n]))
    return found


def test_small_lattice_against_newton_oracle():
    spec = LatticeSpec1D(**SMALL)
    rng = np.random.default_rng(2024)
    seeds = rng.normal(size=(100, spec.n_sites)) + 1j * rng.normal(size=(100, spec.n_sites))
    oracle = _oracle_solutions(spec, 4.0, seeds)
    assert len(oracle) > 50
    modes = solve_modes_at_intensity(spec, 4.0, seeds)
    converged = [m for m in modes if m.converged]
    assert len(converged) > 50
    for m in converged:
        H = reference_from_spec(spec, m.state)
        assert np.linalg.norm(H @ m.state - m.omega * m.state) < 1e-9
        assert m.intensity == pytest.approx(4.0, rel=1e-12)
        # the oracle started on a solver mode stays there
        (w, s), = _oracle_solutions(spec, 4.0, [m.state])
        assert state_distance(m.state, s) + abs(m.omega - w) < 1e-8
    # every frequency the oracle reaches from random starts is also found by the solver
    for w, s in oracle:
        assert min(abs(m.omega - w) for m in converged) < 1e-8
    H0 = reference_from_spec(spec, np.zeros(spec.n_sites))
    tzm = solve_modes_at_intensity(spec, 4.0, chiral_zero_mode(H0, sublattice_a_mask(spec.n_sites)))[0]
    assert abs(tzm.omega) < 1e-10
    assert min(state_distance(tzm.state, s) for w, s in oracle if abs(w) < 1e-8) < 1e-8


def test_branch_classification_and_continuity():
    spec = fig2_spec(1.5)
    grid = np.linspace(1.0, 50.0, 12) ** 2
    branch = trace_tzm_branch(spec, grid)
    assert all(c is ModeClass.TZM for c in branch.classification)
    assert all(participation_ratio(m.state) < 0.1 for m in branch.modes)
    states = [m.state for m in branch.modes]
    for u, v in zip(states, states[1:]):
        assert abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v)) > 0.5


def test_branch_grid_checks():
    spec = LatticeSpec1D(**SMALL)
    with pytest.raises(ValueError):
        trace_tzm_branch(spec, [])
    with pytest.raises(ValueError):
        trace_tzm_branch(spec, [4.0, 1.0])
    one = trace_tzm_branch(spec, [4.0])
    assert len(one.modes) == 1 and one.classification[0] is ModeClass.TZM


def test_fig3_branch_matches_shooting_and_forms_plateau():
    spec = fig3_spec()
    grid = np.linspace(1.0, 50.0, 25) ** 2
    branch = trace_tzm_branch(spec, grid)
    for I, mode in zip(grid[::6], branch.modes[::6]):
        assert state_distance(intensity_shoot(spec, I), mode.state) < 1e-8
    a = np.abs(branch.modes[-1].state[0::2])
    np.testing.assert_allclose(a[15:], np.sqrt(20), rtol=1e-3)
    # extra intensity beyond the plateau sits on the left boundary
    assert a[0] == a.max()


def test_coarse_grid_is_refined():
    spec = fig3_spec()
    branch = trace_tzm_branch(spec, [1.0, 2500.0])
    assert state_distance(intensity_shoot(spec, 2500.0), branch.modes[-1].state) < 1e-8


@pytest.mark.parametrize("shape", ["flat", "square", "triangle", "cosine"])
def test_design_round_trip(shape):
    base = fig3_spec()
    target = profile_target(shape, base)
    t_bar, lam = design_hoppings(base, target)
    spec = base.with_hoppings(t_bar, lam)
    a = np.abs(tzm_recursion(spec, target.samples[0])[0::2])
    np.testing.assert_allclose(a, target.samples, rtol=1e-10)


def test_flat_design_inverts_plateau_formula():
    base = fig3_spec()
    t_bar, lam = design_hoppings(base, profile_target("flat", base, height=np.sqrt(20)))
    # the flat target needs a different NH height to respect the interface
    np.testing.assert_allclose(t_bar, 1.5, rtol=1e-12)
    assert np.allclose(lam, lam[0])


def test_infeasible_design_reports_cell():
    base = fig3_spec()
    samples = profile_target("flat", base).samples.copy()
    samples[5] = 40.0  # a_5 / a_6 jump forces a negative hopping
    with pytest.raises(InfeasibleProfile) as err:
        design_hoppings(base, ProfileTarget("custom", samples))
    assert err.value.cell in (5, 6)
    with pytest.raises(InfeasibleProfile):
        design_hoppings(base, ProfileTarget("custom", -np.ones(base.n_cells)))


def test_recursion_with_vanishing_nonlinearity():
    tiny = LatticeSpec1D(**dict(SMALL, alpha=5e-324, beta=5e-324))
    plain = LatticeSpec1D(**dict(SMALL, alpha=0.0, beta=0.0))
    np.testing.assert_allclose(tzm_recursion(tiny, 1.0), tzm_recursion(plain, 1.0), rtol=1e-14)
