import numpy as np
import pytest
from scipy.linalg import expm

from nhtzm import (
    DivergenceError,
    LatticeSpec1D,
    PumpConfig,
    StabilityError,
    SteadyStateError,
    build_hamiltonian_1d,
    designed_plateau,
    evolve,
    field_rhs,
    load_pump_profile,
    long_range_excitation_compare,
    loss_diagonal,
    noise_robustness,
    plateau_coverage,
    single_site_pump,
    steady_residual,
    steady_state,
    write_robustness_csv,
    write_trajectory_csv,
)

from conftest import SMALL, reference_from_spec


@pytest.fixture
def spec():
    return LatticeSpec1D(**SMALL)


def _pump(spec, xi=0.5, **kw):
    return single_site_pump(spec, 1, xi, **kw)


def test_pump_placement(spec, tmp_path):
    p = _pump(spec)
    assert np.flatnonzero(p.profile).tolist() == [spec.a_index(spec.n_hermitian_cells + 1)]
    with pytest.raises(ValueError, match="not an a-site"):
        PumpConfig(np.eye(spec.n_sites)[0], 1.0).check(spec)
    with pytest.raises(ValueError):
        PumpConfig(np.zeros(spec.n_sites), 1.0, kappa_a=-1).check(spec)
    f = tmp_path / "pump.txt"
    f.write_text("# position amplitude\n5 1.0\n7 0.5+0.5j\n")
    q = load_pump_profile(f, spec, 2.0)
    assert q.profile[4] == 1.0 and q.profile[6] == 0.5 + 0.5j and q.strength == 2.0


def test_vacuum_stays_vacuum(spec):
    traj = evolve(spec, _pump(spec, 0.0), 5.0, dt=0.01)
    assert np.all(traj.states == 0)


def test_rhs_matches_reference(spec, rng):
    pump = _pump(spec, 0.7, frequency=0.3)
    psi = rng.normal(size=spec.n_sites) + 1j * rng.normal(size=spec.n_sites)
    t = 1.3
    H = reference_from_spec(spec, psi) + np.diag(loss_diagonal(spec.n_sites, 0.01, 0.5))
    expect = -1j * (H @ psi) + pump.strength * pump.profile * np.exp(-1j * 0.3 * t)
    np.testing.assert_allclose(field_rhs(spec, pump, psi, t), expect, atol=1e-13)


def test_linear_decay_matches_matrix_exponential(spec, rng):
    lin = LatticeSpec1D(**dict(SMALL, alpha=0.0, beta=0.0))
    pump = _pump(lin, 0.0)
    H = build_hamiltonian_1d(lin, np.zeros(lin.n_sites)) + np.diag(loss_diagonal(lin.n_sites, 0.01, 0.5))
    psi0 = rng.normal(size=lin.n_sites) + 1j * rng.normal(size=lin.n_sites)
    traj = evolve(lin, pump, 10.0, dt=0.005, initial=psi0, record_every=5.0)
    np.testing.assert_allclose(traj.steady_state, expm(-1j * H * 10.0) @ psi0, atol=1e-9)
    w, V = np.linalg.eig(H)
    k = int(np.argmax(w.imag))
    traj = evolve(lin, pump, 10.0, dt=0.005, initial=V[:, k], record_every=10.0)
    assert np.linalg.norm(traj.steady_state) == pytest.approx(np.exp(w[k].imag * 10.0) * np.linalg.norm(V[:, k]), rel=1e-9)


def test_norm_decays_for_hermitian_lossy_chain(rng):
    herm = LatticeSpec1D(**dict(SMALL, delta=0.0))
    psi0 = rng.normal(size=herm.n_sites) + 1j * rng.normal(size=herm.n_sites)
    traj = evolve(herm, PumpConfig(np.zeros(herm.n_sites), 0.0), 20.0, dt=0.01, initial=psi0, record_every=0.5)
    norms = np.linalg.norm(traj.states, axis=1)
    assert np.all(np.diff(norms) < 0)


def test_rk4_order(spec):
    pump = _pump(spec, 0.5)
    # smooth start: the mild pumped field at t = 2
    start = evolve(spec, pump, 2.0, dt=0.001, record_every=2.0).steady_state
    runs = {dt: evolve(spec, pump, 4.0, dt=dt, initial=start, record_every=4.0).steady_state for dt in (0.04, 0.02, 0.00125)}
    e1 = np.abs(runs[0.04] - runs[0.00125]).max()
    e2 = np.abs(runs[0.02] - runs[0.00125]).max()
    assert 12.0 <= e1 / e2 <= 20.0


def test_evolve_arguments(spec):
    pump = _pump(spec)
    with pytest.raises(ValueError, match="multiple"):
        evolve(spec, pump, 1.0, dt=0.3, record_every=1.0)
    with pytest.raises(ValueError):
        evolve(spec, pump, 1.0, initial=np.zeros(3))
    with pytest.raises(StabilityError):
        evolve(spec, pump, 1.0, dt=0.25, record_every=0.25)


def test_divergence_is_reported(spec):
    gain = PumpConfig(np.zeros(spec.n_sites), 0.0, kappa_a=0.0, kappa_b=0.0)
    big = np.full(spec.n_sites, 2e5 + 0j)
    with pytest.raises(DivergenceError):
        evolve(spec, gain, 1.0, dt=1e-7, initial=big * 3, record_every=1e-7)


def test_steady_state_is_fixed_point_of_evolution(spec):
    pump = _pump(spec, 0.8)
    phi = steady_state(spec, pump)
    assert np.abs(steady_residual(spec, pump, phi)).max() < 1e-9
    traj = evolve(spec, pump, 10.0, dt=0.01, initial=phi, record_every=10.0)
    assert np.abs(traj.steady_state - phi).max() < 1e-6


def test_steady_state_matches_long_evolution(spec):
    pump = _pump(spec, 0.8)
    traj = evolve(spec, pump, 2000.0, dt=0.01, record_every=5.0, stop_when_steady=True)
    assert traj.steady
    phi = steady_state(spec, pump)
    assert np.abs(traj.steady_state - phi).max() < 1e-6 * np.abs(phi).max()
    assert np.allclose(steady_state(spec, pump, method="picard"), phi, atol=1e-8)


def test_steady_state_edge_cases(spec):
    assert not np.any(steady_state(spec, _pump(spec, 0.0)))
    with pytest.raises(ValueError):
        steady_state(spec, _pump(spec), method="bogus")
    with pytest.raises(SteadyStateError) as err:
        steady_state(spec, _pump(spec), initial=np.full(spec.n_sites, 1e3), max_iter=1)
    assert err.value.partial is not None


def test_noise_robustness_basics(spec):
    pump = _pump(spec, 0.8)
    phi = steady_state(spec, pump)
    quiet = noise_robustness(spec, pump, phi, 2, noise_range=(0.0, 0.0), t_end=5.0, dt=0.01)
    np.testing.assert_allclose(quiet.chi, 1.0, atol=1e-12)
    np.testing.assert_allclose(quiet.sigma_dev, 0.0, atol=1e-12)
    noisy = noise_robustness(spec, pump, phi, 3, t_end=300.0, dt=0.01, seed=4)
    again = noise_robustness(spec, pump, phi, 3, t_end=300.0, dt=0.01, seed=4, threads=2)
    np.testing.assert_array_equal(noisy.chi, again.chi)
    assert noisy.chi[0] < 0.99 and noisy.chi[-1] > 1 - 1e-6
    with pytest.raises(ValueError, match="zero"):
        noise_robustness(spec, pump, np.zeros(spec.n_sites), 2)


def test_plateau_coverage(spec):
    mask, target = designed_plateau(spec)
    # lambda_bar = J + delta leaves no plateau on the nonreciprocal side
    assert mask.sum() == spec.n_hermitian_cells
    full = LatticeSpec1D(**dict(SMALL, lambda_bar=1.5))
    assert designed_plateau(full)[0].sum() == full.n_cells
    assert plateau_coverage(spec, target) == 1.0
    assert plateau_coverage(spec, 0.5 * target) == 0.0


def test_long_range_columns_follow_argument_order(spec):
    other = LatticeSpec1D(**dict(SMALL, lambda_bar=1.5))
    pump = _pump(spec)
    ab = long_range_excitation_compare(spec, other, pump, spec.n_sites, [0.5, 1.0], t_max=200.0, labels=("a", "b"))
    ba = long_range_excitation_compare(other, spec, pump, spec.n_sites, [0.5, 1.0], t_max=200.0, labels=("b", "a"))
    np.testing.assert_array_equal(ab.coverage, ba.coverage[:, ::-1])
    with pytest.raises(ValueError):
        long_range_excitation_compare(spec, other, pump, 11, [1.0])


def test_csv_writers(spec, tmp_path):
    pump = _pump(spec)
    traj = evolve(spec, pump, 2.0, dt=0.01)
    path = write_trajectory_csv(traj, tmp_path / "t.csv", comment="run")
    lines = path.read_text().splitlines()
    assert lines[0] == "# run" and lines[1] == "t,site,re,im"
    assert len(lines) == 2 + 3 * spec.n_sites
    phi = steady_state(spec, pump)
    rep = noise_robustness(spec, pump, phi, 1, t_end=2.0)
    assert write_robustness_csv(rep, tmp_path / "r.csv").read_text().count("\n") >= 3
