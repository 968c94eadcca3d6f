"""Driven-dissipative evolution of the interface chain under a coherent pump.

The field obeys

    dPhi/dt = -i (H(Phi) + H_loss) Phi + xi P exp(-i w t),

with H_loss = -i kappa_a on a-sites and -i kappa_b on b-sites.  Time
stepping uses a compiled classical RK4 scheme that re-evaluates the Kerr
hoppings at every stage.  Steady states at w = 0 are the roots of

    (H(Phi) + H_loss - w) Phi + i xi P = 0,

found here by Newton's method (analytic Jacobian) along a pump ramp from
the vacuum, with a relaxed freeze-and-solve iteration as an alternative.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .lattice import BondTable, LatticeSpec1D, bond_table, sublattice_a_mask
from .nonlinear_modes import plateau_height_hermitian, plateau_height_nonhermitian

__all__ = [
    "DivergenceError",
    "LongRangeReport",
    "PumpConfig",
    "RobustnessReport",
    "StabilityError",
    "SteadyStateError",
    "Trajectory",
    "designed_plateau",
    "evolve",
    "field_rhs",
    "load_pump_profile",
    "long_range_excitation_compare",
    "loss_diagonal",
    "noise_robustness",
    "plateau_coverage",
    "single_site_pump",
    "steady_residual",
    "steady_state",
    "write_robustness_csv",
    "write_trajectory_csv",
]

DIVERGENCE_NORM = 1e6
STABILITY_LIMIT = 0.5


class StabilityError(ValueError):
    """dt (||H|| + max kappa) reached the explicit-scheme limit."""


class DivergenceError(RuntimeError):
    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


class SteadyStateError(RuntimeError):
    """Pump ramp failed; ``partial`` holds (xi_reached, state) of the last converged point."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class PumpConfig:
    profile: np.ndarray
    strength: float
    frequency: float = 0.0
    kappa_a: float = 0.01
    kappa_b: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "profile", np.asarray(self.profile, dtype=complex))
        if self.profile.ndim != 1:
            raise ValueError("pump profile must be one-dimensional")
        if self.kappa_a < 0 or self.kappa_b < 0:
            raise ValueError("losses kappa_a, kappa_b must be non-negative")
        for name in ("strength", "frequency", "kappa_a", "kappa_b"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def with_strength(self, strength: float) -> "PumpConfig":
        return PumpConfig(self.profile, strength, self.frequency, self.kappa_a, self.kappa_b)

    def check(self, spec):
        """Profile must live on a-sites of the nonreciprocal chain."""
        n_sites = spec.n_sites
        if self.profile.shape != (n_sites,):
            raise ValueError(f"pump profile length {self.profile.size} != n_sites {n_sites}")
        if isinstance(spec, LatticeSpec1D):
            allowed = sublattice_a_mask(n_sites)
            allowed[: 2 * spec.n_hermitian_cells] = False
            bad = np.flatnonzero((self.profile != 0) & ~allowed)
            if bad.size:
                raise ValueError(
                    f"pump touches site {bad[0] + 1}, which is not an a-site of the non-Hermitian chain"
                )


def single_site_pump(spec: LatticeSpec1D, m: int = 1, strength: float = 1.0, **kw) -> PumpConfig:
    """Unit pump on a-site m of the nonreciprocal chain (lattice position 2N + 2m - 1)."""
    if not 1 <= m <= spec.n_cells - spec.n_hermitian_cells:
        raise ValueError(f"pump cell m={m} outside the non-Hermitian chain")
    profile = np.zeros(spec.n_sites, dtype=complex)
    profile[spec.a_index(spec.n_hermitian_cells + m)] = 1.0
    return PumpConfig(profile, strength, **kw)


def load_pump_profile(path, spec: LatticeSpec1D, strength: float = 1.0, **kw) -> PumpConfig:
    """Read a two-column text file of (1-based lattice position, amplitude).

    Amplitudes are parsed with ``complex`` so ``0.5`` and ``0.5+0.1j`` both
    work.  Lines starting with ``#`` are skipped.
    """
    profile = np.zeros(spec.n_sites, dtype=complex)
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'site amplitude'")
        site = int(parts[0])
        if not 1 <= site <= spec.n_sites:
            raise ValueError(f"{path}:{lineno}: site {site} outside 1..{spec.n_sites}")
        profile[site - 1] = complex(parts[1])
    pump = PumpConfig(profile, strength, **kw)
    pump.check(spec)
    return pump


def loss_diagonal(n_sites: int, kappa_a: float, kappa_b: float) -> np.ndarray:
    return np.where(sublattice_a_mask(n_sites), -1j * kappa_a, -1j * kappa_b)


def _lossy_table(spec, pump: PumpConfig, shift: float = 0.0) -> BondTable:
    table = bond_table(spec)
    return table.with_onsite(table.onsite + loss_diagonal(table.n, pump.kappa_a, pump.kappa_b) - shift)


def _kernel_args(table: BondTable):
    return (
        np.ascontiguousarray(table.i, dtype=np.int64),
        np.ascontiguousarray(table.j, dtype=np.int64),
        np.ascontiguousarray(table.h_ij, dtype=float),
        np.ascontiguousarray(table.h_ji, dtype=float),
        np.ascontiguousarray(table.g, dtype=float),
        np.ascontiguousarray(table.onsite, dtype=complex),
    )


def _norm_bound(table: BondTable, state) -> float:
    """sqrt(||H||_1 ||H||_inf), an upper bound on the spectral norm."""
    fwd, bwd = table.entries(state)
    rows = np.abs(table.onsite).astype(float)
    cols = rows.copy()
    np.add.at(rows, table.i, np.abs(fwd))
    np.add.at(rows, table.j, np.abs(bwd))
    np.add.at(cols, table.j, np.abs(fwd))
    np.add.at(cols, table.i, np.abs(bwd))
    return float(np.sqrt(rows.max() * cols.max()))


def field_rhs(spec, pump: PumpConfig, state, t: float = 0.0) -> np.ndarray:
    """Right-hand side of the pumped field equation at time t."""
    table = _lossy_table(spec, pump)
    y = np.asarray(state, dtype=complex)
    return _kernels.rhs(float(t), y, *_kernel_args(table), pump.profile, pump.strength, pump.frequency)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    steady: bool
    steady_state: np.ndarray
    dt: float = 0.0
    extras: dict = field(default_factory=dict)


def evolve(
    spec,
    pump: PumpConfig,
    t_end: float,
    dt: float = 0.001,
    initial=None,
    record_every: float = 1.0,
    stop_when_steady: bool = False,
    window: float = 10.0,
    steady_tol: float = 1e-8,
) -> Trajectory:
    """Fixed-step RK4 integration from ``initial`` (vacuum by default) to ``t_end``.

    States are stored every ``record_every`` time units.  The run counts as
    steady when the sup-norm change over the trailing ``window`` drops below
    ``steady_tol``; with ``stop_when_steady`` it ends there.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    pump.check(spec)
    table = _lossy_table(spec, pump)
    args = _kernel_args(table)
    y = np.zeros(table.n, dtype=complex) if initial is None else np.array(initial, dtype=complex)
    if y.shape != (table.n,):
        raise ValueError(f"initial state has shape {y.shape}, expected ({table.n},)")

    chunk = int(round(record_every / dt))
    if chunk < 1 or abs(chunk * dt - record_every) > 1e-9 * max(1.0, record_every):
        raise ValueError("record_every must be a positive multiple of dt")
    if window <= 0:
        raise ValueError("window must be positive")
    # trailing window measured in records, rounded up
    lag = max(1, int(np.ceil(window / record_every - 1e-9)))
    n_steps = int(round(t_end / dt))
    kappa_max = max(pump.kappa_a, pump.kappa_b)

    def check(state, t):
        norm = float(np.linalg.norm(state))
        if not np.isfinite(norm) or norm > DIVERGENCE_NORM:
            raise DivergenceError(f"field norm {norm:.3e} exceeds {DIVERGENCE_NORM:.0e} at t={t:.6g}", t)
        load = dt * (_norm_bound(table, state) + kappa_max)
        if load >= STABILITY_LIMIT:
            raise StabilityError(f"dt (||H|| + max kappa) = {load:.3f} >= {STABILITY_LIMIT} at t={t:.6g}")

    check(y, 0.0)
    times, states = [0.0], [y.copy()]
    done = 0
    steady = False
    while done < n_steps:
        k = min(chunk, n_steps - done)
        t0 = done * dt
        y = _kernels.rk4_steps(y, t0, dt, k, *args, pump.profile, pump.strength, pump.frequency)
        done += k
        t = done * dt
        check(y, t)
        times.append(t)
        states.append(y.copy())
        if len(states) > lag and k == chunk:
            steady = float(np.abs(y - states[-1 - lag]).max()) < steady_tol
            if steady and stop_when_steady:
                break
    states = np.array(states)
    return Trajectory(times=np.array(times), states=states, steady=steady, steady_state=states[-1].copy(), dt=dt)


# ------------------------------------------------------------ steady states


def steady_residual(spec, pump: PumpConfig, state) -> np.ndarray:
    """(H(Phi) + H_loss - w) Phi + i xi P."""
    table = _lossy_table(spec, pump, shift=pump.frequency)
    return table.apply(np.asarray(state, dtype=complex)) + 1j * pump.strength * pump.profile


def _newton_steady(table, source, y, tol, max_iter):
    n = table.n
    for _ in range(max_iter):
        r = table.apply(y) + source
        nr = float(np.linalg.norm(r))
        if nr < tol * max(1.0, float(np.linalg.norm(y))):
            return y, True
        try:
            dx = np.linalg.solve(table.jacobian_real(y), -np.concatenate([r.real, r.imag]))
        except np.linalg.LinAlgError:
            return y, False
        dy = dx[:n] + 1j * dx[n:]
        step = 1.0
        while step > 1e-4:
            trial = y + step * dy
            if np.linalg.norm(table.apply(trial) + source) < nr:
                break
            step *= 0.5
        y = y + step * dy
    r = table.apply(y) + source
    return y, float(np.linalg.norm(r)) < tol * max(1.0, float(np.linalg.norm(y)))


def _picard_steady(table, source, y, tol, max_iter, relax=0.5):
    """Freeze H at the current field, solve the linear system, relax."""
    last = np.inf
    for _ in range(max_iter):
        r = table.apply(y) + source
        nr = float(np.linalg.norm(r))
        if nr < tol * max(1.0, float(np.linalg.norm(y))):
            return y, True
        if nr > last:
            relax = max(relax * 0.5, 1e-3)
        last = nr
        try:
            y_new = np.linalg.solve(table.matrix(y), -source)
        except np.linalg.LinAlgError:
            return y, False
        y = (1 - relax) * y + relax * y_new
    return y, False


def _ramp(solver, table, profile, xi_target, steps, tol, iters):
    y = np.zeros(table.n, dtype=complex)
    xi_done = 0.0
    for xi in np.linspace(0.0, xi_target, steps + 1)[1:]:
        trial, ok = solver(table, 1j * xi * profile, y, tol, iters)
        if not ok:
            trial = y
            for sub in np.linspace(xi_done, xi, 5)[1:]:
                trial, ok = solver(table, 1j * sub * profile, trial, tol, iters)
                if not ok:
                    break
        if not ok:
            return None, (xi_done, y)
        y, xi_done = trial, xi
    return y, (xi_done, y)


def steady_state(
    spec,
    pump: PumpConfig,
    method: str = "newton",
    homotopy_steps: int = 50,
    tol: float = 1e-11,
    max_iter: int = 50,
    initial=None,
    starts=("ramp", "vacuum"),
) -> np.ndarray:
    """Steady field for the pump, on the branch reached from the vacuum.

    Starts are tried in order:

    * ``"ramp"``: xi raised from 0 in ``homotopy_steps`` equal steps, each
      solved from the previous one (a failing step is retried with four
      sub-steps);
    * ``"vacuum"``: one damped solve at the target xi starting from Phi = 0
      with ten times the iteration budget.  The linear response of the
      lossy chain is huge near w = 0, so small ramp steps can stall where
      the damped solve from the vacuum still walks into the right basin.

    ``method="picard"`` replaces Newton by the relaxed freeze-and-solve
    iteration.  Supplying ``initial`` skips the starts.  If every start
    fails, :class:`SteadyStateError` carries the last converged ramp point.
    """
    if method not in ("newton", "picard"):
        raise ValueError(f"unknown method {method!r}")
    unknown = set(starts) - {"ramp", "vacuum"}
    if unknown or not starts:
        raise ValueError(f"unknown homotopy starts {sorted(unknown)}")
    pump.check(spec)
    table = _lossy_table(spec, pump, shift=pump.frequency)
    solver = _newton_steady if method == "newton" else _picard_steady
    iters = max_iter if method == "newton" else max(max_iter, 2000)
    source = 1j * pump.strength * pump.profile
    if pump.strength == 0 and initial is None:
        return np.zeros(table.n, dtype=complex)
    if initial is not None:
        y, ok = solver(table, source, np.array(initial, dtype=complex), tol, iters)
        if not ok:
            raise SteadyStateError("steady-state iteration did not converge from the given start", (None, y))
        return y

    partial = (0.0, np.zeros(table.n, dtype=complex))
    for start in starts:
        if start == "ramp":
            y, partial = _ramp(solver, table, pump.profile, pump.strength, homotopy_steps, tol, iters)
            if y is not None:
                return y
        else:
            y, ok = solver(table, source, np.zeros(table.n, dtype=complex), tol, 10 * iters)
            if ok:
                return y
    raise SteadyStateError(
        f"no start converged at xi={pump.strength:.6g}; ramp reached xi={partial[0]:.6g}", partial
    )


# ------------------------------------------------------------ noise


@dataclass
class RobustnessReport:
    times: np.ndarray
    chi: np.ndarray
    sigma_dev: np.ndarray
    n_realizations: int
    chi_samples: np.ndarray = None


def _similarity(ref, state):
    return abs(np.vdot(ref, state)) / np.sqrt(np.vdot(ref, ref).real * np.vdot(state, state).real)


def noise_robustness(
    spec,
    pump: PumpConfig,
    steady,
    n_realizations: int,
    noise_range=(-3.0, 3.0),
    t_end: float = 600.0,
    dt: float = 0.01,
    seed: int = 0,
    complex_noise: bool = False,
    record_every: float = 1.0,
    threads: int = 1,
) -> RobustnessReport:
    """Mean and spread of chi(t) = |<Phi|phi(t)>| / (||Phi|| ||phi(t)||) over noisy restarts.

    Realization k draws its noise from ``SeedSequence([seed, k])``, so the
    report does not depend on ``threads``.
    """
    ref = np.asarray(steady, dtype=complex)
    if not np.any(ref):
        raise ValueError("reference steady state is zero; the similarity is undefined")
    if n_realizations < 1:
        raise ValueError("n_realizations must be positive")
    lo, hi = map(float, noise_range)
    if not hi >= lo:
        raise ValueError("noise_range must be an interval (low, high)")

    def run(k):
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        noise = rng.uniform(lo, hi, ref.size)
        if complex_noise:
            noise = noise + 1j * rng.uniform(lo, hi, ref.size)
        traj = evolve(spec, pump, t_end, dt, initial=ref + noise, record_every=record_every)
        return traj.times, np.array([_similarity(ref, s) for s in traj.states])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(n_realizations)))
    else:
        results = [run(k) for k in range(n_realizations)]
    times = results[0][0]
    samples = np.clip(np.array([c for _, c in results]), 0.0, 1.0)
    return RobustnessReport(
        times=times,
        chi=samples.mean(axis=0),
        sigma_dev=samples.std(axis=0),
        n_realizations=n_realizations,
        chi_samples=samples,
    )


# ------------------------------------------------------------ long-range patterns


def designed_plateau(spec: LatticeSpec1D):
    """(mask, target) of a-sites whose chain has a nonzero closed-form plateau."""
    mask = np.zeros(spec.n_sites, dtype=bool)
    target = np.zeros(spec.n_sites)
    a = sublattice_a_mask(spec.n_sites)
    cut = 2 * spec.n_hermitian_cells
    for heights, sl in ((plateau_height_hermitian, slice(0, cut)), (plateau_height_nonhermitian, slice(cut, None))):
        try:
            h = heights(spec)
        except ValueError:
            continue
        if h <= 0:
            continue
        part = np.zeros(spec.n_sites, dtype=bool)
        part[sl] = a[sl]
        mask |= part
        target[part] = h
    return mask, target


def plateau_coverage(spec: LatticeSpec1D, state, rel_tol: float = 0.1) -> float:
    """Fraction of designed plateau sites whose |Phi| is within ``rel_tol`` of the target."""
    mask, target = designed_plateau(spec)
    if not mask.any():
        raise ValueError("chain has no designed plateau")
    amp = np.abs(np.asarray(state))[mask]
    return float(np.mean(np.abs(amp - target[mask]) < rel_tol * target[mask]))


@dataclass
class LongRangeReport:
    labels: tuple
    xi: np.ndarray
    coverage: np.ndarray
    steady: np.ndarray
    states: list


def long_range_excitation_compare(
    spec_first: LatticeSpec1D,
    spec_second: LatticeSpec1D,
    pump: PumpConfig,
    size: int,
    xi_grid,
    t_max: float = 4000.0,
    dt: float = 0.01,
    labels=("first", "second"),
    threads: int = 1,
) -> LongRangeReport:
    """Steady plateau coverage of two chains pumped at the first non-Hermitian a-site.

    Only the losses and frequency of ``pump`` are used; each chain gets a
    unit single-site profile at lattice position 2N + 1 of its own N.
    Column k of the report belongs to the k-th spec.
    """
    specs = (spec_first, spec_second)
    for s in specs:
        if s.n_sites != size:
            raise ValueError(f"spec has n_sites={s.n_sites}, expected {size}")
    grid = np.asarray(xi_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("xi_grid must be a non-empty sequence")
    extra = dict(frequency=pump.frequency, kappa_a=pump.kappa_a, kappa_b=pump.kappa_b)
    jobs = [(c, x) for x in grid for c in range(2)]

    def run(job):
        c, xi = job
        p = single_site_pump(specs[c], 1, xi, **extra)
        traj = evolve(specs[c], p, t_max, dt, stop_when_steady=True)
        return plateau_coverage(specs[c], traj.steady_state), traj.steady, traj.steady_state

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(run, jobs))
    else:
        out = [run(j) for j in jobs]
    cov = np.array([o[0] for o in out]).reshape(grid.size, 2)
    steady = np.array([o[1] for o in out]).reshape(grid.size, 2)
    states = [[out[2 * r + c][2] for c in range(2)] for r in range(grid.size)]
    return LongRangeReport(labels=tuple(labels), xi=grid, coverage=cov, steady=steady, states=states)


# ------------------------------------------------------------ export


def write_trajectory_csv(traj: Trajectory, path, stride: int = 1, comment: str | None = None) -> Path:
    """Long-format (t, site, re, im) rows, keeping every ``stride``-th record."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    path = Path(path)
    with path.open("w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "site", "re", "im"])
        for t, s in zip(traj.times[::stride], traj.states[::stride]):
            for m, v in enumerate(s, 1):
                w.writerow([repr(float(t)), m, repr(float(v.real)), repr(float(v.imag))])
    return path


def write_robustness_csv(report: RobustnessReport, path, comment: str | None = None) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "chi_mean", "sigma"])
        for row in zip(report.times, report.chi, report.sigma_dev):
            w.writerow([repr(float(v)) for v in row])
    return path
