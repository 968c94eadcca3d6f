"""``simulate`` command: run one configured experiment and write plot-ready data.

Every CSV starts with a ``# config_sha256=...`` comment and a header row.
Floats are written with ``repr`` so identical configs give identical bytes.
The run ends with ``manifest.json`` (content hashes of all data files) and
``summary.json`` (parameters, convergence flags, wall time).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, config_hash, intensity_values, validate_config
from .dynamics import (
    DivergenceError,
    PumpConfig,
    StabilityError,
    SteadyStateError,
    evolve,
    load_pump_profile,
    long_range_excitation_compare,
    noise_robustness,
    single_site_pump,
    steady_residual,
    steady_state,
    write_robustness_csv,
    write_trajectory_csv,
)
from .lattice import (
    DisorderConfig,
    DisorderKind,
    LatticeSpec1D,
    LatticeSpec2D,
    apply_disorder,
    bond_table,
    build_hamiltonian_1d,
    total_intensity,
)
from .localizer import (
    local_invariant_scan,
    locate_invariant_jumps,
    similarity_map,
    similarity_transform,
    topological_mu_max,
)
from .nonlinear_modes import (
    BracketError,
    BranchLossError,
    InfeasibleProfile,
    ProfileTarget,
    RecursionOverflow,
    design_hoppings,
    intensity_shoot,
    participation_ratio,
    profile_target,
    solve_modes_at_intensity,
    trace_tzm_branch,
    tzm_recursion,
)

__all__ = ["NumericalFailure", "RunResult", "main", "run_experiment"]

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3
_NUMERIC_ERRORS = (BranchLossError, SteadyStateError, DivergenceError, BracketError, RecursionOverflow)


class NumericalFailure(RuntimeError):
    """A downstream solver failed; outputs written so far are kept."""


@dataclass
class RunResult:
    out_dir: Path
    summary: dict
    files: list
    status: str


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if np.isfinite(f) else repr(f)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


@dataclass
class _Outputs:
    root: Path
    digest: str
    files: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    def path(self, label: str, name: str) -> Path:
        p = self.root / (f"{label}_{name}" if label else name)
        self.files.append(p)
        return p

    def csv(self, label: str, name: str, header, rows):
        p = self.path(label, name)
        with p.open("w", newline="") as fh:
            fh.write(f"# config_sha256={self.digest}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        return p

    def flag(self, label: str, message: str):
        self.flags.append(f"{label or 'run'}: {message}")


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ------------------------------------------------------------ builders


def _spec_1d(spec: dict, params: dict) -> LatticeSpec1D:
    base = LatticeSpec1D.from_dict(spec)
    design = params.get("design")
    if not design:
        return base
    return _designed(base, design)[0]


def _designed(base: LatticeSpec1D, design: dict):
    if design["shape"] == "custom":
        target = ProfileTarget("custom", design["samples"])
    else:
        target = profile_target(design["shape"], base, **design.get("shape_params", {}))
    t_bar, lam = design_hoppings(base, target)
    return base.with_hoppings(t_bar, lam), target


def _pump(spec: LatticeSpec1D, params: dict, xi: float) -> PumpConfig:
    p = params.get("pump", {})
    kw = {k: p[k] for k in ("frequency", "kappa_a", "kappa_b") if k in p}
    if "profile_file" in p:
        return load_pump_profile(p["profile_file"], spec, xi, **kw)
    return single_site_pump(spec, p.get("cell", 1), xi, **kw)


def _state_rows(key, state):
    return [(*key, m, z.real, z.imag, abs(z)) for m, z in enumerate(np.asarray(state), 1)]


# ------------------------------------------------------------ runners


def _branch_rows(branch):
    rows = []
    for I, mode, cls in zip(branch.intensity_grid, branch.modes, branch.classification):
        rows.append(
            (I, mode.omega.real, mode.omega.imag, mode.residual, cls.value,
             participation_ratio(mode.state), mode.converged, mode.method)
        )
    return rows


_BRANCH_HEADER = ["I", "re_omega", "im_omega", "residual", "classification", "participation_ratio", "converged", "method"]


def _trace(spec, grid, params, out, label):
    try:
        branch = trace_tzm_branch(
            spec, grid, tol=params.get("tol", 1e-10), max_iter=params.get("max_iter", 10_000),
            method=params.get("method", "auto"),
        )
    except BranchLossError as exc:
        out.csv(label, "branch.csv", _BRANCH_HEADER, _branch_rows(exc.partial))
        raise NumericalFailure(f"{label or 'run'}: branch lost at grid index {exc.index}") from exc
    for I, mode in zip(branch.intensity_grid, branch.modes):
        if not mode.converged:
            out.flag(label, f"mode at I={I:.6g} not converged (residual {mode.residual:.3e})")
    return branch


def _picked(branch, wanted):
    grid = branch.intensity_grid
    return [int(np.argmin(np.abs(grid - w))) for w in wanted]


def run_spectrum(spec_d, params, out, label, threads):
    spec = _spec_1d(spec_d, params)
    grid = intensity_values(params["intensities"])
    branch = _trace(spec, grid, params, out, label)
    out.csv(label, "branch.csv", _BRANCH_HEADER, _branch_rows(branch))
    rows = []
    table = bond_table(spec)
    for I, mode in zip(branch.intensity_grid, branch.modes):
        w = np.linalg.eigvals(table.matrix(mode.state))
        w = w[np.lexsort((w.imag, w.real))]
        rows.extend((I, k, z.real, z.imag) for k, z in enumerate(w))
    out.csv(label, "spectrum.csv", ["I", "index", "re_omega", "im_omega"], rows)
    prof = []
    for k in _picked(branch, params.get("profile_intensities", [])):
        prof.extend(_state_rows((branch.intensity_grid[k],), branch.modes[k].state))
    out.csv(label, "profiles.csv", ["I", "site", "re", "im", "abs"], prof)
    return {
        "n_points": len(grid),
        "all_converged": all(m.converged for m in branch.modes),
        "classes": sorted({c.value for c in branch.classification}),
        "max_residual": max(m.residual for m in branch.modes),
    }


def run_tzm_profile(spec_d, params, out, label, threads):
    spec = _spec_1d(spec_d, params)
    side = params.get("side", "left")
    rows, prof = [], []
    for I in intensity_values(params["intensities"]):
        psi = intensity_shoot(spec, I, side=side)
        res = np.linalg.norm(build_hamiltonian_1d(spec, psi) @ psi) / np.linalg.norm(psi)
        a, b = np.abs(psi[0::2]), np.abs(psi[1::2])
        rows.append((I, psi[0].real, res, b.max() / a.max(), participation_ratio(psi)))
        prof.extend(_state_rows((I,), psi))
    out.csv(label, "tzm.csv", ["I", "a1", "residual", "max_b_over_max_a", "participation_ratio"], rows)
    out.csv(label, "profiles.csv", ["I", "site", "re", "im", "abs"], prof)
    return {"n_points": len(rows), "max_residual": max(r[2] for r in rows)}


def _profile_deviation(spec_dis, target):
    """RMS of |a_j| change at fixed boundary amplitude, relative to the target RMS."""
    a0 = np.asarray(target.samples)
    a = np.abs(tzm_recursion(spec_dis, a0[0], side="left")[0::2])
    return float(np.sqrt(np.mean((a - a0) ** 2)) / np.sqrt(np.mean(a0**2))), float(np.max(np.abs(a - a0) / a0))


def run_design(spec_d, params, out, label, threads, seed=0):
    base = LatticeSpec1D.from_dict(spec_d)
    spec, target = _designed(base, params["design"])
    a = np.abs(tzm_recursion(spec, target.samples[0], side="left")[0::2])
    err = np.abs(a - target.samples) / target.samples
    hop = [("hermitian", j + 1, v) for j, v in enumerate(spec.t_bar)]
    n = spec.n_hermitian_cells
    hop += [("non_hermitian", n + 1 + j, v) for j, v in enumerate(spec.lambda_bar)]
    out.csv(label, "hoppings.csv", ["chain", "cell", "hopping"], hop)
    out.csv(label, "profile.csv", ["cell", "target", "amplitude", "rel_error"],
            [(j + 1, t, x, e) for j, (t, x, e) in enumerate(zip(target.samples, a, err))])
    summary = {"max_rel_error": float(err.max()), "intensity": float(np.sum(a**2))}
    strength = params.get("disorder_strength", 0.0)
    if strength > 0:
        seeds = [seed + k for k in range(params.get("n_seeds", 100))]

        def one(s):
            dis = apply_disorder(spec, DisorderConfig(DisorderKind.MULTIPLICATIVE, strength, s))
            return _profile_deviation(dis, target)

        devs = _map(one, seeds, threads)
        out.csv(label, "disorder.csv", ["seed", "rms_deviation", "max_rel_deviation"],
                [(s, r, m) for s, (r, m) in zip(seeds, devs)])
        summary.update(max_rms_deviation=max(r for r, _ in devs), n_seeds=len(seeds))
    return summary


def run_localizer(spec_d, params, out, label, threads):
    spec = _spec_1d(spec_d, params)
    eta = params.get("eta", 0.2)
    xg = params.get("x_grid")
    x_grid = None if xg is None else np.linspace(xg["start"], xg["stop"], xg["num"])
    scan, jumps, spectra, summary = [], [], [], {}
    for I in intensity_values(params["intensities"]):
        psi = intensity_shoot(spec, I)
        probes = local_invariant_scan(spec, psi, x_grid, eta=eta)
        for p in probes:
            scan.append((I, p.x, p.local_gap, p.invariant, p.n_zero))
            if params.get("export_spectrum"):
                spectra.extend((I, p.x, k, w) for k, w in enumerate(p.spectrum))
        found = locate_invariant_jumps(spec, psi, probes, eta=eta)
        jumps.extend((I, x, mu, dj) for x, mu, dj in found)
        H_S, S = similarity_transform(spec, psi)
        summary[f"I={I:g}"] = {
            "mu_max_topological": topological_mu_max(probes, spec.n_sites),
            "n_jumps": len(found),
            "max_mu_at_jump": max((mu for _, mu, _ in found), default=0.0),
        }
        out.csv(label, f"state_I{I:g}.csv", ["site", "re", "im", "abs", "abs_transformed"],
                [(m + 1, z.real, z.imag, abs(z), abs(zs)) for m, (z, zs) in enumerate(zip(psi, S.apply(psi)))])
    out.csv(label, "scan.csv", ["I", "x", "local_gap", "invariant", "n_zero"], scan)
    out.csv(label, "jumps.csv", ["I", "x", "local_gap", "jump"], jumps)
    if params.get("export_spectrum"):
        out.csv(label, "spectrum.csv", ["I", "x", "index", "sigma"], spectra)
    return summary


def run_pump_evolve(spec_d, params, out, label, threads):
    spec = _spec_1d(spec_d, params)
    pump = _pump(spec, params, params["xi"])
    traj = evolve(
        spec, pump, params["t_end"], params.get("dt", 0.001), record_every=params.get("record_every", 1.0),
        stop_when_steady=params.get("stop_when_steady", False),
    )
    write_trajectory_csv(traj, out.path(label, "trajectory.csv"), stride=params.get("stride", 1),
                         comment=f"config_sha256={out.digest}")
    out.csv(label, "final.csv", ["site", "re", "im", "abs"],
            [r[1:] for r in _state_rows((0,), traj.steady_state)])
    summary = {"t_final": float(traj.times[-1]), "steady": traj.steady,
               "intensity": total_intensity(traj.steady_state)}
    if not traj.steady:
        out.flag(label, "trajectory did not reach the steadiness tolerance")
    if params.get("compare_steady"):
        ss = steady_state(spec, pump)
        summary["rel_diff_to_steady_state"] = float(np.linalg.norm(traj.steady_state - ss) / np.linalg.norm(ss))
    return summary


def run_steady_sweep(spec_d, params, out, label, threads):
    spec = _spec_1d(spec_d, params)
    grid = intensity_values(params["xi_grid"])
    dt, t_max = params.get("dt", 0.001), params.get("t_max", 4000.0)

    def one(xi):
        pump = _pump(spec, params, xi)
        ss = steady_state(spec, pump, homotopy_steps=params.get("homotopy_steps", 50))
        res = float(np.linalg.norm(steady_residual(spec, pump, ss)))
        row = [xi, total_intensity(ss), res]
        if params.get("compare_evolve", False):
            traj = evolve(spec, pump, t_max, dt, stop_when_steady=True)
            rel = np.linalg.norm(traj.steady_state - ss) / max(np.linalg.norm(ss), 1e-300)
            row += [total_intensity(traj.steady_state), rel, traj.steady, traj.times[-1]]
        return row, ss

    results = _map(one, grid, threads)
    header = ["xi", "intensity_steady", "residual"]
    if params.get("compare_evolve", False):
        header += ["intensity_evolve", "rel_diff", "evolve_steady", "t_final"]
        for row, _ in results:
            if not row[5]:
                out.flag(label, f"evolution at xi={row[0]:.6g} did not settle")
    out.csv(label, "sweep.csv", header, [r for r, _ in results])
    prof = []
    for (row, ss) in results:
        prof.extend(_state_rows((row[0],), ss))
    out.csv(label, "profiles.csv", ["xi", "site", "re", "im", "abs"], prof)
    summary = {"n_points": len(grid), "max_residual": max(r[2] for r, _ in results)}
    if params.get("compare_evolve", False):
        summary["max_rel_diff"] = float(max(r[4] for r, _ in results))
    return summary


def run_noise(spec_d, params, out, label, threads, seed=0):
    spec = _spec_1d(spec_d, params)
    pump = _pump(spec, params, params["xi"])
    ss = steady_state(spec, pump)
    report = noise_robustness(
        spec, pump, ss, params["n_realizations"], tuple(params.get("noise_range", (-3.0, 3.0))),
        t_end=params.get("t_end", 600.0), dt=params.get("dt", 0.01), seed=seed,
        complex_noise=params.get("complex_noise", False), record_every=params.get("record_every", 1.0),
        threads=threads,
    )
    write_robustness_csv(report, out.path(label, "robustness.csv"), comment=f"config_sha256={out.digest}")
    out.csv(label, "steady.csv", ["site", "re", "im", "abs"], [r[1:] for r in _state_rows((0,), ss)])
    return {"chi_final": float(report.chi[-1]), "sigma_final": float(report.sigma_dev[-1]),
            "n_realizations": report.n_realizations}


def _disordered_mode(spec, I, psi0, pert, ramp_steps=(1, 8, 32)):
    """TZM of the disordered chain; additive disorder is ramped in if a direct solve fails."""
    (mode,) = solve_modes_at_intensity(spec, I, psi0, perturbation=pert)
    if mode.converged or pert is None:
        return mode
    for steps in ramp_steps[1:]:
        seed = psi0
        for frac in np.linspace(0.0, 1.0, steps + 1)[1:]:
            (mode,) = solve_modes_at_intensity(spec, I, seed, perturbation=frac * pert)
            if not mode.converged:
                break
            seed = mode.state
        if mode.converged:
            return mode
    return mode


def run_disorder(spec_d, params, out, label, threads, seed=0):
    spec = _spec_1d(spec_d, params)
    I = params["intensity"]
    kind = DisorderKind(params["kind"])
    psi0 = intensity_shoot(spec, I)
    H_S0, S = similarity_transform(spec, psi0)
    mu_max = topological_mu_max(local_invariant_scan(spec, psi0, eta=params.get("eta", 0.2)), spec.n_sites)
    d = similarity_map(spec).diagonal
    seeds = [seed + k for k in range(params.get("n_seeds", 100))]

    def one(s):
        dis = apply_disorder(spec, DisorderConfig(kind, params["strength"], s))
        if kind is DisorderKind.MULTIPLICATIVE:
            target, pert = dis, None
            dH_S = similarity_transform(dis, psi0)[0] - H_S0
        else:
            target, pert = spec, dis
            dH_S = d[:, None] * dis / d[None, :]
        mode = _disordered_mode(target, I, psi0, pert)
        norm_H = np.linalg.norm(bond_table(target).matrix(mode.state, pert), 2)
        dn = float(np.linalg.norm(dH_S, 2))
        return mode, abs(mode.omega) < 1e-6 * norm_H, dn

    results = _map(one, seeds, threads)
    rows, prof = [], []
    for s, (mode, tzm, dn) in zip(seeds, results):
        margin = mu_max - dn
        rows.append((s, mode.omega.real, mode.omega.imag, mode.residual, mode.converged,
                     participation_ratio(mode.state), tzm, dn, margin, margin > 0))
        prof.extend(_state_rows((s,), mode.state))
        if not mode.converged:
            out.flag(label, f"seed {s}: mode not converged")
    out.csv(label, "disorder.csv", ["seed", "re_omega", "im_omega", "residual", "converged", "participation_ratio",
                                    "tzm", "delta_hs_norm", "margin", "protected"], rows)
    out.csv(label, "profiles.csv", ["seed", "site", "re", "im", "abs"], prof)
    return {"mu_max": mu_max, "n_protected": sum(r[9] for r in rows), "n_tzm": sum(r[6] for r in rows),
            "n_seeds": len(seeds)}


def run_lattice2d(spec_d, params, out, label, threads):
    spec_d = dict(spec_d)
    chain = LatticeSpec1D.from_dict(spec_d.pop("chain_spec"))
    spec_d.setdefault("l_x", chain.n_sites)
    spec = LatticeSpec2D(chain_spec=chain, **spec_d)
    params = dict(params)
    params.setdefault("method", "newton")
    branch = _trace(spec, intensity_values(params["intensities"]), params, out, label)
    out.csv(label, "branch.csv", _BRANCH_HEADER, _branch_rows(branch))
    prof = []
    for k in _picked(branch, params.get("profile_intensities", [])):
        psi = branch.modes[k].state
        for idx, z in enumerate(psi):
            prof.append((branch.intensity_grid[k], idx % spec.l_x + 1, idx // spec.l_x + 1, z.real, z.imag, abs(z)))
    out.csv(label, "profiles.csv", ["I", "x", "y", "re", "im", "abs"], prof)
    return {"participation_ratio": [participation_ratio(m.state) for m in branch.modes],
            "all_converged": all(m.converged for m in branch.modes)}


def run_long_range(spec_d, params, out, label, threads):
    a = LatticeSpec1D.from_dict(spec_d)
    b = LatticeSpec1D.from_dict(params["spec_second"])
    labels = tuple(params.get("labels", ("first", "second")))
    p = params.get("pump", {})
    template = PumpConfig(np.zeros(a.n_sites), 0.0, **{k: p[k] for k in ("frequency", "kappa_a", "kappa_b") if k in p})
    rep = long_range_excitation_compare(
        a, b, template, a.n_sites, intensity_values(params["xi_grid"]), t_max=params.get("t_max", 4000.0),
        dt=params.get("dt", 0.01), labels=labels, threads=threads,
    )
    rows, prof = [], []
    for r, xi in enumerate(rep.xi):
        for c in range(2):
            rows.append((xi, labels[c], rep.coverage[r, c], rep.steady[r, c]))
            prof.extend(_state_rows((xi, labels[c]), rep.states[r][c]))
            if not rep.steady[r, c]:
                out.flag(label, f"{labels[c]} at xi={xi:.6g} did not settle")
    out.csv(label, "coverage.csv", ["xi", "chain", "coverage", "steady"], rows)
    out.csv(label, "profiles.csv", ["xi", "chain", "site", "re", "im", "abs"], prof)
    return {f"max_coverage_{labels[c]}": float(rep.coverage[:, c].max()) for c in range(2)}


_RUNNERS = {
    "spectrum_vs_intensity": run_spectrum,
    "tzm_profile": run_tzm_profile,
    "design_profile": run_design,
    "localizer_scan": run_localizer,
    "pump_evolve": run_pump_evolve,
    "steady_sweep": run_steady_sweep,
    "noise_ensemble": run_noise,
    "disorder_ensemble": run_disorder,
    "lattice2d_modes": run_lattice2d,
    "long_range_compare": run_long_range,
}
_SEEDED = {"design_profile", "noise_ensemble", "disorder_ensemble"}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_experiment(config, out_dir=None, threads: int = 1) -> RunResult:
    """Run a validated config (or raw dict) and write data, manifest and summary.

    Numerical failures are recorded in the summary with status
    ``non_converged``; whatever was written before the failure is kept.
    """
    cfg = config if isinstance(config, ExperimentConfig) else validate_config(config)
    root = Path(out_dir or cfg.output_dir or f"simulate_out/{cfg.recipe or cfg.experiment}")
    root.mkdir(parents=True, exist_ok=True)
    digest = config_hash(cfg)
    out = _Outputs(root=root, digest=digest)
    runner = _RUNNERS[cfg.experiment]
    start = time.perf_counter()
    runs, error = {}, None
    for label, spec, params in cfg.runs():
        kw = {"seed": cfg.seed} if cfg.experiment in _SEEDED else {}
        try:
            runs[label or "run"] = runner(spec, params, out, label, threads, **kw)
        except NumericalFailure as exc:
            error = str(exc)
            break
        except _NUMERIC_ERRORS as exc:
            error = f"{cfg.experiment} [{label or 'run'}]: {exc}"
            break
    status = "non_converged" if (error or out.flags) else "ok"
    files = [p for p in out.files if p.exists()]
    manifest = {
        "config_sha256": digest,
        "files": [{"path": p.name, "sha256": _sha256(p), "bytes": p.stat().st_size} for p in files],
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    summary = {
        "experiment": cfg.experiment,
        "recipe": cfg.recipe,
        "config_sha256": digest,
        "config": cfg.resolved(),
        "seed": cfg.seed,
        "threads": threads,
        "status": status,
        "error": error,
        "flags": out.flags,
        "runs": runs,
        "wall_time_s": time.perf_counter() - start,
        "version": __version__,
    }
    (root / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return RunResult(out_dir=root, summary=summary, files=files, status=status)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simulate", description=__doc__.splitlines()[0])
    p.add_argument("config", nargs="?", help="experiment config (JSON); optional with --recipe")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for independent points")
    p.add_argument("--recipe", help="named preset, e.g. fig2; config keys override it")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.config is None and args.recipe is None:
        print("simulate: need a config file or --recipe", file=sys.stderr)
        return EXIT_INVALID
    if args.threads < 1:
        print("simulate: --threads must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    raw = {}
    if args.config is not None:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"simulate: cannot read {args.config}: {exc}", file=sys.stderr)
            return EXIT_INVALID
    if not isinstance(raw, dict):
        print("simulate: $: configuration must be a JSON object", file=sys.stderr)
        return EXIT_INVALID
    if args.recipe:
        raw = dict(raw, recipe=args.recipe)
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        cfg = validate_config(raw)
        result = run_experiment(cfg, args.out, args.threads)
    except ConfigError as exc:
        for path, msg in exc.problems:
            print(f"simulate: {path}: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except (InfeasibleProfile, StabilityError, ValueError) as exc:
        print(f"simulate: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"{result.status}: wrote {len(result.files)} files to {result.out_dir}")
    if result.status != "ok":
        for line in result.summary["flags"] + ([result.summary["error"]] if result.summary["error"] else []):
            print(f"simulate: {line}", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
