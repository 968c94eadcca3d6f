"""Pump the first nonreciprocal a-site and compare evolution with the steady solve.

    python demos/pumped_steady_state.py [--xi 1.0] [--t-max 2000]
"""
import argparse

import numpy as np

from nhtzm import LatticeSpec1D, evolve, plateau_coverage, single_site_pump, steady_state, total_intensity


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--xi", type=float, default=1.0, help="pump strength")
    p.add_argument("--t-max", type=float, default=2000.0, help="longest evolution time")
    args = p.parse_args()

    spec = LatticeSpec1D(
        n_hermitian_cells=31, n_sites=121, tau=2.5, t_bar=1.5, alpha=0.05,
        j_hop=1.5, delta=1.0, lambda_bar=1.5, beta=0.05, t_d=2.5,
    )
    pump = single_site_pump(spec, 1, args.xi, kappa_a=0.01, kappa_b=0.5)
    phi = steady_state(spec, pump)
    traj = evolve(spec, pump, args.t_max, dt=0.01, stop_when_steady=True)
    rel = np.linalg.norm(traj.steady_state - phi) / np.linalg.norm(phi)
    print(f"steady intensity      {total_intensity(phi):.6g}")
    print(f"evolution settled     {traj.steady} at t={traj.times[-1]:.0f}")
    print(f"relative difference   {rel:.2e}")
    print(f"plateau coverage      {plateau_coverage(spec, phi):.3f}")


if __name__ == "__main__":
    main()
