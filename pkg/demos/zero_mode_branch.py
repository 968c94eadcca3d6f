"""Trace the interface zero mode against intensity and probe its topology.

Prints, for a few intensities, the participation ratio, the weight on the
nonreciprocal chain and the position where the local invariant jumps.

    python demos/zero_mode_branch.py [--delta 1.0]
"""
import argparse

import numpy as np

from nhtzm import (
    LatticeSpec1D,
    local_invariant_scan,
    locate_invariant_jumps,
    participation_ratio,
    topological_mu_max,
    trace_tzm_branch,
)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--delta", type=float, default=1.0, help="nonreciprocity delta")
    args = p.parse_args()

    spec = LatticeSpec1D(
        n_hermitian_cells=31, n_sites=121, tau=2.5, t_bar=1.5, alpha=0.05,
        j_hop=1.5, delta=args.delta, lambda_bar=1.5, beta=0.05, t_d=2.5,
    )
    grid = np.linspace(1.0, 43.0, 43) ** 2
    branch = trace_tzm_branch(spec, grid)
    cut = 2 * spec.n_hermitian_cells
    print(f"{'I':>8} {'PR':>7} {'NH weight':>10} {'jump x':>8} {'mu_max':>7}")
    for I, mode in zip(grid[::7], branch.modes[::7]):
        psi = mode.state
        weight = np.sum(np.abs(psi[cut:]) ** 2) / np.sum(np.abs(psi) ** 2)
        probes = local_invariant_scan(spec, psi)
        jumps = locate_invariant_jumps(spec, psi, probes)
        x = jumps[0][0] if jumps else float("nan")
        mu = topological_mu_max(probes, spec.n_sites)
        print(f"{I:8.0f} {participation_ratio(psi):7.3f} {weight:10.3f} {x:8.2f} {mu:7.3f}")


if __name__ == "__main__":
    main()
