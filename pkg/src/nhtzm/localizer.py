"""Real-space topology of the interface chain via spectral localizers.

A diagonal similarity S maps H(psi) to a Hermitian H_S = S H S^{-1}.  The
localizer combines the position operator X = diag(1..L) with H_S:

    full:     [[0, eta (X - x) - i (H_S - w)], [eta (X - x) + i (H_S - w), 0]]
    reduced:  eta (X - x) Pi + H_S - i w Pi

where Pi = +1 on a-sites and -1 on b-sites.  At w = 0 the reduced form is
Hermitian, its smallest |eigenvalue| is the local gap mu and half its
signature is the local invariant C.  With W = (1 + i Pi) / sqrt(2) one finds
W^dag (eta (X - x) + i H_S) W = Pi (eta (X - x) Pi + H_S), so both forms share
their singular values and hence mu.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import LatticeSpec1D, build_hamiltonian_1d

__all__ = [
    "ChiralSymmetryError",
    "LocalizerProbe",
    "SimilarityMap",
    "chiral_operator",
    "full_localizer",
    "locate_invariant_jumps",
    "local_invariant_scan",
    "position_operator",
    "protection_margin",
    "reduced_localizer",
    "similarity_map",
    "similarity_transform",
    "topological_mu_max",
]

HERMITIAN_TOL = 1e-10


class ChiralSymmetryError(ValueError):
    """H_S does not anticommute with Pi; use the full localizer instead."""


@dataclass(frozen=True)
class SimilarityMap:
    diagonal: np.ndarray
    r: float

    def apply(self, state) -> np.ndarray:
        return self.diagonal * np.asarray(state)


@dataclass(frozen=True)
class LocalizerProbe:
    x: float
    omega_bar: float
    eta: float
    local_gap: float
    invariant: float
    spectrum: np.ndarray
    n_zero: int = 0


def similarity_map(spec: LatticeSpec1D) -> SimilarityMap:
    """Diagonal of S: ones on the Hermitian chain, then 1, r, r, r^2, r^2, ...

    Requires (J - delta)(J + delta) > 0; otherwise the symmetrized intracell
    hopping would be imaginary and H_S not Hermitian.
    """
    lo, hi = spec.j_hop - spec.delta, spec.j_hop + spec.delta
    if abs(spec.j_hop) == abs(spec.delta):
        raise ValueError("similarity transform is singular for |J| = |delta| (unidirectional hopping)")
    if lo * hi <= 0:
        raise ValueError("similarity transform needs (J - delta)(J + delta) > 0 for a Hermitian H_S")
    r = float(np.sqrt(abs(lo / hi)))
    n = spec.n_hermitian_cells
    k = np.arange(spec.n_sites - 2 * n)
    diag = np.ones(spec.n_sites)
    diag[2 * n :] = r ** ((k + 1) // 2)
    return SimilarityMap(diagonal=diag, r=r)


def similarity_transform(spec: LatticeSpec1D, state, perturbation=None):
    """Return (H_S, S) with H_S = S H(psi) S^{-1}."""
    S = similarity_map(spec)
    H = build_hamiltonian_1d(spec, state, perturbation)
    d = S.diagonal
    H_S = d[:, None] * H / d[None, :]
    dev = np.abs(H_S - H_S.conj().T).max()
    if dev > HERMITIAN_TOL * max(1.0, np.abs(H_S).max()):
        raise ValueError(f"transformed Hamiltonian is not Hermitian (deviation {dev:.3e})")
    return 0.5 * (H_S + H_S.conj().T), S


def position_operator(n_sites: int) -> np.ndarray:
    return np.diag(np.arange(1, n_sites + 1, dtype=float))


def chiral_operator(n_sites: int) -> np.ndarray:
    return np.diag(np.where(np.arange(n_sites) % 2 == 0, 1.0, -1.0))


def _check_hermitian(H_S):
    dev = np.abs(H_S - H_S.conj().T).max()
    if dev > HERMITIAN_TOL * max(1.0, np.abs(H_S).max()):
        raise ValueError(f"H_S must be Hermitian (deviation {dev:.3e})")


def full_localizer(H_S, X, x: float, omega_bar: float = 0.0, eta: float = 0.2) -> np.ndarray:
    """Hermitian 2L x 2L localizer eta (X - x) (x) Gamma_x + (H_S - w) (x) Gamma_y."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    H_S = np.asarray(H_S, dtype=complex)
    _check_hermitian(H_S)
    n = H_S.shape[0]
    eye = np.eye(n)
    A = eta * (np.asarray(X) - x * eye) + 1j * (H_S - omega_bar * eye)
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[:n, n:] = A.conj().T
    out[n:, :n] = A
    return out


def reduced_localizer(H_S, X, Pi, x: float, omega_bar: float = 0.0, eta: float = 0.2) -> np.ndarray:
    """L x L chiral-reduced localizer eta (X - x) Pi + H_S - i w Pi."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    H_S = np.asarray(H_S, dtype=complex)
    Pi = np.asarray(Pi)
    _check_hermitian(H_S)
    anti = np.abs(H_S @ Pi + Pi @ H_S).max()
    if anti > HERMITIAN_TOL * max(1.0, np.abs(H_S).max()):
        raise ChiralSymmetryError(f"H_S Pi + Pi H_S = {anti:.3e} != 0; use full_localizer")
    n = H_S.shape[0]
    return eta * (np.asarray(X) - x * np.eye(n)) @ Pi + H_S - 1j * omega_bar * Pi


def _probe(H_S, X, Pi, x, eta):
    L = reduced_localizer(H_S, X, Pi, x, 0.0, eta)
    w = np.linalg.eigvalsh(L)
    zero_cut = 1e-12 * max(np.abs(w).max(), 1e-300)
    n_zero = int(np.sum(np.abs(w) < zero_cut))
    # near-zero eigenvalues keep their computed sign so that C stays a
    # half-integer for odd L; they are reported through n_zero
    sig = int(np.sum(w > 0) - np.sum(w <= 0))
    return LocalizerProbe(
        x=float(x),
        omega_bar=0.0,
        eta=float(eta),
        local_gap=float(np.abs(w).min()),
        invariant=sig / 2.0,
        spectrum=w,
        n_zero=n_zero,
    )


def local_invariant_scan(spec: LatticeSpec1D, state, x_grid=None, eta: float = 0.2, perturbation=None) -> list:
    """Local gap and invariant at w = 0 for every probe position.

    ``x_grid`` defaults to the integer site positions 1..L.  Eigenvalues
    below 1e-12 of the spectral radius are reported in ``n_zero``; an
    extended zero mode keeps the localizer gap at round-off level over a
    whole range of x, where the sign count is only as good as the computed
    sign of that eigenvalue.
    """
    grid = np.arange(1, spec.n_sites + 1, dtype=float) if x_grid is None else np.asarray(x_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("probe grid is empty")
    H_S, _ = similarity_transform(spec, state, perturbation)
    X, Pi = position_operator(spec.n_sites), chiral_operator(spec.n_sites)
    return [_probe(H_S, X, Pi, x, eta) for x in grid]


def locate_invariant_jumps(spec: LatticeSpec1D, state, probes, eta: float = 0.2, tol: float = 1e-13, perturbation=None) -> list:
    """Bisect every jump of C between neighbouring probes.

    Returns (x_jump, mu_at_jump, jump) tuples.  The gap of the reduced
    localizer closes linearly at a crossing, so bisection to ``tol`` in x
    drives mu to the same order.
    """
    H_S, _ = similarity_transform(spec, state, perturbation)
    X, Pi = position_operator(spec.n_sites), chiral_operator(spec.n_sites)
    out = []
    for left, right in zip(probes[:-1], probes[1:]):
        if left.invariant == right.invariant:
            continue
        lo, hi, c_lo = left.x, right.x, left.invariant
        best = min((left, right), key=lambda p: p.local_gap)
        while hi - lo > tol * max(1.0, abs(lo)):
            mid = 0.5 * (lo + hi)
            p = _probe(H_S, X, Pi, mid, eta)
            if p.local_gap < best.local_gap:
                best = p
            if p.invariant == c_lo:
                lo = mid
            else:
                hi = mid
        out.append((best.x, best.local_gap, right.invariant - left.invariant))
    return out


def topological_mu_max(probes, n_sites: int) -> float:
    """Largest local gap over in-lattice probes on the topological side.

    The far-field invariant to the right of the lattice equals
    -(n_a - n_b) / 2.  Probes inside 1 <= x <= L whose invariant differs
    from it form the topological region.
    """
    n_a = (n_sites + 1) // 2
    far_right = -(n_a - (n_sites - n_a)) / 2.0
    inside = [p.local_gap for p in probes if 1.0 <= p.x <= n_sites and p.invariant != far_right]
    if not inside:
        raise ValueError("no probe lies in the topological region")
    return float(max(inside))


def protection_margin(H_S_base, H_S_perturbed, mu_max: float):
    """(mu_max - ||Delta H_S||_2, margin > 0)."""
    base = np.asarray(H_S_base)
    pert = np.asarray(H_S_perturbed)
    if base.shape != pert.shape:
        raise ValueError(f"dimension mismatch {base.shape} vs {pert.shape}")
    norm = float(np.linalg.norm(pert - base, 2)) if base.size else 0.0
    margin = float(mu_max) - norm
    return margin, margin > 0
