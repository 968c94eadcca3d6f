"""Self-consistent nonlinear modes, zero-mode recursion and profile design.

The nonlinear eigenproblem is H(psi) psi = omega psi at fixed total
intensity I = sum |psi|^2.  Two solvers share one residual:

* a fixed-point loop (build H, diagonalize, follow the eigenvector with the
  largest overlap, rescale to I, mix), and
* a Newton iteration on the bordered system
  [H(psi) psi - omega psi, (|psi|^2 - I) / I, Im psi_k] = 0,
  with continuation in sqrt(I) when a direct step is too far.

The fixed-point map loses stability once the zero mode develops plateaus
(its linearization acquires eigenvalues outside the unit circle), so the
default ``method="auto"`` hands stalled runs to Newton.

Zero modes of the chain have b_j = 0 and their a-amplitudes follow a
two-term recursion from the b-rows of H.  The recursion can be swept from
either end; the left-anchored sweep solves a monotone cubic per cell and
is the well-conditioned direction for plateau states.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .lattice import (
    BondTable,
    LatticeSpec1D,
    LatticeSpec2D,
    bond_table,
    chiral_a_mask_2d,
    sublattice_a_mask,
    total_intensity,
)

__all__ = [
    "BracketError",
    "BranchLossError",
    "BranchResult",
    "InfeasibleProfile",
    "Mode",
    "ModeClass",
    "ProfileTarget",
    "RecursionOverflow",
    "chiral_partition",
    "chiral_zero_mode",
    "classify_mode",
    "design_hoppings",
    "align_phase",
    "fix_gauge",
    "intensity_shoot",
    "linear_gap_radius",
    "participation_ratio",
    "plateau_height_hermitian",
    "plateau_height_nonhermitian",
    "plateau_heights",
    "profile_target",
    "solve_modes_at_intensity",
    "state_distance",
    "trace_tzm_branch",
    "tzm_recursion",
]

OVERFLOW_LIMIT = 1e150


class RecursionOverflow(ArithmeticError):
    """Raised when a recursion amplitude exceeds ``OVERFLOW_LIMIT``."""


class BracketError(ValueError):
    """Raised when the shooting bracket cannot be established."""


class InfeasibleProfile(ValueError):
    def __init__(self, message, cell):
        super().__init__(f"{message} (cell {cell})")
        self.cell = cell


class BranchLossError(RuntimeError):
    def __init__(self, message, index, partial):
        super().__init__(f"{message} at grid index {index}")
        self.index = index
        self.partial = partial


class ModeClass(str, Enum):
    TZM = "tzm"
    IN_GAP = "in_gap_nonzero"
    BULK = "bulk"


@dataclass
class Mode:
    omega: complex
    state: np.ndarray
    intensity: float
    residual: float
    converged: bool
    iterations: int = 0
    method: str = "fixed_point"


@dataclass
class BranchResult:
    intensity_grid: np.ndarray
    modes: list
    classification: list = field(default_factory=list)


def fix_gauge(state) -> np.ndarray:
    """Rotate the global phase so the largest-magnitude entry is real positive.

    Plateau states have many entries of equal magnitude; the first entry
    within 1e-9 of the maximum is used so that the choice is stable.
    """
    psi = np.asarray(state, dtype=complex)
    k = _gauge_index(psi)
    if psi[k] == 0:
        return psi.copy()
    return psi * (abs(psi[k]) / psi[k])


def _gauge_index(psi) -> int:
    mag = np.abs(psi)
    return int(np.flatnonzero(mag >= mag.max() * (1.0 - 1e-9))[0])


def align_phase(state, reference) -> np.ndarray:
    """Multiply ``state`` by the global phase that best matches ``reference``."""
    psi = np.asarray(state, dtype=complex)
    z = np.vdot(psi, reference)
    return psi if z == 0 else psi * (z / abs(z))


def state_distance(u, v) -> float:
    """Relative distance ||u - e^{i theta} v|| / ||u|| minimized over theta."""
    u = np.asarray(u, dtype=complex)
    return float(np.linalg.norm(u - align_phase(v, u)) / np.linalg.norm(u))


def _rescale(psi, intensity):
    norm2 = total_intensity(psi)
    if norm2 == 0:
        raise ValueError("cannot rescale a zero state")
    return psi * np.sqrt(intensity / norm2)


def participation_ratio(state) -> float:
    """(sum |psi|^2)^2 / (L sum |psi|^4), 1 for uniform and 1/L for one site."""
    p2 = np.abs(np.asarray(state)) ** 2
    s4 = float(np.sum(p2**2))
    if s4 == 0:
        raise ValueError("participation ratio of a zero state is undefined")
    return float(np.sum(p2) ** 2 / (p2.size * s4))


def _rayleigh(H, psi):
    return complex(np.vdot(psi, H @ psi) / np.vdot(psi, psi))


def _mode_residual(table, psi, omega, perturbation=None):
    H = table.matrix(psi, perturbation)
    return float(np.linalg.norm(H @ psi - omega * psi))


# ------------------------------------------------------------------ Newton


def _newton_mode(table, psi, omega, intensity, perturbation=None, tol=1e-10, max_iter=40):
    """Newton on the bordered eigen-system; returns (psi, omega, ok, its)."""
    n = table.n
    psi = fix_gauge(_rescale(np.asarray(psi, dtype=complex), intensity))
    omega = complex(omega)
    k = _gauge_index(psi)
    scale = max(intensity, 1e-300)

    def residual(p, w):
        H = table.matrix(p, perturbation)
        r = H @ p - w * p
        return np.concatenate(
            [r.real, r.imag, [(total_intensity(p) - intensity) / scale, p.imag[k]]]
        )

    res = residual(psi, omega)
    for it in range(max_iter):
        rnorm = np.linalg.norm(res)
        # equations are in units of |psi|; stop at tolerance or round-off
        if rnorm < tol:
            return psi, omega, True, it
        jac = np.zeros((2 * n + 2, 2 * n + 2))
        jac[: 2 * n, : 2 * n] = table.jacobian_real(psi, perturbation)
        jac[:n, :n] -= omega.real * np.eye(n)
        jac[:n, n : 2 * n] += omega.imag * np.eye(n)
        jac[n : 2 * n, :n] -= omega.imag * np.eye(n)
        jac[n : 2 * n, n : 2 * n] -= omega.real * np.eye(n)
        jac[:n, 2 * n] = -psi.real
        jac[n : 2 * n, 2 * n] = -psi.imag
        jac[:n, 2 * n + 1] = psi.imag
        jac[n : 2 * n, 2 * n + 1] = -psi.real
        jac[2 * n, :n] = 2.0 * psi.real / scale
        jac[2 * n, n : 2 * n] = 2.0 * psi.imag / scale
        jac[2 * n + 1, n + k] = 1.0
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -res, rcond=None)[0]
        dpsi = step[:n] + 1j * step[n : 2 * n]
        domega = step[2 * n] + 1j * step[2 * n + 1]
        lam = 1.0
        while True:
            trial_psi, trial_omega = psi + lam * dpsi, omega + lam * domega
            trial = residual(trial_psi, trial_omega)
            if np.linalg.norm(trial) < rnorm or lam < 1e-4:
                break
            lam *= 0.5
        if np.linalg.norm(trial) >= rnorm:
            # stalled: accept only if already at round-off level
            return psi, omega, rnorm < 1e3 * tol, it
        psi, omega, res = trial_psi, trial_omega, trial
    return psi, omega, bool(np.linalg.norm(res) < tol), max_iter


def _newton_continuation(table, psi, omega, intensity, perturbation=None, tol=1e-10, max_step=1.0):
    """Walk sqrt(I) from the seed's intensity to ``intensity`` with Newton.

    Long direct jumps can land on a different nonlinear branch, so the
    path is cut into steps of at most ``max_step`` in sqrt(I), refined
    when a step fails.
    """
    start, stop = np.sqrt(total_intensity(psi)), np.sqrt(intensity)
    n_steps = max(1, int(np.ceil(abs(stop - start) / max_step)))
    total = 0
    for _ in range(3):
        p, w = psi, omega
        for s in np.linspace(start, stop, n_steps + 1)[1:]:
            p, w, ok, its = _newton_mode(table, p, w, s * s, perturbation, tol)
            total += its
            if not ok:
                break
        if ok:
            return p, w, True, total
        n_steps *= 4
    return p, w, False, total


# ------------------------------------------------------------ fixed point


def chiral_partition(table: BondTable, perturbation=None):
    """Two-coloring of the bond graph, or None when H is not chiral.

    Returns the boolean mask of the larger color class (site 0's class on
    ties).  Any onsite term or a perturbation with diagonal entries breaks
    the sublattice structure.
    """
    if np.any(table.onsite != 0):
        return None
    if perturbation is not None and np.any(np.diagonal(perturbation) != 0):
        return None
    color = np.full(table.n, -1)
    neighbors = [[] for _ in range(table.n)]
    for i, j in zip(table.i, table.j):
        neighbors[i].append(j)
        neighbors[j].append(i)
    for root in range(table.n):
        if color[root] >= 0:
            continue
        color[root] = 0
        stack = [root]
        while stack:
            u = stack.pop()
            for v in neighbors[u]:
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    stack.append(v)
                elif color[v] == color[u]:
                    return None
    if perturbation is not None:
        rows, cols = np.nonzero(perturbation)
        if np.any(color[rows] == color[cols]):
            return None
    mask = color == 0
    return mask if mask.sum() >= (~mask).sum() else ~mask


def _select_eigvec(H, psi, a_mask):
    """Eigenpair of H with the largest overlap with ``psi``.

    For chiral H the zero-mode candidate is the exact sublattice kernel:
    eig resolves zero modes of skin-localized matrices only up to their
    (huge) condition number and returns nearly parallel eigenvectors.
    """
    norm_psi = np.linalg.norm(psi)
    if a_mask is not None:
        kernel = chiral_zero_mode(H, a_mask)
        kernel_overlap = abs(np.vdot(kernel, psi))
        if kernel_overlap >= (1.0 - 1e-6) * norm_psi:
            # any competitor would have to coincide with the kernel itself
            return 0j, kernel
    w, V = np.linalg.eig(H.real if not np.any(H.imag) else H)
    overlaps = np.abs(V.conj().T @ psi)
    if a_mask is not None:
        zero = np.abs(w) < 1e-6 * np.abs(H).sum(axis=1).max()
        overlaps[zero] = -1.0
        if kernel_overlap >= overlaps.max():
            return 0j, kernel
    k = int(np.argmax(overlaps))
    return complex(w[k]), V[:, k].astype(complex)


def _fixed_point(table, psi, intensity, perturbation, tol, max_iter, mixing=0.5, patience=30):
    psi = fix_gauge(_rescale(psi, intensity))
    best, since_best, last_change = np.inf, 0, np.inf
    omega = 0j
    a_mask = chiral_partition(table, perturbation)
    for it in range(1, max_iter + 1):
        H = table.matrix(psi, perturbation)
        omega, vec = _select_eigvec(H, psi, a_mask)
        phi = align_phase(_rescale(vec, intensity), psi)
        change = float(np.max(np.abs(phi - psi)))
        if change < tol:
            return phi, omega, True, it
        if change > last_change:
            mixing = max(mixing * 0.5, 1.0 / 1024)
        last_change = change
        if change < best * 0.999:
            best, since_best = change, 0
        else:
            since_best += 1
            if since_best > patience:
                return psi, omega, False, it
        psi = _rescale(psi + mixing * (phi - psi), intensity)
    return psi, omega, False, max_iter


def solve_modes_at_intensity(
    spec,
    target_I: float,
    seed_state,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    method: str = "auto",
    perturbation=None,
) -> list:
    """Self-consistent modes at total intensity ``target_I``.

    ``seed_state`` is one state or a 2D array with one seed per row; one
    :class:`Mode` is returned per seed.  ``method`` is ``"fixed_point"``,
    ``"newton"`` or ``"auto"`` (fixed point, then Newton continuation
    starting from the seed's own intensity if the loop stalls).
    Unconverged results come back with ``converged=False``.
    """
    if target_I < 0:
        raise ValueError("target_I must be non-negative")
    if method not in ("auto", "fixed_point", "newton"):
        raise ValueError(f"unknown method {method!r}")
    table = bond_table(spec) if not isinstance(spec, BondTable) else spec
    seeds = np.atleast_2d(np.asarray(seed_state, dtype=complex))
    if seeds.shape[1] != table.n:
        raise ValueError(f"seed length {seeds.shape[1]} does not match lattice size {table.n}")
    intensity = max(float(target_I), 1e-300)
    tol_res = tol * max(1.0, np.sqrt(intensity))
    modes = []
    for seed in seeds:
        if not np.any(seed):
            raise ValueError("seed state must be nonzero")
        used = method
        psi, omega, ok, its = seed, 0j, False, 0
        if method in ("auto", "fixed_point"):
            psi, omega, ok, its = _fixed_point(table, seed, intensity, perturbation, tol, max_iter)
            if ok:
                used = "fixed_point"
                # polish: the eigenvector of a non-normal H is only accurate
                # to its condition number, Newton restores the residual
                p2, w2, ok2, its2 = _newton_mode(table, psi, omega, intensity, perturbation, 1e-3 * tol_res)
                if ok2:
                    psi, omega, its = p2, w2, its + its2
        if not ok and method in ("auto", "newton"):
            w0 = _rayleigh(table.matrix(seed, perturbation), seed)
            psi, omega, ok, its2 = _newton_continuation(table, seed, w0, intensity, perturbation, 1e-3 * tol_res)
            its += its2
            used = "newton"
        psi = fix_gauge(psi)
        residual = _mode_residual(table, psi, omega, perturbation)
        converged = bool(ok and residual < tol_res)
        modes.append(
            Mode(
                omega=complex(omega),
                state=psi,
                intensity=total_intensity(psi),
                residual=residual,
                converged=converged,
                iterations=its,
                method=used,
            )
        )
    return modes


# --------------------------------------------------------- branch tracing


def _a_mask(spec) -> np.ndarray:
    if isinstance(spec, LatticeSpec2D):
        return chiral_a_mask_2d(spec)
    return sublattice_a_mask(spec.n_sites)


def chiral_zero_mode(H, a_mask) -> np.ndarray:
    """Kernel vector of the b-rows of H restricted to a-sites (unit norm).

    For a chiral H with one more a-site than b-sites this is the exact zero
    mode; it avoids diagonalizing the full non-normal matrix.
    """
    a_mask = np.asarray(a_mask, dtype=bool)
    block = H[np.ix_(~a_mask, a_mask)]
    if not np.any(block.imag):
        block = block.real
    _, _, vh = np.linalg.svd(block)
    psi = np.zeros(H.shape[0], dtype=complex)
    psi[a_mask] = vh[-1].conj()
    return fix_gauge(psi)


def linear_gap_radius(spec, perturbation=None) -> float:
    """Smallest |omega| among the non-zero linear eigenvalues."""
    table = bond_table(spec)
    H0 = table.matrix(np.zeros(table.n), perturbation)
    w = np.abs(np.linalg.eigvals(H0))
    cut = 1e-6 * np.linalg.norm(H0, 2)
    nonzero = w[w > cut]
    return float(nonzero.min()) if nonzero.size else np.inf


def classify_mode(mode: Mode, spec, gap_radius: float, perturbation=None) -> ModeClass:
    table = bond_table(spec)
    norm = np.linalg.norm(table.matrix(mode.state, perturbation), 2)
    if abs(mode.omega) < 1e-6 * norm:
        return ModeClass.TZM
    if abs(mode.omega) < gap_radius:
        return ModeClass.IN_GAP
    return ModeClass.BULK


def _overlap(u, v):
    return abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))


def _trace_step(table, intensity, previous, omega, max_shift, tol, max_iter, method, perturbation):
    """One continuation step; returns (mode, on_branch).

    On the branch means an overlap above one half with the previous state
    and a frequency shift of at most ``max_shift``: skin-localized bulk
    modes can overlap strongly with a boundary-localized zero mode.
    """
    order = ("newton", "auto") if method == "auto" else (method,)
    for m in order:
        (mode,) = solve_modes_at_intensity(
            table, intensity, previous, tol=tol, max_iter=max_iter, method=m, perturbation=perturbation
        )
        on_branch = _overlap(previous, mode.state) > 0.5 and abs(mode.omega - omega) <= max_shift
        if mode.converged and on_branch:
            break
    return mode, on_branch


def trace_tzm_branch(
    spec,
    intensity_grid,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    method: str = "auto",
    perturbation=None,
    seed_state=None,
) -> BranchResult:
    """Follow the zero-mode branch across an ascending intensity grid.

    The first point is seeded with the linear chiral zero mode (or
    ``seed_state``); every later point is seeded with the previous result.
    With ``method="auto"`` later points are continued by Newton and fall
    back to the fixed-point loop.  A step whose result overlaps the previous
    state by less than one half, or shifts the frequency by more than half
    the linear gap, is retried on 8, then 64 sub-steps in
    sqrt(I) before the branch counts as lost.
    """
    grid = np.asarray(intensity_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("intensity grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("intensity grid must be strictly ascending")
    table = bond_table(spec)
    if seed_state is None:
        seed_state = chiral_zero_mode(table.matrix(np.zeros(table.n), perturbation), _a_mask(spec))
    gap = linear_gap_radius(spec, perturbation)
    shift = 0.5 * gap
    result = BranchResult(intensity_grid=grid, modes=[], classification=[])
    previous = np.asarray(seed_state, dtype=complex)
    for index, intensity in enumerate(grid):
        if index == 0:
            # the seed keeps its own intensity so a Newton fallback continues from it
            (mode,) = solve_modes_at_intensity(
                table, intensity, previous, tol=tol, max_iter=max_iter, method=method, perturbation=perturbation
            )
        else:
            mode, on_branch = _trace_step(table, intensity, previous, omega, shift, tol, max_iter, method, perturbation)
            for n_sub in (8, 64) if not (on_branch and mode.converged) else ():
                p, w = previous, omega
                for sub in np.linspace(np.sqrt(grid[index - 1]), np.sqrt(intensity), n_sub + 1)[1:]:
                    sub_mode, sub_ok = _trace_step(table, sub * sub, p, w, shift, tol, max_iter, method, perturbation)
                    if not (sub_ok and sub_mode.converged):
                        break
                    p, w = sub_mode.state, sub_mode.omega
                if sub_ok and sub_mode.converged:
                    mode, on_branch = sub_mode, True
                    break
            if not on_branch:
                raise BranchLossError("branch continuity lost", index, result)
        result.modes.append(mode)
        result.classification.append(classify_mode(mode, spec, gap, perturbation))
        previous, omega = mode.state, mode.omega
    return result


# --------------------------------------------------------------- recursion


def _monotone_cubic_root(k3: float, k1: float, c: float) -> float:
    """Real root of k3 x^3 + k1 x + c = 0 for k3 >= 0, k1 > 0 (unique)."""
    # overflow surfaces as inf / nan and is reported by _check_overflow
    with np.errstate(over="ignore", invalid="ignore"):
        x = -c / k1
        if k3 * x * x < 1e-8 * k1:
            # cubic term is a small correction; k1 / k3 may overflow
            for _ in range(3):
                x -= (k3 * x**3 + k1 * x + c) / (3.0 * k3 * x * x + k1)
            return float(x)
        p, q = k1 / k3, c / k3
        s = np.sqrt(p / 3.0)
        x = -2.0 * s * np.sinh(np.arcsinh(1.5 * q / (p * s)) / 3.0)
        for _ in range(2):
            f = k3 * x**3 + k1 * x + c
            x -= f / (3.0 * k3 * x * x + k1)
        return float(x)


def _check_overflow(value, cell):
    if not np.isfinite(value) or abs(value) > OVERFLOW_LIMIT:
        raise RecursionOverflow(f"zero-mode amplitude {value:.3e} exceeds {OVERFLOW_LIMIT:.0e} at cell {cell}")


def tzm_recursion(spec: LatticeSpec1D, boundary_amplitude: float, side: str = "left") -> np.ndarray:
    """Exact omega = 0 mode (b_j = 0) fixed by one boundary amplitude.

    Each b-row of H links a_j to a_{j+1}:

        tau a_j + (t_j + alpha a_{j+1}^2) a_{j+1} = 0          j < N
        tau a_N + t_d a_{N+1} = 0
        (J + delta) a_j + (lambda_j + beta a_{j+1}^2) a_{j+1} = 0   j > N

    ``side="right"`` fixes the rightmost a-site and evaluates the relations
    explicitly towards the left.  That sweep multiplies relative rounding
    errors by (lambda_j + 3 beta a^2) / (lambda_j + beta a^2) per cell, which
    destroys plateau states on long chains.  ``side="left"`` fixes a_1 and
    solves one monotone cubic per cell (a unique real root for positive
    hoppings); errors are damped instead.
    """
    if boundary_amplitude <= 0:
        raise ValueError("boundary_amplitude must be positive")
    n, m = spec.n_hermitian_cells, spec.n_cells
    a = np.zeros(m)
    if side == "left":
        if np.any(spec.t_bar <= 0) or np.any(spec.lambda_bar <= 0):
            raise ValueError("left sweep needs positive background hoppings; use side='right'")
        a[0] = boundary_amplitude
        for j in range(1, m):  # computing a_{j+1} (0-based a[j]) from a_j
            cell = j
            if cell < n:
                a[j] = _monotone_cubic_root(spec.alpha, spec.t_bar[cell - 1], spec.tau * a[j - 1])
            elif cell == n:
                a[j] = -spec.tau * a[j - 1] / spec.t_d
            else:
                a[j] = _monotone_cubic_root(
                    spec.beta, spec.lambda_bar[cell - n - 1], (spec.j_hop + spec.delta) * a[j - 1]
                )
            _check_overflow(a[j], cell + 1)
    elif side == "right":
        a[-1] = boundary_amplitude
        for j in range(m - 1, 0, -1):  # computing a_j (0-based a[j-1]) from a_{j+1}
            cell = j
            x = a[j]
            if cell > n:
                a[j - 1] = -(spec.lambda_bar[cell - n - 1] + spec.beta * x * x) * x / (spec.j_hop + spec.delta)
            elif cell == n:
                a[j - 1] = -spec.t_d * x / spec.tau
            else:
                a[j - 1] = -(spec.t_bar[cell - 1] + spec.alpha * x * x) * x / spec.tau
            _check_overflow(a[j - 1], cell)
    else:
        raise ValueError("side must be 'left' or 'right'")
    psi = np.zeros(spec.n_sites, dtype=complex)
    psi[0::2] = a
    return psi


def intensity_shoot(spec: LatticeSpec1D, target_I: float, side: str = "left", rtol: float = 1e-8) -> np.ndarray:
    """Zero mode of total intensity ``target_I`` from the recursion family.

    The boundary amplitude is found by Brent's method on log-amplitude after
    checking that the intensity grows monotonically across the bracket.
    """
    if target_I <= 0:
        raise ValueError("target_I must be positive")

    def log_intensity(log_amp):
        return np.log(total_intensity(tzm_recursion(spec, float(np.exp(log_amp)), side)))

    goal = np.log(target_I)
    lo = hi = 0.5 * (goal - log_intensity(0.0))
    try:
        while log_intensity(lo) > goal:
            lo -= 2.0
        while log_intensity(hi) < goal:
            hi += 1.0
    except RecursionOverflow as exc:
        raise BracketError(f"no bracket for I={target_I}: {exc}") from exc
    lo -= 1e-3
    hi += 1e-3
    probe = np.linspace(lo, hi, 17)
    values = np.array([log_intensity(x) for x in probe])
    if np.any(np.diff(values) <= 0):
        raise BracketError(
            f"intensity is not monotone in the boundary amplitude on [{np.exp(lo):.6g}, {np.exp(hi):.6g}]"
        )
    root = brentq(lambda x: log_intensity(x) - goal, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    psi = tzm_recursion(spec, float(np.exp(root)), side)
    got = total_intensity(psi)
    if abs(got - target_I) > rtol * target_I:
        raise BracketError(f"intensity mismatch {got} vs {target_I}")
    return fix_gauge(psi)


# ------------------------------------------------------------ plateaus


def _constant(values, name):
    values = np.asarray(values)
    if values.size and not np.allclose(values, values[0], rtol=0, atol=1e-14):
        raise ValueError(f"plateau formula needs a constant {name}")
    return float(values[0]) if values.size else np.nan


def plateau_height_hermitian(spec: LatticeSpec1D) -> float:
    """sqrt((tau - t) / alpha) for constant t_bar; needs alpha > 0, tau >= t."""
    t = _constant(spec.t_bar, "t_bar")
    if spec.alpha <= 0 or not spec.tau >= t:
        raise ValueError("Hermitian plateau needs alpha > 0 and tau >= t_bar")
    return float(np.sqrt((spec.tau - t) / spec.alpha))


def plateau_height_nonhermitian(spec: LatticeSpec1D) -> float:
    """sqrt((J + delta - lambda) / beta) for constant lambda_bar."""
    lam = _constant(spec.lambda_bar, "lambda_bar")
    gain = spec.j_hop + spec.delta
    if spec.beta <= 0 or not gain >= lam:
        raise ValueError("non-Hermitian plateau needs beta > 0 and J + delta >= lambda_bar")
    return float(np.sqrt((gain - lam) / spec.beta))


def plateau_heights(spec: LatticeSpec1D) -> tuple:
    """Bulk plateau amplitudes (a_L, a_R) of the Hermitian and nonreciprocal chains."""
    return plateau_height_hermitian(spec), plateau_height_nonhermitian(spec)


# ------------------------------------------------------------ profile design


@dataclass(frozen=True)
class ProfileTarget:
    """Desired |a_j| on every cell j = 1..M."""

    shape: str
    samples: np.ndarray

    def __post_init__(self):
        if self.shape not in ("flat", "square", "triangle", "cosine", "custom"):
            raise ValueError(f"unknown profile shape {self.shape!r}")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))


_SHAPE_DEFAULTS = {
    "flat": {"height": np.sqrt(20.0)},
    "square": {"low": 3.0, "high": 5.0},
    "triangle": {"low": 2.5, "high": 5.5},
    "cosine": {"mean": 4.0, "swing": 1.0},
}


def profile_target(shape: str, spec: LatticeSpec1D, **params) -> ProfileTarget:
    """Build a standard target shape over the cells of ``spec``.

    Shapes are sampled on u = (j - 1) / (M - 1):

    * flat: constant ``height``
    * square: ``high`` for 1/4 <= u <= 3/4, ``low`` elsewhere
    * triangle: ``low`` at both ends rising linearly to ``high`` at u = 1/2
    * cosine: ``mean + swing cos(2 pi u)``

    The samples on the nonreciprocal side are then rescaled by one common
    factor so that the interface relation |a_{N+1}| = tau |a_N| / t_d holds.
    """
    if shape not in _SHAPE_DEFAULTS:
        raise ValueError(f"no built-in generator for shape {shape!r}")
    p = dict(_SHAPE_DEFAULTS[shape], **params)
    m, n = spec.n_cells, spec.n_hermitian_cells
    u = np.arange(m) / (m - 1)
    if shape == "flat":
        a = np.full(m, p["height"])
    elif shape == "square":
        a = np.where((u >= 0.25) & (u <= 0.75), p["high"], p["low"])
    elif shape == "triangle":
        a = p["low"] + (p["high"] - p["low"]) * (1.0 - np.abs(2.0 * u - 1.0))
    else:
        a = p["mean"] + p["swing"] * np.cos(2.0 * np.pi * u)
    a = a.astype(float)
    a[n:] *= (spec.tau * a[n - 1] / spec.t_d) / a[n]
    return ProfileTarget(shape=shape, samples=a)


def design_hoppings(spec: LatticeSpec1D, target: ProfileTarget) -> tuple:
    """Background hoppings whose zero mode has |a_j| equal to the target.

    Inverting the b-row relations with alternating signs gives

        t_j      = tau a_j / a_{j+1} - alpha a_{j+1}^2         (j < N)
        lambda_j = (J + delta) a_j / a_{j+1} - beta a_{j+1}^2   (j > N)

    The interface relation is fixed by tau and t_d and must already hold
    for the target.
    """
    a = np.asarray(target.samples, dtype=float)
    n, m = spec.n_hermitian_cells, spec.n_cells
    if a.shape != (m,):
        raise ValueError(f"target needs {m} samples, got {a.shape}")
    bad = np.flatnonzero(~(a > 0))
    if bad.size:
        raise InfeasibleProfile("target samples must be positive", int(bad[0]) + 1)
    expected = spec.tau * a[n - 1] / spec.t_d
    if abs(a[n] - expected) > 1e-12 * expected:
        raise InfeasibleProfile(
            f"interface needs |a_{{N+1}}| = tau |a_N| / t_d = {expected:.12g}, target has {a[n]:.12g}", n + 1
        )
    herm = np.arange(1, n)  # cells j = 1..N-1
    t_bar = spec.tau * a[herm - 1] / a[herm] - spec.alpha * a[herm] ** 2
    nh = np.arange(n + 1, m)  # cells j = N+1..M-1
    lam = (spec.j_hop + spec.delta) * a[nh - 1] / a[nh] - spec.beta * a[nh] ** 2
    for cells, values in ((herm, t_bar), (nh, lam)):
        bad = np.flatnonzero(values <= 0)
        if bad.size:
            raise InfeasibleProfile(f"designed hopping {values[bad[0]]:.6g} is not positive", int(cells[bad[0]]))
    return t_bar, lam
