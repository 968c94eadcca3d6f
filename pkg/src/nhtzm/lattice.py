"""State-dependent Hamiltonians for the Hermitian / non-Hermitian interface chain.

Sites use one flat index in the order a_1, b_1, a_2, b_2, ... (0-based in
code, so a_j sits at 2(j-1) and b_j at 2(j-1)+1).  With an odd number of
sites the last cell carries only its a-site.  Cells 1..N form the Hermitian
SSH chain, cells N+1..M the nonreciprocal one, and the interface bond joins
b_N to a_{N+1}.

Every coupling is stored as a bond (i, j) with forward/backward base values
and a Kerr coefficient g, so that the matrix entries are

    H[i, j] = h_ij + g (|psi_i|^2 + |psi_j|^2)
    H[j, i] = h_ji + g (|psi_i|^2 + |psi_j|^2)

The same table drives the dense builders, the Newton Jacobians and the
compiled time stepper.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = [
    "BondTable",
    "DisorderConfig",
    "DisorderKind",
    "LatticeSpec1D",
    "LatticeSpec2D",
    "apply_disorder",
    "bbh_sign_pattern",
    "bond_table",
    "bond_table_1d",
    "bond_table_2d",
    "build_hamiltonian_1d",
    "build_hamiltonian_2d",
    "chiral_a_mask_2d",
    "export_matrix_csv",
    "sublattice_a_mask",
    "total_intensity",
]


def _as_hopping_array(value, length, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(length, float(arr))
    if arr.shape != (length,):
        raise ValueError(f"{name} must have length {length}, got shape {arr.shape}")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class LatticeSpec1D:
    """Static parameters of the hybrid chain.

    ``t_bar`` holds the intercell hoppings of cells 1..N-1 and
    ``lambda_bar`` those of cells N+1..M-1, where M = (n_sites + 1) / 2.
    Scalars are broadcast to the right length.
    """

    n_hermitian_cells: int
    n_sites: int
    tau: float
    t_bar: np.ndarray
    alpha: float
    j_hop: float
    delta: float
    lambda_bar: np.ndarray
    beta: float
    t_d: float

    def __post_init__(self):
        n, size = int(self.n_hermitian_cells), int(self.n_sites)
        if n < 1:
            raise ValueError("n_hermitian_cells must be a positive integer")
        if size < 1 or size % 2 == 0:
            raise ValueError(f"n_sites must be a positive odd integer, got {size}")
        if 2 * n >= size:
            raise ValueError("need 2 * n_hermitian_cells < n_sites")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("Kerr coefficients alpha and beta must be non-negative")
        object.__setattr__(self, "n_hermitian_cells", n)
        object.__setattr__(self, "n_sites", size)
        m = (size + 1) // 2
        object.__setattr__(self, "t_bar", _as_hopping_array(self.t_bar, n - 1, "t_bar"))
        object.__setattr__(
            self, "lambda_bar", _as_hopping_array(self.lambda_bar, m - n - 1, "lambda_bar")
        )
        for name in ("tau", "alpha", "j_hop", "delta", "beta", "t_d"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def n_cells(self) -> int:
        return (self.n_sites + 1) // 2

    def a_index(self, cell: int) -> int:
        """Flat 0-based index of a_cell (cells counted from 1)."""
        return 2 * (cell - 1)

    def b_index(self, cell: int) -> int:
        return 2 * (cell - 1) + 1

    def with_hoppings(self, t_bar=None, lambda_bar=None) -> "LatticeSpec1D":
        return replace(
            self,
            t_bar=self.t_bar if t_bar is None else t_bar,
            lambda_bar=self.lambda_bar if lambda_bar is None else lambda_bar,
        )

    def to_dict(self) -> dict:
        return {
            "n_hermitian_cells": self.n_hermitian_cells,
            "n_sites": self.n_sites,
            "tau": self.tau,
            "t_bar": self.t_bar.tolist(),
            "alpha": self.alpha,
            "j_hop": self.j_hop,
            "delta": self.delta,
            "lambda_bar": self.lambda_bar.tolist(),
            "beta": self.beta,
            "t_d": self.t_d,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LatticeSpec1D":
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "LatticeSpec1D":
        return cls.from_dict(json.loads(text))


def sublattice_a_mask(n_sites: int) -> np.ndarray:
    """Boolean mask that is True on a-sites of a 1D chain."""
    return np.arange(n_sites) % 2 == 0


def total_intensity(state) -> float:
    psi = np.asarray(state)
    return float(np.sum(psi.real**2 + psi.imag**2))


@dataclass(frozen=True)
class BondTable:
    """Bond list with Kerr-dependent entries plus a static diagonal."""

    n: int
    i: np.ndarray
    j: np.ndarray
    h_ij: np.ndarray
    h_ji: np.ndarray
    g: np.ndarray
    onsite: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.onsite is None:
            object.__setattr__(self, "onsite", np.zeros(self.n, dtype=complex))

    def entries(self, state):
        """Forward and backward matrix entries for the given state."""
        psi = np.asarray(state)
        p2 = psi.real**2 + psi.imag**2
        s = self.g * (p2[self.i] + p2[self.j])
        return self.h_ij + s, self.h_ji + s

    def matrix(self, state, perturbation=None) -> np.ndarray:
        psi = np.asarray(state)
        if psi.shape != (self.n,):
            raise ValueError(f"state has shape {psi.shape}, expected ({self.n},)")
        fwd, bwd = self.entries(psi)
        H = np.zeros((self.n, self.n), dtype=complex)
        H[self.i, self.j] = fwd
        H[self.j, self.i] = bwd
        H[np.diag_indices(self.n)] += self.onsite
        if perturbation is not None:
            H = H + perturbation
        return H

    def apply(self, state) -> np.ndarray:
        """H(psi) psi without forming the dense matrix."""
        psi = np.asarray(state, dtype=complex)
        fwd, bwd = self.entries(psi)
        out = self.onsite * psi
        np.add.at(out, self.i, fwd * psi[self.j])
        np.add.at(out, self.j, bwd * psi[self.i])
        return out

    def jacobian_real(self, state, perturbation=None) -> np.ndarray:
        """Real 2n x 2n Jacobian of psi -> H(psi) psi in (Re psi, Im psi).

        The Kerr terms depend on p_m = |psi_m|^2, so
        d(H psi) = H dpsi + D dp with dp_m = 2 Re(conj(psi_m) dpsi_m).
        """
        psi = np.asarray(state, dtype=complex)
        n = self.n
        H = self.matrix(psi, perturbation)
        D = np.zeros((n, n), dtype=complex)
        gi = self.g * psi[self.j]
        gj = self.g * psi[self.i]
        np.add.at(D, (self.i, self.i), gi)
        np.add.at(D, (self.i, self.j), gi)
        np.add.at(D, (self.j, self.i), gj)
        np.add.at(D, (self.j, self.j), gj)
        dr = D * (2.0 * psi.real)[None, :]
        di = D * (2.0 * psi.imag)[None, :]
        jac = np.empty((2 * n, 2 * n))
        jac[:n, :n] = H.real + dr.real
        jac[:n, n:] = -H.imag + di.real
        jac[n:, :n] = H.imag + dr.imag
        jac[n:, n:] = H.real + di.imag
        return jac

    def with_onsite(self, onsite) -> "BondTable":
        return replace(self, onsite=np.asarray(onsite, dtype=complex))


def bond_table_1d(spec: LatticeSpec1D, site_offset: int = 0, n_total: int | None = None) -> BondTable:
    """Bond table of one chain, optionally embedded at ``site_offset``."""
    n, m, size = spec.n_hermitian_cells, spec.n_cells, spec.n_sites
    bi, bj, fwd, bwd, kerr = [], [], [], [], []

    def add(i, j, h_ij, h_ji, g):
        bi.append(i + site_offset)
        bj.append(j + site_offset)
        fwd.append(h_ij)
        bwd.append(h_ji)
        kerr.append(g)

    for cell in range(1, m + 1):
        a, b = spec.a_index(cell), spec.b_index(cell)
        if b >= size:
            break
        if cell <= n:
            add(a, b, spec.tau, spec.tau, 0.0)
        else:
            # rightward (a -> b entry) J - delta, leftward J + delta
            add(a, b, spec.j_hop - spec.delta, spec.j_hop + spec.delta, 0.0)
        # intercell bond b_cell -- a_{cell+1}
        if cell < n:
            t = spec.t_bar[cell - 1]
            add(b, b + 1, t, t, spec.alpha)
        elif cell == n:
            add(b, b + 1, spec.t_d, spec.t_d, 0.0)
        else:
            lam = spec.lambda_bar[cell - n - 1]
            add(b, b + 1, lam, lam, spec.beta)
    total = size if n_total is None else n_total
    return BondTable(
        n=total,
        i=np.array(bi, dtype=np.int64),
        j=np.array(bj, dtype=np.int64),
        h_ij=np.array(fwd, dtype=float),
        h_ji=np.array(bwd, dtype=float),
        g=np.array(kerr, dtype=float),
    )


def build_hamiltonian_1d(spec: LatticeSpec1D, state, perturbation=None) -> np.ndarray:
    """Dense H(psi) of the interface chain with open boundaries.

    ``perturbation`` is an optional static matrix (for instance from
    :func:`apply_disorder`) added to the result.
    """
    psi = np.asarray(state)
    if psi.shape != (spec.n_sites,):
        raise ValueError(f"state length {psi.shape} does not match n_sites={spec.n_sites}")
    return bond_table_1d(spec).matrix(psi, perturbation)


# ---------------------------------------------------------------- disorder


class DisorderKind(str, Enum):
    ONSITE = "onsite"
    HOPPING = "hopping"
    MULTIPLICATIVE = "multiplicative_hopping"


@dataclass(frozen=True)
class DisorderConfig:
    kind: DisorderKind
    strength: float
    seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", DisorderKind(self.kind))
        except ValueError:
            raise ValueError(f"unknown disorder kind {self.kind!r}") from None
        if self.strength < 0:
            raise ValueError("disorder strength must be non-negative")


# stream tags keep the different random families independent for one seed
_STREAM_ONSITE = 1
_STREAM_INTRA = 2
_STREAM_INTER = 3
_STREAM_T_MULT = 4
_STREAM_L_MULT = 5


def _keyed_uniform(seed: int, stream: int, count: int, half_width: float) -> np.ndarray:
    """Uniform draws on [-half_width, half_width], one Philox key per index.

    The value for index k depends only on (seed, stream, k), so a
    realization does not depend on assembly order.
    """
    out = np.empty(count)
    key = (int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream))
    for k in range(count):
        gen = np.random.Generator(np.random.Philox(key=np.array(key, dtype=np.uint64), counter=k))
        out[k] = gen.random()
    return (2.0 * out - 1.0) * half_width


def apply_disorder(spec: LatticeSpec1D, cfg: DisorderConfig):
    """Draw one disorder realization.

    Returns a new :class:`LatticeSpec1D` for multiplicative hopping
    disorder, otherwise a real symmetric ``n_sites x n_sites`` matrix to be
    passed as ``perturbation`` to the builders.  Additive hopping disorder
    touches both directions of a bond equally, so delta is preserved.
    """
    cfg = cfg if isinstance(cfg, DisorderConfig) else DisorderConfig(**cfg)
    size = spec.n_sites
    half = cfg.strength / 2.0
    if cfg.kind is DisorderKind.MULTIPLICATIVE:
        if cfg.strength == 0:
            return spec
        w = _keyed_uniform(cfg.seed, _STREAM_T_MULT, spec.t_bar.size, half)
        v = _keyed_uniform(cfg.seed, _STREAM_L_MULT, spec.lambda_bar.size, half)
        return spec.with_hoppings(spec.t_bar * (1.0 + w), spec.lambda_bar * (1.0 + v))
    delta_h = np.zeros((size, size))
    if cfg.kind is DisorderKind.ONSITE:
        delta_h[np.diag_indices(size)] = _keyed_uniform(cfg.seed, _STREAM_ONSITE, size, half)
        return delta_h
    # additive hopping disorder: W_1 on intracell bonds, W_2 on intercell bonds
    intra = np.arange(0, size - 1, 2)
    inter = np.arange(1, size - 1, 2)
    w1 = _keyed_uniform(cfg.seed, _STREAM_INTRA, intra.size, half)
    w2 = _keyed_uniform(cfg.seed, _STREAM_INTER, inter.size, half)
    delta_h[intra, intra + 1] = w1
    delta_h[intra + 1, intra] = w1
    delta_h[inter, inter + 1] = w2
    delta_h[inter + 1, inter] = w2
    return delta_h


# ---------------------------------------------------------------- 2D stacking


def bbh_sign_pattern(l_x: int, l_y: int) -> np.ndarray:
    """Signs of the y-bonds: -1 on every second column (odd 0-based x).

    Entry ``[y, x]`` belongs to the bond between rows y and y+1 in column x.
    """
    signs = np.ones((l_y - 1, l_x), dtype=int)
    signs[:, 1::2] = -1
    return signs


def _check_flux(signs: np.ndarray):
    neg = (signs < 0).astype(int)
    per_plaquette = neg[:, :-1] + neg[:, 1:]
    bad = np.argwhere(per_plaquette != 1)
    if bad.size:
        y, x = bad[0]
        raise ValueError(
            f"sign pattern needs exactly one negative y-bond per plaquette; "
            f"plaquette (x={x}, y={y}) has {per_plaquette[y, x]}"
        )


@dataclass(frozen=True)
class LatticeSpec2D:
    """Rows of identical interface chains coupled along y.

    Row y occupies flat sites y*l_x .. y*l_x + l_x - 1.  Bonds between rows
    y and y+1 carry u0 + gamma1 (|psi|^2 + |psi|^2) when y is even (0-based)
    and v0 otherwise, times the sign in ``sign_pattern``.
    """

    chain_spec: LatticeSpec1D
    l_x: int
    l_y: int
    u0: float
    v0: float
    gamma1: float = 0.0
    sign_pattern: np.ndarray = None

    def __post_init__(self):
        if isinstance(self.chain_spec, dict):
            object.__setattr__(self, "chain_spec", LatticeSpec1D.from_dict(self.chain_spec))
        if self.l_x != self.chain_spec.n_sites:
            raise ValueError("l_x must equal chain_spec.n_sites")
        if self.l_y < 2:
            raise ValueError("l_y must be at least 2")
        if self.gamma1 < 0:
            raise ValueError("gamma1 must be non-negative")
        signs = self.sign_pattern
        signs = bbh_sign_pattern(self.l_x, self.l_y) if signs is None else np.asarray(signs, dtype=int)
        if signs.shape != (self.l_y - 1, self.l_x):
            raise ValueError(f"sign_pattern must have shape {(self.l_y - 1, self.l_x)}")
        if not np.all(np.abs(signs) == 1):
            raise ValueError("sign_pattern entries must be +1 or -1")
        _check_flux(signs)
        object.__setattr__(self, "sign_pattern", signs)

    @property
    def n_sites(self) -> int:
        return self.l_x * self.l_y

    def site(self, x: int, y: int) -> int:
        return y * self.l_x + x

    def to_dict(self) -> dict:
        return {
            "chain_spec": self.chain_spec.to_dict(),
            "l_x": self.l_x,
            "l_y": self.l_y,
            "u0": self.u0,
            "v0": self.v0,
            "gamma1": self.gamma1,
            "sign_pattern": self.sign_pattern.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LatticeSpec2D":
        return cls(**data)


def chiral_a_mask_2d(spec: LatticeSpec2D) -> np.ndarray:
    """Sites whose x and y parities agree; H maps them only to the rest."""
    x = np.tile(np.arange(spec.l_x), spec.l_y)
    y = np.repeat(np.arange(spec.l_y), spec.l_x)
    return (x % 2) == (y % 2)


def bond_table_2d(spec: LatticeSpec2D) -> BondTable:
    rows = [bond_table_1d(spec.chain_spec, site_offset=y * spec.l_x, n_total=spec.n_sites) for y in range(spec.l_y)]
    parts = {k: [getattr(r, k) for r in rows] for k in ("i", "j", "h_ij", "h_ji", "g")}
    for y in range(spec.l_y - 1):
        x = np.arange(spec.l_x)
        s = spec.sign_pattern[y].astype(float)
        base = spec.u0 if y % 2 == 0 else spec.v0
        kerr = spec.gamma1 if y % 2 == 0 else 0.0
        parts["i"].append(y * spec.l_x + x)
        parts["j"].append((y + 1) * spec.l_x + x)
        parts["h_ij"].append(s * base)
        parts["h_ji"].append(s * base)
        parts["g"].append(s * kerr)
    return BondTable(
        n=spec.n_sites,
        i=np.concatenate(parts["i"]).astype(np.int64),
        j=np.concatenate(parts["j"]).astype(np.int64),
        h_ij=np.concatenate(parts["h_ij"]),
        h_ji=np.concatenate(parts["h_ji"]),
        g=np.concatenate(parts["g"]),
    )


def build_hamiltonian_2d(spec: LatticeSpec2D, state, perturbation=None) -> np.ndarray:
    psi = np.asarray(state)
    if psi.shape != (spec.n_sites,):
        raise ValueError(f"state length {psi.shape} does not match l_x*l_y={spec.n_sites}")
    return bond_table_2d(spec).matrix(psi, perturbation)


def bond_table(spec) -> BondTable:
    """Bond table for either a 1D or a 2D spec."""
    if isinstance(spec, LatticeSpec2D):
        return bond_table_2d(spec)
    return bond_table_1d(spec)


def export_matrix_csv(matrix, path) -> Path:
    """Write a dense matrix row-major with one "re,im" cell per entry."""
    path = Path(path)
    mat = np.asarray(matrix, dtype=complex)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        for row in mat:
            writer.writerow([f"{float(z.real)!r},{float(z.imag)!r}" for z in row])
    return path
