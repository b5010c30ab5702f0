"""Littlewood-Paley pieces, Besov/Triebel-Lizorkin norms, atomic synthesis,
sequence-space norms and eta-kernel convolutions on periodic grids."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.special import comb

from .atoms import AtomCandidate, AtomKind, build_dictionary, make_atom, TestFunctionDictionary
from .errors import InvalidInputError, PreconditionError
from .exponents import ExponentField
from .geometry import (Cube, CubeKind, CubeLattice, RasterDomain, build_lattice, classify_cube,
                       DEFAULT_B, DEFAULT_D)
from .grid import Grid, GridFunction, GridSequence
from .norms import DEFAULT_TOL, norm_lp_lq, norm_lq_lp
from .weights import WeightSequence

# --------------------------------------------------------------------------
# partition of unity


def smoothstep(t: np.ndarray, order: int = 7) -> np.ndarray:
    """Polynomial smoothstep ``S_N``: 0 for ``t <= 0``, 1 for ``t >= 1``,
    ``N`` continuous derivatives at both ends."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    acc = np.zeros_like(t)
    for k in range(order + 1):
        acc += comb(order + k, k, exact=True) * comb(2 * order + 1, order - k, exact=True) * (-t) ** k
    return t ** (order + 1) * acc


def phi0(r: np.ndarray, order: int = 7) -> np.ndarray:
    """Radial profile: 1 on ``r <= 1``, 0 on ``r >= 2``."""
    return 1.0 - smoothstep(np.asarray(r, dtype=float) - 1.0, order)


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    grid: Grid
    J: int
    order: int = 7

    def phi(self, j: int, r: Optional[np.ndarray] = None) -> np.ndarray:
        """``phi_j`` at radii ``r`` (default: the grid's frequency radii)."""
        if not 0 <= j <= self.J:
            raise InvalidInputError(f"level {j} outside 0..{self.J}")
        if r is None:
            return self._grid_phi(j)
        r = np.asarray(r, dtype=float)
        if j == 0:
            return phi0(r, self.order)
        return phi0(r * 2.0 ** (-j), self.order) - phi0(r * 2.0 ** (1 - j), self.order)

    def _grid_phi(self, j: int) -> np.ndarray:
        cache = self.__dict__.setdefault("_cache", {})
        if j not in cache:
            cache[j] = self.phi(j, self.grid.frequency_radius)
            cache[j].setflags(write=False)
        return cache[j]

    def total(self, r: Optional[np.ndarray] = None) -> np.ndarray:
        return sum(self.phi(j, r) for j in range(self.J + 1))


def build_partition(J: int, grid: Grid, order: int = 7) -> PartitionOfUnity:
    if J < 1:
        raise InvalidInputError("J must be >= 1")
    rmax = float(grid.frequency_radius.max())
    if 2.0 ** (J - 1) >= rmax:
        raise InvalidInputError(
            f"level {J} starts at |xi| = {2 ** (J - 1)}, beyond the grid's largest frequency {rmax:.4g}")
    return PartitionOfUnity(grid, J, order)


def default_levels(grid: Grid, cap: int = 7) -> int:
    """Largest ``J <= cap`` whose annuli all fit below the Nyquist frequency."""
    return max(1, min(cap, int(math.floor(math.log2(grid.nyquist))) - 1))


def lp_pieces(f: GridFunction, pou: PartitionOfUnity) -> GridSequence:
    """``(phi_j fhat)^vee`` for ``j = 0..J``."""
    if f.grid != pou.grid:
        raise InvalidInputError("function and partition live on different grids")
    fh = np.fft.fftn(f.values)
    real = np.isrealobj(f.values)
    out = []
    for j in range(pou.J + 1):
        piece = np.fft.ifftn(fh * pou.phi(j))
        out.append(GridFunction(piece.real if real else piece, f.grid))
    return GridSequence(out)


def weighted_pieces(f: GridFunction, w: WeightSequence, pou: PartitionOfUnity,
                    domain: Optional[RasterDomain] = None) -> GridSequence:
    pts = f.grid.points
    mask = None if domain is None else domain.contains(pts)
    out = []
    for j, piece in enumerate(lp_pieces(f, pou)):
        v = w(j, pts) * piece.values
        if mask is not None:
            v = np.where(mask, v, 0.0)
        out.append(GridFunction(v, f.grid))
    return GridSequence(out)


def besov_norm(f: GridFunction, p: ExponentField, q: ExponentField, w: WeightSequence,
               pou: PartitionOfUnity, domain: Optional[RasterDomain] = None,
               tol: float = DEFAULT_TOL) -> float:
    """``|| (w_j (phi_j fhat)^vee)_j | l_q(L_p) ||``, truncated at level ``J``.

    With a domain, the norm is taken over the domain only; for an atom sum this
    is the zero-extension candidate, an upper bound for the restriction norm.
    """
    if f.is_zero():
        return 0.0
    return norm_lq_lp(weighted_pieces(f, w, pou, domain), p, q, tol)


def _require_bounded(p: ExponentField, q: ExponentField) -> None:
    if not (p.is_bounded and q.is_bounded):
        raise PreconditionError("the F scale needs p+ and q+ finite")


def triebel_norm(f: GridFunction, p: ExponentField, q: ExponentField, w: WeightSequence,
                 pou: PartitionOfUnity, domain: Optional[RasterDomain] = None,
                 tol: float = DEFAULT_TOL) -> float:
    """``|| (w_j (phi_j fhat)^vee)_j | L_p(l_q) ||``."""
    _require_bounded(p, q)
    if f.is_zero():
        return 0.0
    return norm_lp_lq(weighted_pieces(f, w, pou, domain), p, q, tol)


# --------------------------------------------------------------------------
# coefficient sequences


Key = tuple  # (level, m)


@dataclass(eq=False)
class CoefficientSequence:
    """Sparse coefficients ``lambda_{nu,m}``.

    ``centers`` optionally records shifted cube centres; otherwise
    ``2**-nu m`` is used. With a ``domain`` every key must sit at an interior
    or boundary cube.
    """

    entries: dict
    b: float = DEFAULT_B
    d: float = DEFAULT_D
    domain: Optional[RasterDomain] = None
    centers: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (nu, m), v in self.entries.items():
            key = (int(nu), tuple(int(i) for i in np.atleast_1d(m)))
            if key[0] < 0:
                raise InvalidInputError("levels start at 0")
            clean[key] = complex(v) if np.iscomplexobj(v) else float(v)
        self.entries = clean
        if self.domain is not None:
            for nu, m in self.entries:
                kind = classify_cube(self.domain, nu, m, self.d)
                if kind not in (CubeKind.INTERIOR, CubeKind.BOUNDARY):
                    raise InvalidInputError(f"key {(nu, m)} is an exterior cube of the domain")

    @property
    def n(self) -> Optional[int]:
        for _, m in self.entries:
            return len(m)
        return None

    @property
    def max_level(self) -> int:
        return max((nu for nu, _ in self.entries), default=-1)

    def center(self, key: Key) -> np.ndarray:
        if key in self.centers:
            return np.asarray(self.centers[key], dtype=float)
        nu, m = key
        return np.asarray(m, dtype=float) * 2.0 ** (-nu)

    def scaled(self, c) -> "CoefficientSequence":
        return CoefficientSequence({k: c * v for k, v in self.entries.items()}, self.b, self.d,
                                   self.domain, dict(self.centers))

    def __add__(self, other: "CoefficientSequence") -> "CoefficientSequence":
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out.get(k, 0.0) + v
        return CoefficientSequence(out, self.b, self.d, self.domain, {**other.centers, **self.centers})

    def __len__(self):
        return len(self.entries)


def random_sequence(rng: np.random.Generator, nu_max: int, grid: Grid, d: float = DEFAULT_D,
                    sparsity: float = 0.1, magnitude=(1e-2, 1e2), lattices: Optional[Mapping] = None,
                    ensure_nonempty: bool = True) -> CoefficientSequence:
    """Random sparse coefficients on cubes whose dilates fit in the grid box.

    Magnitudes are log-uniform in ``magnitude`` with random signs. With
    ``lattices`` (level -> classified CubeLattice) only interior and boundary
    cubes are used and their shifted centres are recorded.
    """
    lo, hi = math.log(magnitude[0]), math.log(magnitude[1])
    entries, centers = {}, {}
    domain = None
    pools = {}
    for nu in range(nu_max + 1):
        if lattices is not None:
            lat = lattices[nu]
            pools[nu] = [(m, lat.cube(m).center) for m in lat.indices([CubeKind.INTERIOR, CubeKind.BOUNDARY])]
        else:
            pools[nu] = [(m, None) for m in atom_window(grid, nu, d)]
    for nu, cand in pools.items():
        if not cand:
            continue
        pick = rng.uniform(size=len(cand)) < sparsity
        for (m, c), chosen in zip(cand, pick):
            if chosen:
                entries[(nu, m)] = math.exp(rng.uniform(lo, hi)) * (1 if rng.uniform() < 0.5 else -1)
                if c is not None:
                    centers[(nu, m)] = c
    if ensure_nonempty and not entries:
        levels = [nu for nu, cand in pools.items() if cand]
        if not levels:
            raise InvalidInputError("no admissible cubes at any level")
        nu = levels[int(rng.integers(0, len(levels)))]
        m, c = pools[nu][int(rng.integers(0, len(pools[nu])))]
        entries[(nu, m)] = math.exp(rng.uniform(lo, hi))
        if c is not None:
            centers[(nu, m)] = c
    if lattices is not None:
        domain = _lattice_domain(lattices)
    return CoefficientSequence(entries, d=d, centers=centers, domain=domain)


def _lattice_domain(lattices: Mapping) -> Optional[RasterDomain]:
    return getattr(lattices, "domain", None)


class DomainLattices(dict):
    """``level -> CubeLattice`` for one domain, with the domain attached."""

    def __init__(self, domain: RasterDomain, nu_max: int, b: float = DEFAULT_B, d: float = DEFAULT_D):
        super().__init__({nu: build_lattice(nu, b, d, domain=domain) for nu in range(nu_max + 1)})
        self.domain = domain
        self.b, self.d = b, d


def atom_window(grid: Grid, level: int, d: float = DEFAULT_D) -> list[tuple]:
    """Indices ``m`` whose cube ``d Q_{level,m}`` (unshifted) lies inside the grid box."""
    side = 2.0 ** (-level)
    reach = grid.half_width - d * side / 2
    k = int(math.floor(reach / side + 1e-12))
    if k < 0:
        return []
    rng = range(-k, k + 1)
    return [tuple(m) for m in itertools.product(rng, repeat=grid.n)]


# --------------------------------------------------------------------------
# synthesis


class AtomFactory:
    """Builds and caches normalized reference atoms for ``(level, m)``.

    Without a domain atoms are global; with one, interior or boundary atoms
    are produced according to the lattice classification, centred at the
    lattice's (snapped) centres.
    """

    def __init__(self, grid: Grid, K: float, L: float, d: float = DEFAULT_D,
                 lattices: Optional[DomainLattices] = None):
        self.grid, self.K, self.L, self.d = grid, float(K), float(L), float(d)
        self.lattices = lattices
        self.dictionary: Optional[TestFunctionDictionary] = build_dictionary(grid, L) if L > 0 else None
        self._cache: dict = {}

    @property
    def domain(self) -> Optional[RasterDomain]:
        return None if self.lattices is None else self.lattices.domain

    def __call__(self, level: int, m: tuple) -> AtomCandidate:
        key = (level, tuple(m))
        if key not in self._cache:
            self._cache[key] = self._build(level, tuple(m))
        return self._cache[key]

    def _build(self, level: int, m: tuple) -> AtomCandidate:
        side = 2.0 ** (-level)
        if self.lattices is None:
            center = tuple(float(v) * side for v in m)
            kind = AtomKind.GLOBAL
        else:
            lat = self.lattices[level]
            if not lat.has(m):
                raise InvalidInputError(f"key {(level, m)} outside the lattice window")
            kind_c = lat.kind(m)
            if kind_c not in (CubeKind.INTERIOR, CubeKind.BOUNDARY):
                raise InvalidInputError(f"key {(level, m)} is not an interior or boundary cube")
            kind = AtomKind(kind_c.value)
            center = lat.cube(m).center
        reach = max(abs(c) for c in center) + self.d * side / 2
        if reach > self.grid.half_width * (1 + 1e-12):
            raise InvalidInputError(f"atom {(level, m)} does not fit in the grid box")
        cube = Cube(level, m, center)
        return make_atom(cube, self.K, self.L, kind, self.grid, self.d, self.domain, self.dictionary)


def synthesize(lam: CoefficientSequence, atom_factory: Callable[[int, tuple], Union[AtomCandidate, GridFunction]],
               nu_max: int, grid: Grid) -> GridFunction:
    """``sum lambda_{nu,m} a_{nu,m}`` sampled on ``grid``."""
    if lam.max_level > nu_max:
        raise InvalidInputError(f"coefficient at level {lam.max_level} exceeds nu_max = {nu_max}")
    out = np.zeros(grid.shape, dtype=complex if any(isinstance(v, complex) for v in lam.entries.values())
                   else float)
    for (nu, m), v in sorted(lam.entries.items()):
        a = atom_factory(nu, m)
        vals = a.values if isinstance(a, GridFunction) else a.values
        if vals.grid != grid:
            raise InvalidInputError("atom lives on another grid")
        out += v * vals.values
    return GridFunction(out, grid)


# --------------------------------------------------------------------------
# sequence-space norms


class Scale(str, enum.Enum):
    B = "B"
    F = "F"


def _cube_slices(grid: Grid, center: np.ndarray, side: float) -> tuple:
    """Index slices of the grid points in the half-open cube ``[c - s/2, c + s/2)``."""
    h, T = grid.spacing, grid.half_width
    out = []
    for c in center:
        lo = math.ceil((c - side / 2 + T) / h - 0.5 - 1e-9)
        hi = math.ceil((c + side / 2 + T) / h - 0.5 - 1e-9)
        out.append(slice(max(lo, 0), max(min(hi, grid.size), 0)))
    return tuple(out)


def left_half(grid: Grid, center: np.ndarray, side: float) -> tuple:
    """The subset ``E`` of the cube with ``x_1`` below the centre: ``|E| = |Q| / 2``."""
    sl = list(_cube_slices(grid, center, side))
    h, T = grid.spacing, grid.half_width
    mid = math.ceil((center[0] + T) / h - 0.5 - 1e-9)
    sl[0] = slice(sl[0].start, max(min(mid, sl[0].stop), sl[0].start))
    return tuple(sl)


SUBSETS = {"left_half": left_half}


def step_functions(lam: CoefficientSequence, w: WeightSequence, grid: Grid, nu_max: Optional[int] = None,
                   subset: Optional[Union[str, Callable]] = None,
                   domain: Optional[RasterDomain] = None) -> GridSequence:
    """Per level: ``sum_m |lambda_{nu,m}| w_nu(2**-nu m) chi_{nu,m}``.

    ``subset`` replaces each cube by a subset ``E_{nu,m}`` (e.g. ``"left_half"``).
    """
    nu_max = lam.max_level if nu_max is None else nu_max
    if nu_max < 0:
        nu_max = 0
    if isinstance(subset, str):
        if subset not in SUBSETS:
            raise InvalidInputError(f"unknown subset {subset!r}")
        subset = SUBSETS[subset]
    region = _cube_slices if subset is None else subset
    levels = [np.zeros(grid.shape) for _ in range(nu_max + 1)]
    for (nu, m), v in lam.entries.items():
        if nu > nu_max:
            raise InvalidInputError(f"coefficient at level {nu} exceeds nu_max = {nu_max}")
        side = 2.0 ** (-nu)
        anchor = np.asarray(m, dtype=float) * side
        wv = float(w(nu, anchor.reshape(1, -1))[0])
        levels[nu][region(grid, lam.center((nu, m)), side)] += abs(v) * wv
    if domain is not None:
        mask = domain.contains(grid.points)
        levels = [np.where(mask, g, 0.0) for g in levels]
    return GridSequence([GridFunction(g, grid) for g in levels])


def sequence_norm(lam: CoefficientSequence, w: WeightSequence, p: ExponentField, q: ExponentField,
                  scale: Union[Scale, str], grid: Grid, domain: Optional[RasterDomain] = None,
                  subset=None, nu_max: Optional[int] = None, tol: float = DEFAULT_TOL) -> float:
    """``b``- or ``f``-norm of ``lam``; with ``domain``, integration over the domain only."""
    scale = Scale(scale)
    if scale is Scale.F:
        _require_bounded(p, q)
    if not lam.entries:
        return 0.0
    seq = step_functions(lam, w, grid, nu_max, subset, domain)
    if scale is Scale.B:
        return norm_lq_lp(seq, p, q, tol)
    return norm_lp_lq(seq, p, q, tol)


# --------------------------------------------------------------------------
# eta kernels


def _periodic_offsets(grid: Grid) -> np.ndarray:
    """Minimal-image offsets of the grid points from the origin cell, per axis."""
    k = np.arange(grid.size)
    k = np.where(k <= grid.size // 2, k, k - grid.size)
    return k * grid.spacing


def _eta_cell_average_1d(x: np.ndarray, h: float, level: int, R: float) -> np.ndarray:
    """Exact mean of ``2**nu / (1 + 2**nu |y|)**R`` over ``[x - h/2, x + h/2]``."""
    s = 2.0 ** level

    def prim(y):
        # antiderivative of 2^nu (1 + 2^nu |y|)^-R, odd in y
        return np.sign(y) * (1.0 - (1.0 + s * np.abs(y)) ** (1.0 - R)) / (R - 1.0)

    return (prim(x + h / 2) - prim(x - h / 2)) / h


def eta_kernel(grid: Grid, level: int, R: float, quadrature: bool = True, subsamples: int = 4) -> np.ndarray:
    """``eta_{nu,R}`` on the periodic grid (offsets from the origin).

    With ``quadrature`` each sample is the kernel's mean over its cell: exact
    in one dimension, a ``subsamples**n`` midpoint rule otherwise.
    """
    if not R > grid.n:
        raise PreconditionError(f"eta kernels need R > n = {grid.n}")
    s = 2.0 ** level
    off = _periodic_offsets(grid)
    h = grid.spacing
    if not quadrature:
        mesh = np.meshgrid(*([off] * grid.n), indexing="ij")
        r = np.sqrt(sum(m * m for m in mesh))
        return s ** grid.n / (1 + s * r) ** R
    if grid.n == 1:
        if R == 1:
            raise PreconditionError("R must exceed 1")
        return _eta_cell_average_1d(off, h, level, R)
    sub = (np.arange(subsamples) + 0.5) / subsamples * h - h / 2
    acc = np.zeros(grid.shape)
    mesh = np.meshgrid(*([off] * grid.n), indexing="ij")
    for shift in itertools.product(sub, repeat=grid.n):
        r = np.sqrt(sum((m + d) ** 2 for m, d in zip(mesh, shift)))
        acc += s ** grid.n / (1 + s * r) ** R
    return acc / subsamples ** grid.n


def eta_convolve(seq: GridSequence, R: float, levels: Optional[Sequence[int]] = None) -> GridSequence:
    """``(eta_{nu,R} * f_nu)_nu`` by periodic FFT convolution; entry ``i`` uses level
    ``levels[i]`` (default ``i``)."""
    grid = seq.grid
    if not R > grid.n:
        raise PreconditionError(f"eta kernels need R > n = {grid.n}")
    levels = list(range(len(seq))) if levels is None else list(levels)
    if len(levels) != len(seq):
        raise InvalidInputError("one level per sequence entry")
    out = []
    for nu, f in zip(levels, seq):
        if f.is_zero():
            out.append(GridFunction(np.zeros(grid.shape), grid))
            continue
        ker = eta_kernel(grid, nu, R)
        conv = np.fft.ifftn(np.fft.fftn(f.values) * np.fft.fftn(ker)) * grid.cell_volume
        out.append(GridFunction(conv.real if np.isrealobj(f.values) else conv, grid))
    return GridSequence(out)
