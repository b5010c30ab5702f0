"""Hoelder norms on grids and non-smooth [K, L]-atoms: construction and checks."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, InvalidInputError, PreconditionError
from .geometry import Cube, CubeKind, RasterDomain, classify_cube, DEFAULT_D
from .grid import Grid, GridFunction

R0 = 8
N_RANDOM = 10_000
SUPPORT_FRACTION = 0.9


@dataclass(frozen=True)
class HolderIndex:
    s: float
    floor_minus: int
    frac_plus: float


def holder_decompose(s: float) -> HolderIndex:
    """``s = floor_minus + frac_plus`` with ``frac_plus`` in ``(0, 1]``."""
    if not s > 0:
        raise InvalidInputError("Hoelder index must be positive (s = 0 means the sup norm)")
    fl = math.floor(s)
    if fl == s:
        fl -= 1
    # exact for binary floats: s - fl is computed without rounding for |fl| small
    frac = float(Fraction(s) - fl)
    return HolderIndex(float(s), int(fl), frac)


def multi_indices(n: int, order: int) -> list[tuple]:
    return [a for a in itertools.product(range(order + 1), repeat=n) if sum(a) == order]


# --------------------------------------------------------------------------
# finite differences


def _shift(mask: np.ndarray, axis: int, k: int) -> np.ndarray:
    """``out[i] = mask[i + k]`` along ``axis``; False beyond the edge."""
    out = np.zeros_like(mask)
    n = mask.shape[axis]
    src = [slice(None)] * mask.ndim
    dst = [slice(None)] * mask.ndim
    if k >= 0:
        src[axis], dst[axis] = slice(k, n), slice(0, n - k)
    else:
        src[axis], dst[axis] = slice(0, n + k), slice(-k, n)
    out[tuple(dst)] = mask[tuple(src)]
    return out


def masked_derivative(values: np.ndarray, mask: np.ndarray, axis: int, h: float) -> np.ndarray:
    """First derivative along ``axis`` on ``mask``: central differences inside,
    second-order one-sided stencils next to the mask edge."""
    v = np.where(mask, values, 0.0)
    sv = {k: _shift(v, axis, k) for k in (-2, -1, 1, 2)}
    sm = {k: _shift(mask, axis, k) for k in (-2, -1, 1, 2)}
    out = np.full(values.shape, np.nan)
    central = mask & sm[1] & sm[-1]
    fwd = mask & ~central & sm[1] & sm[2]
    bwd = mask & ~central & ~fwd & sm[-1] & sm[-2]
    fwd1 = mask & ~central & ~fwd & ~bwd & sm[1]
    bwd1 = mask & ~central & ~fwd & ~bwd & ~fwd1 & sm[-1]
    out[central] = ((sv[1] - sv[-1]) / (2 * h))[central]
    out[fwd] = ((-3 * v + 4 * sv[1] - sv[2]) / (2 * h))[fwd]
    out[bwd] = ((3 * v - 4 * sv[-1] + sv[-2]) / (2 * h))[bwd]
    out[fwd1] = ((sv[1] - v) / h)[fwd1]
    out[bwd1] = ((v - sv[-1]) / h)[bwd1]
    if np.any(mask & np.isnan(out)):
        raise DataError("region too thin for the difference stencil")
    return out


def derivative(values: np.ndarray, mask: np.ndarray, alpha: Sequence[int], h: float) -> np.ndarray:
    out = values.astype(float)
    for axis, order in enumerate(alpha):
        for _ in range(order):
            out = masked_derivative(out, mask, axis, h)
    return out


# --------------------------------------------------------------------------
# Hoelder norms


def _near_offsets(n: int, r0: int) -> list[tuple]:
    """Half of the nonzero offsets in ``[-r0, r0]^n`` (one of each +-pair)."""
    out = []
    for o in itertools.product(range(-r0, r0 + 1), repeat=n):
        if any(o) and o > tuple(-v for v in o):
            out.append(o)
    return out


def _pair_slices(shape: tuple, off: tuple):
    a, b = [], []
    for size, o in zip(shape, off):
        if o >= 0:
            a.append(slice(0, size - o))
            b.append(slice(o, size))
        else:
            a.append(slice(-o, size))
            b.append(slice(0, size + o))
    return tuple(a), tuple(b)


def holder_seminorm_values(g: np.ndarray, mask: np.ndarray, h: float, sigma: float,
                           r0: int = R0, n_random: int = N_RANDOM, seed: int = 0) -> float:
    """``sup |g(x) - g(y)| / |x - y|**sigma`` over near pairs and random pairs in ``mask``."""
    best = 0.0
    for off in _near_offsets(g.ndim, r0):
        sa, sb = _pair_slices(g.shape, off)
        ok = mask[sa] & mask[sb]
        if not ok.any():
            continue
        dist = h * math.sqrt(sum(o * o for o in off))
        diff = np.abs(g[sa] - g[sb])[ok]
        best = max(best, float(diff.max()) / dist ** sigma)
    idx = np.argwhere(mask)
    if n_random > 0 and len(idx) > 1:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, len(idx), n_random)
        k = rng.integers(0, len(idx), n_random)
        keep = i != k
        xi, xk = idx[i[keep]], idx[k[keep]]
        dist = h * np.linalg.norm(xi - xk, axis=-1)
        diff = np.abs(g[tuple(xi.T)] - g[tuple(xk.T)])
        if diff.size:
            best = max(best, float(np.max(diff / dist ** sigma)))
    return best


def holder_norm_values(values: np.ndarray, h: float, s: float, mask: Optional[np.ndarray] = None,
                       r0: int = R0, n_random: int = N_RANDOM, seed: int = 0,
                       check_resolution: bool = True) -> float:
    """Hoelder norm of samples with spacing ``h``; ``s = 0`` gives the sup norm."""
    values = np.asarray(values)
    if mask is None:
        mask = np.ones(values.shape, dtype=bool)
    if not mask.any():
        raise DataError("empty region")
    if s == 0:
        return float(np.max(np.abs(values[mask])))
    idx = holder_decompose(s)
    k, sigma = idx.floor_minus, idx.frac_plus
    if check_resolution and 1.0 / h < 2 ** (k + 3) * (1 - 1e-12):
        raise PreconditionError(
            f"{1.0 / h:g} points per unit; order {k} differences need {2 ** (k + 3)}")
    total = 0.0
    top = []
    for order in range(k + 1):
        for alpha in multi_indices(values.ndim, order):
            d = derivative(values, mask, alpha, h)
            total += float(np.max(np.abs(d[mask])))
            if order == k:
                top.append(d)
    for d in top:
        total += holder_seminorm_values(np.where(mask, d, 0.0), mask, h, sigma, r0, n_random, seed)
    return total


def region_mask(grid: Grid, region: Optional[RasterDomain], scale: float = 1.0) -> Optional[np.ndarray]:
    """Grid points in the closure of ``region`` (given in coordinates ``x / scale``)."""
    if region is None:
        return None
    return region.closure_contains(grid.points / scale)


def holder_norm(f: GridFunction, s: float, region: Optional[RasterDomain] = None,
                spacing: Optional[float] = None, r0: int = R0, n_random: int = N_RANDOM,
                seed: int = 0) -> float:
    """Hoelder norm of ``f`` over the grid, or over the closure of ``region``.

    ``spacing`` overrides the grid spacing, which evaluates the norm of a
    dilated copy ``f(t .)`` with ``spacing = t * h``.
    """
    h = f.grid.spacing if spacing is None else float(spacing)
    mask = region_mask(f.grid, region)
    return holder_norm_values(np.real_if_close(f.values), h, s, mask, r0, n_random, seed)


# --------------------------------------------------------------------------
# test functions for condition (iii)


@dataclass(eq=False)
class TestFunctionDictionary:
    __test__ = False  # not a pytest class

    grid: Grid
    L: float
    names: list
    functions: list
    norms: list

    def __len__(self):
        return len(self.functions)


def build_dictionary(grid: Grid, L: float, n_bumps: int = 4, frequencies: Sequence[float] = (1.0, 3.0, 7.0),
                     seed: int = 0) -> TestFunctionDictionary:
    """Polynomials up to degree ``ceil(L)``, shifted bumps and plane waves, with
    their ``C^L`` norms on the grid."""
    if L < 0:
        raise InvalidInputError("L must be >= 0")
    x = grid.points
    T = grid.half_width
    rng = np.random.default_rng(seed)
    names, funcs = [], []
    deg = max(1, math.ceil(L))
    for total in range(deg + 1):
        for alpha in multi_indices(grid.n, total):
            names.append(f"poly{alpha}")
            funcs.append(np.prod([(x[..., i] / T) ** a for i, a in enumerate(alpha)], axis=0))
    for b in range(n_bumps):
        c = rng.uniform(-T / 2, T / 2, grid.n)
        w = T / 4 * 2.0 ** (-b)
        r2 = np.sum((x - c) ** 2, axis=-1) / w ** 2
        with np.errstate(divide="ignore", over="ignore"):
            names.append(f"bump{b}")
            funcs.append(np.where(r2 < 1, np.exp(1 - 1 / (1 - np.minimum(r2, 1 - 1e-300))), 0.0))
    for om in frequencies:
        direction = rng.normal(size=grid.n)
        direction /= np.linalg.norm(direction)
        phase = x @ direction * om
        names.append(f"cos{om:g}")
        funcs.append(np.cos(phase))
    h = grid.spacing
    norms = [holder_norm_values(f, h, L) if L > 0 else float(np.max(np.abs(f))) for f in funcs]
    return TestFunctionDictionary(grid, float(L), names, funcs, norms)


# --------------------------------------------------------------------------
# atoms


class AtomKind(str, enum.Enum):
    GLOBAL = "global"
    INTERIOR = "interior"
    BOUNDARY = "boundary"


@dataclass(eq=False)
class AtomCandidate:
    values: GridFunction
    cube: Cube
    kind: AtomKind
    K: float
    L: float
    c_budget: float = 1.0
    d: float = DEFAULT_D

    def __post_init__(self):
        self.kind = AtomKind(self.kind)
        if self.K < 0 or self.L < 0:
            raise InvalidInputError("K and L must be >= 0")
        if not self.c_budget > 0:
            raise InvalidInputError("c_budget must be positive")


@dataclass(frozen=True)
class AtomReport:
    cond_i: bool
    cond_ii: bool
    cond_iii: Optional[bool]
    c_ii: float
    c_iii: Optional[float]
    worst_test_function: Optional[str]
    c_budget: float

    @property
    def passed(self) -> bool:
        return self.cond_i and self.cond_ii and self.cond_iii is not False

    @property
    def failed_condition(self) -> Optional[str]:
        for name, ok in (("i", self.cond_i), ("ii", self.cond_ii), ("iii", self.cond_iii)):
            if ok is False:
                return name
        return None

    def to_dict(self) -> dict:
        return {"cond_i": self.cond_i, "cond_ii": self.cond_ii, "cond_iii": self.cond_iii,
                "c_ii": self.c_ii, "c_iii": self.c_iii, "worst_test_function": self.worst_test_function,
                "c_budget": self.c_budget, "passed": self.passed}


def _crop(values: np.ndarray, mask: Optional[np.ndarray], margin: int):
    """Bounding box of the support plus ``margin`` cells."""
    nz = np.argwhere(values != 0)
    if nz.size == 0:
        return values, mask
    lo = np.maximum(nz.min(axis=0) - margin, 0)
    hi = np.minimum(nz.max(axis=0) + margin + 1, values.shape)
    sl = tuple(slice(a, b) for a, b in zip(lo, hi))
    return values[sl], (None if mask is None else mask[sl])


def _dilated_norm(values: np.ndarray, grid: Grid, level: int, K: float, mask: Optional[np.ndarray],
                  seed: int = 0) -> float:
    """Norm of ``a(2**-level .)`` in ``C^K``: same samples, spacing ``2**level h``.

    Evaluated on the support's bounding box padded by ``R0 + 2`` cells; outside
    it the atom vanishes.
    """
    v, m = _crop(np.real_if_close(values), mask, R0 + 2)
    return holder_norm_values(v, grid.spacing * 2.0 ** level, K, m, seed=seed)


def _moment_ratios(values: np.ndarray, grid: Grid, level: int, L: float,
                   dictionary: TestFunctionDictionary) -> tuple[float, str]:
    """Largest ``|int psi a| / (2**(-level (L + n)) ||psi | C^L||)`` over the dictionary."""
    scale = 2.0 ** (-level * (L + grid.n))
    cell = grid.cell_volume
    worst, name = 0.0, None
    for nm, psi, nrm in zip(dictionary.names, dictionary.functions, dictionary.norms):
        prod = psi * values
        integral = abs(np.sum(prod)) * cell
        noise = 64 * np.finfo(float).eps * np.sum(np.abs(prod)) * cell
        r = max(integral - noise, 0.0) / (scale * nrm)
        if name is None or r > worst:
            worst, name = float(r), nm
    return worst, name


def validate_atom(a: AtomCandidate, dictionary: Optional[TestFunctionDictionary] = None,
                  domain: Optional[RasterDomain] = None, rtol: float = 1e-9) -> AtomReport:
    """Check conditions (i) support, (ii) dilated ``C^K`` size, (iii) moments.

    Condition (iii) is a semi-decision over a finite dictionary and is skipped
    for boundary atoms and for ``L = 0``.
    """
    grid = a.values.grid
    cube = a.cube
    vals = a.values.values
    if a.kind is not AtomKind.GLOBAL:
        if domain is None:
            raise PreconditionError(f"{a.kind.value} atoms need a domain")
        actual = classify_cube(domain, cube.level, cube.m, a.d)
        if actual.value != a.kind.value:
            raise PreconditionError(f"cube {cube.m} at level {cube.level} is {actual.value}, "
                                    f"not {a.kind.value}")
        if a.kind is AtomKind.BOUNDARY:
            dist, _ = domain.nearest_boundary(np.asarray(cube.center))
            if dist > domain.pixel * 1e-9:
                raise PreconditionError(f"boundary cube {cube.m} is not centred on the boundary")

    pts = grid.points
    support = vals != 0
    inside = cube.contains(pts, a.d)
    if a.kind is AtomKind.BOUNDARY:
        inside &= domain.closure_contains(pts)
    cond_i = bool(np.all(inside[support]))

    mask = None if a.kind is AtomKind.GLOBAL else domain.closure_contains(pts)
    c_ii = _dilated_norm(vals, grid, cube.level, a.K, mask)
    cond_ii = c_ii <= a.c_budget * (1 + rtol)

    cond_iii, c_iii, worst = None, None, None
    if a.kind is not AtomKind.BOUNDARY and a.L > 0:
        if dictionary is None:
            dictionary = build_dictionary(grid, a.L)
        if dictionary.grid != grid or dictionary.L != a.L:
            raise InvalidInputError("dictionary was built for another grid or L")
        c_iii, worst = _moment_ratios(np.real_if_close(vals), grid, cube.level, a.L, dictionary)
        cond_iii = bool(c_iii <= a.c_budget * (1 + rtol))
    return AtomReport(cond_i, bool(cond_ii), cond_iii, c_ii, c_iii, worst, a.c_budget)


def _bump_1d(t: np.ndarray, radius: float) -> np.ndarray:
    u = (t / radius) ** 2
    out = np.zeros_like(t)
    inside = u < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside]))
    return out


def _orthogonal_factor(t: np.ndarray, weight: np.ndarray, degree: int) -> np.ndarray:
    """Monic polynomial of the given degree orthogonal to all lower powers in
    the discrete inner product ``sum(weight * p * q)``."""
    V = np.vander(t, degree + 1, increasing=True)
    gram = V[:, :degree].T @ (weight[:, None] * V[:, :degree])
    rhs = V[:, :degree].T @ (weight * V[:, degree])
    coef = np.linalg.solve(gram, -rhs)
    return V[:, degree] + V[:, :degree] @ coef


def atom_profile(grid: Grid, level: int, center: Sequence[float], L: float, d: float = DEFAULT_D,
                 moments: bool = True) -> np.ndarray:
    """Unnormalized tensor-product bump on ``d Q``, times a polynomial per axis
    that kills the first ``floor(L) + 1`` moments when ``L > 0``."""
    radius = SUPPORT_FRACTION * d / 2
    factors = []
    for i in range(grid.n):
        t = (grid.axis - center[i]) * 2.0 ** level
        b = _bump_1d(t, radius)
        if not b.any():
            raise PreconditionError(f"cube at level {level} falls between grid points")
        if moments and L > 0:
            deg = math.floor(L) + 1
            if np.count_nonzero(b) <= deg:
                raise PreconditionError(f"too few grid points under the atom for {deg} moments")
            b = b * _orthogonal_factor(t, b, deg)
        factors.append(b)
    out = factors[0]
    for f in factors[1:]:
        out = np.multiply.outer(out, f)
    return out


def make_atom(cube: Cube, K: float, L: float, kind: AtomKind = AtomKind.GLOBAL, grid: Optional[Grid] = None,
              d: float = DEFAULT_D, domain: Optional[RasterDomain] = None,
              dictionary: Optional[TestFunctionDictionary] = None, moments: bool = True) -> AtomCandidate:
    """Reference atom normalized so that ``validate_atom`` passes with ``c = 1``."""
    kind = AtomKind(kind)
    if grid is None:
        reach = max(abs(c) for c in cube.center) + d * cube.side
        half = 2.0 ** math.ceil(math.log2(reach))
        grid = Grid(cube.n, 10 if cube.n == 1 else 7, half)
    if kind is not AtomKind.GLOBAL and domain is None:
        raise PreconditionError(f"{kind.value} atoms need a domain")
    raw = atom_profile(grid, cube.level, cube.center, L, d, moments)
    if kind is AtomKind.BOUNDARY:
        raw = np.where(domain.closure_contains(grid.points), raw, 0.0)
    local = normalization_grid(grid, cube.level, K, d)
    if local is None:
        c = _normalization(raw, grid, cube, K, L, kind, domain, dictionary, moments, np.zeros(grid.n))
    else:
        # the dilated profile does not depend on the level, so its size is
        # measured on a refined grid around the cube and the coarse samples
        # are scaled by the same constant
        if kind is AtomKind.BOUNDARY:
            shift = np.asarray(cube.center, dtype=float)
            fine = atom_profile(local, cube.level, (0.0,) * cube.n, L, d, moments)
            fine = np.where(domain.closure_contains(local.points + shift), fine, 0.0)
            c = _normalization(fine, local, cube, K, L, kind, domain, None, moments, shift)
        else:
            c = _refined_constant(local, cube.level, float(K), float(L), float(d), moments)
    if not c > 0:
        raise DataError("degenerate atom profile")
    return AtomCandidate(GridFunction(raw / c, grid), cube, kind, K, L, 1.0, d)


def normalization_grid(grid: Grid, level: int, K: float, d: float = DEFAULT_D) -> Optional[Grid]:
    """Refined grid centred on the origin when ``grid`` is too coarse for the
    dilated ``C^K`` norm at ``level``; ``None`` otherwise."""
    k = holder_decompose(K).floor_minus if K > 0 else 0
    need = 2 ** (k + 3)
    if 1.0 / (grid.spacing * 2.0 ** level) >= need * (1 - 1e-12):
        return None
    side = 2.0 ** (-level)
    # support radius d/2 sides, plus room for the crop margin; 4x the minimum density
    size = 2 ** math.ceil(math.log2(4 * need * 2 * d))
    return Grid(grid.n, int(math.log2(size)), d * side)


@lru_cache(maxsize=256)
def _refined_constant(local: Grid, level: int, K: float, L: float, d: float, moments: bool) -> float:
    """Translation-invariant constant shared by all unmasked atoms at one level."""
    fine = atom_profile(local, level, (0.0,) * local.n, L, d, moments)
    cube = Cube(level, (0,) * local.n, (0.0,) * local.n)
    return _normalization(fine, local, cube, K, L, AtomKind.GLOBAL, None, None, moments, np.zeros(local.n))


def _normalization(raw, grid, cube, K, L, kind, domain, dictionary, moments, shift) -> float:
    mask = None
    if kind is not AtomKind.GLOBAL:
        mask = domain.closure_contains(grid.points + shift)
    c = _dilated_norm(raw, grid, cube.level, K, mask)
    if kind is not AtomKind.BOUNDARY and L > 0 and moments:
        if dictionary is None or dictionary.grid != grid:
            dictionary = build_dictionary(grid, L)
        c = max(c, _moment_ratios(raw, grid, cube.level, L, dictionary)[0])
    return c


def make_moment_violating_bump(cube: Cube, K: float, L: float, grid: Optional[Grid] = None,
                               d: float = DEFAULT_D) -> AtomCandidate:
    """Nonnegative bump with the ``C^K`` normalization only; its mean does not
    vanish, so condition (iii) fails once ``2**level`` is large enough."""
    a = make_atom(cube, K, 0.0, AtomKind.GLOBAL, grid, d, moments=False)
    return AtomCandidate(a.values, cube, AtomKind.GLOBAL, K, L, 1.0, d)
