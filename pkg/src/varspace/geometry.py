"""Shifted dyadic cube lattices, raster domains and regularity audits.

Raster conventions: a domain is a boolean occupancy array over square pixels
(``ij`` indexing, axis 0 is ``x_1``). Pixels are treated as open squares;
features one pixel thin stand for measure-zero cracks. The boundary is
represented by the centres of occupied pixels that have an unoccupied face
neighbour (outside the raster counts as unoccupied).
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterator, Mapping, Optional, Sequence, Union

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import DataError, InvalidInputError, PreconditionError
from .exponents import SampleBox

DEFAULT_B = 1.5
DEFAULT_D = 2.0
DEFAULT_FLOOR = 1e-3


# --------------------------------------------------------------------------
# raster domains


@dataclass(frozen=True, eq=False)
class RasterDomain:
    occupancy: np.ndarray
    lower: tuple
    width: float
    name: str = "raster"

    def __post_init__(self):
        occ = np.asarray(self.occupancy, dtype=bool)
        if occ.ndim < 1 or len(set(occ.shape)) != 1:
            raise InvalidInputError("occupancy must be a square (hyper)array")
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "lower", tuple(float(v) for v in np.atleast_1d(self.lower)))
        if len(self.lower) != occ.ndim:
            raise InvalidInputError("lower corner has the wrong dimension")
        if not occ.any():
            raise DataError("empty domain")
        _, count = ndimage.label(occ, structure=ndimage.generate_binary_structure(occ.ndim, 1))
        if count != 1:
            raise DataError(f"domain must be connected, found {count} components")

    @property
    def n(self) -> int:
        return self.occupancy.ndim

    @property
    def pixels(self) -> int:
        return self.occupancy.shape[0]

    @property
    def pixel(self) -> float:
        return self.width / self.pixels

    @property
    def upper(self) -> tuple:
        return tuple(v + self.width for v in self.lower)

    @property
    def area(self) -> float:
        return float(self.occupancy.sum()) * self.pixel ** self.n

    def box(self, samples: int = 257) -> SampleBox:
        return SampleBox(self.lower, self.upper, samples)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        occ = self.occupancy
        eroded = ndimage.binary_erosion(occ, structure=ndimage.generate_binary_structure(self.n, 1),
                                        border_value=0)
        return occ & ~eroded

    @cached_property
    def closed_occupancy(self) -> np.ndarray:
        """Morphological closing with the full ``3**n`` neighbourhood: the raster
        stand-in for ``int(closure(dom))``."""
        st = ndimage.generate_binary_structure(self.n, self.n)
        pad = 2
        occ = np.pad(self.occupancy, pad)
        closed = ndimage.binary_erosion(ndimage.binary_dilation(occ, structure=st), structure=st,
                                        border_value=0)
        return closed[(slice(pad, -pad),) * self.n]

    def pixel_centers(self, idx: np.ndarray) -> np.ndarray:
        return np.asarray(self.lower) + (np.asarray(idx, dtype=float) + 0.5) * self.pixel

    @cached_property
    def boundary_points(self) -> np.ndarray:
        idx = np.argwhere(self.boundary_mask)
        return self.pixel_centers(idx)

    @cached_property
    def _boundary_tree(self) -> cKDTree:
        return cKDTree(self.boundary_points)

    def pixel_index(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Pixel indices of points and a mask of points inside the raster."""
        x = np.asarray(x, dtype=float)
        k = np.floor((x - np.asarray(self.lower)) / self.pixel).astype(int)
        inside = np.all((k >= 0) & (k < self.pixels), axis=-1)
        return np.clip(k, 0, self.pixels - 1), inside

    def contains(self, x) -> np.ndarray:
        k, inside = self.pixel_index(x)
        return inside & self.occupancy[tuple(np.moveaxis(k, -1, 0))]

    @cached_property
    def _touching(self) -> np.ndarray:
        return ndimage.binary_dilation(self.occupancy,
                                       structure=ndimage.generate_binary_structure(self.n, self.n))

    @cached_property
    def summed_area(self) -> dict:
        """Padded summed-area tables of the occupancy and boundary masks."""
        return {"occupancy": _summed_area(self.occupancy), "boundary": _summed_area(self.boundary_mask)}

    def closure_contains(self, x) -> np.ndarray:
        """Membership in the closure: the point's pixel, or one touching it, is occupied."""
        k, inside = self.pixel_index(x)
        return inside & self._touching[tuple(np.moveaxis(k, -1, 0))]

    def nearest_boundary(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        """Nearest boundary point to ``x``; ties broken lexicographically."""
        pts = self.boundary_points
        k = min(16, len(pts))
        dist, idx = self._boundary_tree.query(x, k=k)
        dist, idx = np.atleast_1d(dist), np.atleast_1d(idx)
        best = dist[0]
        tied = idx[dist <= best * (1 + 1e-12) + 1e-15]
        cand = pts[tied]
        order = np.lexsort(cand.T[::-1])
        return float(best), cand[order[0]]

    def to_pbm(self, path: Union[str, Path], binary: bool = False) -> None:
        """Write a 2-D domain as a P1/P4 bitmap (1 = occupied, first row = top)."""
        if self.n != 2:
            raise InvalidInputError("PBM export is 2-D only")
        rows = self.occupancy.T[::-1].astype(np.uint8)
        h, w = rows.shape
        path = Path(path)
        if binary:
            with path.open("wb") as fh:
                fh.write(f"P4\n{w} {h}\n".encode())
                fh.write(np.packbits(rows, axis=1).tobytes())
        else:
            lines = ["P1", f"{w} {h}"] + [" ".join(map(str, r)) for r in rows]
            path.write_text("\n".join(lines) + "\n")


def read_pbm(path: Union[str, Path], lower=(0.0, 0.0), width: float = 1.0,
             name: Optional[str] = None) -> RasterDomain:
    """Load a P1 (ASCII) or P4 (binary) bitmap; black pixels are occupied."""
    data = Path(path).read_bytes()
    tokens: list[bytes] = []
    pos = 0

    def next_token():
        nonlocal pos
        while True:
            while pos < len(data) and data[pos:pos + 1].isspace():
                pos += 1
            if data[pos:pos + 1] == b"#":
                while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
                continue
            break
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        return data[start:pos]

    magic = next_token()
    w, h = int(next_token()), int(next_token())
    if magic == b"P1":
        bits = [c for c in data[pos:] if c in (ord("0"), ord("1"))]
        if len(bits) < w * h:
            raise DataError("truncated P1 bitmap")
        rows = (np.array(bits[: w * h], dtype=np.uint8) - ord("0")).reshape(h, w)
    elif magic == b"P4":
        pos += 1
        stride = (w + 7) // 8
        raw = np.frombuffer(data[pos: pos + stride * h], dtype=np.uint8)
        if raw.size < stride * h:
            raise DataError("truncated P4 bitmap")
        rows = np.unpackbits(raw.reshape(h, stride), axis=1)[:, :w]
    else:
        raise DataError(f"not a PBM bitmap (magic {magic!r})")
    if w != h:
        raise DataError("bitmap must be square")
    occ = rows[::-1].T.astype(bool)
    return RasterDomain(occ, lower, width, name or Path(path).stem)


def from_predicate(pred: Callable[[np.ndarray], np.ndarray], lower, width: float, pixels: int,
                   name: str = "raster") -> RasterDomain:
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    n = lower.size
    ax = [lower[i] + (np.arange(pixels) + 0.5) * width / pixels for i in range(n)]
    pts = np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1)
    return RasterDomain(np.asarray(pred(pts), dtype=bool), tuple(lower), width, name)


def square(side: float = 1.0, origin=(0.0, 0.0), pixels: int = 256, lower=None,
           width: float = 4.0) -> RasterDomain:
    origin = np.asarray(origin, dtype=float)
    if lower is None:
        lower = origin + side / 2 - width / 2

    def pred(x):
        return np.all((x > origin) & (x < origin + side), axis=-1)

    return from_predicate(pred, lower, width, pixels, "square")


def l_shape(cell: float = 1.0, pixels: int = 512, lower=(-2.0, -2.0), width: float = 8.0) -> RasterDomain:
    """L hexomino: a column of four unit cells with two more cells along the base."""
    cells = [(0, 0), (1, 0), (2, 0), (0, 1), (0, 2), (0, 3)]

    def pred(x):
        out = np.zeros(x.shape[:-1], dtype=bool)
        for i, j in cells:
            out |= ((x[..., 0] > i * cell) & (x[..., 0] < (i + 1) * cell)
                    & (x[..., 1] > j * cell) & (x[..., 1] < (j + 1) * cell))
        # fuse shared edges between cells
        out |= ((x[..., 0] > 0) & (x[..., 0] < 3 * cell) & (x[..., 1] > 0) & (x[..., 1] < cell))
        out |= ((x[..., 0] > 0) & (x[..., 0] < cell) & (x[..., 1] > 0) & (x[..., 1] < 4 * cell))
        return out

    return from_predicate(pred, lower, width, pixels, "l_shape")


def disk(radius: float = 0.5, center=(0.5, 0.5), pixels: int = 256, width: float = 4.0) -> RasterDomain:
    center = np.asarray(center, dtype=float)
    return from_predicate(lambda x: np.linalg.norm(x - center, axis=-1) < radius,
                          center - width / 2, width, pixels, "disk")


def slit_square(pixels: int = 256, width: float = 4.0) -> RasterDomain:
    """Unit square with a one-pixel crack from the left edge to the centre."""
    dom = square(pixels=pixels, width=width)
    occ = dom.occupancy.copy()
    h = dom.pixel
    j = int(math.floor((0.5 - dom.lower[1]) / h))
    i_end = int(math.floor((0.5 - dom.lower[0]) / h))
    i0 = int(math.ceil((0.0 - dom.lower[0]) / h))
    occ[i0:i_end, j] = False
    return RasterDomain(occ, dom.lower, width, "slit_square")


def carpet(depth: int = 2, pixels: int = 256, width: float = 4.0) -> RasterDomain:
    """Unit square with the closed middle squares of a Sierpinski carpet removed."""

    def pred(x):
        inside = np.all((x > 0) & (x < 1), axis=-1)
        keep = inside.copy()
        for level in range(1, depth + 1):
            k = 3 ** level
            u = np.floor(x * k).astype(int) % 3
            keep &= ~np.all(u == 1, axis=-1)
        return keep

    return from_predicate(pred, (0.5 - width / 2,) * 2, width, pixels, "carpet")


def outward_cusp(power: float = 3.0, pixels: int = 256, width: float = 4.0) -> RasterDomain:
    """Square body ``[1,2] x [0,1]`` with a cusp ``|y - 1/2| < x**power / 2``
    reaching to the origin."""

    def pred(x):
        body = (x[..., 0] > 1) & (x[..., 0] < 2) & (x[..., 1] > 0) & (x[..., 1] < 1)
        xs = np.clip(x[..., 0], 0, None)
        spike = (x[..., 0] > 0) & (x[..., 0] <= 1) & (np.abs(x[..., 1] - 0.5) < 0.5 * xs ** power)
        return body | spike

    return from_predicate(pred, (1.0 - width / 2, 0.5 - width / 2), width, pixels, "outward_cusp")


def inward_cusp(power: float = 3.0, pixels: int = 256, width: float = 4.0) -> RasterDomain:
    """Unit square minus a closed cusp-shaped notch entering from the left edge.

    Near the tip the exterior is thinner than any fixed fraction of a
    boundary-centred cube, so the exterior-subcube condition degrades.
    """

    def pred(x):
        inside = np.all((x > 0) & (x < 1), axis=-1)
        t = np.clip(0.8 - x[..., 0], 0, None)
        notch = (x[..., 0] <= 0.8) & (np.abs(x[..., 1] - 0.5) <= 0.5 * t ** power)
        return inside & ~notch

    return from_predicate(pred, (0.5 - width / 2,) * 2, width, pixels, "inward_cusp")


DOMAINS = {
    "square": square,
    "l_shape": l_shape,
    "disk": disk,
    "slit_square": slit_square,
    "carpet": carpet,
    "outward_cusp": outward_cusp,
    "inward_cusp": inward_cusp,
}


def make_domain(spec: dict) -> RasterDomain:
    spec = dict(spec)
    name = spec.pop("name", None)
    if name == "pbm":
        return read_pbm(spec["path"], spec.get("lower", (0.0, 0.0)), spec.get("width", 1.0))
    if name not in DOMAINS:
        raise InvalidInputError(f"unknown domain {name!r}; known: {sorted(DOMAINS) + ['pbm']}")
    return DOMAINS[name](**spec)


def rescale_domain(dom: RasterDomain, level: int) -> RasterDomain:
    """``{x : 2**-level x in dom}``: same occupancy, coordinates scaled by ``2**level``."""
    if level < 0:
        raise InvalidInputError("level must be >= 0")
    s = 2.0 ** level
    return RasterDomain(dom.occupancy, tuple(v * s for v in dom.lower), dom.width * s, dom.name)


# --------------------------------------------------------------------------
# regularity audits


def check_MR(dom: RasterDomain) -> bool:
    """``dom == int(closure(dom))`` under raster morphology; one-pixel cracks
    are filled by the closing and fail the test."""
    return bool(np.array_equal(dom.closed_occupancy, dom.occupancy))


def default_sides(nu_max: int) -> list[float]:
    return [2.0 ** (-k) for k in range(nu_max + 1)]


def _half_pixels(dom: RasterDomain, side: float, margin: int) -> float:
    half = side / (2 * dom.pixel)
    if 2 * half < 2 ** margin * (1 - 1e-12):
        raise PreconditionError(
            f"cube side {side} spans {2 * half:g} pixels; need at least {2 ** margin} "
            f"(raster margin {margin})")
    return half


def _coverage_weights(half: float) -> np.ndarray:
    """1-D weights of pixels covered by a centred interval of half-width ``half`` (pixels)."""
    r = int(math.ceil(half + 0.5))
    o = np.arange(-r, r + 1)
    return np.clip(half + 0.5 - np.abs(o), 0.0, 1.0)


def interior_ratios(dom: RasterDomain, side: float, margin: int = 3) -> np.ndarray:
    """``|Q cap dom| / |Q|`` for the cube of the given side centred at each boundary point."""
    half = _half_pixels(dom, side, margin)
    wts = _coverage_weights(half)
    acc = dom.occupancy.astype(float)
    for axis in range(dom.n):
        acc = ndimage.correlate1d(acc, wts, axis=axis, mode="constant", cval=0.0)
    vals = acc[dom.boundary_mask]
    return vals / (2 * half) ** dom.n


def check_IR(dom: RasterDomain, side_lengths: Sequence[float], floor: float = DEFAULT_FLOOR,
             margin: int = 3) -> tuple[bool, float]:
    """Measure-density sweep over boundary-centred cubes."""
    c = min(float(interior_ratios(dom, s, margin).min()) for s in side_lengths)
    return c >= floor, c


def exterior_ratios(dom: RasterDomain, side: float, margin: int = 3) -> np.ndarray:
    """Side of the largest exterior subcube (centred on a pixel, odd pixel count)
    inside each boundary-centred cube, relative to the cube side.

    The exterior is the complement of the raster closure, so cracks do not
    count as exterior room.
    """
    half = _half_pixels(dom, side, margin)
    rw = int(math.floor(half - 0.5))
    pad = rw + 1
    ext = np.pad(~dom.closed_occupancy, pad, constant_values=True)
    # chessboard distance to the nearest occupied pixel; a centred block of
    # radius r lies in the exterior iff dist > r
    dist = ndimage.distance_transform_cdt(ext, metric="chessboard")
    offs = np.arange(-rw, rw + 1)
    cheb = np.zeros((2 * rw + 1,) * dom.n, dtype=int)
    for axis in range(dom.n):
        shape = [1] * dom.n
        shape[axis] = -1
        cheb = np.maximum(cheb, np.abs(offs).reshape(shape))
    room = rw - cheb
    out = []
    for idx in np.argwhere(dom.boundary_mask):
        sl = tuple(slice(i + pad - rw, i + pad + rw + 1) for i in idx)
        r = np.minimum(dist[sl] - 1, room)
        best = int(r.max())
        out.append(0.0 if best < 0 else (2 * best + 1) / (2 * half))
    return np.array(out)


def check_ER(dom: RasterDomain, side_lengths: Sequence[float], floor: float = DEFAULT_FLOOR,
             margin: int = 3) -> tuple[bool, float]:
    c = min(float(exterior_ratios(dom, s, margin).min()) for s in side_lengths)
    return c >= floor, c


# --------------------------------------------------------------------------
# cube lattices


class CubeKind(str, enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class Cube:
    level: int
    m: tuple
    center: tuple

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def n(self) -> int:
        return len(self.m)

    def contains(self, x, dilation: float = 1.0) -> np.ndarray:
        """Closed ``dilation * Q`` membership for points of shape ``(..., n)``."""
        x = np.asarray(x, dtype=float)
        return np.all(np.abs(x - np.asarray(self.center)) <= dilation * self.side / 2 + 1e-12 * self.side,
                      axis=-1)

    def contains_half_open(self, x) -> np.ndarray:
        """Membership in ``[c - s/2, c + s/2)^n`` (used for characteristic functions)."""
        x = np.asarray(x, dtype=float)
        c = np.asarray(self.center)
        h = self.side / 2
        return np.all((x >= c - h) & (x < c + h), axis=-1)


@dataclass(eq=False)
class CubeLattice:
    level: int
    b: float
    d: float
    m_lower: np.ndarray
    centers: np.ndarray
    kinds: np.ndarray
    box: SampleBox

    @property
    def n(self) -> int:
        return self.centers.shape[-1]

    @property
    def shape(self) -> tuple:
        return self.centers.shape[:-1]

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    def has(self, m) -> bool:
        k = np.asarray(m) - self.m_lower
        return bool(np.all(k >= 0) and np.all(k < np.asarray(self.shape)))

    def cube(self, m) -> Cube:
        if not self.has(m):
            raise InvalidInputError(f"index {tuple(m)} outside the lattice window at level {self.level}")
        k = tuple(np.asarray(m) - self.m_lower)
        return Cube(self.level, tuple(int(v) for v in m), tuple(float(v) for v in self.centers[k]))

    def kind(self, m) -> CubeKind:
        k = tuple(np.asarray(m) - self.m_lower)
        return CubeKind(self.kinds[k])

    def indices(self, kinds: Optional[Sequence[CubeKind]] = None) -> list[tuple]:
        out = []
        for k in itertools.product(*(range(s) for s in self.shape)):
            if kinds is None or CubeKind(self.kinds[k]) in kinds:
                out.append(tuple(int(v) for v in np.asarray(k) + self.m_lower))
        return out

    def __iter__(self) -> Iterator[Cube]:
        for m in self.indices():
            yield self.cube(m)

    def census(self) -> dict:
        vals, counts = np.unique(self.kinds, return_counts=True)
        out = {k.value: 0 for k in CubeKind}
        out.update({str(v): int(c) for v, c in zip(vals, counts)})
        return out


def _window(level: int, b: float, d: float, box: SampleBox) -> tuple[np.ndarray, np.ndarray]:
    reach = b + d / 2
    lo = np.floor(np.asarray(box.lower) * 2.0 ** level - reach).astype(int)
    hi = np.ceil(np.asarray(box.upper) * 2.0 ** level + reach).astype(int)
    return lo, hi


def _summed_area(mask: np.ndarray) -> np.ndarray:
    sat = mask.astype(np.int64)
    for axis in range(mask.ndim):
        sat = np.cumsum(sat, axis=axis)
    return np.pad(sat, [(1, 0)] * mask.ndim)


def _window_counts(sat: np.ndarray, lo_idx: np.ndarray, hi_idx: np.ndarray) -> np.ndarray:
    """Number of true pixels in the inclusive index boxes ``[lo, hi]`` (clipped),
    from a padded summed-area table."""
    n = sat.ndim
    size = sat.shape[0] - 1
    lo = np.clip(lo_idx, 0, size)
    hi = np.clip(hi_idx + 1, 0, size)
    hi = np.maximum(hi, lo)
    total = np.zeros(lo.shape[:-1], dtype=np.int64)
    for corner in itertools.product((0, 1), repeat=n):
        idx = tuple(np.where(c, hi[..., a], lo[..., a]) for a, c in enumerate(corner))
        sign = (-1) ** (n - sum(corner))
        total += sign * sat[idx]
    return total


def classify_centers(domain: RasterDomain, centers: np.ndarray, side: float, d: float) -> np.ndarray:
    """Interior / Boundary / Exterior label for closed cubes ``d Q`` around the
    given (unshifted) centres, by pixel counting."""
    centers = np.asarray(centers, dtype=float)
    hw = d * side / 2
    px = domain.pixel
    low = np.asarray(domain.lower)
    i_lo = np.ceil((centers - hw - low) / px - 0.5 - 1e-9).astype(int)
    i_hi = np.floor((centers + hw - low) / px - 0.5 + 1e-9).astype(int)
    n_pix = np.prod(np.maximum(i_hi - i_lo + 1, 0), axis=-1)
    tables = domain.summed_area
    n_bnd = _window_counts(tables["boundary"], i_lo, i_hi)
    n_occ = _window_counts(tables["occupancy"], i_lo, i_hi)
    kinds = np.full(centers.shape[:-1], CubeKind.EXTERIOR.value, dtype=object)
    kinds[(n_bnd == 0) & (n_occ == n_pix) & (n_pix > 0)] = CubeKind.INTERIOR.value
    kinds[n_bnd > 0] = CubeKind.BOUNDARY.value
    return kinds


def classify_cube(domain: RasterDomain, level: int, m, d: float = DEFAULT_D) -> CubeKind:
    side = 2.0 ** (-level)
    base = np.asarray(m, dtype=float).reshape(1, -1) * side
    return CubeKind(classify_centers(domain, base, side, d)[0])


def build_lattice(level: int, b: float = DEFAULT_B, d: float = DEFAULT_D,
                  box: Optional[SampleBox] = None, domain: Optional[RasterDomain] = None,
                  shifts: Union[Mapping, Callable, None] = None,
                  jitter: Optional[np.random.Generator] = None, n: Optional[int] = None) -> CubeLattice:
    """Cubes ``Q_{level,m}`` whose dilates can meet ``box``.

    Centres default to ``2**-level m``. ``shifts`` (mapping or callable of
    ``m``) or ``jitter`` (random shifts in the ball of radius ``b 2**-level``)
    move them. With a ``domain`` the cubes are classified; boundary cubes
    get their centre snapped to the nearest raster boundary point.
    """
    if not d > 1:
        raise PreconditionError("dilation d must exceed 1")
    if b < 0:
        raise PreconditionError("shift budget b must be >= 0")
    if level < 0:
        raise PreconditionError("level must be >= 0")
    if box is None:
        if domain is None:
            raise InvalidInputError("need a box or a domain")
        box = domain.box()
    dim = box.n if n is None else n
    lo, hi = _window(level, b, d, box)
    shape = tuple(int(v) for v in hi - lo + 1)
    mesh = np.stack(np.meshgrid(*[np.arange(a, c + 1) for a, c in zip(lo, hi)], indexing="ij"), axis=-1)
    side = 2.0 ** (-level)
    centers = mesh * side
    budget = b * side

    if jitter is not None and b > 0:
        centers = centers + jitter.uniform(-budget, budget, size=mesh.shape)
    if shifts is not None:
        for k in itertools.product(*(range(s) for s in shape)):
            m = tuple(int(v) for v in mesh[k])
            delta = shifts(m) if callable(shifts) else shifts.get(m)
            if delta is None:
                continue
            delta = np.asarray(delta, dtype=float) * side
            if np.max(np.abs(delta)) > budget * (1 + 1e-12):
                raise InvalidInputError(f"shift for m={m} exceeds the budget b")
            centers[k] = mesh[k] * side + delta

    kinds = np.full(shape, CubeKind.UNCLASSIFIED.value, dtype=object)
    if domain is not None:
        if domain.n != dim:
            raise InvalidInputError("domain dimension mismatch")
        base = mesh * side
        kinds = classify_centers(domain, base, side, d)
        boundary = kinds == CubeKind.BOUNDARY.value
        for k in map(tuple, np.argwhere(boundary)):
            _, point = domain.nearest_boundary(base[k])
            dist = float(np.max(np.abs(point - base[k])))
            if dist > budget * (1 + 1e-12):
                m = tuple(int(v) for v in mesh[k])
                raise DataError(
                    f"boundary snap for m={m} at level {level} needs {dist / side:.3f} "
                    f"cube sides but b={b}")
            centers[k] = point
    return CubeLattice(level, float(b), float(d), lo, centers, kinds, box)


def overlap_counts(lat: CubeLattice, x) -> np.ndarray:
    """Number of closed dilated cubes ``d Q_{level,m}`` containing each point."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if lat.n == 1 and x.shape[-1] != 1:
        x = x.reshape(-1, 1)
    scale = 2.0 ** lat.level
    reach = int(math.ceil(lat.b + lat.d / 2)) + 1
    base = np.floor(x * scale).astype(int)
    hw = lat.d * lat.side / 2 * (1 + 1e-12)
    shape = np.asarray(lat.shape)
    counts = np.zeros(len(x), dtype=int)
    for off in itertools.product(range(-reach, reach + 1), repeat=lat.n):
        m = base + np.asarray(off)
        k = m - lat.m_lower
        valid = np.all((k >= 0) & (k < shape), axis=-1)
        kk = np.clip(k, 0, shape - 1)
        c = lat.centers[tuple(kk.T)]
        inside = np.all(np.abs(x - c) <= hw, axis=-1)
        counts += valid & inside
    return counts


def overlap_count(lat: CubeLattice, x) -> int:
    return int(overlap_counts(lat, np.asarray(x, dtype=float).reshape(1, -1))[0])


def overlap_bound(b: float, d: float, n: int) -> int:
    """``2**n floor(2b + d)**n``."""
    return int(2 ** n * math.floor(2 * b + d) ** n)


def min_covering_dilation(b: float) -> float:
    """Smallest ``d`` for which arbitrary per-axis shifts up to ``b`` still cover."""
    return 2 * b + 1


def covering_check(lat: CubeLattice, box: Optional[SampleBox] = None) -> bool:
    """True iff every sample point of ``box`` lies in some dilated cube."""
    box = lat.box if box is None else box
    return bool(np.all(overlap_counts(lat, box.points()) >= 1))


def audit_sides(dom: RasterDomain, nu_max: int = 10, margin: int = 3) -> list[float]:
    """Sides ``1, 1/2, ...`` down to ``2**-nu_max`` that the raster resolves."""
    return [s for s in default_sides(nu_max) if s / dom.pixel >= 2 ** margin * (1 - 1e-12)]
