"""Uniform periodic grids and the sampled functions that live on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class Grid:
    """Cell-centred uniform grid on the box ``[-T, T)^n`` with ``2**resolution``
    points per axis.

    Cell centres sit at ``-T + (k + 1/2) h`` with ``h = 2T / 2**resolution``.
    """

    n: int
    resolution: int
    half_width: float

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError("dimension must be >= 1")
        if self.resolution < 1:
            raise InvalidInputError("resolution must be >= 1")
        if not self.half_width > 0:
            raise InvalidInputError("half_width must be positive")

    @property
    def size(self) -> int:
        return 2 ** self.resolution

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.size,) * self.n

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.size

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.n

    @property
    def axis(self) -> np.ndarray:
        h = self.spacing
        return -self.half_width + (np.arange(self.size) + 0.5) * h

    @cached_property
    def points(self) -> np.ndarray:
        """Array of shape ``shape + (n,)`` with the cell centres."""
        mesh = np.meshgrid(*([self.axis] * self.n), indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def frequency_radius(self) -> np.ndarray:
        """|xi| on the DFT grid, in angular units (f^(xi) = int f e^{-i x.xi})."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.size, d=self.spacing)
        mesh = np.meshgrid(*([k] * self.n), indexing="ij")
        return np.sqrt(sum(m * m for m in mesh))

    @property
    def nyquist(self) -> float:
        return np.pi / self.spacing

    def index_of(self, x: Sequence[float]) -> tuple[int, ...]:
        """Index of the cell containing ``x``."""
        k = np.floor((np.asarray(x, dtype=float) + self.half_width) / self.spacing)
        return tuple(int(i) for i in k)


@dataclass(eq=False)
class GridFunction:
    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise InvalidInputError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    @classmethod
    def from_callable(cls, grid: Grid, func: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(np.asarray(func(grid.points)), grid)

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(np.zeros(grid.shape), grid)

    @property
    def n(self) -> int:
        return self.grid.n

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def __abs__(self) -> "GridFunction":
        return GridFunction(np.abs(self.values), self.grid)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self.grid, other.grid)
        return GridFunction(self.values + other.values, self.grid)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self.grid, other.grid)
        return GridFunction(self.values - other.values, self.grid)

    def __mul__(self, c) -> "GridFunction":
        if isinstance(c, GridFunction):
            _check_same_grid(self.grid, c.grid)
            return GridFunction(self.values * c.values, self.grid)
        return GridFunction(self.values * c, self.grid)

    __rmul__ = __mul__

    def __truediv__(self, c) -> "GridFunction":
        return GridFunction(self.values / c, self.grid)


@dataclass(eq=False)
class GridSequence:
    """Finite sequence ``(f_nu)`` of grid functions indexed by level."""

    levels: list[GridFunction] = field(default_factory=list)

    def __post_init__(self):
        self.levels = list(self.levels)
        if not self.levels:
            raise InvalidInputError("a GridSequence needs at least one level")
        g = self.levels[0].grid
        for f in self.levels[1:]:
            _check_same_grid(g, f.grid)

    @classmethod
    def from_arrays(cls, arrays, grid: Grid) -> "GridSequence":
        return cls([GridFunction(a, grid) for a in arrays])

    @property
    def grid(self) -> Grid:
        return self.levels[0].grid

    def __len__(self) -> int:
        return len(self.levels)

    def __iter__(self) -> Iterator[GridFunction]:
        return iter(self.levels)

    def __getitem__(self, j: int) -> GridFunction:
        return self.levels[j]

    def stack(self) -> np.ndarray:
        return np.stack([f.values for f in self.levels])

    def scaled(self, c) -> "GridSequence":
        return GridSequence([f * c for f in self.levels])


def _check_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise InvalidInputError(f"grid mismatch: {a} vs {b}")
