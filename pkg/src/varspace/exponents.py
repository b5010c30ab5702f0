"""Variable exponents p(.), q(.): bounds, log-Hoelder audits and the indices
sigma_p, sigma_{p,q}.

Fields are closed-form evaluators on points of shape ``(..., n)``. The set
where an exponent is infinite is carried by an explicit mask callable, never
by arithmetic on ``inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import InvalidInputError

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SampleBox:
    """Axis-aligned box sampled by a uniform grid with ``samples`` points per axis
    (endpoints included)."""

    lower: tuple
    upper: tuple
    samples: int = 257

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != len(hi):
            raise InvalidInputError("box corners differ in dimension")
        if any(b <= a for a, b in zip(lo, hi)):
            raise InvalidInputError("box must have positive extent on every axis")

    @classmethod
    def cube(cls, lo: float, hi: float, n: int = 1, samples: int = 257) -> "SampleBox":
        return cls((lo,) * n, (hi,) * n, samples)

    @property
    def n(self) -> int:
        return len(self.lower)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, self.samples) for a, b in zip(self.lower, self.upper)]

    def points(self) -> np.ndarray:
        """Sample points as an array of shape ``(samples**n, n)``."""
        if self.samples < 1:
            raise InvalidInputError("empty sample set")
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


def as_points(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != n:
        raise InvalidInputError(f"points have trailing dimension {x.shape[-1]}, expected {n}")
    return x


@dataclass(frozen=True, eq=False)
class ExponentField:
    """A variable exponent with values in ``(c, inf]``.

    ``func`` gives the finite values; ``infinite`` (optional) is a predicate
    marking the points where the exponent equals infinity. Bounds are cached
    over ``box``.
    """

    func: Evaluator
    n: int = 1
    infinite: Optional[Evaluator] = None
    box: Optional[SampleBox] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def finite_values(self, x) -> np.ndarray:
        x = as_points(x, self.n)
        return np.broadcast_to(np.asarray(self.func(x), dtype=float), x.shape[:-1]).copy()

    def infinity_mask(self, x) -> np.ndarray:
        x = as_points(x, self.n)
        if self.infinite is None:
            return np.zeros(x.shape[:-1], dtype=bool)
        return np.broadcast_to(np.asarray(self.infinite(x), dtype=bool), x.shape[:-1]).copy()

    def __call__(self, x) -> np.ndarray:
        vals = self.finite_values(x)
        vals[self.infinity_mask(x)] = np.inf
        return vals

    @property
    def sample_box(self) -> SampleBox:
        return self.box if self.box is not None else SampleBox.cube(-4.0, 4.0, self.n)

    @cached_property
    def bounds(self) -> tuple[float, float]:
        return exponent_bounds(self, self.sample_box)

    @property
    def p_minus(self) -> float:
        return self.bounds[0]

    @property
    def p_plus(self) -> float:
        return self.bounds[1]

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.p_plus)

    def reciprocal(self) -> Evaluator:
        """The map ``x -> 1/p(x)`` (zero on the infinity set)."""

        def inv(x):
            return 1.0 / self(x)

        return inv

    def with_box(self, box: SampleBox) -> "ExponentField":
        return ExponentField(self.func, self.n, self.infinite, box, self.name, dict(self.params))

    def describe(self) -> dict:
        return {"name": self.name, **self.params}


def exponent_bounds(field: ExponentField, box: SampleBox) -> tuple[float, float]:
    """Min and max of ``field`` over the sample grid of ``box``.

    The upper bound is ``inf`` as soon as the infinity mask hits a sample.
    """
    if box.samples < 1:
        raise InvalidInputError("empty sample set")
    if box.samples < 2:
        raise InvalidInputError("need at least 2 samples per axis")
    if box.n != field.n:
        raise InvalidInputError("box and field dimension differ")
    pts = box.points()
    vals = field(pts)
    p_minus = float(np.min(vals))
    p_plus = float(np.max(vals))
    if not p_minus > 0:
        raise InvalidInputError(f"exponent must be positive, found minimum {p_minus}")
    return p_minus, p_plus


# --------------------------------------------------------------------------
# built-in fields


def _first(x):
    return x[..., 0]


def constant(value: float, n: int = 1) -> ExponentField:
    if value == math.inf:
        return ExponentField(lambda x: np.ones(x.shape[:-1]), n,
                             infinite=lambda x: np.ones(x.shape[:-1], dtype=bool),
                             name="constant", params={"value": "inf"})
    if not value > 0:
        raise InvalidInputError("constant exponent must be positive")
    return ExponentField(lambda x: np.full(x.shape[:-1], float(value)), n,
                         name="constant", params={"value": value})


def affine_clamped(slope: float, intercept: float, lo: float, hi: float, n: int = 1) -> ExponentField:
    """``clip(intercept + slope * x_1, lo, hi)``."""
    if not 0 < lo <= hi:
        raise InvalidInputError("need 0 < lo <= hi")
    return ExponentField(lambda x: np.clip(intercept + slope * _first(x), lo, hi), n,
                         name="affine_clamped",
                         params={"slope": slope, "intercept": intercept, "lo": lo, "hi": hi})


def sinusoidal(base: float, amplitude: float, frequency: float = 1.0, n: int = 1) -> ExponentField:
    """``base + amplitude * sin(frequency * x_1)**2``."""
    if not base > 0 or base + min(amplitude, 0.0) <= 0:
        raise InvalidInputError("sinusoidal exponent must stay positive")
    return ExponentField(lambda x: base + amplitude * np.sin(frequency * _first(x)) ** 2, n,
                         name="sinusoidal",
                         params={"base": base, "amplitude": amplitude, "frequency": frequency})


def smoothed_step(lo: float, hi: float, center: float = 0.0, width: float = 0.5, n: int = 1) -> ExponentField:
    """tanh transition from ``lo`` to ``hi`` across ``center``."""
    if not (lo > 0 and hi > 0 and width > 0):
        raise InvalidInputError("smoothed_step needs positive levels and width")
    return ExponentField(
        lambda x: lo + (hi - lo) * 0.5 * (1.0 + np.tanh((_first(x) - center) / width)), n,
        name="smoothed_step", params={"lo": lo, "hi": hi, "center": center, "width": width})


def step(lo: float, hi: float, at: float = 0.0, n: int = 1) -> ExponentField:
    """Jump from ``lo`` to ``hi`` at ``x_1 = at``; not log-Hoelder."""
    if not (lo > 0 and hi > 0):
        raise InvalidInputError("step levels must be positive")
    return ExponentField(lambda x: np.where(_first(x) < at, lo, hi), n,
                         name="step", params={"lo": lo, "hi": hi, "at": at})


def log_holder_critical(base: float, amplitude: float, n: int = 1) -> ExponentField:
    """``base + amplitude / log(e + 1/|x_1|)`` with value ``base`` at 0.

    Continuous but not Hoelder at the origin; the log-Hoelder constant stays
    bounded.
    """
    if not base > 0 or base + min(amplitude, 0.0) <= 0:
        raise InvalidInputError("exponent must stay positive")

    def f(x):
        t = np.abs(_first(x))
        with np.errstate(divide="ignore"):
            g = np.where(t > 0, 1.0 / np.log(np.e + 1.0 / np.where(t > 0, t, 1.0)), 0.0)
        return base + amplitude * g

    return ExponentField(f, n, name="log_holder_critical",
                         params={"base": base, "amplitude": amplitude})


def infinite_on(finite_value: float, lo: float, hi: float, n: int = 1) -> ExponentField:
    """Constant ``finite_value`` except ``inf`` on the slab ``lo <= x_1 <= hi``."""
    if not finite_value > 0:
        raise InvalidInputError("finite part must be positive")
    return ExponentField(lambda x: np.full(x.shape[:-1], float(finite_value)), n,
                         infinite=lambda x: (_first(x) >= lo) & (_first(x) <= hi),
                         name="infinite_on",
                         params={"finite_value": finite_value, "lo": lo, "hi": hi})


EXPONENTS = {
    "constant": constant,
    "affine_clamped": affine_clamped,
    "sinusoidal": sinusoidal,
    "smoothed_step": smoothed_step,
    "step": step,
    "log_holder_critical": log_holder_critical,
    "infinite_on": infinite_on,
}


def make_exponent(spec: dict, n: int = 1) -> ExponentField:
    """Build a field from ``{"name": ..., **params}``."""
    spec = dict(spec)
    name = spec.pop("name", None)
    if name not in EXPONENTS:
        raise InvalidInputError(f"unknown exponent field {name!r}; known: {sorted(EXPONENTS)}")
    if name == "constant" and spec.get("value") in ("inf", "infinity"):
        spec["value"] = math.inf
    return EXPONENTS[name](n=n, **spec)


# --------------------------------------------------------------------------
# log-Hoelder audit


@dataclass(frozen=True)
class LogHolderReport:
    c_log_local: float
    c_log_at_infinity: float
    g_infinity: float
    passes_local: bool
    passes_global: bool
    worst_pair: tuple

    def to_dict(self) -> dict:
        return {
            "c_log_local": self.c_log_local,
            "c_log_at_infinity": self.c_log_at_infinity,
            "g_infinity": self.g_infinity,
            "passes_local": self.passes_local,
            "passes_global": self.passes_global,
            "worst_pair": [list(map(float, p)) for p in self.worst_pair],
        }


def log_holder_audit(g: Evaluator, pairs, n: int = 1, threshold: float = 10.0,
                     g_infinity: Optional[float] = None) -> LogHolderReport:
    """Estimate the log-Hoelder constants of ``g`` from a finite pair set.

    ``c_log_local`` is the supremum over pairs of
    ``|g(x) - g(y)| * log(e + 1/|x - y|)``. The decay constant at infinity is
    the supremum of ``|g(x) - g_inf| * log(e + |x|)`` over every point that
    appears in a pair. When ``g_infinity`` is not supplied, the value at the
    point of largest modulus is used.

    To audit membership of an exponent p in the log class, pass
    ``p.reciprocal()`` rather than p itself.
    """
    pairs = np.asarray(pairs, dtype=float)
    if n == 1 and pairs.ndim == 2:
        pairs = pairs[..., None]
    if pairs.ndim != 3 or pairs.shape[1] != 2 or pairs.shape[2] != n:
        raise InvalidInputError("pairs must have shape (k, 2, n)")
    if len(pairs) == 0:
        raise InvalidInputError("empty pair set")
    x, y = pairs[:, 0], pairs[:, 1]
    dist = np.linalg.norm(x - y, axis=-1)
    if np.any(dist == 0):
        raise InvalidInputError("coincident pair in log-Hoelder audit")
    gx = np.asarray(g(x), dtype=float)
    gy = np.asarray(g(y), dtype=float)
    quot = np.abs(gx - gy) * np.log(np.e + 1.0 / dist)
    k = int(np.argmax(quot))
    c_local = float(quot[k])

    pts = np.concatenate([x, y])
    gp = np.concatenate([gx, gy])
    radius = np.linalg.norm(pts, axis=-1)
    if g_infinity is None:
        g_infinity = float(gp[int(np.argmax(radius))])
    c_inf = float(np.max(np.abs(gp - g_infinity) * np.log(np.e + radius)))

    passes_local = c_local <= threshold
    return LogHolderReport(
        c_log_local=c_local,
        c_log_at_infinity=c_inf,
        g_infinity=float(g_infinity),
        passes_local=bool(passes_local),
        passes_global=bool(passes_local and c_inf <= threshold),
        worst_pair=(tuple(x[k]), tuple(y[k])),
    )


def default_pairs(box: SampleBox, finest: int = 40, coarse_samples: int = 65,
                  n_random: int = 2000, seed: int = 0) -> np.ndarray:
    """Pairs centred at sample points with separations ``2**-k`` (k <= finest)
    along each axis, plus seeded random far pairs.

    Centring the pairs on the samples makes them straddle any sample point,
    which is where jump discontinuities of the built-in fields sit.
    """
    coarse = SampleBox(box.lower, box.upper, min(coarse_samples, box.samples))
    centers = coarse.points()
    n = box.n
    out = []
    for k in range(finest + 1):
        h = 2.0 ** (-k)
        for axis in range(n):
            e = np.zeros(n)
            e[axis] = h / 2
            out.append(np.stack([centers - e, centers + e], axis=1))
    rng = np.random.default_rng(seed)
    lo, hi = np.array(box.lower), np.array(box.upper)
    a = rng.uniform(lo, hi, size=(n_random, n))
    b = rng.uniform(lo, hi, size=(n_random, n))
    keep = np.linalg.norm(a - b, axis=-1) > 0
    out.append(np.stack([a[keep], b[keep]], axis=1))
    return np.concatenate(out)


def c_log(g: Evaluator, box: SampleBox, **pair_kwargs) -> float:
    """Local log-Hoelder constant of ``g`` estimated with :func:`default_pairs`."""
    return log_holder_audit(g, default_pairs(box, **pair_kwargs), n=box.n).c_log_local


def c_log_reciprocal(field: ExponentField, **pair_kwargs) -> float:
    """``c_log(1/p)``, the constant entering the decomposition hypotheses."""
    return c_log(field.reciprocal(), field.sample_box, **pair_kwargs)


# --------------------------------------------------------------------------
# derived indices


def sigma_p(p_minus: float, n: int) -> float:
    """``n (1/p^- - 1)_+``."""
    if not p_minus > 0:
        raise InvalidInputError("p_minus must be positive")
    if n < 1:
        raise InvalidInputError("dimension must be >= 1")
    return n * max(1 / p_minus - 1, 0)


def sigma_pq(p_minus: float, q_minus: float, n: int) -> float:
    """``n (1/min(1, p^-, q^-) - 1)``."""
    if not (p_minus > 0 and q_minus > 0):
        raise InvalidInputError("p_minus and q_minus must be positive")
    if n < 1:
        raise InvalidInputError("dimension must be >= 1")
    return n * (1 / min(1, p_minus, q_minus) - 1)
