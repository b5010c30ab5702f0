"""Admissible weight sequences w = (w_j) and membership checks for the class
W^alpha_{alpha1, alpha2}."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DataError, InvalidInputError
from .exponents import (ExponentField, SampleBox, as_points, default_pairs,
                        log_holder_audit)

WeightEvaluator = Callable[[int, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class WeightSequence:
    """``func(j, x)`` returns ``w_j`` at points ``x`` of shape ``(..., n)``."""

    func: WeightEvaluator
    alpha: float
    alpha1: float
    alpha2: float
    kind: str = "custom"
    n: int = 1
    max_level: Optional[int] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.alpha < 0:
            raise InvalidInputError("alpha must be >= 0")
        if self.alpha1 > self.alpha2:
            raise InvalidInputError("need alpha1 <= alpha2")

    def __call__(self, level: int, x) -> np.ndarray:
        if level < 0:
            raise InvalidInputError("levels start at 0")
        if self.max_level is not None and level > self.max_level:
            raise InvalidInputError(f"weight sequence {self.name!r} is defined up to level {self.max_level}")
        x = as_points(x, self.n)
        return np.broadcast_to(np.asarray(self.func(level, x), dtype=float), x.shape[:-1]).copy()

    def describe(self) -> dict:
        return {"name": self.name, "kind": self.kind, "alpha": self.alpha,
                "alpha1": self.alpha1, "alpha2": self.alpha2, **self.params}


@dataclass(frozen=True)
class AdmissibilityReport:
    cond_i_pass: bool
    cond_i_worst_constant: float
    cond_ii_pass: bool
    cond_ii_worst_pair: tuple
    levels_checked: int
    samples_checked: int

    @property
    def passed(self) -> bool:
        return self.cond_i_pass and self.cond_ii_pass

    def to_dict(self) -> dict:
        level, point = self.cond_ii_worst_pair
        return {
            "cond_i_pass": self.cond_i_pass,
            "cond_i_worst_constant": self.cond_i_worst_constant,
            "cond_ii_pass": self.cond_ii_pass,
            "cond_ii_worst_pair": [level, [float(v) for v in point]],
            "levels_checked": self.levels_checked,
            "samples_checked": self.samples_checked,
        }


def check_admissible(w: WeightSequence, box: SampleBox, max_level: int, c_cap: float,
                     n_random: int = 2000, seed: int = 0, rtol: float = 1e-12,
                     ratio_tol: float = 1e-12) -> AdmissibilityReport:
    """Sample both admissibility conditions up to ``max_level``.

    Condition (i) is tested on the diagonal, on random grid pairs, and on
    random pairs at distance of order ``2**-j`` (the binding scale). The
    reported constant is the largest observed
    ``w_j(x) / (w_j(y) (1 + 2**j |x - y|)**alpha)``. Condition (ii) checks the
    level ratio against ``[2**alpha1, 2**alpha2]`` at every sample point.
    """
    if max_level < 1:
        raise InvalidInputError("max_level must be >= 1")
    if not c_cap > 0:
        raise InvalidInputError("c_cap must be positive")
    pts = box.points()
    rng = np.random.default_rng(seed)
    lo, hi = np.array(box.lower), np.array(box.upper)
    i = rng.integers(0, len(pts), n_random)
    k = rng.integers(0, len(pts), n_random)

    values = {}
    for j in range(max_level + 1):
        wj = w(j, pts)
        bad = np.flatnonzero(~(wj > 0))
        if bad.size:
            raise DataError(f"nonpositive weight at level {j}, x={pts[bad[0]].tolist()}")
        values[j] = wj

    worst_c = 0.0
    samples = 0
    for j in range(max_level + 1):
        wj = values[j]
        # grid pairs and the diagonal
        cand = [wj[i] / (wj[k] * (1 + 2.0 ** j * np.linalg.norm(pts[i] - pts[k], axis=-1)) ** w.alpha),
                wj / wj]
        # near pairs at scale 2^-j
        y = np.clip(pts[i] + rng.uniform(-1, 1, size=(n_random, box.n)) * 2.0 ** (-j) * 4, lo, hi)
        wy = w(j, y)
        if np.any(~(wy > 0)):
            raise DataError(f"nonpositive weight at level {j}")
        dist = np.linalg.norm(pts[i] - y, axis=-1)
        fac = (1 + 2.0 ** j * dist) ** w.alpha
        cand.append(wj[i] / (wy * fac))
        cand.append(wy / (wj[i] * fac))
        cj = max(float(np.max(c)) for c in cand)
        worst_c = max(worst_c, cj)
        samples += sum(c.size for c in cand)

    # condition (ii) in log2 form; report the first failing sample, else the tightest one
    first_fail = None
    tightest, tightest_excess = (0, tuple(pts[0])), -math.inf
    for j in range(max_level):
        lr = np.log2(values[j + 1] / values[j])
        excess = np.maximum(lr - w.alpha2, w.alpha1 - lr)
        idx = int(np.argmax(excess))
        if excess[idx] > tightest_excess:
            tightest, tightest_excess = (j, tuple(pts[idx])), float(excess[idx])
        if first_fail is None and excess[idx] > ratio_tol:
            first_fail = (j, tuple(pts[idx]))
    cond_ii = first_fail is None
    worst_pair = tightest if cond_ii else first_fail

    return AdmissibilityReport(
        cond_i_pass=bool(worst_c <= c_cap * (1 + rtol)),
        cond_i_worst_constant=worst_c,
        cond_ii_pass=cond_ii,
        cond_ii_worst_pair=(int(worst_pair[0]), tuple(float(v) for v in worst_pair[1])),
        levels_checked=max_level + 1,
        samples_checked=samples + len(pts) * (max_level + 1),
    )


# --------------------------------------------------------------------------
# constructors


def weight_classical(s: float, n: int = 1) -> WeightSequence:
    """``w_j(x) = 2**(j s)``."""
    return WeightSequence(lambda j, x: np.full(x.shape[:-1], 2.0 ** (j * s)),
                          alpha=0.0, alpha1=s, alpha2=s, kind="classical", n=n,
                          name="classical", params={"s": s})


def weight_from_smoothness(s_field: ExponentField, threshold: float = 10.0) -> WeightSequence:
    """``w_j(x) = 2**(j s(x))`` for a locally log-Hoelder smoothness ``s``.

    The declared class is ``alpha = c_log(s)``, ``alpha1 = s^-``,
    ``alpha2 = s^+``. Rejects fields whose audited log-Hoelder constant
    exceeds ``threshold``.
    """
    box = s_field.sample_box
    s_minus, s_plus = s_field.bounds
    if not math.isfinite(s_plus):
        raise InvalidInputError("smoothness must be bounded")
    report = log_holder_audit(s_field, default_pairs(box), n=box.n, threshold=threshold)
    if not report.passes_local:
        raise InvalidInputError(
            f"smoothness is not locally log-Hoelder within {threshold}: "
            f"c_log >= {report.c_log_local:.4g} at pair {report.worst_pair}")

    def func(j, x):
        return 2.0 ** (j * s_field(x))

    return WeightSequence(func, alpha=report.c_log_local, alpha1=s_minus, alpha2=s_plus,
                          kind="variable-smoothness", n=s_field.n, name="smoothness",
                          params={"s": s_field.describe()})


def weight_generalized(sigma: Sequence[float], d0: float, d1: float, n: int = 1) -> WeightSequence:
    """x-independent ``w_j = sigma_j`` with ``d0 sigma_j <= sigma_{j+1} <= d1 sigma_j``."""
    sig = np.asarray(sigma, dtype=float)
    if sig.size == 0:
        raise InvalidInputError("sigma must be nonempty")
    if np.any(~(sig > 0)):
        raise InvalidInputError("sigma must be positive")
    if not 0 < d0 <= d1:
        raise InvalidInputError("need 0 < d0 <= d1")
    for j in range(sig.size - 1):
        r = sig[j + 1] / sig[j]
        if r < d0 * (1 - 1e-12) or r > d1 * (1 + 1e-12):
            raise InvalidInputError(
                f"ratio sigma[{j + 1}]/sigma[{j}] = {r:.6g} outside [{d0}, {d1}]")
    return WeightSequence(lambda j, x: np.full(x.shape[:-1], sig[j]),
                          alpha=0.0, alpha1=math.log2(d0), alpha2=math.log2(d1),
                          kind="generalized", n=n, max_level=sig.size - 1,
                          name="generalized", params={"sigma": sig.tolist(), "d0": d0, "d1": d1})


def weight_factorial(alpha2: float, n: int = 1) -> WeightSequence:
    """``w_j = j!``: level ratios are unbounded, so no finite ``alpha2`` works."""
    return WeightSequence(lambda j, x: np.full(x.shape[:-1], float(math.factorial(j))),
                          alpha=0.0, alpha1=0.0, alpha2=alpha2, kind="custom", n=n,
                          name="factorial", params={"alpha2": alpha2})


def constant_weight(n: int = 1) -> WeightSequence:
    return weight_classical(0.0, n)


def make_weight(spec: dict, n: int = 1) -> WeightSequence:
    from .exponents import make_exponent

    spec = dict(spec)
    name = spec.pop("name", None)
    if name == "classical":
        return weight_classical(float(spec.get("s", 0.0)), n)
    if name == "smoothness":
        return weight_from_smoothness(make_exponent(spec["s"], n),
                                      threshold=float(spec.get("threshold", 10.0)))
    if name == "generalized":
        return weight_generalized(spec["sigma"], spec["d0"], spec["d1"], n)
    if name == "factorial":
        return weight_factorial(float(spec.get("alpha2", 1.0)), n)
    raise InvalidInputError(f"unknown weight {name!r}")
