"""Variable-exponent modulars and Luxemburg-type norms on grid data.

All root finding is done on ``t = log(lambda)``. For a fixed function the
modular ``rho(f / e^t)`` is a sum of terms ``exp(a_i - k_i t)`` (cells where
the exponent is finite) plus a supremum ``max_j exp(b_j - kb_j t)`` (cells
where it is infinite). Its logarithm is therefore smooth, convex and strictly
decreasing in ``t`` as soon as one slope is positive, and the defining
infimum is the unique root of ``log rho = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import InvalidInputError, NumericError, PreconditionError
from .exponents import ExponentField
from .grid import Grid, GridFunction, GridSequence

__all__ = [
    "Grid", "GridFunction", "GridSequence",
    "modular_lp", "luxemburg_norm", "luxemburg_norm_values",
    "modular_mixed", "modular_mixed_simple", "norm_lq_lp", "norm_lp_lq",
]

DEFAULT_TOL = 1e-10
MAX_EXPANSIONS = 200


def sample_exponent(field: ExponentField, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Finite values and infinity mask of ``field`` at the grid cell centres."""
    if field.n != grid.n:
        raise InvalidInputError(f"exponent is {field.n}-dimensional, grid is {grid.n}-dimensional")
    pts = grid.points
    return field.finite_values(pts), field.infinity_mask(pts)


@dataclass
class _LogModular:
    """``t -> log sum_i exp(a_i - k_i t) (+) max_j (b_j - kb_j t)``."""

    a: np.ndarray
    k: np.ndarray
    b: np.ndarray
    kb: np.ndarray

    @property
    def empty(self) -> bool:
        return self.a.size == 0 and self.b.size == 0

    def __call__(self, t: float) -> float:
        out = -math.inf
        if self.a.size:
            out = float(logsumexp(self.a - self.k * t))
        if self.b.size:
            out = float(np.logaddexp(out, np.max(self.b - self.kb * t)))
        return out

    def floor(self) -> float:
        """Limit of the log modular as ``t -> +inf`` (terms with zero slope)."""
        out = -math.inf
        za = self.k == 0
        if np.any(za):
            out = float(logsumexp(self.a[za]))
        zb = self.kb == 0
        if np.any(zb):
            out = float(np.logaddexp(out, np.max(self.b[zb])))
        return out


def _solve_decreasing(func, guess: float, tol: float) -> float:
    """Root of a continuous decreasing ``func`` by bracketing then Brent's method.

    The bracket ``[lo, hi]`` satisfies ``func(hi) <= 0 < func(lo)`` and is grown
    geometrically from ``guess``. The returned root is accurate to ``tol`` in
    ``t``, i.e. to relative accuracy ``tol`` in ``lambda = e^t``.
    """
    f0 = func(guess)
    if f0 == 0:
        return guess
    step = 1.0
    n = 0
    if f0 > 0:
        lo, hi = guess, guess + step
        while (fhi := func(hi)) > 0:
            lo = hi
            step *= 2
            hi = lo + step
            n += 1
            if n > MAX_EXPANSIONS:
                raise NumericError("could not bracket the modular from above")
        if fhi == 0:
            return hi
    else:
        lo, hi = guess - step, guess
        while (flo := func(lo)) <= 0:
            if flo == 0:
                return lo
            hi = lo
            step *= 2
            lo = hi - step
            n += 1
            if n > MAX_EXPANSIONS:
                raise NumericError("could not bracket the modular from below")
    return brentq(func, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)


def _solve_modular(m: _LogModular, guess: float, tol: float) -> float:
    """``log inf{lambda : rho(f / lambda) <= 1}``; ``-inf`` for the zero function."""
    if m.empty:
        return -math.inf
    floor = m.floor()
    if not (np.any(m.k) or np.any(m.kb)):
        # constant in t: every lambda qualifies or none does
        return -math.inf if floor <= 0 else math.inf
    if floor >= 0:
        return math.inf
    return _solve_decreasing(m, guess, tol)


def _initial_guess(abs_vals: np.ndarray, p_min: float) -> float:
    """``log(max(1, sup|f|) * count**(1/p_min))``, the design bracket seed."""
    count = max(abs_vals.size, 1)
    sup = float(np.max(abs_vals)) if abs_vals.size else 1.0
    pm = p_min if math.isfinite(p_min) and p_min > 0 else 1.0
    return math.log(max(1.0, sup)) + math.log(count) / pm


# --------------------------------------------------------------------------
# L_{p(.)}


def _modular_lp_values(absf, pvals, pinf, cell) -> float:
    fin = ~pinf
    with np.errstate(over="ignore"):
        integral = float(np.sum(absf[fin] ** pvals[fin]) * cell)
    sup = float(np.max(absf[pinf])) if np.any(pinf) else 0.0
    return integral + sup


def modular_lp(f: GridFunction, p: ExponentField) -> float:
    """Midpoint-rule value of ``int |f|^p`` over the finite set plus
    ``max |f|`` over the cells where ``p`` is infinite."""
    pvals, pinf = sample_exponent(p, f.grid)
    return _modular_lp_values(np.abs(f.values), pvals, pinf, f.grid.cell_volume)


def _lp_log_modular(absf, pvals, pinf, cell) -> _LogModular:
    nz = absf > 0
    fin = nz & ~pinf
    inf = nz & pinf
    with np.errstate(divide="ignore"):
        la = np.log(absf)
    return _LogModular(a=math.log(cell) + pvals[fin] * la[fin], k=pvals[fin],
                       b=la[inf], kb=np.ones(int(inf.sum())))


def luxemburg_norm_values(absf: np.ndarray, pvals: np.ndarray, pinf: np.ndarray, cell: float,
                          tol: float = DEFAULT_TOL) -> float:
    """Luxemburg norm for raw arrays (values, finite exponent, infinity mask)."""
    if not tol > 0:
        raise InvalidInputError("tol must be positive")
    absf = np.abs(np.asarray(absf))
    if not np.any(absf):
        return 0.0
    m = _lp_log_modular(absf, pvals, pinf, cell)
    nz = absf > 0
    fin_p = pvals[nz & ~pinf]
    p_min = float(fin_p.min()) if fin_p.size else 1.0
    guess = _initial_guess(absf[nz], p_min)
    return math.exp(_solve_modular(m, guess, tol))


def luxemburg_norm(f: GridFunction, p: ExponentField, tol: float = DEFAULT_TOL) -> float:
    """``inf{lambda > 0 : rho_p(f / lambda) <= 1}``."""
    pvals, pinf = sample_exponent(p, f.grid)
    return luxemburg_norm_values(f.values, pvals, pinf, f.grid.cell_volume, tol)


# --------------------------------------------------------------------------
# mixed spaces


def _mixed_terms(absf, pvals, pinf, qvals, qinf, cell):
    """Log-modular of ``t -> rho_p(f / e^{t/q})`` for one level, with the
    ``p``-slopes kept apart so that an outer scaling ``f / e^s`` can be
    folded in as ``a - s p``."""
    nz = absf > 0
    fin = nz & ~pinf
    inf = nz & pinf
    with np.errstate(divide="ignore"):
        la = np.log(absf)
    inv_q = np.where(qinf, 0.0, 1.0 / np.where(qinf, 1.0, qvals))
    return (math.log(cell) + pvals[fin] * la[fin], pvals[fin], pvals[fin] * inv_q[fin],
            la[inf], inv_q[inf])


def _inner_root(terms, s: float, guess: float, tol: float) -> float:
    a, pa, k, b, kb = terms
    m = _LogModular(a=a - s * pa, k=k, b=b - s, kb=kb)
    return _solve_modular(m, guess, tol)


def _sampled(seq: GridSequence, p: ExponentField, q: ExponentField):
    grid = seq.grid
    pvals, pinf = sample_exponent(p, grid)
    qvals, qinf = sample_exponent(q, grid)
    if np.any(qvals[~qinf] <= 0) or np.any(pvals[~pinf] <= 0):
        raise InvalidInputError("exponents must be positive")
    return grid, pvals, pinf, qvals, qinf


def modular_mixed(seq: GridSequence, p: ExponentField, q: ExponentField,
                  tol: float = DEFAULT_TOL) -> float:
    """``sum_nu inf{lambda_nu > 0 : rho_p(f_nu / lambda_nu^{1/q}) <= 1}``."""
    grid, pvals, pinf, qvals, qinf = _sampled(seq, p, q)
    total = 0.0
    for nu, f in enumerate(seq):
        absf = np.abs(f.values)
        if not np.any(absf):
            continue
        terms = _mixed_terms(absf, pvals, pinf, qvals, qinf, grid.cell_volume)
        try:
            t = _inner_root(terms, 0.0, 0.0, tol)
        except NumericError as exc:
            raise NumericError(f"inner infimum failed at level {nu}: {exc}") from exc
        total += math.exp(t)
    return total


def modular_mixed_simple(seq: GridSequence, p: ExponentField, q: ExponentField,
                         tol: float = DEFAULT_TOL) -> float:
    """``sum_nu || |f_nu|^q | L_{p/q} ||``; requires ``q^+ < inf``."""
    grid, pvals, pinf, qvals, qinf = _sampled(seq, p, q)
    if np.any(qinf):
        raise PreconditionError("the simple mixed modular needs q bounded")
    ratio = np.where(pinf, 1.0, pvals / qvals)
    total = 0.0
    for f in seq:
        absf = np.abs(f.values)
        if not np.any(absf):
            continue
        with np.errstate(over="ignore"):
            g = absf ** qvals
        if not np.all(np.isfinite(g)):
            # |f|^q overflows: rescale, using homogeneity in the norm of g
            lg = qvals * np.log(np.where(absf > 0, absf, 1.0))
            shift = float(np.max(lg[absf > 0]))
            g = np.where(absf > 0, np.exp(lg - shift), 0.0)
            m = _lp_log_modular(g, ratio, pinf, grid.cell_volume)
            total += math.exp(_solve_modular(m, 0.0, tol) + shift)
            continue
        total += luxemburg_norm_values(g, ratio, pinf, grid.cell_volume, tol)
    return total


_STEP = 1e3


def norm_lq_lp(seq: GridSequence, p: ExponentField, q: ExponentField,
               tol: float = DEFAULT_TOL) -> float:
    """``inf{mu > 0 : rho_{l_q(L_p)}(f_nu / mu) <= 1}`` via nested root finding."""
    if not tol > 0:
        raise InvalidInputError("tol must be positive")
    grid, pvals, pinf, qvals, qinf = _sampled(seq, p, q)
    levels = []
    for f in seq:
        absf = np.abs(f.values)
        if np.any(absf):
            levels.append(_mixed_terms(absf, pvals, pinf, qvals, qinf, grid.cell_volume))
    if not levels:
        return 0.0
    inner_tol = tol * 1e-2
    warm = [0.0] * len(levels)

    def outer(s: float) -> float:
        roots = []
        for i, terms in enumerate(levels):
            t = _inner_root(terms, s, warm[i], inner_tol)
            if math.isfinite(t):
                warm[i] = t
            roots.append(t)
        if any(t == math.inf for t in roots):
            return _STEP
        # a q = inf level turns the outer function into a step; brentq still
        # converges to the jump as long as the values stay finite
        return max(float(logsumexp(roots)), -_STEP)

    sup = max(float(np.max(np.abs(f.values))) for f in seq)
    guess = math.log(max(sup, 1e-300))
    return math.exp(_solve_decreasing(outer, guess, tol))


def pointwise_lq(seq: GridSequence, q: ExponentField) -> GridFunction:
    """``x -> (sum_nu |f_nu(x)|^{q(x)})^{1/q(x)}`` (max where q is infinite)."""
    grid = seq.grid
    qvals, qinf = sample_exponent(q, grid)
    absf = np.abs(seq.stack())
    with np.errstate(divide="ignore"):
        la = np.log(absf)
    qv = np.where(qinf, 1.0, qvals)
    lse = logsumexp(qv * la, axis=0) / qv
    out = np.where(qinf, absf.max(axis=0), np.exp(lse))
    out = np.where(np.any(absf > 0, axis=0), out, 0.0)
    return GridFunction(out, grid)


def norm_lp_lq(seq: GridSequence, p: ExponentField, q: ExponentField,
               tol: float = DEFAULT_TOL) -> float:
    """``|| (sum_nu |f_nu|^q)^{1/q} | L_p ||``."""
    return luxemburg_norm(pointwise_lq(seq, q), p, tol)
