"""Experiment drivers, configuration and deterministic reports."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import __version__
from .analysis import (AtomFactory, CoefficientSequence, DomainLattices, Scale, atom_window, besov_norm,
                       build_partition, default_levels, eta_convolve, random_sequence, sequence_norm,
                       step_functions, synthesize, triebel_norm, _cube_slices)
from .errors import ConfigError, VarspaceError
from .exponents import ExponentField, SampleBox, c_log_reciprocal, make_exponent, sigma_p, sigma_pq
from .geometry import (DOMAINS, RasterDomain, audit_sides, build_lattice, check_ER, check_IR, check_MR,
                       make_domain)
from .grid import Grid, GridFunction, GridSequence
from .norms import luxemburg_norm, norm_lp_lq, norm_lq_lp
from .weights import AdmissibilityReport, WeightSequence, check_admissible, make_weight

DEFAULTS: dict = {
    "experiment": None,
    "grid": {"n": 1, "resolution": 10, "half_width": 1.0, "J": None},
    "lattice": {"b": 1.5, "d": 2.0, "nu_max": 4, "nu_max_values": None},
    "p": {"name": "constant", "value": 2.0},
    "q": {"name": "constant", "value": 2.0},
    "weight": {"name": "classical", "s": 0.0},
    "domain": None,
    "trials": 20,
    "seed": 0,
    "scales": ["B", "F"],
    "atoms": {"K": 1.0, "L": 0.0},
    "coefficients": {"sparsity": 0.1, "magnitude": [1e-2, 1e2], "explicit": None},
    "qe": {"subset": "left_half", "epsilon": 0.5},
    "convolution": {"R": "auto", "type": "B", "resolutions": [8, 9, 10]},
    "audit": {"resolutions": [256, 512], "nu_max": 4, "floor": 1e-3, "margin": 3, "lattice_levels": 3},
    "weight_audit": {"box": {"lo": -4.0, "hi": 4.0, "samples": 257}, "max_level": 10, "c_cap": 10.0,
                     "n_random": 2000},
    "function": {"name": "indicator", "lo": 0.0, "hi": 1.0},
    "norm": {"space": "lp"},
    "tolerances": {"norm_tol": 1e-10, "stability_factor": 4.0},
}

EXPERIMENTS = ("norm", "audit-weights", "audit-domain", "verify-qe", "verify-synthesis", "verify-conv",
               "synthesize")


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = dict(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown config key {path + k!r}")
        if isinstance(base[k], dict) and isinstance(v, dict) and k not in ("p", "q", "weight", "function"):
            out[k] = _merge(base[k], v, path + k + ".")
        else:
            out[k] = v
    return out


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    raw: dict

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        cfg = cls(_merge(DEFAULTS, data))
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_json(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc

    def override(self, **kwargs) -> "ExperimentConfig":
        data = json.loads(json.dumps(self.raw))
        for k, v in kwargs.items():
            if v is not None:
                data[k] = v
        return ExperimentConfig.from_dict(data)

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def hash(self) -> str:
        return hashlib.sha256(canonical_json(self.raw).encode()).hexdigest()[:16]

    @property
    def n(self) -> int:
        return int(self.raw["grid"]["n"])

    def validate(self) -> None:
        r = self.raw
        if r["experiment"] is not None and r["experiment"] not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {r['experiment']!r}; known: {list(EXPERIMENTS)}")
        if not isinstance(r["trials"], int) or r["trials"] < 1:
            raise ConfigError("trials must be a positive integer")
        if not isinstance(r["seed"], int) or r["seed"] < 0:
            raise ConfigError("seed must be a nonnegative integer")
        for s in r["scales"]:
            if s not in ("B", "F"):
                raise ConfigError(f"unknown scale {s!r}")
        try:
            self.grid()
            self.p()
            self.q()
            self.weight()
            if r["domain"] is not None:
                name = r["domain"].get("name")
                if name not in DOMAINS and name != "pbm":
                    raise ConfigError(f"unknown domain {name!r}")
        except ConfigError:
            raise
        except (VarspaceError, TypeError, KeyError) as exc:
            raise ConfigError(f"invalid component: {exc}") from exc

    # ---- component resolution
    def grid(self, resolution: Optional[int] = None) -> Grid:
        g = self.raw["grid"]
        return Grid(int(g["n"]), int(g["resolution"] if resolution is None else resolution),
                    float(g["half_width"]))

    def levels(self, grid: Grid) -> int:
        J = self.raw["grid"]["J"]
        return default_levels(grid) if J is None else int(J)

    def p(self) -> ExponentField:
        return make_exponent(self.raw["p"], self.n)

    def q(self) -> ExponentField:
        return make_exponent(self.raw["q"], self.n)

    def weight(self) -> WeightSequence:
        return make_weight(self.raw["weight"], self.n)

    def domain(self, pixels: Optional[int] = None) -> Optional[RasterDomain]:
        spec = self.raw["domain"]
        if spec is None:
            return None
        spec = dict(spec)
        if pixels is not None:
            spec["pixels"] = pixels
        return make_domain(spec)

    def nu_max_values(self) -> list[int]:
        lat = self.raw["lattice"]
        vals = lat["nu_max_values"]
        return [int(lat["nu_max"])] if vals is None else [int(v) for v in vals]


# --------------------------------------------------------------------------
# reports


def _clean(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def canonical_json(obj: Any) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def provenance(cfg: ExperimentConfig) -> dict:
    import scipy

    return {"config_hash": cfg.hash, "varspace": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _stats(ratios: Sequence[float]) -> dict:
    r = np.asarray([x for x in ratios if x is not None], dtype=float)
    if r.size == 0:
        return {"count": 0, "min": None, "max": None, "median": None}
    return {"count": int(r.size), "min": float(r.min()), "max": float(r.max()), "median": float(np.median(r))}


@dataclass
class EquivalenceReport:
    experiment: str
    hypotheses: dict
    groups: list  # [{"label", "scale", "trials": [...], "stats"}]
    stability_factor: float
    provenance: dict
    extra: dict = field(default_factory=dict)

    def spreads(self) -> dict:
        out = {}
        for scale in sorted({g["scale"] for g in self.groups}):
            maxima = [g["stats"]["max"] for g in self.groups if g["scale"] == scale and g["stats"]["max"]]
            out[scale] = (max(maxima) / min(maxima)) if maxima else None
        return out

    @property
    def all_finite(self) -> bool:
        for g in self.groups:
            for t in g["trials"]:
                r = t["ratio"]
                if r is not None and not (math.isfinite(r) and r > 0):
                    return False
        return True

    @property
    def verdict(self) -> bool:
        spreads = self.spreads()
        return self.all_finite and all(s is not None and s <= self.stability_factor for s in spreads.values())

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "hypotheses": self.hypotheses,
            "groups": self.groups,
            "spreads": self.spreads(),
            "stability_factor": self.stability_factor,
            "verdict": self.verdict,
            "provenance": self.provenance,
            **self.extra,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["group", "scale", "trial", "norm_a", "norm_b", "ratio"])
        for g in self.groups:
            for t in g["trials"]:
                w.writerow([g["label"], g["scale"], t["trial"], repr(t["norm_a"]), repr(t["norm_b"]),
                            "" if t["ratio"] is None else repr(t["ratio"])])
        return buf.getvalue()


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("VARSPACE_THREADS", "1")))
    except ValueError:
        return 1


def _run_trials(func: Callable[[int, np.random.Generator], Any], trials: int, seed: int, salt: int = 0) -> list:
    """Independent trials with spawned generators; results in trial order."""
    seqs = np.random.SeedSequence([seed, salt]).spawn(trials)
    gens = [np.random.default_rng(s) for s in seqs]
    workers = _workers()
    if workers == 1:
        return [func(i, g) for i, g in enumerate(gens)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, range(trials), gens))


def _trial(i: int, a: float, b: float) -> dict:
    ratio = None if (a == 0 and b == 0) else (a / b if b > 0 else math.inf)
    return {"trial": i, "norm_a": float(a), "norm_b": float(b), "ratio": ratio}


def _group(label, scale, trials) -> dict:
    return {"label": label, "scale": scale, "trials": trials, "stats": _stats([t["ratio"] for t in trials])}


def _coeff_kwargs(cfg: ExperimentConfig) -> dict:
    c = cfg["coefficients"]
    return {"sparsity": float(c["sparsity"]), "magnitude": tuple(c["magnitude"])}


# --------------------------------------------------------------------------
# Q -> E


def random_box_subset(epsilon: float, seed: int) -> Callable:
    """Sub-box of each cube with volume fraction at least ``epsilon``, at a
    position drawn from ``(seed, cube centre)``."""

    def subset(grid: Grid, center: np.ndarray, side: float) -> tuple:
        full = _cube_slices(grid, center, side)
        key = [seed] + [int(round(c * 2 ** 20)) & 0x7FFFFFFF for c in center]
        rng = np.random.default_rng(key)
        out = []
        for sl in full:
            npix = sl.stop - sl.start
            k = int(math.ceil(epsilon ** (1 / grid.n) * npix - 1e-9))
            off = int(rng.integers(0, npix - k + 1)) if npix > k else 0
            out.append(slice(sl.start + off, sl.start + off + k))
        return tuple(out)

    return subset


def _subset_for(cfg: ExperimentConfig, grid: Grid):
    qe = cfg["qe"]
    eps = float(qe["epsilon"])
    if not 0 < eps <= 1:
        raise ConfigError("epsilon must lie in (0, 1]")
    name = qe["subset"]
    if name == "Q":
        return None, 1.0
    if name == "left_half":
        if eps > 0.5:
            raise ConfigError(f"left-half cubes have volume fraction 1/2 < epsilon = {eps}")
        return "left_half", 0.5
    if name == "random_box":
        return random_box_subset(eps, cfg["seed"]), eps
    raise ConfigError(f"unknown E-set generator {name!r}")


def _check_subset_volume(grid: Grid, subset, eps: float, nu_max: int) -> None:
    """Every generated ``E`` must cover at least ``eps`` of its cube's grid cells."""
    from .analysis import SUBSETS

    fn = SUBSETS[subset] if isinstance(subset, str) else subset
    for nu in range(nu_max + 1):
        side = 2.0 ** (-nu)
        for m in atom_window(grid, nu, 1.0)[:64]:
            c = np.asarray(m, dtype=float) * side
            q = np.prod([s.stop - s.start for s in _cube_slices(grid, c, side)])
            e = np.prod([max(s.stop - s.start, 0) for s in fn(grid, c, side)])
            if q == 0 or e < eps * q * (1 - 1e-12):
                raise ConfigError(f"E-set at level {nu} covers {e}/{q} cells, below epsilon = {eps}")


def run_qe_experiment(cfg: ExperimentConfig) -> EquivalenceReport:
    grid = cfg.grid()
    p, q, w = cfg.p(), cfg.q(), cfg.weight()
    subset, eps = _subset_for(cfg, grid)
    nus = cfg.nu_max_values()
    if subset is not None:
        _check_subset_volume(grid, subset, float(cfg["qe"]["epsilon"]), max(nus))
    tol = float(cfg["tolerances"]["norm_tol"])
    kw = _coeff_kwargs(cfg)
    scales = [Scale(s) for s in cfg["scales"]]
    groups = []
    for gi, nu_max in enumerate(nus):
        def one(i, rng, nu_max=nu_max):
            lam = random_sequence(rng, nu_max, grid, d=1.0, **kw)
            out = {}
            for sc in scales:
                a = sequence_norm(lam, w, p, q, sc, grid, tol=tol)
                b = a if subset is None else sequence_norm(lam, w, p, q, sc, grid, subset=subset, tol=tol)
                out[sc.value] = _trial(i, a, b)
            return out

        results = _run_trials(one, cfg["trials"], cfg["seed"], gi)
        for sc in scales:
            groups.append(_group(f"nu_max={nu_max}", sc.value, [r[sc.value] for r in results]))
    hyp = {"epsilon": float(cfg["qe"]["epsilon"]), "subset": cfg["qe"]["subset"],
           "subset_volume_fraction": eps}
    return EquivalenceReport("verify-qe", hyp, groups, float(cfg["tolerances"]["stability_factor"]),
                             provenance(cfg))


# --------------------------------------------------------------------------
# synthesis


def synthesis_hypotheses(cfg: ExperimentConfig, domain: bool) -> dict:
    """Indices entering the decomposition hypotheses; raises on violation."""
    p, q, w = cfg.p(), cfg.q(), cfg.weight()
    K, L = float(cfg["atoms"]["K"]), float(cfg["atoms"]["L"])
    n = cfg.n
    sp = sigma_p(p.p_minus, n)
    spq = sigma_pq(p.p_minus, q.p_minus, n)
    clq = c_log_reciprocal(q)
    hyp = {"K": K, "L": L, "alpha1": w.alpha1, "alpha2": w.alpha2, "alpha": w.alpha,
           "sigma_p": sp, "sigma_pq": spq, "c_log_1_over_q": clq}
    checks = [("K > alpha2", K > w.alpha2, f"K = {K}, alpha2 = {w.alpha2}")]
    if "B" in cfg["scales"]:
        bound = sp - w.alpha1 + clq
        checks.append(("L > sigma_p - alpha1 + c_log(1/q)", L > bound, f"L = {L}, bound = {bound:.6g}"))
    if "F" in cfg["scales"]:
        if not (p.is_bounded and q.is_bounded):
            checks.append(("p+, q+ < inf", False, "the F scale needs bounded exponents"))
        bound = spq - w.alpha1
        checks.append(("L > sigma_pq - alpha1", L > bound, f"L = {L}, bound = {bound:.6g}"))
    if domain:
        bound = sp + clq
        checks.append(("alpha1 > sigma_p + c_log(1/q)", w.alpha1 > bound,
                       f"alpha1 = {w.alpha1}, bound = {bound:.6g}"))
    for name, ok, detail in checks:
        if not ok:
            raise ConfigError(f"hypothesis {name} violated: {detail}")
    hyp["enforced"] = [name for name, _, _ in checks]
    return hyp


def _fits(grid: Grid, center, side: float, d: float) -> bool:
    return max(abs(c) for c in center) + d * side / 2 <= grid.half_width * (1 + 1e-12)


class _FittingLattices(DomainLattices):
    """Domain lattices restricted to cubes whose atoms fit in the grid box."""

    def __init__(self, domain, nu_max, b, d, grid):
        super().__init__(domain, nu_max, b, d)
        from .geometry import CubeKind

        for nu, lat in self.items():
            side = 2.0 ** (-nu)
            for m in lat.indices([CubeKind.INTERIOR, CubeKind.BOUNDARY]):
                if not _fits(grid, lat.cube(m).center, side, d):
                    k = tuple(np.asarray(m) - lat.m_lower)
                    lat.kinds[k] = CubeKind.UNCLASSIFIED.value


def run_synthesis_experiment(cfg: ExperimentConfig) -> EquivalenceReport:
    domain = cfg.domain()
    if domain is not None and not check_MR(domain):
        raise ConfigError(f"domain {domain.name!r} fails the MR audit")
    hyp = synthesis_hypotheses(cfg, domain is not None)
    grid = cfg.grid()
    pou = build_partition(cfg.levels(grid), grid)
    p, q, w = cfg.p(), cfg.q(), cfg.weight()
    lat_cfg = cfg["lattice"]
    b, d = float(lat_cfg["b"]), float(lat_cfg["d"])
    nus = cfg.nu_max_values()
    tol = float(cfg["tolerances"]["norm_tol"])
    kw = _coeff_kwargs(cfg)
    lattices = None if domain is None else _FittingLattices(domain, max(nus), b, d, grid)
    factory = AtomFactory(grid, hyp["K"], hyp["L"], d, lattices)
    scales = [Scale(s) for s in cfg["scales"]]
    groups = []
    for gi, nu_max in enumerate(nus):
        def one(i, rng, nu_max=nu_max):
            lam = random_sequence(rng, nu_max, grid, d, lattices=lattices, **kw)
            f = synthesize(lam, factory, nu_max, grid)
            out = {}
            for sc in scales:
                fn = besov_norm if sc is Scale.B else triebel_norm
                a = fn(f, p, q, w, pou, domain=domain, tol=tol)
                bnorm = sequence_norm(lam, w, p, q, sc, grid, domain=domain, nu_max=nu_max, tol=tol)
                out[sc.value] = _trial(i, a, bnorm)
            return out

        # the factory cache is shared; build sequentially to keep it race-free
        results = [one(i, g) for i, g in enumerate(
            np.random.default_rng(s) for s in np.random.SeedSequence([cfg["seed"], gi]).spawn(cfg["trials"]))]
        for sc in scales:
            groups.append(_group(f"nu_max={nu_max}", sc.value, [r[sc.value] for r in results]))
    extra = {"domain": None if domain is None else domain.name,
             "norm_kind": "zero-extension upper bound" if domain is not None else "full space"}
    return EquivalenceReport("verify-synthesis", hyp, groups, float(cfg["tolerances"]["stability_factor"]),
                             provenance(cfg), extra)


# --------------------------------------------------------------------------
# convolution


def convolution_R(cfg: ExperimentConfig, kind: str) -> tuple[float, dict]:
    p, q = cfg.p(), cfg.q()
    n = cfg.n
    conv = cfg["convolution"]
    R = conv["R"]
    info = {"type": kind}
    if kind == "B":
        clq = c_log_reciprocal(q)
        info["c_log_1_over_q"] = clq
        threshold = n + clq
        R = threshold + 1 if R == "auto" else float(R)
        if not R > threshold:
            raise ConfigError(f"hypothesis R > n + c_log(1/q) violated: R = {R}, bound = {threshold:.6g}")
        info["enforced"] = ["R > n + c_log(1/q)"]
    elif kind == "F":
        R = n + 1 if R == "auto" else float(R)
        if not R > n:
            raise ConfigError(f"hypothesis R > n violated: R = {R}")
        for name, field_ in (("p", p), ("q", q)):
            lo, hi = field_.bounds
            if not (lo > 1 and math.isfinite(hi)):
                raise ConfigError(f"hypothesis 1 < {name}- <= {name}+ < inf violated: [{lo}, {hi}]")
        info["enforced"] = ["R > n", "1 < p- <= p+ < inf", "1 < q- <= q+ < inf"]
    else:
        raise ConfigError(f"unknown convolution type {kind!r}")
    info["R"] = R
    return R, info


def run_convolution_experiment(cfg: ExperimentConfig) -> EquivalenceReport:
    conv = cfg["convolution"]
    kinds = ["B", "F"] if conv["type"] == "both" else [conv["type"]]
    p, q = cfg.p(), cfg.q()
    tol = float(cfg["tolerances"]["norm_tol"])
    nu_max = int(cfg["lattice"]["nu_max"])
    kw = _coeff_kwargs(cfg)
    hyp, groups = {}, []
    for kind in kinds:
        R, info = convolution_R(cfg, kind)
        hyp[kind] = info
        norm = norm_lq_lp if kind == "B" else norm_lp_lq
        for res in conv["resolutions"]:
            grid = cfg.grid(int(res))

            def one(i, rng, grid=grid):
                lam = random_sequence(rng, nu_max, grid, d=1.0, **kw)
                seq = step_functions(lam, cfg.weight(), grid, nu_max)
                a = norm(eta_convolve(seq, R), p, q, tol)
                b = norm(seq, p, q, tol)
                return _trial(i, a, b)

            # same seed per resolution: identical coefficient draws on each grid
            groups.append(_group(f"resolution={res}", kind, _run_trials(one, cfg["trials"], cfg["seed"], 0)))
    return EquivalenceReport("verify-conv", hyp, groups, float(cfg["tolerances"]["stability_factor"]),
                             provenance(cfg))


# --------------------------------------------------------------------------
# audits


def run_domain_audit(cfg: ExperimentConfig) -> dict:
    if cfg["domain"] is None:
        raise ConfigError("audit-domain needs a domain")
    a = cfg["audit"]
    per_res = []
    for pixels in a["resolutions"]:
        dom = cfg.domain(int(pixels))
        sides = audit_sides(dom, int(a["nu_max"]), int(a["margin"]))
        if not sides:
            raise ConfigError(f"raster with {pixels} pixels resolves no cube sides")
        mr = check_MR(dom)
        ir, c_ir = check_IR(dom, sides, float(a["floor"]), int(a["margin"]))
        er, c_er = check_ER(dom, sides, float(a["floor"]), int(a["margin"]))
        census = {}
        for nu in range(int(a["lattice_levels"]) + 1):
            try:
                census[str(nu)] = build_lattice(nu, float(cfg["lattice"]["b"]), float(cfg["lattice"]["d"]),
                                                domain=dom).census()
            except VarspaceError as exc:
                census[str(nu)] = {"error": str(exc)}
        per_res.append({"pixels": int(pixels), "sides": sides, "MR": mr, "IR": ir, "c_IR": c_ir,
                        "ER": er, "c_ER": c_er, "census": census})
    verdicts = [(r["MR"], r["IR"], r["ER"]) for r in per_res]
    stable = all(v == verdicts[0] for v in verdicts)
    return {"experiment": "audit-domain", "domain": cfg["domain"], "results": per_res,
            "stable_across_resolutions": stable, "regular": all(verdicts[0]), "verdict": stable and all(verdicts[0]),
            "provenance": provenance(cfg)}


def run_weight_audit(cfg: ExperimentConfig) -> AdmissibilityReport:
    wa = cfg["weight_audit"]
    box = SampleBox.cube(float(wa["box"]["lo"]), float(wa["box"]["hi"]), cfg.n, int(wa["box"]["samples"]))
    return check_admissible(cfg.weight(), box, int(wa["max_level"]), float(wa["c_cap"]),
                            n_random=int(wa["n_random"]), seed=cfg["seed"])


def weight_audit_report(cfg: ExperimentConfig) -> dict:
    rep = run_weight_audit(cfg)
    w = cfg.weight()
    return {"experiment": "audit-weights", "weight": w.describe(), "report": rep.to_dict(),
            "verdict": rep.passed, "provenance": provenance(cfg)}


# --------------------------------------------------------------------------
# single evaluations


def make_function(spec: dict, grid: Grid, rng: Optional[np.random.Generator] = None) -> GridFunction:
    spec = dict(spec)
    name = spec.pop("name", None)
    x = grid.points
    if name == "indicator":
        lo, hi = float(spec.get("lo", 0.0)), float(spec.get("hi", 1.0))
        return GridFunction(np.all((x >= lo) & (x < hi), axis=-1).astype(float) * float(spec.get("height", 1.0)),
                            grid)
    if name == "gaussian":
        s = float(spec.get("sigma", 0.25))
        return GridFunction(np.exp(-np.sum(x * x, axis=-1) / (2 * s * s)), grid)
    if name == "plane_wave":
        k = float(spec.get("frequency", 3.0))
        return GridFunction(np.cos(k * x[..., 0]), grid)
    raise ConfigError(f"unknown function {name!r}; known: indicator, gaussian, plane_wave")


def run_norm(cfg: ExperimentConfig) -> dict:
    grid = cfg.grid()
    f = make_function(cfg["function"], grid)
    space = cfg["norm"]["space"]
    tol = float(cfg["tolerances"]["norm_tol"])
    p = cfg.p()
    if space == "lp":
        value = luxemburg_norm(f, p, tol)
    elif space in ("besov", "triebel"):
        pou = build_partition(cfg.levels(grid), grid)
        fn = besov_norm if space == "besov" else triebel_norm
        value = fn(f, p, cfg.q(), cfg.weight(), pou, domain=cfg.domain(), tol=tol)
    else:
        raise ConfigError(f"unknown space {space!r}; known: lp, besov, triebel")
    return {"experiment": "norm", "space": space, "function": cfg["function"], "value": value,
            "verdict": bool(math.isfinite(value)), "provenance": provenance(cfg)}


def _explicit_sequence(cfg: ExperimentConfig, d: float) -> Optional[CoefficientSequence]:
    rows = cfg["coefficients"]["explicit"]
    if rows is None:
        return None
    try:
        return CoefficientSequence({(int(nu), tuple(m)): float(v) for nu, m, v in rows}, d=d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"explicit coefficients must be [level, [m...], value] rows: {exc}") from exc


def run_synthesize(cfg: ExperimentConfig) -> tuple[dict, GridFunction]:
    grid = cfg.grid()
    lat = cfg["lattice"]
    d = float(lat["d"])
    nu_max = int(lat["nu_max"])
    K, L = float(cfg["atoms"]["K"]), float(cfg["atoms"]["L"])
    lam = _explicit_sequence(cfg, d)
    if lam is None:
        lam = random_sequence(np.random.default_rng(cfg["seed"]), nu_max, grid, d, **_coeff_kwargs(cfg))
    factory = AtomFactory(grid, K, L, d)
    f = synthesize(lam, factory, max(nu_max, lam.max_level), grid)
    p, q, w = cfg.p(), cfg.q(), cfg.weight()
    tol = float(cfg["tolerances"]["norm_tol"])
    pou = build_partition(cfg.levels(grid), grid)
    norms = {}
    for sc in cfg["scales"]:
        fn = besov_norm if sc == "B" else triebel_norm
        norms[sc] = {"function": fn(f, p, q, w, pou, tol=tol),
                     "sequence": sequence_norm(lam, w, p, q, sc, grid, nu_max=max(nu_max, lam.max_level), tol=tol)}
    coeffs = [[nu, list(m), v] for (nu, m), v in sorted(lam.entries.items())]
    rep = {"experiment": "synthesize", "coefficients": coeffs, "norms": norms, "K": K, "L": L,
           "sup_abs": float(np.max(np.abs(f.values))), "verdict": True, "provenance": provenance(cfg)}
    return rep, f
