"""Monte Carlo comparison of subsampling rules on synthetic Big Datasets.

Covariates are drawn once per study; responses are redrawn for every
replication.  ODB and IBOSS selections depend on the covariates only and are
computed once, SRS and PPS are redrawn ``srs_pps_repeats`` times inside each
replication.  Every random stream is keyed by (seed, label, replication,
repeat) so adding a sampler never perturbs the others.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import os
import sys
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .design import CandidateSet, OptimalDesign, SolverSettings, solve_continuous_design
from .estimators import FitError, fit_features
from .model import (
    BoxTransform,
    Criterion,
    Dataset,
    EfficiencyError,
    Family,
    FeatureBasis,
    ModelSpec,
    efficiency,
    fit_box_transform,
    sample_info,
)
from .samplers import (
    SampleSelection,
    SamplingError,
    iboss_select,
    odb_select,
    pps_select,
    pps_weights,
    srs_select,
)

log = logging.getLogger(__name__)

STUDY_SAMPLERS = ("ODB", "IBOSS", "SRS", "PPS", "FULL")
RANDOM_SAMPLERS = ("SRS", "PPS")


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid study config:\n  " + "\n  ".join(self.problems))


# ---------------------------------------------------------------- seeding


def stream(seed: int, label: str, *keys: int) -> np.random.Generator:
    """Independent generator for a named stream; stable across configs."""
    tag = zlib.crc32(label.encode("utf-8"))
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(tag, *map(int, keys)))
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class StudyConfig:
    seed: int
    N: int
    n: int
    R: int
    model: ModelSpec
    srs_pps_repeats: int = 100
    covariate_law: dict = field(default_factory=lambda: {"kind": "uniform", "low": 0.0, "high": 1.0})
    criteria: tuple[str, ...] = ("D", "A")
    samplers: tuple[str, ...] = ("ODB", "IBOSS", "SRS", "PPS")
    solver: SolverSettings = field(default_factory=SolverSettings)
    candidates: dict = field(default_factory=lambda: {"mode": "default"})
    nominal_theta: tuple[float, ...] | None = None
    distance: str = "euclidean"

    def __post_init__(self):
        problems = _value_problems(self.N, self.n, self.R, self.srs_pps_repeats, self.model.q, self.model.basis.p,
                                   self.criteria, self.samplers, self.covariate_law, self.candidates)
        if self.nominal_theta is not None and len(self.nominal_theta) != self.model.q:
            problems.append(f"nominal_theta needs {self.model.q} entries")
        if problems:
            raise ConfigError(problems)
        object.__setattr__(self, "criteria", tuple(str(c).upper() for c in self.criteria))
        object.__setattr__(self, "samplers", tuple(self.samplers))

    @property
    def p(self) -> int:
        return self.model.basis.p

    @property
    def nominal_model(self) -> ModelSpec:
        if self.nominal_theta is None:
            return self.model
        return ModelSpec(self.model.basis, self.model.family, self.nominal_theta, self.model.sigma2)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed, "N": self.N, "n": self.n, "R": self.R,
            "srs_pps_repeats": self.srs_pps_repeats,
            "model": self.model.to_dict(),
            "nominal_theta": None if self.nominal_theta is None else list(self.nominal_theta),
            "covariate_law": self.covariate_law,
            "criteria": list(self.criteria), "samplers": list(self.samplers),
            "solver": {"tolerance": self.solver.tolerance, "max_iterations": self.solver.max_iterations,
                       "weight_prune_threshold": self.solver.weight_prune_threshold,
                       "support_merge_distance": self.solver.support_merge_distance},
            "candidates": self.candidates, "distance": self.distance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StudyConfig":
        """Build from JSON-like data, reporting every schema problem at once."""
        problems = []
        known = {"seed", "N", "n", "R", "srs_pps_repeats", "model", "nominal_theta", "covariate_law",
                 "criteria", "samplers", "solver", "candidates", "distance", "p", "basis", "family",
                 "theta", "sigma2"}
        for key in d:
            if key not in known:
                problems.append(f"unknown key {key!r}")
        for key in ("seed", "N", "n", "R"):
            if key not in d:
                problems.append(f"missing required key {key!r}")
            elif not isinstance(d[key], int) or isinstance(d[key], bool):
                problems.append(f"{key} must be an integer")
        model = None
        try:
            if "model" in d:
                model = ModelSpec.from_dict(d["model"])
            else:
                p = int(d.get("p", 0))
                model = ModelSpec(FeatureBasis.from_name(d.get("basis", "linear"), p), d.get("family", "linear"),
                                  d.get("theta"), float(d.get("sigma2", 1.0)))
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(f"model: {exc}")
        solver = SolverSettings()
        try:
            solver = SolverSettings(**d.get("solver", {}))
        except (TypeError, ValueError) as exc:
            problems.append(f"solver: {exc}")
        if problems:
            # keep going so one run reports every problem
            ints = {k: d[k] if isinstance(d.get(k), int) else None for k in ("N", "n", "R")}
            problems += _value_problems(ints["N"], ints["n"], ints["R"], d.get("srs_pps_repeats", 100),
                                        model.q if model else None, model.basis.p if model else None,
                                        d.get("criteria", ("D",)), d.get("samplers", ("SRS",)),
                                        d.get("covariate_law", {"kind": "uniform"}),
                                        d.get("candidates", {"mode": "default"}))
            raise ConfigError(problems)
        kwargs = {k: d[k] for k in ("srs_pps_repeats", "covariate_law", "candidates", "distance") if k in d}
        for k in ("criteria", "samplers"):
            if k in d:
                kwargs[k] = tuple(d[k])
        if d.get("nominal_theta") is not None:
            kwargs["nominal_theta"] = tuple(float(v) for v in d["nominal_theta"])
        return cls(seed=d["seed"], N=d["N"], n=d["n"], R=d["R"], model=model, solver=solver, **kwargs)


def _value_problems(N, n, R, repeats, q, p, criteria, samplers, law, candidates) -> list[str]:
    """Range checks on config values; ``None`` entries are skipped."""
    problems = []
    if None not in (N, n, q) and not (N >= n >= q):
        problems.append(f"need N >= n >= q, got N={N}, n={n}, q={q}")
    if R is not None and R < 1:
        problems.append("R must be at least 1")
    if not isinstance(repeats, int) or repeats < 1:
        problems.append("srs_pps_repeats must be a positive integer")
    for c in criteria:
        if str(c).upper() not in ("D", "A"):
            problems.append(f"unknown criterion {c!r}")
    if not criteria:
        problems.append("criteria list is empty")
    for s in samplers:
        if s not in STUDY_SAMPLERS:
            problems.append(f"unknown sampler {s!r}; expected one of {', '.join(STUDY_SAMPLERS)}")
    if p is not None:
        problems += _law_problems(law, p)
    if candidates.get("mode", "default") not in ("default", "grid", "dataset-rows"):
        problems.append(f"unknown candidate mode {candidates.get('mode')!r}")
    return problems


def _law_problems(law: dict, p: int) -> list[str]:
    kind = law.get("kind")
    if kind == "uniform":
        lo = np.broadcast_to(np.asarray(law.get("low", 0.0), float), (p,))
        hi = np.broadcast_to(np.asarray(law.get("high", 1.0), float), (p,))
        return [] if np.all(hi > lo) else ["uniform law needs high > low on every axis"]
    if kind == "gaussian":
        try:
            cov = np.asarray(law["cov"], float)
            mean = np.broadcast_to(np.asarray(law.get("mean", 0.0), float), (p,))
        except (KeyError, ValueError):
            return ["gaussian law needs mean and cov"]
        if cov.shape != (p, p) or np.linalg.eigvalsh(0.5 * (cov + cov.T)).min() <= 0 or mean.shape != (p,):
            return [f"gaussian cov must be a positive definite {p} x {p} matrix"]
        return []
    return [f"unknown covariate law {kind!r}; expected uniform or gaussian"]


# ---------------------------------------------------------------- data generation


def draw_covariates(law: dict, n_rows: int, p: int, rng: np.random.Generator) -> np.ndarray:
    if law["kind"] == "uniform":
        lo = np.broadcast_to(np.asarray(law.get("low", 0.0), float), (p,))
        hi = np.broadcast_to(np.asarray(law.get("high", 1.0), float), (p,))
        return lo + (hi - lo) * rng.random((n_rows, p))
    mean = np.broadcast_to(np.asarray(law.get("mean", 0.0), float), (p,))
    chol = np.linalg.cholesky(np.asarray(law["cov"], float))
    return mean + rng.standard_normal((n_rows, p)) @ chol.T


def draw_response(f: np.ndarray, model: ModelSpec, rng: np.random.Generator) -> np.ndarray:
    eta = f @ model.theta
    if model.family is Family.LOGISTIC:
        pi = 0.5 * (1.0 + np.tanh(0.5 * eta))
        return (rng.random(eta.size) < pi).astype(float)
    return eta + math.sqrt(model.sigma2) * rng.standard_normal(eta.size)


def generate_population(config: StudyConfig, replication: int) -> Dataset:
    """Covariates from stream (seed, "X"); responses from (seed, "Y", replication)."""
    x = draw_covariates(config.covariate_law, config.N, config.p, stream(config.seed, "X"))
    y = draw_response(config.model.basis.expand(x), config.model, stream(config.seed, "Y", replication))
    return Dataset(x, y)


def ols_monte_carlo(f: np.ndarray, theta, sigma2: float, R: int, seed: int) -> np.ndarray:
    """R OLS estimates on a fixed feature matrix with fresh Gaussian errors (R x q)."""
    from .estimators import ols_features

    theta = np.asarray(theta, dtype=float)
    mean = f @ theta
    out = np.empty((R, f.shape[1]))
    for r in range(R):
        noise = stream(seed, "OLS-MC", r).standard_normal(f.shape[0])
        out[r] = ols_features(f, mean + math.sqrt(sigma2) * noise).theta_hat
    return out


# ---------------------------------------------------------------- brute force oracle


def brute_force_best_sample(data: Dataset, model: ModelSpec, c: Criterion | str, n: int,
                            max_subsets: int = 1_000_000, transform: BoxTransform | None = None) -> SampleSelection:
    """Exact maximizer of the criterion over all n-subsets (lexicographic ties)."""
    c = Criterion.parse(c)
    n_rows = data.n_rows
    if not 1 <= n <= n_rows:
        raise SamplingError(f"need 1 <= n <= N, got n={n}, N={n_rows}")
    total = math.comb(n_rows, n)
    if total > max_subsets:
        raise SamplingError(f"C({n_rows},{n}) = {total} subsets exceeds the budget {max_subsets}")
    transform = transform or fit_box_transform(data)
    model_z = model.in_box(transform)
    f = model_z.basis.expand(transform.apply(data.covariates))
    from .model import glm_weights

    g = f * np.sqrt(glm_weights(f, model_z))[:, None]
    subsets = np.array(list(itertools.combinations(range(n_rows), n)), dtype=np.int64).reshape(total, n)
    values = np.empty(total)
    for start in range(0, total, 50_000):
        block = subsets[start:start + 50_000]
        gs = g[block]
        a = np.einsum("bij,bik->bjk", gs, gs)
        values[start:start + block.shape[0]] = _batch_criterion(a, c)
    best = np.nanmax(values)
    if not np.isfinite(best):
        raise SamplingError("every subset has singular information")
    tol = 1e-12 * max(abs(best), 1e-300)
    pick = int(np.flatnonzero(values >= best - tol)[0])
    return SampleSelection(subsets[pick], "ORACLE", None, {"criterion": c.value, "value": float(best),
                                                           "subsets": total})


def _batch_criterion(a: np.ndarray, c: Criterion) -> np.ndarray:
    sign, logdet = np.linalg.slogdet(a)
    scale = np.abs(a).max(axis=(1, 2))
    ok = (sign > 0) & (logdet > np.log(np.maximum(scale, 1e-300)) * a.shape[1] + np.log(linalg.PIVOT_RTOL))
    if c is Criterion.D:
        return np.where(ok, logdet, -np.inf)
    out = np.full(a.shape[0], -np.inf)
    if ok.any():
        out[ok] = -np.trace(np.linalg.inv(a[ok]), axis1=1, axis2=2)
    return out


# ---------------------------------------------------------------- study


@dataclass
class _Context:
    config: StudyConfig
    f_raw: np.ndarray
    f_box: np.ndarray
    model_box: ModelSpec
    references: dict
    fixed: dict          # sampler -> {criterion -> SampleSelection}
    fixed_errors: dict
    pps: object


_CTX: _Context | None = None


def _set_context(ctx: _Context) -> None:
    global _CTX
    _CTX = ctx


def _efficiencies(ctx: _Context, rows: np.ndarray) -> dict:
    """Efficiency per criterion; NaN where the reference design is not optimal enough."""
    m = sample_info(ctx.f_box[rows], ctx.model_box)
    out = {}
    for c, ref in ctx.references.items():
        try:
            out[c] = efficiency(m, ref, c, ctx.config.solver.tolerance)
        except EfficiencyError:
            out[c] = float("nan")
    return out


def _fit(ctx: _Context, rows, y):
    return fit_features(ctx.f_raw[rows], y[rows], ctx.config.model.family)


def run_replication(replication: int, ctx: _Context | None = None) -> dict:
    """All sampler fits and efficiencies for one simulated response vector.

    Sampler and fit failures are recorded in ``errors``; they never raise.
    """
    ctx = ctx or _CTX
    cfg = ctx.config
    y = draw_response(ctx.f_raw, cfg.model, stream(cfg.seed, "Y", replication))
    est, eff, errors, sig = [], [], [], []
    primary = cfg.criteria[0]

    def record_fit(sampler, repeat, rows):
        try:
            res = _fit(ctx, rows, y)
        except (FitError, linalg.SingularMatrixError) as exc:
            errors.append((replication, repeat, sampler, type(exc).__name__, str(exc)))
            return
        est.append((replication, repeat, sampler, res.theta_hat))
        if res.sigma2_hat is not None:
            sig.append((sampler, res.sigma2_hat))

    for sampler in cfg.samplers:
        if sampler in RANDOM_SAMPLERS:
            sums = {c: 0.0 for c in cfg.criteria}
            count = 0
            for rep in range(cfg.srs_pps_repeats):
                rng = stream(cfg.seed, sampler, replication, rep)
                try:
                    if sampler == "SRS":
                        sel = srs_select(cfg.N, cfg.n, rng)
                    else:
                        sel = pps_select(ctx.pps, cfg.n, rng)
                except SamplingError as exc:
                    errors.append((replication, rep, sampler, type(exc).__name__, str(exc)))
                    continue
                record_fit(sampler, rep, sel.rows)
                for c, v in _efficiencies(ctx, sel.rows).items():
                    sums[c] += v
                count += 1
            if count:
                eff += [(replication, sampler, c, sums[c] / count) for c in cfg.criteria]
            continue
        if sampler in ctx.fixed_errors:
            errors.append((replication, 0, sampler, "SamplingError", ctx.fixed_errors[sampler]))
            continue
        sels = ctx.fixed[sampler]
        record_fit(sampler, 0, sels[primary].rows)
        for c in cfg.criteria:
            m_eff = _efficiencies(ctx, sels[c].rows)[c]
            eff.append((replication, sampler, c, m_eff))
    return {"replication": replication, "estimates": est, "efficiencies": eff, "errors": errors,
            "sigma2_hat": sig}


@dataclass
class StudyReport:
    config: dict
    dataset_efficiency: dict
    designs: dict
    mean_efficiency: dict
    mc_covariance: dict
    boxplot: list
    estimates: list
    efficiencies: list
    errors: list
    timings: dict = field(default_factory=dict)

    def summary(self) -> dict:
        """JSON-ready summary; wall-clock timings are left out so reruns are byte-identical."""
        return {
            "config": self.config,
            "dataset_efficiency": self.dataset_efficiency,
            "designs": self.designs,
            "mean_efficiency": self.mean_efficiency,
            "mc_covariance": self.mc_covariance,
            "n_errors": len(self.errors),
            "errors": [list(e) for e in self.errors[:50]],
        }


def summarize(estimates: list, efficiencies: list, samplers, q: int, errors=(), sigma2_hat=()) -> tuple:
    """MC covariance (det, trace), mean efficiencies and boxplot quantiles per sampler."""
    cov_out, box = {}, []
    for sampler in samplers:
        rows = [e[3] for e in estimates if e[2] == sampler]
        if not rows:
            continue
        est = np.array(rows).reshape(len(rows), q)
        entry = {"n_estimates": len(rows),
                 "n_failed": sum(1 for e in errors if e[2] == sampler),
                 "mean_estimate": est.mean(axis=0).tolist()}
        s2 = [v for s, v in sigma2_hat if s == sampler]
        if s2:
            entry["mean_sigma2_hat"] = float(np.mean(s2))
        if len(rows) >= 2:
            cov = np.atleast_2d(np.cov(est, rowvar=False, ddof=1))
            entry.update(covariance=cov.tolist(), determinant=float(np.linalg.det(cov)),
                         trace=float(np.trace(cov)))
        else:
            entry["error"] = "fewer than 2 converged fits"
        cov_out[sampler] = entry
        qs = np.quantile(est, [0.0, 0.25, 0.5, 0.75, 1.0], axis=0)
        for j in range(q):
            box.append((sampler, j, *map(float, qs[:, j])))
    means: dict = {}
    for _, sampler, c, v in efficiencies:
        means.setdefault(sampler, {}).setdefault(c, []).append(v)
    mean_eff = {s: {c: float(np.mean(v)) for c, v in d.items()} for s, d in means.items()}
    return mean_eff, cov_out, box


def _candidates(cfg: StudyConfig, data: Dataset, transform: BoxTransform) -> CandidateSet:
    mode = cfg.candidates.get("mode", "default")
    if mode == "grid":
        return CandidateSet.grid(cfg.p, int(cfg.candidates.get("levels", 2)))
    if mode == "dataset-rows":
        return CandidateSet.from_rows(data, transform)
    return CandidateSet.default(cfg.model.basis, cfg.model.family, data, transform)


def prepare(cfg: StudyConfig) -> tuple[_Context, dict, dict, dict]:
    timings = {}
    t0 = time.perf_counter()
    x = draw_covariates(cfg.covariate_law, cfg.N, cfg.p, stream(cfg.seed, "X"))
    data = Dataset(x)
    transform = fit_box_transform(data)
    model_box = cfg.nominal_model.in_box(transform)
    f_raw = cfg.model.basis.expand(x)
    f_box = model_box.basis.expand(transform.apply(x))
    timings["covariates"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    cands = _candidates(cfg, data, transform)
    designs: dict[str, OptimalDesign] = {}
    for c in cfg.criteria:
        designs[c] = solve_continuous_design(cands, model_box, c, cfg.solver)
        if not designs[c].certified:
            log.warning("%s-optimal design not certified (max sensitivity %.6g, bound %.6g)",
                        c, designs[c].max_sensitivity, designs[c].bound)
    references = {c: d.info for c, d in designs.items()}
    timings["design"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    fixed, fixed_errors = {}, {}
    for sampler in cfg.samplers:
        try:
            if sampler == "ODB":
                fixed["ODB"] = {c: odb_select(data, cfg.nominal_model, c, cfg.n, cfg.distance,
                                              design=designs[c], transform=transform) for c in cfg.criteria}
            elif sampler == "IBOSS":
                sel = iboss_select(data, cfg.n)
                fixed["IBOSS"] = {c: sel for c in cfg.criteria}
            elif sampler == "FULL":
                sel = SampleSelection(np.arange(cfg.N), "FULL")
                fixed["FULL"] = {c: sel for c in cfg.criteria}
        except SamplingError as exc:
            fixed_errors[sampler] = str(exc)
    pps = pps_weights(data, cfg.model, transform) if "PPS" in cfg.samplers else None
    timings["fixed_selections"] = time.perf_counter() - t0

    ctx = _Context(cfg, f_raw, f_box, model_box, references, fixed, fixed_errors, pps)
    data_eff = {c: efficiency(sample_info(f_box, model_box), references[c], c, cfg.solver.tolerance)
                for c in cfg.criteria}
    design_info = {c: {"support_size": d.design.k, "certified": bool(d.certified),
                       "max_sensitivity": d.max_sensitivity, "bound": d.bound, "iterations": d.iterations}
                   for c, d in designs.items()}
    for sampler, sels in fixed.items():
        if sampler == "ODB":
            for c, sel in sels.items():
                design_info[c]["odb"] = {k: v for k, v in sel.metadata.items() if k != "assigned"}
    return ctx, data_eff, design_info, timings


def run_study(cfg: StudyConfig, jobs: int = 1, progress=None) -> StudyReport:
    """Run all R replications; output is independent of ``jobs``."""
    ctx, data_eff, design_info, timings = prepare(cfg)
    t0 = time.perf_counter()
    results = []
    if jobs <= 1:
        for r in range(cfg.R):
            results.append(run_replication(r, ctx))
            if progress:
                progress(r + 1, cfg.R)
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_set_context, initargs=(ctx,)) as pool:
            for i, res in enumerate(pool.map(run_replication, range(cfg.R), chunksize=1)):
                results.append(res)
                if progress:
                    progress(i + 1, cfg.R)
    results.sort(key=lambda r: r["replication"])
    timings["replications"] = time.perf_counter() - t0

    estimates = [e for r in results for e in r["estimates"]]
    efficiencies = [e for r in results for e in r["efficiencies"]]
    errors = [e for r in results for e in r["errors"]]
    sig = [e for r in results for e in r["sigma2_hat"]]
    mean_eff, mc_cov, box = summarize(estimates, efficiencies, cfg.samplers, cfg.model.q, errors, sig)
    return StudyReport(cfg.to_dict(), data_eff, design_info, mean_eff, mc_cov, box, estimates,
                       efficiencies, errors, timings)


# ---------------------------------------------------------------- output files


def _num(v: float) -> str:
    return repr(float(v))


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return _clean(obj.item())
    return obj


def estimates_csv(report: StudyReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replication", "repeat", "sampler", "coefficient", "estimate"])
    for rep, repeat, sampler, theta in report.estimates:
        for j, v in enumerate(theta):
            w.writerow([rep, repeat, sampler, j, _num(v)])
    return buf.getvalue()


def efficiencies_csv(report: StudyReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replication", "sampler", "criterion", "value"])
    for rep, sampler, c, v in report.efficiencies:
        w.writerow([rep, sampler, c, _num(v)])
    return buf.getvalue()


def boxplot_csv(report: StudyReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sampler", "coefficient", "min", "q1", "median", "q3", "max"])
    for sampler, j, *qs in report.boxplot:
        w.writerow([sampler, j, *map(_num, qs)])
    return buf.getvalue()


def write_outputs(report: StudyReport, out_dir: str) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    files = {
        "estimates.csv": estimates_csv(report),
        "efficiencies.csv": efficiencies_csv(report),
        "boxplot.csv": boxplot_csv(report),
        "summary.json": json.dumps(_clean(report.summary()), indent=2) + "\n",
    }
    paths = {}
    for name, text in files.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths[name] = path
    return paths


def stderr_progress(done: int, total: int) -> None:
    print(f"replication {done}/{total}", file=sys.stderr, flush=True)
