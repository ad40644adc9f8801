"""Command-line front end: design, quality, sample, simulate, oracle.

Exit codes: 0 success, 1 usage or input error, 2 finished with a numerical
warning (non-certified design, failed fits).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import io as fio
from .design import CandidateSet, DesignError, SolverSettings, solve_continuous_design
from .estimators import FitError, fit
from .model import (
    BoxTransform,
    Criterion,
    Dataset,
    Family,
    FeatureBasis,
    ModelSpec,
    efficiency,
    fit_box_transform,
    info_matrix_of_rows,
)
from .samplers import (
    SAMPLERS,
    SamplingError,
    exchange_select,
    iboss_select,
    odb_select,
    pps_select,
    pps_weights,
    srs_select,
)
from .simulation import ConfigError, StudyConfig, brute_force_best_sample, run_study, stderr_progress, write_outputs

EXIT_OK, EXIT_ERROR, EXIT_WARN = 0, 1, 2
log = logging.getLogger("odbsample")


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------- shared flags


def _add_common(p: argparse.ArgumentParser, data_required: bool = False) -> None:
    p.add_argument("--data", required=data_required, help="input CSV with a header row (default: %(default)s)")
    p.add_argument("--response", default=None, help="name of the response column (default: %(default)s)")
    p.add_argument("--out", default=".", help="output directory (default: %(default)s)")
    p.add_argument("--criterion", default="D", choices=["D", "A"], help="optimality criterion (default: %(default)s)")


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default=None, help="model JSON; flags below override it (default: %(default)s)")
    p.add_argument("--basis", default=None, choices=["linear", "quadratic"],
                   help="regression basis (default: linear, or from --model)")
    p.add_argument("--family", default=None, choices=["linear", "logistic"],
                   help="response family (default: linear, or from --model)")
    p.add_argument("--theta", default=None,
                   help="comma-separated parameter vector; nominal value for logistic designs (default: zeros)")
    p.add_argument("--sigma2", type=float, default=None, help="error variance of the linear model (default: 1)")


def _add_solver(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tolerance", type=float, default=1e-4,
                   help="equivalence-theorem tolerance epsilon (default: %(default)s)")
    p.add_argument("--max-iterations", type=int, default=10000, help="solver iteration cap (default: %(default)s)")
    p.add_argument("--candidates", default="default", choices=["default", "grid", "dataset-rows"],
                   help="candidate set for the design solver (default: %(default)s)")
    p.add_argument("--grid", type=int, default=None,
                   help="levels per axis for grid candidates (default: 2 for linear, 3 for quadratic)")


def _parse_theta(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()], dtype=float)
    except ValueError:
        raise UsageError(f"--theta must be a comma-separated list of numbers, got {text!r}") from None


def _model(args, p: int) -> ModelSpec:
    base = fio.read_json(args.model) if args.model else {}
    if base and "basis" in base:
        basis = FeatureBasis.from_dict(base["basis"])
        if basis.p != p:
            raise UsageError(f"model basis has p={basis.p}, data has {p} covariates")
    else:
        basis = None
    if args.basis is not None or basis is None:
        basis = FeatureBasis.from_name(args.basis or "linear", p)
    family = Family.parse(args.family or base.get("family", "linear"))
    theta = _parse_theta(args.theta) if args.theta else base.get("theta")
    if theta is not None and len(theta) != basis.q:
        raise UsageError(f"theta has {len(theta)} entries but the basis has {basis.q} functions")
    sigma2 = args.sigma2 if args.sigma2 is not None else float(base.get("sigma2", 1.0))
    return ModelSpec(basis, family, theta, sigma2)


def _settings(args) -> SolverSettings:
    return SolverSettings(tolerance=args.tolerance, max_iterations=args.max_iterations)


def _candidates(args, model: ModelSpec, data: Dataset | None, transform: BoxTransform) -> CandidateSet:
    mode = args.candidates
    if mode == "default" and args.grid is not None:
        mode = "grid"
    if mode == "grid":
        levels = args.grid or (2 if model.basis.degree == 1 else model.basis.degree + 1)
        return CandidateSet.grid(model.basis.p, levels)
    if mode == "dataset-rows":
        if data is None:
            raise UsageError("--candidates dataset-rows needs --data")
        return CandidateSet.from_rows(data, transform)
    return CandidateSet.default(model.basis, model.family, data, transform)


def _load(args) -> Dataset:
    return fio.read_dataset(args.data, args.response)


def _out(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _require_seed(args, why: str) -> int:
    if args.seed is None:
        raise UsageError(f"--seed is required {why}; wall-clock seeding is never used")
    return args.seed


def _solve(args, model, data, transform, c):
    model_z = model.in_box(transform)
    cands = _candidates(args, model, data, transform)
    return solve_continuous_design(cands, model_z, c, _settings(args))


# ---------------------------------------------------------------- commands


def cmd_design(args) -> int:
    if args.data:
        data = _load(args)
        transform = fit_box_transform(data)
        p = data.p
    else:
        if args.dim is None:
            raise UsageError("design needs --data or --dim")
        data, p = None, args.dim
        transform = BoxTransform.identity(p)
    model = _model(args, p)
    c = Criterion.parse(args.criterion)
    od = _solve(args, model, data, transform, c)
    out = od.to_dict()
    if data is not None:
        out["support_raw"] = transform.invert(od.design.support).tolist()
        out["box"] = transform.to_dict()
    path = os.path.join(_out(args), "design.json")
    fio.write_json(path, out)
    print(json.dumps({k: out[k] for k in ("criterion", "certified", "max_sensitivity", "bound", "iterations")}))
    print(f"support points: {od.design.k}; wrote {path}")
    if not od.certified:
        log.warning("design not certified: max sensitivity %.6g > (1+eps) * %.6g", od.max_sensitivity, od.bound)
        return EXIT_WARN
    return EXIT_OK


def cmd_quality(args) -> int:
    data = _load(args)
    transform = fit_box_transform(data) if data.n_rows > 1 else _degenerate_box(data)
    model = _model(args, data.p)
    c = Criterion.parse(args.criterion)
    od = _solve(args, model, data, transform, c)
    m = info_matrix_of_rows(data, np.arange(data.n_rows), model.in_box(transform), transform)
    eff = efficiency(m, od.info, c, args.tolerance)
    if eff == 0.0:
        log.warning("dataset information matrix is singular; efficiency is 0")
    report = {"criterion": c.value, "dataset_efficiency": eff, "certified": bool(od.certified)}
    fio.write_json(os.path.join(_out(args), "quality.json"), report)
    print(json.dumps(report))
    return EXIT_OK if od.certified else EXIT_WARN


def _degenerate_box(data: Dataset) -> BoxTransform:
    # a single row has no range; centre a unit box on it
    x = data.covariates[0]
    return BoxTransform(x - 1.0, x + 1.0)


def cmd_sample(args) -> int:
    data = _load(args)
    model = _model(args, data.p)
    transform = fit_box_transform(data)
    c = Criterion.parse(args.criterion)
    sampler = args.sampler.upper()
    if sampler not in SAMPLERS:
        raise UsageError(f"unknown sampler {args.sampler!r}; expected one of {', '.join(SAMPLERS)}")
    designs = {k: _solve(args, model, data, transform, k) for k in (Criterion.D, Criterion.A)}
    if sampler == "ODB":
        sel = odb_select(data, model, c, args.n, args.distance, design=designs[c], transform=transform)
    elif sampler == "IBOSS":
        sel = iboss_select(data, args.n)
    elif sampler == "SRS":
        sel = srs_select(data.n_rows, args.n, _require_seed(args, "for SRS"))
    elif sampler == "PPS":
        sel = pps_select(pps_weights(data, model, transform), args.n, _require_seed(args, "for PPS"))
    else:
        sel = exchange_select(data, model, c, args.n, _require_seed(args, "for the exchange sampler"),
                              transform=transform)
    out = _out(args)
    fio.write_text(os.path.join(out, "selection.json"), sel.to_json() + "\n")
    fio.write_text(os.path.join(out, "selection.csv"), sel.to_csv())
    fio.write_rows_csv(os.path.join(out, "subsample.csv"), data, sel.rows)
    m = info_matrix_of_rows(data, sel.rows, model.in_box(transform), transform)
    effs = {k.value: efficiency(m, od.info, k, args.tolerance) for k, od in designs.items()}
    line = {"sampler": sel.sampler, "n": sel.n, "D_efficiency": effs["D"], "A_efficiency": effs["A"]}
    status = EXIT_OK
    if data.response is not None and args.fit:
        try:
            res = fit(data, sel.rows, model)
            fio.write_text(os.path.join(out, "fit.json"), res.to_json() + "\n")
        except FitError as exc:
            log.warning("fit failed: %s", exc)
            status = EXIT_WARN
    print(json.dumps(line))
    if not all(od.certified for od in designs.values()):
        log.warning("a reference design is not certified; efficiencies are approximate")
        status = EXIT_WARN
    return status


def cmd_simulate(args) -> int:
    raw = fio.read_json(args.config)
    if args.seed is not None:
        raw = {**raw, "seed": args.seed}
    cfg = StudyConfig.from_dict(raw)
    report = run_study(cfg, jobs=args.jobs, progress=None if args.quiet else stderr_progress)
    paths = write_outputs(report, _out(args))
    for stage, secs in report.timings.items():
        print(f"time {stage}: {secs:.2f} s", file=sys.stderr)
    print(json.dumps(report.mean_efficiency))
    print("wrote " + ", ".join(sorted(paths.values())))
    certified = all(d["certified"] for d in report.designs.values())
    if not certified:
        log.warning("at least one optimal design is not certified")
    if report.errors:
        log.warning("%d sampler or fit failures recorded in summary.json", len(report.errors))
    return EXIT_OK if certified and not report.errors else EXIT_WARN


def cmd_oracle(args) -> int:
    data = _load(args)
    model = _model(args, data.p)
    sel = brute_force_best_sample(data, model, args.criterion, args.n, args.max_subsets)
    out = _out(args)
    fio.write_text(os.path.join(out, "oracle.json"), sel.to_json() + "\n")
    fio.write_text(os.path.join(out, "oracle.csv"), sel.to_csv())
    print(json.dumps({"rows": sel.rows.tolist(), "value": sel.metadata["value"]}))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="odbsample", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="solve a D- or A-optimal continuous design")
    _add_common(p)
    p.add_argument("--dim", type=int, default=None, help="design-space dimension when no --data (default: %(default)s)")
    _add_model(p)
    _add_solver(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("quality", help="efficiency of a whole dataset against the optimal design")
    _add_common(p, data_required=True)
    _add_model(p)
    _add_solver(p)
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("sample", help="select a subsample and report its efficiencies")
    _add_common(p, data_required=True)
    _add_model(p)
    _add_solver(p)
    p.add_argument("--sampler", default="ODB", help=f"one of {', '.join(SAMPLERS)} (default: %(default)s)")
    p.add_argument("--n", type=int, required=True, help="subsample size")
    p.add_argument("--distance", default="euclidean", choices=["euclidean", "mahalanobis"],
                   help="ODB matching distance in feature space (default: %(default)s)")
    p.add_argument("--seed", type=int, default=None, help="seed for SRS, PPS and exchange (default: none)")
    p.add_argument("--fit", action="store_true", help="also fit the model on the subsample (needs --response)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("simulate", help="run a Monte Carlo comparison study from a JSON config")
    p.add_argument("--config", required=True, help="study config JSON")
    p.add_argument("--out", default="study", help="output directory (default: %(default)s)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed (default: none)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for replications (default: %(default)s)")
    p.add_argument("--quiet", action="store_true", help="no progress counter on stderr")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="exhaustive best subsample for a tiny dataset")
    _add_common(p, data_required=True)
    _add_model(p)
    p.add_argument("--n", type=int, required=True, help="subsample size")
    p.add_argument("--max-subsets", type=int, default=1_000_000, help="enumeration budget (default: %(default)s)")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (fio.InputError, UsageError, ConfigError, SamplingError, DesignError, FitError, ValueError,
            np.linalg.LinAlgError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
