"""Subsample selection: ODB, IBOSS, SRS, leverage-PPS and the exchange algorithm.

Every sampler returns a :class:`SampleSelection` holding exactly ``n``
distinct, sorted row indices.  Models are passed in raw covariate
coordinates; samplers that need the design space rescale the covariates to
[-1, 1]^p with a box transform fitted on the data.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .design import (
    CandidateSet,
    DesignError,
    OptimalDesign,
    SolverSettings,
    round_design,
    solve_continuous_design,
)
from .model import (
    BoxTransform,
    Criterion,
    Dataset,
    DesignMeasure,
    ModelSpec,
    fit_box_transform,
    glm_weights,
)

SAMPLERS = ("ODB", "IBOSS", "SRS", "PPS", "EXCHANGE")


class SamplingError(ValueError):
    pass


@dataclass(frozen=True)
class SampleSelection:
    rows: np.ndarray
    sampler: str
    seed: int | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        rows = np.sort(np.asarray(self.rows, dtype=np.int64).ravel())
        if rows.size and np.any(np.diff(rows) == 0):
            raise ValueError("selected rows must be distinct")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return int(self.rows.size)

    def to_dict(self) -> dict:
        return {"sampler": self.sampler, "seed": self.seed, "rows": self.rows.tolist(),
                "metadata": self.metadata}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row"])
        w.writerows([r] for r in self.rows.tolist())
        return buf.getvalue()


def _check_size(n: int, n_rows: int) -> None:
    if n < 1:
        raise SamplingError("sample size must be at least 1")
    if n > n_rows:
        raise SamplingError(f"sample size {n} exceeds the number of rows {n_rows}")


def _smallest(values: np.ndarray, m: int) -> np.ndarray:
    """Indices of the m smallest values, ties broken by lower index."""
    if m <= 0:
        return np.empty(0, dtype=np.int64)
    if m >= values.size:
        return np.argsort(values, kind="stable")
    thr = np.partition(values, m - 1)[m - 1]
    below = np.flatnonzero(values < thr)
    at = np.flatnonzero(values == thr)[: m - below.size]
    out = np.concatenate([below, at])
    return out[np.lexsort((out, values[out]))]


# ---------------------------------------------------------------- ODB


def _feature_distances(fz: np.ndarray, target: np.ndarray, metric: np.ndarray | None) -> np.ndarray:
    diff = fz - target
    if metric is None:
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    d = diff[:, 1:]
    return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", d, metric, d), 0.0))


def odb_select(data: Dataset, model: ModelSpec, c: Criterion | str, n: int, distance: str = "euclidean",
               settings: SolverSettings | None = None, *, design: OptimalDesign | None = None,
               candidates: CandidateSet | None = None, transform: BoxTransform | None = None) -> SampleSelection:
    """Rows nearest, in feature space, to the support of the optimal design.

    The continuous design is rounded to integer counts; supports are visited
    in descending weight order and each takes its count of not-yet-selected
    rows closest to f(x*_j).  ``design`` may be passed to skip the solve.
    """
    c = Criterion.parse(c)
    _check_size(n, data.n_rows)
    transform = transform or fit_box_transform(data)
    model_z = model.in_box(transform)
    if design is None:
        candidates = candidates or CandidateSet.default(model.basis, model.family, data, transform)
        design = solve_continuous_design(candidates, model_z, c, settings)
    meta = {"criterion": c.value, "certified": bool(design.certified),
            "max_sensitivity": float(design.max_sensitivity), "support_size": design.design.k,
            "distance": distance}
    if n == data.n_rows:
        return SampleSelection(np.arange(n), "ODB", None, meta)
    measure = design.design
    if measure.k > n:
        # more support points than rows: keep the n heaviest (lower index on ties)
        keep = np.sort(np.argsort(-measure.weights, kind="stable")[:n])
        measure = DesignMeasure.normalized(measure.support[keep], measure.weights[keep])
        meta["truncated_support"] = True
    try:
        alloc = round_design(measure, n)
    except DesignError as exc:
        raise SamplingError(str(exc)) from None

    fz = model_z.basis.expand(transform.apply(data.covariates))
    metric = None
    if distance == "mahalanobis":
        metric = linalg.inv(np.atleast_2d(np.cov(fz[:, 1:], rowvar=False)))
    elif distance != "euclidean":
        raise ValueError(f"unknown distance {distance!r}")
    f_star = model_z.basis.expand(alloc.support)

    taken = np.zeros(data.n_rows, dtype=bool)
    chosen = []
    assigned = np.zeros(alloc.counts.size, dtype=int)
    for j in np.argsort(-measure.weights, kind="stable"):
        m = int(alloc.counts[j])
        if m == 0:
            continue
        dist = _feature_distances(fz, f_star[j], metric)
        dist[taken] = np.inf
        pick = _smallest(dist, m)
        taken[pick] = True
        chosen.append(pick)
        assigned[j] = pick.size
    meta["counts"] = alloc.counts.tolist()
    meta["assigned"] = assigned.tolist()
    return SampleSelection(np.concatenate(chosen), "ODB", None, meta)


# ---------------------------------------------------------------- IBOSS


def iboss_select(data: Dataset, n: int) -> SampleSelection:
    """Extreme rows per raw covariate: n // (2p) smallest and largest for each.

    The n mod 2p leftover rows go one each to the slots (x1 low, x1 high,
    x2 low, ...) in that order.
    """
    _check_size(n, data.n_rows)
    x = data.covariates
    p = x.shape[1]
    base, rem = divmod(n, 2 * p)
    taken = np.zeros(data.n_rows, dtype=bool)
    counts = []
    for slot in range(2 * p):
        j, high = divmod(slot, 2)
        m = base + (1 if slot < rem else 0)
        vals = -x[:, j] if high else x[:, j].copy()
        vals[taken] = np.inf
        pick = _smallest(vals, m)
        taken[pick] = True
        counts.append(int(pick.size))
    return SampleSelection(np.flatnonzero(taken), "IBOSS", None, {"slot_counts": counts})


# ---------------------------------------------------------------- SRS


def srs_select(n_rows: int, n: int, seed) -> SampleSelection:
    """Simple random sample without replacement."""
    _check_size(n, n_rows)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rows = np.arange(n_rows) if n == n_rows else rng.choice(n_rows, size=n, replace=False)
    return SampleSelection(rows, "SRS", None if isinstance(seed, np.random.Generator) else seed)


# ---------------------------------------------------------------- PPS


@dataclass(frozen=True)
class PpsWeights:
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
            raise ValueError("PPS probabilities must be nonnegative and sum to 1")
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)


def leverages(f: np.ndarray) -> np.ndarray:
    """Diagonal of F (F^T F)^-1 F^T."""
    qmat, r = np.linalg.qr(f)
    diag = np.abs(np.diag(r))
    if diag.min() < linalg.PIVOT_RTOL * diag.max():
        raise linalg.SingularMatrixError("F^T F is singular")
    return np.einsum("ij,ij->i", qmat, qmat)


def pps_weights(data: Dataset, model: ModelSpec, transform: BoxTransform | None = None) -> PpsWeights:
    transform = transform or fit_box_transform(data)
    f = model.basis.expand(transform.apply(data.covariates))
    h = leverages(f)
    return PpsWeights(h / h.sum())


def pps_select(weights: PpsWeights, n: int, seed) -> SampleSelection:
    """n successive draws without replacement, probabilities renormalized.

    Uses exponential keys U^(1/p_i): taking the n largest keys has the same
    law as drawing one unit at a time in proportion to the remaining p_i.
    """
    p = weights.probabilities
    _check_size(n, p.size)
    if np.count_nonzero(p) < n:
        raise SamplingError("fewer units with positive probability than the sample size")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = rng.random(p.size)
    with np.errstate(divide="ignore"):
        keys = np.where(p > 0, np.log(u) / p, -np.inf)
    rows = _smallest(-keys, n)
    return SampleSelection(rows, "PPS", None if isinstance(seed, np.random.Generator) else seed)


# ---------------------------------------------------------------- exchange


def _criterion_of(a: np.ndarray, c: Criterion) -> float:
    if c is Criterion.D:
        return linalg.logdet(a)
    try:
        return -float(np.trace(linalg.inv(a)))
    except linalg.SingularMatrixError:
        return -np.inf


def exchange_select(data: Dataset, model: ModelSpec, c: Criterion | str, n: int, seed, *,
                    max_cycles: int = 1000, max_work: float = 1e9,
                    transform: BoxTransform | None = None) -> SampleSelection:
    """Add-the-best-row / drop-the-least-useful-row local search.

    Starts from a random sample with nonsingular information (up to 50
    draws) and stops when the row just added is the one removed.
    """
    c = Criterion.parse(c)
    _check_size(n, data.n_rows)
    n_rows = data.n_rows
    if float(n_rows) * n > max_work:
        raise SamplingError(f"N*n = {n_rows * n} exceeds the exchange compute budget {max_work:g}")
    if n == n_rows:
        return SampleSelection(np.arange(n), "EXCHANGE", seed, {"cycles": 0})
    transform = transform or fit_box_transform(data)
    model_z = model.in_box(transform)
    f = model_z.basis.expand(transform.apply(data.covariates))
    g = f * np.sqrt(glm_weights(f, model_z))[:, None]

    rng = np.random.default_rng(seed)
    for _ in range(50):
        s = rng.choice(n_rows, size=n, replace=False)
        a = g[s].T @ g[s]
        if not linalg.is_singular(a):
            break
    else:
        raise SamplingError("could not draw a starting sample with nonsingular information")

    start_value = _criterion_of(a, c)
    in_s = np.zeros(n_rows, dtype=bool)
    in_s[s] = True
    members = list(s)
    cycles = 0
    for cycles in range(1, max_cycles + 1):
        a_inv = linalg.inv(a)
        b = g @ a_inv
        d = np.einsum("ij,ij->i", b, g)
        if c is Criterion.D:
            score = d.copy()
        else:
            score = np.einsum("ij,ij->i", b, b) / (1.0 + d)
        score[in_s] = -np.inf
        add = int(np.argmax(score))

        a2 = a + np.outer(g[add], g[add])
        a2_inv = linalg.inv(a2)
        pool = np.array(members + [add])
        gp = g[pool]
        bp = gp @ a2_inv
        dp = np.einsum("ij,ij->i", bp, gp)
        with np.errstate(divide="ignore", invalid="ignore"):
            if c is Criterion.D:
                loss = np.where(dp < 1.0, -np.log1p(-np.minimum(dp, 1.0 - 1e-300)), np.inf)
            else:
                loss = np.where(dp < 1.0, np.einsum("ij,ij->i", bp, bp) / (1.0 - dp), np.inf)
        drop_pos = int(np.argmin(loss))
        drop = int(pool[drop_pos])
        if drop == add:
            break
        members[drop_pos] = add
        in_s[drop] = False
        in_s[add] = True
        a = g[members].T @ g[members]
    meta = {"criterion": c.value, "cycles": cycles, "start_value": start_value,
            "final_value": _criterion_of(a, c)}
    return SampleSelection(np.array(members), "EXCHANGE", seed, meta)
