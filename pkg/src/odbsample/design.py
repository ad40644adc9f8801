"""Continuous D/A-optimal designs on finite candidate sets, and their rounding.

The solver is a Fedorov-Wynn vertex-direction ascent started from q
well-spread candidates.  Each iteration moves mass toward the candidate of
largest sensitivity; when deleting the weakest support point outright and
handing its mass to that candidate gains more, the solver takes that drop
step instead.  Step lengths are exact for D and found by golden-section
search for A.  Termination is by the equivalence
theorem: the design is certified once no candidate's sensitivity exceeds the
bound by more than a relative ``tolerance``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import linalg
from .model import (
    BoxTransform,
    Criterion,
    Dataset,
    DesignMeasure,
    FeatureBasis,
    Family,
    ModelSpec,
    glm_weights,
    info_matrix_of_design,
)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class DesignError(ValueError):
    pass


@dataclass(frozen=True)
class SolverSettings:
    tolerance: float = 1e-4
    max_iterations: int = 10_000
    weight_prune_threshold: float = 1e-6
    support_merge_distance: float = 1e-6

    def __post_init__(self):
        for name in ("tolerance", "max_iterations", "weight_prune_threshold", "support_merge_distance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


# ---------------------------------------------------------------- candidates


@dataclass(frozen=True)
class CandidateSet:
    points: np.ndarray
    mode: str = "explicit"

    def __post_init__(self):
        pts = np.atleast_2d(np.array(self.points, dtype=float))
        if np.any(np.abs(pts) > 1.0 + 1e-12):
            raise ValueError("candidate points must lie in [-1, 1]^p")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @classmethod
    def grid(cls, p: int, levels: int) -> "CandidateSet":
        if levels < 2:
            raise ValueError("grid needs at least two levels per axis")
        axis = np.linspace(-1.0, 1.0, levels)
        pts = np.array(list(itertools.product(axis, repeat=p)))
        return cls(pts, "grid")

    @classmethod
    def from_rows(cls, data: Dataset, transform: BoxTransform) -> "CandidateSet":
        z = transform.apply(data.covariates)
        return cls(np.unique(z, axis=0), "dataset-rows")

    @classmethod
    def default(cls, basis: FeatureBasis, family: Family = Family.LINEAR, data: Dataset | None = None,
                transform: BoxTransform | None = None) -> "CandidateSet":
        """Two-level grid for first-order bases, three-level grid for quadratic
        bases with p <= 8, transformed dataset rows otherwise (and always for
        logistic models when data are available)."""
        if data is not None and (Family.parse(family) is Family.LOGISTIC or basis.degree > 2
                                 or (basis.degree == 2 and basis.p > 8)):
            return cls.from_rows(data, transform if transform is not None else _fit(data))
        if basis.degree <= 1:
            return cls.grid(basis.p, 2)
        if basis.degree == 2 and basis.p <= 8:
            return cls.grid(basis.p, 3)
        if data is None:
            raise DesignError("no default candidate set for this basis without data")
        return cls.from_rows(data, transform if transform is not None else _fit(data))


def _fit(data):
    from .model import fit_box_transform

    return fit_box_transform(data)


# ---------------------------------------------------------------- results


@dataclass(frozen=True)
class OptimalDesign:
    """Output of :func:`solve_continuous_design`.

    ``info`` and ``info_inv`` are the per-unit information matrix of the
    design and its inverse, kept for repeated efficiency evaluations.
    """

    design: DesignMeasure
    criterion: Criterion
    certified: bool
    max_sensitivity: float
    bound: float
    iterations: int
    info: np.ndarray = field(repr=False)
    info_inv: np.ndarray = field(repr=False)

    @property
    def support(self):
        return self.design.support

    @property
    def weights(self):
        return self.design.weights

    def to_dict(self) -> dict:
        return {
            "support": self.design.support.tolist(),
            "weights": self.design.weights.tolist(),
            "criterion": self.criterion.value,
            "certified": bool(self.certified),
            "max_sensitivity": float(self.max_sensitivity),
            "bound": float(self.bound),
            "iterations": int(self.iterations),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def design_from_dict(d: dict) -> DesignMeasure:
    return DesignMeasure.normalized(d["support"], d["weights"])


# ---------------------------------------------------------------- sensitivities


def _sensitivities(g: np.ndarray, m_inv: np.ndarray, c: Criterion) -> np.ndarray:
    b = g @ m_inv
    if c is Criterion.D:
        return np.einsum("ij,ij->i", b, g)
    return np.einsum("ij,ij->i", b, b)


def directional_derivative(x, design: DesignMeasure, model: ModelSpec, c: Criterion | str) -> float:
    """Sensitivity at ``x``: w f^T M^-1 f for D, w f^T M^-2 f for A.

    At an optimal design its maximum over the design space is q (D) or
    tr(M^-1) (A).
    """
    c = Criterion.parse(c)
    m_inv = linalg.inv(info_matrix_of_design(design, model))
    f = np.atleast_2d(model.basis.expand(np.atleast_2d(x)))
    g = f * np.sqrt(glm_weights(f, model))[:, None]
    out = _sensitivities(g, m_inv, c)
    return float(out[0]) if np.ndim(x) == 1 else out


def sensitivity_bound(m_inv: np.ndarray, c: Criterion) -> float:
    return float(m_inv.shape[0]) if c is Criterion.D else float(np.trace(m_inv))


# ---------------------------------------------------------------- solver


def _initial_support(g: np.ndarray) -> np.ndarray:
    """q well-spread candidates from a column-pivoted QR of G^T."""
    q = g.shape[1]
    _, r, piv = sla.qr(g.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size < q or diag[q - 1] < 1e-10 * diag[0]:
        raise DesignError("candidate set does not span the feature space")
    return np.sort(piv[:q])


def _golden_max(fun, lo: float, hi: float, iters: int = 60) -> tuple[float, float]:
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fun(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fun(x1)
    best = max((fun(lo), lo), (fun(hi), hi), (f1, x1), (f2, x2))
    return best[1], best[0]


# Plain Fedorov-Wynn steps for this many iterations; after that, exchange
# steps that move mass off the weakest support point are also considered.
FW_ONLY_ITERATIONS = 1000


def _apply(w, j_from, j_to, amount):
    w = w.copy()
    if j_from is None:
        w *= 1.0 - amount
    else:
        w[j_from] -= amount
    w[j_to] += amount
    return w


def _step_d(m_inv, g, w, d, j_max, j_min):
    """Fedorov-Wynn step toward ``j_max`` or a vertex exchange moving mass
    from ``j_min`` to ``j_max``, whichever gains more log det."""
    q = g.shape[1]
    dmax = d[j_max]
    alpha = (dmax - q) / (q * (dmax - 1.0)) if dmax > 1.0 else 0.0
    alpha = min(max(alpha, 0.0), 1.0 - 1e-12)
    gain_fw = (q - 1) * math.log1p(-alpha) + math.log1p(alpha * (dmax - 1.0)) if alpha > 0 else 0.0

    if j_min != j_max:
        # det ratio after moving delta: 1 + delta (d_a - d_b) - delta^2 (d_a d_b - d_ab^2), concave
        d_b = d[j_min]
        d_ab = float(g[j_min] @ m_inv @ g[j_max])
        curv = max(dmax * d_b - d_ab * d_ab, 0.0)

        def gain(delta):
            ratio = 1.0 + delta * (dmax - d_b) - delta * delta * curv
            return math.log(ratio) if ratio > 0 and delta > 0 else -np.inf

        # a full drop is preferred whenever it beats Fedorov-Wynn
        gain_drop = gain(w[j_min])
        if gain_drop > 0 and gain_drop >= gain_fw:
            return gain_drop, _apply(w, j_min, j_max, w[j_min])
        if curv > 0:
            delta = min(w[j_min], (dmax - d_b) / (2.0 * curv))
            gain_ex = gain(delta)
            if gain_ex > gain_fw:
                return gain_ex, _apply(w, j_min, j_max, delta)
    return gain_fw, _apply(w, None, j_max, alpha)


def _step_a(m_inv, g, w, phi, j_max, j_min):
    """A-criterion analogue of :func:`_step_d`; step lengths come from
    golden-section searches on Sherman-Morrison / Woodbury forms of tr(M^-1)."""
    t = float(np.trace(m_inv))
    gb = g[j_max]
    b = m_inv @ gb
    d_b = float(gb @ b)
    phi_b = phi[j_max]

    def fw(alpha):
        beta = alpha / (1.0 - alpha)
        return -(t - beta * phi_b / (1.0 + beta * d_b)) / (1.0 - alpha)

    alpha, val_fw = _golden_max(fw, 0.0, 1.0 - 1e-9)
    gain_fw = val_fw + t

    if j_min != j_max:
        # rank-2 Woodbury: tr((M + U C U^T)^-1) = t - tr((C^-1 + U^T M^-1 U)^-1 U^T M^-2 U)
        u = np.column_stack([gb, g[j_min]])
        mu = m_inv @ u
        utmu = u.T @ mu
        ell = mu.T @ mu

        def exchange(delta):
            if delta <= 0:
                return 0.0
            k = utmu + np.diag([1.0 / delta, -1.0 / delta])
            det_k = k[0, 0] * k[1, 1] - k[0, 1] * k[1, 0]
            if det_k == 0:
                return -np.inf
            # trace of K^-1 L for a 2 x 2 K
            tr = (k[1, 1] * ell[0, 0] - k[0, 1] * ell[1, 0] - k[1, 0] * ell[0, 1] + k[0, 0] * ell[1, 1]) / det_k
            return tr if t - tr > 0 else -np.inf

        gain_drop = exchange(w[j_min])
        if gain_drop > 0 and gain_drop >= gain_fw:
            return gain_drop, _apply(w, j_min, j_max, w[j_min])
        delta, gain_ex = _golden_max(exchange, 0.0, w[j_min])
        if gain_ex > 0 and gain_ex > gain_fw:
            return gain_ex, _apply(w, j_min, j_max, delta)
    if gain_fw <= 0:
        return 0.0, w
    return gain_fw, _apply(w, None, j_max, alpha)


def _merge_support(points: np.ndarray, weights: np.ndarray, dist: float):
    keep_pts, keep_w = [], []
    for x, wt in zip(points, weights):
        for i, y in enumerate(keep_pts):
            if np.linalg.norm(x - y) <= dist:
                keep_w[i] += wt
                break
        else:
            keep_pts.append(x)
            keep_w.append(wt)
    return np.array(keep_pts), np.array(keep_w)


def solve_continuous_design(candidates: CandidateSet, model: ModelSpec, c: Criterion | str = "D",
                            settings: SolverSettings | None = None) -> OptimalDesign:
    """Maximize log det M (D) or -tr M^-1 (A) over designs on ``candidates``.

    ``model`` must be expressed in the same (box) coordinates as the
    candidates.  The returned design is flagged ``certified`` only when the
    equivalence-theorem check passes after pruning and merging.
    """
    c = Criterion.parse(c)
    settings = settings or SolverSettings()
    f = model.basis.expand(candidates.points)
    lam = glm_weights(f, model)
    g = f * np.sqrt(lam)[:, None]
    n_cand, q = g.shape
    if n_cand < q:
        raise DesignError(f"need at least {q} candidates, got {n_cand}")

    w = np.zeros(n_cand)
    w[_initial_support(g)] = 1.0 / q
    eps = settings.tolerance
    certified = False
    it = 0
    for it in range(1, settings.max_iterations + 1):
        m = (g.T * w) @ g
        m_inv = linalg.inv(m)
        sens = _sensitivities(g, m_inv, c)
        bound = sensitivity_bound(m_inv, c)
        j_max = int(np.argmax(sens))
        if sens[j_max] <= (1.0 + eps) * bound:
            certified = True
            break
        if it <= FW_ONLY_ITERATIONS:
            j_min = j_max
        else:
            supp = np.flatnonzero(w > 0)
            j_min = int(supp[np.argmin(sens[supp])])
        if c is Criterion.D:
            gain, w = _step_d(m_inv, g, w, sens, j_max, j_min)
        else:
            gain, w = _step_a(m_inv, g, w, sens, j_max, j_min)
        w = np.clip(w, 0.0, None)
        w /= w.sum()
        if not gain > 0:
            break

    # prune, merge, and certify the design actually returned
    keep = w >= settings.weight_prune_threshold
    pts, wts = _merge_support(candidates.points[keep], w[keep], settings.support_merge_distance)
    design = DesignMeasure.normalized(pts, wts)
    m = info_matrix_of_design(design, model)
    m_inv = linalg.inv(m)
    sens = _sensitivities(g, m_inv, c)
    bound = sensitivity_bound(m_inv, c)
    max_sens = float(sens.max())
    certified = max_sens <= (1.0 + eps) * bound
    return OptimalDesign(design, c, certified, max_sens, bound, it, m, m_inv)


def ideal_info_matrix(design: DesignMeasure | OptimalDesign, model: ModelSpec) -> np.ndarray:
    """Per-unit information of the ideal (optimal) design."""
    if isinstance(design, OptimalDesign):
        return design.info
    return info_matrix_of_design(design, model)


# ---------------------------------------------------------------- rounding


@dataclass(frozen=True)
class ExactAllocation:
    support: np.ndarray
    counts: np.ndarray

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def round_design(design: DesignMeasure | OptimalDesign, n: int) -> ExactAllocation:
    """Integer counts from continuous weights with the ceil-then-top-up rule.

    Start from ceil((n - k) w_j); rank the residuals n w_j - n_j in
    descending order (lower index first on ties) and keep adding one unit to
    the top-ranked supports with positive residual until the counts total n.
    The ranks are computed once.
    """
    if isinstance(design, OptimalDesign):
        design = design.design
    w = design.weights
    k = w.size
    if n < k:
        raise DesignError(f"sample size {n} is smaller than the number of support points {k}")
    exact = n * w
    if np.allclose(exact, np.round(exact), atol=1e-9, rtol=0):
        return ExactAllocation(design.support, np.round(exact).astype(int))
    counts = np.ceil((n - k) * w - 1e-9).astype(int)
    resid = exact - counts
    order = np.argsort(-resid, kind="stable")
    n_c = int(np.sum(resid > 1e-12)) or k
    short = n - int(counts.sum())
    while short > 0:
        counts[order[: min(short, n_c)]] += 1
        short = n - int(counts.sum())
    return ExactAllocation(design.support, counts)
