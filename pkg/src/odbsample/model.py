"""Feature bases, super-population models, information matrices and efficiencies."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import linalg

SYMMETRY_TOL = 1e-10


class Criterion(str, enum.Enum):
    D = "D"
    A = "A"

    @classmethod
    def parse(cls, value: "Criterion | str") -> "Criterion":
        if isinstance(value, Criterion):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown criterion {value!r}; expected D or A") from None


class Family(str, enum.Enum):
    LINEAR = "linear-gaussian"
    LOGISTIC = "logistic"

    @classmethod
    def parse(cls, value: "Family | str") -> "Family":
        if isinstance(value, Family):
            return value
        aliases = {"linear": cls.LINEAR, "gaussian": cls.LINEAR, "logit": cls.LOGISTIC}
        v = str(value).lower()
        if v in aliases:
            return aliases[v]
        try:
            return cls(v)
        except ValueError:
            raise ValueError(f"unknown family {value!r}; expected linear or logistic") from None


class EfficiencyError(ValueError):
    """An efficiency exceeded 1 by more than the solver tolerance.

    This means the reference matrix is not optimal over a design space that
    contains the points generating the compared matrix.
    """


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.flags.writeable = False
    return out


# ---------------------------------------------------------------- data


@dataclass(frozen=True)
class Dataset:
    """Response plus an N x p covariate matrix.

    ``column_names`` holds p + 1 labels, response first.  ``response`` may be
    None when only the covariates matter (design and quality work).
    """

    covariates: np.ndarray
    response: np.ndarray | None = None
    column_names: tuple[str, ...] = ()

    def __post_init__(self):
        x = np.array(self.covariates, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError(f"covariates must be a non-empty N x p matrix, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("covariates contain non-finite entries")
        x.flags.writeable = False
        object.__setattr__(self, "covariates", x)
        if self.response is not None:
            y = np.array(self.response, dtype=float).ravel()
            if y.shape[0] != x.shape[0]:
                raise ValueError(f"response has length {y.shape[0]}, expected {x.shape[0]}")
            if not np.all(np.isfinite(y)):
                raise ValueError("response contains non-finite entries")
            y.flags.writeable = False
            object.__setattr__(self, "response", y)
        names = tuple(self.column_names) or ("y",) + tuple(f"x{j + 1}" for j in range(x.shape[1]))
        if len(names) != x.shape[1] + 1:
            raise ValueError(f"expected {x.shape[1] + 1} column names, got {len(names)}")
        object.__setattr__(self, "column_names", names)

    @property
    def n_rows(self) -> int:
        return self.covariates.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]

    def with_response(self, y) -> "Dataset":
        return Dataset(self.covariates, y, self.column_names)


# ---------------------------------------------------------------- bases


@dataclass(frozen=True)
class FeatureBasis:
    """Monomial basis; ``exponents[0]`` is always the intercept."""

    p: int
    exponents: tuple[tuple[int, ...], ...]
    kind: str = "custom"

    def __post_init__(self):
        exps = tuple(tuple(int(e) for e in row) for row in self.exponents)
        if self.p < 1:
            raise ValueError("basis needs p >= 1")
        if len(exps) < 2:
            raise ValueError("basis needs at least two functions")
        if any(len(row) != self.p for row in exps):
            raise ValueError("every monomial needs one exponent per covariate")
        if any(e < 0 for row in exps for e in row):
            raise ValueError("monomial exponents must be nonnegative")
        if any(exps[0]):
            raise ValueError("the first basis function must be the intercept")
        if len(set(exps)) != len(exps):
            raise ValueError("duplicate monomials in basis")
        object.__setattr__(self, "exponents", exps)

    @classmethod
    def linear(cls, p: int) -> "FeatureBasis":
        eye = np.eye(p, dtype=int)
        return cls(p, ((0,) * p,) + tuple(tuple(r) for r in eye), "linear")

    @classmethod
    def quadratic(cls, p: int) -> "FeatureBasis":
        """Ordering: 1, x_1..x_p, x_1^2..x_p^2, then x_i x_j for i < j."""
        eye = np.eye(p, dtype=int)
        rows = [(0,) * p] + [tuple(r) for r in eye] + [tuple(2 * r) for r in eye]
        rows += [tuple(eye[i] + eye[j]) for i, j in itertools.combinations(range(p), 2)]
        return cls(p, tuple(rows), "quadratic")

    @classmethod
    def from_name(cls, name: str, p: int) -> "FeatureBasis":
        if name in ("linear", "linear-first-order"):
            return cls.linear(p)
        if name in ("quadratic", "full-quadratic"):
            return cls.quadratic(p)
        raise ValueError(f"unknown basis {name!r}; expected linear or quadratic")

    @property
    def q(self) -> int:
        return len(self.exponents)

    @property
    def degree(self) -> int:
        return max(sum(row) for row in self.exponents)

    def expand(self, x: np.ndarray) -> np.ndarray:
        """Feature matrix for the rows of ``x`` (shape N x q)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.p:
            raise ValueError(f"point dimension {x.shape[1]} does not match basis dimension {self.p}")
        out = np.ones((x.shape[0], self.q))
        for col, row in enumerate(self.exponents):
            for j, e in enumerate(row):
                if e == 1:
                    out[:, col] *= x[:, j]
                elif e > 1:
                    out[:, col] *= x[:, j] ** e
        return out[0] if single else out

    def to_dict(self) -> dict:
        return {"kind": self.kind, "p": self.p, "exponents": [list(r) for r in self.exponents]}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureBasis":
        if d.get("kind") in ("linear", "quadratic") and "exponents" not in d:
            return cls.from_name(d["kind"], int(d["p"]))
        return cls(int(d["p"]), tuple(tuple(r) for r in d["exponents"]), d.get("kind", "custom"))


def expand_features(x, basis: FeatureBasis) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expand_features takes a single point; use basis.expand for matrices")
    if not np.all(np.isfinite(x)):
        raise ValueError("point has non-finite coordinates")
    return basis.expand(x)


# ---------------------------------------------------------------- box transform


@dataclass(frozen=True)
class BoxTransform:
    """Affine map of each covariate from [lo, hi] onto [-1, 1]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = _frozen(self.lo), _frozen(self.hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be vectors of equal length")
        if not np.all(hi > lo):
            bad = np.flatnonzero(~(hi > lo)).tolist()
            raise ValueError(f"covariates {bad} are constant; cannot rescale")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def identity(cls, p: int) -> "BoxTransform":
        return cls(-np.ones(p), np.ones(p))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.hi + self.lo)

    @property
    def half_width(self) -> np.ndarray:
        return 0.5 * (self.hi - self.lo)

    def apply(self, x) -> np.ndarray:
        z = (np.asarray(x, dtype=float) - self.center) / self.half_width
        return np.clip(z, -1.0, 1.0)

    def invert(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.half_width + self.center

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


def fit_box_transform(data: Dataset | np.ndarray) -> BoxTransform:
    x = data.covariates if isinstance(data, Dataset) else np.atleast_2d(np.asarray(data, float))
    return BoxTransform(x.min(axis=0), x.max(axis=0))


# ---------------------------------------------------------------- model


@dataclass(frozen=True)
class ModelSpec:
    basis: FeatureBasis
    family: Family = Family.LINEAR
    theta: np.ndarray = field(default=None)
    sigma2: float = 1.0

    def __post_init__(self):
        fam = Family.parse(self.family)
        object.__setattr__(self, "family", fam)
        theta = np.zeros(self.basis.q) if self.theta is None else self.theta
        theta = _frozen(np.ravel(theta))
        if theta.shape[0] != self.basis.q:
            raise ValueError(f"theta has {theta.shape[0]} entries, basis has {self.basis.q} functions")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        object.__setattr__(self, "theta", theta)
        if fam is Family.LINEAR and not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive for the linear-gaussian family")

    @property
    def q(self) -> int:
        return self.basis.q

    def linear_predictor(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features) @ self.theta

    def in_box(self, transform: BoxTransform) -> "ModelSpec":
        """Same model written in box coordinates z, where x = transform.invert(z).

        The basis must be closed under affine maps of the covariates (linear
        and full-quadratic bases are).  Raises ValueError otherwise.
        """
        if self.family is Family.LINEAR:
            return self
        basis = self.basis
        levels = np.linspace(-1.0, 1.0, basis.degree + 1)
        # enough points to pin down a polynomial of the basis degree
        rng = np.random.default_rng(0)
        z = rng.choice(levels, size=(max(4 * basis.q, 64), basis.p))
        z = np.vstack([z, np.zeros(basis.p)])
        fz = basis.expand(z)
        target = basis.expand(transform.invert(z)) @ self.theta
        theta_z, _, rank, _ = np.linalg.lstsq(fz, target, rcond=None)
        if rank < basis.q:
            raise ValueError("could not build a unisolvent point set for this basis")
        if not np.allclose(fz @ theta_z, target, atol=1e-9 * max(1.0, np.abs(target).max())):
            raise ValueError("basis is not closed under affine maps; cannot move theta to box coordinates")
        return ModelSpec(basis, self.family, theta_z, self.sigma2)

    def to_dict(self) -> dict:
        return {
            "basis": self.basis.to_dict(),
            "family": self.family.value,
            "theta": self.theta.tolist(),
            "sigma2": self.sigma2,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(FeatureBasis.from_dict(d["basis"]), d.get("family", "linear"), d.get("theta"),
                   float(d.get("sigma2", 1.0)))


def logistic(eta) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(eta, dtype=float)))


def glm_weights(features: np.ndarray, model: ModelSpec) -> np.ndarray:
    """Per-row information weights pi (1 - pi) for logistic, ones for linear."""
    features = np.atleast_2d(features)
    if model.family is Family.LINEAR:
        return np.ones(features.shape[0])
    # pi (1 - pi) = 1 / (4 cosh^2(eta / 2)): symmetric, <= 1/4, no cancellation
    with np.errstate(over="ignore"):
        return 0.25 / np.cosh(0.5 * (features @ model.theta)) ** 2


def glm_weight(x, model: ModelSpec) -> float:
    return float(glm_weights(expand_features(x, model.basis), model)[0])


# ---------------------------------------------------------------- designs


@dataclass(frozen=True)
class DesignMeasure:
    """Finite-support probability measure on [-1, 1]^p."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        s = np.atleast_2d(np.array(self.support, dtype=float))
        w = np.array(self.weights, dtype=float).ravel()
        if s.shape[0] < 1 or s.shape[0] != w.shape[0]:
            raise ValueError("support and weights must be non-empty and of equal length")
        if np.any(w < 0):
            raise ValueError("design weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"design weights sum to {w.sum()!r}, not 1")
        if np.any(np.abs(s) > 1.0 + 1e-12):
            raise ValueError("support points must lie in [-1, 1]^p")
        s.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "weights", w)

    @property
    def k(self) -> int:
        return self.support.shape[0]

    @classmethod
    def normalized(cls, support, weights) -> "DesignMeasure":
        w = np.asarray(weights, dtype=float)
        return cls(support, w / w.sum())


def info_matrix(features: np.ndarray, weights=None) -> np.ndarray:
    """sum_i weights_i f_i f_i^T, symmetrized."""
    f = np.atleast_2d(features)
    m = (f.T * weights) @ f if weights is not None else f.T @ f
    return 0.5 * (m + m.T)


def info_matrix_of_design(design: DesignMeasure, model: ModelSpec) -> np.ndarray:
    f = model.basis.expand(design.support)
    return info_matrix(f, design.weights * glm_weights(f, model))


def info_matrix_of_rows(data: Dataset, rows, model: ModelSpec, transform: BoxTransform) -> np.ndarray:
    """Per-unit information (1/n) sum w f f^T over the transformed selected rows.

    ``model`` must already be in box coordinates (see :meth:`ModelSpec.in_box`).
    """
    rows = np.asarray(rows, dtype=int).ravel()
    if rows.size == 0:
        raise ValueError("row list is empty")
    if rows.min() < 0 or rows.max() >= data.n_rows:
        raise IndexError("row index out of range")
    f = model.basis.expand(transform.apply(data.covariates[rows]))
    return info_matrix(f, glm_weights(f, model) / rows.size)


def check_info_matrix(m: np.ndarray) -> None:
    m = np.asarray(m)
    if not np.allclose(m, m.T, atol=SYMMETRY_TOL, rtol=0):
        raise ValueError("information matrix is not symmetric")
    if np.linalg.eigvalsh(m).min() < -SYMMETRY_TOL:
        raise ValueError("information matrix is not positive semidefinite")


# ---------------------------------------------------------------- criteria


def criterion_value(m: np.ndarray, c: Criterion | str) -> float:
    """D: det M.  A: -tr(M^-1), raising SingularMatrixError for singular M."""
    c = Criterion.parse(c)
    if c is Criterion.D:
        return linalg.det(m)
    return -float(np.trace(linalg.inv(m)))


def efficiency(m: np.ndarray, m_star: np.ndarray, c: Criterion | str, tol: float = 1e-4) -> float:
    """Homogeneous D- or A-efficiency of ``m`` relative to ``m_star``.

    Singular ``m`` gives 0.  Values above 1 are clipped when they are within
    what a design certified at tolerance ``tol`` allows; larger values raise
    :class:`EfficiencyError`.
    """
    c = Criterion.parse(c)
    q = m_star.shape[0]
    if c is Criterion.D:
        ld_star = linalg.logdet(m_star)
        if not np.isfinite(ld_star):
            raise linalg.SingularMatrixError("reference information matrix is singular")
        ld = linalg.logdet(m)
        eff = 0.0 if not np.isfinite(ld) else float(np.exp((ld - ld_star) / q))
    else:
        t_star = float(np.trace(linalg.inv(m_star)))
        try:
            eff = t_star / float(np.trace(linalg.inv(m)))
        except linalg.SingularMatrixError:
            eff = 0.0
    if eff > 1.0:
        if eff > 1.0 / (1.0 - tol) + 1e-12:
            raise EfficiencyError(
                f"{c.value}-efficiency {eff:.6g} exceeds 1; reference design is not optimal here"
            )
        eff = 1.0
    return eff


def features(data: Dataset | np.ndarray, basis: FeatureBasis, transform: BoxTransform) -> np.ndarray:
    x = data.covariates if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    return basis.expand(transform.apply(x))


def sample_info(f_rows: np.ndarray, model: ModelSpec) -> np.ndarray:
    """Per-unit information of already-expanded (box-coordinate) feature rows."""
    return info_matrix(f_rows, glm_weights(f_rows, model) / f_rows.shape[0])


def sample_efficiencies(f_rows: np.ndarray, model: ModelSpec, references: dict, tol: float = 1e-4) -> dict:
    m = sample_info(f_rows, model)
    return {c: efficiency(m, ref, c, tol) for c, ref in references.items()}

