"""Cluster-robust variance estimators for paired experiments.

The generic sandwich ``cluster_robust_covariance`` works for any design
matrix and clustering level (including singleton clusters, i.e. the
heteroskedasticity-robust case).  For paired designs with exactly two
units per pair, closed forms replace the matrix algebra:

no fixed effects, clustering by pair      sum_p (SET_p/T - SEU_p/C)^2
no fixed effects, clustering by unit      sum_p (SET_p^2/T^2 + SEU_p^2/C^2)
fixed effects, clustering by pair         sum_p w_p^2 S_p^2 (1/n1p + 1/n2p)^2
fixed effects, clustering by unit         sum_p w_p^2 S_p^2 (1/n1p^2 + 1/n2p^2)

where SET_p/SEU_p are the treated/control residual sums in pair p, S_p
the treated residual sum of the FE fit, and w_p the harmonic pair
weights.  All estimators are the raw cluster-robust forms; use
``dof_adjust`` for the n/(n-K) software convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Assignment, ExperimentData
from .errors import (
    DegenerateDOF,
    NotPaired,
    RankDeficient,
    ShapeMismatch,
    ZeroResiduals,
)
from .estimators import FitResult, PairEffects, diff_in_means, fe_estimate

__all__ = [
    "VarianceSet",
    "RatioDecomposition",
    "cluster_robust_covariance",
    "pair_clustered_variance",
    "unit_clustered_variance",
    "dof_adjust",
    "pair_sample_variance",
    "fe_variance_ratio",
    "variance_set",
]


def cluster_robust_covariance(design, residuals, cluster_ids) -> np.ndarray:
    """Sandwich covariance (X'X)^-1 (sum_c s_c s_c') (X'X)^-1.

    ``s_c`` is the cluster score: the residual-weighted sum of regressor
    rows within cluster c.  Pass per-observation labels in ``cluster_ids``;
    distinct labels mean distinct clusters, so ``range(n)`` gives the
    heteroskedasticity-robust (singleton-cluster) estimator.
    """
    X = np.asarray(design, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ShapeMismatch(f"design must be 1-D or 2-D, got shape {X.shape}")
    e = np.asarray(residuals, dtype=float).reshape(-1)
    n, k = X.shape
    if e.size != n:
        raise ShapeMismatch(f"{n} design rows but {e.size} residuals")
    labels = np.asarray(cluster_ids)
    if labels.size != n:
        raise ShapeMismatch(f"{n} design rows but {labels.size} cluster labels")
    if np.linalg.matrix_rank(X) < k:
        raise RankDeficient(f"design matrix has rank < {k}")
    codes = np.unique(labels, return_inverse=True)[1]
    n_clusters = int(codes.max()) + 1
    scores = np.empty((n_clusters, k))
    for j in range(k):
        scores[:, j] = np.bincount(codes, weights=e * X[:, j], minlength=n_clusters)
    gram = X.T @ X
    meat = scores.T @ scores
    cov = np.linalg.solve(gram, np.linalg.solve(gram, meat).T).T
    return (cov + cov.T) / 2.0


def _require_paired(data: ExperimentData):
    lay = data.layout()
    if np.any(lay.pair_unit_counts != 2):
        bad = lay.pair_ids[int(np.argmax(lay.pair_unit_counts != 2))]
        raise NotPaired(f"pair {bad!r} does not have exactly 2 units; closed forms need 2")
    return lay


def _check_fit(data: ExperimentData, fit: FitResult, model_kind: str):
    if fit.model_kind != model_kind:
        raise ValueError(f"expected a {model_kind!r} fit, got {fit.model_kind!r}")
    if fit.residuals.size != data.layout().n:
        raise ShapeMismatch("fit residuals do not match the dataset size")


def _residual_sums(data, assignment, residuals) -> tuple[np.ndarray, np.ndarray]:
    """Treated and control residual sums per pair."""
    lay = data.layout()
    w_obs = assignment.observation_vector(data)
    set_p = np.bincount(lay.obs_pair, weights=residuals * w_obs, minlength=lay.n_pairs)
    seu_p = np.bincount(lay.obs_pair, weights=residuals * ~w_obs, minlength=lay.n_pairs)
    return set_p, seu_p


def _pair_size_columns(lay) -> tuple[np.ndarray, np.ndarray]:
    sizes = lay.unit_sizes.reshape(-1, 2).astype(float)
    return sizes[:, 0], sizes[:, 1]


def pair_clustered_variance(
    data: ExperimentData, assignment: Assignment, fit: FitResult
) -> float:
    """Closed-form variance with one cluster per pair (PCVE)."""
    lay = _require_paired(data)
    _check_fit(data, fit, fit.model_kind)
    set_p, seu_p = _residual_sums(data, assignment, fit.residuals)
    if fit.model_kind == "nofe":
        T, C = assignment.totals(data)
        return float(np.sum((set_p / T - seu_p / C) ** 2))
    n1, n2 = _pair_size_columns(lay)
    harmonic = 1.0 / (1.0 / n1 + 1.0 / n2)
    omega = harmonic / harmonic.sum()
    return float(np.sum(omega**2 * set_p**2 * (1.0 / n1 + 1.0 / n2) ** 2))


def unit_clustered_variance(
    data: ExperimentData, assignment: Assignment, fit: FitResult
) -> float:
    """Closed-form variance with one cluster per randomization unit (UCVE)."""
    lay = _require_paired(data)
    _check_fit(data, fit, fit.model_kind)
    set_p, seu_p = _residual_sums(data, assignment, fit.residuals)
    if fit.model_kind == "nofe":
        T, C = assignment.totals(data)
        return float(np.sum(set_p**2 / T**2 + seu_p**2 / C**2))
    n1, n2 = _pair_size_columns(lay)
    harmonic = 1.0 / (1.0 / n1 + 1.0 / n2)
    omega = harmonic / harmonic.sum()
    return float(np.sum(omega**2 * set_p**2 * (1.0 / n1**2 + 1.0 / n2**2)))


def dof_adjust(variance: float, n_obs: int, n_params: int) -> float:
    """Multiply by n/(n-K), the degrees-of-freedom convention of most software."""
    if n_obs <= n_params:
        raise DegenerateDOF(f"n={n_obs} must exceed K={n_params}")
    return variance * n_obs / (n_obs - n_params)


def pair_sample_variance(effects: PairEffects) -> float:
    """Sample variance of the per-pair effects: (1/P^2) sum_p (tau_p - mean)^2.

    Equals the pair-clustered variance of the difference in means when all
    units have the same number of observations.
    """
    tau_p = effects.tau_p
    center = float(tau_p.mean())
    return float(np.sum((tau_p - center) ** 2)) / effects.P**2


@dataclass(frozen=True, eq=False)
class RatioDecomposition:
    """Unit/pair variance ratio for the FE fit as a weighted mean.

    ``ratio = sum_p m_p * zeta_p`` where ``m_p`` is the sum of squared
    within-pair unit shares (between 1/2 and 1) and ``zeta_p`` weights
    pairs by their squared residual sums.  Balanced pairs give exactly
    1/2; a 2:1 size split gives 5/9.
    """

    m_p: np.ndarray
    zeta_p: np.ndarray
    ratio: float

    def __post_init__(self):
        m = np.asarray(self.m_p, dtype=float)
        z = np.asarray(self.zeta_p, dtype=float)
        m.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "m_p", m)
        object.__setattr__(self, "zeta_p", z)


def fe_variance_ratio(data: ExperimentData, fit: FitResult) -> RatioDecomposition:
    """Decompose unit/pair clustered variance ratio of an FE fit.

    Uses only the fit residuals: within-pair residual sums cancel, so the
    squared treated-side sum equals the squared first-unit sum and the
    assignment is not needed.
    """
    lay = _require_paired(data)
    _check_fit(data, fit, "fe")
    n1, n2 = _pair_size_columns(lay)
    n_p = n1 + n2
    m_p = (n1 / n_p) ** 2 + (n2 / n_p) ** 2
    unit_sums = np.bincount(lay.obs_unit, weights=fit.residuals, minlength=lay.n_units)
    s_sq = unit_sums.reshape(-1, 2)[:, 0] ** 2
    total = float(s_sq.sum())
    if total == 0.0:
        raise ZeroResiduals("all within-pair residual sums are zero; ratio undefined")
    zeta_p = s_sq / total
    return RatioDecomposition(m_p=m_p, zeta_p=zeta_p, ratio=float(m_p @ zeta_p))


@dataclass(frozen=True)
class VarianceSet:
    """All four clustered variance estimators for one dataset/assignment.

    Values are raw (no degrees-of-freedom factor); ``dof_factors`` carries
    the n/(n-K) factor of each estimator's model and
    ``pair_small_sample_factor`` the P/(P-1) pair-level correction, so
    callers can apply either convention.
    """

    pair_nofe: float
    unit_nofe: float
    pair_fe: float
    unit_fe: float
    dof_factors: dict
    pair_small_sample_factor: float
    cluster_counts: dict

    def value(self, cluster: str, model: str) -> float:
        return getattr(self, f"{cluster}_{model}")


def variance_set(data: ExperimentData, assignment: Assignment) -> VarianceSet:
    """Fit both models and compute the four closed-form variance estimators."""
    lay = data.layout()
    fit_nofe = diff_in_means(data, assignment)
    fit_fe = fe_estimate(data, assignment)
    n = lay.n
    factors = {
        "pair_nofe": n / (n - fit_nofe.K),
        "unit_nofe": n / (n - fit_nofe.K),
        "pair_fe": n / (n - fit_fe.K) if n > fit_fe.K else float("nan"),
        "unit_fe": n / (n - fit_fe.K) if n > fit_fe.K else float("nan"),
    }
    return VarianceSet(
        pair_nofe=pair_clustered_variance(data, assignment, fit_nofe),
        unit_nofe=unit_clustered_variance(data, assignment, fit_nofe),
        pair_fe=pair_clustered_variance(data, assignment, fit_fe),
        unit_fe=unit_clustered_variance(data, assignment, fit_fe),
        dof_factors=factors,
        pair_small_sample_factor=lay.n_pairs / (lay.n_pairs - 1)
        if lay.n_pairs > 1
        else float("nan"),
        cluster_counts={"pair": lay.n_pairs, "unit": lay.n_units, "observation": n},
    )
