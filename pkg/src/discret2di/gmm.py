"""Full-covariance Gaussian mixture fitted by EM; the discretization baseline.

Fitted from scratch so the per-iteration log-likelihood history is exposed
(EM monotonicity is an asserted invariant) and fits are bit-reproducible per
seed.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .data import Standardizer, TimeSeries

log = logging.getLogger(__name__)

COV_REG = 1e-6


class GmmError(ValueError):
    pass


@dataclass
class GmmModel:
    """Mixture weights, means and full covariances, plus fit diagnostics.

    The optional standardizer records the preprocessing the model was fitted
    under; assignment applies it to raw frames when present.
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    standardizer: Standardizer | None = None
    log_likelihood_history: list[float] = field(default_factory=list)
    n_reinits: int = 0

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "kind": "gmm",
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
            "standardizer": self.standardizer.to_dict() if self.standardizer else None,
            "metadata": {
                "log_likelihood_history": list(self.log_likelihood_history),
                "n_reinits": self.n_reinits,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GmmModel":
        if d.get("kind", "gmm") != "gmm":
            raise GmmError(f"not a gmm model document (kind={d.get('kind')!r})")
        std = d.get("standardizer")
        meta = d.get("metadata", {})
        return cls(
            np.asarray(d["weights"], dtype=np.float64),
            np.asarray(d["means"], dtype=np.float64),
            np.asarray(d["covariances"], dtype=np.float64),
            Standardizer.from_dict(std) if std else None,
            list(meta.get("log_likelihood_history", [])),
            int(meta.get("n_reinits", 0)),
        )


def save_model(model: GmmModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path) -> GmmModel:
    with open(path, "r", encoding="utf-8") as fh:
        return GmmModel.from_dict(json.load(fh))


def _component_log_densities(x: np.ndarray, means: np.ndarray, covs: np.ndarray) -> np.ndarray:
    """log N(x; mu_k, Sigma_k) for every row and component, shape (N, K)."""
    n, d = x.shape
    k = means.shape[0]
    out = np.empty((n, k))
    for i in range(k):
        try:
            chol = cholesky(covs[i], lower=True)
        except np.linalg.LinAlgError:
            raise GmmError(f"component {i}: covariance not positive definite") from None
        diff = (x - means[i]).T
        sol = solve_triangular(chol, diff, lower=True)
        logdet = 2.0 * np.log(np.diag(chol)).sum()
        out[:, i] = -0.5 * (d * np.log(2 * np.pi) + logdet + (sol**2).sum(axis=0))
    return out


def _mixture_log_likelihoods(x, weights, means, covs):
    """(per-row mixture log-likelihood, per-row responsibilities)."""
    logdens = _component_log_densities(x, means, covs) + np.log(weights)
    m = logdens.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(logdens - m).sum(axis=1, keepdims=True))
    resp = np.exp(logdens - lse)
    return lse[:, 0], resp


def _kmeanspp_means(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ style spread-out seeding of component means."""
    n = x.shape[0]
    means = [x[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min(
            ((x[:, None, :] - np.asarray(means)[None, :, :]) ** 2).sum(axis=2), axis=1
        )
        total = d2.sum()
        if total <= 0:
            means.append(x[rng.integers(n)])
            continue
        means.append(x[rng.choice(n, p=d2 / total)])
    return np.asarray(means)


def fit_em(
    data: TimeSeries | np.ndarray,
    n_components: int,
    seed: int = 0,
    max_iters: int = 200,
    tol: float = 1e-6,
    standardizer: Standardizer | None = None,
) -> GmmModel:
    """Expectation-Maximization until the log-likelihood gain drops below tol.

    Covariances get COV_REG * I added every M-step. Components that lose all
    responsibility are re-seeded at the worst-explained point, counted and
    logged.
    """
    x = data.values if isinstance(data, TimeSeries) else np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n, d = x.shape
    if n <= n_components:
        raise GmmError(f"need more rows ({n}) than components ({n_components})")
    if standardizer is not None:
        x = standardizer.transform_values(x)

    rng = np.random.default_rng(seed)
    means = _kmeanspp_means(x, n_components, rng)
    covs = np.tile(np.cov(x.T, ddof=0).reshape(d, d) + COV_REG * np.eye(d),
                   (n_components, 1, 1))
    weights = np.full(n_components, 1.0 / n_components)

    history = []
    n_reinits = 0
    prev_ll = -np.inf
    for _ in range(max_iters):
        row_ll, resp = _mixture_log_likelihoods(x, weights, means, covs)
        total_ll = float(row_ll.sum())
        history.append(total_ll)

        nk = resp.sum(axis=0)
        empty = np.flatnonzero(nk < 1e-10)
        if empty.size:
            # Re-seed dead components at the points the mixture explains worst.
            worst = np.argsort(row_ll)
            for j, comp in enumerate(empty):
                means[comp] = x[worst[j % n]]
                covs[comp] = np.cov(x.T, ddof=0).reshape(d, d) + COV_REG * np.eye(d)
                weights[comp] = 1.0 / n
            weights /= weights.sum()
            n_reinits += empty.size
            log.warning("reinitialized %d empty component(s)", empty.size)
            prev_ll = -np.inf
            continue

        weights = nk / n
        means = (resp.T @ x) / nk[:, None]
        for i in range(n_components):
            diff = x - means[i]
            covs[i] = (resp[:, i][:, None] * diff).T @ diff / nk[i]
            covs[i] += COV_REG * np.eye(d)

        if total_ll - prev_ll < tol and np.isfinite(prev_ll):
            break
        prev_ll = total_ll

    return GmmModel(weights, means, covs, standardizer, history, n_reinits)


def gmm_assign(model: GmmModel, frame: np.ndarray) -> tuple[int, float]:
    """Most responsible component and mixture log-likelihood for one frame."""
    comps, lls = gmm_assign_batch(model, np.atleast_2d(frame))
    return int(comps[0]), float(lls[0])


def gmm_assign_batch(model: GmmModel, values: np.ndarray):
    """Vectorized gmm_assign over raw frames; applies the stored standardizer."""
    x = np.atleast_2d(np.asarray(values, dtype=np.float64))
    if x.shape[1] != model.n_features:
        raise GmmError(f"expected frames of width {model.n_features}, got {x.shape[1]}")
    if model.standardizer is not None:
        x = model.standardizer.transform_values(x)
    row_ll, resp = _mixture_log_likelihoods(x, model.weights, model.means, model.covariances)
    return resp.argmax(axis=1), row_ll
