"""Isotropic Gaussian KDE, leave-one-out bandwidth selection and the
likelihood ratio ``a(x) = p(x|+) / p(x)`` consumed by the PU query rules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

# p(x) floor relative to the peak kernel value of the p(x) model
FLOOR_FACTOR = 1e-15
_LOG_MAX = 700.0


class BandwidthSelectionError(ValueError):
    pass


def _sq_dists(A, B):
    return cdist(A, B, "sqeuclidean")


@dataclass(frozen=True)
class KdeModel:
    points: np.ndarray
    h: float

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def log_peak(self) -> float:
        """Log of a single kernel's peak divided by n, the smallest value the
        density can take at one of its own training points."""
        return -0.5 * self.d * np.log(2 * np.pi * self.h**2) - np.log(self.n)

    def _check(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.d:
            raise ValueError(f"expected dimension {self.d}, got {X.shape[1]}")
        return X, single

    def log_density(self, X):
        X, single = self._check(X)
        D = _sq_dists(X, self.points)
        out = (
            logsumexp(-D / (2 * self.h**2), axis=1)
            - np.log(self.n)
            - 0.5 * self.d * np.log(2 * np.pi * self.h**2)
        )
        return out[0] if single else out

    def density(self, X):
        return np.exp(self.log_density(X))


def fit_kde(points, h: float) -> KdeModel:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.shape[0] < 1:
        raise ValueError("cannot fit a KDE on an empty point set")
    if not h > 0 or not np.isfinite(h):
        raise ValueError(f"bandwidth must be positive, got {h}")
    return KdeModel(points=pts.copy(), h=float(h))


def kde_evaluate(m: KdeModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("kde_evaluate takes a single vector; use KdeModel.density for batches")
    return float(m.density(x))


def loo_log_likelihood(points, h: float) -> float:
    """Sum over i of log p_{-i}(x_i), the KDE built without x_i."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = pts.shape
    D = _sq_dists(pts, pts)
    np.fill_diagonal(D, np.inf)
    ll = logsumexp(-D / (2 * h**2), axis=1) - np.log(n - 1) - 0.5 * d * np.log(2 * np.pi * h**2)
    return float(ll.sum())


def select_bandwidth_loo(points, grid) -> float:
    """Grid value with the highest leave-one-out log-likelihood.

    Ties go to the smaller bandwidth. Raises :class:`BandwidthSelectionError`
    when every candidate scores ``-inf``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.shape[0] < 2:
        raise ValueError("leave-one-out selection needs at least two points")
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("bandwidth grid must be non-empty and positive")
    best_h, best_ll = None, -np.inf
    for h in np.sort(grid):
        ll = loo_log_likelihood(pts, h)
        if ll > best_ll:
            best_h, best_ll = float(h), ll
    if best_h is None:
        raise BandwidthSelectionError("all bandwidths give zero leave-one-out likelihood")
    return best_h


def rule_of_thumb_bandwidth(points) -> float:
    """sigma * n^(-1/(d+4)) with sigma the mean per-feature standard deviation."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = pts.shape
    sigma = float(np.mean(pts.std(axis=0, ddof=1))) if n > 1 else 0.0
    if not sigma > 0:
        sigma = 1.0
    return sigma * n ** (-1.0 / (d + 4))


def default_bandwidth_grid(points, size: int = 10) -> np.ndarray:
    h0 = rule_of_thumb_bandwidth(points)
    return h0 * np.geomspace(0.1, 10.0, size)


def fit_kde_cv(points, grid=None) -> KdeModel:
    """Fit with a leave-one-out tuned bandwidth, falling back to the rule of
    thumb when selection is impossible (one point, or all-degenerate grid)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if grid is None:
        grid = default_bandwidth_grid(pts)
    try:
        h = select_bandwidth_loo(pts, grid)
    except (BandwidthSelectionError, ValueError):
        h = rule_of_thumb_bandwidth(pts)
    return fit_kde(pts, h)


def log_likelihood_ratio(pos: KdeModel, all: KdeModel, X):
    if pos.d != all.d:
        raise ValueError("density models disagree on dimension")
    log_floor = np.log(FLOOR_FACTOR) + all.log_peak
    la = pos.log_density(X) - np.maximum(all.log_density(X), log_floor)
    return np.minimum(la, _LOG_MAX)


def likelihood_ratio(pos: KdeModel, all: KdeModel, x):
    """``p(x|+) / max(p(x), floor)``; accepts a vector or a batch of rows.

    Computed in log space so that high-dimensional kernels that underflow
    individually still give a finite ratio.
    """
    return np.exp(log_likelihood_ratio(pos, all, x))


def negative_density_estimate(pos: KdeModel, all: KdeModel, x, prior: float):
    """Implied ``p(x|-)`` for a known class prior, clamped at zero."""
    if not 0.0 < prior < 1.0:
        raise ValueError(f"prior must lie in (0, 1), got {prior}")
    raw = (all.density(x) - pos.density(x) * prior) / (1.0 - prior)
    return np.maximum(raw, 0.0)
