"""Support vector data description with optional labelled outliers.

Targets carry sign +1 and box ``[0, C_pos]``; labelled outliers carry sign -1
and box ``[0, C_neg]``. Writing ``beta_i = s_i * alpha_i`` the dual is

    maximize   sum_i beta_i K_ii - beta^T K beta
    subject to sum_i beta_i = 1,  beta_i in [0, C_pos] or [-C_neg, 0]

which is solved by two-coefficient updates on the most violating pair.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .data import Label


class SvddError(RuntimeError):
    pass


class InfeasibleError(SvddError):
    pass


class ConvergenceError(SvddError):
    def __init__(self, msg, residual):
        super().__init__(f"{msg} (KKT residual {residual:.3g})")
        self.residual = residual


class KernelKind(str, enum.Enum):
    RBF = "rbf"
    LINEAR = "linear"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind = KernelKind.RBF
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.kind == KernelKind.RBF and not self.gamma > 0:
            raise ValueError("RBF kernel needs gamma > 0")

    def __call__(self, A, B):
        A = np.atleast_2d(A)
        B = np.atleast_2d(B)
        if self.kind == KernelKind.LINEAR:
            return A @ B.T
        return np.exp(-self.gamma * cdist(A, B, "sqeuclidean"))

    def diag(self, A):
        A = np.atleast_2d(A)
        if self.kind == KernelKind.LINEAR:
            return np.einsum("ij,ij->i", A, A)
        return np.ones(A.shape[0])


@dataclass(frozen=True)
class SvddModel:
    alphas: np.ndarray
    train_points: np.ndarray
    train_signs: np.ndarray
    kernel: KernelSpec
    R: float
    center_norm_sq: float
    C_pos: float
    C_neg: float
    n_iter: int = 0
    kkt_residual: float = 0.0

    @property
    def betas(self):
        return self.train_signs * self.alphas

    @property
    def dim(self):
        return self.train_points.shape[1]

    def upper_bounds(self):
        return np.where(self.train_signs > 0, self.C_pos, self.C_neg)

    def _as_batch(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.dim:
            raise ValueError(f"expected dimension {self.dim}, got {X.shape[1]}")
        return X, single

    def distance(self, X):
        X, single = self._as_batch(X)
        sv = self.alphas > 0
        cross = self.kernel(X, self.train_points[sv]) @ self.betas[sv]
        d2 = self.kernel.diag(X) - 2.0 * cross + self.center_norm_sq
        out = np.sqrt(np.maximum(d2, 0.0))
        return out[0] if single else out

    def score(self, X):
        """``R - distance``; positive inside the sphere."""
        return self.R - self.distance(X)

    def predict(self, X):
        s = self.score(X)
        return np.where(s >= 0, int(Label.POSITIVE), int(Label.NEGATIVE))

    def dual_objective(self):
        K = self.kernel(self.train_points, self.train_points)
        b = self.betas
        return float(b @ np.diag(K) - b @ K @ b)


def dual_objective(beta, K):
    beta = np.asarray(beta, dtype=float)
    return float(beta @ np.diag(K) - beta @ K @ beta)


def _bounds(signs, C_pos, C_neg):
    lo = np.where(signs > 0, 0.0, -C_neg)
    hi = np.where(signs > 0, C_pos, 0.0)
    return lo, hi


def _max_violation(grad, beta, lo, hi, eps):
    up = beta < hi - eps
    down = beta > lo + eps
    if not up.any() or not down.any():
        return 0.0, -1, -1
    iu = np.flatnonzero(up)
    idn = np.flatnonzero(down)
    i = iu[np.argmax(grad[iu])]
    j = idn[np.argmin(grad[idn])]
    return grad[i] - grad[j], i, j


def kkt_residuals(beta, K, lo, hi, eps=1e-12):
    """Per-point KKT violation against the midpoint multiplier.

    A coefficient that can still grow needs ``grad_i <= b``; one that can
    still shrink needs ``grad_i >= b``.
    """
    grad = np.diag(K) - 2.0 * K @ beta
    up = beta < hi - eps
    down = beta > lo + eps
    top = grad[up].max() if up.any() else -np.inf
    bottom = grad[down].min() if down.any() else np.inf
    if np.isfinite(top) and np.isfinite(bottom):
        b = 0.5 * (top + bottom)
    else:
        b = top if np.isfinite(top) else bottom
    res = np.zeros_like(grad)
    res[up] = np.maximum(res[up], grad[up] - b)
    res[down] = np.maximum(res[down], b - grad[down])
    return res


def train_svdd(P, N=None, kernel: KernelSpec | None = None, C_pos: float = 1.0,
               C_neg: float = 1.0, tol: float = 1e-6, max_iter: int = 100_000) -> SvddModel:
    """Train the hypersphere on targets ``P`` and labelled outliers ``N``.

    Parameters
    ----------
    P, N : array_like, shape (n, d)
        Target and outlier rows. ``N`` may be empty or None.
    kernel : KernelSpec
        Defaults to an RBF kernel with ``gamma = 1``.
    C_pos, C_neg : float
        Box constraints on target and outlier coefficients.
    tol : float
        Stop when the most violating pair's gradient gap is below ``tol``.
    max_iter : int
        Cap on pair updates.

    Raises
    ------
    InfeasibleError
        If ``C_pos * |P| < 1`` so the coefficients cannot sum to one.
    ConvergenceError
        If the iteration cap is hit first.
    """
    kernel = kernel or KernelSpec()
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape[0] == 0 or P.size == 0:
        raise InfeasibleError("need at least one target sample")
    d = P.shape[1]
    if N is None:
        N = np.empty((0, d))
    N = np.asarray(N, dtype=float).reshape(-1, d)
    if C_pos <= 0 or C_neg <= 0:
        raise ValueError("box constraints must be positive")
    n_pos, n_neg = P.shape[0], N.shape[0]
    if C_pos * n_pos < 1.0 - 1e-12:
        raise InfeasibleError(
            f"C_pos={C_pos} with {n_pos} targets cannot satisfy sum(alpha)=1; "
            f"need C_pos >= {1.0 / n_pos:.4g}"
        )

    X = np.vstack([P, N])
    signs = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
    lo, hi = _bounds(signs, C_pos, C_neg)
    K = kernel(X, X)
    Kd = np.diag(K).copy()

    beta = np.zeros(n_pos + n_neg)
    beta[:n_pos] = 1.0 / n_pos
    grad = Kd - 2.0 * K @ beta
    eps = 1e-12 * max(C_pos, C_neg, 1.0)

    it = 0
    while True:
        gap, i, j = _max_violation(grad, beta, lo, hi, eps)
        if gap <= tol:
            break
        if it >= max_iter:
            raise ConvergenceError(f"SVDD solver hit {max_iter} pair updates", gap)
        # move t along e_i - e_j
        eta = Kd[i] + Kd[j] - 2.0 * K[i, j]
        t_max = min(hi[i] - beta[i], beta[j] - lo[j])
        t = gap / (2.0 * eta) if eta > 1e-15 else t_max
        t = min(t, t_max)
        beta[i] += t
        beta[j] -= t
        grad -= 2.0 * t * (K[:, i] - K[:, j])
        it += 1

    beta = np.clip(beta, lo, hi)

    alphas = np.abs(beta)
    center_norm_sq = float(beta @ K @ beta)
    d2 = np.maximum(Kd - 2.0 * K @ beta + center_norm_sq, 0.0)
    dist = np.sqrt(d2)
    C = np.where(signs > 0, C_pos, C_neg)
    margin = 1e-9 * C
    unbounded = (alphas > margin) & (alphas < C - margin)
    if unbounded.any():
        R = float(dist[unbounded].mean())
    else:
        support = (signs > 0) & (alphas > margin)
        R = float(dist[support].max()) if support.any() else 0.0

    residual = float(kkt_residuals(beta, K, lo, hi, eps).max(initial=0.0))
    return SvddModel(
        alphas=alphas,
        train_points=X,
        train_signs=signs,
        kernel=kernel,
        R=R,
        center_norm_sq=center_norm_sq,
        C_pos=float(C_pos),
        C_neg=float(C_neg),
        n_iter=it,
        kkt_residual=residual,
    )


def kernel_distance_to_center(m: SvddModel, x) -> float:
    return float(m.distance(np.asarray(x, dtype=float)))


def svdd_score(m: SvddModel, x) -> float:
    return float(m.score(np.asarray(x, dtype=float)))


def svdd_predict(m: SvddModel, x) -> Label:
    return Label(int(m.predict(np.asarray(x, dtype=float))))
