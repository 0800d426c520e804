"""Binary soft-margin SVM trained by two-variable dual decomposition (SMO).

Solves, for labels y in {-1, +1} and an RBF kernel K:

    min_a   0.5 * (a*y)' K (a*y) - sum(a)
    s.t.    0 <= a_i <= C,   sum(a_i * y_i) = 0

using maximal-violating-pair working-set selection. Convergence is
declared when the KKT violation m(a) - M(a) drops below the tolerance,
with

    m(a) = max_{i in I_up} -E_i,   M(a) = min_{i in I_low} -E_i,
    E_i  = sum_j a_j y_j K_ij - y_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a_i - b_j||^2) for all row pairs."""
    d2 = squared_distances(a, b)
    return np.exp(-gamma * d2)


def squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aa = np.sum(a * a, axis=1)[:, None]
    bb = np.sum(b * b, axis=1)[None, :]
    d2 = aa + bb - 2.0 * (a @ b.T)
    return np.maximum(d2, 0.0)


@dataclass
class SmoResult:
    alpha: np.ndarray
    bias: float
    n_iter: int
    violation: float


def smo_solve(
    kernel: np.ndarray,
    y: np.ndarray,
    c: float,
    tol: float = 1e-3,
    max_iter: int | None = None,
) -> SmoResult:
    """Run SMO on a precomputed kernel matrix until KKT tolerance."""
    n = len(y)
    y = np.asarray(y, dtype=np.float64)
    if kernel.shape != (n, n):
        raise ValueError("kernel must be square and match y")
    if set(np.unique(y)) - {-1.0, 1.0}:
        raise ValueError("labels must be -1/+1")
    if max_iter is None:
        max_iter = max(10_000, 200 * n)

    alpha = np.zeros(n)
    neg_err = y.copy()  # -E_i = y_i - sum_j a_j y_j K_ij
    atol = 1e-12 * max(1.0, c)

    pos = y > 0
    n_iter = 0
    violation = np.inf
    while n_iter < max_iter:
        at_upper = alpha >= c - atol
        at_lower = alpha <= atol
        up_mask = (pos & ~at_upper) | (~pos & ~at_lower)
        lo_mask = (~pos & ~at_upper) | (pos & ~at_lower)
        if not up_mask.any() or not lo_mask.any():
            violation = 0.0
            break

        up_idx = np.nonzero(up_mask)[0]
        lo_idx = np.nonzero(lo_mask)[0]
        i = up_idx[np.argmax(neg_err[up_idx])]
        j = lo_idx[np.argmin(neg_err[lo_idx])]
        violation = neg_err[i] - neg_err[j]
        if violation <= tol:
            break

        same_sign = y[i] * y[j] > 0
        if same_sign:
            low = max(0.0, alpha[i] + alpha[j] - c)
            high = min(c, alpha[i] + alpha[j])
        else:
            low = max(0.0, alpha[j] - alpha[i])
            high = min(c, c + alpha[j] - alpha[i])

        eta = kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j]
        eta = max(eta, 1e-12)
        # E_i - E_j = neg_err[j] - neg_err[i] = -violation * (sign bookkeeping)
        aj_new = alpha[j] + y[j] * (neg_err[j] - neg_err[i]) / eta
        aj_new = min(max(aj_new, low), high)
        ai_new = alpha[i] + y[i] * y[j] * (alpha[j] - aj_new)

        delta_u = (ai_new - alpha[i]) * y[i] * kernel[i] + (
            aj_new - alpha[j]
        ) * y[j] * kernel[j]
        neg_err -= delta_u
        alpha[i] = ai_new
        alpha[j] = aj_new
        n_iter += 1
    else:
        raise ConvergenceError(
            f"SMO did not reach tol={tol} within {max_iter} iterations "
            f"(violation {violation:.3g})"
        )

    free = (alpha > atol) & (alpha < c - atol)
    if free.any():
        bias = float(np.mean(neg_err[free]))
    else:
        up_best = neg_err[up_mask].max() if up_mask.any() else 0.0
        lo_best = neg_err[lo_mask].min() if lo_mask.any() else 0.0
        bias = float((up_best + lo_best) / 2.0)
    return SmoResult(alpha=alpha, bias=bias, n_iter=n_iter, violation=float(violation))


def kkt_violation(kernel: np.ndarray, y: np.ndarray, alpha: np.ndarray, c: float) -> float:
    """m(a) - M(a), recomputed from scratch; <= tol at an accepted solution."""
    y = np.asarray(y, dtype=np.float64)
    neg_err = y - kernel @ (alpha * y)
    atol = 1e-12 * max(1.0, c)
    pos = y > 0
    at_upper = alpha >= c - atol
    at_lower = alpha <= atol
    up_mask = (pos & ~at_upper) | (~pos & ~at_lower)
    lo_mask = (~pos & ~at_upper) | (pos & ~at_lower)
    if not up_mask.any() or not lo_mask.any():
        return 0.0
    return float(neg_err[up_mask].max() - neg_err[lo_mask].min())


def dual_objective(kernel: np.ndarray, y: np.ndarray, alpha: np.ndarray) -> float:
    """Value of the maximized dual: sum(a) - 0.5 (a*y)' K (a*y)."""
    ay = alpha * np.asarray(y, dtype=np.float64)
    return float(np.sum(alpha) - 0.5 * ay @ kernel @ ay)


@dataclass
class BinarySvm:
    """Trained two-class machine; decision(x) = sum dual_coef_i K(sv_i, x) + bias."""

    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i at the support vectors
    bias: float
    gamma: float

    def decision(self, x: np.ndarray) -> np.ndarray:
        k = rbf_kernel(np.atleast_2d(x), self.support_vectors, self.gamma)
        return k @ self.dual_coef + self.bias


def train_binary(
    x: np.ndarray,
    y: np.ndarray,
    c: float,
    gamma: float,
    tol: float = 1e-3,
    kernel: np.ndarray | None = None,
) -> BinarySvm:
    """Fit a binary RBF SVM; keeps only the support vectors."""
    if kernel is None:
        kernel = rbf_kernel(x, x, gamma)
    result = smo_solve(kernel, y, c, tol=tol)
    keep = result.alpha > 1e-12 * max(1.0, c)
    return BinarySvm(
        support_vectors=np.array(x[keep]),
        dual_coef=result.alpha[keep] * np.asarray(y, dtype=np.float64)[keep],
        bias=result.bias,
        gamma=gamma,
    )
