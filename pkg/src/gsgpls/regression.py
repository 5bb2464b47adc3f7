"""Least squares and ridge regression for systems with a handful of columns.

Everything goes through the k x k Gram matrix.  The design matrix and the
response are first divided by their largest absolute entry; a uniform scale
leaves the minimum-norm solution unchanged and keeps the Gram matrix finite
when semantics saturate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

__all__ = [
    "OLS",
    "RIDGE",
    "DimensionMismatch",
    "RegressionConfig",
    "fit",
    "predict",
]

OLS = "ols"
RIDGE = "ridge"

_EPS = np.finfo(float).eps


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class RegressionConfig:
    method: str = OLS
    lam: float = 0.0

    def __post_init__(self):
        if self.method not in (OLS, RIDGE):
            raise ValueError(f"unknown regression method {self.method!r}")
        if self.method == RIDGE and not self.lam > 0:
            raise ValueError("ridge regression needs lam > 0")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")

    @classmethod
    def ols(cls) -> "RegressionConfig":
        return cls(OLS, 0.0)

    @classmethod
    def ridge(cls, lam: float = 1e-3) -> "RegressionConfig":
        return cls(RIDGE, float(lam))


def _design(columns) -> np.ndarray:
    X = np.asarray(columns, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionMismatch(f"design matrix must be 2-D, got shape {X.shape}")
    return X


def _min_norm(gram: np.ndarray, rhs: np.ndarray, m: int) -> np.ndarray:
    w, V = np.linalg.eigh(gram)
    tol = max(w[-1], 0.0) * max(m, gram.shape[0]) * _EPS * 8
    keep = w > tol
    if not keep.any():
        return np.zeros(gram.shape[0])
    Vk = V[:, keep]
    return Vk @ ((Vk.T @ rhs) / w[keep])


def fit(columns, response, config: RegressionConfig | None = None) -> np.ndarray:
    """Coefficients ``beta`` with ``columns @ beta`` closest to ``response``.

    OLS returns the minimum-norm least-squares solution, so rank-deficient
    designs are fine.  Ridge solves ``(X'X + lam*I) beta = X'y`` with every
    coefficient penalised, the constant column included.
    """
    config = config or RegressionConfig()
    X = _design(columns)
    y = np.asarray(response, dtype=float).reshape(-1)
    m, k = X.shape
    if y.size != m:
        raise DimensionMismatch(f"{m} rows in the design matrix but {y.size} responses")
    if m == 0 or k == 0:
        raise DimensionMismatch("empty linear system")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("linear system has non-finite entries")

    sx = float(np.max(np.abs(X))) or 1.0
    sy = float(np.max(np.abs(y))) or 1.0
    Xs = X / sx
    ys = y / sy
    gram = Xs.T @ Xs
    rhs = Xs.T @ ys

    if config.method == RIDGE:
        lam = config.lam / sx**2
        try:
            beta = cho_solve(cho_factor(gram + lam * np.eye(k)), rhs)
        except LinAlgError:
            # lam underflowed against a huge design scale
            beta = _min_norm(gram + lam * np.eye(k), rhs, m)
    else:
        w = np.linalg.eigvalsh(gram)
        if w[0] > max(w[-1], 0.0) * max(m, k) * _EPS * 8:
            try:
                beta = cho_solve(cho_factor(gram), rhs)
            except LinAlgError:
                beta = _min_norm(gram, rhs, m)
        else:
            beta = _min_norm(gram, rhs, m)
    return beta * (sy / sx)


def predict(columns, coefficients) -> np.ndarray:
    X = _design(columns)
    beta = np.asarray(coefficients, dtype=float).reshape(-1)
    if beta.size != X.shape[1]:
        raise DimensionMismatch(
            f"{beta.size} coefficients for {X.shape[1]} columns"
        )
    return X @ beta
