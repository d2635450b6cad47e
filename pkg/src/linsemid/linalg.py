"""Dense covariance algebra for linear structural models.

Convention: ``lam[i, j]`` is the coefficient on the edge ``i -> j``, so the
model reads ``X = lam.T @ X + eps`` and the implied covariance is
``inv(I - lam).T @ omega @ inv(I - lam)``.  Cleaned cross-covariance rows of
the form ``(I - lam).T @ sigma`` then enumerate half-trek monomials, which
is what certificate evaluation relies on.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import NDArray


class SingularSystemError(ValueError):
    """A linear solve hit a pivot below tolerance."""


class CovarianceFormatError(ValueError):
    """Raised for covariance input that fails validation."""


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetric positive-definite matrix over an ordered node list."""

    names: tuple[str, ...]
    values: NDArray[np.float64]

    @staticmethod
    def create(names, values, *, sym_tol: float = 1e-8) -> "CovarianceMatrix":
        names = tuple(names)
        values = np.asarray(values, dtype=np.float64)
        k = len(names)
        if values.shape != (k, k):
            raise CovarianceFormatError(f"matrix: expected shape {(k, k)}, got {values.shape}")
        asym = np.max(np.abs(values - values.T)) if k else 0.0
        if asym > sym_tol:
            raise CovarianceFormatError(f"matrix: asymmetry {asym:.3e} exceeds tolerance {sym_tol:.0e}")
        values = 0.5 * (values + values.T)
        try:
            np.linalg.cholesky(values)
        except np.linalg.LinAlgError:
            raise CovarianceFormatError("matrix: not positive definite") from None
        values.setflags(write=False)
        return CovarianceMatrix(names, values)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def restrict(self, keep_names) -> "CovarianceMatrix":
        idx = [self.names.index(n) for n in keep_names]
        sub = self.values[np.ix_(idx, idx)].copy()
        sub.setflags(write=False)
        return CovarianceMatrix(tuple(keep_names), sub)

    # -- I/O -----------------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.names)
        for row in self.values:
            writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    @staticmethod
    def from_csv(text: str) -> "CovarianceMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        rows = [r for r in rows if r]
        if not rows:
            raise CovarianceFormatError("csv: empty input")
        names = [c.strip() for c in rows[0]]
        if len(rows) - 1 != len(names):
            raise CovarianceFormatError(
                f"csv: expected {len(names)} data rows after header, got {len(rows) - 1}"
            )
        try:
            values = np.array([[float(c) for c in r] for r in rows[1:]], dtype=np.float64)
        except ValueError as exc:
            raise CovarianceFormatError(f"csv: non-numeric entry ({exc})") from None
        return CovarianceMatrix.create(names, values)

    def to_json(self) -> str:
        return json.dumps(
            {"nodes": list(self.names), "matrix": [[float(x) for x in row] for row in self.values]},
            indent=2,
        )

    @staticmethod
    def from_json(text: str) -> "CovarianceMatrix":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CovarianceFormatError(
                f"json: invalid at line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from None
        if not isinstance(data, dict) or "nodes" not in data or "matrix" not in data:
            raise CovarianceFormatError("json: expected object with 'nodes' and 'matrix'")
        return CovarianceMatrix.create(data["nodes"], data["matrix"])


@dataclass(frozen=True)
class ModelInstance:
    """Parameter assignment: coefficient matrix and error covariance.

    ``lam[i, j]`` is nonzero only where the graph has edge ``i -> j``;
    ``omega`` is positive definite with off-diagonal support restricted to
    bidirected pairs.
    """

    names: tuple[str, ...]
    lam: NDArray[np.float64]
    omega: NDArray[np.float64]


def implied_covariance(m: ModelInstance) -> CovarianceMatrix:
    """Closed-form covariance ``inv(I - lam).T @ omega @ inv(I - lam)``."""
    n = m.lam.shape[0]
    a = np.eye(n) - m.lam
    try:
        t = np.linalg.solve(a.T, m.omega)  # inv(I-lam).T @ omega
        sigma = np.linalg.solve(a.T, t.T).T
    except np.linalg.LinAlgError:
        raise SingularSystemError("I - lam is singular; cyclic coefficients too strong") from None
    sigma = 0.5 * (sigma + sigma.T)
    return CovarianceMatrix.create(m.names, sigma)


def prefix_regression(
    sigma: NDArray[np.float64], target: int, predictors
) -> tuple[NDArray[np.float64], float]:
    """Gaussian conditional of ``target`` given ``predictors`` under ``sigma``:
    regression weights and the (strictly positive) residual variance."""
    predictors = list(predictors)
    if not predictors:
        return np.zeros(0), float(sigma[target, target])
    block = sigma[np.ix_(predictors, predictors)]
    cross = sigma[predictors, target]
    try:
        beta = np.linalg.solve(block, cross)
    except np.linalg.LinAlgError:
        raise SingularSystemError(
            f"predictor block singular while regressing node index {target}"
        ) from None
    resid = float(sigma[target, target] - cross @ beta)
    if resid <= 0:
        raise SingularSystemError(
            f"nonpositive residual variance {resid:.3e} for node index {target}"
        )
    return beta, resid


def solve(a: NDArray[np.float64], b: NDArray[np.float64]) -> tuple[NDArray[np.float64], float]:
    """Solve ``a @ x = b`` by pivoted LU; returns the solution and the
    1-norm condition number.

    Raises :class:`SingularSystemError` when a pivot falls below
    ``1e-12`` times its row scale.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        return np.zeros(0), 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=True)
    row_scale = np.max(np.abs(a), axis=1)
    row_scale[row_scale == 0] = 1.0
    pivots = np.abs(np.diag(lu))
    if np.any(pivots < 1e-12 * np.max(row_scale)):
        raise SingularSystemError("system numerically singular (zero pivot)")
    x = scipy.linalg.lu_solve((lu, piv), b)
    cond = float(np.linalg.cond(a, 1))
    return x, cond
