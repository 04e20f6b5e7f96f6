"""Singular value decomposition of the data matrix and everything derived
from it: principal components, eigengestures, low-rank reconstructions,
and the normalized reconstruction-error curve.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._arrays import locked_array
from ._atomic import atomic_write_text
from .errors import (
    BadShape,
    CountOutOfRange,
    DataError,
    DegenerateSpectrumWarning,
    NoConvergence,
    RankOutOfRange,
    UnknownRealisation,
)
from .preprocess import DataMatrix, unflatten_column


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD of the data matrix, X = U diag(sigma) V^T.

    Columns of u are the eigengesture directions; sigma is non-increasing.
    The data-matrix index metadata (n_time, n_sensors, columns) is carried
    along so reshapes and per-realisation lookups stay possible; it is None
    when the decomposition was run on a bare array.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    n_time: int | None = None
    n_sensors: int | None = None
    columns: tuple | None = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        q = sigma.shape[0]
        if u.ndim != 2 or v.ndim != 2 or u.shape[1] != q or v.shape[1] != q:
            raise BadShape(
                f"inconsistent factor shapes: u {u.shape}, sigma {sigma.shape}, "
                f"v {v.shape}"
            )
        object.__setattr__(self, "u", locked_array(u))
        object.__setattr__(self, "sigma", locked_array(sigma))
        object.__setattr__(self, "v", locked_array(v))
        if self.columns is not None:
            object.__setattr__(
                self, "columns", tuple((int(k), int(l)) for k, l in self.columns)
            )

    @property
    def q(self) -> int:
        """Number of singular values, min of the matrix dimensions."""
        return self.sigma.shape[0]

    def energy_fractions(self) -> np.ndarray:
        """sigma_i^2 / sum_j sigma_j^2; all zeros for an all-zero matrix."""
        total = float(np.sum(self.sigma**2))
        if total == 0.0:
            return np.zeros_like(self.sigma)
        return self.sigma**2 / total


@dataclass(frozen=True)
class Eigengesture:
    """One left singular vector reshaped to (time, sensor)."""

    index: int
    shape: np.ndarray
    singular_value: float
    energy_fraction: float

    def __post_init__(self):
        object.__setattr__(self, "shape", locked_array(self.shape))


@dataclass(frozen=True)
class PrincipalComponents:
    """Realisation coordinates: column i is V[:, i] * sigma_i."""

    scores: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scores", locked_array(self.scores))


def _apply_sign_convention(u: np.ndarray, v: np.ndarray):
    """Make the largest-magnitude entry of each u column non-negative.

    np.argmax takes the first maximum, which breaks ties toward the lowest
    row index. v columns flip together with u so the product is unchanged.
    """
    anchor_rows = np.argmax(np.abs(u), axis=0)
    anchors = u[anchor_rows, np.arange(u.shape[1])]
    signs = np.where(anchors < 0.0, -1.0, 1.0)
    return u * signs, v * signs


def svd(matrix) -> SvdResult:
    """Thin SVD with a deterministic sign convention.

    Accepts a DataMatrix (index metadata is carried through) or any 2-d
    array. Factors satisfy X = u @ diag(sigma) @ v.T with orthonormal
    columns and non-increasing sigma.
    """
    if isinstance(matrix, DataMatrix):
        values = matrix.values
        meta = dict(
            n_time=matrix.n_time,
            n_sensors=matrix.n_sensors,
            columns=matrix.columns,
        )
    else:
        values = np.asarray(matrix, dtype=np.float64)
        if values.ndim != 2:
            raise BadShape(f"expected a 2-d matrix, got shape {values.shape}")
        meta = {}
    if not np.all(np.isfinite(values)):
        raise DataError("matrix contains non-finite entries")

    try:
        u, sigma, vt = np.linalg.svd(values, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"decomposition did not converge: {exc}") from exc
    u, v = _apply_sign_convention(u, vt.T)
    return SvdResult(u=u, sigma=sigma, v=v, **meta)


def principal_components(result: SvdResult) -> PrincipalComponents:
    """Scores of every realisation along each direction."""
    return PrincipalComponents(scores=result.v * result.sigma)


def eigengestures(result: SvdResult, count: int) -> list:
    """The first `count` left singular vectors as (time, sensor) matrices."""
    if not 1 <= count <= result.q:
        raise CountOutOfRange(f"count must be 1..{result.q}, got {count}")
    if result.n_time is None or result.n_sensors is None:
        raise DataError(
            "decomposition carries no row index; run it on a DataMatrix "
            "to extract eigengestures"
        )
    fractions = result.energy_fractions()
    return [
        Eigengesture(
            index=i + 1,
            shape=unflatten_column(result.u[:, i], result.n_time, result.n_sensors),
            singular_value=float(result.sigma[i]),
            energy_fraction=float(fractions[i]),
        )
        for i in range(count)
    ]


def reconstruct(result: SvdResult, n: int) -> np.ndarray:
    """Best rank-n approximation of the decomposed matrix."""
    if not 1 <= n <= result.q:
        raise RankOutOfRange(f"rank must be 1..{result.q}, got {n}")
    return (result.u[:, :n] * result.sigma[:n]) @ result.v[:, :n].T


def reconstruct_gesture(result: SvdResult, gesture, n: int) -> np.ndarray:
    """One realisation's rank-n reconstruction as a (time, sensor) matrix.

    `gesture` is the 1-based (type, realisation) pair of the wanted column.
    """
    if not 1 <= n <= result.q:
        raise RankOutOfRange(f"rank must be 1..{result.q}, got {n}")
    if result.columns is None or result.n_time is None:
        raise DataError(
            "decomposition carries no column index; run it on a DataMatrix "
            "to reconstruct single realisations"
        )
    key = (int(gesture[0]), int(gesture[1]))
    try:
        col = result.columns.index(key)
    except ValueError:
        raise UnknownRealisation(
            f"realisation {key} is not a column of the decomposed matrix"
        ) from None
    column = result.u[:, :n] @ (result.sigma[:n] * result.v[col, :n])
    return unflatten_column(column, result.n_time, result.n_sensors)


def _tail_energies(sigma: np.ndarray) -> np.ndarray:
    """t[n] = sum of sigma_i^2 over i > n (1-based), for n = 0..q."""
    squares = sigma**2
    tails = np.zeros(sigma.shape[0] + 1)
    tails[:-1] = np.cumsum(squares[::-1])[::-1]
    return tails


def error_curve(matrix, result: SvdResult, n_max: int | None = None) -> np.ndarray:
    """Normalized reconstruction error d(n) for n = 1..n_max.

    d(n) is the Frobenius distance between the data and its rank-n
    approximation, scaled so d(1) = 1. It is evaluated through the
    spectral identity d(n) = sqrt(sum_{i>n} sigma_i^2 / sum_{i>1} sigma_i^2),
    so no reconstruction is materialized. `matrix` is accepted for
    signature symmetry with the reconstruction helpers and only checked
    for shape consistency when given.
    """
    if n_max is None:
        n_max = result.q
    if not 1 <= n_max <= result.q:
        raise RankOutOfRange(f"n_max must be 1..{result.q}, got {n_max}")
    if matrix is not None:
        values = matrix.values if isinstance(matrix, DataMatrix) else np.asarray(matrix)
        if values.shape[0] != result.u.shape[0] or values.shape[1] != result.v.shape[0]:
            raise BadShape(
                f"matrix shape {values.shape} does not match the decomposition"
            )

    tails = _tail_energies(result.sigma)
    denom = tails[1]
    if denom == 0.0:
        warnings.warn(
            "all singular values beyond the first are zero; "
            "error curve is 0 beyond n = 1",
            DegenerateSpectrumWarning,
            stacklevel=2,
        )
        curve = np.zeros(n_max)
        curve[0] = 1.0
        return curve
    curve = np.sqrt(tails[1 : n_max + 1] / denom)
    curve[0] = 1.0
    return curve


def mean_column_error_curve(matrix, result: SvdResult, n_max: int | None = None) -> np.ndarray:
    """Mean over realisations of per-column normalized errors.

    For each column j, e_j(n) = ||x_j - xhat_j(n)|| / ||x_j - xhat_j(1)||;
    the curve is the mean of e_j over columns with nonzero e_j(1)
    denominator. A companion to error_curve for when a per-realisation
    average is preferred over the pooled matrix norm.
    """
    if n_max is None:
        n_max = result.q
    if not 1 <= n_max <= result.q:
        raise RankOutOfRange(f"n_max must be 1..{result.q}, got {n_max}")
    # ||x_j - xhat_j(n)||^2 = sum_{i>n} sigma_i^2 v[j,i]^2 by orthonormality.
    weighted = (result.sigma**2)[:, None] * (result.v.T**2)
    tails = np.zeros((result.q + 1, weighted.shape[1]))
    tails[:-1] = np.cumsum(weighted[::-1], axis=0)[::-1]
    denom = tails[1]
    live = denom > 0.0
    if not live.any():
        warnings.warn(
            "all singular values beyond the first are zero; "
            "error curve is 0 beyond n = 1",
            DegenerateSpectrumWarning,
            stacklevel=2,
        )
        curve = np.zeros(n_max)
        curve[0] = 1.0
        return curve
    ratios = np.sqrt(tails[1 : n_max + 1, live] / denom[live])
    curve = ratios.mean(axis=1)
    curve[0] = 1.0
    return curve


def write_spectrum(result: SvdResult, path):
    """Spectrum export: index, sigma, energy_fraction, cumulative_energy."""
    fractions = result.energy_fractions()
    cumulative = np.cumsum(fractions)
    lines = ["# index,sigma,energy_fraction,cumulative_energy"]
    for i in range(result.q):
        lines.append(
            f"{i + 1},{float(result.sigma[i])!r},{float(fractions[i])!r},"
            f"{float(cumulative[i])!r}"
        )
    return atomic_write_text(path, "\n".join(lines) + "\n")


def write_error_curve(curve: np.ndarray, path):
    """Error-curve export: n, d_n."""
    lines = ["# n,d_n"]
    for i, value in enumerate(curve):
        lines.append(f"{i + 1},{float(value)!r}")
    return atomic_write_text(path, "\n".join(lines) + "\n")
