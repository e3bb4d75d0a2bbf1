"""Linear models relating topic mixtures and distance from social centers.

The design matrix joins listing covariates (bedrooms, bathrooms, rent,
square footage) with document-topic proportions; one topic is held out as
the baseline so the simplex columns do not sum to a constant. The fit is
ordinary least squares via QR, with classical standard errors and
two-sided t-test p-values.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import betainc

from .corpus import CleanListing
from .geo import DistanceRecord

log = logging.getLogger(__name__)

COVARIATES = ("bedrooms", "bathrooms", "rent", "square_footage")


@dataclass
class DesignMatrix:
    ids: list[str]
    columns: list[str]
    X: np.ndarray
    y: np.ndarray
    n_dropped: int


@dataclass
class OlsFit:
    columns: list[str]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    r_squared: float
    rss: float
    n: int
    df_resid: int


def build_design(
    listings: Iterable[CleanListing],
    records: Iterable[DistanceRecord],
    theta_by_id: Mapping[str, np.ndarray],
    baseline_topic: int = 1,
    rent_per_thousand: bool = False,
) -> DesignMatrix:
    """Join covariates, topic shares, and relative distances into X and y.

    Rows are the listings present in all three inputs with every covariate
    populated; the dropped count is reported. Topic columns are 1-based
    and skip the baseline topic. Rent can optionally be scaled to
    thousands of dollars per month.
    """
    listing_by_id = {l.id: l for l in listings}
    record_by_id = {r.listing_id: r for r in records}
    shared = sorted(set(listing_by_id) & set(record_by_id) & set(theta_by_id))
    if not shared:
        raise ValueError("no listings shared between covariates, distances, and topics")

    k = len(next(iter(theta_by_id.values())))
    if not 1 <= baseline_topic <= k:
        raise ValueError(f"baseline topic {baseline_topic} out of range for k={k}")

    columns = ["intercept", *COVARIATES]
    topic_cols = [t for t in range(1, k + 1) if t != baseline_topic]
    columns.extend(f"topic_{t}" for t in topic_cols)

    ids: list[str] = []
    rows: list[list[float]] = []
    y_values: list[float] = []
    dropped = 0
    for listing_id in shared:
        listing = listing_by_id[listing_id]
        covariates = [
            listing.bedrooms,
            listing.bathrooms,
            listing.rent,
            listing.square_footage,
        ]
        if any(value is None for value in covariates):
            dropped += 1
            continue
        if rent_per_thousand:
            covariates[2] = covariates[2] / 1000.0
        theta = theta_by_id[listing_id]
        if len(theta) != k:
            raise ValueError(f"inconsistent topic count for listing {listing_id!r}")
        rows.append([1.0, *covariates, *(theta[t - 1] for t in topic_cols)])
        ids.append(listing_id)
        y_values.append(record_by_id[listing_id].relative)
    if not rows:
        raise ValueError("every joined listing is missing a covariate")
    log.info("design matrix: %d rows, %d dropped for missing covariates", len(rows), dropped)
    return DesignMatrix(
        ids=ids,
        columns=columns,
        X=np.asarray(rows, dtype=float),
        y=np.asarray(y_values, dtype=float),
        n_dropped=dropped,
    )


def _name_collinear(X: np.ndarray, columns: list[str], tolerance: float) -> list[str]:
    _, s, vt = np.linalg.svd(X, full_matrices=False)
    involved: set[str] = set()
    for i, value in enumerate(s):
        if value <= tolerance:
            for j, weight in enumerate(vt[i]):
                if abs(weight) > 1e-8:
                    involved.add(columns[j])
    return sorted(involved)


def fit_ols(X: np.ndarray, y: np.ndarray, columns: list[str]) -> OlsFit:
    """Least squares with classical (homoskedastic) inference.

    Raises if there are no residual degrees of freedom or if the design is
    rank deficient; the error names the columns involved in the
    dependency so the caller can drop one.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if len(columns) != p:
        raise ValueError(f"{p} columns in X but {len(columns)} names")
    if n <= p:
        raise ValueError(f"need more rows ({n}) than columns ({p})")

    singular_values = np.linalg.svd(X, compute_uv=False)
    tolerance = singular_values[0] * max(n, p) * np.finfo(float).eps
    if singular_values[-1] <= tolerance:
        names = _name_collinear(X, columns, tolerance)
        raise ValueError(f"design matrix is rank deficient; involved columns: {', '.join(names)}")

    q, r = np.linalg.qr(X)
    beta = solve_triangular(r, q.T @ y)
    residuals = y - X @ beta
    rss = float(residuals @ residuals)
    df_resid = n - p
    sigma2 = rss / df_resid
    r_inv = solve_triangular(r, np.eye(p))
    covariance = sigma2 * (r_inv @ r_inv.T)
    se = np.sqrt(np.diag(covariance))

    with np.errstate(divide="ignore", invalid="ignore"):
        t_values = np.where(se > 0, beta / se, np.where(beta == 0, 0.0, np.inf))
        p_values = betainc(df_resid / 2.0, 0.5, df_resid / (df_resid + t_values**2))
    p_values = np.where(np.isfinite(t_values), p_values, 0.0)

    centered = y - y.mean()
    tss = float(centered @ centered)
    r_squared = 1.0 - rss / tss if tss > 0 else 0.0

    return OlsFit(
        columns=list(columns),
        coefficients=beta,
        standard_errors=se,
        t_values=t_values,
        p_values=p_values,
        r_squared=r_squared,
        rss=rss,
        n=n,
        df_resid=df_resid,
    )


def format_fit(fit: OlsFit) -> str:
    """Plain-text coefficient table."""
    width = max(len(c) for c in fit.columns)
    lines = [
        f"{'term':<{width}}  {'coef':>12}  {'se':>12}  {'t':>9}  {'p':>9}"
    ]
    for i, name in enumerate(fit.columns):
        lines.append(
            f"{name:<{width}}  {fit.coefficients[i]:>12.4f}  {fit.standard_errors[i]:>12.4f}"
            f"  {fit.t_values[i]:>9.2f}  {fit.p_values[i]:>9.4f}"
        )
    lines.append("")
    lines.append(f"n = {fit.n}, residual df = {fit.df_resid}, R^2 = {fit.r_squared:.4f}")
    return "\n".join(lines) + "\n"
