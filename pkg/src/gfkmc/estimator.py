"""Replication averaging and large-t extrapolation of ln(z_t)/t.

For large t, ln z(t) ~ A t + B with A = lam0 - lam1, so the lowest energy
of the trial function's symmetry is recovered as lam1 = lam0 - A.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateInputError, FitError

log = logging.getLogger(__name__)

LINEAR = "linear"
NONLINEAR = "nonlinear"
NONLINEAR_MAX_ITER = 500


@dataclass(frozen=True)
class CheckpointStat:
    t: float
    z_mean: float
    ln_z: float
    ln_z_over_t: float
    sigma: float
    ls_fit: float = float("nan")


@dataclass(frozen=True)
class FitResult:
    model: str
    lambda1: float
    extrapolation_error: float
    params: dict = field(default_factory=dict)
    covariance: np.ndarray = field(default=None, repr=False, compare=False)

    def predict(self, t):
        t = np.asarray(t, dtype=float)
        p = self.params
        y = p["A"] + p["B"] / t
        if self.model == NONLINEAR:
            y = y + p["C"] * np.exp(-p["D"] * t) / t
        return y


def aggregate(z, times):
    """Per-checkpoint statistics from a ``(N_rep, n_checkpoints)`` array of Z_m(t).

    sigma is the delta-method standard error of ln(z_t)/t:
    SE(Z) / (z_mean * t). Rows are reduced in index order.
    """
    z = np.asarray(z, dtype=float)
    times = np.asarray(times, dtype=float)
    if z.ndim != 2 or z.shape[1] != times.size:
        raise DegenerateInputError(f"expected Z of shape (N_rep, {times.size}), got {z.shape}")
    n_rep = z.shape[0]
    if n_rep < 2:
        raise DegenerateInputError("at least two replications are needed for a variance estimate")
    mean = z.mean(axis=0)
    if np.any(mean <= 0):
        raise DegenerateInputError("non-positive mean path weight")
    se = z.std(axis=0, ddof=1) / np.sqrt(n_rep)
    ln_z = np.log(mean)
    return [
        CheckpointStat(float(t), float(m), float(lz), float(lz / t), float(s / (m * t)))
        for t, m, lz, s in zip(times, mean, ln_z, se)
    ]


def stats_from_table(rows):
    """Build CheckpointStat rows from ``(t, ln(z_t)/t, sigma)`` triples."""
    out = []
    for t, y, s in rows:
        out.append(CheckpointStat(float(t), float(np.exp(y * t)), float(y * t), float(y), float(s)))
    return out


def _arrays(stats):
    t = np.array([s.t for s in stats], dtype=float)
    y = np.array([s.ln_z_over_t for s in stats], dtype=float)
    sig = np.array([s.sigma for s in stats], dtype=float)
    return t, y, sig


def _weights(sig, weighted):
    # Zero sigma (noise-free data) gives no usable weights; fall back to uniform.
    if not weighted or np.any(sig <= 0) or not np.all(np.isfinite(sig)):
        return np.ones_like(sig)
    return 1.0 / sig


def _scaled_covariance(jac, resid, n_par):
    """(J^T J)^-1 scaled by the reduced chi-square of the weighted residuals."""
    dof = resid.size - n_par
    cov = np.linalg.pinv(jac.T @ jac)
    chi2 = float(resid @ resid)
    if dof > 0:
        cov = cov * (chi2 / dof)
    return cov


def fit_linear(stats, lam0, weighted=True):
    """Weighted least squares of ln(z_t)/t = A + B/t; lambda1 = lam0 - A."""
    t, y, sig = _arrays(stats)
    if t.size < 3:
        raise DegenerateInputError("linear extrapolation needs at least 3 checkpoints")
    if np.ptp(t) == 0:
        raise FitError("all checkpoint times are equal; the fit is singular")
    w = _weights(sig, weighted)
    X = np.column_stack([np.ones_like(t), 1.0 / t])
    Xw = X * w[:, None]
    coef, _, rank, _ = np.linalg.lstsq(Xw, y * w, rcond=None)
    if rank < 2:
        raise FitError("singular design matrix")
    resid = Xw @ coef - y * w
    cov = _scaled_covariance(Xw, resid, 2)
    A, B = coef
    return FitResult(
        LINEAR,
        float(lam0 - A),
        float(np.sqrt(cov[0, 0])),
        {"A": float(A), "B": float(B)},
        cov,
    )


def _profile(t, y, w, D):
    """Weighted linear solve for (A, B, C) at fixed decay rate D."""
    X = np.column_stack([np.ones_like(t), 1.0 / t, np.exp(-D * t) / t]) * w[:, None]
    coef, _, rank, _ = np.linalg.lstsq(X, y * w, rcond=None)
    r = X @ coef - y * w
    return coef, r, rank


def _profile_slope(t, y, w, D):
    # d(chi^2)/dD along the profile; (A, B, C) are stationary so only the
    # explicit D dependence contributes.
    (_, _, C), r, _ = _profile(t, y, w, D)
    return -2.0 * C * float(r @ (w * np.exp(-D * t)))


def fit_nonlinear(stats, lam0, weighted=True, linear=None, grid=200):
    """Weighted fit of ln z(t) = A t + B + C exp(-D t), D > 0.

    Solved as ln(z_t)/t = A + B/t + C exp(-D t)/t. The model is linear in
    (A, B, C) for fixed D, so chi-square is profiled over D on a log grid and
    the best cell refined by root-finding on the profile slope. ``linear`` is
    accepted for interface compatibility and is not needed.
    """
    t, y, sig = _arrays(stats)
    if t.size < 4:
        raise DegenerateInputError("nonlinear extrapolation needs at least 4 checkpoints")
    if np.ptp(t) == 0:
        raise FitError("all checkpoint times are equal; the fit is singular")
    w = _weights(sig, weighted)

    # The decay rate is confined to a band set by the sampled times; an
    # optimum on the band edge is reported as converged.
    d_lo, d_hi = 0.1 / t.max(), 10.0 / t.min()
    ds = np.geomspace(d_lo, d_hi, grid)
    chi = np.array([float(r @ r) for r in (_profile(t, y, w, d)[1] for d in ds)])
    if not np.all(np.isfinite(chi)):
        raise FitError("non-finite residuals in the nonlinear fit")
    k = int(np.argmin(chi))
    D = float(ds[k])
    for a, b in ((ds[max(k - 1, 0)], D), (D, ds[min(k + 1, grid - 1)])):
        ga, gb = _profile_slope(t, y, w, a), _profile_slope(t, y, w, b)
        if a < b and ga <= 0 <= gb:
            try:
                D = brentq(lambda d: _profile_slope(t, y, w, d), a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                           maxiter=NONLINEAR_MAX_ITER)
            except RuntimeError as exc:
                raise FitError(f"nonlinear fit did not converge within {NONLINEAR_MAX_ITER} iterations") from exc
            break
    (A, B, C), resid, rank = _profile(t, y, w, D)
    if rank < 3:
        raise FitError("singular design matrix in the nonlinear fit")
    e = np.exp(-D * t)
    jac = np.column_stack([w, w / t, w * e / t, -w * C * e])
    cov = _scaled_covariance(jac, resid, 4)
    return FitResult(
        NONLINEAR,
        float(lam0 - A),
        float(np.sqrt(max(cov[0, 0], 0.0))),
        {"A": float(A), "B": float(B), "C": float(C), "D": D},
        cov,
    )


def with_fit_column(stats, fit):
    """Copy of ``stats`` with ``ls_fit`` filled from ``fit``; warns if the
    fitted curve is not monotone in t."""
    fitted = fit.predict([s.t for s in stats])
    d = np.diff(fitted)
    if d.size and not (np.all(d >= 0) or np.all(d <= 0)):
        log.warning("fitted ln(z_t)/t is not monotone in t; extrapolation may be unreliable")
    return [replace(s, ls_fit=float(f)) for s, f in zip(stats, fitted)]
