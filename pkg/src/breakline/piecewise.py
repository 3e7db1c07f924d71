"""Two-breakpoint continuous piecewise linear regression with full inference.

The mean function is

    m(x) = b0 + b1*x                                  for x <= a1
           b0 + b1*x + b2*(x - a1)                    for a1 < x <= a2
           b0 + b1*x + b2*(x - a1) + b3*(x - a2)      for x > a2

which is continuous at both breakpoints by construction; the three segment
slopes are ``b1``, ``b1 + b2``, and ``b1 + b2 + b3``.

Fitting profiles the breakpoint pair over a deterministic candidate grid
(midpoints between consecutive distinct x values, subject to a minimum point
count per segment), solving the inner least-squares problem exactly for each
pair, and then polishes the full parameter vector with Gauss-Newton steps.
Standard errors come from the usual nonlinear-least-squares covariance
``sigma2 * (J'J)^-1`` with the almost-everywhere Jacobian of the mean
function, and slope contrasts use the delta method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .bands import BandConfig, PredictionBand, bootstrap_band
from .dataset import BivariateDataset
from .loess import loess_breakpoint_guesses


class SegmentedError(ValueError):
    """Invalid data or configuration for the piecewise fit."""


@dataclass(frozen=True)
class SegmentedModel:
    """Coefficients ``beta = (b0, b1, b2, b3)`` and breakpoints ``alpha = (a1, a2)``."""

    beta: tuple[float, float, float, float]
    alpha: tuple[float, float]

    def __post_init__(self) -> None:
        if len(self.beta) != 4 or len(self.alpha) != 2:
            raise SegmentedError("beta must have 4 entries and alpha 2")
        if not self.alpha[0] < self.alpha[1]:
            raise SegmentedError(f"breakpoints must be ordered, got {self.alpha}")

    @property
    def theta(self) -> np.ndarray:
        return np.array(list(self.beta) + list(self.alpha), dtype=float)

    @property
    def slopes(self) -> tuple[float, float, float]:
        b = self.beta
        return (b[1], b[1] + b[2], b[1] + b[2] + b[3])


def eval_segmented(model: SegmentedModel, x):
    """Mean response at x (scalar or array); continuous across the breakpoints."""
    x = np.asarray(x, dtype=float)
    b0, b1, b2, b3 = model.beta
    a1, a2 = model.alpha
    value = b0 + b1 * x + b2 * np.maximum(x - a1, 0.0) + b3 * np.maximum(x - a2, 0.0)
    return float(value) if value.ndim == 0 else value


def segmented_design(xs: np.ndarray, a1: float, a2: float) -> np.ndarray:
    """Inner design ``(1, x, (x-a1)+, (x-a2)+)`` for fixed breakpoints."""
    return np.column_stack(
        [np.ones_like(xs), xs, np.maximum(xs - a1, 0.0), np.maximum(xs - a2, 0.0)]
    )


def _theta_predict(xs, theta):
    b0, b1, b2, b3, a1, a2 = theta
    return b0 + b1 * xs + b2 * np.maximum(xs - a1, 0.0) + b3 * np.maximum(xs - a2, 0.0)


def _theta_jacobian(xs, theta):
    _, _, b2, b3, a1, a2 = theta
    return np.column_stack(
        [
            np.ones_like(xs),
            xs,
            np.maximum(xs - a1, 0.0),
            np.maximum(xs - a2, 0.0),
            -b2 * (xs > a1).astype(float),
            -b3 * (xs > a2).astype(float),
        ]
    )


class _SuffixSums:
    """Right-tail power sums of a sorted design; the whole candidate screen
    reduces to index lookups into these arrays."""

    def __init__(self, xs: np.ndarray, ys: np.ndarray):
        self.xs = xs
        self.n = xs.size

        def suffix(values):
            return np.concatenate([np.cumsum(values[::-1])[::-1], [0.0]])

        self.suf1 = suffix(xs)
        self.suf2 = suffix(xs * xs)
        self.sufy = suffix(ys)
        self.sufxy = suffix(xs * ys)
        self.Sx = float(self.suf1[0])
        self.Sxx = float(self.suf2[0])
        self.Sy = float(self.sufy[0])
        self.Sxy = float(self.sufxy[0])
        self.Syy = float(np.sum(ys * ys))

    def tail(self, a, pos):
        """(T0, T1, T2, U0, U1) summed over points with x strictly above a."""
        t0 = self.n - pos
        return t0, self.suf1[pos], self.suf2[pos], self.sufy[pos], self.sufxy[pos]


def _screen_pairs(ss: _SuffixSums, a1, a2, pos1, pos2):
    """Exact normal-equations solve of the inner OLS for many breakpoint pairs.

    Returns (betas, rss, valid) arrays; invalid pairs (numerically singular
    inner design) carry rss = +inf.
    """
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    pos1 = np.asarray(pos1)
    pos2 = np.asarray(pos2)
    m = a1.size
    n = ss.n

    t0_1, t1_1, t2_1, u0_1, u1_1 = ss.tail(a1, pos1)
    t0_2, t1_2, t2_2, u0_2, u1_2 = ss.tail(a2, pos2)

    s_c1 = t1_1 - a1 * t0_1
    s_xc1 = t2_1 - a1 * t1_1
    s_cc1 = t2_1 - 2.0 * a1 * t1_1 + a1 * a1 * t0_1
    s_yc1 = u1_1 - a1 * u0_1
    s_c2 = t1_2 - a2 * t0_2
    s_xc2 = t2_2 - a2 * t1_2
    s_cc2 = t2_2 - 2.0 * a2 * t1_2 + a2 * a2 * t0_2
    s_yc2 = u1_2 - a2 * u0_2
    cross = t2_2 - (a1 + a2) * t1_2 + a1 * a2 * t0_2

    A = np.empty((m, 4, 4))
    A[:, 0, 0] = n
    A[:, 0, 1] = A[:, 1, 0] = ss.Sx
    A[:, 0, 2] = A[:, 2, 0] = s_c1
    A[:, 0, 3] = A[:, 3, 0] = s_c2
    A[:, 1, 1] = ss.Sxx
    A[:, 1, 2] = A[:, 2, 1] = s_xc1
    A[:, 1, 3] = A[:, 3, 1] = s_xc2
    A[:, 2, 2] = s_cc1
    A[:, 2, 3] = A[:, 3, 2] = cross
    A[:, 3, 3] = s_cc2
    rhs = np.column_stack([np.full(m, ss.Sy), np.full(m, ss.Sxy), s_yc1, s_yc2])

    diag = np.stack([A[:, k, k] for k in range(4)], axis=1)
    valid = np.all(diag > 0.0, axis=1)
    det_norm = np.zeros(m)
    if np.any(valid):
        d = np.sqrt(diag[valid])
        scaled = A[valid] / (d[:, :, None] * d[:, None, :])
        det_norm_valid = np.abs(np.linalg.det(scaled))
        det_norm[valid] = det_norm_valid
        valid[valid] = det_norm_valid > 1e-13

    betas = np.full((m, 4), np.nan)
    rss = np.full(m, np.inf)
    if np.any(valid):
        av, rv = A[valid], rhs[valid]
        try:
            sol = np.linalg.solve(av, rv[..., None])[..., 0]
            # one round of iterative refinement recovers accuracy on
            # ill-conditioned pairs (nearly coincident breakpoints)
            defect = rv - np.einsum("ijk,ik->ij", av, sol)
            sol = sol + np.linalg.solve(av, defect[..., None])[..., 0]
        except np.linalg.LinAlgError:
            idx = np.nonzero(valid)[0]
            sol = np.empty((idx.size, 4))
            for row, k in enumerate(idx):
                sol[row], *_ = np.linalg.lstsq(A[k], rhs[k], rcond=None)
        betas[valid] = sol
        rss[valid] = np.maximum(ss.Syy - np.einsum("ij,ij->i", sol, rv), 0.0)
    return betas, rss, valid


def profile_inner_ols(xs: np.ndarray, ys: np.ndarray, a1: float, a2: float):
    """Inner least squares for one fixed breakpoint pair, via the same
    suffix-sum normal equations the candidate screen uses.

    Returns ``(beta, rss)``; raises :class:`SegmentedError` if the inner
    design is numerically singular.
    """
    if not a1 < a2:
        raise SegmentedError("breakpoints must satisfy a1 < a2")
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    order = np.argsort(xs, kind="stable")
    xs, ys = xs[order], ys[order]
    ss = _SuffixSums(xs, ys)
    pos1 = np.searchsorted(xs, a1, side="right")
    pos2 = np.searchsorted(xs, a2, side="right")
    betas, rss, valid = _screen_pairs(ss, [a1], [a2], [pos1], [pos2])
    if not valid[0]:
        raise SegmentedError(f"inner least squares singular at breakpoints ({a1}, {a2})")
    return betas[0], float(rss[0])


def candidate_breakpoints(xs: np.ndarray) -> np.ndarray:
    """Midpoints between consecutive distinct x values."""
    u = np.unique(xs)
    return (u[:-1] + u[1:]) / 2.0


def _candidate_pairs(xs: np.ndarray, min_pts: int):
    mids = candidate_breakpoints(xs)
    pos = np.searchsorted(xs, mids, side="right")
    m = mids.size
    i_idx, j_idx = np.triu_indices(m, k=1)
    n = xs.size
    keep = (
        (pos[i_idx] >= min_pts)
        & (pos[j_idx] - pos[i_idx] >= min_pts)
        & (n - pos[j_idx] >= min_pts)
    )
    return mids, pos, i_idx[keep], j_idx[keep]


def _segment_counts(xs, a1, a2):
    p1 = np.searchsorted(xs, a1, side="right")
    p2 = np.searchsorted(xs, a2, side="right")
    return p1, p2 - p1, xs.size - p2


def _alpha_valid(xs, a1, a2, min_pts):
    if not (xs[0] < a1 < a2 < xs[-1]):
        return False
    c1, c2, c3 = _segment_counts(xs, a1, a2)
    return c1 >= min_pts and c2 >= min_pts and c3 >= min_pts


def _exact_rss(xs, ys, a1, a2):
    design = segmented_design(xs, a1, a2)
    beta, *_ = np.linalg.lstsq(design, ys, rcond=None)
    resid = ys - design @ beta
    return beta, float(resid @ resid)


def _gauss_newton(xs, ys, theta0, min_pts, max_iter=100):
    """Polish the full parameter vector; only accepts improving, feasible steps.

    Returns (theta, rss, ok) with ok False when the step computation produced
    non-finite values (divergence).
    """
    theta = np.asarray(theta0, dtype=float).copy()

    def rss_of(t):
        r = ys - _theta_predict(xs, t)
        return float(r @ r)

    best = rss_of(theta)
    for _ in range(max_iter):
        J = _theta_jacobian(xs, theta)
        r = ys - _theta_predict(xs, theta)
        try:
            step, *_ = np.linalg.lstsq(J, r, rcond=None)
        except np.linalg.LinAlgError:
            return theta, best, False
        if not np.all(np.isfinite(step)):
            return theta, best, False
        scale = 1.0
        improved = False
        for _ in range(40):
            cand = theta + scale * step
            if _alpha_valid(xs, cand[4], cand[5], min_pts):
                cand_rss = rss_of(cand)
                if cand_rss < best - 1e-14 * (1.0 + best):
                    theta, best = cand, cand_rss
                    improved = True
                    break
            scale *= 0.5
        if not improved:
            break
    return theta, best, True


@dataclass(frozen=True)
class InferenceRow:
    parameter: str
    estimate: float
    se: float
    t: float
    p: float
    ci_lower: float
    ci_upper: float


@dataclass
class SegmentedFit:
    """Fit result with residual variance, covariance, and inference rows.

    ``inference`` is keyed ``alpha1, alpha2, slope1, slope2, slope3``; the
    slope rows are the delta-method contrasts ``b1``, ``b1+b2``, ``b1+b2+b3``.
    Breakpoint t/p values test the location against 0 for report-layout
    parity only; a location parameter has no meaningful null at 0, so read
    the breakpoint rows for their estimates and intervals.
    """

    model: SegmentedModel
    rss: float
    df: int
    sigma2: float
    cov: np.ndarray
    inference: dict[str, InferenceRow]
    n: int
    min_segment_points: int
    cov_pd: bool
    grid_fallback: bool = False
    unidentified: tuple[str, ...] = ()
    x_range: tuple[float, float] = (0.0, 0.0)


def _t_row(name, est, se, df, level=0.95) -> InferenceRow:
    if not math.isfinite(se) or se <= 0.0:
        return InferenceRow(name, est, math.inf, math.nan, math.nan, -math.inf, math.inf)
    t = est / se
    p = 2.0 * float(stats.t.sf(abs(t), df))
    tq = float(stats.t.ppf(0.5 + level / 2.0, df))
    return InferenceRow(name, est, se, t, p, est - tq * se, est + tq * se)


def fit_segmented(
    ds: BivariateDataset,
    init: SegmentedModel | None = None,
    min_segment_points: int = 3,
    polish: bool = True,
    loess_seed: bool = True,
) -> SegmentedFit:
    """Fit the two-breakpoint model by profile grid search plus polish.

    Parameters
    ----------
    ds : BivariateDataset
    init : SegmentedModel, optional
        Extra polish start (for example a previous fit); the profile grid is
        always searched in full regardless.
    min_segment_points : int
        Minimum observations per segment for an admissible breakpoint pair.
    polish : bool
        Run Gauss-Newton refinement from the best candidates.
    loess_seed : bool
        Derive one extra polish start from the curvature of a loess fit.

    Raises
    ------
    SegmentedError
        Too little data, no admissible breakpoint pair, or a singular inner
        problem at every candidate pair.
    """
    n = ds.n
    min_pts = int(min_segment_points)
    if min_pts < 2:
        raise SegmentedError("min_segment_points must be at least 2")
    if n < 7:
        raise SegmentedError(f"need at least 7 points for 6 parameters, got {n}")
    if n < 3 * min_pts:
        raise SegmentedError(f"need at least {3 * min_pts} points for {min_pts} per segment, got {n}")
    xs, ys = ds.xs, ds.ys
    if np.unique(xs).size < 6:
        raise SegmentedError("need at least 6 distinct x values")

    mids, pos, i_idx, j_idx = _candidate_pairs(xs, min_pts)
    if i_idx.size == 0:
        raise SegmentedError(
            f"no breakpoint pair satisfies {min_pts} points per segment for n={n}"
        )
    ss = _SuffixSums(xs, ys)
    _, rss_screen, valid = _screen_pairs(ss, mids[i_idx], mids[j_idx], pos[i_idx], pos[j_idx])
    if not np.any(valid):
        raise SegmentedError("inner least squares singular for every candidate breakpoint pair")

    # Exact re-scoring of the best-screened candidates guards the ranking
    # against accumulation error in the normal-equations shortcut.
    k_rescore = min(64, int(valid.sum()))
    order = np.argsort(rss_screen, kind="stable")[:k_rescore]
    rescored = []
    for k in order:
        if not valid[k]:
            continue
        a1, a2 = float(mids[i_idx[k]]), float(mids[j_idx[k]])
        beta, rss_exact = _exact_rss(xs, ys, a1, a2)
        rescored.append((rss_exact, a1, a2, beta))
    if not rescored:
        raise SegmentedError("inner least squares singular for every candidate breakpoint pair")
    rescored.sort(key=lambda item: item[:3])
    grid_rss, grid_a1, grid_a2, grid_beta = rescored[0]

    # The profiled objective has many near-tied local minima; polishing from
    # several leading candidates keeps the search global in practice.
    starts: list[tuple[float, float]] = [(a1, a2) for _, a1, a2, _ in rescored[:10]]
    if loess_seed:
        guess = loess_breakpoint_guesses(ds)
        if guess is not None and _alpha_valid(xs, guess[0], guess[1], min_pts):
            starts.append(guess)
    if init is not None and _alpha_valid(xs, init.alpha[0], init.alpha[1], min_pts):
        starts.append((float(init.alpha[0]), float(init.alpha[1])))

    theta_best = np.concatenate([grid_beta, [grid_a1, grid_a2]])
    rss_best = grid_rss
    grid_fallback = False
    if polish:
        any_ok = False
        for a1, a2 in starts:
            try:
                beta0, _ = _exact_rss(xs, ys, a1, a2)
            except np.linalg.LinAlgError:
                continue
            theta, rss, ok = _gauss_newton(xs, ys, np.concatenate([beta0, [a1, a2]]), min_pts)
            any_ok = any_ok or ok
            if rss < rss_best - 1e-14 * (1.0 + rss_best) or (
                rss <= rss_best and (theta[4], theta[5]) < (theta_best[4], theta_best[5])
            ):
                theta_best, rss_best = theta, rss
        grid_fallback = not any_ok

    model = SegmentedModel(beta=tuple(theta_best[:4]), alpha=(float(theta_best[4]), float(theta_best[5])))
    resid = ys - _theta_predict(xs, theta_best)
    rss = float(resid @ resid)
    df = n - 6
    sigma2 = rss / df

    J = _theta_jacobian(xs, theta_best)
    jtj = J.T @ J
    cov_pd = True
    try:
        np.linalg.cholesky(jtj)
        cov = sigma2 * np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        cov_pd = False
        cov = sigma2 * np.linalg.pinv(jtj)

    # A vanishing slope change makes the matching breakpoint unidentifiable
    # (its Jacobian column is numerically zero).
    beta_scale = max(1.0, float(np.max(np.abs(theta_best[:4]))))
    unidentified = []
    for name, col in (("alpha1", 4), ("alpha2", 5)):
        if np.linalg.norm(J[:, col]) <= 1e-9 * beta_scale * math.sqrt(n):
            unidentified.append(name)

    inference: dict[str, InferenceRow] = {}
    for name, col, est in (("alpha1", 4, model.alpha[0]), ("alpha2", 5, model.alpha[1])):
        if name in unidentified:
            inference[name] = InferenceRow(
                name, est, math.inf, math.nan, math.nan, float(xs[0]), float(xs[-1])
            )
        else:
            se = math.sqrt(max(cov[col, col], 0.0))
            inference[name] = _t_row(name, est, se, df)
    contrasts = {
        "slope1": np.array([0.0, 1.0, 0.0, 0.0]),
        "slope2": np.array([0.0, 1.0, 1.0, 0.0]),
        "slope3": np.array([0.0, 1.0, 1.0, 1.0]),
    }
    for name, c in contrasts.items():
        full = np.concatenate([c, [0.0, 0.0]])
        est = float(c @ theta_best[:4])
        se = math.sqrt(max(float(full @ cov @ full), 0.0))
        inference[name] = _t_row(name, est, se, df)

    return SegmentedFit(
        model=model,
        rss=rss,
        df=df,
        sigma2=sigma2,
        cov=cov,
        inference=inference,
        n=n,
        min_segment_points=min_pts,
        cov_pd=cov_pd,
        grid_fallback=grid_fallback,
        unidentified=tuple(unidentified),
        x_range=(float(xs[0]), float(xs[-1])),
    )


def contrast_inference(fit: SegmentedFit, contrast, name: str = "contrast") -> InferenceRow:
    """Delta-method inference for an arbitrary linear contrast of the betas."""
    c = np.asarray(contrast, dtype=float)
    if c.shape != (4,):
        raise SegmentedError("contrast must have 4 coefficients (over beta)")
    full = np.concatenate([c, [0.0, 0.0]])
    est = float(c @ np.asarray(fit.model.beta))
    se = math.sqrt(max(float(full @ fit.cov @ full), 0.0))
    return _t_row(name, est, se, fit.df)


def breakpoint_intervals(fit: SegmentedFit, level: float) -> dict[str, tuple[float, float]]:
    """Symmetric t intervals for both breakpoints at the given level."""
    out = {}
    tq = float(stats.t.ppf(0.5 + level / 2.0, fit.df))
    for name, est in (("alpha1", fit.model.alpha[0]), ("alpha2", fit.model.alpha[1])):
        if name in fit.unidentified:
            out[name] = fit.x_range
        else:
            row = fit.inference[name]
            out[name] = (est - tq * row.se, est + tq * row.se)
    return out


def fit_report_rows(fit: SegmentedFit, significance_level: float = 0.05) -> list[dict]:
    """Report rows ``{parameter, estimate, se, t, p, ci_lower, ci_upper,
    significant}``; non-finite fields become None for JSON friendliness."""

    def clean(v):
        return float(v) if math.isfinite(v) else None

    rows = []
    for name in ("alpha1", "alpha2", "slope1", "slope2", "slope3"):
        row = fit.inference[name]
        rows.append(
            {
                "parameter": name,
                "estimate": clean(row.estimate),
                "se": clean(row.se),
                "t": clean(row.t),
                "p": clean(row.p),
                "ci_lower": clean(row.ci_lower),
                "ci_upper": clean(row.ci_upper),
                "significant": (math.isfinite(row.p) and row.p < significance_level),
            }
        )
    return rows


def segmented_fitter(min_segment_points: int = 3, polish: bool = True, loess_seed: bool = False):
    """Mean-model fitter adapter for the bootstrap: ``(xs, ys) -> fitted``."""

    def fitter(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        ds = BivariateDataset.from_arrays(xs, ys)
        fit = fit_segmented(
            ds, min_segment_points=min_segment_points, polish=polish, loess_seed=loess_seed
        )
        return eval_segmented(fit.model, xs)

    return fitter


def plrm_prediction_band(
    fit: SegmentedFit,
    ds: BivariateDataset,
    gamma: float,
    bootstrap_config: BandConfig | None = None,
    force_bootstrap: bool = False,
) -> PredictionBand:
    """Prediction band for the response on the observed design.

    The default is the parametric band ``yhat(x) +/- t * sqrt(sigma2 * (1 +
    g' (J'J)^-1 g))`` with ``g`` the mean-function gradient; when the
    curvature matrix is not positive definite (or on request) the band falls
    back to the residual bootstrap with the piecewise fitter.
    """
    if not (0.0 < gamma < 1.0):
        raise SegmentedError(f"gamma must be in (0, 1), got {gamma}")
    if force_bootstrap or not fit.cov_pd:
        config = bootstrap_config or BandConfig(gamma=gamma)
        if not math.isclose(config.gamma, gamma):
            config = BandConfig(B=config.B, gamma=gamma, rng=config.rng)
        band = bootstrap_band(
            ds,
            segmented_fitter(min_segment_points=fit.min_segment_points),
            config,
            method="PLRM",
        )
        band.meta["bootstrap_fallback"] = True
        return band
    xs = ds.xs
    theta = fit.model.theta
    center = _theta_predict(xs, theta)
    g = _theta_jacobian(xs, theta)
    quad = np.einsum("ij,jk,ik->i", g, fit.cov, g)
    variance = fit.sigma2 + np.maximum(quad, 0.0)
    half = float(stats.t.ppf(0.5 + gamma / 2.0, fit.df)) * np.sqrt(variance)
    return PredictionBand(
        grid_x=xs.copy(),
        center=center,
        lower=center - half,
        upper=center + half,
        gamma=float(gamma),
        method="PLRM",
        meta={"kind": "parametric"},
    )
