"""Residual-bootstrap prediction bands, generic over the mean-model fitter.

The resampling scheme: fit the mean model once, center its residuals, and for
each replicate (1) build a synthetic response from the fitted curve plus
resampled residuals, (2) refit the model on it, (3) center the replicate's
residuals and resample them a second time, and (4) record the predicted
residual ``fitted - refit + resampled``.  Pointwise empirical quantiles of the
predicted residuals, added back to the fitted curve, give the band.

A "fitter" here is any function mapping ``(xs, ys) -> fitted values at xs``;
the scheme works for parametric and nonparametric mean models alike.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import BivariateDataset
from .rng import RngSpec

_MAX_RETRIES = 10


class BootstrapError(RuntimeError):
    """A replicate's model refit kept failing, or the configuration is invalid."""


@dataclass(frozen=True)
class BandConfig:
    """Replicate count, confidence coefficient, and seed for one band run."""

    B: int = 10_000
    gamma: float = 0.80
    rng: RngSpec = field(default_factory=RngSpec)

    def __post_init__(self) -> None:
        if not (0.0 < self.gamma < 1.0):
            raise BootstrapError(f"gamma must be in (0, 1), got {self.gamma}")
        if self.B < 2.0 / (1.0 - self.gamma):
            raise BootstrapError(
                f"B={self.B} is too small for gamma={self.gamma}; "
                f"need B >= 2/(1-gamma) = {2.0 / (1.0 - self.gamma):.1f}"
            )


@dataclass(eq=False)
class PredictionBand:
    """Envelope [lower, upper] around a center curve on an x grid.

    ``lower <= upper`` holds for quantile-of-residual bands by construction;
    bands built from a pair of conditional-quantile curves may cross, in
    which case ``crossings`` lists the offending grid indices and the area
    computation clamps the height at zero.  ``center`` is not required to lie
    inside the envelope.
    """

    grid_x: np.ndarray
    center: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    gamma: float
    area: float | None = None
    method: str = ""
    crossings: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("grid_x", "center", "lower", "upper"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.grid_x.shape == self.center.shape == self.lower.shape == self.upper.shape):
            raise ValueError("grid_x, center, lower, upper must share one shape")


def predicted_residual_pool(ds: BivariateDataset, fitter, config: BandConfig):
    """Run the resampling loop once; returns (center, pool of shape (B, n)).

    A replicate whose refit raises is retried with fresh residual draws up to
    10 times, after which the whole run aborts naming the replicate.
    """
    xs, ys = ds.xs, ds.ys
    n = ds.n
    center = np.asarray(fitter(xs, ys), dtype=float)
    if center.shape != ys.shape:
        raise BootstrapError("fitter must return one fitted value per observation")
    resid = ys - center
    centered = resid - resid.mean()
    pool = np.empty((config.B, n))
    for b in range(config.B):
        gen = config.rng.stream(b)
        refit = None
        for _ in range(1 + _MAX_RETRIES):
            draw = gen.integers(0, n, size=n)
            y_star = center + centered[draw]
            try:
                refit = np.asarray(fitter(xs, y_star), dtype=float)
                break
            except Exception:
                continue
        if refit is None:
            raise BootstrapError(f"model fitter failed for replicate {b} after {_MAX_RETRIES} retries")
        e_star = y_star - refit
        e_centered = e_star - e_star.mean()
        draw2 = gen.integers(0, n, size=n)
        pool[b] = center - refit + e_centered[draw2]
    return center, pool


def band_from_pool(ds: BivariateDataset, center, pool, gamma, method="", meta=None) -> PredictionBand:
    """Pointwise empirical quantiles of the pool around the center curve.

    Quantiles interpolate linearly between closest order statistics (rank
    ``q * (B - 1) + 1``), so the same pool gives nested bands for nested
    confidence coefficients.
    """
    q_lo = np.quantile(pool, (1.0 - gamma) / 2.0, axis=0)
    q_hi = np.quantile(pool, (1.0 + gamma) / 2.0, axis=0)
    info = {"B": int(pool.shape[0])}
    if meta:
        info.update(meta)
    return PredictionBand(
        grid_x=ds.xs.copy(),
        center=np.asarray(center, dtype=float).copy(),
        lower=center + q_lo,
        upper=center + q_hi,
        gamma=float(gamma),
        method=method,
        meta=info,
    )


def bootstrap_bands(ds: BivariateDataset, fitter, config: BandConfig, gammas, method="") -> list[PredictionBand]:
    """Bands at several confidence coefficients from one replicate pool."""
    for g in gammas:
        BandConfig(B=config.B, gamma=g, rng=config.rng)  # validate each pairing
    center, pool = predicted_residual_pool(ds, fitter, config)
    meta = {"seed": config.rng.seed}
    return [band_from_pool(ds, center, pool, g, method=method, meta=meta) for g in gammas]


def bootstrap_band(ds: BivariateDataset, fitter, config: BandConfig, method="") -> PredictionBand:
    """Single band at ``config.gamma``; deterministic given (ds, fitter, config)."""
    return bootstrap_bands(ds, fitter, config, [config.gamma], method=method)[0]


def ols_line_fitter(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Least-squares straight line, in the fitter signature used above."""
    design = np.column_stack([np.ones_like(xs), xs])
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    return design @ coef
