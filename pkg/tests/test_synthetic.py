import numpy as np
import pytest

from breakline.piecewise import SegmentedModel, eval_segmented
from breakline.rng import RngSpec
from breakline.synthetic import (
    GaussianNoise,
    SyntheticError,
    SyntheticSpec,
    WedgeNoise,
    generate,
    ols_oracle,
    quantile_oracle,
)

TRUTH = SegmentedModel(beta=(10.0, 0.0, -5.0, 5.0), alpha=(0.3, 0.6))


def test_zero_noise_is_truth():
    spec = SyntheticSpec(model=TRUTH, n=50, noise=GaussianNoise(0.0), rng=RngSpec(1))
    ds = generate(spec)
    assert np.array_equal(ds.ys, eval_segmented(TRUTH, ds.xs))


def test_deterministic_per_seed():
    spec = SyntheticSpec(model=TRUTH, n=40, noise=GaussianNoise(0.5), rng=RngSpec(3))
    a, b = generate(spec), generate(spec)
    assert np.array_equal(a.ys, b.ys)
    other = generate(SyntheticSpec(model=TRUTH, n=40, noise=GaussianNoise(0.5), rng=RngSpec(4)))
    assert not np.array_equal(a.ys, other.ys)


def test_wedge_variance_ordering():
    """Upper-tercile residual variance exceeds the lower tercile in nearly
    every seed once n is large."""
    wins = 0
    runs = 100
    for seed in range(runs):
        spec = SyntheticSpec(model=TRUTH, n=120, noise=WedgeNoise(1.0, 1.5), rng=RngSpec(seed))
        ds = generate(spec)
        resid = ds.ys - eval_segmented(TRUTH, ds.xs)
        k = ds.n // 3
        wins += resid[-k:].var() > resid[:k].var()
    assert wins >= 95


def test_fixed_design():
    xs = [0.0, 0.2, 0.4, 0.61, 0.8, 1.0]
    spec = SyntheticSpec(model=TRUTH, n=6, noise=GaussianNoise(0.0), rng=RngSpec(0), x_design=xs)
    ds = generate(spec)
    assert np.array_equal(ds.xs, xs)


def test_spec_validation():
    with pytest.raises(SyntheticError):
        SyntheticSpec(model=TRUTH, n=10, noise=GaussianNoise(0.0), x_min=0.0, x_max=0.25)
    with pytest.raises(SyntheticError):
        SyntheticSpec(model=TRUTH, n=5, noise=GaussianNoise(0.0), x_design=[0.0, 1.0])
    with pytest.raises(SyntheticError):
        WedgeNoise(0.0, 1.0)
    with pytest.raises(SyntheticError):
        GaussianNoise(-1.0)
    wedge = WedgeNoise(1.0, -2.0)  # scale hits zero inside [0, 1]
    with pytest.raises(SyntheticError):
        generate(SyntheticSpec(model=TRUTH, n=10, noise=wedge))


def test_ols_oracle_interpolates_two_points():
    design = np.array([[1.0, 0.0], [1.0, 1.0]])
    ys = np.array([1.0, 3.0])
    coef = ols_oracle(design, ys)
    assert np.allclose(coef, [1.0, 2.0])
    with pytest.raises(np.linalg.LinAlgError):
        ols_oracle(np.ones((3, 2)), np.arange(3.0))


def test_quantile_oracle_median_example():
    design = np.ones((5, 1))
    ys = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    # objective at the median: 0.5 * (2 + 1 + 0 + 1 + 2) = 3
    assert quantile_oracle(design, ys, 0.5) == pytest.approx(3.0)


def test_quantile_oracle_is_a_lower_bound():
    from breakline.quantile import check_objective, fit_quantile_linear

    rng = np.random.default_rng(6)
    for _ in range(50):
        n = int(rng.integers(4, 9))
        design = np.column_stack([np.ones(n), rng.standard_normal(n)])
        ys = rng.standard_normal(n)
        tau = float(rng.uniform(0.1, 0.9))
        oracle = quantile_oracle(design, ys, tau)
        beta = fit_quantile_linear(design, ys, tau)
        solver_obj = check_objective(ys - design @ beta, tau)
        assert solver_obj >= oracle - 1e-12
        assert solver_obj == pytest.approx(oracle, abs=1e-9)
