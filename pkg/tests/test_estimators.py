"""
Test file for the estimators module.
"""

###########
# Imports #
###########

# Python imports #

import sys
sys.path.append(".")

# Dependencies #

import numpy as np
import pytest
from scipy import stats

# Local imports #

# Import objects to test
from sinr_velocity._common import ParameterError, make_rng
from sinr_velocity.estimators import (
    running_mean,
    mean_ci,
    batch_means_ci,
    intervals_overlap,
    stabilization,
    survival_function,
    hill_tail_index,
    hill_sensitivity,
    ks_statistic,
    velocity_slope,
    relative_fluctuation,
    bootstrap_ci
)

# Import test tools
from tests._common import check_value

#############
# Constants #
#############

rng = make_rng(0)
exponential_samples = rng.exponential(2., 5000)
pareto_samples = rng.pareto(1.5, 20000) + 1

#########
# Tests #
#########

def test_running_mean():
    assert np.array_equal(running_mean(np.array([1., 2., 3.])), [1., 1.5, 2.])

def test_mean_ci():
    result = mean_ci(exponential_samples)
    assert result["n"] == 5000
    assert result["ci_low"] < 2. < result["ci_high"]
    check_value(2 * np.log(2), result["median"], 0.05)

def test_mean_ci_constant():
    result = mean_ci(np.full(10, 3.))
    assert result["ci_low"] == result["ci_high"] == 3.

def test_batch_means_ci():
    mean, low, high = batch_means_ci(exponential_samples, nb_batches=20)
    assert low < mean < high
    assert low < 2. < high
    with pytest.raises(ParameterError):
        batch_means_ci(np.ones(10), nb_batches=20)

def test_intervals_overlap():
    assert intervals_overlap((1., 0., 2.), (2.5, 1.5, 3.))
    assert not intervals_overlap((1., 0., 1.), (2.5, 1.5, 3.))

def test_stabilization():
    assert stabilization(np.full(100, 5.)) == 0.
    assert stabilization(exponential_samples) < 0.1
    # A heavy tail keeps moving the running mean
    assert stabilization(np.concatenate((np.ones(999), [1e6]))) > 0.5

def test_survival_function():
    grid, survival = survival_function(exponential_samples, 20)
    assert np.all(np.diff(grid) > 0)
    assert np.all(np.diff(survival) <= 0)
    middle = np.argmin(np.abs(grid - 2.))
    check_value(np.exp(-grid[middle] / 2), survival[middle], 0.1)

def test_hill_tail_index():
    check_value(1.5, hill_tail_index(pareto_samples), 0.1)
    sensitivity = hill_sensitivity(pareto_samples)
    assert set(sensitivity.keys()) == {0.05, 0.1, 0.2}

def test_hill_flat_tail():
    assert np.isinf(hill_tail_index(np.full(100, 4.)))

def test_hill_requires_samples():
    with pytest.raises(ParameterError):
        hill_tail_index(np.arange(1., 11.))

def test_ks_statistic():
    uniforms = make_rng(1).random(5000)
    assert ks_statistic(uniforms, stats.uniform.cdf) < 0.03
    assert ks_statistic(uniforms, make_rng(2).random(5000)) < 0.05
    assert ks_statistic(uniforms + 0.5, stats.uniform.cdf) > 0.4

def test_velocity_slope():
    times = np.arange(1., 11.)
    slope, stderr = velocity_slope(times, 0.3 * times + 1.)
    check_value(0.3, slope, 1e-9)
    assert stderr < 1e-9

def test_relative_fluctuation():
    assert relative_fluctuation(np.full(50, 2.)) == 0.
    series = np.concatenate((np.zeros(80), np.full(10, 1.), np.full(10, 1.2)))
    check_value(0.2 / 1.1, relative_fluctuation(series), 1e-9)

def test_bootstrap_ci():
    low, high = bootstrap_ci(exponential_samples, nb_resamples=500, rng=make_rng(3))
    assert low < np.mean(exponential_samples) < high

def test_paired_bootstrap_ratio():
    delays = make_rng(4).integers(1, 10, 400).astype(float)
    progress = 0.5 * delays
    low, high = bootstrap_ci((progress, delays), lambda x, t: np.sum(x) / np.sum(t), nb_resamples=200,
                             rng=make_rng(5))
    check_value(0.5, low, 1e-9)
    check_value(0.5, high, 1e-9)
