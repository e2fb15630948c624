"""
Test file for the acceptance checks.
"""

###########
# Imports #
###########

# Python imports #

import sys
sys.path.append(".")

# Dependencies #

import numpy as np

# Local imports #

# Import objects to test
from sinr_velocity.experiment import ResultSummary
from sinr_velocity.params import SimParams
from sinr_velocity.validation import (
    check_nn_law,
    check_campbell_integral,
    check_laplace_bound,
    check_geometric_tail,
    check_finiteness,
    check_aloha_contrast,
    check_velocity,
    check_stationarization,
    check_chernoff,
    check_determinism,
    stabilization_threshold,
    fluctuation_threshold,
    velocity_horizon
)

# Import test tools
from tests._common import check_value, fast_exit_time_parameters

#############
# Constants #
#############

params = SimParams(params_dict={"seed": 5})

###########
# Helpers #
###########

def checks_by_name(summary: ResultSummary) -> dict:
    return {check["check_name"]: check for check in summary.checks}

#########
# Tests #
#########

def test_check_nn_law():
    summary = ResultSummary("validate", params)
    check_nn_law(params, summary, scale=0.01)
    assert summary.passed

def test_check_campbell_integral():
    summary = ResultSummary("validate", params)
    check_campbell_integral(summary)
    assert len(summary.checks) == 4
    assert summary.passed

def test_check_laplace_bound():
    summary = ResultSummary("validate", params)
    check_laplace_bound(params, summary, scale=0.02)
    assert summary.passed

def test_check_chernoff():
    summary = ResultSummary("validate", params)
    check_chernoff(params, summary, scale=0.1)
    assert summary.passed

def test_check_determinism():
    small_params = SimParams(params_dict=fast_exit_time_parameters)
    summary = ResultSummary("validate", small_params)
    check_determinism(small_params, summary, jobs=2)
    assert summary.checks[0]["statistic"] == 0.

def test_thresholds_widen_with_smaller_samples():
    assert stabilization_threshold(10 ** 4) == 0.05
    assert stabilization_threshold(10 ** 5) == 0.05
    check_value(0.5, stabilization_threshold(100))
    assert fluctuation_threshold(10 ** 5) == 0.1
    check_value(0.1 * np.sqrt(10), fluctuation_threshold(10 ** 4))
    assert velocity_horizon(params, 1.) == params.horizon
    assert velocity_horizon(params, 0.01) == 10 ** 4

def test_check_geometric_tail():
    summary = ResultSummary("validate", params)
    check_geometric_tail(params, summary, scale=0.05)
    assert summary.checks[0]["check_name"] == "geometric_tail_violations"
    assert summary.passed

def test_check_finiteness():
    small_params = SimParams(params_dict=fast_exit_time_parameters)
    summary = ResultSummary("validate", small_params)
    check_finiteness(small_params, summary, scale=0.02, label="small")
    checks = checks_by_name(summary)
    assert set(checks) == {"small_running_mean_change", "small_censored_fraction"}
    check_value(stabilization_threshold(200), checks["small_running_mean_change"]["threshold"], 1e-12)

def test_check_aloha_contrast():
    small_params = SimParams(params_dict=fast_exit_time_parameters)
    summary = ResultSummary("validate", small_params)
    check_aloha_contrast(small_params, summary, scale=0.02)
    checks = checks_by_name(summary)
    assert checks["aloha_running_mean_change"]["threshold"] == 0.05
    assert checks["aloha_hill_tail_index"]["threshold"] == 1.2

def test_check_velocity():
    summary = ResultSummary("validate", params)
    check_velocity(params, summary, scale=0.1)
    checks = checks_by_name(summary)
    assert checks["velocity_horizon_reached"]["pass"]
    assert checks["velocity_positive"]["pass"]
    assert checks["velocity_ci_low"]["pass"]
    check_value(fluctuation_threshold(10 ** 4), checks["velocity_relative_fluctuation"]["threshold"], 1e-12)

def test_check_stationarization():
    summary = ResultSummary("validate", params)
    check_stationarization(params, summary, scale=0.1)
    checks = checks_by_name(summary)
    assert checks["enhanced_delay_dominance_violations"]["statistic"] == 0
    assert checks["enhanced_delay_dominance_violations"]["pass"]
    assert checks["stationary_velocity_below_plain"]["pass"]
