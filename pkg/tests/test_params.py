"""
Test file for the params module.
"""

###########
# Imports #
###########

# Python imports #

import sys
sys.path.append(".")

# Dependencies #

import pytest

# Local imports #

# Import objects to test
from sinr_velocity._common import ParameterError, HypothesisWarning
from sinr_velocity.params import SimParams
from sinr_velocity.protocol import PowerControlPolicy, AlohaPolicy

# Import test tools
from tests._common import check_value

#########
# Tests #
#########

def test_default_constants():
    params = SimParams()
    check_value(1 / 0.9, params.c)
    check_value(0.225, params.c1)
    check_value(0.25, params.beta_gamma)
    params.check()

def test_load_database_file():
    params = SimParams("exit_time")
    assert params.replications == 1000
    assert params.intensity == 1.
    assert params.guard == 20.

def test_aliases():
    params = SimParams(params_dict={"lambda": 2., "G": 15., "N": 0.2, "eps": 0.2})
    assert params.intensity == 2.
    assert params.guard == 15.
    assert params.noise == 0.2
    assert params.epsilon == 0.2

def test_unknown_parameter():
    with pytest.raises(ParameterError):
        SimParams(params_dict={"temperature": 300})

def test_copy_is_independent():
    params = SimParams()
    other = params.copy(beta=1.)
    assert other.beta == 1.
    assert params.beta == 0.5

def test_policy_model():
    assert isinstance(SimParams().policy_model(), PowerControlPolicy)
    aloha = SimParams(params_dict={"policy": "aloha", "p_fixed": 0.25}).policy_model()
    assert isinstance(aloha, AlohaPolicy)
    check_value(4., aloha.P_fixed)

def test_window_larger_than_guard():
    with pytest.raises(ParameterError):
        SimParams(params_dict={"L_x": 40., "guard": 20.}).check()

def test_integer_horizons():
    with pytest.raises(ParameterError):
        SimParams(params_dict={"hop_horizon": 0}).check()
    with pytest.raises(ParameterError):
        SimParams(params_dict={"replications": 2.5}).check()

def test_hypothesis_warning():
    params = SimParams(params_dict={"beta": 2.5})
    with pytest.warns(HypothesisWarning):
        params.check()

def test_aloha_is_not_warned():
    params = SimParams(params_dict={"beta": 2.5, "policy": "aloha"})
    params.check()
