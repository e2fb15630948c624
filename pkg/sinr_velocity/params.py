"""
Module to define the full parameterization of a simulation.
"""

###########
# Imports #
###########

# Python imports #

import os
import json
import logging
import warnings
from copy import deepcopy
from typing import Literal

# Local imports #

from sinr_velocity._common import (
    ParameterError,
    HypothesisWarning
)
from sinr_velocity.channel import ChannelParams
from sinr_velocity.protocol import (
    PowerControlPolicy,
    AlohaPolicy,
    ConeChoiceModel
)
from sinr_velocity.spatial import ConePartition, Window

#############
# Constants #
#############

logger = logging.getLogger(__name__)

# Define a default parameters database location
default_params_database = os.path.join(
    os.path.dirname(__file__), "config_database")

# Short names accepted in configuration files and overrides
PARAMETER_ALIASES = {
    "lambda": "intensity",
    "N": "noise",
    "G": "guard",
    "eps": "epsilon",
}

###########
# Classes #
###########

class SimParams:
    """
    Full parameterization of the space-time SINR network simulation.

    Parameters
    ----------
    params_data_name : str | None, optional
        Name of a parameter file of the database to load, by default None
    params_database_folder : str, optional
        Path to the database folder, by default default_params_database
    params_dict : dict | None, optional
        Flat dictionary of parameters to set, applied after the file, by default None
    """

    # Point process
    intensity: float = 1.  # points per unit area

    # Channel
    alpha: float = 4.
    mu: float = 1.
    beta: float = 0.5
    gamma: float = 0.5
    noise: float = 0.1

    # Policy
    policy: Literal["power_control", "aloha"] = "power_control"
    M: float = 1.
    epsilon: float = 0.1
    P_fixed: float | None = None
    p_fixed: float = 0.5
    cone_choice: Literal["uniform_random", "worst_case"] = "uniform_random"

    # Geometry
    m: int = 6
    L_x: float = 60.
    L_y: float = 60.
    guard: float = 20.

    # Time and replications
    horizon: int = 100000  # slots of a traversal
    hop_horizon: int = 10000  # slots of one exit time
    replications: int = 1
    seed: int = 0
    stationary_mode: bool = False

    def __init__(self,
                 params_data_name: str | None = None,
                 params_database_folder: str = default_params_database,
                 params_dict: dict | None = None):
        if params_data_name is not None:
            self.load_params_data(params_data_name, params_database_folder)
        if params_dict is not None:
            self.set_parameters(**params_dict)

    @classmethod
    def parameter_names(cls) -> list[str]:
        """
        Names of all the parameters.
        """

        return list(cls.__annotations__.keys())

    def load_params_data(self, params_data_name: str, params_data_folder: str = default_params_database):
        """
        Load the parameters stored in the given database folder or at the given path.

        Parameters
        ----------
        params_data_name : str
            Name of the parameter file, or path to a json file.
        params_data_folder : str, optional
            Path to the database folder, by default default_params_database
        """

        # Load the json file
        if params_data_name.endswith(".json"):
            file_path = params_data_name
        else:
            file_path = os.path.join(params_data_folder, params_data_name + ".json")
        with open(file_path, "r") as file:
            params_dict = json.load(file)

        # Only keep the simulation keys
        self.set_parameters(**{key: value for key, value in params_dict.items()
                               if PARAMETER_ALIASES.get(key, key) in self.parameter_names()})

    def set_parameters(self, **kwargs):
        """
        Set parameters from keyword arguments, aliases included.

        Raises
        ------
        ParameterError
            Raise error on unknown parameter names.
        """

        for key, value in kwargs.items():
            name = PARAMETER_ALIASES.get(key, key)
            if name not in self.parameter_names():
                raise ParameterError(f"Unknown simulation parameter '{key}'.")
            setattr(self, name, value)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.parameter_names()}

    def copy(self, **overrides) -> "SimParams":
        new_params = SimParams(params_dict=deepcopy(self.to_dict()))
        new_params.set_parameters(**overrides)
        return new_params

    @property
    def beta_gamma(self) -> float:
        return self.beta * self.gamma

    @property
    def c(self) -> float:
        return self.M / (1 - self.epsilon)

    @property
    def c1(self) -> float:
        return self.beta * self.gamma * (1 - self.epsilon)

    def channel_params(self) -> ChannelParams:
        return ChannelParams(alpha=self.alpha, mu=self.mu, noise=self.noise, gamma=self.gamma, beta=self.beta)

    def policy_model(self) -> PowerControlPolicy | AlohaPolicy:
        """
        Create the transmission policy. Without explicit ALOHA power, the average power M is kept.
        """

        if self.policy == "power_control":
            return PowerControlPolicy(M=self.M, epsilon=self.epsilon)
        if self.P_fixed is None:
            return AlohaPolicy.with_average_power(self.M, self.p_fixed)
        return AlohaPolicy(P_fixed=self.P_fixed, p_fixed=self.p_fixed)

    def cone_choice_model(self) -> ConeChoiceModel:
        return ConeChoiceModel(self.cone_choice)

    def partition(self) -> ConePartition:
        return ConePartition(self.m)

    def exit_time_window(self) -> Window:
        return Window.centered(self.L_x, self.L_y)

    def traversal_window(self) -> Window:
        return Window.strip(self.L_x, self.L_y)

    def check(self):
        """
        Check the consistency of the parameters.

        Raises
        ------
        ParameterError
            Raise error if a parameter is outside of its range.
        """

        # Channel, policy and partition checks are done by their constructors
        self.channel_params()
        self.policy_model()
        self.cone_choice_model()
        self.partition()

        if not self.intensity > 0:
            raise ParameterError(f"The intensity must be positive, got {self.intensity}.")
        if self.policy not in ("power_control", "aloha"):
            raise ParameterError(f"Unknown policy '{self.policy}'.")
        if not self.guard > 0:
            raise ParameterError(f"The guard margin must be positive, got {self.guard}.")
        if not (self.L_x > 2 * self.guard and self.L_y > 2 * self.guard):
            raise ParameterError(
                f"The window ({self.L_x} x {self.L_y}) must be larger than twice the guard margin ({self.guard}).")
        for name in ("horizon", "hop_horizon", "replications"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ParameterError(f"The parameter {name} must be a positive integer.")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ParameterError(f"The seed must be a non-negative integer, got {self.seed}.")

        # The finite exit time hypothesis is reported, not enforced
        if self.policy == "power_control" and self.beta_gamma >= 1:
            message = f"beta * gamma = {self.beta_gamma:g} >= 1: the finite expected exit time hypothesis is violated."
            logger.warning(message)
            warnings.warn(message, HypothesisWarning, stacklevel=2)
