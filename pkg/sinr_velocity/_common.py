"""
Module to define common tools for all sinr-velocity modules.
"""

###########
# Imports #
###########

# Python imports #

import logging

# Dependencies #

import numpy as np
import matplotlib.pyplot as plt

#############
# Constants #
#############

# Purposes of the random streams, used as second spawn key
STREAM_GEOMETRY = 0
STREAM_REAL_SLOTS = 1
STREAM_VIRTUAL_SLOTS = 2
STREAM_BACKWARD_CHAIN = 3
STREAM_REFILLS = 4
STREAM_DIAGNOSTICS = 5

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

##############
# Exceptions #
##############

class SinrVelocityError(Exception):
    """
    Base class of the errors raised by sinr-velocity.
    """

class ParameterError(SinrVelocityError, ValueError):
    """
    Raised when a parameter is outside of its admissible range.
    """

class GeometryError(SinrVelocityError, ValueError):
    """
    Raised on coincident points or degenerate directions.
    """

class ModelError(SinrVelocityError, ArithmeticError):
    """
    Raised when the SINR model is ill-defined (zero denominator).
    """

class NoNeighborError(SinrVelocityError):
    """
    Raised when a destination cone contains no other point.
    """

class ConditionViolationError(SinrVelocityError, ValueError):
    """
    Raised when c1 = beta * gamma * (1 - epsilon) is not below one.
    """

class ConfigError(SinrVelocityError, ValueError):
    """
    Raised on malformed experiment configuration.

    Parameters
    ----------
    key : str
        Name of the offending configuration key.
    message : str
        Description of the problem.
    """

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"Invalid configuration key '{key}': {message}")

class HypothesisWarning(UserWarning):
    """
    Warning emitted when a run violates the finite exit time hypothesis.
    """

#############
# Functions #
#############

def configure_logging(verbosity: int = 0):
    """
    Attach a stream handler to the package logger.

    Parameters
    ----------
    verbosity : int, optional
        0 for warnings, 1 for info, 2 or more for debug, by default 0
    """

    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    package_logger = logging.getLogger("sinr_velocity")
    if not any(isinstance(handler, logging.StreamHandler) and not isinstance(handler, logging.NullHandler)
               for handler in package_logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        package_logger.addHandler(handler)
    package_logger.setLevel(level)

def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """
    Create an independent random stream for the given seed and keys.

    Parameters
    ----------
    seed : int
        Master seed of the experiment.
    *keys : int
        Spawn keys, typically the replication index and the stream purpose.

    Returns
    -------
    np.random.Generator
        Generator on a PCG64 bit generator.
    """

    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(key) for key in keys))
    return np.random.Generator(np.random.PCG64(sequence))

def derive_seed(seed: int, *keys: int) -> int:
    """
    Derive a 63 bits sub-seed, used for sweep points and per-Phi seeds.

    Parameters
    ----------
    seed : int
        Master seed.
    *keys : int
        Spawn keys.

    Returns
    -------
    int
        Derived seed.
    """

    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(key) for key in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))

def check_positive(name: str, value: float, allow_zero: bool = False):
    """
    Check that a parameter is positive.

    Raises
    ------
    ParameterError
        Raise error if the value is negative, zero (unless allowed) or not finite.
    """

    if not np.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        raise ParameterError(
            f"The parameter {name} must be {'non-negative' if allow_zero else 'positive'}, got {value}.")

def check_open_unit_interval(name: str, value: float):
    """
    Check that a parameter lies in (0, 1).

    Raises
    ------
    ParameterError
        Raise error if the value is outside of (0, 1).
    """

    if not 0 < value < 1:
        raise ParameterError(
            f"The parameter {name} must lie in (0, 1), got {value}.")

def plot_graph(
        x_array: np.ndarray,
        y_array: np.ndarray,
        data_label: str | None = None,
        title: str | None = None,
        use_grid: bool = False,
        use_legend: bool = False,
        save_path: str | None = None,
        hold_plot: bool = False,
        clear_before_plot: bool = False,
        axis_type: str | None = None,
        x_label: str | None = None,
        y_label: str | None = None,
        log_scale: bool = False):
    """
    Plot a graph with the selected arguments.

    Parameters
    ----------
    x_array : np.ndarray
        X data.
    y_array : np.ndarray
        Y data.
    data_label : str | None, optional
        Data label, by default None
    title : str | None, optional
        Title, by default None
    use_grid : bool, optional
        Indicate wether to use grid, by default False
    use_legend : bool, optional
        Indicate wether to show the legend, by default False
    save_path : str | None, optional
        Path to save the figure, by default None
    hold_plot : bool, optional
        Indicate wether the graph is kept or plot, by default False
    clear_before_plot : bool, optional
        Indicate wether the graph is cleared before plotting, by default False
    axis_type : str | None, optional
        Type of axis, by default None
    x_label : str | None, optional
        X data label, by default None
    y_label : str | None, optional
        Y data label, by default None
    log_scale : bool, optional
        Use log-log axes, for survival functions, by default False
    """

    # Clear plot if needed
    if clear_before_plot:
        plt.cla()
        plt.clf()

    # Add data
    if log_scale:
        plt.loglog(x_array, y_array, label=data_label)
    else:
        plt.plot(x_array, y_array, label=data_label)

    # Add labels
    if x_label is not None:
        plt.xlabel(x_label)
    if y_label is not None:
        plt.ylabel(y_label)

    # Add title
    if title is not None:
        plt.title(title)

    # Set axis type
    if axis_type is not None:
        plt.axis(axis_type)

    # Enable grid if needed
    if use_grid:
        plt.grid()

    # Enable legend if needed
    if use_legend:
        plt.legend()

    # Save figure if needed
    if save_path is not None:
        plt.savefig(save_path)

    # Show it if needed
    if not hold_plot:
        plt.show()

###########
# Classes #
###########

class StreamSet:
    """
    Independent random streams of one replication, one per purpose.

    Adding a purpose never perturbs the draws of the existing ones.

    Parameters
    ----------
    seed : int
        Master seed.
    replication : int, optional
        Replication index, by default 0
    """

    def __init__(self, seed: int, replication: int = 0):
        self.seed = int(seed)
        self.replication = int(replication)
        self._streams = {}

    def stream(self, purpose: int) -> np.random.Generator:
        if purpose not in self._streams:
            self._streams[purpose] = make_rng(self.seed, self.replication, purpose)
        return self._streams[purpose]

    @property
    def geometry(self) -> np.random.Generator:
        return self.stream(STREAM_GEOMETRY)

    @property
    def real_slots(self) -> np.random.Generator:
        return self.stream(STREAM_REAL_SLOTS)

    @property
    def virtual_slots(self) -> np.random.Generator:
        return self.stream(STREAM_VIRTUAL_SLOTS)

    @property
    def backward_chain(self) -> np.random.Generator:
        return self.stream(STREAM_BACKWARD_CHAIN)

    @property
    def refills(self) -> np.random.Generator:
        return self.stream(STREAM_REFILLS)

    @property
    def diagnostics(self) -> np.random.Generator:
        return self.stream(STREAM_DIAGNOSTICS)
