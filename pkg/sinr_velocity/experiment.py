"""
Module to orchestrate the experiments: configuration, parallel replications, summaries and artifacts.
"""

###########
# Imports #
###########

# Python imports #

import os
import json
import logging
import itertools
import warnings
from copy import deepcopy
from importlib.metadata import version, PackageNotFoundError
from multiprocessing import Pool
from typing import Callable, Literal, get_args

# Dependencies #

import numpy as np
import pandas as pd
from tqdm import tqdm

# Local imports #

from sinr_velocity._common import (
    ConfigError,
    ConditionViolationError,
    NoNeighborError,
    SinrVelocityError,
    HypothesisWarning,
    StreamSet,
    derive_seed,
    STREAM_GEOMETRY
)
from sinr_velocity.analysis import hop_progress_mean, truncation_error, mean_delay_bound, inverse_power_moment
from sinr_velocity.engine import (
    run_exit_time,
    run_tagged_packet,
    information_velocity,
    PacketTrace
)
from sinr_velocity.estimators import (
    mean_ci,
    stabilization,
    hill_sensitivity,
    survival_function,
    bootstrap_ci,
    relative_fluctuation,
    velocity_slope,
    MIN_TAIL_SAMPLES
)
from sinr_velocity.params import SimParams, PARAMETER_ALIASES

#############
# Constants #
#############

logger = logging.getLogger(__name__)

ExperimentKind = Literal["exit-time", "velocity", "aloha-baseline", "validate", "sweep"]

# Keys of a configuration file that are not simulation parameters
EXPERIMENT_KEYS = (
    "experiment",
    "out",
    "jobs",
    "formats",
    "grid",
    "sweep_experiment",
    "validation_scale",
    "max_grid_points"
)

SWEEP_PARAMETERS = ("intensity", "alpha", "beta", "gamma", "m", "epsilon")
MAX_GRID_POINTS = 256

CSV_COLUMNS = {
    "exit-time": ["replication", "phi_seed", "T", "censored"],
    "velocity": ["slot", "d", "d_over_t"],
    "hops": ["i", "R", "theta", "T", "T_prime"],
    "validation": ["check_name", "statistic", "threshold", "pass"]
}

SURVIVAL_GRID_SIZE = 30

try:
    CODE_VERSION = version("sinr-velocity")
except PackageNotFoundError:
    CODE_VERSION = "unknown"

###########
# Classes #
###########

class ExperimentConfig:
    """
    Configuration of an experiment: kind, simulation parameters and output options.

    Parameters
    ----------
    experiment : Literal["exit-time", "velocity", "aloha-baseline", "validate", "sweep"], optional
        Kind of experiment, by default "exit-time"
    params : SimParams | None, optional
        Simulation parameters, by default the defaults of SimParams.

    Note
    ----
    The master seed must be given explicitly, through params or the seed key.
    """

    experiment: ExperimentKind = "exit-time"
    out: str = "results"
    jobs: int = 1
    formats: list[str] = ["csv", "json"]
    grid: dict[str, list] = {}
    sweep_experiment: ExperimentKind = "exit-time"
    validation_scale: float = 1.
    max_grid_points: int = MAX_GRID_POINTS

    def __init__(self, experiment: ExperimentKind = "exit-time", params: SimParams | None = None, **kwargs):
        self.experiment = experiment
        self.params = SimParams() if params is None else params
        self.seed_is_set = params is not None
        self.formats = list(ExperimentConfig.formats)
        self.grid = {}
        for key, value in kwargs.items():
            self.set_value(key, value)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        config = cls()
        for key, value in data.items():
            config.set_value(key, value)
        return config

    @classmethod
    def from_file(cls, file_path: str) -> "ExperimentConfig":
        """
        Load a flat JSON configuration file.

        Raises
        ------
        ConfigError
            Raise error if the file is not a flat JSON object or contains an unknown key.
        """

        try:
            with open(file_path, "r") as file:
                data = json.load(file)
        except json.JSONDecodeError as error:
            raise ConfigError("<file>", f"{file_path} is not valid JSON ({error}).") from error
        if not isinstance(data, dict):
            raise ConfigError("<file>", f"{file_path} must contain a JSON object.")
        return cls.from_dict(data)

    def set_value(self, key: str, value):
        """
        Set an experiment option or a simulation parameter.

        Raises
        ------
        ConfigError
            Raise error on unknown keys.
        """

        if key in EXPERIMENT_KEYS:
            setattr(self, key, value)
        elif PARAMETER_ALIASES.get(key, key) in SimParams.parameter_names():
            self.params.set_parameters(**{key: value})
            self.seed_is_set = self.seed_is_set or PARAMETER_ALIASES.get(key, key) == "seed"
        else:
            raise ConfigError(key, "unknown key.")

    def apply_overrides(self, overrides: list[str]):
        """
        Apply command line overrides of the form key=value, values being parsed as JSON literals.
        """

        for override in overrides:
            if "=" not in override:
                raise ConfigError(override, "overrides must have the form key=value.")
            key, raw_value = override.split("=", 1)
            try:
                value = json.loads(raw_value)
            except json.JSONDecodeError:
                value = raw_value
            self.set_value(key.strip(), value)

    def check(self):
        """
        Check the configuration.

        Raises
        ------
        ConfigError
            Raise error naming the offending key.
        """

        if self.experiment not in get_args(ExperimentKind):
            raise ConfigError("experiment", f"'{self.experiment}' is not one of {get_args(ExperimentKind)}.")
        if self.sweep_experiment not in ("exit-time", "velocity", "aloha-baseline"):
            raise ConfigError("sweep_experiment", f"'{self.sweep_experiment}' cannot be swept.")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise ConfigError("jobs", f"must be a positive integer, got {self.jobs}.")
        if not isinstance(self.formats, list) or not set(self.formats) <= {"csv", "json"}:
            raise ConfigError("formats", f"must be a subset of ['csv', 'json'], got {self.formats}.")
        if not isinstance(self.validation_scale, (int, float)) or not self.validation_scale > 0:
            raise ConfigError("validation_scale", f"must be positive, got {self.validation_scale}.")
        if not isinstance(self.grid, dict):
            raise ConfigError("grid", "must be a mapping from parameter names to lists of values.")
        for name, values in self.grid.items():
            if PARAMETER_ALIASES.get(name, name) not in SWEEP_PARAMETERS:
                raise ConfigError(f"grid.{name}", f"only {SWEEP_PARAMETERS} can be swept.")
            if not isinstance(values, list) or len(values) == 0:
                raise ConfigError(f"grid.{name}", "must be a non-empty list.")
        if self.nb_grid_points > self.max_grid_points:
            raise ConfigError("grid", f"{self.nb_grid_points} points exceed the cap of {self.max_grid_points}.")

        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", HypothesisWarning)
                self.params.check()
        except SinrVelocityError as error:
            raise ConfigError("params", str(error)) from error
        if not self.seed_is_set:
            raise ConfigError("seed", "a master seed is required, set it in the configuration or with --seed.")

    @property
    def seed(self) -> int:
        return int(self.params.seed)

    @property
    def nb_grid_points(self) -> int:
        return int(np.prod([len(values) for values in self.grid.values()])) if self.grid else 1

    def grid_points(self) -> list[dict]:
        if not self.grid:
            return [{}]
        names = list(self.grid.keys())
        return [dict(zip(names, values)) for values in itertools.product(*self.grid.values())]

    def to_dict(self) -> dict:
        data = {key: deepcopy(getattr(self, key)) for key in EXPERIMENT_KEYS}
        data.update(self.params.to_dict())
        return data

class ResultSummary:
    """
    Aggregates of one experiment, serialized as a JSON document.

    Parameters
    ----------
    experiment : str
        Kind of experiment.
    params : SimParams
        Parameters echoed in the summary.
    """

    def __init__(self, experiment: str, params: SimParams):
        self.experiment = experiment
        self.params = params.to_dict()
        self.seed = int(params.seed)
        self.code_version = CODE_VERSION
        self.aggregates: dict = {}
        self.checks: list[dict] = []
        self.warnings: list[str] = []
        self.children: list["ResultSummary"] = []
        self.artifacts: list[str] = []

    @property
    def passed(self) -> bool:
        return all(check["pass"] for check in self.checks) and all(child.passed for child in self.children)

    def add_check(self, check_name: str, statistic: float, threshold: float, passed: bool):
        self.checks.append({
            "check_name": check_name,
            "statistic": float(statistic),
            "threshold": float(threshold),
            "pass": bool(passed)
        })

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "code_version": self.code_version,
            "params": self.params,
            "aggregates": self.aggregates,
            "checks": self.checks,
            "passed": self.passed,
            "warnings": self.warnings,
            "children": [child.to_dict() for child in self.children],
            "artifacts": self.artifacts
        }

    def save(self, file_path: str):
        with open(file_path, "w") as file:
            json.dump(self.to_dict(), file, indent=4, default=_json_default)

#############
# Functions #
#############

def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable.")

def _finite_or_none(value: float) -> float | None:
    return float(value) if np.isfinite(value) else None

def map_replications(worker: Callable, tasks: list, jobs: int = 1, description: str | None = None) -> list:
    """
    Run the worker over the tasks, in a process pool when jobs > 1, keeping the task order.

    Parameters
    ----------
    worker : Callable
        Module level function taking one task.
    tasks : list
        Tasks.
    jobs : int, optional
        Number of worker processes, by default 1
    description : str | None, optional
        Label of the progress bar, by default None

    Returns
    -------
    list
        Results in task order.
    """

    progress = {"total": len(tasks), "desc": description, "disable": None, "leave": False}
    if jobs == 1:
        return [worker(task) for task in tqdm(tasks, **progress)]
    with Pool(processes=jobs) as pool:
        chunksize = max(1, len(tasks) // (4 * jobs))
        return list(tqdm(pool.imap(worker, tasks, chunksize=chunksize), **progress))

def exit_time_worker(task: tuple[dict, int]) -> dict:
    params_dict, replication = task
    params = SimParams(params_dict=params_dict)
    streams = StreamSet(params.seed, replication)
    row = {
        "replication": replication,
        "phi_seed": derive_seed(params.seed, replication, STREAM_GEOMETRY),
        "T": params.hop_horizon,
        "censored": True,
        "no_neighbor": False
    }
    try:
        sample = run_exit_time(params, streams)
    except NoNeighborError:
        row["no_neighbor"] = True
        return row
    row["T"] = sample.T
    row["censored"] = sample.censored
    return row

def _velocity_worker(task: tuple[dict, int]) -> PacketTrace:
    params_dict, replication = task
    params = SimParams(params_dict=params_dict)
    return run_tagged_packet(params, StreamSet(params.seed, replication))

def hops_frame(trace: PacketTrace) -> pd.DataFrame:
    return pd.DataFrame(
        [[hop.i, hop.R, hop.theta, hop.T, hop.T_prime] for hop in trace.hops],
        columns=CSV_COLUMNS["hops"]).astype({"T_prime": "Int64"})

def velocity_frame(trace: PacketTrace) -> pd.DataFrame:
    clock = "enhanced" if trace.stationary else "plain"
    distances = trace.distance_series(clock)
    slots = np.arange(1, len(distances) + 1)
    return pd.DataFrame({"slot": slots, "d": distances, "d_over_t": distances / slots}, columns=CSV_COLUMNS["velocity"])

def _write_csv(frame: pd.DataFrame, config: ExperimentConfig, summary: ResultSummary, file_name: str):
    if "csv" not in config.formats:
        return
    file_path = os.path.join(config.out, file_name)
    frame.to_csv(file_path, index=False, lineterminator="\n")
    summary.artifacts.append(file_name)
    logger.info("Written %s.", file_path)

def _delay_aggregates(delays: np.ndarray, censored: np.ndarray) -> dict:
    """
    Aggregates of a delay sample, censored values excluded from the means.
    """

    delivered = delays[~censored]
    aggregates = {
        "n": int(len(delays)),
        "n_censored": int(censored.sum()),
        "censored_fraction": float(censored.mean()) if len(delays) else 0.
    }
    if len(delivered) == 0:
        return aggregates

    aggregates["T"] = mean_ci(delivered)
    if len(delivered) >= 2:
        aggregates["running_mean_relative_change"] = stabilization(delivered)
    if len(delivered) >= MIN_TAIL_SAMPLES:
        aggregates["hill_tail_index"] = {
            str(fraction): _finite_or_none(index) for fraction, index in hill_sensitivity(delivered).items()}
    grid, survival = survival_function(delivered, SURVIVAL_GRID_SIZE)
    aggregates["survival"] = {"k": grid.tolist(), "P_T_greater": survival.tolist()}
    return aggregates

def _hypothesis_banner(params: SimParams, summary: ResultSummary):
    if params.policy == "power_control" and params.beta_gamma >= 1:
        message = f"beta * gamma = {params.beta_gamma:g} >= 1: the finite expected exit time hypothesis is violated."
        logger.warning(message)
        summary.warnings.append(message)

def _bound_aggregates(params: SimParams) -> dict:
    """
    Mean exit time bound and E[p_o^-2] under power control, None when the bound does not apply.
    """

    aggregates = {"mean_delay_bound": None, "inverse_power_moment": None}
    if params.policy != "power_control":
        return aggregates
    try:
        aggregates["mean_delay_bound"] = _finite_or_none(mean_delay_bound(params))
    except ConditionViolationError as error:
        logger.warning("The mean exit time bound does not apply: %s", error)
        return aggregates
    aggregates["inverse_power_moment"] = _finite_or_none(inverse_power_moment(params))
    return aggregates

def run_exit_time_experiment(
config: ExperimentConfig, params: SimParams | None = None, kind: str = "exit-time") -> ResultSummary:
    """
    Sample exit times over independent Palm realizations.

    Parameters
    ----------
    config : ExperimentConfig
        Experiment configuration.
    params : SimParams | None, optional
        Parameters overriding those of the configuration, by default None
    kind : str, optional
        Name of the experiment in the summary, by default "exit-time"

    Returns
    -------
    ResultSummary
        Summary of the exit times.
    """

    params = config.params if params is None else params
    summary = ResultSummary(kind, params)
    _hypothesis_banner(params, summary)

    tasks = [(params.to_dict(), replication) for replication in range(params.replications)]
    rows = map_replications(exit_time_worker, tasks, config.jobs, description=kind)

    frame = pd.DataFrame(rows)
    nb_no_neighbor = int(frame["no_neighbor"].sum())
    if nb_no_neighbor:
        logger.warning("%d realizations had an empty destination cone and were dropped.", nb_no_neighbor)
    frame = frame[~frame["no_neighbor"]]

    summary.aggregates = _delay_aggregates(frame["T"].to_numpy(dtype=float), frame["censored"].to_numpy(dtype=bool))
    summary.aggregates["n_no_neighbor"] = nb_no_neighbor
    summary.aggregates["truncation_error"] = truncation_error(
        params.intensity, params.M, params.mu, params.alpha, params.guard)
    summary.aggregates.update(_bound_aggregates(params))

    _write_csv(frame[CSV_COLUMNS["exit-time"]], config, summary, f"{kind}.csv")
    return summary

def run_aloha_baseline(config: ExperimentConfig, params: SimParams | None = None) -> ResultSummary:
    """
    Exit time experiment under the ALOHA baseline at equal average power.
    """

    params = (config.params if params is None else params).copy(policy="aloha")
    return run_exit_time_experiment(config, params, kind="aloha-baseline")

def _trace_aggregates(trace: PacketTrace, rng: np.random.Generator) -> dict:
    clock = "enhanced" if trace.stationary else "plain"
    aggregates = {
        "termination": trace.termination,
        "n_hops": len(trace.hops),
        "n_censored": trace.nb_censored,
        "elapsed": trace.elapsed(clock),
        "n_virtual_points": trace.nb_virtual_points
    }
    if trace.elapsed(clock) == 0:
        return aggregates

    velocity, series = information_velocity(trace, clock)
    aggregates["velocity"] = velocity
    aggregates["relative_fluctuation"] = _finite_or_none(relative_fluctuation(series))
    if trace.stationary:
        aggregates["velocity_plain"] = information_velocity(trace, "plain")[0]

    times, distances = trace.completion_times(clock)
    if len(times) >= 3:
        aggregates["velocity_slope"] = velocity_slope(times, distances)[0]

        # Ratio estimator of the progress per slot, resampled by hops
        progress = np.array([hop.destination[0] - hop.source[0] for hop in trace.hops if not hop.delay(clock)[1]])
        delays = trace.delays(clock).astype(float)
        low, high = bootstrap_ci((progress, delays), lambda x, t: np.sum(x) / np.sum(t), rng=rng)
        aggregates["velocity_ci"] = [low, high]
    return aggregates

def run_velocity_experiment(config: ExperimentConfig, params: SimParams | None = None) -> ResultSummary:
    """
    Track tagged packets along the conic forwarding path and estimate the information velocity.

    Parameters
    ----------
    config : ExperimentConfig
        Experiment configuration.
    params : SimParams | None, optional
        Parameters overriding those of the configuration, by default None

    Returns
    -------
    ResultSummary
        Summary with one aggregate per replication and their mean.
    """

    params = config.params if params is None else params
    summary = ResultSummary("velocity", params)
    _hypothesis_banner(params, summary)

    tasks = [(params.to_dict(), replication) for replication in range(params.replications)]
    traces = map_replications(_velocity_worker, tasks, config.jobs, description="velocity")

    replications = []
    for replication, trace in enumerate(traces):
        rng = StreamSet(params.seed, replication).diagnostics
        aggregates = _trace_aggregates(trace, rng)
        violations = trace.check_invariants(np.pi / params.m)
        aggregates["invariant_violations"] = violations
        for violation in violations:
            logger.warning(violation)
        replications.append(aggregates)

        _write_csv(hops_frame(trace), config, summary, f"hops_{replication}.csv")
        _write_csv(velocity_frame(trace), config, summary, f"velocity_{replication}.csv")

    velocities = [aggregates["velocity"] for aggregates in replications
                  if "velocity" in aggregates and aggregates["termination"] != "dead-end"]
    summary.aggregates = {
        "replications": replications,
        "n_dead_end": sum(aggregates["termination"] == "dead-end" for aggregates in replications),
        "hop_progress_mean": hop_progress_mean(params.intensity, params.m)
    }
    if velocities:
        summary.aggregates["velocity"] = mean_ci(velocities)
    return summary

def sweep(config: ExperimentConfig) -> ResultSummary:
    """
    Run the swept experiment at every point of the Cartesian parameter grid.

    Each point uses a seed derived from the master seed and the point index. An empty
    grid gives a single run.

    Parameters
    ----------
    config : ExperimentConfig
        Configuration with its grid.

    Returns
    -------
    ResultSummary
        Summary whose children are the summaries of the grid points.
    """

    summary = ResultSummary("sweep", config.params)
    rows = []
    for point_index, point in enumerate(config.grid_points()):
        point_params = config.params.copy(**point)
        point_params.seed = derive_seed(config.seed, point_index)
        logger.info("Sweep point %d: %s.", point_index, point)

        point_config = deepcopy(config)
        point_config.out = os.path.join(config.out, f"point_{point_index}")
        os.makedirs(point_config.out, exist_ok=True)
        child = EXPERIMENT_RUNNERS[config.sweep_experiment](point_config, point_params)
        summary.children.append(child)

        row = {"point": point_index, "seed": point_params.seed, "beta_gamma": point_params.beta_gamma}
        row.update({PARAMETER_ALIASES.get(name, name): getattr(point_params, PARAMETER_ALIASES.get(name, name))
                    for name in point})
        row.update(_diagnostics_row(child))
        rows.append(row)

    _write_csv(pd.DataFrame(rows), config, summary, "sweep.csv")
    return summary

def _diagnostics_row(summary: ResultSummary) -> dict:
    aggregates = summary.aggregates
    if summary.experiment == "velocity":
        velocity = aggregates.get("velocity", {})
        return {"velocity_mean": velocity.get("mean"), "n_dead_end": aggregates["n_dead_end"]}
    delays = aggregates.get("T", {})
    return {
        "T_mean": delays.get("mean"),
        "T_median": delays.get("median"),
        "censored_fraction": aggregates["censored_fraction"],
        "running_mean_relative_change": aggregates.get("running_mean_relative_change")
    }

def run_validation(config: ExperimentConfig, params: SimParams | None = None) -> ResultSummary:
    # Circular import
    from sinr_velocity.validation import run_acceptance_suite

    params = config.params if params is None else params
    summary = run_acceptance_suite(params, scale=config.validation_scale, jobs=config.jobs)
    frame = pd.DataFrame(summary.checks, columns=CSV_COLUMNS["validation"])
    _write_csv(frame, config, summary, "validation.csv")
    return summary

EXPERIMENT_RUNNERS = {
    "exit-time": run_exit_time_experiment,
    "aloha-baseline": run_aloha_baseline,
    "velocity": run_velocity_experiment,
    "validate": run_validation,
}

def run(config: ExperimentConfig) -> ResultSummary:
    """
    Run the configured experiment and write its artifacts.

    Parameters
    ----------
    config : ExperimentConfig
        Experiment configuration.

    Returns
    -------
    ResultSummary
        Summary of the experiment, also written as summary.json.
    """

    config.check()
    os.makedirs(config.out, exist_ok=True)
    logger.info("Running the %s experiment with seed %d.", config.experiment, config.seed)

    if config.experiment == "sweep":
        summary = sweep(config)
    else:
        summary = EXPERIMENT_RUNNERS[config.experiment](config)

    if "json" in config.formats:
        summary_path = os.path.join(config.out, "summary.json")
        summary.save(summary_path)
        logger.info("Summary written to %s.", summary_path)

    return summary
