"""
Module providing the statistical estimators used to assess the simulations.
"""

###########
# Imports #
###########

# Python imports #

from typing import Callable

# Dependencies #

import numpy as np
from scipy import stats

# Local imports #

from sinr_velocity._common import ParameterError

#############
# Constants #
#############

MIN_TAIL_SAMPLES = 30
HILL_FRACTION = 0.1
HILL_SENSITIVITY_FRACTIONS = (0.05, 0.1, 0.2)

#############
# Functions #
#############

def _as_samples(samples: np.ndarray, min_size: int = 1) -> np.ndarray:
    samples = np.asarray(samples, dtype=float).ravel()
    if len(samples) < min_size:
        raise ParameterError(
            f"At least {min_size} samples are required, got {len(samples)}.")
    return samples

def running_mean(samples: np.ndarray) -> np.ndarray:
    samples = _as_samples(samples)
    return np.cumsum(samples) / np.arange(1, len(samples) + 1)

def mean_ci(samples: np.ndarray, confidence: float = 0.95) -> dict:
    """
    Mean, median and Student confidence interval of the samples.

    Parameters
    ----------
    samples : np.ndarray
        Samples.
    confidence : float, optional
        Confidence level, by default 0.95

    Returns
    -------
    dict
        Keys n, mean, median, ci_low and ci_high.
    """

    samples = _as_samples(samples)
    mean = float(np.mean(samples))
    if len(samples) > 1 and np.ptp(samples) > 0:
        half_width = stats.sem(samples) * stats.t.ppf((1 + confidence) / 2, len(samples) - 1)
    else:
        half_width = 0.
    return {
        "n": len(samples),
        "mean": mean,
        "median": float(np.median(samples)),
        "ci_low": mean - float(half_width),
        "ci_high": mean + float(half_width)
    }

def batch_means_ci(samples: np.ndarray, nb_batches: int = 20, confidence: float = 0.95) -> tuple[float, float, float]:
    """
    Batch means confidence interval of the mean of a correlated sequence.

    Parameters
    ----------
    samples : np.ndarray
        Ordered samples, the trailing remainder is dropped.
    nb_batches : int, optional
        Number of batches, by default 20
    confidence : float, optional
        Confidence level, by default 0.95

    Returns
    -------
    tuple[float, float, float]
        Mean, lower and upper bounds.
    """

    samples = _as_samples(samples, min_size=2 * nb_batches)
    batch_size = len(samples) // nb_batches
    batch_means = samples[:batch_size * nb_batches].reshape(nb_batches, batch_size).mean(axis=1)
    mean = float(np.mean(batch_means))
    half_width = float(stats.sem(batch_means) * stats.t.ppf((1 + confidence) / 2, nb_batches - 1)) \
        if np.ptp(batch_means) > 0 else 0.
    return mean, mean - half_width, mean + half_width

def intervals_overlap(first: tuple[float, float, float], second: tuple[float, float, float]) -> bool:
    return first[1] <= second[2] and second[1] <= first[2]

def stabilization(samples: np.ndarray, final_fraction: float = 0.5) -> float:
    """
    Relative change of the running mean over the final fraction of the samples.

    Parameters
    ----------
    samples : np.ndarray
        Ordered samples.
    final_fraction : float, optional
        Fraction of the samples observed, by default 0.5

    Returns
    -------
    float
        (max - min) / final value of the running mean over the final fraction.
    """

    means = running_mean(_as_samples(samples, min_size=2))
    final_means = means[int(len(means) * (1 - final_fraction)):]
    if means[-1] == 0:
        return 0. if np.ptp(final_means) == 0 else np.inf
    return float(np.ptp(final_means) / abs(means[-1]))

def survival_function(samples: np.ndarray, nb_points: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """
    Empirical survival function P[X > x] on a logarithmic grid.

    Parameters
    ----------
    samples : np.ndarray
        Positive samples.
    nb_points : int, optional
        Number of grid points, by default 50

    Returns
    -------
    tuple[np.ndarray, np.ndarray]
        Grid and survival values.
    """

    samples = np.sort(_as_samples(samples))
    positive = samples[samples > 0]
    if len(positive) == 0:
        raise ParameterError("The survival grid requires positive samples.")
    grid = np.geomspace(positive[0], positive[-1], nb_points)
    survival = 1 - np.searchsorted(samples, grid, side="right") / len(samples)
    return grid, survival

def hill_tail_index(samples: np.ndarray, fraction: float = HILL_FRACTION) -> float:
    """
    Hill estimate of the tail index over the top order statistics.

    Parameters
    ----------
    samples : np.ndarray
        Positive samples, at least 30.
    fraction : float, optional
        Fraction of the samples in the tail, by default 0.1

    Returns
    -------
    float
        Tail index, infinite when the tail is flat.
    """

    samples = _as_samples(samples, min_size=MIN_TAIL_SAMPLES)
    descending = np.sort(samples)[::-1]
    k = min(max(int(fraction * len(samples)), 1), len(samples) - 1)
    if descending[k] <= 0:
        raise ParameterError("The Hill estimator requires positive order statistics.")
    hill = np.mean(np.log(descending[:k])) - np.log(descending[k])
    if hill <= 0:
        return np.inf
    return float(1 / hill)

def hill_sensitivity(samples: np.ndarray, fractions: tuple[float, ...] = HILL_SENSITIVITY_FRACTIONS) -> dict[float, float]:
    return {fraction: hill_tail_index(samples, fraction) for fraction in fractions}

def ks_statistic(samples: np.ndarray, reference: Callable | np.ndarray) -> float:
    """
    Kolmogorov-Smirnov statistic against a continuous CDF or a reference sample.

    Parameters
    ----------
    samples : np.ndarray
        Samples.
    reference : Callable | np.ndarray
        CDF, or samples for the two samples statistic.

    Returns
    -------
    float
        KS statistic.
    """

    samples = _as_samples(samples)
    if callable(reference):
        return float(stats.kstest(samples, reference).statistic)
    return float(stats.ks_2samp(samples, _as_samples(reference)).statistic)

def velocity_slope(times: np.ndarray, distances: np.ndarray) -> tuple[float, float]:
    """
    Least squares slope of the distance against time, with its standard error.
    """

    result = stats.linregress(np.asarray(times, dtype=float), np.asarray(distances, dtype=float))
    return float(result.slope), float(result.stderr)

def relative_fluctuation(series: np.ndarray, final_fraction: float = 0.2) -> float:
    """
    Relative range (max - min) / mean of the series over its final fraction.
    """

    series = _as_samples(series)
    final = series[int(len(series) * (1 - final_fraction)):]
    mean = np.mean(final)
    if mean == 0:
        return np.inf
    return float(np.ptp(final) / abs(mean))

def bootstrap_ci(
        samples: np.ndarray | tuple[np.ndarray, ...],
        statistic: Callable = np.mean,
        confidence: float = 0.95,
        nb_resamples: int = 2000,
        rng: np.random.Generator | None = None) -> tuple[float, float]:
    """
    Percentile bootstrap confidence interval.

    Parameters
    ----------
    samples : np.ndarray | tuple[np.ndarray, ...]
        One sample, or paired samples resampled together.
    statistic : Callable, optional
        Statistic of the sample(s), by default np.mean
    confidence : float, optional
        Confidence level, by default 0.95
    nb_resamples : int, optional
        Number of resamples, by default 2000
    rng : np.random.Generator | None, optional
        Random stream, by default a generator seeded with 0.

    Returns
    -------
    tuple[float, float]
        Lower and upper bounds.
    """

    if rng is None:
        rng = np.random.default_rng(0)
    data = samples if isinstance(samples, tuple) else (samples,)
    data = tuple(_as_samples(sample, min_size=2) for sample in data)
    result = stats.bootstrap(
        data,
        statistic,
        paired=len(data) > 1,
        vectorized=False,
        confidence_level=confidence,
        n_resamples=nb_resamples,
        method="percentile",
        random_state=rng)
    return float(result.confidence_interval.low), float(result.confidence_interval.high)
