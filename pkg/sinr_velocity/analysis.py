"""
Module providing the closed-form oracles of the finite exit time and positive velocity bounds.

It contains the nearest neighbor in cone law, the Campbell integrals of the path loss,
the Laplace functional bounds of the interference, the geometric tail constant J and
the large deviation machinery of the hop progress.
"""

###########
# Imports #
###########

# Python imports #

import logging

# Dependencies #

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar
from scipy.special import erfcx

# Local imports #

from sinr_velocity._common import (
    ParameterError,
    ModelError,
    ConditionViolationError,
    check_positive
)
from sinr_velocity.channel import path_loss
from sinr_velocity.params import SimParams
from sinr_velocity.spatial import PointSet

#############
# Constants #
#############

logger = logging.getLogger(__name__)

QUAD_ABS_TOL = 1e-8
ENVELOPE_TOL = 1e-12
ZETA_TOL = 1e-6

# Upper bound of the Chernoff parameter search, in units of 1 / delta
ZETA_SEARCH_SPAN = 50.

MAX_SERIES_TERMS = 10 ** 7

###########
# Classes #
###########

class BoundInputs:
    """
    Dimensionless constants entering the exit time bounds.

    Parameters
    ----------
    M : float
        Average power constraint.
    epsilon : float
        Power control slack.
    beta : float
        SINR threshold.
    gamma : float
        Interference suppression factor.
    mu : float
        Fading rate.
    """

    def __init__(self, M: float, epsilon: float, beta: float, gamma: float, mu: float):
        check_positive("M", M)
        check_positive("mu", mu)
        check_positive("beta", beta, allow_zero=True)
        self.M = float(M)
        self.epsilon = float(epsilon)
        self.beta = float(beta)
        self.gamma = float(gamma)
        self.mu = float(mu)

    @classmethod
    def from_params(cls, params: SimParams) -> "BoundInputs":
        return cls(M=params.M, epsilon=params.epsilon, beta=params.beta, gamma=params.gamma, mu=params.mu)

    @property
    def c(self) -> float:
        return self.M / (1 - self.epsilon)

    @property
    def c1(self) -> float:
        return self.beta * self.gamma * (1 - self.epsilon)

    @property
    def a(self) -> float:
        return self.mu * self.beta * self.gamma / self.c

    @property
    def is_stable(self) -> bool:
        return self.c1 < 1

    def check_condition(self):
        """
        Raises
        ------
        ConditionViolationError
            Raise error if c1 is not below one.
        """

        if not self.is_stable:
            raise ConditionViolationError(
                f"c1 = beta * gamma * (1 - epsilon) = {self.c1:g} must be below 1.")

#############
# Functions #
#############

def nn_cone_pdf(r: float | np.ndarray, intensity: float, m: int) -> float | np.ndarray:
    """
    Density of the nearest neighbor distance in a cone, (2 lambda pi r / m) exp(-lambda pi r^2 / m).

    Parameters
    ----------
    r : float | np.ndarray
        Distance, the density is zero for negative values.
    intensity : float
        Intensity lambda.
    m : int
        Number of cones.

    Returns
    -------
    float | np.ndarray
        Density value.
    """

    r = np.asarray(r, dtype=float)
    rate = intensity * np.pi / m
    density = np.where(r >= 0, 2 * rate * r * np.exp(-rate * r ** 2), 0.)
    if density.ndim == 0:
        return float(density)
    return density

def nn_cone_cdf(r: float | np.ndarray, intensity: float, m: int) -> float | np.ndarray:
    r = np.maximum(np.asarray(r, dtype=float), 0.)
    cdf = -np.expm1(-intensity * np.pi * r ** 2 / m)
    if cdf.ndim == 0:
        return float(cdf)
    return cdf

def nn_cone_median(intensity: float, m: int) -> float:
    return float(np.sqrt(m * np.log(2) / (intensity * np.pi)))

def hop_progress_mean(intensity: float, m: int) -> float:
    """
    Mean progress xi = E[R cos(theta)] of one hop, with R and theta independent.

    Parameters
    ----------
    intensity : float
        Intensity lambda.
    m : int
        Number of cones.

    Returns
    -------
    float
        Mean progress 1/2 sqrt(m / lambda) sin(phi) / phi.
    """

    half_angle = np.pi / m
    return float(0.5 * np.sqrt(m / intensity) * np.sin(half_angle) / half_angle)

def campbell_l_integral(alpha: float) -> float:
    """
    Integral of the path loss over the plane, pi + 2 pi / (alpha - 2).

    Parameters
    ----------
    alpha : float
        Path loss exponent.

    Returns
    -------
    float
        Value of the integral.

    Raises
    ------
    ParameterError
        Raise error if alpha <= 2, the integral diverges.
    """

    if not alpha > 2:
        raise ParameterError(
            f"The path loss integral diverges for alpha <= 2, got {alpha}.")
    return float(np.pi + 2 * np.pi / (alpha - 2))

def truncation_error(intensity: float, M: float, mu: float, alpha: float, guard: float) -> float:
    """
    Mean interference neglected beyond the guard margin, lambda (M / mu) 2 pi G^(2 - alpha) / (alpha - 2).

    Parameters
    ----------
    intensity : float
        Intensity lambda.
    M : float
        Average power of a node.
    mu : float
        Fading rate.
    alpha : float
        Path loss exponent.
    guard : float
        Guard margin G, at least 1.

    Returns
    -------
    float
        Neglected mean interference.
    """

    campbell_l_integral(alpha)
    if not guard >= 1:
        raise ParameterError(f"The guard margin must be at least 1, got {guard}.")
    return float(intensity * (M / mu) * 2 * np.pi * guard ** (2 - alpha) / (alpha - 2))

def guard_margin(intensity: float, M: float, mu: float, alpha: float, tolerance: float) -> float:
    """
    Smallest guard margin whose neglected mean interference is below the tolerance.
    """

    check_positive("tolerance", tolerance)
    unit_error = truncation_error(intensity, M, mu, alpha, 1.)
    return float(max(1., (tolerance / unit_error) ** (1 / (2 - alpha))))

def _other_points(ps: PointSet, receiver: np.ndarray, exclude: list[int] | None) -> np.ndarray:
    excluded = np.zeros(len(ps), dtype=bool)
    if ps.tagged_index is not None:
        excluded[ps.tagged_index] = True
    if exclude is not None:
        excluded[np.asarray(exclude, dtype=int)] = True
    excluded |= np.all(ps.points == receiver[None, :], axis=1)
    return ps.points[~excluded]

def laplace_lower_bound(
        ps: PointSet,
        receiver: np.ndarray,
        c1: float,
        alpha: float,
        exclude: list[int] | None = None) -> float:
    """
    Lower bound of the conditional Laplace transform of the worst case interference,
    the product of (1 - c1 l(z, receiver)) over the interferers.

    Parameters
    ----------
    ps : PointSet
        Point set, the tagged point is excluded from the product.
    receiver : np.ndarray
        Receiver coordinates, a point of the set at this location is excluded.
    c1 : float
        Constant beta * gamma * (1 - epsilon).
    alpha : float
        Path loss exponent.
    exclude : list[int] | None, optional
        Indices of further points to exclude, by default None

    Returns
    -------
    float
        Bound in (0, 1].

    Raises
    ------
    ConditionViolationError
        Raise error if c1 >= 1.
    """

    if not c1 < 1:
        raise ConditionViolationError(f"c1 must be below 1 for the bound to hold, got {c1}.")
    receiver = np.asarray(receiver, dtype=float)
    interferers = _other_points(ps, receiver, exclude)
    if len(interferers) == 0:
        return 1.

    offsets = interferers - receiver
    losses = path_loss(np.hypot(offsets[:, 0], offsets[:, 1]), alpha)
    return float(np.exp(np.sum(np.log1p(-c1 * losses))))

def laplace_exact(
        cone_distances: np.ndarray,
        losses: np.ndarray,
        params: SimParams) -> float:
    """
    Conditional Laplace transform E[exp(-a I*) | Phi] of the worst case interference
    under power control, each interferer using its closest cone neighbor.

    Parameters
    ----------
    cone_distances : np.ndarray
        Per-cone nearest neighbor distances of the interferers, shape (n, m).
    losses : np.ndarray
        Path losses from the interferers to the receiver.
    params : SimParams
        Simulation parameters.

    Returns
    -------
    float
        Product of 1 - beta gamma p* P* l / (c + beta gamma P* l).
    """

    if len(losses) == 0:
        return 1.
    worst_distances = np.min(cone_distances, axis=1)
    policy = params.policy_model()
    powers, probabilities = policy.powers_and_probs(worst_distances, params.alpha)
    silent = ~np.isfinite(powers)
    powers = np.where(silent, 0., powers)
    load = params.beta_gamma * powers * losses
    factors = 1 - probabilities * load / (params.c + load)
    return float(np.prod(factors))

def j_bound(ps: PointSet, receiver: np.ndarray, params: SimParams, source_probability: float | None = None) -> float:
    """
    Constant J of the geometric tail P[T > k | Phi] <= (1 - J)^k, with the Laplace
    factor replaced by its product lower bound.

    Parameters
    ----------
    ps : PointSet
        Palm point set, its tagged point is the source.
    receiver : np.ndarray
        Destination cone nearest neighbor of the source.
    params : SimParams
        Simulation parameters.
    source_probability : float | None, optional
        Transmission probability of the source, by default computed from the hop length.

    Returns
    -------
    float
        J in (0, 1).
    """

    bounds = BoundInputs.from_params(params)
    bounds.check_condition()
    receiver = np.asarray(receiver, dtype=float)
    if source_probability is None:
        hop_length = float(np.hypot(*(receiver - ps.tagged_point)))
        _, source_probability = params.policy_model().power_and_prob(hop_length, params.alpha)

    noise_factor = np.exp(-params.mu * params.beta * params.noise / bounds.c)
    laplace = laplace_lower_bound(ps, receiver, bounds.c1, params.alpha)
    return float(source_probability * params.epsilon * noise_factor * laplace)

def _radial_cutoff(rate: float, power: float) -> float:
    """
    Radius beyond which r^power exp(-rate r^2) stays below the envelope tolerance.
    """

    mode = np.sqrt(max(power, 1.) / (2 * rate))

    def log_envelope(r: float) -> float:
        return power * np.log(r) - rate * r ** 2 - np.log(ENVELOPE_TOL)

    upper = 2 * mode
    while log_envelope(upper) > 0:
        upper *= 2
    return float(brentq(log_envelope, mode, upper))

def inverse_power_moment(params: SimParams) -> float:
    """
    Compute E[p_o^-2] = E[(c / M)^2 max(R^(2 alpha), 1)] with R of density nn_cone_pdf.

    Parameters
    ----------
    params : SimParams
        Simulation parameters.

    Returns
    -------
    float
        Finite second inverse moment of the source transmission probability.
    """

    rate = params.intensity * np.pi / params.m
    r_max = _radial_cutoff(rate, 2 * params.alpha + 1)
    scale = (params.c / params.M) ** 2

    def integrand(r: float) -> float:
        return max(r ** (2 * params.alpha), 1.) * nn_cone_pdf(r, params.intensity, params.m)

    near, _ = quad(integrand, 0., min(1., r_max), epsabs=QUAD_ABS_TOL)
    far = 0.
    if r_max > 1:
        far, _ = quad(integrand, 1., r_max, epsabs=QUAD_ABS_TOL)
    return float(scale * (near + far))

def interference_moment_bound(params: SimParams, order: int = 2) -> float:
    """
    Bound of E[(E[exp(-a I) | Phi])^-order] given by the Campbell formula.

    Order 2 gives exp(2 lambda c1 / (1 - c1)^2 int l) and order 4 gives
    exp(lambda / (1 - c1)^4 int (1 - (1 - c1 l)^4)).

    Parameters
    ----------
    params : SimParams
        Simulation parameters.
    order : int, optional
        2 or 4, by default 2

    Returns
    -------
    float
        Finite bound.
    """

    bounds = BoundInputs.from_params(params)
    bounds.check_condition()
    c1 = bounds.c1

    if order == 2:
        exponent = 2 * params.intensity * c1 / (1 - c1) ** 2 * campbell_l_integral(params.alpha)
    elif order == 4:
        # Unit disk where l = 1, then the radial tail
        disk = np.pi * (1 - (1 - c1) ** 4)
        tail, _ = quad(
            lambda r: -2 * np.pi * r * np.expm1(4 * np.log1p(-c1 * r ** -params.alpha)),
            1., np.inf, epsabs=QUAD_ABS_TOL)
        exponent = params.intensity / (1 - c1) ** 4 * (disk + tail)
    else:
        raise ParameterError(f"Only the orders 2 and 4 are bounded, got {order}.")

    return float(np.exp(exponent))

def mean_delay_bound(params: SimParams) -> float:
    """
    Cauchy-Schwarz bound of the mean exit time, reported for reference.

    Parameters
    ----------
    params : SimParams
        Simulation parameters.

    Returns
    -------
    float
        exp(mu beta N / c) / epsilon * sqrt(E[laplace^-2] E[p_o^-2]).
    """

    bounds = BoundInputs.from_params(params)
    noise_factor = np.exp(params.mu * params.beta * params.noise / bounds.c)
    moments = interference_moment_bound(params, order=2) * inverse_power_moment(params)
    return float(noise_factor / params.epsilon * np.sqrt(moments))

def hop_progress_mgf(nu: float, intensity: float, m: int) -> float:
    """
    Moment generating function chi(nu) = E[exp(nu R cos(theta))] of the hop progress.

    The radial part has the closed form E[exp(s R)] = 1 + sqrt(pi) u erfcx(-u),
    u = s / (2 sqrt(lambda pi / m)), the angular part is integrated numerically.

    Parameters
    ----------
    nu : float
        Argument, any real value.
    intensity : float
        Intensity lambda.
    m : int
        Number of cones.

    Returns
    -------
    float
        Value of chi(nu).
    """

    half_angle = np.pi / m
    scale = 2 * np.sqrt(intensity * np.pi / m)

    def radial_mgf(theta: float) -> float:
        u = nu * np.cos(theta) / scale
        return 1 + np.sqrt(np.pi) * u * erfcx(-u)

    value, _ = quad(radial_mgf, -half_angle, half_angle, epsabs=QUAD_ABS_TOL)
    return float(value / (2 * half_angle))

def chernoff_zeta(delta: float, intensity: float, m: int) -> float:
    """
    Lower tail rate zeta(delta) of the hop progress sums, P[S_n < n delta] <= exp(-zeta(delta) n).

    The rate is minus the infimum over nu > 0 of nu delta + log(chi(-nu)).

    Parameters
    ----------
    delta : float
        Threshold in (0, xi).
    intensity : float
        Intensity lambda.
    m : int
        Number of cones.

    Returns
    -------
    float
        Rate zeta(delta) >= 0.

    Raises
    ------
    ParameterError
        Raise error if delta is not in (0, xi), the rate is then degenerate.
    """

    xi = hop_progress_mean(intensity, m)
    if not 0 < delta < xi:
        raise ParameterError(
            f"The threshold delta must lie in (0, {xi:g}), got {delta}.")

    def objective(nu: float) -> float:
        return nu * delta + np.log(hop_progress_mgf(-nu, intensity, m))

    result = minimize_scalar(
        objective,
        bounds=(0., ZETA_SEARCH_SPAN / delta),
        method="bounded",
        options={"xatol": ZETA_TOL})
    return float(max(-result.fun, 0.))

def g_function(x: float | np.ndarray, c1: float, alpha: float) -> float | np.ndarray:
    """
    Compute g(x) = -4 log(1 - c1 l(x)), with l(0) = 1.
    """

    x = np.asarray(x, dtype=float)
    loss = np.where(x > 1, np.power(np.maximum(x, 1.), -alpha), 1.)
    value = -4 * np.log1p(-c1 * loss)
    if value.ndim == 0:
        return float(value)
    return value

def g_series_sum(delta: float, c1: float, alpha: float, tolerance: float = 1e-10) -> float:
    """
    Sum of g(n delta) for n >= 1, truncated once the remaining tail is below the tolerance.

    Parameters
    ----------
    delta : float
        Step, positive.
    c1 : float
        Constant in (0, 1).
    alpha : float
        Path loss exponent.
    tolerance : float, optional
        Bound of the neglected tail, by default 1e-10

    Returns
    -------
    float
        Value of the series.
    """

    check_positive("delta", delta)
    if not 0 <= c1 < 1:
        raise ConditionViolationError(f"c1 must lie in [0, 1), got {c1}.")

    # g(x) <= 4 c1 x^-alpha / (1 - c1) beyond x = 1
    tail_scale = 4 * c1 / (1 - c1) * delta ** -alpha / (alpha - 1)
    nb_terms = int(np.ceil(max(1 / delta, (tail_scale / tolerance) ** (1 / (alpha - 1))))) + 1
    if nb_terms > MAX_SERIES_TERMS:
        logger.warning("Series of g truncated at %d terms.", MAX_SERIES_TERMS)
        nb_terms = MAX_SERIES_TERMS

    return float(np.sum(g_function(delta * np.arange(1, nb_terms + 1), c1, alpha)))

def choose_delta(intensity: float, m: int, c1: float, nb_points: int = 200) -> tuple[float, float]:
    """
    Search the largest threshold delta with zeta(delta) > g(0) on a logarithmic grid.

    Parameters
    ----------
    intensity : float
        Intensity lambda.
    m : int
        Number of cones.
    c1 : float
        Constant in [0, 1).
    nb_points : int, optional
        Number of grid points in (xi 1e-6, 0.99 xi), by default 200

    Returns
    -------
    tuple[float, float]
        Threshold delta and its rate zeta(delta).

    Raises
    ------
    ModelError
        Raise error if no point of the grid satisfies the condition.
    """

    xi = hop_progress_mean(intensity, m)
    g_zero = -4 * np.log1p(-c1)
    for delta in np.geomspace(0.99 * xi, 1e-6 * xi, nb_points):
        zeta = chernoff_zeta(delta, intensity, m)
        if zeta > g_zero:
            return float(delta), zeta

    raise ModelError(f"No threshold delta reaches zeta(delta) > g(0) = {g_zero:g}.")
