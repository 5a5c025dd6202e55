"""Effective single-site measure and the (p, q) fixed point.

A single spin gamma in {-S, ..., S} under the cavity field beta*sqrt(q)*eta + h
and the quadratic weight gamma^2 (beta^2 (p - q)/2 + D) has partition function

    W(eta) = sum_gamma exp((beta sqrt(q) eta + h) gamma
                           + gamma^2 (beta^2 (p - q)/2 + D)),

with first and second moments m(eta), s(eta).  The fixed point solves

    q = E[m(eta)^2],   p = E[s(eta)],   eta ~ N(0, 1),

and the free-energy fluctuations have limiting variance Var(log W) - beta^2 q^2 / 2.
"""

from dataclasses import dataclass
from functools import lru_cache
import math
import warnings

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import logsumexp

DEFAULT_NODES = 64
NEGATIVE_NU_TOL = 1e-10


@dataclass(frozen=True)
class FixedPoint:
    p: float
    q: float
    residual: float
    iterations: int
    converged: bool
    tol: float = 1e-12
    oscillating: bool = False
    node_count: int = DEFAULT_NODES


@dataclass(frozen=True)
class EffectiveSite:
    eta: float
    w: float
    m: float
    s: float


@dataclass(frozen=True)
class LimitLaw:
    """Limit law of the centered free energy.

    `mean_log_w` is (1/N) E[log Z_0]; `centering_rate` is beta^2 (q^2 - p^2)/4.
    `negative` is set when Var(log W) - beta^2 q^2/2 came out below -1e-10.
    """

    nu_squared: float
    var_log_w: float
    mean_log_w: float
    centering_rate: float
    negative: bool = False


def _check_q(q):
    if np.any(np.asarray(q) < 0):
        raise ValueError(f"q must be nonnegative, got {q}")


def _exponents(eta, p, q, params):
    """Exponents of the 2S+1 summands of W; trailing axis runs over gamma = -S..S."""
    _check_q(q)
    gamma = params.levels.astype(np.float64)
    field = params.beta * math.sqrt(q) * np.asarray(eta, dtype=np.float64) + params.h
    curvature = params.beta**2 / 2 * (p - q) + params.D
    return field[..., None] * gamma + curvature * gamma**2


def log_w(eta, p, q, params):
    return logsumexp(_exponents(eta, p, q, params), axis=-1)


def w_value(eta, p, q, params):
    """W(eta); vectorised over eta."""
    return np.exp(log_w(eta, p, q, params))


def site_moments(eta, p, q, params):
    """(m, s) = first and second moments of the single-site measure at eta.

    Summands are paired as gamma, -gamma so that symmetric weights give m = 0 exactly.
    """
    e = _exponents(eta, p, q, params)
    weights = np.exp(e - e.max(axis=-1, keepdims=True))
    S = params.S
    pos = weights[..., S + 1:]
    neg = weights[..., S - 1::-1]
    gamma = np.arange(1, S + 1, dtype=np.float64)
    total = weights[..., S] + (pos + neg).sum(axis=-1)
    m = ((pos - neg) * gamma).sum(axis=-1) / total
    s = ((pos + neg) * gamma**2).sum(axis=-1) / total
    return m, s


def effective_site(eta, p, q, params):
    m, s = site_moments(eta, p, q, params)
    return EffectiveSite(float(eta), float(w_value(eta, p, q, params)), float(m), float(s))


@lru_cache(maxsize=None)
def gauss_hermite_rule(node_count):
    """Probabilists' Gauss-Hermite nodes and weights normalised to the N(0, 1) law."""
    if node_count < 2:
        raise ValueError("node_count must be at least 2")
    nodes, weights = hermegauss(node_count)
    weights = weights / math.sqrt(2 * math.pi)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_hermite_expectation(f, node_count=DEFAULT_NODES):
    """E[f(eta)], eta ~ N(0, 1).  `f` is applied to the whole node array at once."""
    nodes, weights = gauss_hermite_rule(node_count)
    values = np.asarray(f(nodes), dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValueError("integrand is not finite at a quadrature node")
    return float(np.dot(weights, values))


def fixed_point_map(p, q, params, node_count=DEFAULT_NODES):
    """One application of (p, q) -> (E[s], E[m^2])."""
    nodes, weights = gauss_hermite_rule(node_count)
    m, s = site_moments(nodes, p, q, params)
    return float(np.dot(weights, s)), float(np.dot(weights, m * m))


def decoupled_fixed_point(params):
    """(p, q) at beta = 0, where the site measure no longer depends on eta."""
    m, s = site_moments(0.0, 0.0, 0.0, params.replace(beta=0.0))
    return float(s), float(m * m)


def fixed_point_solve(params, tol=1e-12, max_iter=10_000, damping=0.5,
                      node_count=DEFAULT_NODES):
    """Damped iteration for (p, q), started from the beta = 0 solution.

    `residual` is the sup-norm distance between the returned point and its image.
    A run that fails to converge comes back with converged=False;
    `oscillating` flags a run whose updates kept flipping sign.
    """
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    p, q = decoupled_fixed_point(params)
    residual = math.inf
    flips = 0
    last_step = None
    for it in range(max_iter + 1):
        p_new, q_new = fixed_point_map(p, q, params, node_count)
        step = np.array([p_new - p, q_new - q])
        residual = float(np.max(np.abs(step)))
        if residual <= tol:
            return FixedPoint(p, q, residual, it, True, tol, False, node_count)
        if it == max_iter:
            break
        if last_step is not None and np.any(step * last_step < 0):
            flips += 1
        else:
            flips = 0
        last_step = step
        p = float(p + damping * step[0])
        q = max(float(q + damping * step[1]), 0.0)
    return FixedPoint(p, q, residual, max_iter, False, tol, flips >= 10, node_count)


def log_w_cosh(eta, p, q, params):
    """log W in the grouped form log(1 + sum_{g>=1} 2 cosh(a g) exp(c g^2))."""
    _check_q(q)
    a = params.beta * math.sqrt(q) * np.asarray(eta, dtype=np.float64) + params.h
    c = params.beta**2 / 2 * (p - q) + params.D
    gamma = np.arange(1, params.S + 1, dtype=np.float64)
    shift = max(0.0, float(np.max(c * gamma**2)))
    terms = 2 * np.cosh(a[..., None] * gamma) * np.exp(c * gamma**2 - shift)
    return shift + np.log(math.exp(-shift) + terms.sum(axis=-1))


def expected_log_w(fp, params, node_count=DEFAULT_NODES):
    """(1/N) E[log Z_0] = E[log W(eta)]."""
    return gauss_hermite_expectation(lambda x: log_w_cosh(x, fp.p, fp.q, params), node_count)


def sign_policy(nu2):
    """(nu2, negative): clamp values in [-1e-10, 0) to zero, flag anything below."""
    if nu2 < -NEGATIVE_NU_TOL:
        warnings.warn(f"limiting variance is negative: nu^2 = {nu2:.3e}", RuntimeWarning)
        return nu2, True
    if nu2 < 0:
        warnings.warn(f"clamping nu^2 = {nu2:.3e} to zero", RuntimeWarning)
        return 0.0, False
    return nu2, False


def limit_variance(fp, params, node_count=DEFAULT_NODES):
    """Limiting variance nu^2 = Var(log W) - beta^2 q^2 / 2 and the centering constants.

    Values in [-1e-10, 0) are clamped to zero with a warning; anything more
    negative is kept, flagged and warned about.
    """
    mean = expected_log_w(fp, params, node_count)
    if params.beta * math.sqrt(fp.q) == 0:
        var = 0.0  # W does not depend on eta
    else:
        var = gauss_hermite_expectation(
            lambda x: (log_w_cosh(x, fp.p, fp.q, params) - mean) ** 2, node_count)
    nu2, negative = sign_policy(var - params.beta**2 * fp.q**2 / 2)
    rate = params.beta**2 * (fp.q**2 - fp.p**2) / 4
    return LimitLaw(float(nu2), float(var), mean, float(rate), negative)
