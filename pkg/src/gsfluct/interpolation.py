"""Discretised cavity interpolation between the decoupled and the full model.

Two independent Brownian families drive the interpolation: B_ij (one per edge)
and B_i (one per site).  The site processes enter through their time reversal
W_i[t] = B_i[1 - t], so eta_i = W_i[0] = B_i[1] and W_i[1] = 0.  Starting from

    H_0(sigma) = beta sqrt(q) sum_i sigma_i eta_i
                 + (beta^2 (p - q)/2 + D) sum_i sigma_i^2 + h sum_i sigma_i,

the Hamiltonian moves by

    dH_t = beta/sqrt(N) sum_{i<j} sigma_i sigma_j dB_ij
           + beta sqrt(q) sum_i sigma_i dW_i - beta^2 (p - q)/2 sum_i sigma_i^2 dt

and reaches H_N with couplings g_ij = B_ij[1] at t = 1.  Time reversal is exact
index reversal of a simulated forward path on a uniform grid.
"""

from dataclasses import dataclass
from functools import partial
import math

import numpy as np

from . import model
from .model import pair_indices
from .parallel import map_batches
from .seeding import derive_seed, generator

DEFAULT_STEPS = 2**10
IBP_BATCH = 256


@dataclass(frozen=True)
class PathGrid:
    """Uniform grid t_k = k/K on [0, 1]."""

    steps: int = DEFAULT_STEPS

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")

    @property
    def dt(self):
        return 1.0 / self.steps

    @property
    def times(self):
        return np.arange(self.steps + 1) / self.steps

    def index_of(self, t):
        k = round(t * self.steps)
        if not math.isclose(k / self.steps, t, rel_tol=0, abs_tol=1e-12):
            raise ValueError(f"t = {t} is not a point of the {self.steps}-step grid")
        return k


def reverse_time(paths):
    """Index reversal along the last (time) axis: W[..., k] = B[..., K - k]."""
    return np.asarray(paths)[..., ::-1]


@dataclass(frozen=True)
class InterpolationPath:
    """One realisation of both Brownian families on a grid.

    edge_increments: (n_pairs, K) increments of B_ij, row-major edge order.
    site_paths: (N, K + 1) forward paths B_i[t_k], with B_i[0] = 0.
    """

    edge_increments: np.ndarray
    site_paths: np.ndarray
    seed: int = 0

    @property
    def steps(self):
        return self.site_paths.shape[1] - 1

    @property
    def eta(self):
        return self.site_paths[:, -1]

    @property
    def reversed_sites(self):
        """W_i[t_k] = B_i[1 - t_k], shape (N, K + 1)."""
        return reverse_time(self.site_paths)

    @property
    def edge_paths(self):
        """B_ij[t_k], shape (n_pairs, K + 1)."""
        out = np.zeros((self.edge_increments.shape[0], self.steps + 1))
        np.cumsum(self.edge_increments, axis=1, out=out[:, 1:])
        return out

    def couplings(self):
        """The couplings g_ij = B_ij[1] reached at the end of the interpolation."""
        return model.DisorderSample(self.edge_increments.sum(axis=1), self.seed)


def sample_path(params, grid, seed):
    """Draw both Brownian families on `grid`, deterministically from `seed`."""
    rng = generator(seed)
    scale = math.sqrt(grid.dt)
    edges = rng.standard_normal((params.n_pairs, grid.steps)) * scale
    sites = np.zeros((params.N, grid.steps + 1))
    np.cumsum(rng.standard_normal((params.N, grid.steps)) * scale, axis=1, out=sites[:, 1:])
    return InterpolationPath(edges, sites, int(seed))


@dataclass(frozen=True)
class HamiltonianPath:
    """H_t(sigma) on the grid, split as values = initial + martingale_part + drift_part."""

    values: np.ndarray
    initial: float
    martingale_part: np.ndarray
    drift_part: np.ndarray


def _spin_terms(config, params):
    sigma = np.asarray(config, dtype=np.float64)
    if sigma.shape != (params.N,):
        raise ValueError(f"configuration has shape {sigma.shape}, expected ({params.N},)")
    i, j = pair_indices(params.N)
    return sigma, sigma[i] * sigma[j], float(np.dot(sigma, sigma)), float(np.sum(sigma))


def _check_path(path, params):
    if path.site_paths.shape[0] != params.N or path.edge_increments.shape[0] != params.n_pairs:
        raise ValueError("path dimensions do not match the model size")


def _increments(sigma, pairs, sq, path, fp, params):
    """Per-step increments (martingale, drift) of H_t(sigma)."""
    dx = params.beta / math.sqrt(params.N) * (pairs @ path.edge_increments)
    dy = params.beta * math.sqrt(fp.q) * (sigma @ np.diff(path.reversed_sites, axis=1))
    drift = -params.beta**2 / 2 * (fp.p - fp.q) * sq / path.steps
    return dx + dy, drift


def hamiltonian_path(config, path, fp, params):
    _check_path(path, params)
    sigma, pairs, sq, total = _spin_terms(config, params)
    initial = (params.beta * math.sqrt(fp.q) * float(np.dot(sigma, path.eta))
               + (params.beta**2 / 2 * (fp.p - fp.q) + params.D) * sq
               + params.h * total)
    mart_steps, _ = _increments(sigma, pairs, sq, path, fp, params)
    martingale = np.concatenate([[0.0], np.cumsum(mart_steps)])
    times = np.arange(path.steps + 1) / path.steps
    drift = -params.beta**2 / 2 * (fp.p - fp.q) * sq * times
    return HamiltonianPath(initial + martingale + drift, initial, martingale, drift)


def endpoint_identity_check(config, path, fp, params):
    """|H_1(sigma) - H_N(sigma; g = B[1])|; zero up to rounding."""
    hp = hamiltonian_path(config, path, fp, params)
    target = model.hamiltonian(np.asarray(config), path.couplings(), params)
    return abs(float(hp.values[-1]) - target)


def cross_variation_rate(config1, config2, fp, params):
    """beta^2 N/2 (R^2 - U) + beta^2 q N R: the d[H(s1), H(s2)]_t / dt rate."""
    ov = model.overlaps(config1, config2)
    N = params.N
    return params.beta**2 * N / 2 * (ov.R**2 - ov.U) + params.beta**2 * fp.q * N * ov.R


def quadratic_variation_estimate(config1, config2, path, fp, params):
    """(realised cross-variation of H_t(s1), H_t(s2) over the grid, its analytic value)."""
    _check_path(path, params)
    a = _spin_terms(config1, params)
    b = _spin_terms(config2, params)
    ma, da = _increments(*a[:3], path, fp, params)
    mb, db = _increments(*b[:3], path, fp, params)
    empirical = float(np.dot(ma + da, mb + db))
    return empirical, cross_variation_rate(config1, config2, fp, params)


def qv_moments(config1, config2, fp, params, grid):
    """Exact mean and standard deviation of the realised cross-variation on `grid`."""
    K = grid.steps
    c = params.beta**2 / 2 * (fp.p - fp.q)
    d1 = -c * float(np.dot(config1, config1))
    d2 = -c * float(np.dot(config2, config2))
    a11 = cross_variation_rate(config1, config1, fp, params)
    a22 = cross_variation_rate(config2, config2, fp, params)
    a12 = cross_variation_rate(config1, config2, fp, params)
    mean = a12 + d1 * d2 / K
    var = (a11 * a22 + a12**2) / K + (d1**2 * a22 + d2**2 * a11 + 2 * d1 * d2 * a12) / K**2
    return mean, math.sqrt(var)


def _qv_gap(params, fp, grid, seed):
    rng = generator(derive_seed(seed, 0))
    s1 = rng.integers(-params.S, params.S + 1, params.N)
    s2 = rng.integers(-params.S, params.S + 1, params.N)
    path = sample_path(params, grid, derive_seed(seed, 1))
    empirical, analytic = quadratic_variation_estimate(s1, s2, path, fp, params)
    return empirical - analytic


def qv_gap_rms(params, fp, grid, path_count, seed):
    """RMS of (realised - analytic) cross-variation over random config pairs and paths."""
    gaps = np.array([_qv_gap(params, fp, grid, derive_seed(seed, j)) for j in range(path_count)])
    return float(np.sqrt(np.mean(gaps**2)))


def qv_scaling(params, fp, steps, path_count, seed):
    """RMS gaps for each grid size in `steps` and the fitted log-log slope."""
    rms = np.array([qv_gap_rms(params, fp, PathGrid(K), path_count, seed) for K in steps])
    slope = np.polyfit(np.log(steps), np.log(rms), 1)[0]
    return rms, float(slope)


def drift_rearrangement_check(R11, R12, U11, U12, p, q, beta, N):
    """Raw drift of d log Z_t against its rearranged, centered form.

    lhs is the drift as it comes out of Ito's formula.  rhs is
    beta^2 N/4 [(R11-p)^2 - (R12-q)^2 + q^2 - p^2 + U12 - U11] + beta^2 q N (R11 - R12),
    the second term being the piece later matched by Gaussian integration by parts.
    Vectorised over all arguments.
    """
    b2N = beta**2 * N
    lhs = (-b2N / 2 * (p - q) * R11 + b2N / 4 * (R11**2 - U11) + b2N / 2 * q * R11
           - b2N / 4 * (R12**2 - U12) - b2N * q / 2 * R12)
    rhs = (b2N / 4 * ((R11 - p) ** 2 - (R12 - q) ** 2 + q**2 - p**2 + U12 - U11)
           + b2N * q * (R11 - R12))
    return lhs, rhs


def interpolated_energy(path, fp, params, k):
    """(pair couplings, field, square) of H_{t_k} in the form used by model.exact_averages.

    The eta terms of H_0 cancel against the W increments, leaving
    H_t = sum B_ij[t] beta/sqrt(N) s_i s_j + sum (h + beta sqrt(q) W_i[t]) s_i
          + (D + beta^2 (p - q)(1 - t)/2) sum s_i^2.
    """
    t = k / path.steps
    pair = params.beta / math.sqrt(params.N) * path.edge_paths[:, k]
    field = params.h + params.beta * math.sqrt(fp.q) * path.reversed_sites[:, k]
    square = params.D + params.beta**2 / 2 * (fp.p - fp.q) * (1 - t)
    return pair, field, square


@dataclass(frozen=True)
class IBPEstimate:
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    sample_count: int

    @property
    def gap(self):
        return abs(self.lhs - self.rhs)

    def passes(self, k=3.0):
        return self.gap <= k * (self.lhs_se + self.rhs_se)


def _first_two_moments(sigma):
    return np.hstack([sigma, sigma * sigma])


def _ibp_batch(params, fp, t, grid, seed, start, stop):
    k = grid.index_of(t)
    pairs, fields, squares, ws = [], [], [], []
    for j in range(start, stop):
        path = sample_path(params, grid, derive_seed(seed, j))
        pair, field, square = interpolated_energy(path, fp, params, k)
        pairs.append(pair)
        fields.append(field)
        squares.append(np.full(params.N, square))
        ws.append(path.reversed_sites[:, k])
    _, avg = model.exact_averages(params, np.array(pairs), np.array(fields),
                                  np.array(squares), _first_two_moments)
    mean1, mean2 = avg[:, :params.N], avg[:, params.N:]
    lhs = params.beta * math.sqrt(fp.q) * (mean1 * np.array(ws)).sum(axis=1) / (1 - t)
    rhs = params.beta**2 * fp.q * (mean2 - mean1**2).sum(axis=1)
    return lhs, rhs


def ibp_samples(params, fp, t, sample_count, grid, seed, workers=1):
    """Per-sample integrands of both sides of the Gaussian integration-by-parts identity."""
    if not 0 < t < 1:
        raise ValueError("t must lie strictly inside (0, 1)")
    grid.index_of(t)
    fn = partial(_ibp_batch, params, fp, t, grid, seed)
    parts = map_batches(fn, sample_count, IBP_BATCH, workers)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def ibp_identity_estimate(params, fp, t, sample_count, grid, seed, workers=1):
    """Monte Carlo estimates of

        E[beta sqrt(q) sum_i <s_i>_t W_i[t]/(1 - t)]  and  beta^2 q N E[<R11 - R12>_t],

    with Gibbs averages under H_t computed exactly.
    """
    lhs, rhs = ibp_samples(params, fp, t, sample_count, grid, seed, workers)
    n = lhs.size
    return IBPEstimate(float(lhs.mean()), float(lhs.std(ddof=1) / math.sqrt(n)),
                       float(rhs.mean()), float(rhs.std(ddof=1) / math.sqrt(n)), n)


def time_reversal_marginals(params, grid, t_values, path_count, seed):
    """Sample variance of W_i[t] (all sites pooled) and its standard error, per t."""
    ks = [grid.index_of(t) for t in t_values]
    values = np.empty((path_count, params.N, len(ks)))
    for j in range(path_count):
        values[j] = sample_path(params, grid, derive_seed(seed, j)).reversed_sites[:, ks]
    values = values.reshape(-1, len(ks))
    centered = values - values.mean(axis=0)
    var = (centered**2).mean(axis=0)
    se = np.sqrt(((centered**2 - var) ** 2).mean(axis=0) / values.shape[0])
    return var, se
