"""Disorder-averaged experiments: free-energy CLT and overlap concentration.

Sample j of a run uses the couplings drawn from `derive_seed(seed, j)`.
Samples are processed in fixed-size batches, so results do not depend on the
number of workers.
"""

from dataclasses import dataclass, field
from functools import partial
import math

import numpy as np
from scipy import stats

from . import effective, model
from .model import DisorderSample, pair_indices
from .parallel import map_batches
from .seeding import derive_seed

SAMPLE_BATCH = 64
DEFAULT_U_GRID = (0.25, 0.5, 1.0, 2.0)
DEGENERATE_NU2 = 1e-14


class ConvergenceError(RuntimeError):
    """The (p, q) iteration did not converge; beta is likely outside the high-temperature regime."""


@dataclass(frozen=True)
class ExperimentConfig:
    params: model.ModelParams
    sample_count: int
    seed: int = 0
    u_grid: tuple = DEFAULT_U_GRID
    node_count: int = effective.DEFAULT_NODES
    tol: float = 1e-12

    def __post_init__(self):
        if self.sample_count < 2:
            raise ValueError("sample_count must be at least 2")
        u = tuple(float(x) for x in self.u_grid)
        if not all(math.isfinite(x) for x in u):
            raise ValueError("u_grid must be finite")
        object.__setattr__(self, "u_grid", u)


@dataclass(frozen=True)
class BandCheck:
    name: str
    deviation: float
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "deviation", float(self.deviation))
        object.__setattr__(self, "bound", float(self.bound))

    @property
    def passed(self):
        return self.deviation <= self.bound


def solve_effective(params, node_count=effective.DEFAULT_NODES, tol=1e-12):
    """Fixed point and limit law; raises ConvergenceError if the iteration fails."""
    fp = effective.fixed_point_solve(params, tol=tol, node_count=node_count)
    if not fp.converged:
        raise ConvergenceError(
            f"fixed point did not converge (residual {fp.residual:.3e}, "
            f"oscillating={fp.oscillating})")
    return fp, effective.limit_variance(fp, params, node_count)


def centered_free_energy(disorder, fp, law, params):
    """X_N = sqrt(N) ((1/N) log Z_N - (1/N) E[log Z_0] - beta^2 (q^2 - p^2)/4)."""
    log_z = model.log_partition(disorder, params)
    return _center(log_z, law, params)


def _center(log_z, law, params):
    N = params.N
    return math.sqrt(N) * (log_z / N - law.mean_log_w - law.centering_rate)


def _log_partition_batch(params, seed, start, stop):
    seeds = [derive_seed(seed, j) for j in range(start, stop)]
    J = np.array([params.beta / math.sqrt(params.N) * DisorderSample.draw(params.N, s).couplings
                  for s in seeds])
    log_z, _ = model.exact_averages(params, J, params.h, params.D)
    return np.array(seeds, dtype=np.uint64), log_z


@dataclass
class CLTSummary:
    """Empirical law of X_N over disorder samples, with standard errors.

    In the degenerate case (nu^2 = 0) `ks_statistic` is the fraction of samples
    farther than 1/sqrt(N) from zero, i.e. the distance to a point mass at 0.
    """

    N: int
    samples: np.ndarray
    seeds: np.ndarray
    log_partitions: np.ndarray
    empirical_mean: float
    mean_se: float
    empirical_variance: float
    variance_se: float
    third_abs_moment: float
    third_abs_se: float
    u_grid: tuple
    ecf: np.ndarray
    ecf_se: np.ndarray
    ks_statistic: float
    degenerate: bool
    nu_squared_ref: float
    fixed_point: effective.FixedPoint = None
    law: effective.LimitLaw = None

    def checks(self, u_values=None, c=1.0):
        """Mean, variance and ecf bands: |deviation| <= 3 se + c/sqrt(N)."""
        slack = c / math.sqrt(self.N)
        out = [
            BandCheck("mean", abs(self.empirical_mean), 3 * self.mean_se + slack),
            BandCheck("variance", abs(self.empirical_variance - self.nu_squared_ref),
                      3 * self.variance_se + slack),
        ]
        u_values = self.u_grid if u_values is None else u_values
        for u in u_values:
            k = self.u_grid.index(u)
            target = math.exp(-(u**2) * self.nu_squared_ref / 2)
            out.append(BandCheck(f"ecf(u={u:g})", abs(self.ecf[k] - target),
                                 3 * self.ecf_se[k] + slack))
        return out


def summarize_clt(x, N, u_grid, nu2):
    x = np.asarray(x, dtype=np.float64)
    M = x.size
    mean = float(x.mean())
    dev = x - mean
    var = float(np.mean(dev**2) * M / (M - 1))
    m4 = float(np.mean(dev**4))
    var_se = math.sqrt(max(m4 - var**2, 0.0) / M)
    a3 = np.abs(x) ** 3
    ecf, ecf_se = [], []
    for u in u_grid:
        c, s = np.cos(u * x), np.sin(u * x)
        ecf.append(complex(c.mean(), s.mean()))
        ecf_se.append(math.sqrt((c.var(ddof=1) + s.var(ddof=1)) / M))
    degenerate = nu2 <= DEGENERATE_NU2
    if degenerate:
        ks = float(np.mean(np.abs(x) > 1 / math.sqrt(N)))
    else:
        ks = float(stats.kstest(x / math.sqrt(nu2), "norm").statistic)
    return dict(
        empirical_mean=mean, mean_se=math.sqrt(var / M),
        empirical_variance=var, variance_se=var_se,
        third_abs_moment=float(a3.mean()), third_abs_se=float(a3.std(ddof=1) / math.sqrt(M)),
        u_grid=tuple(u_grid), ecf=np.array(ecf), ecf_se=np.array(ecf_se),
        ks_statistic=ks, degenerate=degenerate, nu_squared_ref=nu2,
    )


def run_clt_experiment(cfg, workers=1):
    params = cfg.params
    fp, law = solve_effective(params, cfg.node_count, cfg.tol)
    parts = map_batches(partial(_log_partition_batch, params, cfg.seed),
                        cfg.sample_count, SAMPLE_BATCH, workers)
    seeds = np.concatenate([p[0] for p in parts])
    log_z = np.concatenate([p[1] for p in parts])
    x = np.array([_center(float(lz), law, params) for lz in log_z])
    return CLTSummary(N=params.N, samples=x, seeds=seeds, log_partitions=log_z,
                      fixed_point=fp, law=law,
                      **summarize_clt(x, params.N, cfg.u_grid, law.nu_squared))


def _overlap_features(N):
    i, j = pair_indices(N)

    def features(sigma):
        sq = sigma * sigma
        r11 = sq.sum(axis=1) / N
        return np.hstack([sigma, sq, sigma[:, i] * sigma[:, j], (r11 * r11)[:, None]])

    return features


def _overlap_deviations(avg, fp, N):
    """<(R12 - q)^2> and <(R11 - p)^2> from single-replica moments.

    Replicas are independent under the Gibbs measure, so
    <R12^2> = N^-2 sum_{i,j} <s_i s_j>^2 and <R12> = N^-1 sum_i <s_i>^2.
    """
    P = N * (N - 1) // 2
    m1, m2 = avg[:, :N], avg[:, N:2 * N]
    corr, r11sq = avg[:, 2 * N:2 * N + P], avg[:, 2 * N + P]
    r12sq = ((m2**2).sum(axis=1) + 2 * (corr**2).sum(axis=1)) / N**2
    r12 = (m1**2).sum(axis=1) / N
    r11 = m2.sum(axis=1) / N
    dev12 = r12sq - 2 * fp.q * r12 + fp.q**2
    dev11 = r11sq - 2 * fp.p * r11 + fp.p**2
    return dev12, dev11


def overlap_deviations(disorder, fp, params):
    """Exact (<(R12 - q)^2>, <(R11 - p)^2>) for one disorder sample."""
    J = params.beta / math.sqrt(params.N) * disorder.couplings
    _, avg = model.exact_averages(params, J, params.h, params.D, _overlap_features(params.N))
    dev12, dev11 = _overlap_deviations(avg, fp, params.N)
    return float(dev12[0]), float(dev11[0])


def _concentration_batch(params, fp, seed, start, stop):
    seeds = [derive_seed(seed, j) for j in range(start, stop)]
    J = np.array([params.beta / math.sqrt(params.N) * DisorderSample.draw(params.N, s).couplings
                  for s in seeds])
    _, avg = model.exact_averages(params, J, params.h, params.D, _overlap_features(params.N))
    dev12, dev11 = _overlap_deviations(avg, fp, params.N)
    return np.array(seeds, dtype=np.uint64), dev12, dev11


@dataclass
class ConcentrationSummary:
    N: int
    n_times_var_r12: float
    r12_se: float
    n_times_var_r11: float
    r11_se: float
    bound_r12: float
    bound_r11: float
    seeds: np.ndarray = field(repr=False, default=None)
    r12_deviations: np.ndarray = field(repr=False, default=None)
    r11_deviations: np.ndarray = field(repr=False, default=None)
    fixed_point: effective.FixedPoint = None

    def checks(self, k=3.0):
        """Each N-scaled estimate plus k standard errors must stay below its bound."""
        return [
            BandCheck("N<(R12-q)^2>", self.n_times_var_r12 + k * self.r12_se, self.bound_r12),
            BandCheck("N<(R11-p)^2>", self.n_times_var_r11 + k * self.r11_se, self.bound_r11),
        ]


def run_concentration_experiment(cfg, workers=1):
    params = cfg.params
    fp, _ = solve_effective(params, cfg.node_count, cfg.tol)
    parts = map_batches(partial(_concentration_batch, params, fp, cfg.seed),
                        cfg.sample_count, SAMPLE_BATCH, workers)
    seeds = np.concatenate([p[0] for p in parts])
    dev12 = np.concatenate([p[1] for p in parts])
    dev11 = np.concatenate([p[2] for p in parts])
    N, M = params.N, dev12.size
    return ConcentrationSummary(
        N=N,
        n_times_var_r12=float(N * dev12.mean()), r12_se=float(N * dev12.std(ddof=1) / math.sqrt(M)),
        n_times_var_r11=float(N * dev11.mean()), r11_se=float(N * dev11.std(ddof=1) / math.sqrt(M)),
        bound_r12=16.0 * params.S**2, bound_r11=16.0 * params.S**4,
        seeds=seeds, r12_deviations=dev12, r11_deviations=dev11, fixed_point=fp,
    )
