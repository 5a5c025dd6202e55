"""Exact finite-N Ghatak-Sherrington model.

Spins take values in {-S, ..., S}.  The Hamiltonian is

    H_N(sigma) = beta/sqrt(N) * sum_{i<j} g_ij sigma_i sigma_j
                 + D * sum_i sigma_i**2 + h * sum_i sigma_i

and every thermodynamic quantity here is obtained by exhaustive enumeration
of the (2S+1)**N configurations, streamed in chunks with a running-maximum
shift so that no exponential overflows.

Configurations are enumerated by a mixed-radix counter: state index k maps
to the digits of k in base 2S+1 (last site fastest), shifted by -S.
"""

from dataclasses import dataclass
import math

import numpy as np

from .seeding import gaussian_block

DEFAULT_MAX_STATES = 2**31
CHUNK_STATES = 2**15


class EnumerationError(ValueError):
    """Raised when a state space is too large to enumerate."""


@dataclass(frozen=True)
class ModelParams:
    """Parameters (S, N, beta, h, D) of the model.

    `max_states` caps (2S+1)**N; construction fails above it.
    """

    S: int
    N: int
    beta: float
    h: float = 0.0
    D: float = 0.0
    max_states: int = DEFAULT_MAX_STATES

    def __post_init__(self):
        if int(self.S) != self.S or self.S < 1:
            raise ValueError(f"S must be a positive integer, got {self.S}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if not self.h >= 0:
            raise ValueError(f"h must be nonnegative, got {self.h}")
        if not math.isfinite(self.D):
            raise ValueError(f"D must be finite, got {self.D}")
        if self.n_states > self.max_states:
            raise EnumerationError(
                f"(2S+1)^N = {self.n_states} exceeds the enumeration cap {self.max_states}"
            )

    @property
    def n_levels(self):
        return 2 * self.S + 1

    @property
    def n_states(self):
        return self.n_levels**self.N

    @property
    def n_pairs(self):
        return self.N * (self.N - 1) // 2

    @property
    def levels(self):
        return np.arange(-self.S, self.S + 1)

    def replace(self, **changes):
        fields = dict(S=self.S, N=self.N, beta=self.beta, h=self.h, D=self.D,
                      max_states=self.max_states)
        fields.update(changes)
        return ModelParams(**fields)


def pair_indices(N):
    """Row-major (i, j), i < j, index arrays; edge e couples sites i[e] and j[e]."""
    return np.triu_indices(N, 1)


def _n_from_pairs(n_pairs):
    N = int(round((1 + math.sqrt(1 + 8 * n_pairs)) / 2))
    if N * (N - 1) // 2 != n_pairs:
        raise ValueError(f"{n_pairs} is not a triangular number of couplings")
    return N


@dataclass(frozen=True)
class DisorderSample:
    """Gaussian couplings g_ij (i < j, row-major) and the seed that produced them.

    Coupling e is normal number e of the counter-based stream keyed on `seed`,
    so any single coupling can be regenerated on its own
    (see `seeding.gaussian_at`).
    """

    couplings: np.ndarray
    seed: int = 0

    def __post_init__(self):
        g = np.asarray(self.couplings, dtype=np.float64)
        if g.ndim != 1:
            raise ValueError("couplings must be one-dimensional")
        _n_from_pairs(g.size)
        g.setflags(write=False)
        object.__setattr__(self, "couplings", g)

    @classmethod
    def draw(cls, N, seed):
        return cls(gaussian_block(seed, N * (N - 1) // 2), int(seed))

    @property
    def N(self):
        return _n_from_pairs(self.couplings.size)

    def matrix(self):
        """Symmetric N x N coupling matrix with zero diagonal."""
        N = self.N
        G = np.zeros((N, N))
        i, j = pair_indices(N)
        G[i, j] = self.couplings
        G[j, i] = self.couplings
        return G

    def permuted(self, perm):
        """Couplings after relabelling site k as perm[k]."""
        perm = np.asarray(perm)
        G = self.matrix()
        Gp = np.empty_like(G)
        Gp[np.ix_(perm, perm)] = G
        i, j = pair_indices(self.N)
        return DisorderSample(Gp[i, j], self.seed)


@dataclass(frozen=True)
class OverlapStats:
    R: float
    U: float


def _check_config(config, N, S=None):
    sigma = np.asarray(config)
    if sigma.shape != (N,):
        raise ValueError(f"configuration has shape {sigma.shape}, expected ({N},)")
    if S is not None and np.any(np.abs(sigma) > S):
        raise ValueError(f"configuration has a spin outside [-{S}, {S}]")
    return sigma


def _check_disorder(disorder, params):
    if disorder.N != params.N:
        raise ValueError(f"disorder is for N={disorder.N}, params have N={params.N}")


def configurations(params, start=0, stop=None):
    """Configurations with state indices in [start, stop), as an int array (n, N)."""
    stop = params.n_states if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, params.N), dtype=np.int64)
    base = params.n_levels
    for site in range(params.N - 1, -1, -1):
        idx, digit = np.divmod(idx, base)
        out[:, site] = digit - params.S
    return out


def _chunks(params, chunk_states):
    for start in range(0, params.n_states, chunk_states):
        yield configurations(params, start, min(start + chunk_states, params.n_states))


def hamiltonian(config, disorder, params):
    """H_N(sigma) for one configuration."""
    _check_disorder(disorder, params)
    sigma = _check_config(config, params.N, params.S).astype(np.float64)
    i, j = pair_indices(params.N)
    coupling = float(np.dot(disorder.couplings, sigma[i] * sigma[j]))
    return (params.beta / math.sqrt(params.N) * coupling
            + params.D * float(np.dot(sigma, sigma))
            + params.h * float(np.sum(sigma)))


def _as_batch(x, B, width):
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 0:
        return np.full((B, width), float(a))
    a = np.atleast_2d(a)
    if a.shape[1] != width:
        raise ValueError(f"expected trailing dimension {width}, got {a.shape[1]}")
    return np.broadcast_to(a, (B, width))


def exact_averages(params, pair_couplings, field, square, features=None,
                   chunk_states=CHUNK_STATES):
    """Exact log-partition functions and Gibbs averages for a batch of energies.

    The energy of configuration sigma in batch member b is

        sum_e pair_couplings[b, e] sigma_i sigma_j
        + sum_i field[b, i] sigma_i + sum_i square[b, i] sigma_i**2,

    which covers H_N as well as every interpolated Hamiltonian.  `field` and
    `square` may be scalars.  `features` maps an (n, N) float array of
    configurations to an (n, F) array; its Gibbs averages are returned.

    Returns (log_z, averages) with shapes (B,) and (B, F) (F = 0 if no features).
    """
    J = np.atleast_2d(np.asarray(pair_couplings, dtype=np.float64))
    B = J.shape[0]
    if J.shape[1] != params.n_pairs:
        raise ValueError(f"expected {params.n_pairs} couplings, got {J.shape[1]}")
    a = _as_batch(field, B, params.N)
    b = _as_batch(square, B, params.N)
    i, j = pair_indices(params.N)

    run_max = np.full(B, -np.inf)
    z = np.zeros(B)
    acc = None
    for conf in _chunks(params, chunk_states):
        sigma = conf.astype(np.float64)
        energy = (sigma[:, i] * sigma[:, j]) @ J.T + sigma @ a.T + (sigma * sigma) @ b.T
        new_max = np.maximum(run_max, energy.max(axis=0))
        rescale = np.exp(run_max - new_max)
        weights = np.exp(energy - new_max)
        if features is None:
            z = z * rescale + weights.sum(axis=0)
        else:
            # normaliser rides along as a column of ones so that <1> == 1 exactly
            values = np.asarray(features(sigma), dtype=np.float64)
            values = np.hstack([np.ones((values.shape[0], 1)), values])
            part = (values.T @ weights).T
            acc = part if acc is None else acc * rescale[:, None] + part
        run_max = new_max
    if acc is None:
        return run_max + np.log(z), np.zeros((B, 0))
    z = acc[:, 0]
    return run_max + np.log(z), acc[:, 1:] / z[:, None]


def _disorder_energy(disorder, params):
    return params.beta / math.sqrt(params.N) * disorder.couplings, params.h, params.D


def log_partition(disorder, params):
    """log Z_N = log sum_sigma exp(H_N(sigma)), by exact enumeration."""
    _check_disorder(disorder, params)
    log_z, _ = exact_averages(params, *_disorder_energy(disorder, params))
    return float(log_z[0])


def log_weights(disorder, params):
    """log Gibbs weight H_N(sigma) - log Z_N of every state, in enumeration order."""
    _check_disorder(disorder, params)
    J, h, D = _disorder_energy(disorder, params)
    sigma = configurations(params).astype(np.float64)
    i, j = pair_indices(params.N)
    energy = (sigma[:, i] * sigma[:, j]) @ J + h * sigma.sum(axis=1) + D * (sigma * sigma).sum(axis=1)
    top = energy.max()
    return energy - (top + math.log(np.exp(energy - top).sum()))


def gibbs_expectation(observable, disorder, params, replicas=1):
    """Gibbs average of `observable` over one or two independent replicas.

    `observable` is vectorised: it receives one (or two) float arrays of shape
    (n, N), row k holding a configuration (or a replica pair), and returns n values.
    """
    _check_disorder(disorder, params)
    if replicas == 1:
        def features(sigma):
            return np.asarray(observable(sigma), dtype=np.float64)[:, None]

        _, avg = exact_averages(params, *_disorder_energy(disorder, params), features)
        return float(avg[0, 0])
    if replicas != 2:
        raise ValueError("replicas must be 1 or 2")
    n = params.n_states
    if n * n > params.max_states:
        raise EnumerationError(f"{n}^2 replica pairs exceed the enumeration cap {params.max_states}")
    lw = log_weights(disorder, params)
    tau = configurations(params).astype(np.float64)
    rows = max(1, CHUNK_STATES // n)
    total = 0.0
    for start in range(0, n, rows):
        stop = min(start + rows, n)
        sigma = configurations(params, start, stop).astype(np.float64)
        s = np.repeat(sigma, n, axis=0)
        t = np.tile(tau, (stop - start, 1))
        w = np.exp(lw[start:stop, None] + lw[None, :]).ravel()
        total += float(np.dot(np.asarray(observable(s, t), dtype=np.float64), w))
    return total


def overlaps(config1, config2):
    """Overlap R = <s1, s2>/N and squared-spin overlap U = sum s1^2 s2^2 / N^2."""
    s1 = np.asarray(config1, dtype=np.float64)
    s2 = np.asarray(config2, dtype=np.float64)
    if s1.shape != s2.shape or s1.ndim != 1:
        raise ValueError(f"configurations have shapes {s1.shape} and {s2.shape}")
    N = s1.size
    R = float(np.dot(s1, s2)) / N
    U = float(np.dot(s1 * s1, s2 * s2)) / N**2
    return OverlapStats(R, U)


def coupling_covariance_check(config1, config2, params):
    """Disorder covariance of the coupling energy, directly and via overlaps.

    lhs = beta^2/N sum_{i<j} s1_i s1_j s2_i s2_j,  rhs = beta^2 N/2 (R^2 - U).
    """
    s1 = _check_config(config1, params.N).astype(np.float64)
    s2 = _check_config(config2, params.N).astype(np.float64)
    i, j = pair_indices(params.N)
    lhs = params.beta**2 / params.N * float(np.sum(s1[i] * s1[j] * s2[i] * s2[j]))
    ov = overlaps(s1, s2)
    rhs = params.beta**2 * params.N / 2 * (ov.R**2 - ov.U)
    return lhs, rhs
