"""Posterior inference over balanced partitions under the uniform prior.

Exact enumeration for small ``n``; a Metropolis-Hastings chain with a
pair-swap proposal otherwise.  Ties are broken lexicographically on the
canonical bit vectors everywhere.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numba
import numpy as np
from scipy.special import logsumexp

from .exceptions import ConfigError, DimensionError, UndefinedPosteriorError
from .graphmodel import (
    DEFAULT_ENUMERATION_CAP,
    CHAIN_STREAM,
    DEFAULT_RNG,
    RESTART_STREAM,
    ClassAssignment,
    assignment_matrix,
    canonicalize,
    loglik_from_within,
    make_rng,
    num_assignments,
    random_assignment,
    within_counts,
)


def _bits_key(row):
    return ClassAssignment(len(row) // 2, tuple(int(b) for b in row))


@dataclass(frozen=True, eq=False)
class PosteriorTable:
    """Posterior masses over a set of assignments, stored as log-weights.

    ``bits`` rows are sorted lexicographically.  For an exact table they are
    the whole of ``Theta_n``; tables built from MCMC draws only contain the
    visited assignments, carry ``approximate=True`` and have no evidence.
    """

    n: int
    bits: np.ndarray
    log_weights: np.ndarray
    log_evidence: float = math.nan
    approximate: bool = False

    @cached_property
    def assignments(self):
        return [_bits_key(row) for row in self.bits.tolist()]

    @cached_property
    def _index(self):
        return {a: i for i, a in enumerate(self.assignments)}

    @property
    def weights(self):
        return np.exp(self.log_weights)

    def __len__(self):
        return self.bits.shape[0]

    def index_of(self, theta):
        if theta.n != self.n:
            raise DimensionError(f"assignment has n={theta.n}, table has n={self.n}")
        return self._index.get(theta)

    def log_weight(self, theta):
        i = self.index_of(theta)
        return -math.inf if i is None else float(self.log_weights[i])

    def mask(self, subset):
        """Boolean row mask for a predicate, a boolean/index array or a collection."""
        if callable(subset):
            return np.array([bool(subset(a)) for a in self.assignments], dtype=bool)
        if isinstance(subset, np.ndarray):
            if subset.dtype == bool:
                return subset
            m = np.zeros(len(self), dtype=bool)
            m[subset] = True
            return m
        m = np.zeros(len(self), dtype=bool)
        for theta in subset:
            i = self.index_of(theta)
            if i is not None:
                m[i] = True
        return m


def exact_posterior(graph, params, cap=DEFAULT_ENUMERATION_CAP):
    """Posterior over all of ``Theta_n`` as a ratio of likelihood sums."""
    if graph.n != params.n:
        raise DimensionError("graph and params disagree on n")
    n = graph.n
    bits = assignment_matrix(n, cap)
    ll = loglik_from_within(within_counts(graph, bits), n, graph.num_edges, params.p, params.q)
    ll = np.asarray(ll, dtype=np.float64)
    if not np.isfinite(ll).any():
        raise UndefinedPosteriorError(
            "the observed graph has probability zero under every assignment"
        )
    log_total = float(logsumexp(ll))
    log_weights = ll - log_total
    log_weights.flags.writeable = False
    return PosteriorTable(
        n=n,
        bits=bits,
        log_weights=log_weights,
        log_evidence=log_total - math.log(num_assignments(n)),
    )


def posterior_mass(table, subset):
    """``Pi(subset | X)`` via log-sum-exp over the member log-weights."""
    m = table.mask(subset)
    if not m.any():
        return 0.0
    return float(min(1.0, math.exp(logsumexp(table.log_weights[m]))))


# ---------------------------------------------------------------------------
# Metropolis-Hastings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainConfig:
    """Per-chain length ``steps`` includes the ``burn_in`` prefix.

    Every ``thin``-th state after burn-in is retained; chain ``c`` is seeded
    with ``seed + c``.
    """

    steps: int = 1_000_000
    burn_in: int = 100_000
    thin: int = 10
    seed: int = 0
    chains: int = 4
    rng: str = DEFAULT_RNG

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigError("steps must be positive")
        if self.burn_in < 0 or self.burn_in >= self.steps:
            raise ConfigError("need 0 <= burn_in < steps")
        if self.thin < 1 or self.thin > self.steps - self.burn_in:
            raise ConfigError("need 1 <= thin <= steps - burn_in")
        if self.chains < 1:
            raise ConfigError("chains must be positive")

    @property
    def retained_per_chain(self):
        return (self.steps - self.burn_in) // self.thin

    @property
    def total_retained(self):
        return self.retained_per_chain * self.chains


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Distinct visited assignments (lexicographic rows) with visit counts."""

    n: int
    bits: np.ndarray
    counts: np.ndarray
    acceptance_rate: float = math.nan
    per_chain: tuple = field(default=(), repr=False)

    @property
    def total(self):
        return int(self.counts.sum())

    @cached_property
    def assignments(self):
        return [_bits_key(row) for row in self.bits.tolist()]

    @property
    def frequencies(self):
        return self.counts / self.total

    def as_dict(self):
        return dict(zip(self.assignments, self.counts.tolist()))

    def to_table(self):
        """Empirical posterior over the visited assignments, flagged approximate."""
        with np.errstate(divide="ignore"):
            lw = np.log(self.counts) - math.log(self.total)
        return PosteriorTable(self.n, self.bits, lw, approximate=True)


@numba.njit(cache=True, nogil=True)
def _swap_delta_within(adj, bits, u, v):
    """Change in within-class edge count when vertices ``u``, ``v`` trade classes."""
    bu = bits[u]
    delta = 0
    for w in range(bits.shape[0]):
        if w == u or w == v:
            continue
        if bits[w] == bu:
            delta += adj[v, w] - adj[u, w]
        else:
            delta += adj[u, w] - adj[v, w]
    return delta


@numba.njit(cache=True, nogil=True)
def _mh_block(adj, bits, zeros, ones, state, llw, r0, r1, logu,
              t0, burn_in, thin, out, out_pos):
    # state = [within_count, accepted]
    for s in range(r0.shape[0]):
        i = r0[s]
        j = r1[s]
        u = zeros[i]
        v = ones[j]
        dw = _swap_delta_within(adj, bits, u, v)
        cur = llw[state[0]]
        new = llw[state[0] + dw]
        if cur == -np.inf:
            accept = True
        else:
            accept = logu[s] < new - cur
        if accept:
            bits[u] = 1
            bits[v] = 0
            zeros[i] = v
            ones[j] = u
            state[0] += dw
            state[1] += 1
        t = t0 + s
        if t >= burn_in and (t - burn_in + 1) % thin == 0:
            flip = bits[0]
            for k in range(bits.shape[0]):
                out[out_pos, k] = bits[k] ^ flip
            out_pos += 1
    return out_pos


_BLOCK = 1 << 17


def within_loglik_table(graph, params):
    """Log-likelihood indexed by the within-class edge count ``0..n(n-1)``."""
    n = graph.n
    w = np.arange(n * (n - 1) + 1)
    with np.errstate(invalid="ignore"):
        return np.asarray(
            loglik_from_within(w, n, graph.num_edges, params.p, params.q), dtype=np.float64
        )


def _run_chain(graph, params, cfg, chain, init, llw):
    n = graph.n
    rng = make_rng(cfg.seed + chain, cfg.rng, CHAIN_STREAM)
    if init is None:
        init = random_assignment(n, rng)
    bits = np.array(init.bits, dtype=np.uint8)
    zeros = np.flatnonzero(bits == 0).astype(np.int64)
    ones = np.flatnonzero(bits == 1).astype(np.int64)
    adj = graph.adjacency.astype(np.int64)
    w0 = int(within_counts(graph, bits[None, :])[0])
    state = np.array([w0, 0], dtype=np.int64)
    out = np.empty((cfg.retained_per_chain, 2 * n), dtype=np.uint8)
    pos = 0
    for t0 in range(0, cfg.steps, _BLOCK):
        m = min(_BLOCK, cfg.steps - t0)
        r0 = rng.integers(0, n, size=m)
        r1 = rng.integers(0, n, size=m)
        logu = np.log1p(-rng.random(m))
        pos = _mh_block(adj, bits, zeros, ones, state, llw, r0, r1, logu,
                        t0, cfg.burn_in, cfg.thin, out, pos)
    return out[:pos], int(state[1])


def mh_sampler(graph, params, cfg=None, init=None):
    """Sample the posterior with a pair-swap Metropolis-Hastings chain.

    A proposal moves one class-0 vertex to class 1 and one class-1 vertex to
    class 0, both chosen uniformly; the proposal is symmetric, so the
    acceptance probability is the likelihood ratio capped at one.  Moves into
    zero-likelihood states are always rejected.  ``init`` fixes the starting
    assignment of every chain (default: a uniform draw per chain).
    """
    cfg = cfg or ChainConfig()
    if graph.n != params.n:
        raise DimensionError("graph and params disagree on n")
    if graph.n < 2:
        raise ConfigError("the swap chain needs n >= 2")
    if init is not None and init.n != graph.n:
        raise DimensionError("init has the wrong n")
    llw = within_loglik_table(graph, params)
    workers = max(1, min(cfg.chains, os.cpu_count() or 1))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(
            lambda c: _run_chain(graph, params, cfg, c, init, llw), range(cfg.chains)
        ))
    draws = np.concatenate([r[0] for r in results])
    accepted = sum(r[1] for r in results)
    uniq, counts = np.unique(draws, axis=0, return_counts=True)
    return SampleSet(
        n=graph.n,
        bits=uniq,
        counts=counts,
        acceptance_rate=accepted / (cfg.steps * cfg.chains),
        per_chain=tuple(len(r[0]) for r in results),
    )


# ---------------------------------------------------------------------------
# point estimators
# ---------------------------------------------------------------------------


def map_estimate(graph, params, mode="exact", cfg=None, cap=DEFAULT_ENUMERATION_CAP):
    """Posterior mode; with the uniform prior this is the maximum-likelihood assignment."""
    if mode == "exact":
        table = exact_posterior(graph, params, cap)
        return _bits_key(table.bits[int(np.argmax(table.log_weights))])
    if mode == "mcmc":
        samples = mh_sampler(graph, params, cfg)
        return _bits_key(samples.bits[int(np.argmax(samples.counts))])
    raise ValueError(f"unknown mode {mode!r}")


def cut_size(graph, theta):
    """Number of edges joining the two classes."""
    a = theta.array
    adj = graph.adjacency
    return int(adj[np.ix_(a == 0, a == 1)].sum())


def _kernighan_lin(adj, side):
    """Refine a bisection in place with Kernighan-Lin passes until no pass gains."""
    n = side.size // 2
    adj = adj.astype(np.int64)
    while True:
        same = side[:, None] == side[None, :]
        d = (adj * ~same).sum(axis=1) - (adj * same).sum(axis=1)
        locked = np.zeros(side.size, dtype=bool)
        gains, swaps = [], []
        for _ in range(n):
            a_idx = np.flatnonzero(~locked & (side == 0))
            b_idx = np.flatnonzero(~locked & (side == 1))
            g = d[a_idx][:, None] + d[b_idx][None, :] - 2 * adj[np.ix_(a_idx, b_idx)]
            flat = int(np.argmax(g))
            a = a_idx[flat // b_idx.size]
            b = b_idx[flat % b_idx.size]
            gains.append(int(g.flat[flat]))
            swaps.append((a, b))
            locked[a] = locked[b] = True
            free0 = ~locked & (side == 0)
            free1 = ~locked & (side == 1)
            d[free0] += 2 * adj[free0, a] - 2 * adj[free0, b]
            d[free1] += 2 * adj[free1, b] - 2 * adj[free1, a]
        cum = np.cumsum(gains)
        best = int(np.argmax(cum))
        if cum[best] <= 0:
            return side
        for a, b in swaps[: best + 1]:
            side[a], side[b] = 1, 0


def min_bisection_estimate(graph, mode="exact", restarts=20, seed=0,
                           cap=DEFAULT_ENUMERATION_CAP, rng_name=DEFAULT_RNG):
    """Balanced partition with the fewest between-class edges.

    ``exact`` scans all of ``Theta_n``.  ``greedy`` runs Kernighan-Lin from
    ``restarts`` seeded random starts and keeps the best local optimum.
    """
    n = graph.n
    if mode == "exact":
        bits = assignment_matrix(n, cap)
        between = graph.num_edges - within_counts(graph, bits)
        return _bits_key(bits[int(np.argmin(between))])
    if mode != "greedy":
        raise ValueError(f"unknown mode {mode!r}")
    if restarts < 1:
        raise ConfigError("restarts must be positive")
    rng = make_rng(seed, rng_name, RESTART_STREAM)
    adj = graph.adjacency
    best = None
    for _ in range(restarts):
        side = np.array(random_assignment(n, rng).bits, dtype=np.uint8)
        theta = canonicalize(_kernighan_lin(adj, side))
        key = (cut_size(graph, theta), theta.bits)
        if best is None or key < best[0]:
            best = (key, theta)
    return best[1]
