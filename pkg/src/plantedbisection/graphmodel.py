"""Core objects of the planted bi-section model.

Two classes of ``n`` vertices each; an edge appears independently with
probability ``p`` inside a class and ``q`` across classes.  Class
assignments are only identified up to swapping the labels, so every
:class:`ClassAssignment` is stored in canonical form (vertex 0 in class 0).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import xlog1py, xlogy

from .exceptions import (
    DimensionError,
    EnumerationTooLargeError,
    InvalidAssignmentError,
    ParameterError,
)

DEFAULT_ENUMERATION_CAP = 2_000_000
DEFAULT_RNG = "philox"

_RNG_FACTORIES = {
    "philox": np.random.Philox,
    "pcg64": np.random.PCG64,
    "sfc64": np.random.SFC64,
}


# Stream tags keep generators seeded with the same integer independent.
GRAPH_STREAM = None
THETA_STREAM = 1
CHAIN_STREAM = 2
RESTART_STREAM = 3


def make_rng(seed, name=DEFAULT_RNG, stream=None):
    """Seeded ``numpy`` generator backed by the named bit generator.

    Negative seeds are reduced modulo 2**64 so any signed 64-bit integer
    works.  A non-``None`` ``stream`` tag selects an independent stream for
    the same seed.
    """
    try:
        factory = _RNG_FACTORIES[name]
    except KeyError:
        raise ValueError(
            f"unknown generator {name!r}; choose from {sorted(_RNG_FACTORIES)}"
        ) from None
    seed = int(seed) % 2**64
    if stream is None:
        return np.random.Generator(factory(seed))
    return np.random.Generator(factory(np.random.SeedSequence([seed, stream])))


def num_assignments(n):
    """``|Theta_n| = C(2n, n) / 2``."""
    return math.comb(2 * n, n) // 2


def ring_size(n, k):
    """Number of assignments at pair-exchange distance exactly ``k``."""
    if not 0 <= k <= n // 2:
        raise ValueError(f"k={k} outside 0..{n // 2}")
    if 2 * k == n:
        return math.comb(n, k) ** 2 // 2
    return math.comb(n, k) ** 2


# ---------------------------------------------------------------------------
# assignments
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class ClassAssignment:
    """Canonical representative of a balanced two-colouring of ``2n`` vertices.

    ``bits[i]`` is the class of vertex ``i``.  Construct through
    :func:`canonicalize` (or :meth:`from_string`) when the input may not be
    canonical yet; the constructor only validates.
    """

    n: int
    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        object.__setattr__(self, "bits", bits)
        if self.n < 1 or len(bits) != 2 * self.n:
            raise InvalidAssignmentError(
                f"expected {2 * self.n} bits for n={self.n}, got {len(bits)}"
            )
        if any(b not in (0, 1) for b in bits):
            raise InvalidAssignmentError("bits must be 0 or 1")
        if sum(bits) != self.n:
            raise InvalidAssignmentError("assignment is not balanced")
        if bits[0] != 0:
            raise InvalidAssignmentError("not canonical: bits[0] must be 0")

    @classmethod
    def from_string(cls, text):
        return canonicalize([int(c) for c in text.strip()])

    def to_string(self):
        return "".join(map(str, self.bits))

    def __str__(self):
        return self.to_string()

    @cached_property
    def array(self):
        a = np.array(self.bits, dtype=np.uint8)
        a.flags.writeable = False
        return a

    @property
    def signs(self):
        """``(-1) ** bits`` as an int array."""
        return 1 - 2 * self.array.astype(np.int64)

    @property
    def class_zero(self):
        return tuple(i for i, b in enumerate(self.bits) if b == 0)

    @property
    def class_one(self):
        return tuple(i for i, b in enumerate(self.bits) if b == 1)


def canonicalize(raw_bits):
    """Return the representative of ``{raw, not raw}`` whose first bit is 0."""
    bits = [int(b) for b in np.asarray(raw_bits).ravel()]
    m = len(bits)
    if m == 0 or m % 2:
        raise InvalidAssignmentError(f"need an even, positive length, got {m}")
    if any(b not in (0, 1) for b in bits):
        raise InvalidAssignmentError("bits must be 0 or 1")
    if sum(bits) != m // 2:
        raise InvalidAssignmentError(
            f"unbalanced assignment: {m - sum(bits)} zeros, {sum(bits)} ones"
        )
    if bits[0] == 1:
        bits = [1 - b for b in bits]
    return ClassAssignment(m // 2, tuple(bits))


def _check_same_n(*objs):
    ns = {o.n for o in objs}
    if len(ns) != 1:
        raise DimensionError(f"mismatched n: {sorted(ns)}")


def k_distance(theta, eta):
    """Minimal number of pair exchanges between two assignment classes.

    With ``h`` the count of vertices in class 0 under ``theta`` and class 1
    under ``eta``, one representative pairing needs ``h`` exchanges and the
    flipped one ``n - h``.
    """
    _check_same_n(theta, eta)
    h = sum(1 for a, b in zip(theta.bits, eta.bits) if a == 0 and b == 1)
    return min(h, theta.n - h)


def k_distances(bits_matrix, theta):
    """Vectorised :func:`k_distance` from ``theta`` to each row of ``bits_matrix``."""
    bits_matrix = np.asarray(bits_matrix)
    if bits_matrix.shape[-1] != 2 * theta.n:
        raise DimensionError("bit matrix width does not match theta")
    zeros = np.flatnonzero(theta.array == 0)
    h = bits_matrix[..., zeros].sum(axis=-1, dtype=np.int64)
    return np.minimum(h, theta.n - h)


def pairwise_k_distances(rows_a, rows_b, n):
    """Matrix of k-distances between two stacks of canonical bit rows."""
    a = np.asarray(rows_a, dtype=np.int32)
    b = np.asarray(rows_b, dtype=np.int32)
    h = (1 - a) @ b.T
    return np.minimum(h, n - h)


def overlap(theta_hat, theta0):
    """Fraction-of-agreement statistic ``|sum_i s_i t_i| / 2n`` with +-1 signs.

    Equals ``1 - 2 k / n``; the absolute value makes it independent of the
    representatives.
    """
    _check_same_n(theta_hat, theta0)
    total = int(np.dot(theta_hat.signs, theta0.signs))
    return abs(total) / (2 * theta0.n)


@lru_cache(maxsize=16)
def _assignment_matrix_cached(n):
    width = 2 * n
    # Canonical => leading bit 0; the remaining 2n-1 bits carry all n ones.
    # Reading bits MSB-first makes numeric order equal lexicographic order.
    codes = np.arange(2 ** (width - 1), dtype=np.uint64)
    codes = codes[np.bitwise_count(codes) == n]
    shifts = np.arange(width - 1, -1, -1, dtype=np.uint64)
    bits = ((codes[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)
    bits.flags.writeable = False
    return bits


def assignment_matrix(n, cap=DEFAULT_ENUMERATION_CAP):
    """All canonical assignments as a read-only ``(|Theta_n|, 2n)`` uint8 array.

    Rows are sorted lexicographically.
    """
    if n < 1:
        raise ValueError("n must be positive")
    size = num_assignments(n)
    if size > cap:
        raise EnumerationTooLargeError(n, size, cap)
    return _assignment_matrix_cached(n)


def enumerate_assignments(n, cap=DEFAULT_ENUMERATION_CAP):
    """List every element of ``Theta_n`` in lexicographic order."""
    return [ClassAssignment(n, tuple(row)) for row in assignment_matrix(n, cap).tolist()]


def enumerate_ring(theta0, k):
    """All assignments at pair-exchange distance exactly ``k`` from ``theta0``."""
    n = theta0.n
    if not 0 <= k <= n // 2:
        raise ValueError(f"k={k} outside 0..{n // 2}")
    zeros, ones = theta0.class_zero, theta0.class_one
    base = list(theta0.bits)
    found = set()
    for out0 in itertools.combinations(zeros, k):
        for out1 in itertools.combinations(ones, k):
            bits = base.copy()
            for i in out0:
                bits[i] = 1
            for j in out1:
                bits[j] = 0
            found.add(canonicalize(bits))
    return sorted(found)


def ball_indices(bits_matrix, center, radius):
    """Row indices of ``bits_matrix`` within k-distance ``radius`` of ``center``."""
    return np.flatnonzero(k_distances(bits_matrix, center) <= radius)


# ---------------------------------------------------------------------------
# model parameters and graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    """Half vertex count ``n`` and edge probabilities ``p`` (within), ``q`` (between)."""

    n: int
    p: float
    q: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n}")
        for name in ("p", "q"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name}={v} outside [0, 1]")

    @classmethod
    def from_chernoff_hellinger(cls, n, a, b):
        """``p = a log(n) / n``, ``q = b log(n) / n``."""
        return cls(n, a * math.log(n) / n, b * math.log(n) / n)

    @classmethod
    def from_kesten_stigum(cls, n, c, d):
        """``p = c / n``, ``q = d / n``."""
        return cls(n, c / n, d / n)

    def _log_n(self):
        if self.n < 2:
            raise ParameterError("a, b need n >= 2 (log n = 0 at n = 1)")
        return math.log(self.n)

    @property
    def a(self):
        return self.n * self.p / self._log_n()

    @property
    def b(self):
        return self.n * self.q / self._log_n()

    @property
    def c(self):
        return self.n * self.p

    @property
    def d(self):
        return self.n * self.q

    @property
    def is_interior(self):
        return 0.0 < self.p < 1.0 and 0.0 < self.q < 1.0


@lru_cache(maxsize=64)
def pair_indices(n):
    """Row-major ``(i, j)`` index arrays over ``i < j`` for ``2n`` vertices."""
    iu, ju = np.triu_indices(2 * n, k=1)
    iu.flags.writeable = False
    ju.flags.writeable = False
    return iu, ju


def num_pairs(n):
    return 2 * n * n - n


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on ``2n`` labelled vertices.

    The upper triangle of the adjacency matrix (row-major over ``i < j``) is
    held as packed bits; :attr:`adjacency` unpacks a read-only symmetric copy.
    """

    n: int
    packed: bytes

    def __post_init__(self):
        expected = (num_pairs(self.n) + 7) // 8
        if len(self.packed) != expected:
            raise DimensionError(
                f"packed edge data has {len(self.packed)} bytes, expected {expected}"
            )

    @classmethod
    def from_edge_vector(cls, n, vec):
        vec = np.asarray(vec, dtype=bool).ravel()
        if vec.size != num_pairs(n):
            raise DimensionError(f"edge vector of length {vec.size} for n={n}")
        return cls(n, np.packbits(vec).tobytes())

    @classmethod
    def from_adjacency(cls, adjacency):
        adj = np.asarray(adjacency, dtype=bool)
        m = adj.shape[0]
        if adj.shape != (m, m) or m % 2 or m == 0:
            raise DimensionError(f"adjacency must be square with even size, got {adj.shape}")
        if adj.diagonal().any():
            raise ValueError("self-loops are not allowed")
        if (adj != adj.T).any():
            raise ValueError("adjacency is not symmetric")
        iu, ju = pair_indices(m // 2)
        return cls.from_edge_vector(m // 2, adj[iu, ju])

    @classmethod
    def from_edges(cls, n, edges):
        adj = np.zeros((2 * n, 2 * n), dtype=bool)
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            adj[i, j] = adj[j, i] = True
        return cls.from_adjacency(adj)

    @classmethod
    def empty(cls, n):
        return cls.from_edge_vector(n, np.zeros(num_pairs(n), dtype=bool))

    @classmethod
    def complete(cls, n):
        return cls.from_edge_vector(n, np.ones(num_pairs(n), dtype=bool))

    @classmethod
    def two_cliques(cls, theta):
        """Disjoint cliques on the two classes of ``theta``."""
        iu, ju = pair_indices(theta.n)
        a = theta.array
        return cls.from_edge_vector(theta.n, a[iu] == a[ju])

    @cached_property
    def edge_vector(self):
        vec = np.unpackbits(
            np.frombuffer(self.packed, dtype=np.uint8), count=num_pairs(self.n)
        ).astype(bool)
        vec.flags.writeable = False
        return vec

    @cached_property
    def adjacency(self):
        m = 2 * self.n
        adj = np.zeros((m, m), dtype=np.uint8)
        iu, ju = pair_indices(self.n)
        adj[iu, ju] = self.edge_vector
        adj[ju, iu] = self.edge_vector
        adj.flags.writeable = False
        return adj

    @property
    def num_vertices(self):
        return 2 * self.n

    @cached_property
    def num_edges(self):
        return int(self.edge_vector.sum())

    def edges(self):
        """Sorted list of ``(i, j)`` with ``i < j``."""
        iu, ju = pair_indices(self.n)
        sel = self.edge_vector
        return list(zip(iu[sel].tolist(), ju[sel].tolist()))


@dataclass(frozen=True)
class SuffStats:
    within: int
    between: int
    n: int

    @property
    def within_pairs(self):
        return self.n * (self.n - 1)

    @property
    def between_pairs(self):
        return self.n * self.n


def random_assignment(n, rng):
    """Uniform draw from ``Theta_n`` using an existing generator."""
    bits = np.ones(2 * n, dtype=np.uint8)
    bits[rng.permutation(2 * n)[:n]] = 0
    return canonicalize(bits)


def sample_assignment(n, seed, rng_name=DEFAULT_RNG):
    """Uniform draw from ``Theta_n``; independent of ``sample_graph`` with the same seed."""
    return random_assignment(n, make_rng(seed, rng_name, THETA_STREAM))


def sample_graph(params, theta0, rng_seed, rng_name=DEFAULT_RNG):
    """Draw ``X^n ~ P_theta0``; pairs are visited row-major over ``i < j``."""
    _check_same_n(params, theta0)
    rng = make_rng(rng_seed, rng_name)
    iu, ju = pair_indices(params.n)
    a = theta0.array
    prob = np.where(a[iu] == a[ju], params.p, params.q)
    return Graph.from_edge_vector(params.n, rng.random(iu.size) < prob)


def suff_stats(graph, theta):
    """Within- and between-class edge counts of ``graph`` under ``theta``."""
    _check_same_n(graph, theta)
    iu, ju = pair_indices(graph.n)
    a = theta.array
    same = a[iu] == a[ju]
    e = graph.edge_vector
    within = int(np.count_nonzero(e & same))
    return SuffStats(within, graph.num_edges - within, graph.n)


def within_counts(graph, bits_matrix):
    """Within-class edge count for every row of ``bits_matrix``.

    Uses ``sum_{i<j} A_ij s_i s_j = W - B`` with ``s = (-1) ** bits``.
    """
    bits_matrix = np.asarray(bits_matrix)
    if bits_matrix.shape[-1] != 2 * graph.n:
        raise DimensionError("bit matrix width does not match graph")
    adj = graph.adjacency.astype(np.int32)
    total = graph.num_edges
    out = np.empty(bits_matrix.shape[0], dtype=np.int64)
    chunk = 1 << 16
    for start in range(0, bits_matrix.shape[0], chunk):
        s = 1 - 2 * bits_matrix[start:start + chunk].astype(np.int32)
        quad = np.einsum("ai,ai->a", s @ adj, s)  # = 2 (W - B)
        out[start:start + chunk] = (total + quad // 2) // 2
    return out


def loglik_from_within(within, n, num_edges, p, q):
    """Log-likelihood as a function of the within-class edge count.

    ``0 log 0 = 0`` and ``log 0 = -inf``; works elementwise on arrays.
    """
    within = np.asarray(within, dtype=np.float64)
    between = num_edges - within
    wp = n * (n - 1)
    bp = n * n
    if p == q:
        # same value for every assignment, bit for bit
        ll = np.full(within.shape, xlogy(num_edges, p) + xlog1py(wp + bp - num_edges, -p))
        return ll if ll.ndim else float(ll)
    with np.errstate(invalid="ignore"):
        ll = (
            xlogy(within, p)
            + xlog1py(wp - within, -p)
            + xlogy(between, q)
            + xlog1py(bp - between, -q)
        )
    return ll if ll.ndim else float(ll)


def log_likelihood(graph, theta, params):
    _check_same_n(graph, theta, params)
    st = suff_stats(graph, theta)
    return loglik_from_within(st.within, graph.n, graph.num_edges, params.p, params.q)


def exchange_sets(theta, theta0):
    """Pairs whose same/different-class relation flips between ``theta0`` and ``theta``.

    Returns ``(A, B)`` as ``(m, 2)`` int arrays: ``A`` holds pairs in the same
    class under ``theta0`` but split under ``theta``, ``B`` the reverse.
    """
    _check_same_n(theta, theta0)
    iu, ju = pair_indices(theta.n)
    a0, a1 = theta0.array, theta.array
    same0 = a0[iu] == a0[ju]
    same1 = a1[iu] == a1[ju]
    sel_a = same0 & ~same1
    sel_b = ~same0 & same1
    return (
        np.column_stack([iu[sel_a], ju[sel_a]]),
        np.column_stack([iu[sel_b], ju[sel_b]]),
    )


def _log_odds_against(x):
    with np.errstate(divide="ignore"):
        return float(np.log1p(-x) - np.log(x))


def log_odds_gap(p, q):
    """``lambda = log((1-p)/p) + log(q/(1-q))``; ``+-inf`` on the boundary.

    Written as a difference of two per-probability terms so that swapping
    ``p`` and ``q`` flips the sign exactly.
    """
    if p == q:
        return 0.0
    return _log_odds_against(p) - _log_odds_against(q)


def log_likelihood_ratio(graph, theta, theta0, params):
    """``log p_theta(X) / p_theta0(X)``.

    For interior ``p, q`` this is ``(S - T) lambda`` with ``S, T`` the edge
    counts on the exchange sets.  On the boundary the difference of
    log-likelihoods is used, restricted to the part dominated by
    ``P_theta0``: if ``X`` is impossible under ``theta0`` the ratio is
    ``+inf`` when ``X`` is possible under ``theta`` and ``-inf`` otherwise.
    """
    _check_same_n(graph, theta, theta0, params)
    if theta == theta0:
        return 0.0
    if params.is_interior:
        set_a, set_b = exchange_sets(theta, theta0)
        adj = graph.adjacency
        s = int(adj[set_a[:, 0], set_a[:, 1]].sum())
        t = int(adj[set_b[:, 0], set_b[:, 1]].sum())
        if s == t:
            return 0.0
        return (s - t) * log_odds_gap(params.p, params.q)
    ll = log_likelihood(graph, theta, params)
    ll0 = log_likelihood(graph, theta0, params)
    if ll0 == -math.inf:
        return math.inf if ll > -math.inf else -math.inf
    return ll - ll0
