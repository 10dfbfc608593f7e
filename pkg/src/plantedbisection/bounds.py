"""Closed-form bounds, rates and phase conditions for the planted bi-section model.

Everything is evaluated in log space.  The basic quantity is the Bhattacharyya
coefficient of one flipped edge, ``sqrt(pq) + sqrt((1-p)(1-q))``, written as
``1 - h2`` with

    h2 = ((sqrt p - sqrt q)**2 + (sqrt(1-p) - sqrt(1-q))**2) / 2

which is free of cancellation when ``p`` and ``q`` are close.  Then
``1 - mu = (1 - h2)**2`` and every power of ``1 - mu`` is an
``exp(m * log1p(-h2))``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .exceptions import ParameterError
from .graphmodel import log_odds_gap, ring_size

DEFAULT_C = 2.0


def _check_prob(**kw):
    for name, v in kw.items():
        if not 0.0 <= v <= 1.0:
            raise ParameterError(f"{name}={v} outside [0, 1]")


def _check_kn(n, k_n, lowest=1):
    if not lowest <= k_n <= n // 2:
        raise ParameterError(f"k_n={k_n} outside {lowest}..{n // 2}")


def hellinger_half_distance(p, q):
    """``h2 = 1 - sqrt(pq) - sqrt((1-p)(1-q))`` computed without cancellation."""
    _check_prob(p=p, q=q)
    if p == q:
        return 0.0
    d1 = math.sqrt(p) - math.sqrt(q)
    d2 = math.sqrt(1.0 - p) - math.sqrt(1.0 - q)
    return 0.5 * (d1 * d1 + d2 * d2)


def log_one_minus_mu(p, q):
    """``log(1 - mu)``; ``-inf`` when ``mu = 1``."""
    h2 = hellinger_half_distance(p, q)
    if h2 >= 1.0:
        return -math.inf
    return 2.0 * math.log1p(-h2)


def _safe_exp(x):
    return math.exp(x) if x < 709.0 else math.inf


def _safe_expm1(x):
    return math.expm1(x) if x < 709.0 else math.inf


def _exp_times(m, log_base):
    """``exp(m * log_base)`` with ``0 * -inf`` read as ``0``."""
    if m == 0:
        return 1.0
    return math.exp(m * log_base)


@dataclass(frozen=True)
class HellingerQuantities:
    """``mu``, log-odds gap ``lam`` (the lambda of the model), ``rho = exp(-|lam|)``
    and ``z = (1 - mu) ** (n / 2)``."""

    mu: float
    lam: float
    rho: float
    z: float

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


def hellinger_quantities(p, q, n):
    h2 = hellinger_half_distance(p, q)
    mu = h2 * (2.0 - h2)
    lam = log_odds_gap(p, q)
    rho = math.exp(-abs(lam))
    z = _exp_times(n / 2, log_one_minus_mu(p, q))
    return HellingerQuantities(mu=mu, lam=lam, rho=rho, z=z)


def test_power(n, k, p, q):
    """Sum of both error probabilities achievable when testing two assignments
    ``k`` pair exchanges apart: ``(1 - mu) ** (2 k (n - k))``."""
    _check_kn(n, k)
    return _exp_times(2 * k * (n - k), log_one_minus_mu(p, q))


test_power.__test__ = False  # not a pytest test despite the name


def recovery_mass_bound(n, p, q):
    """Upper bound ``(1 + z) ** (2n) - 1`` on the expected posterior mass off the truth."""
    z = hellinger_quantities(p, q, n).z
    return _safe_expm1(2 * n * math.log1p(z))


def detect_mass_bound(n, k_n, p, q):
    """``x e^(1 + x)`` with ``x = n z / k_n``: expected posterior mass at distance
    ``>= k_n``.  Derived for large ``n`` only; not certified at finite ``n``."""
    _check_kn(n, k_n)
    x = n * hellinger_quantities(p, q, n).z / k_n
    if x == 0.0:
        return 0.0
    return _safe_exp(math.log(x) + 1.0 + x)


@dataclass(frozen=True)
class ContiguityQuantities:
    alpha: float
    d_rate: float
    C: float


def mean_flipped_pairs(n, k_n):
    """Average of ``2k(n - k)`` over the uniform prior restricted to a ``k_n``-ball.

    Exact integer sums over the true ring sizes, so the ring at ``k = n/2``
    for even ``n`` is counted once per assignment.
    """
    _check_kn(n, k_n, lowest=0)
    sizes = [ring_size(n, k) for k in range(k_n + 1)]
    num = sum(s * 2 * k * (n - k) for k, s in enumerate(sizes))
    return num / sum(sizes)


def contiguity_quantities(n, k_n, p, q, C=DEFAULT_C):
    """``alpha`` and the remote-contiguity rate ``d = rho ** (C alpha |p - q|)``.

    ``d`` is 0 for boundary ``p`` or ``q`` with ``p != q`` (``rho = 0``).
    """
    if not C > 1:
        raise ParameterError(f"C must exceed 1, got {C}")
    _check_prob(p=p, q=q)
    alpha = mean_flipped_pairs(n, k_n)
    expo = C * alpha * abs(p - q)
    if expo == 0.0:
        d = 1.0
    else:
        d = math.exp(-expo * abs(log_odds_gap(p, q)))
    return ContiguityQuantities(alpha=alpha, d_rate=d, C=C)


@dataclass(frozen=True)
class MinimaxBounds:
    misclass_rate_bound: float
    confidence_deficit_bound: float
    confidence_vacuous: bool
    radius_margin: float
    radius_condition_met: bool


def minimax_bounds(n, p, q, delta):
    """Leading-order (``o(1)`` exponent dropped) misclassification-rate bound and
    the resulting bound on non-coverage for credible sets of diameter ``delta``.

    ``radius_margin`` is ``(pi n delta) ** (1/n) * base``, which has to stay
    below 1/16 for the coverage bound to improve with ``n``.
    """
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    _check_prob(p=p, q=q)
    h2 = hellinger_half_distance(p, q)
    log_base = math.log1p(-h2) if h2 < 1.0 else -math.inf
    base = 1.0 - h2
    misclass = _exp_times(n, log_base)
    log_scale = math.log(math.pi * n * delta)
    if log_base == -math.inf:
        conf = 0.0
    else:
        log_conf = math.log(2.0) + n * math.log(4.0) + 0.5 * n * log_base - 0.5 * log_scale
        conf = _safe_exp(log_conf)
    margin = math.exp(log_scale / n) * base
    return MinimaxBounds(
        misclass_rate_bound=misclass,
        confidence_deficit_bound=conf,
        confidence_vacuous=conf >= 1.0,
        radius_margin=margin,
        radius_condition_met=margin < 1.0 / 16.0,
    )


def enlargement_factor(beta):
    """``f(beta) = (1-beta)^(-2(1-beta)) beta^(-2 beta)``, with values in ``(1, 4]``."""
    if not 0.0 < beta < 1.0:
        raise ParameterError(f"beta must lie in (0, 1), got {beta}")
    return math.exp(-2.0 * (1.0 - beta) * math.log1p(-beta) - 2.0 * beta * math.log(beta))


@dataclass(frozen=True)
class PhaseReport:
    """Phase-condition expressions at a single ``(n, p, q, k_n)``.

    ``None`` marks a field that is not applicable (sparse parametrisations
    need ``n >= 2``; the signal-to-noise ratio needs ``p + q > 0``).
    """

    recovery_expr: float
    ch_value: float | None
    mns_value: float | None
    ks_margin: float
    detect_snr: float | None
    detect_expr: float
    simple_sep: float | None
    fd_margin: float | None
    weak_detect_expr: float

    def to_dict(self):
        return asdict(self)


def phase_report(n, p, q, k_n, A=1.0):
    """Evaluate every phase-condition expression; ``A`` is the constant in the
    dense separation margin ``p - q - A log(n) / n``."""
    _check_prob(p=p, q=q)
    _check_kn(n, k_n)
    hq = hellinger_quantities(p, q, n)
    recovery_expr = _safe_exp(2 * n * math.log1p(hq.z))
    c, d = n * p, n * q
    if n >= 2:
        logn = math.log(n)
        a, b = c / logn, d / logn
        gap = a + b - 2.0 * math.sqrt(a * b)
        ch = (gap - 2.0) * logn
        mns = (gap - 1.0) * logn + 0.5 * math.log(logn)
        sep = (math.sqrt(a) - math.sqrt(b)) ** 2
        fd = p - q - A * logn / n
    else:
        ch = mns = sep = fd = None
    snr = n * (p - q) ** 2 / (p + q) if p + q > 0 else None
    return PhaseReport(
        recovery_expr=recovery_expr,
        ch_value=ch,
        mns_value=mns,
        ks_margin=(c - d) ** 2 - 2.0 * (c + d),
        detect_snr=snr,
        detect_expr=n * hq.z / k_n,
        simple_sep=sep,
        fd_margin=fd,
        weak_detect_expr=n * hq.mu,
    )


def regime_indicators(n, p, q):
    """``n |p - q|`` and ``n |sqrt p - sqrt q|``, used to locate the near-Erdos-Renyi regime."""
    return {
        "n_abs_diff": n * abs(p - q),
        "n_abs_sqrt_diff": n * abs(math.sqrt(p) - math.sqrt(q)),
    }


def bound_report(n, p, q, k_n=1, C=DEFAULT_C, delta=0.1, A=1.0):
    """Every evaluator at one parameter point, with vacuity flags, as a JSON-ready dict."""
    hq = hellinger_quantities(p, q, n)
    rec = recovery_mass_bound(n, p, q)
    det = detect_mass_bound(n, k_n, p, q)
    cq = contiguity_quantities(n, k_n, p, q, C)
    mm = minimax_bounds(n, p, q, delta)
    return {
        "n": n,
        "p": p,
        "q": q,
        "k_n": k_n,
        "C": C,
        "delta": delta,
        "A": A,
        "hellinger": hq.to_dict(),
        "test_power_k1": test_power(n, 1, p, q) if n >= 2 else None,
        "phase": phase_report(n, p, q, k_n, A).to_dict(),
        "recovery_mass_bound": rec,
        "recovery_vacuous": rec >= 1.0,
        "detect_mass_bound": det,
        "detect_vacuous": det >= 1.0,
        "detect_asymptotic_only": True,
        "contiguity": asdict(cq),
        "minimax": asdict(mm),
        "regime": regime_indicators(n, p, q),
    }
