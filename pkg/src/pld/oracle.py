"""Independent reference computations used by the test-suite and ``pld verify``.

Nothing here is used by the library itself. The Q-function is integrated
numerically, and alpha and the blocklength bounds are found by dense search.
None of these routes goes through the closed forms they check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from .distortion import Strategy, strategy_distortion
from .fbl import packet_error_probability

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GridSpec:
    n_lo: int = 1
    n_hi: int = 128
    alpha_points: int = 10_000

    def __post_init__(self):
        if self.n_lo < 1 or self.n_hi < self.n_lo:
            raise ValueError(f"need 1 <= n_lo <= n_hi, got {self.n_lo}, {self.n_hi}")
        if self.alpha_points < 2:
            raise ValueError("alpha_points must be >= 2")


def _pdf(t):
    return _INV_SQRT_2PI * math.exp(-0.5 * t * t)


def q_function_reference(x: float) -> float:
    """Q(x) by adaptive quadrature of the standard normal density."""
    x = float(x)
    if abs(x) > 10:
        raise ValueError("reference Q is only set up for |x| <= 10")
    opts = dict(epsabs=1e-15, epsrel=1e-13, limit=200)
    if x >= 0:
        val, _ = integrate.quad(_pdf, x, math.inf, **opts)
        return val
    # integrate the bounded piece for negative x, the tail half is exactly 0.5
    val, _ = integrate.quad(_pdf, x, 0.0, **opts)
    return 0.5 + val


def alpha_line_search(objective, points: int = 10_000, constraint=None):
    """Grid argmax of ``objective`` over ``linspace(0, 1, points)``.

    ``constraint`` (optional) is a predicate on alpha. Ties go to the smallest
    alpha. Returns ``(None, -inf)`` when no grid point satisfies the constraint.
    """
    if points < 2:
        raise ValueError("points must be >= 2")
    best_a, best_v = None, -math.inf
    for a in np.linspace(0.0, 1.0, points):
        a = float(a)
        if constraint is not None and not constraint(a):
            continue
        v = float(objective(a))
        if v > best_v:
            best_a, best_v = a, v
    return best_a, best_v


def alpha_oracle(eve_strategy, bob_strategy, eps_bob, eps_eve, s, points: int = 10_000,
                 slack: float = 0.0):
    """Line-search maximiser of Eve's distortion subject to Bob's bound.

    ``eps_bob`` and ``eps_eve`` are (message, key) error pairs held fixed while
    alpha varies. Returns ``(alpha, eve_value)``.
    """
    eve, bob = Strategy(eve_strategy), Strategy(bob_strategy)
    th = s.cons.d_bob_tilde_th + slack
    dp = s.dp

    def eve_value(a):
        return strategy_distortion(eps_eve[0], eps_eve[1], eve, replace(dp, alpha=a))

    def bob_ok(a):
        return strategy_distortion(eps_bob[0], eps_bob[1], bob, replace(dp, alpha=a)) <= th

    return alpha_line_search(eve_value, points, bob_ok)


def bob_min_blocklengths_scan(bob_strategy, alpha: float, s, n_hi: int = 512):
    """Smallest n_M and n_K admitting Bob's distortion bound, by enumeration.

    A message length counts as admissible if some key length in ``1..n_hi``
    completes it, and the other way round. Eve's message threshold is
    included, as in the closed-form n_M^min. Returns ``None`` if nothing in
    the range works.
    """
    c = s.cons
    n = np.arange(1, n_hi + 1)
    bm = packet_error_probability(n, s.d_m, s.bob)
    bk = packet_error_probability(n, s.d_k, s.bob)
    em = packet_error_probability(n, s.d_m, s.eve)
    d = strategy_distortion(bm[:, None], bk[None, :], Strategy(bob_strategy),
                            replace(s.dp, alpha=alpha))
    ok = (
        (d <= c.d_bob_tilde_th)
        & (bm[:, None] <= c.eps_bob_m_th)
        & (em[:, None] <= c.eps_eve_m_th)
        & (bk[None, :] <= c.eps_bob_k_th)
    )
    rows = np.nonzero(ok.any(axis=1))[0]
    cols = np.nonzero(ok.any(axis=0))[0]
    if rows.size == 0:
        return None
    return int(n[rows[0]]), int(n[cols[0]])


def within_sigma(analytic: float, mean: float, stderr: float, k: float = 4.0) -> bool:
    """``True`` if the simulated mean lies within k standard errors of the analytic value.

    A zero standard error (deterministic outcome) demands exact agreement up
    to rounding.
    """
    if stderr == 0.0:
        return math.isclose(analytic, mean, rel_tol=1e-12, abs_tol=1e-12)
    return abs(analytic - mean) <= k * stderr
