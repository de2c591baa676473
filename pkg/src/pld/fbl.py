"""Finite-blocklength channel arithmetic.

Normal approximation of the packet error probability over an AWGN channel,

    eps = Q( sqrt(n / V) * (C - d / n) * ln 2 ),

together with the Gaussian Q-function, its inverse, and the inverse map
from a target error probability back to a (real-valued) blocklength.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, log_ndtr

LN2 = math.log(2.0)
LOG2E = 1.0 / LN2
_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ChannelParams:
    """Per-receiver channel quantities derived from a linear SNR."""

    gamma: float
    capacity: float
    dispersion: float

    @classmethod
    def from_gamma(cls, gamma: float) -> "ChannelParams":
        if not gamma > 0:
            raise ValueError(f"SNR must be positive, got {gamma}")
        return cls(
            gamma=float(gamma),
            capacity=math.log2(1.0 + gamma),
            dispersion=1.0 - (1.0 + gamma) ** -2,
        )

    @classmethod
    def from_db(cls, snr_db: float) -> "ChannelParams":
        return cls.from_gamma(10.0 ** (snr_db / 10.0))

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.gamma)


@dataclass(frozen=True)
class PacketSpec:
    payload_bits: int
    blocklength: int

    def __post_init__(self):
        if self.payload_bits < 1 or self.blocklength < 1:
            raise ValueError(
                f"payload and blocklength must be >= 1, got "
                f"d={self.payload_bits}, n={self.blocklength}"
            )


def q_function(x):
    """Gaussian tail probability Q(x) = 0.5 * erfc(x / sqrt(2)).

    Accepts scalars or arrays; scalars come back as ``float``.
    """
    out = 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def q_inverse(p: float, tol: float = 1e-12) -> float:
    """Inverse of :func:`q_function` on (0, 1).

    Safeguarded Newton iteration on ``log Q(x) - log p`` inside a shrinking
    bisection bracket, so tail probabilities down to the float minimum stay
    well conditioned.
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"q_inverse needs 0 < p < 1, got {p}")
    if p == 0.5:
        return 0.0
    log_p = math.log(p)
    lo, hi = -40.0, 40.0
    x = 0.0
    for _ in range(200):
        log_q = float(log_ndtr(-x))
        g = log_q - log_p
        # Q is decreasing, so g > 0 means x is too small
        if g > 0:
            lo = x
        else:
            hi = x
        # d/dx log Q(x) = -pdf(x) / Q(x)
        slope = -math.exp(-0.5 * x * x - _LOG_SQRT_2PI - log_q)
        step = g / slope
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= tol * max(1.0, abs(x_new)):
            return x_new
        x = x_new
    return x


def packet_error_probability(n, payload_bits, ch: ChannelParams):
    """Normal-approximation error probability for real or array blocklengths."""
    n = np.asarray(n, dtype=float)
    w = np.sqrt(n / ch.dispersion) * (ch.capacity - payload_bits / n) * LN2
    return q_function(w)


def error_probability(spec: PacketSpec, ch: ChannelParams) -> float:
    return packet_error_probability(spec.blocklength, spec.payload_bits, ch)


def blocklength_for(epsilon: float, payload_bits: int, ch: ChannelParams) -> float:
    """Real blocklength at which the packet error probability equals ``epsilon``.

    Setting the Q-argument to Q^-1(epsilon) gives C*x**2 - a*sqrt(V)*x - d = 0
    in x = sqrt(n), with a = log2(e) * Q^-1(epsilon); the positive root is
    taken. For epsilon = 0.5 this collapses to n = d / C.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    a = LOG2E * q_inverse(epsilon)
    C, V = ch.capacity, ch.dispersion
    root_n = (a * math.sqrt(V) + math.sqrt(a * a * V + 4.0 * payload_bits * C)) / (2.0 * C)
    return root_n * root_n


def min_blocklength(epsilon_cap: float, payload_bits: int, ch: ChannelParams) -> int:
    """Smallest integer n >= 1 with error probability <= ``epsilon_cap``.

    Starts from ceil(phi(cap)) and corrects by direct evaluation, so a phi
    value sitting a rounding error above an integer does not cost a symbol.
    """
    if epsilon_cap >= 1.0:
        return 1
    n = max(1, math.ceil(blocklength_for(epsilon_cap, payload_bits, ch)))
    while n > 1 and packet_error_probability(n - 1, payload_bits, ch) <= epsilon_cap:
        n -= 1
    while packet_error_probability(n, payload_bits, ch) > epsilon_cap:
        n += 1
    return n


def max_blocklength(epsilon_floor: float, payload_bits: int, ch: ChannelParams) -> int:
    """Largest integer n with error probability >= ``epsilon_floor`` (0 if none)."""
    if epsilon_floor <= 0.0:
        raise ValueError("an error floor <= 0 does not bound the blocklength")
    if epsilon_floor >= 1.0:
        return 0
    if packet_error_probability(1, payload_bits, ch) < epsilon_floor:
        return 0
    n = max(1, math.floor(blocklength_for(epsilon_floor, payload_bits, ch)))
    while packet_error_probability(n, payload_bits, ch) < epsilon_floor:
        n -= 1
    while packet_error_probability(n + 1, payload_bits, ch) >= epsilon_floor:
        n += 1
    return n
