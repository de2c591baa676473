"""Codeword-level model of the deceptive link and a Monte-Carlo simulator.

Codewords are indices ``0..S-1``; keys are additive shifts ``1..S-1`` and key
index 0 is the litter sequence k_NULL. An erased message is represented by
``S_NULL = -1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distortion import Codebook, StrategyProfile

S_NULL = -1
K_NULL = 0

_CHUNK = 1 << 18


def encrypt(plaintext: int, key: int, cb: Codebook) -> int:
    S = cb.cardinality
    if not 0 <= plaintext < S:
        raise ValueError(f"plaintext {plaintext} outside codebook of size {S}")
    if not 1 <= key < S:
        raise ValueError(f"key {key} is not a valid cipher key (k_NULL=0 is reserved)")
    return (plaintext + key) % S


def decrypt(ciphertext: int, key: int, cb: Codebook) -> int:
    S = cb.cardinality
    if not 1 <= key < S:
        raise ValueError(f"key {key} is not a valid cipher key (k_NULL=0 is reserved)")
    return (ciphertext - key) % S


@dataclass(frozen=True)
class TransportChannel:
    """Erasure channel. Used for the ciphertext, and Z-shaped for the key."""

    erasure_prob: float

    def __post_init__(self):
        if not 0.0 <= self.erasure_prob <= 1.0:
            raise ValueError(f"erasure probability must lie in [0, 1], got {self.erasure_prob}")

    def message_pdf(self, m_hat: int, m: int) -> float:
        if m_hat == m:
            return 1.0 - self.erasure_prob
        if m_hat == S_NULL:
            return self.erasure_prob
        return 0.0

    def key_pdf(self, k_hat: int, k: int) -> float:
        if k == K_NULL:
            # litter sequence is never corrupted
            return 1.0 if k_hat == K_NULL else 0.0
        if k_hat == k:
            return 1.0 - self.erasure_prob
        if k_hat == K_NULL:
            return self.erasure_prob
        return 0.0


@dataclass(frozen=True)
class SimConfig:
    codebook: Codebook
    alpha: float
    eps_m: float
    eps_k: float
    strategy: StrategyProfile
    num_samples: int = 1_000_000
    rng_seed: int = 0
    chunk_size: int = field(default=_CHUNK, repr=False)

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        for name in ("alpha", "eps_m", "eps_k"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def _simulate_chunk(rng: np.random.Generator, n: int, cfg: SimConfig):
    cb = cfg.codebook
    S = cb.cardinality

    p = rng.integers(0, S, size=n)
    ciphered = rng.random(n) < cfg.alpha
    key = np.where(ciphered, rng.integers(1, S, size=n), K_NULL)
    m = np.where(ciphered, (p + key) % S, p)

    msg_erased = rng.random(n) < cfg.eps_m
    # Z-channel: only a real key can be erased into k_NULL
    key_erased = ciphered & (rng.random(n) < cfg.eps_k)
    k_hat = np.where(key_erased, K_NULL, key)

    choice = rng.choice(3, size=n, p=np.asarray(cfg.strategy.beta, dtype=float))
    shift = rng.integers(1, S, size=n)

    have_key = k_hat != K_NULL
    p_hat = np.where(have_key, (m - k_hat) % S, m)
    fallback = ~have_key
    p_hat = np.where(fallback & (choice == 1), S_NULL, p_hat)
    # uniform over the S-1 codewords other than the received one
    p_hat = np.where(fallback & (choice == 2), (m + shift) % S, p_hat)
    p_hat = np.where(msg_erased, S_NULL, p_hat)

    d = np.where(
        p_hat == S_NULL,
        cb.loss_distortion,
        np.where(p_hat == p, 0.0, cb.confusion_distortion),
    )
    return float(d.sum()), float(np.square(d).sum())


def simulate_distortion(cfg: SimConfig) -> tuple[float, float]:
    """Sample mean of d(p, p_hat) over i.i.d. episodes and its standard error.

    Work is split into chunks, each driven by its own child stream spawned
    from ``rng_seed``; the result depends only on the config.
    """
    n_total = cfg.num_samples
    n_chunks = math.ceil(n_total / cfg.chunk_size)
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(n_chunks)
    s1 = s2 = 0.0
    remaining = n_total
    for seq in seeds:
        n = min(cfg.chunk_size, remaining)
        a, b = _simulate_chunk(np.random.Generator(np.random.PCG64(seq)), n, cfg)
        s1 += a
        s2 += b
        remaining -= n
    mean = s1 / n_total
    if n_total < 2:
        return mean, 0.0
    var = max(s2 / n_total - mean * mean, 0.0) * n_total / (n_total - 1)
    return mean, math.sqrt(var / n_total)
