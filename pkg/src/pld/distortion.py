"""Closed-form semantic distortion of the deceptive-ciphering link.

A receiver that decodes the ciphertext but loses the key falls back on one of
three strategies (Perception, Dropping, Exclusion). The expected distortion
per strategy, conditioned on message success, is the branch term ``Delta_k``;
the receiver-level distortion mixes them with weights ``beta``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass


class Strategy(enum.IntEnum):
    """Key-failure fallback. Integer order doubles as the tie-break order."""

    PERCEPTION = 0
    DROPPING = 1
    EXCLUSION = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(
                f"unknown strategy {text!r}; expected one of "
                + "|".join(s.label for s in cls)
            ) from None


@dataclass(frozen=True)
class Codebook:
    """Abstract codebook: cardinality and the two non-zero distortion levels."""

    cardinality: int
    loss_distortion: float = 1.0
    confusion_distortion: float = 10.0

    def __post_init__(self):
        if self.cardinality < 2:
            raise ValueError(f"codebook needs at least 2 codewords, got {self.cardinality}")
        if self.loss_distortion < 0 or self.confusion_distortion < 0:
            raise ValueError("distortion levels must be non-negative")

    def distortion(self, p: int, p_hat: int | None) -> float:
        """d(p, p_hat); ``None`` stands for the erasure flag s_NULL."""
        if p_hat is None:
            return self.loss_distortion
        return 0.0 if p_hat == p else self.confusion_distortion


@dataclass(frozen=True)
class StrategyProfile:
    """Probabilities (beta1, beta2, beta3) over the three fallback strategies."""

    beta: tuple[float, float, float]

    def __post_init__(self):
        if len(self.beta) != 3:
            raise ValueError("a strategy profile has exactly three weights")
        if any(b < 0 or b > 1 for b in self.beta):
            raise ValueError(f"weights must lie in [0, 1], got {self.beta}")
        if abs(sum(self.beta) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {self.beta}")

    @classmethod
    def pure(cls, strategy: Strategy) -> "StrategyProfile":
        beta = [0.0, 0.0, 0.0]
        beta[int(strategy)] = 1.0
        return cls(tuple(beta))

    @property
    def is_pure(self) -> bool:
        return max(self.beta) == 1.0

    @property
    def strategy(self) -> Strategy:
        """The selected strategy of a pure profile."""
        if not self.is_pure:
            raise ValueError(f"profile {self.beta} is mixed")
        return Strategy(self.beta.index(1.0))


PERCEPTION = StrategyProfile.pure(Strategy.PERCEPTION)
DROPPING = StrategyProfile.pure(Strategy.DROPPING)
EXCLUSION = StrategyProfile.pure(Strategy.EXCLUSION)


@dataclass(frozen=True)
class DistortionParams:
    cb: Codebook
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"ciphering probability must lie in [0, 1], got {self.alpha}")


def deterministic_distortion(eps_m, eps_k, dp: DistortionParams):
    """Distortion of a receiver that always reads an undecrypted ciphertext as plaintext."""
    cb = dp.cb
    return eps_m * cb.loss_distortion + dp.alpha * (1 - eps_m) * eps_k * cb.confusion_distortion


def strategy_deltas(eps_k, dp: DistortionParams):
    """Branch distortions (Delta1, Delta2, Delta3) given a decoded ciphertext.

    Each term covers both ways of ending up without a key: a real key that was
    erased (probability ``alpha * eps_k``) and a litter sequence sent with the
    cipher off (probability ``1 - alpha``). Works elementwise on arrays.
    """
    cb, a = dp.cb, dp.alpha
    S = cb.cardinality
    delta1 = eps_k * a * cb.confusion_distortion
    delta2 = (eps_k * a + (1 - a)) * cb.loss_distortion
    delta3 = (eps_k * a * (S - 2) / (S - 1) + (1 - a)) * cb.confusion_distortion
    return delta1, delta2, delta3


def opportunistic_distortion(eps_m, eps_k, profile: StrategyProfile, dp: DistortionParams):
    b1, b2, b3 = profile.beta
    d1, d2, d3 = strategy_deltas(eps_k, dp)
    return eps_m * dp.cb.loss_distortion + (1 - eps_m) * (b1 * d1 + b2 * d2 + b3 * d3)


def strategy_distortion(eps_m, eps_k, strategy: Strategy, dp: DistortionParams):
    """Distortion under a pure strategy; same as the profile form with one weight set."""
    delta = strategy_deltas(eps_k, dp)[int(strategy)]
    return eps_m * dp.cb.loss_distortion + (1 - eps_m) * delta


def optimal_strategy(eps_m: float, eps_k: float, dp: DistortionParams):
    """Pure profile minimising the receiver's distortion, and that minimum.

    Equal branch values resolve to the earlier strategy in
    Perception < Dropping < Exclusion.
    """
    deltas = strategy_deltas(eps_k, dp)
    best = min(range(3), key=lambda k: (deltas[k], k))
    profile = StrategyProfile.pure(Strategy(best))
    return profile, opportunistic_distortion(eps_m, eps_k, profile, dp)
