"""Blocklength and ciphering-probability optimisation for the deceptive link.

Alice picks the message and key blocklengths (n_M, n_K) and the ciphering
probability alpha to maximise Eve's semantic distortion while keeping Bob's
below a threshold. Every stage has a closed form:

* Bob's distortion bound turns into upper caps on his two error probabilities,
  i.e. lower bounds n_M^min, n_K^min on the blocklengths;
* Eve's objective is monotone in each blocklength, so the optimum sits on a
  corner of the feasible rectangle ({n_M^min, n_M^max} x {n_K^min});
* for fixed strategies the objective is linear in alpha, so the optimal alpha
  is the largest or smallest value Bob's bound admits.

``run_algorithm1`` alternates strategy prediction, alpha update and
reallocation. ``brute_force_optimum`` is the exhaustive grid reference used to
check the corners.
"""
from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from .distortion import (
    Codebook,
    DistortionParams,
    Strategy,
    StrategyProfile,
    optimal_strategy,
    strategy_distortion,
)
from .fbl import ChannelParams, max_blocklength, min_blocklength, packet_error_probability

# constraint names used in InfeasibleError and violation lists
BOB_MESSAGE_ERROR = "bob_message_error"
EVE_MESSAGE_ERROR = "eve_message_error"
BOB_KEY_ERROR = "bob_key_error"
EVE_KEY_ERROR = "eve_key_error"
BOB_DISTORTION = "bob_distortion"
MESSAGE_BLOCKLENGTH_MAX = "message_blocklength_max"


class InfeasibleError(ValueError):
    """No allocation satisfies the constraints; ``constraint`` names the culprit."""

    def __init__(self, constraint: str, detail: str = ""):
        self.constraint = constraint
        super().__init__(f"infeasible: {constraint}" + (f" ({detail})" if detail else ""))


@dataclass(frozen=True)
class Constraints:
    eps_bob_m_th: float = 0.5
    eps_bob_k_th: float = 0.5
    eps_eve_m_th: float = 0.5
    eps_eve_k_th: float = 0.5
    d_bob_th: float = 0.01
    d_bob_tilde_th: float = 0.01
    n_m_max: int = 128

    def __post_init__(self):
        for name in ("eps_bob_m_th", "eps_bob_k_th", "eps_eve_m_th", "eps_eve_k_th"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.n_m_max < 1:
            raise ValueError("n_m_max must be >= 1")


@dataclass(frozen=True)
class Allocation:
    n_m: int
    n_k: int

    def __post_init__(self):
        if self.n_m < 1 or self.n_k < 1:
            raise ValueError(f"blocklengths must be >= 1, got {self}")


@dataclass(frozen=True)
class Scenario:
    bob: ChannelParams
    eve: ChannelParams
    d_m: int
    d_k: int
    dp: DistortionParams
    cons: Constraints

    @classmethod
    def reference(
        cls,
        snr_bob_db: float = 0.0,
        snr_eve_db: float = -10.0,
        alpha: float = 0.9,
        cardinality: int = 16,
        **constraint_overrides,
    ) -> "Scenario":
        """Simulation defaults: 16-bit payloads, D_loss=1, D_conf=10, thresholds 0.5 / 0.01."""
        return cls(
            bob=ChannelParams.from_db(snr_bob_db),
            eve=ChannelParams.from_db(snr_eve_db),
            d_m=16,
            d_k=16,
            dp=DistortionParams(Codebook(cardinality, 1.0, 10.0), alpha),
            cons=Constraints(**constraint_overrides),
        )

    def with_alpha(self, alpha: float) -> "Scenario":
        return replace(self, dp=replace(self.dp, alpha=alpha))

    def bob_errors(self, n_m, n_k):
        return (
            packet_error_probability(n_m, self.d_m, self.bob),
            packet_error_probability(n_k, self.d_k, self.bob),
        )

    def eve_errors(self, n_m, n_k):
        return (
            packet_error_probability(n_m, self.d_m, self.eve),
            packet_error_probability(n_k, self.d_k, self.eve),
        )


def _as_strategy(s) -> Strategy:
    if isinstance(s, StrategyProfile):
        return s.strategy
    return Strategy(s)


# ---------------------------------------------------------------------------
# constraint evaluation

def feasible_mask(s: Scenario, n_m, n_k, alpha: float, bob_strategy=Strategy.PERCEPTION,
                  bob_threshold: float | None = None):
    """Elementwise check of every constraint; returns a dict name -> bool array."""
    c = s.cons
    th = c.d_bob_tilde_th if bob_threshold is None else bob_threshold
    n_m = np.asarray(n_m)
    n_k = np.asarray(n_k)
    bm, bk = s.bob_errors(n_m, n_k)
    em, ek = s.eve_errors(n_m, n_k)
    d_bob = strategy_distortion(bm, bk, _as_strategy(bob_strategy), replace(s.dp, alpha=alpha))
    return {
        BOB_MESSAGE_ERROR: bm <= c.eps_bob_m_th,
        EVE_MESSAGE_ERROR: em <= c.eps_eve_m_th,
        BOB_KEY_ERROR: bk <= c.eps_bob_k_th,
        EVE_KEY_ERROR: ek >= c.eps_eve_k_th,
        BOB_DISTORTION: d_bob <= th,
        MESSAGE_BLOCKLENGTH_MAX: n_m <= c.n_m_max,
    }


def constraint_violations(s: Scenario, alloc: Allocation, alpha: float,
                          bob_strategy=Strategy.PERCEPTION,
                          bob_threshold: float | None = None) -> list[str]:
    checks = feasible_mask(s, alloc.n_m, alloc.n_k, alpha, bob_strategy, bob_threshold)
    return [name for name, ok in checks.items() if not bool(ok)]


def _key_upper_bound(s: Scenario) -> int:
    # Eve must keep failing on the key: eps_Eve,K >= threshold caps n_K from above
    return max_blocklength(s.cons.eps_eve_k_th, s.d_k, s.eve)


def _message_lower_bound(bob_cap: float, s: Scenario) -> int:
    # Bob's cap and Eve's decodability threshold must both hold, hence max()
    bob_cap = min(bob_cap, s.cons.eps_bob_m_th)
    return max(
        min_blocklength(bob_cap, s.d_m, s.bob),
        min_blocklength(s.cons.eps_eve_m_th, s.d_m, s.eve),
    )


# ---------------------------------------------------------------------------
# initial allocation with a deterministic decryptor

def feasibility_bounds_initial(s: Scenario) -> tuple[int, int]:
    """(n_M^min, n_K^min) for the deterministic-decryptor problem at ``s.dp.alpha``."""
    c, cb, a = s.cons, s.dp.cb, s.dp.alpha
    key_cap = c.eps_bob_k_th
    if a > 0:
        key_cap = min(key_cap, c.d_bob_th / (a * cb.confusion_distortion))
    msg_cap = c.d_bob_th / cb.loss_distortion
    n_k_min = min_blocklength(key_cap, s.d_k, s.bob)
    return _message_lower_bound(msg_cap, s), n_k_min


def perception_alpha_threshold(eps_eve_k_max: float, dp: DistortionParams) -> float:
    """alpha at which Eve's Perception distortion stops decreasing in n_M."""
    denom = eps_eve_k_max * dp.cb.confusion_distortion
    return math.inf if denom == 0 else dp.cb.loss_distortion / denom


def exclusion_alpha_threshold(eps_eve_k_max: float, dp: DistortionParams) -> float:
    """alpha at which Eve's Exclusion distortion starts decreasing in n_M."""
    cb = dp.cb
    S = cb.cardinality
    r = (S - 2) / (S - 1)
    return (cb.confusion_distortion - cb.loss_distortion) / (
        cb.confusion_distortion * (1.0 - eps_eve_k_max * r)
    )


def theorem1_allocate(s: Scenario) -> tuple[Allocation, float]:
    """Corner maximising Eve's deterministic-decryptor distortion.

    The key blocklength always sits at n_K^min. The message blocklength goes
    to n_M^max when alpha >= D_loss / (eps_Eve,K^max * D_conf), else n_M^min.
    """
    c, dp = s.cons, s.dp
    n_m_min, n_k_min = feasibility_bounds_initial(s)
    if n_m_min > c.n_m_max:
        raise InfeasibleError(MESSAGE_BLOCKLENGTH_MAX, f"n_M^min={n_m_min} > {c.n_m_max}")
    if n_k_min > _key_upper_bound(s):
        raise InfeasibleError(EVE_KEY_ERROR, f"n_K^min={n_k_min} lets Eve decode the key")

    _, eps_k_max = s.eve_errors(n_k_min, n_k_min)
    n_m = c.n_m_max if dp.alpha >= perception_alpha_threshold(eps_k_max, dp) else n_m_min
    alloc = Allocation(n_m, n_k_min)

    bad = constraint_violations(s, alloc, dp.alpha, Strategy.PERCEPTION, c.d_bob_th)
    if bad:
        raise InfeasibleError(bad[0], f"corner {alloc}")
    eps_m, _ = s.eve_errors(n_m, n_m)
    cb = dp.cb
    d_eve = eps_m * cb.loss_distortion + dp.alpha * (1 - eps_m) * eps_k_max * cb.confusion_distortion
    return alloc, float(d_eve)


# ---------------------------------------------------------------------------
# ciphering probability

def optimal_alpha(eve_strategy, bob_strategy, eps_bob_m: float, eps_bob_k: float,
                  s: Scenario) -> float:
    """Best ciphering probability for fixed (pure) strategies, clamped to [0, 1].

    Eve's Perception distortion grows with alpha, so alpha goes as high as
    Bob's bound allows; her Dropping and Exclusion distortions shrink with
    alpha, so it goes as low as allowed.
    """
    eve, bob = _as_strategy(eve_strategy), _as_strategy(bob_strategy)
    cb = s.dp.cb
    th = s.cons.d_bob_tilde_th
    D_l, D_c, S = cb.loss_distortion, cb.confusion_distortion, cb.cardinality

    if eve is Strategy.PERCEPTION:
        if bob is not Strategy.PERCEPTION:
            return 1.0
        denom = (1 - eps_bob_m) * eps_bob_k * D_c
        if denom <= 0:
            return 1.0
        a = min((th - eps_bob_m * D_l) / denom, 1.0)
    else:
        if bob is Strategy.PERCEPTION:
            return 0.0
        if bob is Strategy.DROPPING:
            denom = (1 - eps_bob_k) * (1 - eps_bob_m) * D_l
            if denom <= 0:
                return 1.0
            a = (D_l - th) / denom
        else:
            if eps_bob_m >= 1:
                return 1.0
            a = max(
                (S - 1) / ((S - 2) * eps_bob_k - (S - 1))
                * (th - eps_bob_m * D_l - (1 - eps_bob_m) * D_c)
                / ((1 - eps_bob_m) * D_c),
                0.0,
            )
    a = float(min(max(a, 0.0), 1.0))
    return _round_into_bound(a, eve, bob, eps_bob_m, eps_bob_k, s)


def _round_into_bound(a, eve, bob, eps_bob_m, eps_bob_k, s, max_ulps=16):
    # alpha sits on Bob's bound by construction; step a few ulps to the safe side
    # so the bound also holds in floating point
    th = s.cons.d_bob_tilde_th
    target = 0.0 if eve is Strategy.PERCEPTION else 1.0
    for _ in range(max_ulps):
        if strategy_distortion(eps_bob_m, eps_bob_k, bob, replace(s.dp, alpha=a)) <= th:
            break
        nxt = math.nextafter(a, target)
        if nxt == a:
            break
        a = nxt
    return a


# ---------------------------------------------------------------------------
# adaptive reallocation

def bob_error_caps(bob_strategy, alpha_o: float, s: Scenario) -> tuple[float, float]:
    """Upper bounds on Bob's (message, key) error implied by his distortion bound.

    Each cap is the bound with the other error probability set to zero.
    Returns raw values; a cap <= 0 means the bound cannot be met. A ``nan``
    key cap means the bound does not involve the key at all.
    """
    bob = _as_strategy(bob_strategy)
    cb = s.dp.cb
    th = s.cons.d_bob_tilde_th
    D_l, D_c, S = cb.loss_distortion, cb.confusion_distortion, cb.cardinality
    a = alpha_o

    if bob is Strategy.PERCEPTION:
        msg = th / D_l
        key = th / (a * D_c) if a > 0 else math.nan
    elif bob is Strategy.DROPPING:
        if a <= 0:
            return -math.inf, -math.inf
        msg = 1.0 - (D_l - th) / (a * D_l)
        key = (th + (a - 1.0) * D_l) / (a * D_l)
    else:
        num = th - (1.0 - a) * D_c
        if num <= 0:
            return -math.inf, -math.inf
        msg = num / (D_l - (1.0 - a) * D_c)
        if S > 2 and a > 0:
            key = num * (S - 1) / (a * (S - 2) * D_c)
        else:
            key = math.nan
    return msg, key


def min_blocklengths_for_bob(bob_strategy, alpha_o: float, s: Scenario) -> tuple[int, int]:
    """(n_M^min, n_K^min) keeping Bob's distortion under his predicted strategy bounded."""
    bob = _as_strategy(bob_strategy)
    c = s.cons
    msg_cap, key_cap = bob_error_caps(bob, alpha_o, s)
    if msg_cap <= 0:
        raise InfeasibleError(BOB_DISTORTION, f"{bob.label}: message cap {msg_cap:.3g}")
    if math.isnan(key_cap):
        if bob is Strategy.EXCLUSION and s.dp.cb.cardinality == 2:
            warnings.warn(
                "Exclusion with S=2 does not depend on the key error; "
                "using the key error threshold alone",
                RuntimeWarning,
                stacklevel=2,
            )
        key_cap = c.eps_bob_k_th
    elif key_cap <= 0:
        raise InfeasibleError(BOB_DISTORTION, f"{bob.label}: key cap {key_cap:.3g}")
    key_cap = min(key_cap, c.eps_bob_k_th)
    return _message_lower_bound(msg_cap, s), min_blocklength(key_cap, s.d_k, s.bob)


def _corner(eve_strategy, bob_strategy, alpha_o: float, s: Scenario):
    """Closed-form corner without the post-check; raises only if no rectangle exists."""
    eve = _as_strategy(eve_strategy)
    n_m_max = s.cons.n_m_max
    n_m_min, n_k_min = min_blocklengths_for_bob(bob_strategy, alpha_o, s)
    if n_m_min > n_m_max:
        raise InfeasibleError(MESSAGE_BLOCKLENGTH_MAX, f"n_M^min={n_m_min} > {n_m_max}")

    dp = replace(s.dp, alpha=alpha_o)
    _, eps_k_max = s.eve_errors(n_k_min, n_k_min)
    if eve is Strategy.PERCEPTION:
        up = alpha_o >= perception_alpha_threshold(eps_k_max, dp)
    elif eve is Strategy.DROPPING:
        up = False
    else:
        up = alpha_o < exclusion_alpha_threshold(eps_k_max, dp)
    alloc = Allocation(n_m_max if up else n_m_min, n_k_min)
    eps_m, eps_k = s.eve_errors(alloc.n_m, alloc.n_k)
    return alloc, float(strategy_distortion(eps_m, eps_k, eve, dp))


def adaptive_allocate(eve_strategy, bob_strategy, alpha_o: float,
                      s: Scenario) -> tuple[Allocation, float]:
    """Corner maximising Eve's strategy-specific distortion at ciphering probability ``alpha_o``.

    Perception follows the deterministic-decryptor rule; Dropping always lands
    on (n_M^min, n_K^min); Exclusion moves to n_M^max only while alpha_o stays
    below (D_conf - D_loss) / (D_conf * (1 - eps_Eve,K^max * (S-2)/(S-1))).
    """
    bob = _as_strategy(bob_strategy)
    try:
        alloc, d_eve = _corner(eve_strategy, bob, alpha_o, s)
    except InfeasibleError as e:
        raise InfeasibleError(e.constraint, f"Bob {bob.label}: {e}") from None
    if alloc.n_k > _key_upper_bound(s):
        raise InfeasibleError(EVE_KEY_ERROR, f"Bob {bob.label}: n_K^min={alloc.n_k}")
    bad = constraint_violations(s, alloc, alpha_o, bob)
    if bad:
        raise InfeasibleError(bad[0], f"Bob {bob.label}: corner {alloc}")
    return alloc, d_eve


# ---------------------------------------------------------------------------
# exhaustive reference

def brute_force_optimum(s: Scenario, eve_strategy, bob_strategy, alpha: float,
                        n_range: tuple[int, int] = (1, 128),
                        bob_threshold: float | None = None):
    """Grid maximiser of Eve's distortion over feasible integer (n_M, n_K).

    Ties go to the smallest n_K, then the smallest n_M. Returns ``None`` when
    no grid point is feasible.
    """
    lo, hi = n_range
    n = np.arange(lo, hi + 1)
    n_m, n_k = np.meshgrid(n, n, indexing="ij")
    ok = np.logical_and.reduce(
        list(feasible_mask(s, n_m, n_k, alpha, bob_strategy, bob_threshold).values())
    )
    if not ok.any():
        return None
    em, ek = s.eve_errors(n_m, n_k)
    d = strategy_distortion(em, ek, _as_strategy(eve_strategy), replace(s.dp, alpha=alpha))
    d = np.where(ok, d, -np.inf)
    best = d.max()
    i_m, i_k = np.nonzero(d == best)
    order = np.lexsort((i_m, i_k))
    j = order[0]
    return Allocation(int(n[i_m[j]]), int(n[i_k[j]])), float(best)


# ---------------------------------------------------------------------------
# iterative loop

@dataclass(frozen=True)
class IterationRecord:
    t: int
    eve_strategy: Strategy
    bob_strategy: Strategy
    alpha_o: float
    allocation: Allocation | None
    d_eve: float
    d_bob: float
    feasible: bool
    violations: tuple[str, ...] = ()


@dataclass
class IterationTrace:
    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def completed(self) -> bool:
        """``True`` unless the loop stopped early for lack of an allocation."""
        return bool(self.records) and self.records[-1].allocation is not None

    def states(self):
        return [(r.eve_strategy, r.bob_strategy, r.alpha_o) for r in self.records]

    def eventual_period(self):
        """(start, period) of the shortest cycle the state sequence settles into.

        The cycle must be seen at least twice in full. ``None`` for truncated
        traces or when no cycle is established.
        """
        if not self.completed:
            return None
        seq = self.states()
        n = len(seq)
        for p in range(1, n // 2 + 1):
            start = n - p
            while start > 0 and seq[start - 1] == seq[start - 1 + p]:
                start -= 1
            if n - start >= 2 * p:
                return start, p
        return None

    def modal_strategy(self, role: str) -> Strategy | None:
        """Most frequent strategy of ``role`` ('eve' or 'bob'); ``None`` on a tie."""
        counts = Counter(getattr(r, f"{role}_strategy") for r in self.records).most_common()
        if not counts or (len(counts) > 1 and counts[0][1] == counts[1][1]):
            return None
        return counts[0][0]


def run_algorithm1(s: Scenario, T: int = 100, alpha_init: float = 0.9) -> IterationTrace:
    """Alternate strategy prediction, alpha update and reallocation for T rounds.

    Round 1 uses the initial Perception/Perception assumption; later rounds
    predict both receivers' best responses at the previous round's (n_M, n_K,
    alpha). There is no convergence test.

    A round whose strategy case admits no allocation ends the trace with an
    infeasible record. A corner that exists but breaks Bob's distortion bound
    (the per-error caps ignore their coupling) is flagged infeasible and the
    loop carries on from it. Other threshold violations are only listed.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if not 0.0 < alpha_init <= 1.0:
        raise ValueError("alpha_init must lie in (0, 1]")

    trace = IterationTrace()
    eve = bob = Strategy.PERCEPTION
    try:
        n_m, n_k = min_blocklengths_for_bob(Strategy.PERCEPTION, alpha_init, s)
    except InfeasibleError as e:
        trace.records.append(IterationRecord(1, eve, bob, alpha_init, None, math.nan,
                                             math.nan, False, (e.constraint,)))
        return trace
    alpha = alpha_init

    for t in range(1, T + 1):
        bm, bk = s.bob_errors(n_m, n_k)
        if t > 1:
            dp_prev = replace(s.dp, alpha=alpha)
            em, ek = s.eve_errors(n_m, n_k)
            eve = optimal_strategy(em, ek, dp_prev)[0].strategy
            bob = optimal_strategy(bm, bk, dp_prev)[0].strategy
        alpha_o = optimal_alpha(eve, bob, bm, bk, s)
        try:
            alloc, d_eve = _corner(eve, bob, alpha_o, s)
        except InfeasibleError as e:
            trace.records.append(IterationRecord(t, eve, bob, alpha_o, None, math.nan,
                                                 math.nan, False, (e.constraint,)))
            break
        bm_new, bk_new = s.bob_errors(alloc.n_m, alloc.n_k)
        d_bob = float(strategy_distortion(bm_new, bk_new, bob, replace(s.dp, alpha=alpha_o)))
        violations = tuple(constraint_violations(s, alloc, alpha_o, bob))
        trace.records.append(IterationRecord(t, eve, bob, alpha_o, alloc, d_eve, d_bob,
                                             BOB_DISTORTION not in violations, violations))
        n_m, n_k, alpha = alloc.n_m, alloc.n_k, alpha_o
    return trace
