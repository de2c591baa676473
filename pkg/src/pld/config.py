"""Run configuration: plain ``key = value`` files with the reference simulation defaults.

Channel gains are given in dB and converted to linear SNR exactly once, here,
when the configuration is built.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .distortion import Codebook, DistortionParams, Strategy
from .fbl import ChannelParams
from .optimizer import Constraints, Scenario


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # linear SNRs; built from the *_db keys
    gamma_bob: float = 1.0
    gamma_eve: float = 0.1
    d_m: int = 16
    d_k: int = 16
    d_loss: float = 1.0
    d_conf: float = 10.0
    cardinality: int = 16
    eps_bob_m_th: float = 0.5
    eps_bob_k_th: float = 0.5
    eps_eve_m_th: float = 0.5
    eps_eve_k_th: float = 0.5
    d_bob_th: float = 0.01
    d_bob_tilde_th: float = 0.01
    n_m_max: int = 128
    alpha: float = 0.9
    alpha_init: float = 0.9
    iterations: int = 100
    eve_strategy: Strategy = Strategy.PERCEPTION
    bob_strategy: Strategy = Strategy.PERCEPTION
    n_lo: int = 1
    n_hi: int = 128
    eps_m: float = 0.1
    eps_k: float = 0.5
    num_samples: int = 1_000_000
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if not 1 <= self.n_lo <= self.n_hi:
            raise ConfigError(f"need 1 <= n_lo <= n_hi, got {self.n_lo}, {self.n_hi}")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.num_samples < 1:
            raise ConfigError("num_samples must be >= 1")
        if not 0.0 < self.alpha_init <= 1.0:
            raise ConfigError("alpha_init must lie in (0, 1]")
        for name in ("eps_m", "eps_k"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")

    def scenario(self, alpha: float | None = None) -> Scenario:
        a = self.alpha if alpha is None else alpha
        try:
            return Scenario(
                bob=ChannelParams.from_gamma(self.gamma_bob),
                eve=ChannelParams.from_gamma(self.gamma_eve),
                d_m=self.d_m,
                d_k=self.d_k,
                dp=DistortionParams(Codebook(self.cardinality, self.d_loss, self.d_conf), a),
                cons=Constraints(
                    eps_bob_m_th=self.eps_bob_m_th,
                    eps_bob_k_th=self.eps_bob_k_th,
                    eps_eve_m_th=self.eps_eve_m_th,
                    eps_eve_k_th=self.eps_eve_k_th,
                    d_bob_th=self.d_bob_th,
                    d_bob_tilde_th=self.d_bob_tilde_th,
                    n_m_max=self.n_m_max,
                ),
            )
        except ValueError as e:
            raise ConfigError(str(e)) from None


_DB_KEYS = {"snr_bob_db": "gamma_bob", "snr_eve_db": "gamma_eve"}
_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, text: str):
    kind = _TYPES[key]
    try:
        if kind == "int":
            return int(text, 0)
        if kind == "float":
            v = float(text)
            if not math.isfinite(v):
                raise ValueError("not finite")
            return v
        if kind == "Strategy":
            return Strategy.parse(text)
        return text
    except ValueError as e:
        raise ConfigError(f"bad value for {key}: {text!r} ({e})") from None


def _db_to_linear(text: str, key: str) -> float:
    try:
        db = float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None
    if not math.isfinite(db):
        raise ConfigError(f"bad value for {key}: {text!r}")
    return 10.0 ** (db / 10.0)


def build_config(pairs: dict[str, str]) -> RunConfig:
    """RunConfig from raw string pairs; ``snr_*_db`` keys are converted to linear."""
    updates = {}
    for key, text in pairs.items():
        key = key.strip().replace("-", "_")
        if key in _DB_KEYS:
            updates[_DB_KEYS[key]] = _db_to_linear(text, key)
        elif key in _TYPES and key not in _DB_KEYS.values():
            updates[key] = _convert(key, text.strip())
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    return replace(RunConfig(), **updates)


def parse_config_text(text: str, origin: str = "<config>") -> dict[str, str]:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{origin}:{lineno}: empty key")
        pairs[key] = value
    return pairs


def load_config(path: str | None = None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Defaults, then the file at ``path`` (if any), then ``overrides``."""
    pairs: dict[str, str] = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
        pairs.update(parse_config_text(text, path))
    if overrides:
        pairs.update(overrides)
    return build_config(pairs)
