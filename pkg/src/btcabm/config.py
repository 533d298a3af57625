"""Simulation configuration: calibrated defaults, validation and the ``key = value`` file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BehaviorParams:
    """Per-strategy trading behaviour shared by every trader of a population."""

    p_active_random: float = 0.1
    p_active_chartist: float = 0.5
    # probability that an order is a market order (limit price 0)
    p_market_random: float = 0.2
    p_market_chartist: float = 0.7
    mu: float = 1.02
    K: float = 0.01
    T_window: int = 10
    beta_mean: float = 0.25
    beta_std: float = 0.2
    threshold: float = 0.01
    expiry_mean: float = 3.0
    expiry_std: float = 1.0
    chartist_window_min: int = 2
    chartist_window_max: int = 15

    def validate(self) -> None:
        for name in ("p_active_random", "p_active_chartist", "p_market_random", "p_market_chartist"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        for name in ("mu", "K", "threshold", "beta_mean", "beta_std", "expiry_mean", "expiry_std"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.T_window < 1:
            raise ConfigError(f"T_window must be >= 1, got {self.T_window}")
        if not 1 <= self.chartist_window_min <= self.chartist_window_max:
            raise ConfigError("chartist window bounds must satisfy 1 <= min <= max")


@dataclass(frozen=True)
class SimConfig:
    horizon: int = 830
    n_traders_0: int = 100
    n_traders_final: int = 1500
    total_coins_0: float = 80_000.0
    price_0: float = 5.0
    total_cash_0: float = 400_000.0
    entrant_top_cash: float = 400_000.0
    entrant_alpha: float = 0.6
    initial_alpha: float = 1.0
    p_random: float = 0.7
    p_chartist: float = 0.3
    behavior: BehaviorParams = field(default_factory=BehaviorParams)
    scale: float = 100.0
    seed: int = 0
    data_path: str | None = None
    x_min: float = 0.1
    acf_max_lag: int = 50
    mc_runs: int = 100
    # "literal": zero-limit orders sorted by their raw limit; "top": they head both sides
    market_priority: str = "literal"

    def validate(self) -> "SimConfig":
        for name in ("p_random", "p_chartist"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if abs(self.p_random + self.p_chartist - 1.0) > 1e-12:
            raise ConfigError(
                f"p_random + p_chartist must equal 1, got {self.p_random} + {self.p_chartist}"
            )
        positive = (
            "horizon", "n_traders_0", "n_traders_final", "total_coins_0", "price_0",
            "total_cash_0", "entrant_top_cash", "entrant_alpha", "initial_alpha",
            "scale", "x_min", "acf_max_lag", "mc_runs",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.market_priority not in ("literal", "top"):
            raise ConfigError(f"market_priority must be 'literal' or 'top', got {self.market_priority!r}")
        if self.n_traders_final < self.n_traders_0:
            raise ConfigError("n_traders_final must be >= n_traders_0")
        self.behavior.validate()
        return self

    @property
    def entrant_pool_size(self) -> int:
        return self.n_traders_final - self.n_traders_0

    def replace(self, **changes: Any) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_lines(self) -> list[str]:
        """Fully resolved ``key = value`` lines, behaviour keys flattened."""
        out = []
        for k, v in flat_items(self):
            out.append(f"{k} = {'' if v is None else v}")
        return out


_TOP_FIELDS = {f.name: f for f in fields(SimConfig) if f.name != "behavior"}
_BEHAVIOR_FIELDS = {f.name: f for f in fields(BehaviorParams)}


def valid_keys() -> list[str]:
    return sorted([*_TOP_FIELDS, *_BEHAVIOR_FIELDS])


def flat_items(cfg: SimConfig) -> list[tuple[str, Any]]:
    items = [(name, getattr(cfg, name)) for name in _TOP_FIELDS]
    items += [(name, getattr(cfg.behavior, name)) for name in _BEHAVIOR_FIELDS]
    return items


def _coerce(name: str, raw: Any, default: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    if name == "data_path":
        return raw or None
    try:
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {type(default).__name__}") from None
    return raw


def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values


def build_config(overrides: Mapping[str, Any] | None = None, base: SimConfig | None = None) -> SimConfig:
    """Apply flat overrides to ``base`` (defaults if omitted) and validate."""
    base = base or SimConfig()
    top: dict[str, Any] = {}
    beh: dict[str, Any] = {}
    for key, raw in (overrides or {}).items():
        if key in _TOP_FIELDS:
            top[key] = _coerce(key, raw, getattr(base, key))
        elif key in _BEHAVIOR_FIELDS:
            beh[key] = _coerce(key, raw, getattr(base.behavior, key))
        else:
            raise ConfigError(f"unknown config key {key!r}; valid keys: {', '.join(valid_keys())}")
    if beh:
        top["behavior"] = dataclasses.replace(base.behavior, **beh)
    return dataclasses.replace(base, **top).validate()


def parse_config(path: str | Path | None = None, flags: Mapping[str, Any] | None = None) -> SimConfig:
    """Defaults, then the config file, then flag overrides (flags win)."""
    merged: dict[str, Any] = {}
    if path is not None:
        merged.update(read_config_file(path))
    merged.update(flags or {})
    return build_config(merged)
