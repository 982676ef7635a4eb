"""Flat key-value configuration with environment overrides.

Config files are plain ``key = value`` lines (# comments allowed). Values
are parsed as int, float, bool or quoted/bare string. Any key can be
overridden by an environment variable ``TRIAD_<KEY>`` (upper-cased).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import InvalidConfig

ENV_PREFIX = "TRIAD_"


@dataclass
class Settings:
    data_dir: str = "data"
    seed: int = 20250617
    threshold: float = 0.5
    comments_per_student: int = 5
    test_fraction: float = 0.2
    host: str = "127.0.0.1"
    port: int = 8421
    auth_token: str = ""
    bootstrap_resamples: int = 5000
    epochs: int = 40
    batch_size: int = 64
    term_length_days: int = 98

    def data_path(self) -> Path:
        return Path(self.data_dir)


def _parse_scalar(raw: str):
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "'\"":
        return raw[1:-1]
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise InvalidConfig(f"{source}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if not key or not key.replace("_", "").isalnum():
            raise InvalidConfig(f"{source}:{lineno}: bad key {key!r}")
        values[key] = _parse_scalar(raw)
    return values


def load_settings(config_file: str | None = None, overrides: dict | None = None) -> Settings:
    """Build Settings from defaults, optional file, env vars, then overrides."""
    settings = Settings()
    known = {f.name: f.type for f in fields(Settings)}

    def apply(key: str, value, source: str):
        if key not in known:
            raise InvalidConfig(f"{source}: unknown setting {key!r}")
        current = getattr(settings, key)
        try:
            if isinstance(current, bool):
                coerced = value if isinstance(value, bool) else str(value).lower() == "true"
            else:
                coerced = type(current)(value)
        except (TypeError, ValueError):
            raise InvalidConfig(f"{source}: cannot coerce {key}={value!r}")
        setattr(settings, key, coerced)

    if config_file:
        path = Path(config_file)
        if not path.exists():
            raise InvalidConfig(f"config file not found: {config_file}")
        for key, value in parse_config_text(path.read_text(encoding="utf-8"), str(path)).items():
            apply(key, value, str(path))

    for key in known:
        env_key = ENV_PREFIX + key.upper()
        if env_key in os.environ:
            apply(key, _parse_scalar(os.environ[env_key]), env_key)

    for key, value in (overrides or {}).items():
        if value is not None:
            apply(key, value, "override")

    return settings
