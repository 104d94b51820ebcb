"""Service configuration: one INI file plus environment overrides.

The `[service]` section holds all keys; any key can be overridden by an
environment variable named `REFVLM_<KEY>` (upper-cased). Example:

    [service]
    port = 8321
    model_manifest = runs/stage2/manifest.txt
    dataset_manifest = data/manifest.csv
    stores_dir = stores
    admin_token = change-me
    session_idle_timeout = 1800
    busy_policy = reject
    frames_per_clip = 8
    max_new_tokens = 64
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional


@dataclass
class ServiceConfig:
    port: int = 8321
    model_manifest: Optional[Path] = None
    dataset_manifest: Optional[Path] = None
    media_root: Optional[Path] = None
    stores_dir: Path = Path("stores")
    admin_token: str = "admin"
    session_idle_timeout: float = 1800.0
    busy_policy: str = "reject"  # "reject" -> 429 when a generation is in flight; "queue" -> wait
    frames_per_clip: int = 8
    max_new_tokens: int = 64

    def __post_init__(self):
        if self.busy_policy not in ("reject", "queue"):
            raise ValueError(f"busy_policy must be 'reject' or 'queue', got {self.busy_policy!r}")
        if self.frames_per_clip < 2 or self.frames_per_clip % 2 != 0:
            raise ValueError("frames_per_clip must be a positive even number")


_PATH_KEYS = {"model_manifest", "dataset_manifest", "media_root", "stores_dir"}
_INT_KEYS = {"port", "frames_per_clip", "max_new_tokens"}
_FLOAT_KEYS = {"session_idle_timeout"}


def load_service_config(path: Optional[Path] = None, env: Optional[dict] = None) -> ServiceConfig:
    env = os.environ if env is None else env
    values = {}
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise FileNotFoundError(f"config file not found: {path}")
        if parser.has_section("service"):
            values.update(dict(parser.items("service")))
    for key in list(ServiceConfig.__dataclass_fields__):
        env_key = f"REFVLM_{key.upper()}"
        if env_key in env:
            values[key] = env[env_key]
    kwargs = {}
    for key, raw in values.items():
        if key not in ServiceConfig.__dataclass_fields__:
            raise KeyError(f"unknown service config key: {key}")
        if key in _PATH_KEYS:
            kwargs[key] = Path(raw)
        elif key in _INT_KEYS:
            kwargs[key] = int(raw)
        elif key in _FLOAT_KEYS:
            kwargs[key] = float(raw)
        else:
            kwargs[key] = raw
    return ServiceConfig(**kwargs)
