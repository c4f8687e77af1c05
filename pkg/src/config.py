"""
Service configuration.

A flat key=value file read with python-dotenv. Every key can be overridden by an
environment variable named HAMSEARCH_<KEY>; a `.env` in the working directory is
loaded into the environment first.

    host=127.0.0.1
    port=8000
    index_path=artifacts/index.bin
    extractor_path=artifacts/extractor.txt
    radius=2
    default_mode=twostage
    default_k=10
    long_postings=false
"""

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, Mapping, Optional, Union

from dotenv import dotenv_values, load_dotenv

from src.logger import logging
from src.exception import ConfigError, InvalidQueryError, RadiusError
from src.components.codes import check_radius
from src.components.search_index import SearchMode


ENV_PREFIX = "HAMSEARCH_"
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    index_path: Optional[Path] = None
    extractor_path: Optional[Path] = None
    radius: int = 2
    default_mode: SearchMode = SearchMode.TWO_STAGE
    default_k: int = 10
    long_postings: bool = False

    def __post_init__(self) -> None:
        try:
            self.port = int(self.port)
            self.radius = check_radius(int(self.radius))
            self.default_k = int(self.default_k)
            self.default_mode = SearchMode.parse(self.default_mode)
        except (ValueError, TypeError, RadiusError, InvalidQueryError) as e:
            raise ConfigError(f"invalid service configuration: {e}") from e
        if not 0 < self.port < 65536:
            raise ConfigError(f"port must lie in [1, 65535], got {self.port}")
        if self.default_k < 1:
            raise ConfigError(f"default_k must be at least 1, got {self.default_k}")
        self.long_postings = _to_bool("long_postings", self.long_postings)
        self.index_path = Path(self.index_path) if self.index_path else None
        self.extractor_path = Path(self.extractor_path) if self.extractor_path else None

    @classmethod
    def from_mapping(cls, values: Mapping[str, Optional[str]]) -> "ServiceConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(k for k in values if k not in known)
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
        return cls(**{k: v for k, v in values.items() if v is not None and v != ""})

    @classmethod
    def load(cls, path: Union[str, Path, None] = None, environ: Optional[Mapping[str, str]] = None) -> "ServiceConfig":
        """File values first, then HAMSEARCH_<KEY> environment overrides."""
        if environ is None:
            load_dotenv()
            environ = os.environ
        values: Dict[str, Optional[str]] = {}
        if path is not None:
            path = Path(path)
            if not path.is_file():
                raise FileNotFoundError(f"config file not found: {path}")
            values.update({k.strip().lower(): v for k, v in dotenv_values(path).items()})
        values.update(env_overrides(environ))
        config = cls.from_mapping(values)
        logging.info(
            f"Service config: {config.host}:{config.port}, index={config.index_path}, d={config.radius}, "
            f"mode={config.default_mode.value}, k={config.default_k}"
        )
        return config


def env_overrides(environ: Mapping[str, str]) -> Dict[str, str]:
    known = {f.name for f in fields(ServiceConfig)}
    overrides = {}
    for key, value in environ.items():
        if key.startswith(ENV_PREFIX):
            name = key[len(ENV_PREFIX):].lower()
            if name in known:
                overrides[name] = value
    return overrides


def _to_bool(name: str, value: Union[bool, str]) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise ConfigError(f"{name} must be a boolean, got {value!r}")
