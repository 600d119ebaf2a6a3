"""
Flat ``key = value`` experiment configuration files.
"""

import logging
from typing import Any, Dict, Optional, Tuple

from pydantic import ValidationError

from .errors import ConfigError, TargetSpecError
from .experiments import ExperimentConfig
from .targets import parse_target

logger = logging.getLogger(__name__)

# config key -> ExperimentConfig field
FIELD_NAMES = {
    "kind": "kind",
    "measure": "measure",
    "d": "degrees",
    "n": "n_values",
    "trials": "trials",
    "target": "target",
    "seed": "seed",
    "methods": "methods",
    "grid_size": "grid_size",
    "eigensolver": "eigensolver",
    "workers": "workers",
}
LIST_KEYS = {"d", "n", "methods"}


def _split_list(value: str) -> Tuple[str, ...]:
    return tuple(piece.strip() for piece in value.split(",") if piece.strip())


def parse_config(text: str) -> Dict[str, Tuple[Any, int]]:
    """
    Map each key to its raw value and the 1-based line it was set on.
    """
    entries: Dict[str, Tuple[Any, int]] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError(f"expected key = value, got {line!r}", number)
        if key not in FIELD_NAMES:
            raise ConfigError(f"unknown key {key!r}", number)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r}", number)
        if key == "target":
            try:
                entries[key] = (parse_target(value), number)
            except TargetSpecError as e:
                raise ConfigError(str(e), number)
        elif key in LIST_KEYS:
            entries[key] = (_split_list(value), number)
        else:
            entries[key] = (value, number)
    return entries


def build_config(
    entries: Dict[str, Tuple[Any, int]], kind: Optional[str] = None
) -> ExperimentConfig:
    data = {FIELD_NAMES[key]: value for key, (value, _) in entries.items()}
    if kind is not None:
        if "kind" in data and data["kind"] != kind:
            raise ConfigError(
                f"config is for a {data['kind']} run, not {kind}",
                entries["kind"][1],
            )
        data["kind"] = kind
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        field = error["loc"][0] if error["loc"] else None
        lines = {FIELD_NAMES[key]: number for key, (_, number) in entries.items()}
        location = ".".join(str(part) for part in error["loc"])
        message = error["msg"] if not location else f"{location}: {error['msg']}"
        raise ConfigError(message, lines.get(str(field)) if field else None)


def load_config(path, kind: Optional[str] = None) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fp:
        text = fp.read()
    config = build_config(parse_config(text), kind)
    logger.debug("loaded config %s: %s", path, config)
    return config
