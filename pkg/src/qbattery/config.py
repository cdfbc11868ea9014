"""Plain-text ``key = value`` configuration files.

One assignment per line, ``#`` starts a comment, complex numbers are written
the Python way (``1+0j``, ``-0.25j``). Keys that name a ModelParams field are
turned into a ModelParams; anything else is handed back untouched so callers
(sweeps, grid optimisation) can interpret their own keys.
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path
from typing import Any, Mapping, Union

from .model import ModelParams

_COMPLEX_FIELDS = {"coupling_J", "p_a", "p_b"}
_OPTIONAL_FIELDS = {"kappa_b", "xi"}
_BOOL_FIELDS = {"nonreciprocal"}
MODEL_KEYS = frozenset(f.name for f in fields(ModelParams)) | {"kappa"}


class ConfigError(ValueError):
    pass


def parse_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def read_config(path: Union[str, Path]) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_text(text)


def parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def parse_value(key: str, value: Any) -> Any:
    """Convert a raw string to the type of ModelParams field ``key``."""
    if not isinstance(value, str):
        return value
    try:
        if key in _BOOL_FIELDS:
            return parse_bool(value)
        if key in _OPTIONAL_FIELDS and value.strip().lower() in ("", "none"):
            return None
        if key in _COMPLEX_FIELDS:
            return complex(value.replace(" ", ""))
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def params_from_mapping(
    mapping: Mapping[str, Any], base: ModelParams | None = None
) -> ModelParams:
    """Build ModelParams from the model keys of ``mapping`` (other keys ignored).

    ``kappa`` is shorthand for kappa_a = kappa_b; explicit kappa_a / kappa_b win.
    """
    base = base or ModelParams()
    changes = {k: parse_value(k, v) for k, v in mapping.items() if k in MODEL_KEYS}
    if "kappa" in changes:
        kappa = changes.pop("kappa")
        changes.setdefault("kappa_a", kappa)
        changes.setdefault("kappa_b", kappa)
    return base.replace(**changes)


def split_config(mapping: Mapping[str, str]) -> tuple[ModelParams, dict[str, str]]:
    params = params_from_mapping(mapping)
    extra = {k: v for k, v in mapping.items() if k not in MODEL_KEYS}
    return params, extra


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, complex):
        return f"{value.real!r}{value.imag:+.17g}j"
    return repr(float(value))


def dump_params(params: ModelParams) -> str:
    lines = [f"{k} = {format_value(v)}" for k, v in params.as_dict().items()]
    return "\n".join(lines) + "\n"
