"""Plain ``key = value`` run configuration.

Blank lines and lines starting with ``#`` are ignored.  Recognized keys:

``example``, ``beta_minus``, ``levels`` (``a:b`` inclusive, or a single level),
``output_dir``, ``reference_degree``, ``assumption_c``, ``normalization``
(``domain`` or ``region``) and ``strict`` (true/false).
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .exceptions import ConfigError
from .reporting import NORMALIZATIONS


@dataclass(frozen=True)
class RunConfig:
    example: int = 2
    beta_minus: float = 1.0
    levels: tuple | None = None  # inclusive (first, last); None = catalog default
    output_dir: str = "results"
    reference_degree: int = 6
    assumption_c: float = 1e-8
    normalization: str = "domain"
    strict: bool = False

    def level_range(self, default: tuple[int, int]) -> range:
        lo, hi = self.levels or default
        return range(lo, hi + 1)

    def merged(self, **overrides) -> "RunConfig":
        """Copy with every non-``None`` override applied (flags win)."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def parse_levels(text: str) -> tuple[int, int]:
    text = text.strip()
    try:
        if ":" in text:
            a, b = text.split(":", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError as exc:
        raise ConfigError(f"bad level range {text!r}; expected 'first:last'") from exc
    if lo < 0 or hi < lo:
        raise ConfigError(f"bad level range {text!r}")
    return lo, hi


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


_CONVERT = {
    "example": int,
    "beta_minus": float,
    "levels": parse_levels,
    "output_dir": str,
    "reference_degree": int,
    "assumption_c": float,
    "normalization": str,
    "strict": _bool,
}


def parse_config(text: str) -> dict:
    """Parse config text into a dict of typed values."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _CONVERT:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        try:
            out[key] = _CONVERT[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {n}: bad value for {key}: {value!r}") from exc
    if "normalization" in out and out["normalization"] not in NORMALIZATIONS:
        raise ConfigError(f"normalization must be one of {NORMALIZATIONS}")
    return out


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return RunConfig(**parse_config(text))


CONFIG_KEYS = tuple(f.name for f in fields(RunConfig))
