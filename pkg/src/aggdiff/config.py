"""Plain-text key=value run configuration.

Format: one `key = value` per line, '#' starts a comment, blank lines are
ignored.  Unknown or duplicate keys are errors.  Keys and defaults:

    dim           (required)   1 or 2
    eps           (required)   diffusivity > 0
    n             2048         grid points per axis, power of two >= 8
    L             16.0         domain side length
    T_star        (derived)    final time; default 4 * moment1(u0) / M^2
    cfl           0.5          Courant number in (0, 1]
    sample_count  256          observable sampling resolution
    m_max         3            highest Sobolev order recorded
    p_list        1,2,3,4,inf  Lebesgue exponents recorded
    profile       gaussian     initial condition family
    M             1.0          initial mass
    sigma         0.5          Gaussian width, sigma <= L/16
    center        0[,0]        Gaussian center per axis
"""

from __future__ import annotations

import math
from pathlib import Path

from .errors import ConfigError
from .solver import RunConfig

_FLOAT_KEYS = {"L", "eps", "T_star", "cfl", "M", "sigma"}
_INT_KEYS = {"dim", "n", "sample_count", "m_max"}
_LIST_KEYS = {"p_list", "center"}
_STR_KEYS = {"profile"}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _LIST_KEYS | _STR_KEYS


def _parse_scalar(key: str, raw: str) -> float:
    s = raw.strip().lower()
    if s in ("inf", "infinity"):
        return math.inf
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected a number, got {raw!r}") from None


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    seen: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        if key in _INT_KEYS:
            try:
                seen[key] = int(raw)
            except ValueError:
                raise ConfigError(
                    f"{source}:{lineno}: key {key!r}: expected an integer, "
                    f"got {raw!r}"
                ) from None
        elif key in _FLOAT_KEYS:
            seen[key] = _parse_scalar(key, raw)
        elif key in _LIST_KEYS:
            seen[key] = tuple(
                _parse_scalar(key, item) for item in raw.split(",") if item.strip()
            )
        else:
            seen[key] = raw
    for required in ("dim", "eps"):
        if required not in seen:
            raise ConfigError(f"{source}: missing required key {required!r}")
    return RunConfig(**seen)


def parse_config(path) -> RunConfig:
    """Read a RunConfig from a key=value file; all defaults applied."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(), source=str(path))
