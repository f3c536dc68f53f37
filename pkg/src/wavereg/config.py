"""Experiment configuration files and value parsing."""

import re
from pathlib import Path
from typing import Any, Optional, Union

import yaml

from wavereg.errors import ArgumentError
from wavereg.models import ExperimentConfig

_RANGE = re.compile(r"^2\^\(?(-?\d+)\)?\.\.2\^\(?(-?\d+)\)?$")
_POWER = re.compile(r"^2\^\(?(-?\d+)\)?$")

# File / flag spellings accepted for ExperimentConfig fields.
KEY_ALIASES = {
    "t": "final_time",
    "final_time": "final_time",
    "eps": "epsilon",
    "epsilon": "epsilon",
    "epsilons": "epsilons",
    "tau": "taus",
    "taus": "taus",
    "nx": "nxs",
    "nxs": "nxs",
    "lambda": "lambdas",
    "lambdas": "lambdas",
    "out": "output",
    "output": "output",
    "kind": "kind",
    "case": "case",
    "p": "p",
    "norms": "norms",
    "allow_ill_conditioned": "allow_ill_conditioned",
    "n_q": "n_q",
    "workers": "workers",
    "eps_factor": "eps_factor",
    "eps_power": "eps_power",
    "h_power": "h_power",
    "newton_tol": "newton_tol",
    "newton_max_iter": "newton_max_iter",
    "newton": "newton",
}

_LIST_KEYS = {"taus", "epsilons", "lambdas", "nxs"}


def parse_number_list(text: Union[str, float, int, list]) -> list[float]:
    """Expand '0.5', '2^-3', '1,1000' or '2^-2..2^-5' into a list of floats.

    Raises:
        ArgumentError: On a malformed token.
    """
    if isinstance(text, (list, tuple)):
        return [value for item in text for value in parse_number_list(item)]
    if isinstance(text, bool):
        raise ArgumentError(f"Expected a number, got {text!r}")
    if isinstance(text, (int, float)):
        return [float(text)]

    values: list[float] = []
    for token in str(text).replace(" ", "").split(","):
        if not token:
            continue
        match = _RANGE.match(token)
        if match:
            start, stop = int(match.group(1)), int(match.group(2))
            step = 1 if stop >= start else -1
            values.extend(2.0**k for k in range(start, stop + step, step))
            continue
        match = _POWER.match(token)
        if match:
            values.append(2.0 ** int(match.group(1)))
            continue
        try:
            values.append(float(token))
        except ValueError:
            raise ArgumentError(f"Cannot parse number '{token}'") from None
    if not values:
        raise ArgumentError(f"Empty value list: {text!r}")
    return values


def parse_int_list(text: Union[str, float, int, list]) -> list[int]:
    """Like :func:`parse_number_list` but every value must be an integer."""
    values = parse_number_list(text)
    if any(v != int(v) for v in values):
        raise ArgumentError(f"Expected integers, got {text!r}")
    return [int(v) for v in values]


class ConfigManager:
    """Reads flat ``key = value`` or YAML config files and resolves them into ExperimentConfig."""

    def load(self, path: Path) -> dict[str, Any]:
        """Read a config file into canonical keys.

        Args:
            path: A ``key = value`` text file or a ``.yaml``/``.yml`` mapping.

        Returns:
            Mapping of canonical keys to raw values.

        Raises:
            ArgumentError: If the file is missing or malformed.
        """
        if not path.exists():
            raise ArgumentError(f"Config file not found: {path}")

        text = path.read_text()
        if path.suffix in (".yaml", ".yml"):
            data = yaml.safe_load(text) or {}
            if not isinstance(data, dict):
                raise ArgumentError(f"Config file {path} must contain a mapping")
        else:
            data = self._parse_key_values(text, path)
        return self.normalise(data)

    def _parse_key_values(self, text: str, path: Path) -> dict[str, Any]:
        data: dict[str, Any] = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ArgumentError(f"{path}:{number}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            try:
                data[key] = yaml.safe_load(value) if value else None
            except yaml.YAMLError:
                data[key] = value
        return data

    def normalise(self, data: dict[str, Any]) -> dict[str, Any]:
        """Map aliases to canonical keys and expand list syntax."""
        result: dict[str, Any] = {}
        for key, value in data.items():
            canonical = KEY_ALIASES.get(str(key).lower().replace("-", "_"))
            if canonical is None:
                raise ArgumentError(f"Unknown configuration key '{key}'")
            if value is None:
                continue
            if canonical == "nxs":
                value = parse_int_list(value)
            elif canonical in _LIST_KEYS:
                value = parse_number_list(value)
            elif canonical in ("final_time", "epsilon"):
                values = parse_number_list(value)
                if len(values) != 1:
                    raise ArgumentError(f"'{key}' takes a single value")
                value = values[0]
            elif canonical == "norms" and isinstance(value, str):
                value = [v for v in value.replace(" ", "").split(",") if v]
            result[canonical] = value
        return result

    def resolve(
        self,
        file_values: Optional[dict[str, Any]] = None,
        overrides: Optional[dict[str, Any]] = None,
    ) -> ExperimentConfig:
        """Merge file values and overrides (overrides win) into a validated config."""
        merged = dict(file_values or {})
        merged.update(self.normalise({k: v for k, v in (overrides or {}).items() if v is not None}))

        newton = dict(merged.pop("newton", None) or {})
        if "newton_tol" in merged:
            newton["tol"] = merged.pop("newton_tol")
        if "newton_max_iter" in merged:
            newton["max_iter"] = merged.pop("newton_max_iter")
        if newton:
            merged["newton"] = newton
        return ExperimentConfig.from_dict(merged)

    def export(self, cfg: ExperimentConfig, path: Path) -> Path:
        """Write the resolved config as YAML so a run can be repeated."""
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            yaml.safe_dump(cfg.to_dict(), f, default_flow_style=False, sort_keys=False)
        return path
