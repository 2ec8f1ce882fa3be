"""Module for reading run configurations from TOML files."""

import dataclasses
import logging
import math
import pathlib
import tomllib
from typing import Any

import numpy as np

from .dynamics import EPS_STOP, Controls
from .exceptions import ConfigNotFoundError, InvalidConfigError
from .lattice import FloatArray, LatticeConfig, validate_config

logger = logging.getLogger(__name__)

LATTICE_KEYS = {
    "N",
    "J",
    "t",
    "gamma",
    "eta",
    "ln_eta",
    "impurities",
    "impurity_fractions",
}
DYNAMICS_KEYS = {"n0", "dt", "t_max", "eps_stop", "sample_interval"}
SCAN_KEYS = {"ln_eta_min", "ln_eta_max", "steps", "sites"}
BLOCKS = {"lattice": LATTICE_KEYS, "dynamics": DYNAMICS_KEYS, "scan": SCAN_KEYS}

DEFAULT_COUPLING = 1.0
DEFAULT_HOPPING = 0.5
DEFAULT_GAMMA = 0.5


@dataclasses.dataclass(frozen=True)
class ScanSettings:
    """Grid of ln eta values and the cells whose curves are analysed."""

    ln_eta_min: float = -3.0
    ln_eta_max: float = 3.0
    steps: int = 61
    sites: tuple[int, ...] = ()

    def grid(self) -> FloatArray:
        """Return the evenly spaced ln eta grid."""
        return np.linspace(self.ln_eta_min, self.ln_eta_max, self.steps)

    @classmethod
    def from_spec(cls, spec: str, sites: tuple[int, ...] = ()) -> "ScanSettings":
        """Parse a 'min:max:steps' grid description."""
        parts = spec.split(":")
        if len(parts) != 3:  # noqa: PLR2004
            msg = f"Scan grid '{spec}' is not of the form min:max:steps."
            raise InvalidConfigError(msg)
        try:
            return cls(float(parts[0]), float(parts[1]), int(parts[2]), sites)
        except ValueError as error:
            msg = f"Scan grid '{spec}' is not numeric."
            raise InvalidConfigError(msg) from error


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Resolved lattice, integrator and scan settings of one run."""

    lattice: LatticeConfig
    n0: int | None = None
    controls: Controls = dataclasses.field(default_factory=Controls)
    scan: ScanSettings = dataclasses.field(default_factory=ScanSettings)

    def snapshot(self) -> dict[str, Any]:
        """Return the configuration as it is recorded in the run manifest."""
        return {
            "lattice": self.lattice.snapshot(),
            "dynamics": {"n0": self.n0, **self.controls.snapshot()},
            "scan": {**dataclasses.asdict(self.scan), "sites": list(self.scan.sites)},
        }


def _number(block: dict[str, Any], key: str, default: float | None = None) -> float:
    value = block.get(key, default)
    if value is None:
        msg = f"Missing required key '{key}'."
        raise InvalidConfigError(msg)
    if isinstance(value, bool) or not isinstance(value, int | float):
        msg = f"Key '{key}' must be a number, got {value!r}."
        raise InvalidConfigError(msg)
    return float(value)


def _integer(block: dict[str, Any], key: str) -> int:
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, int):
        msg = f"Key '{key}' must be an integer, got {value!r}."
        raise InvalidConfigError(msg)
    return value


def _integers(block: dict[str, Any], key: str) -> tuple[int, ...]:
    values = block.get(key, [])
    if not isinstance(values, list) or not all(
        isinstance(v, int) and not isinstance(v, bool) for v in values
    ):
        msg = f"Key '{key}' must be a list of integers."
        raise InvalidConfigError(msg)
    return tuple(values)


def _lattice(block: dict[str, Any]) -> LatticeConfig:
    if "N" not in block:
        msg = "Missing required key 'N'."
        raise InvalidConfigError(msg)
    n_cells = _integer(block, "N")

    if ("eta" in block) == ("ln_eta" in block):
        msg = "Exactly one of 'eta' and 'ln_eta' must be given."
        raise InvalidConfigError(msg)
    if "eta" in block:
        eta = _number(block, "eta")
    else:
        eta = math.exp(_number(block, "ln_eta"))

    if "impurities" in block and "impurity_fractions" in block:
        msg = "Only one of 'impurities' and 'impurity_fractions' may be given."
        raise InvalidConfigError(msg)
    if "impurity_fractions" in block:
        fractions = block["impurity_fractions"]
        if not isinstance(fractions, list):
            msg = "Key 'impurity_fractions' must be a list."
            raise InvalidConfigError(msg)
        impurities = tuple(
            round(_number({"fraction": f}, "fraction") * n_cells) for f in fractions
        )
    else:
        impurities = _integers(block, "impurities")

    return validate_config(
        LatticeConfig(
            n_cells=n_cells,
            coupling=_number(block, "J", DEFAULT_COUPLING),
            hopping=_number(block, "t", DEFAULT_HOPPING),
            gamma=_number(block, "gamma", DEFAULT_GAMMA),
            eta=eta,
            impurities=impurities,
        )
    )


def _optional(block: dict[str, Any], key: str) -> float | None:
    return _number(block, key) if key in block else None


def parse_config(data: dict[str, Any]) -> RunConfig:
    """Build a run configuration from parsed TOML tables."""
    for name, table in data.items():
        if name not in BLOCKS:
            msg = f"Unknown configuration block '[{name}]'."
            raise InvalidConfigError(msg)
        if not isinstance(table, dict):
            msg = f"Configuration entry '{name}' must be a table."
            raise InvalidConfigError(msg)
        unknown = sorted(set(table) - BLOCKS[name])
        if unknown:
            msg = f"Unknown keys in '[{name}]': {', '.join(unknown)}."
            raise InvalidConfigError(msg)
    if "lattice" not in data:
        msg = "Configuration has no '[lattice]' block."
        raise InvalidConfigError(msg)

    dynamics = data.get("dynamics", {})
    controls = Controls(
        dt=_optional(dynamics, "dt"),
        t_max=_optional(dynamics, "t_max"),
        eps_stop=_number(dynamics, "eps_stop", EPS_STOP),
        sample_interval=_number(dynamics, "sample_interval", 1.0),
    )
    scan = data.get("scan", {})
    defaults = ScanSettings()
    settings = ScanSettings(
        ln_eta_min=_number(scan, "ln_eta_min", defaults.ln_eta_min),
        ln_eta_max=_number(scan, "ln_eta_max", defaults.ln_eta_max),
        steps=_integer(scan, "steps") if "steps" in scan else defaults.steps,
        sites=_integers(scan, "sites"),
    )
    return RunConfig(
        lattice=_lattice(data["lattice"]),
        n0=_integer(dynamics, "n0") if "n0" in dynamics else None,
        controls=controls,
        scan=settings,
    )


def load_config(path: pathlib.Path) -> RunConfig:
    """Read and validate a TOML configuration file."""
    if not path.is_file():
        msg = f"Configuration file '{path}' does not exist."
        raise ConfigNotFoundError(msg)
    try:
        with path.open("rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as error:
        msg = f"Configuration file '{path}' is not valid TOML: {error}"
        raise InvalidConfigError(msg) from error
    config = parse_config(data)
    logger.info("Loaded configuration from '%s'.", path)
    return config
