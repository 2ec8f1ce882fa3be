import math
import pathlib

import numpy as np
import pytest

from src.skinburst.core import config
from src.skinburst.core.config import ScanSettings
from src.skinburst.core.exceptions import (
    AdjacentImpuritiesError,
    ConfigNotFoundError,
    InvalidConfigError,
)
from tests.helper import RESOURCES_DIR, write_config


def test_load_single_impurity() -> None:
    run = config.load_config(RESOURCES_DIR / "single_impurity.toml")
    assert run.lattice.n_cells == 50
    assert run.lattice.eta == 1e-3
    assert run.lattice.impurities == (20,)
    assert run.n0 is None


def test_load_with_dynamics_and_scan() -> None:
    run = config.load_config(RESOURCES_DIR / "burst_scan.toml")
    assert run.lattice.eta == pytest.approx(math.exp(3.0))
    assert run.n0 == 95
    assert run.scan.sites == (40, 41, 50, 80)
    assert run.scan.grid()[30] == pytest.approx(0.0)
    assert run.controls.eps_stop == 1e-10
    assert run.controls.dt is None


def test_load_impurity_fractions() -> None:
    run = config.load_config(RESOURCES_DIR / "four_impurities.toml")
    assert run.lattice.impurities == (20, 40, 60, 80)
    assert run.scan.steps == 61


def test_defaults_for_symmetric_parameters() -> None:
    run = config.parse_config({"lattice": {"N": 10, "eta": 1.0}})
    assert run.lattice.coupling == 1.0
    assert run.lattice.hopping == 0.5
    assert run.lattice.gamma == 0.5
    assert run.lattice.impurities == ()


def test_missing_file() -> None:
    with pytest.raises(ConfigNotFoundError, match="does not exist"):
        config.load_config(pathlib.Path("missing.toml"))


def test_malformed_toml(tmp_path: pathlib.Path) -> None:
    path = write_config(tmp_path / "bad.toml", "[lattice\nN = 10")
    with pytest.raises(InvalidConfigError, match="not valid TOML"):
        config.load_config(path)


@pytest.mark.parametrize(
    ("data", "message"),
    [
        ({"lattice": {"N": 10, "eta": 1.0, "mu": 1}}, "Unknown keys"),
        ({"lattice": {"N": 10, "eta": 1.0}, "plot": {}}, "Unknown configuration block"),
        ({"dynamics": {"n0": 1}}, "no '\\[lattice\\]'"),
        ({"lattice": {"eta": 1.0}}, "'N'"),
        ({"lattice": {"N": 10}}, "Exactly one"),
        ({"lattice": {"N": 10, "eta": 1.0, "ln_eta": 0.0}}, "Exactly one"),
        ({"lattice": {"N": 10.5, "eta": 1.0}}, "integer"),
        ({"lattice": {"N": 10, "eta": "big"}}, "number"),
        (
            {"lattice": {"N": 10, "eta": 1.0, "impurities": [2],
                         "impurity_fractions": [0.5]}},
            "Only one",
        ),
        ({"lattice": {"N": 10, "eta": 1.0, "impurities": [2.5]}}, "list of integers"),
    ],
)
def test_invalid_entries(data: dict, message: str) -> None:
    with pytest.raises(InvalidConfigError, match=message):
        config.parse_config(data)


def test_lattice_is_validated() -> None:
    with pytest.raises(AdjacentImpuritiesError):
        config.parse_config({"lattice": {"N": 10, "eta": 1.0, "impurities": [3, 4]}})


def test_scan_from_spec() -> None:
    settings = ScanSettings.from_spec("-3:3:61", (40,))
    assert settings.sites == (40,)
    assert np.allclose(settings.grid(), np.linspace(-3, 3, 61))


@pytest.mark.parametrize("spec", ["-3:3", "a:b:c"])
def test_scan_from_bad_spec(spec: str) -> None:
    with pytest.raises(InvalidConfigError):
        ScanSettings.from_spec(spec)


def test_snapshot_round_trips_keys() -> None:
    run = config.load_config(RESOURCES_DIR / "burst_scan.toml")
    snapshot = run.snapshot()
    assert snapshot["lattice"]["impurities"] == [40]
    assert snapshot["dynamics"]["n0"] == 95
    assert snapshot["scan"]["sites"] == [40, 41, 50, 80]
