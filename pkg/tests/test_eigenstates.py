import pathlib

import numpy as np
import pytest

from src.skinburst import eigenstates
from src.skinburst.core.config import RunConfig
from src.skinburst.core.lattice import LatticeConfig
from src.skinburst.core.spectral import Selection, SpectralTag
from src.skinburst.output import RunOutput
from tests.helper import symmetric


def test_matched_profile_has_fit() -> None:
    profile = eigenstates.matched_profile(
        symmetric(50, 1e-3, (20,)), SpectralTag.RIGHT_LOOP, Selection.MAX_IM
    )
    assert profile.lambda_fit is not None
    assert profile.lambda_fit.value > 0
    assert profile.energy.real > 0


def test_matched_profile_off_symmetric_point_uses_eigenvector() -> None:
    config = LatticeConfig(30, 1.0, 0.3, 0.6, 0.05, (12,))
    profile = eigenstates.matched_profile(
        config, SpectralTag.LEFT_LOOP, Selection.MIN_IM
    )
    assert profile.energy.real < 0
    assert np.sum(profile.density) == pytest.approx(1.0)


def test_matched_profile_without_usable_window(caplog) -> None:
    with caplog.at_level("WARNING"):
        profile = eigenstates.matched_profile(
            symmetric(8, 1e-2, (4,)), SpectralTag.RIGHT_LOOP, Selection.MAX_IM
        )
    assert profile.lambda_fit is None
    assert "No exponent fitted" in caplog.text


def test_profile_sets_collapse() -> None:
    (profile_set,) = eigenstates.profile_sets(
        symmetric(40, 1e-3, (16,)), [40, 80], [Selection.MAX_IM]
    )
    assert [p.config.n_cells for p in profile_set.profiles] == [40, 80]
    assert profile_set.collapse is not None
    assert profile_set.collapse < 0.05


def test_eigenstates_export(tmp_path: pathlib.Path) -> None:
    run = RunConfig(symmetric(40, 1e-3, (16,)))
    eigenstates.eigenstates(
        run,
        RunOutput(tmp_path, "eigenstates"),
        selections=[Selection.MAX_IM, Selection.MIN_IM],
        sizes=[40, 80],
    )
    fits = np.loadtxt(
        tmp_path / "lyapunov.csv", delimiter=",", comments="#", usecols=(0, 4, 6, 7)
    )
    assert fits.shape == (4, 4)
    assert np.allclose(fits[:, 1], fits[:, 2], rtol=1e-3)
    profiles = (tmp_path / "profiles.csv").read_text().splitlines()
    assert len(profiles) == 1 + 2 * (40 + 80)
    assert profiles[0].endswith(",abs_q,abs_p")
    amplitudes = np.loadtxt(
        tmp_path / "profiles.csv", delimiter=",", comments="#", usecols=(5, 6)
    )
    assert np.all(amplitudes >= 0)
    assert np.all(amplitudes.sum(axis=1) > 0)
    assert (tmp_path / "collapse.csv").exists()
    assert "profiles.csv" in (tmp_path / "profiles.gp").read_text()


def test_single_size_skips_collapse(tmp_path: pathlib.Path) -> None:
    run = RunConfig(symmetric(40, 1e-3, (16,)))
    sets = eigenstates.eigenstates(
        run, RunOutput(tmp_path, "eigenstates"), selections=[Selection.MAX_IM]
    )
    assert sets[0].collapse is None
    assert not (tmp_path / "collapse.csv").exists()
