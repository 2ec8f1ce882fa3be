import pathlib

import numpy as np

from src.skinburst import spectrum
from src.skinburst.core.config import RunConfig
from src.skinburst.core.spectral import Limit
from src.skinburst.output import RunOutput
from tests.helper import symmetric


def _load(path: pathlib.Path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", comments="#", usecols=(0, 1, 3, 4, 5, 6))


def test_classified_spectrum_export(tmp_path: pathlib.Path) -> None:
    run = RunConfig(symmetric(50, 1e-3, (20,)))
    result = spectrum.spectrum(run, RunOutput(tmp_path, "spectrum"), classify=True)

    assert (tmp_path / "spectrum.gp").exists()
    lines = (tmp_path / "spectrum.csv").read_text().splitlines()
    assert lines[0].startswith("# re_E [J],im_E [J],tag,r_mag,r_ph [rad]")
    assert len(lines) == 101
    tags = [line.split(",")[2] for line in lines[1:]]
    assert {"LEFT_LOOP", "RIGHT_LOOP"} <= set(tags)
    table = _load(tmp_path / "spectrum.csv")
    on_loop = np.array([tag != "DETACHED" for tag in tags])
    assert np.max(table[on_loop, 2:4]) < 1e-6
    assert np.allclose(table[:, 0], result.eigenvalues.real)


def test_unclassified_spectrum(tmp_path: pathlib.Path) -> None:
    spectrum.spectrum(RunConfig(symmetric(6, 2.0, (2,))), RunOutput(tmp_path, "s"))
    rows = (tmp_path / "spectrum.csv").read_text().splitlines()[1:]
    assert all(row.split(",")[2] == spectrum.UNCLASSIFIED for row in rows)


def test_pbc_limit_export(tmp_path: pathlib.Path) -> None:
    run = RunConfig(symmetric(48, 1.0, (20,)))
    spectrum.spectrum(run, RunOutput(tmp_path, "spectrum"), limit=Limit.PBC)
    limit = np.loadtxt(tmp_path / "limit.csv", delimiter=",", comments="#")
    assert abs(np.max(limit[:, 1])) < 1e-10
    assert np.sum(limit[:, 2]) == 96
    assert "limit.csv" in (tmp_path / "spectrum.gp").read_text()


def test_size_sweep_export(tmp_path: pathlib.Path) -> None:
    run = RunConfig(symmetric(12, 1.0, (6,)))
    spectrum.spectrum(
        run, RunOutput(tmp_path, "spectrum"), classify=True, sizes=[12, 24]
    )
    sweep = np.loadtxt(tmp_path / "sweep.csv", delimiter=",", comments="#")
    assert list(sweep[:, 0]) == [12, 24]
    assert sweep[1, 1] < sweep[0, 1]


def test_sign_changes_per_loop(tmp_path: pathlib.Path) -> None:
    run = RunConfig(symmetric(50, 1e-3, (20,)))
    result = spectrum.spectrum(run, RunOutput(tmp_path, "spectrum"), classify=True)
    changes = _load(tmp_path / "spectrum.csv")[:, 5]
    loop = result.loop_mask()
    assert np.all(np.isnan(changes[~loop]))
    assert np.all(changes[loop] >= 0)
    assert np.all(changes[loop] == np.round(changes[loop]))


def test_unclassified_spectrum_has_no_sign_changes(tmp_path: pathlib.Path) -> None:
    spectrum.spectrum(RunConfig(symmetric(6, 2.0, (2,))), RunOutput(tmp_path, "s"))
    assert np.all(np.isnan(_load(tmp_path / "spectrum.csv")[:, 5]))


def test_hamiltonian_dump(tmp_path: pathlib.Path) -> None:
    run = RunConfig(symmetric(6, 3.0, (2,)))
    spectrum.spectrum(run, RunOutput(tmp_path, "spectrum"), dump_hamiltonian=True)

    ssh = np.loadtxt(tmp_path / "hamiltonian_ssh.csv", delimiter=",", comments="#")
    elements = {(int(r), int(c)): complex(re, im) for r, c, re, im in ssh}
    assert elements[(0, 1)] == 1.0
    assert elements[(2, 3)] == 3.0
    assert (1, 0) not in elements
    assert (3, 2) not in elements

    cross = np.loadtxt(
        tmp_path / "hamiltonian_cross_stitch.csv", delimiter=",", comments="#"
    )
    diagonal = cross[cross[:, 0] == cross[:, 1]]
    assert set(diagonal[:, 0].astype(int)) == {1, 3, 5, 7, 9, 11}
    assert np.allclose(diagonal[:, 3], [-1.0, -3.0, -1.0, -1.0, -1.0, -1.0])


def test_hamiltonian_dump_is_optional(tmp_path: pathlib.Path) -> None:
    spectrum.spectrum(RunConfig(symmetric(6, 2.0, (2,))), RunOutput(tmp_path, "s"))
    assert not list(tmp_path.glob("hamiltonian_*.csv"))
