import numpy as np
import pytest

from src.skinburst.core import spectral
from src.skinburst.core.exceptions import (
    AnalysisError,
    NoConvergenceError,
    ZeroEtaError,
)
from src.skinburst.core.lattice import build_hamiltonian
from src.skinburst.core.spectral import Limit, Selection, SpectralTag
from tests.helper import characteristic_roots, symmetric


def test_diagonalize_matches_characteristic_polynomial() -> None:
    h = build_hamiltonian(symmetric(5, 2.0, (2,)))
    result = spectral.diagonalize(h)
    expected = characteristic_roots(h.data)
    assert spectral.multiset_distance(result.eigenvalues, expected) < 1e-8


def test_diagonalize_sorted_by_real_then_imaginary() -> None:
    result = spectral.diagonalize(build_hamiltonian(symmetric(8, 0.5, (3,))))
    keys = [(e.real, e.imag) for e in result.eigenvalues]
    assert keys == sorted(keys)


def test_diagonalize_vectors_are_eigenvectors() -> None:
    h = build_hamiltonian(symmetric(6, 3.0, (2,)))
    result = spectral.diagonalize(h, want_vectors=True)
    for i, energy in enumerate(result.eigenvalues):
        vector = result.vector(i)
        assert np.linalg.norm(h.data @ vector - energy * vector) < 1e-10


def test_diagonalize_extended_precision_agrees() -> None:
    h = build_hamiltonian(symmetric(4, 2.0, (2,)))
    double = spectral.diagonalize(h)
    extended = spectral.diagonalize(h, precision=30)
    assert spectral.multiset_distance(double.eigenvalues, extended.eigenvalues) < 1e-10


def test_diagonalize_rejects_non_finite() -> None:
    with pytest.raises(NoConvergenceError):
        spectral.diagonalize(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_vector_requires_eigenvectors() -> None:
    result = spectral.diagonalize(np.eye(2))
    with pytest.raises(AnalysisError, match="without eigenvectors"):
        result.vector(0)


def test_spectrum_symmetric_under_reflection() -> None:
    energies = spectral.diagonalize(
        build_hamiltonian(symmetric(50, 1e-3, (20,)))
    ).eigenvalues
    assert spectral.multiset_distance(energies, -energies.conj()) < 1e-8


def test_no_gain() -> None:
    energies = spectral.diagonalize(
        build_hamiltonian(symmetric(30, 7.0, (5, 20)))
    ).eigenvalues
    assert np.max(energies.imag) <= 1e-10


@pytest.mark.parametrize("eta", [1e-3, 1e3])
def test_closure_residual_of_loop_eigenvalues(eta: float) -> None:
    config = symmetric(50, eta, (20,))
    result = spectral.annotate_closure(spectral.loop_spectrum(config), config)
    assert result.closure_residual is not None
    assert np.max(result.closure_residual[result.loop_mask()]) < 1e-6


def test_closure_residual_multiple_impurities() -> None:
    config = symmetric(50, 1e-3, (10, 20, 30, 40))
    result = spectral.annotate_closure(spectral.loop_spectrum(config), config)
    assert result.closure_residual is not None
    assert np.max(result.closure_residual[result.loop_mask()]) < 1e-6


def test_closure_residual_off_spectrum() -> None:
    magnitude, phase = spectral.closure_residual(0.3 - 0.2j, symmetric(50, 1e-3, (20,)))
    assert max(magnitude, phase) > 1e-3


def test_closure_residual_zero_eta() -> None:
    with pytest.raises(ZeroEtaError):
        spectral.closure_residual(0.3 - 0.2j, symmetric(10, 0.0, (4,)))


def test_eta_zero_limit_with_extended_precision() -> None:
    config = symmetric(8, 0.0, (4,))
    result = spectral.diagonalize(build_hamiltonian(config), precision=60)
    levels = spectral.analytic_limit_spectrum(config, Limit.ETA_ZERO)
    assert [level.multiplicity for level in levels] == [6, 2, 2, 6]
    expected = spectral.expand_levels(levels)
    assert spectral.multiset_distance(result.eigenvalues, expected) < 1e-6


def test_eta_zero_levels_for_symmetric_parameters() -> None:
    levels = spectral.analytic_limit_spectrum(symmetric(20, 0.0, (10,)), Limit.ETA_ZERO)
    energies = {
        complex(round(lv.energy.real, 6), round(lv.energy.imag, 6)) for lv in levels
    }
    assert energies == {-1 - 0.5j, 1 - 0.5j, -0.968246 - 0.25j, 0.968246 - 0.25j}


def test_eta_inf_levels() -> None:
    levels = spectral.analytic_limit_spectrum(symmetric(20, 1e3, (10,)), Limit.ETA_INF)
    assert sum(level.multiplicity for level in levels) == 40
    assert any(level.energy == pytest.approx(-500j) for level in levels)


def test_pbc_limit_touches_real_axis() -> None:
    levels = spectral.analytic_limit_spectrum(symmetric(48, 1.0, (20,)), Limit.PBC)
    top = max(level.energy.imag for level in levels)
    assert abs(top) < 1e-10


def test_pbc_ring_is_tangent_to_real_axis() -> None:
    energies = spectral.diagonalize(
        build_hamiltonian(symmetric(48, 1.0, (20,)))
    ).eigenvalues
    assert abs(np.max(energies.imag)) < 1e-10


def test_classification_at_periodic_point_has_no_detached() -> None:
    result = spectral.loop_spectrum(symmetric(24, 1.0, (10,)))
    assert result.classification is not None
    assert SpectralTag.DETACHED not in result.classification
    right = result.eigenvalues[result.tagged(SpectralTag.RIGHT_LOOP)]
    assert np.all(right.real >= 0)


def test_large_eta_bound_states_are_detached() -> None:
    config = symmetric(50, 1e3, (20,))
    result = spectral.loop_spectrum(config)
    detached = result.eigenvalues[result.tagged(SpectralTag.DETACHED)]
    deep = result.eigenvalues[result.eigenvalues.imag < -100]
    assert deep.size == 2
    assert set(deep) <= set(detached)
    assert np.all(
        (np.abs(detached + 0.5j) < spectral.D_BOUND) | (detached.imag < -100)
    )


def test_imaginary_gap_open_away_from_periodic_point() -> None:
    result = spectral.loop_spectrum(symmetric(50, 1e-3, (20,)))
    assert spectral.imaginary_gap(result) < -1e-3


def test_imaginary_gap_without_loop() -> None:
    result = spectral.SpectrumResult(
        eigenvalues=np.array([-1j]), classification=(SpectralTag.DETACHED,)
    )
    with pytest.raises(AnalysisError, match="no loop-sector"):
        spectral.imaginary_gap(result)


def test_multiset_distance_pairs_optimally() -> None:
    first = np.array([0.0, 1.0, 2.0j])
    second = np.array([2.0j + 0.1, 0.0, 1.0])
    assert spectral.multiset_distance(first, second) == pytest.approx(0.1)


def test_multiset_distance_size_mismatch() -> None:
    with pytest.raises(AnalysisError, match="differ in size"):
        spectral.multiset_distance([0.0], [0.0, 1.0])


def test_group_levels_counts_multiplicity() -> None:
    levels = spectral.group_levels([1.0, 1.0 + 1e-9, 2.0])
    assert [level.multiplicity for level in levels] == [2, 1]


@pytest.mark.parametrize(
    ("rule", "key"),
    [
        (Selection.MAX_IM, lambda e: e.imag),
        (Selection.MIN_IM, lambda e: -e.imag),
        (Selection.MAX_RE, lambda e: e.real),
    ],
)
def test_select_eigenvalue(rule: Selection, key) -> None:
    result = spectral.loop_spectrum(symmetric(20, 1e-2, (8,)))
    index = spectral.select_eigenvalue(result, SpectralTag.RIGHT_LOOP, rule)
    right = result.eigenvalues[result.tagged(SpectralTag.RIGHT_LOOP)]
    assert key(result.eigenvalues[index]) == pytest.approx(max(key(e) for e in right))


def test_select_eigenvalue_small_re_on_left_loop() -> None:
    result = spectral.loop_spectrum(symmetric(20, 1e-2, (8,)))
    index = spectral.select_eigenvalue(
        result, SpectralTag.LEFT_LOOP, Selection.SMALL_RE
    )
    left = result.eigenvalues[result.tagged(SpectralTag.LEFT_LOOP)]
    expected = np.max(left.real[left.real < 0])
    assert result.eigenvalues[index].real == pytest.approx(expected)


def test_select_eigenvalue_missing_tag() -> None:
    result = spectral.loop_spectrum(symmetric(20, 1.0, (8,)))
    with pytest.raises(AnalysisError, match="DETACHED"):
        spectral.select_eigenvalue(result, SpectralTag.DETACHED, Selection.MAX_IM)


def test_size_sweep_approaches_loop() -> None:
    sweep = spectral.size_sweep(symmetric(12, 1.0, (6,)), [12, 24, 48])
    assert [config.impurities for config, _, _ in sweep] == [(6,), (12,), (24,)]
    distances = [distance for _, _, distance in sweep]
    assert distances[0] > distances[1] > distances[2]


def test_imaginary_gap_at_zero_eta() -> None:
    config = symmetric(20, 0.0, (10,))
    result = spectral.diagonalize(build_hamiltonian(config), precision=60)
    assert spectral.imaginary_gap(result) == pytest.approx(-0.25, abs=1e-6)
