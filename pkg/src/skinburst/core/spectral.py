"""Module for complex spectra, closure residuals and loop classification."""

import cmath
import dataclasses
import enum
import logging
import math

import mpmath
import numpy as np
import numpy.typing as npt
import scipy.linalg
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import directed_hausdorff

from .exceptions import (
    AnalysisError,
    NoConvergenceError,
    SingularTransferError,
    ZeroEtaError,
)
from .lattice import (
    Basis,
    ComplexArray,
    FloatArray,
    Hamiltonian,
    LatticeConfig,
    build_hamiltonian,
)

logger = logging.getLogger(__name__)

SINGULAR_TOLERANCE = 1e-13
DEGENERACY_TOLERANCE = 1e-6
DELTA_LOOP = 1e-6
D_LOOP = 0.5
D_BOUND = 0.15
PBC_WINDOW = (0.5, 2.0)
LOOP_SAMPLES = 4096


class SpectralTag(enum.StrEnum):
    """Sector of an eigenvalue."""

    LEFT_LOOP = "LEFT_LOOP"
    RIGHT_LOOP = "RIGHT_LOOP"
    DETACHED = "DETACHED"


class Limit(enum.StrEnum):
    """Analytically known limits of the spectrum."""

    ETA_ZERO = "eta-zero"
    ETA_INF = "eta-inf"
    PBC = "pbc"


class Selection(enum.StrEnum):
    """Rule picking a representative eigenvalue on a loop."""

    MAX_IM = "max-im"
    MIN_IM = "min-im"
    MAX_RE = "max-re"
    SMALL_RE = "small-re"


@dataclasses.dataclass(frozen=True)
class LimitLevel:
    """Degenerate level of an analytic limit spectrum."""

    energy: complex
    multiplicity: int


@dataclasses.dataclass(frozen=True)
class SpectrumResult:
    """Eigenvalues with optional vectors, sectors and analytic annotations."""

    eigenvalues: ComplexArray
    right_eigenvectors: ComplexArray | None = None
    classification: tuple[SpectralTag, ...] | None = None
    closure_residual: FloatArray | None = None
    lyapunov_analytic: FloatArray | None = None

    def __len__(self) -> int:
        """Number of eigenvalues."""
        return len(self.eigenvalues)

    def tagged(self, *tags: SpectralTag) -> npt.NDArray[np.bool_]:
        """Return a mask of eigenvalues carrying one of the tags."""
        if self.classification is None:
            return np.ones(len(self), dtype=np.bool_)
        return np.array([tag in tags for tag in self.classification], dtype=np.bool_)

    def loop_mask(self) -> npt.NDArray[np.bool_]:
        """Return a mask of loop-sector eigenvalues."""
        return self.tagged(SpectralTag.LEFT_LOOP, SpectralTag.RIGHT_LOOP)

    def vector(self, index: int) -> ComplexArray:
        """Return the right eigenvector of one eigenvalue."""
        if self.right_eigenvectors is None:
            msg = "Spectrum was computed without eigenvectors."
            raise AnalysisError(msg)
        return self.right_eigenvectors[:, index]


def _eig_extended(
    matrix: ComplexArray, want_vectors: bool, precision: int
) -> tuple[ComplexArray, ComplexArray | None]:
    n = matrix.shape[0]
    with mpmath.workdps(precision):
        a = mpmath.matrix(matrix.tolist())
        try:
            if want_vectors:
                e, er = mpmath.eig(a, left=False, right=True)
            else:
                e = mpmath.eig(a, left=False, right=False)
                er = None
        except (RuntimeError, ZeroDivisionError) as error:
            msg = f"Extended-precision eigen-solver failed: {error}"
            raise NoConvergenceError(msg) from error
        values = np.array([complex(x) for x in e], dtype=np.complex128)
        if er is None:
            return values, None
        vectors = np.array(
            [[complex(er[i, j]) for j in range(n)] for i in range(n)],
            dtype=np.complex128,
        )
    return values, vectors / np.linalg.norm(vectors, axis=0)


def diagonalize(
    h: Hamiltonian | npt.ArrayLike,
    want_vectors: bool = False,
    precision: int | None = None,
) -> SpectrumResult:
    """
    Diagonalize a dense non-Hermitian matrix.

    Eigenvalues come back sorted by real then imaginary part. With ``precision``
    the solver runs in mpmath at that many decimal digits, which is needed when
    long Jordan chains make double precision scatter degenerate levels.
    """
    data = h.data if isinstance(h, Hamiltonian) else h
    matrix = np.asarray(data, dtype=np.complex128)
    if not np.all(np.isfinite(matrix)):
        msg = "Matrix has non-finite entries."
        raise NoConvergenceError(msg)

    if precision is not None:
        values, vectors = _eig_extended(matrix, want_vectors, precision)
    else:
        try:
            if want_vectors:
                values, vectors = scipy.linalg.eig(matrix)
            else:
                values, vectors = scipy.linalg.eigvals(matrix), None
        except (scipy.linalg.LinAlgError, ValueError) as error:
            msg = f"Eigen-solver did not converge: {error}"
            raise NoConvergenceError(msg) from error
    logger.debug("Diagonalized %d x %d matrix.", *matrix.shape)

    order = np.lexsort((values.imag, values.real))
    return SpectrumResult(
        eigenvalues=np.asarray(values[order], dtype=np.complex128),
        right_eigenvectors=None if vectors is None else vectors[:, order],
    )


def shifted_energies(
    energy: complex, config: LatticeConfig
) -> tuple[complex, complex]:
    """Return E1 = E + i gamma and E2 = E + i eta/2."""
    return energy + 1j * config.gamma, energy + 0.5j * config.eta


def closure_residual(energy: complex, config: LatticeConfig) -> tuple[float, float]:
    """Return the magnitude and phase residuals of the log-domain closure condition."""
    if config.kappa and config.eta == 0:
        msg = "Closure condition is undefined at eta = 0."
        raise ZeroEtaError(msg)
    if config.hopping == 0 or config.coupling == 0:
        msg = "Closure condition needs nonzero t and J."
        raise SingularTransferError(msg)
    e1, e2 = shifted_energies(energy, config)
    coupling_sq = config.coupling**2
    bulk = e1 * e1 - coupling_sq
    across = e1 * e2 - coupling_sq
    if abs(bulk) < SINGULAR_TOLERANCE or (
        config.kappa and abs(across) < SINGULAR_TOLERANCE
    ):
        msg = f"Transfer factor is singular at E = {energy}."
        raise SingularTransferError(msg)

    n, kappa = config.n_cells, config.kappa
    f = (n - 2 * kappa) * cmath.log(bulk) - (
        n * cmath.log(complex(config.coupling))
        + (n - kappa) * math.log(2 * config.hopping)
    )
    if kappa:
        f += 2 * kappa * cmath.log(across) - kappa * math.log(config.eta)
    phase = f.imag - 2 * math.pi * round(f.imag / (2 * math.pi))
    return abs(f.real), abs(phase)


def annotate_closure(result: SpectrumResult, config: LatticeConfig) -> SpectrumResult:
    """Fill closure residuals, NaN where the closure form is undefined."""
    residuals = np.full((len(result), 2), np.nan)
    for i, energy in enumerate(result.eigenvalues):
        try:
            residuals[i] = closure_residual(complex(energy), config)
        except (SingularTransferError, ZeroEtaError):
            continue
    return dataclasses.replace(result, closure_residual=residuals)


def group_levels(
    energies: npt.ArrayLike, tolerance: float = DEGENERACY_TOLERANCE
) -> tuple[LimitLevel, ...]:
    """Group energies closer than the tolerance into degenerate levels."""
    values = np.asarray(energies, dtype=np.complex128)
    values = values[np.lexsort((values.imag, values.real))]
    centres: list[complex] = []
    counts: list[int] = []
    for value in values:
        for i, centre in enumerate(centres):
            if abs(value - centre) < tolerance:
                counts[i] += 1
                break
        else:
            centres.append(complex(value))
            counts.append(1)
    return tuple(LimitLevel(e, c) for e, c in zip(centres, counts, strict=True))


def expand_levels(levels: tuple[LimitLevel, ...]) -> ComplexArray:
    """Return the energies of the levels repeated by multiplicity."""
    return np.array(
        [level.energy for level in levels for _ in range(level.multiplicity)],
        dtype=np.complex128,
    )


def pbc_energies(config: LatticeConfig) -> ComplexArray:
    """Return the 2N eigenvalues of the impurity-free ring."""
    theta = 2 * np.pi * np.arange(config.n_cells) / config.n_cells
    root = np.sqrt(
        config.coupling**2
        + 2 * config.hopping * config.coupling * np.exp(1j * theta)
    )
    return np.concatenate([-1j * config.gamma + root, -1j * config.gamma - root])


def analytic_limit_spectrum(
    config: LatticeConfig, limit: Limit
) -> tuple[LimitLevel, ...]:
    """Return the degenerate levels of an analytic limit spectrum."""
    if limit is Limit.PBC:
        return group_levels(pbc_energies(config))

    gamma, coupling = config.gamma, config.coupling
    bulk = config.n_cells - 2 * config.kappa
    energies = [coupling - 1j * gamma] * bulk + [-coupling - 1j * gamma] * bulk
    edge = 2 * config.kappa
    if limit is Limit.ETA_ZERO:
        root = cmath.sqrt(4 * coupling**2 - gamma**2)
        energies += [(root - 1j * gamma) / 2] * edge
        energies += [(-root - 1j * gamma) / 2] * edge
    else:
        energies += [-1j * gamma] * edge + [-0.5j * config.eta] * edge
    return group_levels(energies)


def pbc_loop(config: LatticeConfig, samples: int = LOOP_SAMPLES) -> ComplexArray:
    """Sample both branches of the impurity-free loop curve."""
    theta = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    root = np.sqrt(
        config.coupling**2
        + 2 * config.hopping * config.coupling * np.exp(1j * theta)
    )
    return np.concatenate([-1j * config.gamma + root, -1j * config.gamma - root])


def distance_to_pbc_loop(
    energies: npt.ArrayLike, config: LatticeConfig
) -> FloatArray:
    """Return the distance of each energy to the impurity-free loop curve."""
    values = np.asarray(energies, dtype=np.complex128)
    curve = pbc_loop(config)
    return np.min(np.abs(values[:, None] - curve[None, :]), axis=1)


def classify_spectrum(
    result: SpectrumResult,
    config: LatticeConfig,
    *,
    delta_loop: float = DELTA_LOOP,
    d_loop: float = D_LOOP,
    d_bound: float = D_BOUND,
) -> SpectrumResult:
    """Tag every eigenvalue as left loop, right loop or detached."""
    energies = result.eigenvalues
    sides = np.where(
        energies.real >= 0, SpectralTag.RIGHT_LOOP, SpectralTag.LEFT_LOOP
    )
    if config.kappa == 0 or PBC_WINDOW[0] < config.eta < PBC_WINDOW[1]:
        detached = np.zeros(len(energies), dtype=np.bool_)
    else:
        detached = (np.abs(energies.real) <= delta_loop) | (
            distance_to_pbc_loop(energies, config) > d_loop
        )
        if config.eta >= PBC_WINDOW[1]:
            detached |= np.abs(energies + 1j * config.gamma) < d_bound
            detached |= np.abs(energies + 0.5j * config.eta) < d_bound
    tags = tuple(
        SpectralTag.DETACHED if off else SpectralTag(side)
        for off, side in zip(detached, sides, strict=True)
    )
    logger.debug(
        "Classified %d eigenvalues, %d detached.", len(tags), int(np.sum(detached))
    )
    return dataclasses.replace(result, classification=tags)


def imaginary_gap(result: SpectrumResult) -> float:
    """Return the largest imaginary part over the loop sector."""
    loop = result.eigenvalues[result.loop_mask()]
    if loop.size == 0:
        msg = "Spectrum has no loop-sector eigenvalues."
        raise AnalysisError(msg)
    return float(np.max(loop.imag))


def multiset_distance(first: npt.ArrayLike, second: npt.ArrayLike) -> float:
    """Return the largest distance of the optimal pairing of two eigenvalue sets."""
    a = np.asarray(first, dtype=np.complex128)
    b = np.asarray(second, dtype=np.complex128)
    if a.shape != b.shape:
        msg = f"Multisets differ in size: {a.size} and {b.size}."
        raise AnalysisError(msg)
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))


def loop_hausdorff_distance(result: SpectrumResult, config: LatticeConfig) -> float:
    """Return the Hausdorff distance between loop eigenvalues and the PBC loop."""
    loop = result.eigenvalues[result.loop_mask()]
    curve = pbc_loop(config)
    points = np.column_stack([loop.real, loop.imag])
    reference = np.column_stack([curve.real, curve.imag])
    return max(
        directed_hausdorff(points, reference)[0],
        directed_hausdorff(reference, points)[0],
    )


def select_eigenvalue(
    result: SpectrumResult, tag: SpectralTag, rule: Selection
) -> int:
    """Return the index of the eigenvalue picked by a rule on one loop."""
    candidates = np.flatnonzero(result.tagged(tag))
    if candidates.size == 0:
        msg = f"No eigenvalue carries the tag '{tag}'."
        raise AnalysisError(msg)
    energies = result.eigenvalues[candidates]
    outward = -energies.real if tag is SpectralTag.LEFT_LOOP else energies.real
    if rule is Selection.MAX_IM:
        pick = int(np.argmax(energies.imag))
    elif rule is Selection.MIN_IM:
        pick = int(np.argmin(energies.imag))
    elif rule is Selection.MAX_RE:
        pick = int(np.argmax(outward))
    else:
        positive = np.where(outward > 0, outward, np.inf)
        pick = int(np.argmin(positive))
    return int(candidates[pick])


def loop_spectrum(
    config: LatticeConfig, want_vectors: bool = False, precision: int | None = None
) -> SpectrumResult:
    """Diagonalize a configuration and tag its sectors."""
    h = build_hamiltonian(config, Basis.CROSS_STITCH)
    return classify_spectrum(diagonalize(h, want_vectors, precision), config)


def size_sweep(
    config: LatticeConfig, sizes: list[int]
) -> list[tuple[LatticeConfig, SpectrumResult, float]]:
    """Diagonalize one configuration at several sizes with fixed impurity fractions."""
    sweep: list[tuple[LatticeConfig, SpectrumResult, float]] = []
    for n_cells in sizes:
        resized = config.with_size(n_cells)
        result = loop_spectrum(resized)
        distance = loop_hausdorff_distance(result, resized)
        logger.info("N = %d: loop distance to PBC curve %.3e.", n_cells, distance)
        sweep.append((resized, result, distance))
    return sweep
