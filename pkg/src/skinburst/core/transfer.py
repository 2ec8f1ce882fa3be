"""Module for transfer factors, Lyapunov exponents and eigenstate profiles."""

import dataclasses
import itertools
import logging
import math

import numpy as np
import numpy.typing as npt
from scipy import stats

from .exceptions import (
    AnalysisError,
    IncompatibleConfigsError,
    NotAnEigenvalueError,
    SingularTransferError,
    WindowCrossesImpurityError,
    WindowTooSmallError,
    ZeroEtaError,
)
from .lattice import (
    Basis,
    ComplexArray,
    FloatArray,
    LatticeConfig,
    build_hamiltonian,
    to_ssh,
    validate_config,
)
from .spectral import (
    SINGULAR_TOLERANCE,
    SpectralTag,
    SpectrumResult,
    closure_residual,
    shifted_energies,
)

logger = logging.getLogger(__name__)

MIN_WINDOW = 10
WINDOW_TRIM = 0.1
CLOSURE_TOLERANCE = 1e-4
RESIDUAL_TOLERANCE = 1e-6
MIN_PROFILES = 2


@dataclasses.dataclass(frozen=True)
class LyapunovFit:
    """Least-squares decay rate of |q_n| over a window of cells."""

    value: float
    stderr: float
    window: tuple[int, int]


@dataclasses.dataclass(frozen=True)
class EigenstateProfile:
    """Eigenstate with its SSH amplitudes and unit-cell density."""

    energy: complex
    config: LatticeConfig
    amplitudes_ssh: ComplexArray
    state: ComplexArray
    lambda_fit: LyapunovFit | None = None

    @property
    def density(self) -> FloatArray:
        """Unit-cell density rho_n, summing to one."""
        weights = np.abs(self.state) ** 2
        return weights[0::2] + weights[1::2]

    @property
    def coords(self) -> FloatArray:
        """Normalized coordinates n/N."""
        n = self.config.n_cells
        return np.arange(1, n + 1, dtype=np.float64) / n

    @property
    def xi(self) -> float | None:
        """Localization length in unit cells."""
        if self.lambda_fit is None or self.lambda_fit.value == 0:
            return None
        return 1 / abs(self.lambda_fit.value)

    def with_fit(self, window: tuple[int, int] | None = None) -> "EigenstateProfile":
        """Return a copy carrying a fitted Lyapunov exponent."""
        return dataclasses.replace(self, lambda_fit=fit_lyapunov(self, window))


def _require_transfer(config: LatticeConfig) -> None:
    if config.hopping == 0 or config.coupling == 0:
        msg = "Transfer factors need nonzero t and J."
        raise SingularTransferError(msg)


def bulk_factor(energy: complex, config: LatticeConfig) -> complex:
    """Return the impurity-free transfer factor A(E)."""
    _require_transfer(config)
    e1, _ = shifted_energies(energy, config)
    return (e1 * e1 - config.coupling**2) / (2 * config.hopping * config.coupling)


def impurity_factor(energy: complex, config: LatticeConfig) -> complex:
    """Return the two-step transfer factor B(E, eta) across an impurity."""
    if config.eta == 0:
        msg = "Impurity factor is undefined at eta = 0."
        raise ZeroEtaError(msg)
    _require_transfer(config)
    e1, e2 = shifted_energies(energy, config)
    return (e1 * e2 - config.coupling**2) ** 2 / (
        2 * config.hopping * config.eta * config.coupling**2
    )


def lyapunov_conventional(config: LatticeConfig) -> float:
    """Return the energy-independent exponent ln|2t/eta| / N."""
    if config.eta == 0:
        msg = "Conventional exponent is undefined at eta = 0."
        raise ZeroEtaError(msg)
    return math.log(abs(2 * config.hopping / config.eta)) / config.n_cells


def lyapunov(energy: complex, config: LatticeConfig) -> float:
    """Return the energy-dependent exponent of all impurities together."""
    if config.kappa == 0:
        return 0.0
    e1, e2 = shifted_energies(energy, config)
    bulk = e1 * e1 - config.coupling**2
    across = e1 * e2 - config.coupling**2
    if abs(bulk) < SINGULAR_TOLERANCE or abs(across) < SINGULAR_TOLERANCE:
        msg = f"Lyapunov exponent is singular at E = {energy}."
        raise SingularTransferError(msg)
    energy_term = 2 * math.log(abs(across / bulk))
    return config.kappa * (lyapunov_conventional(config) + energy_term / config.n_cells)


def lyapunov_values(energies: npt.ArrayLike, config: LatticeConfig) -> FloatArray:
    """Evaluate the analytic exponent for many energies, NaN where undefined."""
    points = np.asarray(energies, dtype=np.complex128)
    values = np.full(points.size, np.nan)
    for i, energy in enumerate(points):
        try:
            values[i] = lyapunov(complex(energy), config)
        except (SingularTransferError, ZeroEtaError):
            continue
    return values


def annotate_lyapunov(result: SpectrumResult, config: LatticeConfig) -> SpectrumResult:
    """Fill analytic exponents, NaN where undefined."""
    values = lyapunov_values(result.eigenvalues, config)
    return dataclasses.replace(result, lyapunov_analytic=values)


def lyapunov_sign_changes(
    result: SpectrumResult, config: LatticeConfig
) -> dict[SpectralTag, int]:
    """Count sign changes of the analytic exponent around each loop."""
    exponents = lyapunov_values(result.eigenvalues, config)
    changes: dict[SpectralTag, int] = {}
    for tag, centre in (
        (SpectralTag.RIGHT_LOOP, config.coupling),
        (SpectralTag.LEFT_LOOP, -config.coupling),
    ):
        mask = result.tagged(tag) & np.isfinite(exponents)
        energies = result.eigenvalues[mask]
        angles = np.angle(energies - (centre - 1j * config.gamma))
        signs = np.sign(exponents[mask][np.argsort(angles)])
        signs = signs[signs != 0]
        changes[tag] = int(np.sum(signs != np.roll(signs, 1))) if signs.size else 0
    return changes


def _profile(
    energy: complex, config: LatticeConfig, phi: ComplexArray, state: ComplexArray
) -> EigenstateProfile:
    norm = float(np.linalg.norm(state))
    return EigenstateProfile(
        energy=energy,
        config=config,
        amplitudes_ssh=(phi / norm).reshape(config.n_cells, 2),
        state=state / norm,
    )


def profile_from_vector(
    vector: npt.ArrayLike, energy: complex, config: LatticeConfig
) -> EigenstateProfile:
    """Build a profile from a cross-stitch eigenvector."""
    state = np.asarray(vector, dtype=np.complex128)
    return _profile(energy, config, to_ssh(config.n_cells).apply(state), state)


def reconstruct_eigenstate(energy: complex, config: LatticeConfig) -> EigenstateProfile:
    """
    Rebuild an eigenstate from the transfer recursion.

    The q amplitude is seeded with 1 on the cell after the first impurity and
    propagated once around the ring; p follows from the Q-site equations. The
    recursion assumes t == gamma, where the mapped intracell hopping is
    unidirectional.
    """
    config = validate_config(config)
    if config.kappa and config.eta == 0:
        msg = "Eigenstates at eta = 0 are not reachable by transfer."
        raise ZeroEtaError(msg)
    if config.hopping != config.gamma:
        logger.warning(
            "Transfer recursion assumes t == gamma, got t=%g and gamma=%g.",
            config.hopping,
            config.gamma,
        )
    r_mag, r_ph = closure_residual(energy, config)
    if max(r_mag, r_ph) > CLOSURE_TOLERANCE:
        msg = f"E = {energy} misses the closure condition by {max(r_mag, r_ph):.3e}."
        raise NotAnEigenvalueError(msg)

    n = config.n_cells
    coupling = config.coupling
    losses = config.cell_losses()
    onsite = energy + 0.5j * losses
    intracell = config.cell_hoppings() + losses / 2
    seed = config.impurities[0] % n if config.kappa else 0

    q = np.zeros(n, dtype=np.complex128)
    q[seed] = 1.0
    for step in range(1, n):
        cell = (seed + step) % n
        previous = (cell - 1) % n
        denominator = intracell[cell] * coupling
        if denominator == 0:
            msg = f"Transfer into cell {cell + 1} is singular."
            raise SingularTransferError(msg)
        q[cell] = (onsite[previous] * onsite[cell] - coupling**2) / denominator
        q[cell] *= q[previous]
    p = np.roll(onsite * q, 1) / coupling

    phi = np.column_stack([p, q]).reshape(-1)
    state = to_ssh(n).adjoint().apply(phi)
    profile = _profile(energy, config, phi, state)

    h = build_hamiltonian(config, Basis.CROSS_STITCH).data
    residual = float(np.linalg.norm(h @ profile.state - energy * profile.state))
    if residual > RESIDUAL_TOLERANCE:
        msg = f"Reconstructed state at E = {energy} has residual {residual:.3e}."
        raise NotAnEigenvalueError(msg)
    return profile


def default_fit_window(config: LatticeConfig) -> tuple[int, int]:
    """Return the longest impurity-free arc trimmed at both ends."""
    n = config.n_cells
    if config.kappa == 0:
        start, end = 1, n
    else:
        arcs = [
            (m + 1, following - 1)
            for m, following in zip(
                config.impurities,
                [*config.impurities[1:], config.impurities[0] + n],
                strict=True,
            )
        ]
        start, end = max(arcs, key=lambda arc: arc[1] - arc[0])
    length = end - start + 1
    trim = min(round(WINDOW_TRIM * n), max(0, (length - MIN_WINDOW) // 2))
    return start + trim, end - trim


def fit_lyapunov(
    profile: EigenstateProfile, window: tuple[int, int] | None = None
) -> LyapunovFit:
    """Fit the decay rate of |q_n| with increasing n over a window."""
    config = profile.config
    n_a, n_b = window or default_fit_window(config)
    length = n_b - n_a + 1
    if length < MIN_WINDOW:
        msg = f"Fit window of {length} cells is shorter than {MIN_WINDOW}."
        raise WindowTooSmallError(msg)
    if length > config.n_cells:
        msg = f"Fit window of {length} cells wraps the whole ring."
        raise AnalysisError(msg)
    cells = np.arange(n_a, n_b + 1)
    crossed = [int(c) for c in cells if config.is_impurity(int(c))]
    if crossed:
        msg = f"Fit window ({n_a}, {n_b}) contains impurity cells {crossed}."
        raise WindowCrossesImpurityError(msg)

    q = np.abs(profile.amplitudes_ssh[(cells - 1) % config.n_cells, 1])
    if np.any(q == 0):
        msg = "Fit window contains vanishing amplitudes."
        raise AnalysisError(msg)
    fit = stats.linregress(cells.astype(np.float64), -np.log(q))
    return LyapunovFit(float(fit.slope), float(fit.stderr), (n_a, n_b))


def _window_masses(profile: EigenstateProfile, edges: FloatArray) -> FloatArray:
    n = profile.config.n_cells
    density = np.tile(profile.density, 2)
    cumulative = np.concatenate([[0.0], np.cumsum(density)])
    grid = np.arange(2 * n + 1, dtype=np.float64) / n
    masses = np.diff(np.interp(edges, grid, cumulative))
    return masses / np.sum(masses)


def collapse_metric(profiles: list[EigenstateProfile]) -> float:
    """
    Return the largest pairwise relative L2 distance of rescaled densities.

    Densities are compared on the default fit window of the smallest ring,
    expressed in n/N and resampled by cell mass onto that ring's cells.
    """
    if len(profiles) < MIN_PROFILES:
        msg = "Collapse needs at least two profiles."
        raise IncompatibleConfigsError(msg)
    reference = min(profiles, key=lambda profile: profile.config.n_cells)
    for profile in profiles:
        config = profile.config
        if config.kappa != reference.config.kappa or not np.allclose(
            config.impurity_fractions, reference.config.impurity_fractions
        ):
            msg = "Profiles have different impurity fractions."
            raise IncompatibleConfigsError(msg)

    n_a, n_b = default_fit_window(reference.config)
    edges = np.arange(n_a - 1, n_b + 1, dtype=np.float64) / reference.config.n_cells
    curves = [_window_masses(profile, edges) for profile in profiles]
    distance = 0.0
    for first, second in itertools.combinations(curves, 2):
        scale = max(np.linalg.norm(first), np.linalg.norm(second))
        distance = max(distance, float(np.linalg.norm(first - second) / scale))
    return distance
