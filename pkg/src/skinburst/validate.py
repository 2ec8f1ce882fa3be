"""Module for running the reproduction checks end to end."""

import dataclasses
import enum
import functools
import logging
import math
import time
from collections.abc import Callable

import numpy as np
from scipy.integrate import simpson

from . import eigenstates
from .core import dynamics, spectral, transfer
from .core.dynamics import Controls, CurveShape
from .core.exceptions import ConfigError, SkinburstError
from .core.lattice import (
    Basis,
    LatticeConfig,
    build_hamiltonian,
    validate_config,
    verify_mapping,
)
from .core.spectral import Limit, Selection, SpectralTag
from .output import RunOutput

logger = logging.getLogger(__name__)

CheckResult = tuple[bool, str]

LIMIT_PRECISION = 110
LIMIT_TOLERANCE = 1e-6
CLOSURE_TOLERANCE = 1e-6
TANGENCY_TOLERANCE = 1e-10
GAP_MARGIN = -1e-3
LYAPUNOV_TOLERANCE = 0.05
MULTI_LYAPUNOV_TOLERANCE = 0.1
MIN_AGREEING_STATES = 10
SEPARATION_SIGMAS = 5.0
COLLAPSE_TOLERANCE = 0.05
SCALING_SPREAD = 0.1
NORMALIZATION_TOLERANCE = 1e-4
BOOKKEEPING_TOLERANCE = 1e-8
CONVERGENCE_RATIO = (12.0, 20.0)
NO_GAIN_TOLERANCE = 1e-10
RANDOM_CONFIGS = 25
SEED = 20240611
THRESHOLD_TOLERANCE = 0.4
EXPECTED_THRESHOLDS = {20: 0.6, 40: 0.68, 80: 1.7}
SCAN_GRID = np.linspace(-3.0, 3.0, 61)
BURST_START = 95


class Suite(enum.StrEnum):
    """Selection of checks to run."""

    QUICK = "quick"
    FULL = "full"


@dataclasses.dataclass(frozen=True)
class Criterion:
    """One named check with the suite it belongs to."""

    identifier: str
    suite: Suite
    check: Callable[[], CheckResult]


@dataclasses.dataclass(frozen=True)
class Outcome:
    """Result of one check."""

    identifier: str
    passed: bool
    seconds: float
    detail: str


def symmetric_config(
    n_cells: int, eta: float, impurities: tuple[int, ...]
) -> LatticeConfig:
    """Return a ring at J = 1 and t = gamma = 1/2."""
    return LatticeConfig(
        n_cells=n_cells,
        coupling=1.0,
        hopping=0.5,
        gamma=0.5,
        eta=eta,
        impurities=impurities,
    )


def check_limit_spectra() -> CheckResult:
    """Compare the eta = 0 spectrum with its degenerate levels."""
    config = symmetric_config(20, 0.0, (10,))
    result = spectral.diagonalize(
        build_hamiltonian(config), precision=LIMIT_PRECISION
    )
    expected = spectral.expand_levels(
        spectral.analytic_limit_spectrum(config, Limit.ETA_ZERO)
    )
    error = spectral.multiset_distance(expected, result.eigenvalues)
    return error < LIMIT_TOLERANCE, f"max error {error:.3e}"


def check_closure() -> CheckResult:
    """Check the closure residual of every loop eigenvalue."""
    worst = 0.0
    for eta in (1e-3, 1e3):
        for impurities in ((20,), (10, 20, 30, 40)):
            config = symmetric_config(50, eta, impurities)
            result = spectral.annotate_closure(spectral.loop_spectrum(config), config)
            if result.closure_residual is None:
                return False, "no residuals"
            residuals = result.closure_residual[result.loop_mask()]
            worst = max(worst, float(np.max(residuals)))
    return worst < CLOSURE_TOLERANCE, f"max residual {worst:.3e}"


def check_pbc_tangency() -> CheckResult:
    """Check tangency at the periodic point and the gap away from it."""
    pbc = spectral.diagonalize(build_hamiltonian(symmetric_config(48, 1.0, (20,))))
    top = float(np.max(pbc.eigenvalues.imag))
    gap = spectral.imaginary_gap(
        spectral.loop_spectrum(symmetric_config(50, 1e-3, (20,)))
    )
    passed = abs(top) < TANGENCY_TOLERANCE and gap < GAP_MARGIN
    return passed, f"max Im E at eta=1 {top:.3e}, gap at eta=1e-3 {gap:.3e}"


def _agreeing_states(config: LatticeConfig, tolerance: float) -> int:
    result = spectral.loop_spectrum(config)
    agreeing = 0
    for energy in result.eigenvalues[result.loop_mask()]:
        try:
            fit = transfer.fit_lyapunov(
                transfer.reconstruct_eigenstate(complex(energy), config)
            )
            analytic = transfer.lyapunov(complex(energy), config)
        except SkinburstError:
            continue
        if analytic != 0 and abs(fit.value - analytic) < tolerance * abs(analytic):
            agreeing += 1
    return agreeing


def check_lyapunov() -> CheckResult:
    """Compare fitted and analytic exponents for one and four impurities."""
    single = _agreeing_states(symmetric_config(50, 1e-3, (20,)), LYAPUNOV_TOLERANCE)
    multi = _agreeing_states(
        symmetric_config(50, 1e-3, (10, 20, 30, 40)), MULTI_LYAPUNOV_TOLERANCE
    )
    passed = min(single, multi) >= MIN_AGREEING_STATES
    return passed, f"agreeing states: {single} single, {multi} four impurities"


def check_anomalous_energy() -> CheckResult:
    """Check that the exponent differs between the top and bottom of a loop."""
    config = symmetric_config(50, 1e-3, (20,))
    top = eigenstates.matched_profile(config, SpectralTag.RIGHT_LOOP, Selection.MAX_IM)
    bottom = eigenstates.matched_profile(
        config, SpectralTag.RIGHT_LOOP, Selection.MIN_IM
    )
    if top.lambda_fit is None or bottom.lambda_fit is None:
        return False, "exponent could not be fitted"
    difference = abs(top.lambda_fit.value - bottom.lambda_fit.value)
    sigma = math.hypot(top.lambda_fit.stderr, bottom.lambda_fit.stderr)
    sigmas = math.inf if sigma == 0 else difference / sigma
    passed = difference > 0 and sigmas > SEPARATION_SIGMAS
    return passed, (
        f"lambda {top.lambda_fit.value:.5f} vs {bottom.lambda_fit.value:.5f}, "
        f"{sigmas:.3g} sigma"
    )


def check_collapse() -> CheckResult:
    """Check that matched profiles collapse under n/N rescaling."""
    config = symmetric_config(40, 1e-3, (16,))
    (profile_set,) = eigenstates.profile_sets(
        config, [40, 80, 160], [Selection.MAX_IM]
    )
    scaled = [
        p.lambda_fit.value * p.config.n_cells
        for p in profile_set.profiles
        if p.lambda_fit is not None
    ]
    if profile_set.collapse is None or len(scaled) != len(profile_set.profiles):
        return False, "profiles incomplete"
    spread = max(scaled) / min(scaled) - 1
    passed = profile_set.collapse < COLLAPSE_TOLERANCE and spread < SCALING_SPREAD
    return passed, f"L2 {profile_set.collapse:.4f}, lambda*N spread {spread:.3f}"


def check_single_burst() -> CheckResult:
    """Check the burst at the impurity boundary and its absence without impurity."""
    config = symmetric_config(100, math.exp(3.0), (40,))
    profile = dynamics.dissipation_profile(config, BURST_START)
    total = float(np.sum(profile.probabilities))
    bursts = dynamics.detect_bursts(profile, config, BURST_START)
    periodic = config.with_eta(1.0)
    flat = dynamics.has_burst(
        dynamics.dissipation_profile(periodic, BURST_START), periodic, BURST_START
    )
    gap = spectral.imaginary_gap(spectral.loop_spectrum(config))
    passed = (
        abs(total - 1) < NORMALIZATION_TOLERANCE
        and bursts == ((40, 41),)
        and not flat
        and gap < 0
    )
    return passed, (
        f"sum P {total:.8f}, P40 {profile.at(40):.4f}, P41 {profile.at(41):.4f}, "
        f"bursts {bursts}, burst at eta=1 {flat}, gap {gap:.3e}"
    )


def check_scan_shapes(workers: int) -> CheckResult:
    """Check the shapes of the eta scan curves around one impurity."""
    expected = {
        40: CurveShape.BIMODAL,
        41: CurveShape.INVERSE_LORENTZIAN_LIKE,
        50: CurveShape.LORENTZIAN_LIKE,
        80: CurveShape.LORENTZIAN_LIKE,
    }
    result = dynamics.eta_scan(
        symmetric_config(100, 1.0, (40,)),
        SCAN_GRID,
        BURST_START,
        list(expected),
        workers=workers,
    )
    found = dict(zip(result.sites, result.shapes, strict=True))
    detail = ", ".join(f"{site}: {shape}" for site, shape in found.items())
    return found == expected, detail


def _local_burst_maxima(profile: dynamics.DissipationProfile, m: int) -> bool:
    neighbors = max(profile.at(m - 1), profile.at(m + 2))
    return min(profile.at(m), profile.at(m + 1)) > neighbors


def check_hierarchy(workers: int) -> CheckResult:
    """Check the burst hierarchy and the ordering of drop thresholds."""
    impurities = (20, 40, 60, 80)
    config = symmetric_config(100, math.exp(1.4), impurities)
    profile = dynamics.dissipation_profile(config, BURST_START)
    dominant = dynamics.dominant_burst(profile, config)
    local = all(_local_burst_maxima(profile, m) for m in impurities)

    result = dynamics.eta_scan(
        config.with_eta(1.0),
        SCAN_GRID,
        BURST_START,
        list(EXPECTED_THRESHOLDS),
        workers=workers,
    )
    thresholds = dict(zip(result.sites, result.thresholds, strict=True))
    values = [thresholds[site] for site in EXPECTED_THRESHOLDS]
    ordered = all(v is not None for v in values) and all(
        a is not None and b is not None and a < b
        for a, b in zip(values, values[1:], strict=False)
    )
    for site, expected in EXPECTED_THRESHOLDS.items():
        found = thresholds[site]
        if found is None or abs(found - expected) > THRESHOLD_TOLERANCE:
            logger.warning(
                "Drop threshold at site %d is %s, expected about %.2f.",
                site,
                found,
                expected,
            )
    passed = dominant == (80, 81) and local and ordered
    return passed, f"dominant {dominant}, local maxima {local}, thresholds {values}"


def _random_config(rng: np.random.Generator) -> LatticeConfig | None:
    n_cells = int(rng.integers(6, 25))
    kappa = int(rng.integers(0, 3))
    impurities = tuple(int(m) for m in rng.choice(n_cells, kappa, replace=False) + 1)
    config = LatticeConfig(
        n_cells=n_cells,
        coupling=float(rng.uniform(0.5, 1.5)),
        hopping=float(rng.uniform(0.1, 1.0)),
        gamma=float(rng.uniform(0.1, 1.0)),
        eta=float(rng.uniform(0.0, 5.0)),
        impurities=impurities,
    )
    try:
        return validate_config(config)
    except ConfigError:
        return None


def _bookkeeping_error() -> tuple[float, int]:
    config = symmetric_config(10, 2.0, (4,))
    controls = Controls(dt=0.005, t_max=2.0, sample_interval=0.005)
    h = build_hamiltonian(config)
    trajectory = dynamics.propagate(
        config, dynamics.initial_state(config, 7), controls, hamiltonian=h
    )
    rates = 2 * h.site_losses()
    loss = (np.abs(trajectory.states) ** 2) @ rates
    errors = [
        abs(
            simpson(loss[k : k + 3], dx=trajectory.dt)
            - (trajectory.survival[k] - trajectory.survival[k + 2])
        )
        for k in range(0, len(loss) - 2, 2)
    ]
    return max(errors), trajectory.monotone_violations


def _convergence_ratio() -> float:
    config = symmetric_config(10, 2.0, (4,))
    psi0 = dynamics.initial_state(config, 7)
    finals = [
        dynamics.propagate(config, psi0, Controls(dt=dt, t_max=5.0)).states[-1]
        for dt in (0.1, 0.05, 0.025)
    ]
    coarse = float(np.linalg.norm(finals[0] - finals[1]))
    fine = float(np.linalg.norm(finals[1] - finals[2]))
    return coarse / fine


def check_properties() -> CheckResult:
    """Check mapping, loss bookkeeping, monotone survival, no gain and RK4 order."""
    rng = np.random.default_rng(SEED)
    worst_mapping = 0.0
    worst_gain = -math.inf
    for _ in range(RANDOM_CONFIGS):
        config = _random_config(rng)
        if config is None:
            continue
        worst_mapping = max(worst_mapping, verify_mapping(config))
        eigenvalues = spectral.diagonalize(
            build_hamiltonian(config, Basis.CROSS_STITCH)
        ).eigenvalues
        worst_gain = max(worst_gain, float(np.max(eigenvalues.imag)))
    bookkeeping, violations = _bookkeeping_error()
    ratio = _convergence_ratio()
    passed = (
        worst_gain <= NO_GAIN_TOLERANCE
        and bookkeeping < BOOKKEEPING_TOLERANCE
        and violations == 0
        and CONVERGENCE_RATIO[0] < ratio < CONVERGENCE_RATIO[1]
    )
    return passed, (
        f"mapping {worst_mapping:.3e}, max Im E {worst_gain:.3e}, "
        f"bookkeeping {bookkeeping:.3e}, increases {violations}, "
        f"convergence ratio {ratio:.2f}"
    )


def check_leftward_drift() -> CheckResult:
    """Check that a walker on the periodic ring drifts to lower cells."""
    config = symmetric_config(100, 1.0, (40,))
    start = 50
    trajectory = dynamics.propagate(
        config,
        dynamics.initial_state(config, start),
        Controls(t_max=12.0, sample_interval=1.0),
    )
    centre = dynamics.center_of_mass(trajectory, start)
    early = float(np.interp(2.0, trajectory.times, centre))
    late = float(np.interp(12.0, trajectory.times, centre))
    return late < early - 1, f"centre of mass {early:.3f} at t=2, {late:.3f} at t=12"


def criteria(workers: int = 1) -> list[Criterion]:
    """Return every check in reporting order."""
    return [
        Criterion("limit_spectra", Suite.QUICK, check_limit_spectra),
        Criterion("closure", Suite.QUICK, check_closure),
        Criterion("pbc_tangency", Suite.QUICK, check_pbc_tangency),
        Criterion("lyapunov", Suite.QUICK, check_lyapunov),
        Criterion("anomalous_energy", Suite.QUICK, check_anomalous_energy),
        Criterion("collapse", Suite.FULL, check_collapse),
        Criterion("single_burst", Suite.FULL, check_single_burst),
        Criterion(
            "scan_shapes", Suite.FULL, functools.partial(check_scan_shapes, workers)
        ),
        Criterion("hierarchy", Suite.FULL, functools.partial(check_hierarchy, workers)),
        Criterion("properties", Suite.QUICK, check_properties),
        Criterion("leftward_drift", Suite.QUICK, check_leftward_drift),
    ]


def run_suite(
    suite: Suite, workers: int = 1, only: set[str] | None = None
) -> list[Outcome]:
    """Run the checks of a suite; the full suite includes the quick one."""
    outcomes: list[Outcome] = []
    for criterion in criteria(workers):
        if suite is Suite.QUICK and criterion.suite is Suite.FULL:
            continue
        if only is not None and criterion.identifier not in only:
            continue
        logger.info("Running check '%s'.", criterion.identifier)
        start = time.perf_counter()
        try:
            passed, detail = criterion.check()
        except SkinburstError as error:
            passed, detail = False, f"{error.code}: {error}"
        seconds = time.perf_counter() - start
        if passed:
            logger.info("Check '%s' passed in %.1f s.", criterion.identifier, seconds)
        else:
            logger.error("Check '%s' failed: %s", criterion.identifier, detail)
        outcomes.append(Outcome(criterion.identifier, passed, seconds, detail))
    return outcomes


def validate(out: RunOutput, suite: Suite, workers: int = 1) -> bool:
    """Run a suite, write the report and return whether every check passed."""
    outcomes = run_suite(suite, workers)
    out.csv(
        "validation.csv",
        ["criterion", "passed", "seconds [s]", "detail"],
        [[o.identifier, o.passed, o.seconds, o.detail] for o in outcomes],
    )
    failed = [o.identifier for o in outcomes if not o.passed]
    if failed:
        logger.error("Failed checks: %s", ", ".join(failed))
    return not failed
