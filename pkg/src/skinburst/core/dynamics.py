"""Module for dissipative propagation, integrated loss and burst scans."""

import concurrent.futures
import dataclasses
import enum
import logging
import math

import numpy as np
import numpy.typing as npt
from scipy.integrate import simpson
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from .exceptions import (
    AnalysisError,
    BadInitialCellError,
    GridTooCoarseError,
    InvalidConfigError,
    NonFiniteStateError,
    SkinburstError,
    StepTooLargeError,
    TailTooFatError,
)
from .lattice import (
    Basis,
    ComplexArray,
    FloatArray,
    Hamiltonian,
    LatticeConfig,
    build_hamiltonian,
    pbc_distance,
)

logger = logging.getLogger(__name__)

DT_FACTOR = 0.5
DT_CAP = 0.02
STEP_BUDGET = 1.0
EPS_STOP = 1e-10
HORIZON_PER_CELL = 50.0
MONOTONE_TOLERANCE = 1e-9
NORM_TOLERANCE = 1e-12
CHUNK_STEPS = 1024
MIN_SCAN_POINTS = 21
SMOOTHING_WIDTH = 5
NEAR_ZERO = 0.2
PROMINENCE_FRACTION = 1e-3
INVERSE_CONTRAST = 2.0
BIMODAL_PEAKS = 2
BURST_NEIGHBOURHOOD = 5


class CurveShape(enum.StrEnum):
    """Shape of a dissipation curve versus ln eta."""

    LORENTZIAN_LIKE = "LORENTZIAN_LIKE"
    INVERSE_LORENTZIAN_LIKE = "INVERSE_LORENTZIAN_LIKE"
    BIMODAL = "BIMODAL"
    OTHER = "OTHER"


@dataclasses.dataclass(frozen=True)
class Controls:
    """Integrator settings; unset values are derived from the Hamiltonian."""

    dt: float | None = None
    t_max: float | None = None
    eps_stop: float = EPS_STOP
    sample_interval: float = 1.0

    def snapshot(self) -> dict[str, float | None]:
        """Return the settings under their configuration keys."""
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class StepPlan:
    """Resolved step size, step count and sampling stride."""

    dt: float
    n_steps: int
    stride: int


@dataclasses.dataclass(frozen=True)
class Trajectory:
    """Sampled states and survival probability of one propagation."""

    times: FloatArray
    states: ComplexArray
    survival: FloatArray
    dt: float
    monotone_violations: int = 0


@dataclasses.dataclass(frozen=True)
class DissipationProfile:
    """Integrated loss per unit cell with its truncation bookkeeping."""

    probabilities: FloatArray
    t_stop: float
    survival_times: FloatArray
    survival: FloatArray
    tail_bound: float
    tail_flagged: bool = False

    @property
    def normalization_defect(self) -> float:
        """Return |sum P_n + S(T_stop) - 1|."""
        return abs(float(np.sum(self.probabilities)) + self.tail_bound - 1.0)

    def at(self, cell: int) -> float:
        """Return P_n of a 1-based cell."""
        return float(self.probabilities[(cell - 1) % self.probabilities.size])


@dataclasses.dataclass(frozen=True)
class ScanPoint:
    """Outcome of one grid point of an eta scan."""

    ln_eta: float
    probabilities: FloatArray | None
    status: str
    tail_bound: float = math.nan


@dataclasses.dataclass(frozen=True)
class BurstScanResult:
    """Dissipation curves versus ln eta with their shape analysis."""

    ln_eta: FloatArray
    sites: tuple[int, ...]
    probabilities: FloatArray
    statuses: tuple[str, ...]
    shapes: tuple[CurveShape, ...]
    thresholds: tuple[float | None, ...]

    def curve(self, site: int) -> FloatArray:
        """Return P_site for every grid point, NaN where the point failed."""
        return self.probabilities[:, site - 1]


def max_row_sum(matrix: ComplexArray) -> float:
    """Return the max row sum of |H|, an upper bound of the spectral radius."""
    return float(np.max(np.sum(np.abs(matrix), axis=1)))


def plan_steps(controls: Controls, h: Hamiltonian) -> StepPlan:
    """Resolve the step size, horizon and sampling stride for a Hamiltonian."""
    radius = max_row_sum(h.data)
    if controls.dt is None:
        dt = DT_CAP if radius == 0 else min(DT_FACTOR / radius, DT_CAP)
    else:
        dt = controls.dt
    if dt <= 0:
        msg = f"Time step must be positive, got {dt}."
        raise InvalidConfigError(msg)
    if dt * radius > STEP_BUDGET:
        msg = f"Time step {dt} exceeds the stability budget {STEP_BUDGET / radius:.4g}."
        raise StepTooLargeError(msg)
    t_max = HORIZON_PER_CELL * h.n_cells if controls.t_max is None else controls.t_max
    n_steps = max(1, math.ceil(t_max / dt - 1e-9))
    stride = max(1, round(controls.sample_interval / dt))
    return StepPlan(dt, n_steps, stride)


def rk4_propagator(matrix: ComplexArray, dt: float) -> ComplexArray:
    """Return the one-step map of classical RK4 for i dpsi/dt = H psi."""
    z = -1j * dt * matrix
    term = np.eye(matrix.shape[0], dtype=np.complex128)
    total = term.copy()
    for order in range(1, 5):
        term = term @ z / order
        total += term
    return total


def initial_state(config: LatticeConfig, n0: int) -> ComplexArray:
    """Return the walker localized on sublattice A of cell n0."""
    if not 1 <= n0 <= config.n_cells:
        msg = f"Initial cell {n0} outside of 1..{config.n_cells}."
        raise BadInitialCellError(msg)
    psi = np.zeros(2 * config.n_cells, dtype=np.complex128)
    psi[2 * (n0 - 1)] = 1.0
    return psi


def _check_finite(survival: float, time: float) -> None:
    if not math.isfinite(survival):
        msg = f"State became non-finite at t = {time:.6g}."
        raise NonFiniteStateError(msg)


def propagate(
    config: LatticeConfig,
    psi0: npt.ArrayLike,
    controls: Controls | None = None,
    *,
    hamiltonian: Hamiltonian | None = None,
) -> Trajectory:
    """Integrate the walker until the time cap or until it is absorbed."""
    controls = controls or Controls()
    h = hamiltonian or build_hamiltonian(config, Basis.CROSS_STITCH)
    psi = np.array(psi0, dtype=np.complex128)
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1) > NORM_TOLERANCE:
        msg = f"Initial state has norm {norm}, expected 1."
        raise AnalysisError(msg)
    plan = plan_steps(controls, h)
    propagator = rk4_propagator(h.data, plan.dt)

    times, states, survival = [0.0], [psi.copy()], [norm**2]
    previous = norm**2
    violations = 0
    for step in range(1, plan.n_steps + 1):
        psi = propagator @ psi
        current = float(np.vdot(psi, psi).real)
        _check_finite(current, step * plan.dt)
        if current > previous + MONOTONE_TOLERANCE:
            violations += 1
        previous = current
        absorbed = current < controls.eps_stop
        if step % plan.stride == 0 or absorbed or step == plan.n_steps:
            times.append(step * plan.dt)
            states.append(psi.copy())
            survival.append(current)
        if absorbed:
            break
    if violations:
        logger.warning("Survival increased on %d steps.", violations)
    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        survival=np.array(survival),
        dt=plan.dt,
        monotone_violations=violations,
    )


def center_of_mass(trajectory: Trajectory, n0: int) -> FloatArray:
    """Return the density centre of mass measured around the ring from n0."""
    weights = np.abs(trajectory.states) ** 2
    density = weights[:, 0::2] + weights[:, 1::2]
    n = density.shape[1]
    offsets = (np.arange(1, n + 1) - n0 + n // 2) % n - n // 2
    return n0 + (density @ offsets) / np.sum(density, axis=1)


def dissipation_profile(
    config: LatticeConfig,
    n0: int,
    controls: Controls | None = None,
    *,
    strict: bool = False,
) -> DissipationProfile:
    """
    Integrate the loss absorbed by every unit cell.

    The loss rate 2 gamma_n |psi_n^B|^2 is accumulated with composite Simpson
    quadrature on the integrator grid, in chunks of CHUNK_STEPS intervals.
    Absorption is only checked after an even number of steps so the last
    chunk always closes.
    """
    controls = controls or Controls()
    h = build_hamiltonian(config, Basis.CROSS_STITCH)
    psi = initial_state(config, n0)
    plan = plan_steps(controls, h)
    n_steps = plan.n_steps + plan.n_steps % 2
    propagator = rk4_propagator(h.data, plan.dt)
    rates = 2 * h.site_losses()

    absorbed = np.zeros(h.dim)
    chunk = [rates * np.abs(psi) ** 2]
    times, survival = [0.0], [1.0]
    current, step = 1.0, 0
    for step in range(1, n_steps + 1):
        psi = propagator @ psi
        density = np.abs(psi) ** 2
        current = float(np.sum(density))
        _check_finite(current, step * plan.dt)
        chunk.append(rates * density)
        if len(chunk) == CHUNK_STEPS + 1:
            absorbed += simpson(np.array(chunk), dx=plan.dt, axis=0)
            chunk = [chunk[-1]]
        done = step % 2 == 0 and current < controls.eps_stop
        if step % plan.stride == 0 or done or step == n_steps:
            times.append(step * plan.dt)
            survival.append(current)
        if done:
            break
    if len(chunk) > 1:
        absorbed += simpson(np.array(chunk), dx=plan.dt, axis=0)

    profile = DissipationProfile(
        probabilities=absorbed[0::2] + absorbed[1::2],
        t_stop=step * plan.dt,
        survival_times=np.array(times),
        survival=np.array(survival),
        tail_bound=current,
        tail_flagged=current > controls.eps_stop,
    )
    logger.debug(
        "Dissipation run stopped at t = %.6g with defect %.3e.",
        profile.t_stop,
        profile.normalization_defect,
    )
    if profile.tail_flagged:
        msg = f"Survival {current:.3e} above {controls.eps_stop:.1e} at the time cap."
        if strict:
            raise TailTooFatError(msg, profile)
        logger.warning(msg)
    return profile


def burst_regions(config: LatticeConfig) -> tuple[tuple[int, int], ...]:
    """Return the burst pair (m, m + 1) of every impurity."""
    return tuple((m, m % config.n_cells + 1) for m in config.impurities)


def burst_pairs(
    profile: DissipationProfile, config: LatticeConfig
) -> dict[tuple[int, int], tuple[float, float]]:
    """Return (P_m, P_{m+1}) for every burst region."""
    return {
        (m, boundary): (profile.at(m), profile.at(boundary))
        for m, boundary in burst_regions(config)
    }


def dominant_burst(
    profile: DissipationProfile, config: LatticeConfig
) -> tuple[int, int]:
    """Return the burst region absorbing the most probability."""
    pairs = burst_pairs(profile, config)
    if not pairs:
        msg = "Lattice has no impurities."
        raise AnalysisError(msg)
    return max(pairs, key=lambda region: sum(pairs[region]))


def detect_bursts(
    profile: DissipationProfile,
    config: LatticeConfig,
    n0: int,
    width: int = BURST_NEIGHBOURHOOD,
) -> tuple[tuple[int, int], ...]:
    """
    Return the burst regions that show an edge burst.

    A region (m, m + 1) bursts when it lies more than ``width`` cells away from
    the initial cell and P_m + P_{m+1} exceeds the sum of every other adjacent
    pair within ``width`` cells on either side.
    """
    n = config.n_cells
    found: list[tuple[int, int]] = []
    for m, boundary in burst_regions(config):
        if min(pbc_distance(m, n0, n), pbc_distance(boundary, n0, n)) <= width:
            continue
        weight = profile.at(m) + profile.at(boundary)
        neighbours = [
            profile.at(m + shift) + profile.at(m + shift + 1)
            for shift in range(-width, width + 1)
            if abs(shift) > 1
        ]
        if weight > max(neighbours):
            found.append((m, boundary))
    return tuple(found)


def has_burst(profile: DissipationProfile, config: LatticeConfig, n0: int) -> bool:
    """Check whether any impurity shows an edge burst."""
    return bool(detect_bursts(profile, config, n0))


def classify_shape(ln_eta: npt.ArrayLike, values: npt.ArrayLike) -> CurveShape:
    """Classify a dissipation curve by its interior extrema after smoothing."""
    grid = np.asarray(ln_eta, dtype=np.float64)
    curve = np.asarray(values, dtype=np.float64)
    if grid.size < MIN_SCAN_POINTS:
        msg = f"Shape needs {MIN_SCAN_POINTS} grid points, got {grid.size}."
        raise GridTooCoarseError(msg)
    if not np.all(np.isfinite(curve)):
        return CurveShape.OTHER
    smooth = uniform_filter1d(curve, size=SMOOTHING_WIDTH, mode="nearest")
    span = float(np.ptp(smooth))
    if span == 0:
        return CurveShape.OTHER
    maxima, _ = find_peaks(smooth, prominence=PROMINENCE_FRACTION * span)
    minima, _ = find_peaks(-smooth, prominence=PROMINENCE_FRACTION * span)

    if maxima.size == BIMODAL_PEAKS:
        return CurveShape.BIMODAL
    if maxima.size == 1 and abs(grid[maxima[0]]) < NEAR_ZERO:
        return CurveShape.LORENTZIAN_LIKE
    if minima.size == 1 and maxima.size == 0 and abs(grid[minima[0]]) < NEAR_ZERO:
        floor = smooth[minima[0]]
        if min(smooth[0], smooth[-1]) >= INVERSE_CONTRAST * floor:
            return CurveShape.INVERSE_LORENTZIAN_LIKE
    return CurveShape.OTHER


def drop_threshold(
    ln_eta: npt.ArrayLike, values: npt.ArrayLike, fraction: float | None = None
) -> float | None:
    """
    Return the ln eta at which a dissipation curve stops rising and starts to drop.

    The onset is the positive-side maximum, refined by a parabola through the
    maximum and its two neighbours. Curves still rising at the end of the grid
    have no onset. Passing ``fraction`` switches to the first crossing below
    that fraction of the peak.
    """
    grid = np.asarray(ln_eta, dtype=np.float64)
    curve = np.asarray(values, dtype=np.float64)
    positive = np.flatnonzero(grid >= 0)
    if positive.size == 0:
        return None
    peak = int(positive[np.argmax(curve[positive])])
    if fraction is not None:
        return _crossing(grid, curve, peak, fraction)
    if peak in (0, grid.size - 1) or curve[peak - 1] > curve[peak]:
        return None
    window = slice(peak - 1, peak + 2)
    a, b, _ = np.polyfit(grid[window], curve[window], 2)
    if a >= 0:
        return float(grid[peak])
    return float(np.clip(-b / (2 * a), grid[peak - 1], grid[peak + 1]))


def _crossing(
    grid: FloatArray, curve: FloatArray, peak: int, fraction: float
) -> float | None:
    level = fraction * curve[peak]
    below = np.flatnonzero((grid > grid[peak]) & (curve < level))
    if below.size == 0:
        return None
    i = int(below[0])
    # Linear interpolation between the last point above and the first below.
    x0, x1 = grid[i - 1], grid[i]
    y0, y1 = curve[i - 1], curve[i]
    return float(x0 + (level - y0) * (x1 - x0) / (y1 - y0))


def _scan_point(task: tuple[LatticeConfig, int, Controls, float]) -> ScanPoint:
    config, n0, controls, ln_eta = task
    try:
        profile = dissipation_profile(config, n0, controls)
    except SkinburstError as error:
        logger.warning("Scan point ln eta = %.4g failed: %s", ln_eta, error)
        return ScanPoint(ln_eta, None, error.code)
    status = "tail_flagged" if profile.tail_flagged else "ok"
    return ScanPoint(ln_eta, profile.probabilities, status, profile.tail_bound)


def eta_scan(  # noqa: PLR0913
    config_template: LatticeConfig,
    lneta_grid: npt.ArrayLike,
    n0: int,
    monitored_sites: list[int],
    controls: Controls | None = None,
    workers: int = 1,
) -> BurstScanResult:
    """Run dissipation profiles over a grid of ln eta, optionally in parallel."""
    controls = controls or Controls()
    grid = np.asarray(lneta_grid, dtype=np.float64)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        msg = "Scan grid must be non-empty and strictly increasing."
        raise InvalidConfigError(msg)
    initial_state(config_template, n0)
    for site in monitored_sites:
        if not 1 <= site <= config_template.n_cells:
            msg = f"Monitored site {site} outside of 1..{config_template.n_cells}."
            raise InvalidConfigError(msg)

    tasks = [
        (config_template.with_eta(math.exp(x)), n0, controls, float(x)) for x in grid
    ]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            points = list(executor.map(_scan_point, tasks))
    else:
        points = [_scan_point(task) for task in tasks]

    probabilities = np.full((grid.size, config_template.n_cells), np.nan)
    for i, point in enumerate(points):
        if point.probabilities is not None:
            probabilities[i] = point.probabilities
    logger.info(
        "Scan finished: %d of %d points succeeded.",
        sum(point.probabilities is not None for point in points),
        grid.size,
    )

    shapes: list[CurveShape] = []
    thresholds: list[float | None] = []
    for site in monitored_sites:
        curve = probabilities[:, site - 1]
        shapes.append(
            classify_shape(grid, curve)
            if grid.size >= MIN_SCAN_POINTS
            else CurveShape.OTHER
        )
        thresholds.append(
            drop_threshold(grid, curve) if np.all(np.isfinite(curve)) else None
        )
    return BurstScanResult(
        ln_eta=grid,
        sites=tuple(monitored_sites),
        probabilities=probabilities,
        statuses=tuple(point.status for point in points),
        shapes=tuple(shapes),
        thresholds=tuple(thresholds),
    )
