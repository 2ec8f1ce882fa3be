"""Module for building the cross-stitch and mapped SSH Hamiltonians."""

import dataclasses
import enum
import functools
import logging
import math
from typing import Any

import numpy as np
import numpy.typing as npt

from .exceptions import (
    AdjacentImpuritiesError,
    BadSizeError,
    InvalidConfigError,
    MappingMismatchError,
    NegativeParameterError,
)

logger = logging.getLogger(__name__)

ComplexArray = npt.NDArray[np.complex128]
FloatArray = npt.NDArray[np.float64]

MIN_CELLS = 4
MIN_IMPURITY_DISTANCE = 2
MAPPING_TOLERANCE = 1e-12
# Sign of the +iJ/2 coupling from A_n to A_{n-1}; it fixes the drift direction.
DRIFT_SIGN = 1

U_BLOCK: ComplexArray = np.array([[1.0, -1.0j], [-1.0j, 1.0]]) / math.sqrt(2.0)


class Basis(enum.StrEnum):
    """Basis in which a Hamiltonian is written."""

    CROSS_STITCH = "cross-stitch"
    SSH = "ssh"


class Orientation(enum.StrEnum):
    """Direction of the cell rotation mapping cross-stitch onto SSH."""

    U = "U"
    U_DAGGER = "U_dagger"


def pbc_distance(first: int, second: int, n_cells: int) -> int:
    """Return the ring distance between two unit cells."""
    gap = abs(first - second) % n_cells
    return min(gap, n_cells - gap)


@dataclasses.dataclass(frozen=True)
class LatticeConfig:
    """
    Parameters of the lossy cross-stitch ring with impurities.

    Fields follow the configuration keys: ``n_cells`` is N, ``coupling`` is the
    intercell hopping J, ``hopping`` the bulk intracell hopping t, ``gamma`` the
    bulk half-loss rate and ``eta`` the impurity strength. Impurity cells are
    1-based.
    """

    n_cells: int
    coupling: float
    hopping: float
    gamma: float
    eta: float
    impurities: tuple[int, ...] = ()

    @property
    def kappa(self) -> int:
        """Number of impurities."""
        return len(self.impurities)

    @property
    def impurity_fractions(self) -> tuple[float, ...]:
        """Impurity positions as fractions of the ring size."""
        return tuple(m / self.n_cells for m in self.impurities)

    def is_impurity(self, cell: int) -> bool:
        """Check whether a 1-based cell hosts an impurity."""
        return ((cell - 1) % self.n_cells) + 1 in self.impurities

    def cell_hoppings(self) -> FloatArray:
        """Intracell hopping t_n for every cell."""
        values = np.full(self.n_cells, self.hopping, dtype=np.float64)
        for m in self.impurities:
            values[m - 1] = self.eta / 2
        return values

    def cell_losses(self) -> FloatArray:
        """Loss rate gamma_n on the B site of every cell."""
        values = np.full(self.n_cells, 2 * self.gamma, dtype=np.float64)
        for m in self.impurities:
            values[m - 1] = self.eta
        return values

    def with_eta(self, eta: float) -> "LatticeConfig":
        """Return a copy with another impurity strength."""
        return dataclasses.replace(self, eta=eta)

    def with_size(self, n_cells: int) -> "LatticeConfig":
        """Return a copy on another ring size with impurities at the same fractions."""
        impurities: list[int] = []
        for m in self.impurities:
            scaled = m * n_cells / self.n_cells
            if not float(scaled).is_integer():
                msg = (
                    f"Impurity at cell {m} of {self.n_cells} has no integer "
                    f"position on a ring of {n_cells} cells."
                )
                raise InvalidConfigError(msg)
            impurities.append(int(scaled))
        return dataclasses.replace(
            self, n_cells=n_cells, impurities=tuple(impurities)
        )

    def snapshot(self) -> dict[str, Any]:
        """Return the parameters under their configuration keys."""
        return {
            "N": self.n_cells,
            "J": self.coupling,
            "t": self.hopping,
            "gamma": self.gamma,
            "eta": self.eta,
            "impurities": list(self.impurities),
        }


def validate_config(config: LatticeConfig) -> LatticeConfig:
    """Return the configuration with sorted impurities if it is valid."""
    if config.n_cells < MIN_CELLS:
        msg = f"Ring needs at least {MIN_CELLS} cells, got {config.n_cells}."
        raise BadSizeError(msg)
    values = {
        "J": config.coupling,
        "t": config.hopping,
        "gamma": config.gamma,
        "eta": config.eta,
    }
    for name, value in values.items():
        if not math.isfinite(value):
            msg = f"Parameter '{name}' must be finite, got {value}."
            raise InvalidConfigError(msg)
    for name in ("t", "gamma", "eta"):
        if values[name] < 0:
            msg = f"Parameter '{name}' must be nonnegative, got {values[name]}."
            raise NegativeParameterError(msg)

    impurities = tuple(sorted(config.impurities))
    for m in impurities:
        if not 1 <= m <= config.n_cells:
            msg = f"Impurity cell {m} outside of 1..{config.n_cells}."
            raise BadSizeError(msg)
    for i, first in enumerate(impurities):
        for second in impurities[i + 1 :]:
            if pbc_distance(first, second, config.n_cells) < MIN_IMPURITY_DISTANCE:
                msg = f"Impurities {first} and {second} violate the exclusion distance."
                raise AdjacentImpuritiesError(msg)
    if 2 * len(impurities) > config.n_cells - 1:
        msg = f"{len(impurities)} impurities do not fit {config.n_cells} cells."
        raise BadSizeError(msg)
    return dataclasses.replace(config, impurities=impurities)


@dataclasses.dataclass(frozen=True)
class BlockUnitary:
    """Cell rotation repeated on every unit cell of the interleaved basis."""

    n_cells: int
    block: ComplexArray = dataclasses.field(default_factory=U_BLOCK.copy)

    @property
    def dim(self) -> int:
        """Dimension of the full matrix."""
        return 2 * self.n_cells

    def matrix(self) -> ComplexArray:
        """Return the dense block-diagonal matrix."""
        return np.kron(np.eye(self.n_cells), self.block).astype(np.complex128)

    def adjoint(self) -> "BlockUnitary":
        """Return the inverse rotation."""
        return BlockUnitary(self.n_cells, self.block.conj().T)

    def apply(self, vector: npt.ArrayLike) -> ComplexArray:
        """Rotate a state vector cell by cell."""
        cells = np.asarray(vector, dtype=np.complex128).reshape(self.n_cells, 2)
        return (cells @ self.block.T).reshape(-1)


def rotation(n_cells: int) -> BlockUnitary:
    """Return the cell rotation for a ring of n_cells."""
    if n_cells < 1:
        msg = f"Rotation needs at least one cell, got {n_cells}."
        raise BadSizeError(msg)
    return BlockUnitary(n_cells)


@dataclasses.dataclass(frozen=True)
class Hamiltonian:
    """Dense Hamiltonian with interleaved (A_n, B_n) or (P_n, Q_n) ordering."""

    basis: Basis
    data: ComplexArray
    orientation: Orientation | None = None

    def __post_init__(self) -> None:
        """Freeze the matrix."""
        self.data.setflags(write=False)

    @property
    def dim(self) -> int:
        """Matrix dimension 2N."""
        return int(self.data.shape[0])

    @property
    def n_cells(self) -> int:
        """Number of unit cells."""
        return self.dim // 2

    def loss_operator(self) -> ComplexArray:
        """Return -(H - H^dagger)/(2i), positive semidefinite for a lossy lattice."""
        return -(self.data - self.data.conj().T) / 2j

    def site_losses(self) -> FloatArray:
        """Return the onsite loss rate of every site."""
        return -np.diag(self.data).imag.astype(np.float64)


def _cross_stitch_matrix(config: LatticeConfig) -> ComplexArray:
    n = config.n_cells
    coupling = config.coupling
    cells = np.arange(n)
    a = 2 * cells
    b = a + 1
    a_next = a[(cells + 1) % n]
    b_next = b[(cells + 1) % n]
    data = np.zeros((2 * n, 2 * n), dtype=np.complex128)

    drift = DRIFT_SIGN * 0.5j * coupling
    data[a, a_next] += -drift
    data[a_next, a] += drift
    data[b, b_next] += drift
    data[b_next, b] += -drift
    data[a, b_next] += coupling / 2
    data[b_next, a] += coupling / 2
    data[b, a_next] += coupling / 2
    data[a_next, b] += coupling / 2

    hoppings = config.cell_hoppings()
    data[a, b] += hoppings
    data[b, a] += hoppings
    data[b, b] += -1j * config.cell_losses()
    return data


def _ssh_matrix(config: LatticeConfig) -> ComplexArray:
    n = config.n_cells
    cells = np.arange(n)
    p = 2 * cells
    q = p + 1
    p_next = p[(cells + 1) % n]
    data = np.zeros((2 * n, 2 * n), dtype=np.complex128)

    hoppings = config.cell_hoppings()
    losses = config.cell_losses()
    data[p, q] += hoppings + losses / 2
    data[q, p] += hoppings - losses / 2
    data[p, p] += -0.5j * losses
    data[q, q] += -0.5j * losses
    data[q, p_next] += config.coupling
    data[p_next, q] += config.coupling
    return data


@functools.cache
def mapping_orientation() -> Orientation:
    """Determine which rotation direction turns the cross-stitch into the SSH form."""
    reference = LatticeConfig(
        n_cells=5, coupling=1.3, hopping=0.7, gamma=0.4, eta=1.7, impurities=(2,)
    )
    cross = _cross_stitch_matrix(reference)
    ssh = _ssh_matrix(reference)
    u = rotation(reference.n_cells).matrix()
    candidates = {
        Orientation.U: u @ cross @ u.conj().T,
        Orientation.U_DAGGER: u.conj().T @ cross @ u,
    }
    for orientation, rotated in candidates.items():
        deviation = float(np.max(np.abs(rotated - ssh)))
        if deviation < MAPPING_TOLERANCE:
            logger.debug("Mapping orientation resolved to '%s'.", orientation)
            return orientation
    msg = "Neither rotation direction maps the cross-stitch lattice onto SSH."
    raise MappingMismatchError(msg)


def to_ssh(n_cells: int) -> BlockUnitary:
    """Return the rotation C taking cross-stitch amplitudes to SSH amplitudes."""
    u = rotation(n_cells)
    return u if mapping_orientation() is Orientation.U else u.adjoint()


def build_hamiltonian(
    config: LatticeConfig, basis: Basis = Basis.CROSS_STITCH
) -> Hamiltonian:
    """Build the Hamiltonian of a configuration in the requested basis."""
    config = validate_config(config)
    if basis is Basis.CROSS_STITCH:
        return Hamiltonian(basis, _cross_stitch_matrix(config))
    return Hamiltonian(basis, _ssh_matrix(config), mapping_orientation())


def verify_mapping(config: LatticeConfig) -> float:
    """Return the largest deviation between C H_cross C^dagger and H_ssh."""
    cross = build_hamiltonian(config, Basis.CROSS_STITCH)
    ssh = build_hamiltonian(config, Basis.SSH)
    c = to_ssh(config.n_cells).matrix()
    deviation = float(np.max(np.abs(c @ cross.data @ c.conj().T - ssh.data)))
    if deviation > MAPPING_TOLERANCE:
        msg = f"Mapped Hamiltonian deviates by {deviation:.3e} from the SSH form."
        raise MappingMismatchError(msg)
    return deviation
