import pathlib

import mpmath
import numpy as np

from src.skinburst.core.lattice import LatticeConfig

RESOURCES_DIR = pathlib.Path(__file__).parent / "resources"


def symmetric(
    n_cells: int, eta: float, impurities: tuple[int, ...] = ()
) -> LatticeConfig:
    """Ring at J = 1 and t = gamma = 1/2."""
    return LatticeConfig(
        n_cells=n_cells,
        coupling=1.0,
        hopping=0.5,
        gamma=0.5,
        eta=eta,
        impurities=impurities,
    )


def characteristic_roots(matrix: np.ndarray, dps: int = 60) -> np.ndarray:
    """
    Eigenvalues as roots of the characteristic polynomial.

    The coefficients come from the Faddeev-LeVerrier recursion evaluated in
    extended precision, independent of any eigen-solver.
    """
    with mpmath.workdps(dps):
        a = mpmath.matrix(matrix.tolist())
        n = a.rows
        identity = mpmath.eye(n)
        m = mpmath.zeros(n)
        coefficients = [mpmath.mpf(1)]
        for k in range(1, n + 1):
            m = a * m + coefficients[-1] * identity
            product = a * m
            trace = mpmath.fsum(product[i, i] for i in range(n))
            coefficients.append(-trace / k)
        roots = mpmath.polyroots(coefficients, maxsteps=400, extraprec=4 * dps)
    return np.array([complex(r) for r in roots])


def write_config(path: pathlib.Path, content: str) -> pathlib.Path:
    path.write_text(content)
    return path
