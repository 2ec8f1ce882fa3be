"""Module for exporting spectra, limit spectra and size sweeps."""

import logging
import math

import numpy as np

from .core import spectral, transfer
from .core.config import RunConfig
from .core.lattice import Basis, Hamiltonian, build_hamiltonian
from .core.spectral import Limit, SpectralTag, SpectrumResult
from .output import RunOutput
from .plot_templates import templates

logger = logging.getLogger(__name__)

UNCLASSIFIED = "UNCLASSIFIED"
SPECTRUM_HEADER = [
    "re_E [J]",
    "im_E [J]",
    "tag",
    "r_mag",
    "r_ph [rad]",
    "lambda_analytic [1/cell]",
    "sign_changes",
]


def spectrum_rows(
    result: SpectrumResult, sign_changes: dict[SpectralTag, int] | None = None
) -> list[list[object]]:
    """Return one row per eigenvalue with its tag and analytic annotations."""
    sign_changes = sign_changes or {}
    rows: list[list[object]] = []
    for i, energy in enumerate(result.eigenvalues):
        tag = None if result.classification is None else result.classification[i]
        residual = (
            (math.nan, math.nan)
            if result.closure_residual is None
            else tuple(float(x) for x in result.closure_residual[i])
        )
        exponent = (
            math.nan
            if result.lyapunov_analytic is None
            else float(result.lyapunov_analytic[i])
        )
        changes = sign_changes.get(tag, math.nan) if tag is not None else math.nan
        rows.append(
            [
                float(energy.real),
                float(energy.imag),
                UNCLASSIFIED if tag is None else str(tag),
                *residual,
                exponent,
                changes,
            ]
        )
    return rows


def hamiltonian_rows(h: Hamiltonian) -> list[list[object]]:
    """Return (row, col, re, im) for every nonzero matrix element."""
    rows, cols = np.nonzero(h.data)
    return [
        [int(r), int(c), float(h.data[r, c].real), float(h.data[r, c].imag)]
        for r, c in zip(rows, cols, strict=True)
    ]


def dump_hamiltonians(run: RunConfig, out: RunOutput) -> None:
    """Write the ring Hamiltonian in both bases as element triplets."""
    for basis in Basis:
        name = f"hamiltonian_{basis.value.replace('-', '_')}.csv"
        out.csv(
            name,
            ["row", "col", "re [J]", "im [J]"],
            hamiltonian_rows(build_hamiltonian(run.lattice, basis)),
        )


def spectrum(  # noqa: PLR0913
    run: RunConfig,
    out: RunOutput,
    *,
    limit: Limit | None = None,
    classify: bool = False,
    precision: int | None = None,
    sizes: list[int] | None = None,
    dump_hamiltonian: bool = False,
) -> SpectrumResult:
    """Diagonalize the configured ring and export its spectrum."""
    config = run.lattice
    logger.info(
        "Diagonalizing N=%d, eta=%g, impurities=%s.",
        config.n_cells,
        config.eta,
        config.impurities,
    )
    h = build_hamiltonian(config)
    if dump_hamiltonian:
        dump_hamiltonians(run, out)
    result = spectral.diagonalize(h, precision=precision)
    sign_changes: dict[SpectralTag, int] | None = None
    if classify:
        result = spectral.classify_spectrum(result, config)
        if result.loop_mask().any():
            logger.info("Imaginary gap: %.6e.", spectral.imaginary_gap(result))
        sign_changes = transfer.lyapunov_sign_changes(result, config)
        for tag, count in sign_changes.items():
            logger.info("Lyapunov sign changes around %s: %d.", tag, count)
    result = transfer.annotate_lyapunov(
        spectral.annotate_closure(result, config), config
    )
    out.csv("spectrum.csv", SPECTRUM_HEADER, spectrum_rows(result, sign_changes))

    context: dict[str, object] = {
        "stem": "spectrum",
        "n_cells": config.n_cells,
        "eta": config.eta,
        "spectrum_csv": "spectrum.csv",
        "limit": limit,
        "limit_csv": None,
    }
    if limit is not None:
        levels = spectral.analytic_limit_spectrum(config, limit)
        out.csv(
            "limit.csv",
            ["re_E [J]", "im_E [J]", "multiplicity"],
            [
                [level.energy.real, level.energy.imag, level.multiplicity]
                for level in levels
            ],
        )
        context["limit_csv"] = "limit.csv"

    if sizes:
        sweep = spectral.size_sweep(config, sizes)
        out.csv(
            "sweep.csv",
            ["N [cells]", "loop_distance [J]", "imaginary_gap [J]"],
            [
                [resized.n_cells, distance, spectral.imaginary_gap(swept)]
                for resized, swept, distance in sweep
            ],
        )
    out.text("spectrum.gp", templates.render("spectrum.gp.j2", context))
    return result
