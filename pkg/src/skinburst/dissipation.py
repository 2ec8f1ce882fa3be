"""Module for exporting dissipation profiles and eta scans."""

import logging

import numpy as np

from .core import dynamics
from .core.config import RunConfig
from .core.dynamics import BurstScanResult, DissipationProfile
from .core.exceptions import InvalidConfigError
from .core.lattice import LatticeConfig
from .output import RunOutput
from .plot_templates import templates

logger = logging.getLogger(__name__)


def require_n0(run: RunConfig, n0: int | None) -> int:
    """Return the initial cell from the command line or the configuration."""
    resolved = n0 if n0 is not None else run.n0
    if resolved is None:
        msg = "Initial cell 'n0' is neither configured nor given."
        raise InvalidConfigError(msg)
    return resolved


def monitored_sites(config: LatticeConfig, sites: tuple[int, ...]) -> list[int]:
    """Return the configured sites, or the burst cells when none are given."""
    if sites:
        return list(sites)
    return sorted({cell for pair in dynamics.burst_regions(config) for cell in pair})


def dissipation(
    run: RunConfig, out: RunOutput, *, n0: int, strict: bool = False
) -> DissipationProfile:
    """Propagate one walker and export its dissipation profile."""
    config = run.lattice
    logger.info("Propagating walker from cell %d on %d cells.", n0, config.n_cells)
    profile = dynamics.dissipation_profile(config, n0, run.controls, strict=strict)
    logger.info(
        "Absorbed %.10f by t = %.4g, tail bound %.3e.",
        float(np.sum(profile.probabilities)),
        profile.t_stop,
        profile.tail_bound,
    )
    out.csv(
        "dissipation.csv",
        ["n [cell]", "P_n"],
        [[n, float(p)] for n, p in enumerate(profile.probabilities, start=1)],
    )
    out.csv(
        "survival.csv",
        ["t [1/J]", "S"],
        [
            [float(t), float(s)]
            for t, s in zip(profile.survival_times, profile.survival, strict=True)
        ],
    )
    pairs = dynamics.burst_pairs(profile, config)
    if pairs:
        found = dynamics.detect_bursts(profile, config, n0)
        out.csv(
            "bursts.csv",
            ["m [cell]", "m_next [cell]", "P_m", "P_m_next", "burst"],
            [
                [m, nxt, p_m, p_next, (m, nxt) in found]
                for (m, nxt), (p_m, p_next) in pairs.items()
            ],
        )
        logger.info("Burst regions: %s.", list(found) or "none")
        logger.info(
            "Dominant burst region: %s.", dynamics.dominant_burst(profile, config)
        )
    out.text(
        "dissipation.gp",
        templates.render(
            "dissipation.gp.j2",
            {
                "stem": "dissipation",
                "n0": n0,
                "n_cells": config.n_cells,
                "impurities": config.impurities,
                "dissipation_csv": "dissipation.csv",
            },
        ),
    )
    return profile


def scan(
    run: RunConfig, out: RunOutput, *, n0: int, workers: int = 1
) -> BurstScanResult:
    """Run an eta scan and export curves, pair curves and shape summary."""
    config = run.lattice
    sites = monitored_sites(config, run.scan.sites)
    logger.info(
        "Scanning ln eta over %d points with %d workers.", run.scan.steps, workers
    )
    result = dynamics.eta_scan(
        config, run.scan.grid(), n0, sites, run.controls, workers=workers
    )
    out.csv(
        "scan.csv",
        ["ln_eta", "site [cell]", "P", "status"],
        [
            [float(x), site, float(result.curve(site)[i]), result.statuses[i]]
            for i, x in enumerate(result.ln_eta)
            for site in sites
        ],
    )
    out.csv(
        "summary.csv",
        ["site [cell]", "shape", "drop_threshold [ln eta]"],
        [
            [site, str(shape), threshold]
            for site, shape, threshold in zip(
                result.sites, result.shapes, result.thresholds, strict=True
            )
        ],
    )
    regions = dynamics.burst_regions(config)
    if regions:
        out.csv(
            "pairs.csv",
            ["ln_eta", "m [cell]", "P_m", "P_m_next"],
            [
                [
                    float(x),
                    m,
                    float(result.curve(m)[i]),
                    float(result.curve(nxt)[i]),
                ]
                for i, x in enumerate(result.ln_eta)
                for m, nxt in regions
            ],
        )
    out.text(
        "scan.gp",
        templates.render(
            "scan.gp.j2",
            {"stem": "scan", "n0": n0, "sites": sites, "scan_csv": "scan.csv"},
        ),
    )
    for site, shape, threshold in zip(
        result.sites, result.shapes, result.thresholds, strict=True
    ):
        logger.info("Site %d: %s, drop threshold %s.", site, shape, threshold)
    return result
