"""Module for eigenstate profiles, fitted exponents and collapse checks."""

import dataclasses
import logging
import math

import numpy as np

from .core import spectral, transfer
from .core.config import RunConfig
from .core.exceptions import AnalysisError, NumericalError
from .core.lattice import LatticeConfig
from .core.spectral import Selection, SpectralTag
from .core.transfer import EigenstateProfile
from .output import RunOutput
from .plot_templates import templates

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ProfileSet:
    """Matched eigenstates of one selection rule across ring sizes."""

    selection: Selection
    profiles: tuple[EigenstateProfile, ...]
    collapse: float | None = None


def matched_profile(
    config: LatticeConfig, tag: SpectralTag, selection: Selection
) -> EigenstateProfile:
    """
    Return the eigenstate picked by a selection rule on one loop.

    The state is rebuilt from the transfer recursion when it applies and taken
    from the diagonalization otherwise. A fitted exponent is attached when the
    default window is usable.
    """
    result = spectral.loop_spectrum(config, want_vectors=True)
    index = spectral.select_eigenvalue(result, tag, selection)
    energy = complex(result.eigenvalues[index])
    profile: EigenstateProfile | None = None
    if config.kappa and config.eta > 0 and config.hopping == config.gamma:
        try:
            profile = transfer.reconstruct_eigenstate(energy, config)
        except NumericalError as error:
            logger.warning(
                "Transfer reconstruction failed, using eigenvector: %s", error
            )
    if profile is None:
        profile = transfer.profile_from_vector(result.vector(index), energy, config)
    try:
        return profile.with_fit()
    except AnalysisError as error:
        logger.warning("No exponent fitted for N=%d: %s", config.n_cells, error)
        return profile


def profile_sets(
    config: LatticeConfig,
    sizes: list[int],
    selections: list[Selection],
    tag: SpectralTag = SpectralTag.RIGHT_LOOP,
) -> list[ProfileSet]:
    """Build matched profiles for every selection and size."""
    resized = [config.with_size(n) for n in sizes]
    sets: list[ProfileSet] = []
    for selection in selections:
        profiles = tuple(matched_profile(c, tag, selection) for c in resized)
        collapse = (
            transfer.collapse_metric(list(profiles))
            if len(profiles) >= transfer.MIN_PROFILES
            else None
        )
        if collapse is not None:
            logger.info("Collapse metric for '%s': %.4f.", selection, collapse)
        sets.append(ProfileSet(selection, profiles, collapse))
    return sets


def _fit_columns(profile: EigenstateProfile) -> list[object]:
    fit = profile.lambda_fit
    analytic = transfer.lyapunov_values([profile.energy], profile.config)[0]
    if fit is None:
        return [math.nan, math.nan, float(analytic), math.nan, math.nan]
    return [
        fit.value,
        fit.stderr,
        float(analytic),
        fit.value * profile.config.n_cells,
        profile.xi if profile.xi is not None else math.inf,
    ]


def eigenstates(
    run: RunConfig,
    out: RunOutput,
    *,
    selections: list[Selection],
    sizes: list[int] | None = None,
    tag: SpectralTag = SpectralTag.RIGHT_LOOP,
) -> list[ProfileSet]:
    """Export profiles, exponents and collapse metrics of matched eigenstates."""
    sizes = sizes or [run.lattice.n_cells]
    sets = profile_sets(run.lattice, sizes, selections, tag)

    profile_rows: list[list[object]] = []
    fit_rows: list[list[object]] = []
    for profile_set in sets:
        for profile in profile_set.profiles:
            n = profile.config.n_cells
            p, q = np.abs(profile.amplitudes_ssh).T
            profile_rows.extend(
                [
                    n,
                    str(profile_set.selection),
                    cell,
                    float(x),
                    float(rho),
                    float(abs_q),
                    float(abs_p),
                ]
                for cell, x, rho, abs_q, abs_p in zip(
                    range(1, n + 1),
                    profile.coords,
                    profile.density,
                    q,
                    p,
                    strict=True,
                )
            )
            fit_rows.append(
                [
                    n,
                    str(profile_set.selection),
                    profile.energy.real,
                    profile.energy.imag,
                    *_fit_columns(profile),
                ]
            )
    out.csv(
        "profiles.csv",
        ["N [cells]", "selection", "n [cell]", "n_over_N", "rho", "abs_q", "abs_p"],
        profile_rows,
    )
    out.csv(
        "lyapunov.csv",
        [
            "N [cells]",
            "selection",
            "re_E [J]",
            "im_E [J]",
            "lambda_fit [1/cell]",
            "lambda_stderr [1/cell]",
            "lambda_analytic [1/cell]",
            "lambda_N",
            "xi [cells]",
        ],
        fit_rows,
    )
    if len(sizes) > 1:
        out.csv(
            "collapse.csv",
            ["selection", "collapse_l2"],
            [[str(s.selection), s.collapse] for s in sets],
        )
    out.text(
        "profiles.gp",
        templates.render(
            "profiles.gp.j2",
            {
                "stem": "profiles",
                "sizes": sizes,
                "selections": [str(s) for s in selections],
                "profiles_csv": "profiles.csv",
            },
        ),
    )
    return sets
