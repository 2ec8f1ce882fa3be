"""Module for handling gnuplot script templates."""

import importlib.resources
from typing import Any

from jinja2 import Environment, FileSystemLoader, select_autoescape


def render(plot_template: str, context: dict[str, Any]) -> str:
    """Render a gnuplot script referencing the CSV files of a run."""
    loader = FileSystemLoader(str(importlib.resources.files(__package__)))
    env = Environment(
        loader=loader,
        autoescape=select_autoescape(),
        keep_trailing_newline=True,
    )
    return env.get_template(plot_template).render(context)
