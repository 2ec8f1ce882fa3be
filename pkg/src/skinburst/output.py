"""Module for writing CSV tables, run manifests and error records."""

import csv
import dataclasses
import datetime
import hashlib
import json
import logging
import math
import pathlib
import sys
from collections.abc import Iterable, Sequence
from typing import Any

from . import __version__
from .core.exceptions import SkinburstError

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
ERROR_RECORD = "error.json"


def format_value(value: object) -> str:
    """Format a cell with a fixed, locale-independent representation."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.16e}"
    if value is None:
        return ""
    return str(value)


def digest(path: pathlib.Path) -> str:
    """Return the sha256 digest of a file."""
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclasses.dataclass(frozen=True)
class RunManifest:
    """Provenance of one command invocation."""

    command: str
    config: dict[str, Any]
    version: str
    started: str
    duration: float
    outputs: dict[str, str]


class RunOutput:
    """Output directory collecting every file one command writes."""

    def __init__(self, directory: pathlib.Path, command: str) -> None:
        directory.mkdir(parents=True, exist_ok=True)
        self.directory = directory
        self.command = command
        self.started = datetime.datetime.now(tz=datetime.UTC)
        self.files: list[pathlib.Path] = []

    def csv(
        self,
        name: str,
        header: Sequence[str],
        rows: Iterable[Sequence[object]],
    ) -> pathlib.Path:
        """Write a table whose first line is a '#' comment naming the columns."""
        path = self.directory / name
        with path.open(mode="w", newline="", encoding="utf-8") as f:
            f.write("# " + ",".join(header) + "\n")
            writer = csv.writer(f, lineterminator="\n")
            for row in rows:
                writer.writerow([format_value(value) for value in row])
        return self._track(path)

    def text(self, name: str, content: str) -> pathlib.Path:
        """Write a text file such as a plot script."""
        path = self.directory / name
        path.write_text(content, encoding="utf-8")
        return self._track(path)

    def _track(self, path: pathlib.Path) -> pathlib.Path:
        if path not in self.files:
            self.files.append(path)
        logger.info("Wrote '%s'.", path)
        return path

    def finish(self, config: dict[str, Any]) -> RunManifest:
        """Write the manifest naming and digesting every emitted file."""
        finished = datetime.datetime.now(tz=datetime.UTC)
        manifest = RunManifest(
            command=self.command,
            config=config,
            version=__version__,
            started=self.started.isoformat(),
            duration=(finished - self.started).total_seconds(),
            outputs={path.name: digest(path) for path in self.files},
        )
        path = self.directory / MANIFEST
        with path.open(mode="w", encoding="utf-8") as f:
            json.dump(dataclasses.asdict(manifest), f, indent=2, sort_keys=True)
            f.write("\n")
        logger.info("Wrote manifest '%s'.", path)
        return manifest


def error_record(error: Exception) -> dict[str, str]:
    """Return the machine-readable record of a failure."""
    code = error.code if isinstance(error, SkinburstError) else "error"
    return {"error": code, "message": str(error)}


def report_error(error: Exception, directory: pathlib.Path | None) -> None:
    """Write an error record to stderr and, when possible, to the output directory."""
    record = json.dumps(error_record(error), sort_keys=True)
    sys.stderr.write(record + "\n")
    if directory is None:
        return
    try:
        directory.mkdir(parents=True, exist_ok=True)
        (directory / ERROR_RECORD).write_text(record + "\n", encoding="utf-8")
    except OSError:
        logger.exception("Could not write error record to '%s'.", directory)
