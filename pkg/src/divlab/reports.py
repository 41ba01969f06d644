"""Report bundles: tables, figures, and a rerun manifest.

A bundle is one experiment's complete output.  Tables are CSV files whose
cells are rendered with ``repr`` for floats, so a rerun with the same
config and seed reproduces them byte for byte.  The manifest carries the
resolved configuration, its hash, the seed, and package versions, and is
validated against :data:`REPORT_MANIFEST_SCHEMA` before anything is
written.  The bundle also writes ``config.txt``, the exact key-value file
that reproduces the run when passed back through ``--config``.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import platform
from pathlib import Path
from typing import Callable, Sequence

import jsonschema
import numpy as np

from .errors import InvalidDistribution

REPORT_MANIFEST_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "divlab report manifest",
    "type": "object",
    "required": ["experiment", "config_hash", "seed", "versions", "config", "tables", "figures"],
    "additionalProperties": False,
    "properties": {
        "experiment": {"type": "string", "minLength": 1},
        "config_hash": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "seed": {"type": "integer", "minimum": 0},
        "versions": {
            "type": "object",
            "required": ["python", "numpy", "divlab"],
            "additionalProperties": {"type": "string"},
        },
        "config": {
            "type": "object",
            "additionalProperties": {"type": "string"},
        },
        "tables": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "file", "columns"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "file": {"type": "string", "minLength": 1},
                    "columns": {
                        "type": "array",
                        "items": {"type": "string"},
                        "minItems": 1,
                    },
                },
            },
        },
        "figures": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "file"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "file": {"type": "string", "minLength": 1},
                },
            },
        },
    },
}


def format_cell(value) -> str:
    """Deterministic text for one CSV cell (repr round-trip for floats)."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def config_hash(experiment: str, seed: int, options: dict[str, str]) -> str:
    lines = [f"experiment = {experiment}", f"seed = {seed}"]
    lines += [f"{k} = {options[k]}" for k in sorted(options)]
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


@dataclasses.dataclass(frozen=True, eq=False)
class Table:
    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]


@dataclasses.dataclass(frozen=True, eq=False)
class Figure:
    name: str
    filename: str
    render: Callable[[Path], None]


@dataclasses.dataclass(eq=False)
class ReportBundle:
    """One experiment's tables, figures, and rerun manifest."""

    experiment: str
    seed: int
    options: dict[str, str]
    tables: list[Table] = dataclasses.field(default_factory=list)
    figures: list[Figure] = dataclasses.field(default_factory=list)

    def add_table(self, name: str, columns: Sequence[str], rows) -> None:
        if not columns:
            raise InvalidDistribution("a table needs at least one column")
        rows = tuple(tuple(r) for r in rows)
        for r in rows:
            if len(r) != len(columns):
                raise InvalidDistribution(f"row width mismatch in table {name!r}")
        self.tables.append(Table(name, tuple(columns), rows))

    def add_figure(self, name: str, filename: str, render: Callable[[Path], None]) -> None:
        self.figures.append(Figure(name, filename, render))

    def manifest(self) -> dict:
        from . import __version__

        return {
            "experiment": self.experiment,
            "config_hash": config_hash(self.experiment, self.seed, self.options),
            "seed": int(self.seed),
            "versions": {
                "python": platform.python_version(),
                "numpy": np.__version__,
                "divlab": __version__,
            },
            "config": dict(sorted(self.options.items())),
            "tables": [
                {
                    "name": t.name,
                    "file": f"tables/{t.name}.csv",
                    "columns": list(t.columns),
                }
                for t in self.tables
            ],
            "figures": [
                {"name": f.name, "file": f"figures/{f.filename}"} for f in self.figures
            ],
        }

    def write(self, out_dir) -> Path:
        """Validate the manifest, then write everything under ``out_dir``."""
        manifest = self.manifest()
        jsonschema.validate(manifest, REPORT_MANIFEST_SCHEMA)
        out = Path(out_dir)
        (out / "tables").mkdir(parents=True, exist_ok=True)
        if self.figures:
            (out / "figures").mkdir(parents=True, exist_ok=True)
        for t in self.tables:
            path = out / "tables" / f"{t.name}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(t.columns)
                for row in t.rows:
                    writer.writerow([format_cell(v) for v in row])
        for f in self.figures:
            f.render(out / "figures" / f.filename)
        config_lines = [f"experiment = {self.experiment}", f"seed = {self.seed}"]
        config_lines += [f"{k} = {self.options[k]}" for k in sorted(self.options)]
        (out / "config.txt").write_text("\n".join(config_lines) + "\n")
        manifest_path = out / "manifest.json"
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return manifest_path
