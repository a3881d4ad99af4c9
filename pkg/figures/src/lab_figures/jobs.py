"""Figure job descriptions and input validation.

A job names the figure kind, the input results.csv files produced by the
adiabatic-lab CLI, and the output image path.  Jobs fail fast when an
input is missing or does not carry the columns documented for its
experiment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

FIGURE_KINDS = ("order-sweep", "bloch-trajectory", "bundle-magnitudes",
                "simplex-transport", "pump-links")


class JobInvalid(Exception):
    """The job file does not match the schema."""


class MissingInput(Exception):
    """An input CSV does not exist."""


class SchemaMismatch(Exception):
    """An input CSV lacks the columns its figure kind requires."""


JOB_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "inputs", "output"],
    "properties": {
        "kind": {"enum": list(FIGURE_KINDS)},
        "inputs": {"type": "array", "items": {"type": "string"},
                   "minItems": 1},
        "output": {"type": "string"},
        "style": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dpi": {"type": "integer", "minimum": 36, "maximum": 600},
                "title": {"type": "string"},
                "figsize": {"type": "array", "items": {"type": "number"},
                            "minItems": 2, "maxItems": 2},
            },
        },
    },
}

REQUIRED_COLUMNS = {
    "bloch-trajectory": {"epsilon", "s", "n_x", "n_y", "n_z",
                         "stat_x", "stat_y", "stat_z",
                         "n1_friction_x", "n1_friction_y", "n1_friction_z",
                         "n1_geom_x", "n1_geom_y", "n1_geom_z",
                         "n1_tunnel_x", "n1_tunnel_y", "n1_tunnel_z"},
    "bundle-magnitudes": {"init", "order", "part", "s", "comp", "re", "im",
                          "norm"},
    "simplex-transport": {"init", "order", "part", "s", "comp", "re", "im"},
    "pump-links": {"epsilon", "link_i", "link_j", "T_sim", "T_geom"},
}

# order sweeps accept any one of the value columns the CLI emits
ORDER_SWEEP_VALUE_COLUMNS = ("T_end", "measured", "sup_error", "abs_diff")


@dataclass
class FigureJob:
    kind: str
    inputs: list[Path]
    output: Path
    dpi: int = 150
    title: str | None = None
    figsize: tuple[float, float] | None = None
    frames: list[pd.DataFrame] = field(default_factory=list, repr=False)

    def load_inputs(self) -> list[pd.DataFrame]:
        frames = []
        for path in self.inputs:
            if not path.exists():
                raise MissingInput(f"input does not exist: {path}")
            frame = pd.read_csv(path)
            self._check_schema(frame, path)
            frames.append(frame)
        self.frames = frames
        return frames

    def _check_schema(self, frame: pd.DataFrame, path: Path) -> None:
        cols = set(frame.columns)
        if self.kind == "order-sweep":
            if "epsilon" not in cols or not any(
                    c in cols for c in ORDER_SWEEP_VALUE_COLUMNS):
                raise SchemaMismatch(
                    f"{path}: order-sweep needs 'epsilon' and one of "
                    f"{ORDER_SWEEP_VALUE_COLUMNS}, found {sorted(cols)}")
            return
        required = REQUIRED_COLUMNS[self.kind]
        missing = required - cols
        if missing:
            raise SchemaMismatch(f"{path}: missing columns {sorted(missing)}")


def load_job(path: str | Path) -> FigureJob:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise JobInvalid(f"cannot read job {path}: {exc}") from exc
    import jsonschema
    try:
        jsonschema.validate(raw, JOB_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise JobInvalid(f"job rejected: {exc.message}") from exc
    style = raw.get("style", {})
    base = path.parent
    inputs = [Path(p) if Path(p).is_absolute() else base / p
              for p in raw["inputs"]]
    out = Path(raw["output"])
    output = out if out.is_absolute() else base / out
    figsize = style.get("figsize")
    return FigureJob(kind=raw["kind"], inputs=inputs, output=output,
                     dpi=style.get("dpi", 150), title=style.get("title"),
                     figsize=tuple(figsize) if figsize else None)
