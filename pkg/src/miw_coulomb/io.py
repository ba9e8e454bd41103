"""CSV/JSON serialisation of configurations, reports and run manifests.

Floats are written with 17 significant digits so every value round-trips.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import enum
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .model import SolveMeta, WorldConfiguration

POSITIONS_COLUMNS = ("n", "x_n")
DENSITY_COLUMNS = ("x", "p_empirical", "p_target")


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


def to_jsonable(obj):
    """Recursively convert dataclasses, enums and numpy values for ``json.dump``.

    Non-finite floats become strings (``"inf"``, ``"nan"``) to keep the output strict JSON.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    # float repr is the shortest string that round-trips (at most 17 digits)
    path.write_text(json.dumps(to_jsonable(obj), indent=2) + "\n")
    return path


def read_json(path: Path):
    return json.loads(Path(path).read_text())


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV file")
    return rows[0], rows[1:]


def configuration_dict(cfg: WorldConfiguration, validation=None) -> dict:
    out = {
        "n_worlds": cfg.n_worlds,
        "positions": cfg.positions,
        "x1_residual": cfg.x1_residual,
        "solve_meta": cfg.solve_meta,
    }
    if validation is not None:
        out["validation"] = {
            "passed": validation.passed,
            "checks": list(validation.checks),
        }
    return out


def write_positions_csv(path: Path, cfg: WorldConfiguration) -> Path:
    return write_csv(path, POSITIONS_COLUMNS,
                     ((i + 1, x) for i, x in enumerate(cfg.positions)))


def read_configuration(path: Path) -> WorldConfiguration:
    """Load positions from a CSV (``n,x_n``) or JSON (``positions`` key) file.

    Solver metadata stored in JSON is restored; CSV files carry positions only,
    so the boundary residual is recomputed from them.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = read_json(path)
        positions = [float(x) for x in data["positions"]]
        meta = data.get("solve_meta")
        if meta:
            meta = SolveMeta(
                iterations=int(meta["iterations"]),
                bracket=tuple(float(v) for v in meta["bracket"]),
                precision_mode=meta["precision_mode"],
                x1_interval=tuple(float(v) for v in meta["x1_interval"]),
                sign_changes=int(meta.get("sign_changes", 1)),
                resolution_limited=bool(meta.get("resolution_limited", False)),
                residual_floor=float(meta.get("residual_floor", 0.0)),
            )
        resid = data.get("x1_residual")
        return WorldConfiguration(
            np.array(positions),
            float(resid) if resid is not None else math.nan,
            meta or None,
        )
    header, rows = read_csv(path)
    if [h.strip() for h in header[:2]] != list(POSITIONS_COLUMNS):
        raise ValueError(f"{path}: expected header {','.join(POSITIONS_COLUMNS)}, got {header}")
    rows = sorted((int(r[0]), float(r[1])) for r in rows if r)
    return WorldConfiguration(np.array([x for _, x in rows]))


@dataclasses.dataclass
class RunManifest:
    """Provenance record written next to every output."""

    command: str
    argv: list[str]
    parameters: dict
    precision_mode: str
    inputs: list[str] = dataclasses.field(default_factory=list)
    outputs: list[str] = dataclasses.field(default_factory=list)
    version: str = __version__
    timestamp: str = dataclasses.field(
        default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    )

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        data = read_json(path)
        return cls(**data)
