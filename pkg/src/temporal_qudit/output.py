"""Result tables: CSV with a commented metadata header and an optional JSON sidecar."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__


def format_value(x: float | int) -> str:
    """Shortest round-trip text for ``x``; integers stay integral."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


@dataclass(frozen=True)
class ResultTable:
    """Rectangular table of real values with named, unit-tagged columns."""

    columns: tuple[str, ...]
    units: tuple[str, ...]
    rows: tuple[tuple[float | int, ...], ...] = ()
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if len(self.units) != len(self.columns):
            raise ValueError("one unit per column is required")
        for i, r in enumerate(self.rows):
            if len(r) != len(self.columns):
                raise ValueError(f"row {i} has {len(r)} values for {len(self.columns)} columns")

    def column(self, name: str) -> list[float | int]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        lines = [f"# {k}: {_meta_text(v)}" for k, v in self.metadata.items()]
        lines.append("# units: " + ",".join(self.units))
        lines.append(",".join(self.columns))
        lines.extend(",".join(format_value(v) for v in r) for r in self.rows)
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        tree = {
            "metadata": self.metadata,
            "columns": [{"name": c, "unit": u} for c, u in zip(self.columns, self.units)],
            "rows": [list(r) for r in self.rows],
        }
        return json.dumps(tree, indent=2, sort_keys=True) + "\n"

    def write(self, path: str | Path, *, sidecar: bool = False) -> list[Path]:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        written = [path]
        if sidecar:
            side = path.with_suffix(".json")
            side.write_text(self.to_json())
            written.append(side)
        return written


def _meta_text(v: Any) -> str:
    if isinstance(v, str):
        return v
    return json.dumps(v, sort_keys=True, separators=(",", ":"))


def read_csv(text: str) -> ResultTable:
    """Parse the output of :meth:`ResultTable.to_csv`; metadata values stay as text."""
    meta: dict[str, Any] = {}
    units: Sequence[str] | None = None
    body = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            if key == "units":
                units = value.split(",") if value else []
            else:
                meta[key] = value
        elif line:
            body.append(line)
    if units is None:
        raise ValueError("missing units line")
    if not body:
        # A table without columns has an empty header line.
        return ResultTable((), (), (), meta)
    columns = body[0].split(",")
    rows = [tuple(float(x) for x in line.split(",")) for line in body[1:]]
    return ResultTable(tuple(columns), tuple(units), tuple(rows), meta)


def base_metadata(subcommand: str, config_json: str, config_hash: str, extra: dict[str, Any]) -> dict[str, Any]:
    meta: dict[str, Any] = {
        "tool": "temporal-qudit",
        "version": __version__,
        "subcommand": subcommand,
        "config_sha256": config_hash,
    }
    meta.update(extra)
    meta["config"] = json.loads(config_json)
    return meta
