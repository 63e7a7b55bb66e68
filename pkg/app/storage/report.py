import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from app.core.errors import DomainError, OutputError


# ======================================================
# Base Paths
# ======================================================

# report.py lives in <project>/app/storage/
BASE_DIR = Path(__file__).resolve().parents[2]
DATA_DIR = BASE_DIR / "data"


# ======================================================
# Result Table
# ======================================================

@dataclass(frozen=True)
class ResultTable:
    """
    Column names, row-major float data and a metadata block.

    Every value must be finite; a NaN or Inf reaching the table is a
    numerical failure upstream and is rejected here.
    """

    columns: Tuple[str, ...]
    rows: Tuple[Tuple[float, ...], ...] = ()
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        columns = tuple(self.columns)
        rows = tuple(tuple(float(value) for value in row) for row in self.rows)

        for index, row in enumerate(rows):
            if len(row) != len(columns):
                raise ValueError(
                    f"row {index} has {len(row)} values for {len(columns)} columns"
                )
            for column, value in zip(columns, row):
                if not math.isfinite(value):
                    raise DomainError(f"non-finite value {value} in column '{column}', row {index}")

        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "rows", rows)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.rows), columns=list(self.columns), dtype=float)

    def column(self, name: str) -> List[float]:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]


# ======================================================
# Serialization
# ======================================================

def _metadata_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(table: ResultTable, precision: int) -> str:
    """
    "#"-prefixed metadata lines, then header and rows in %.<p>e notation,
    "," separated, "\\n" terminated.
    """

    header = "".join(
        f"# {key} = {_metadata_value(table.metadata[key])}\n" for key in sorted(table.metadata)
    )
    body = table.to_frame().to_csv(
        index=False,
        float_format=f"%.{precision}e",
        lineterminator="\n",
    )
    return header + body


def to_json(table: ResultTable) -> str:
    """Full round-trip float precision; keys sorted."""

    document = {
        "metadata": table.metadata,
        "columns": list(table.columns),
        "rows": [list(row) for row in table.rows],
    }
    return json.dumps(document, sort_keys=True, indent=2, allow_nan=False) + "\n"


def serialize(table: ResultTable, fmt: str, precision: int) -> str:
    if fmt == "csv":
        return to_csv(table, precision)
    if fmt == "json":
        return to_json(table)
    raise ValueError(f"format '{fmt}' has no text serialization")


def _write_xlsx(table: ResultTable, path: Path):
    metadata = pd.DataFrame(
        [(key, _metadata_value(table.metadata[key])) for key in sorted(table.metadata)],
        columns=["key", "value"],
    )

    with pd.ExcelWriter(path, engine="openpyxl") as writer:
        table.to_frame().to_excel(writer, sheet_name="Results", index=False)
        metadata.to_excel(writer, sheet_name="Metadata", index=False)


def default_path(scenario: str, fmt: str) -> Path:
    return DATA_DIR / f"{scenario}.{fmt}"


def emit(
    table: ResultTable,
    fmt: str,
    precision: int,
    path: Optional[Path] = None,
    scenario: str = "result"
) -> Path:
    """
    Writes the table as csv, json or xlsx and returns the path.

    csv and json are byte-identical for identical tables; xlsx
    carries workbook timestamps and is not.
    """

    target = Path(path) if path is not None else default_path(scenario, fmt)

    try:
        target.parent.mkdir(parents=True, exist_ok=True)

        if fmt == "xlsx":
            _write_xlsx(table, target)
        else:
            with open(target, "w", encoding="utf-8", newline="") as handle:
                handle.write(serialize(table, fmt, precision))

    except OSError as exc:
        raise OutputError(f"cannot write {target}: {exc}") from exc

    logging.info(f"Result table saved: {target} ({len(table.rows)} rows)")
    return target


def rows_sorted(rows: Sequence[Sequence[float]], key_index: int = 0) -> List[Tuple[float, ...]]:
    """Rows ordered by the sweep variable, whatever order they were computed in."""
    return sorted((tuple(row) for row in rows), key=lambda row: row[key_index])
