"""Output helpers: float formatting, CSV and JSON writers."""

import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union


def format_float(value: float) -> str:
    """
    Render a float with 17 significant digits so that it round-trips exactly.

    Args:
        value: Number to render

    Returns:
        Text form; non-finite values render as "nan", "inf" or "-inf"
    """
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".17g")


def format_cell(value: Any) -> str:
    """Render one CSV cell: floats with ``format_float``, None as empty, the rest as str."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def write_csv(
    path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]
) -> Path:
    """
    Write a CSV file with a header row.

    Args:
        path: Output file; parent directories are created
        header: Column names
        rows: Row values, rendered with ``format_cell``

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([format_cell(value) for value in row])
    return path


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return format_float(value)
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def write_json(path: Union[str, Path], payload: Dict[str, Any]) -> Path:
    """Write a JSON document with sorted keys and a trailing newline."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(_json_safe(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return path


def relative_residual(actual: float, expected: float, floor: float = 1e-300) -> float:
    """|actual - expected| relative to |expected|, with an absolute floor on the scale."""
    return abs(actual - expected) / max(abs(expected), floor)


def read_csv_rows(path: Union[str, Path]) -> List[Dict[str, str]]:
    """Read a CSV file written by ``write_csv`` back as dictionaries."""
    with Path(path).open(newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))
