"""CSV output of result rows."""

import csv
import logging
import math
import sys
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any

logger = logging.getLogger(__name__)

RUN_COLUMNS = [
    "l",
    "dt",
    "n_steps",
    "beta",
    "mode",
    "therm_model",
    "w_ideal",
    "w_avg",
    "w_zeno",
    "reset_cost",
    "heat_in",
    "w_ideal_norm",
    "w_avg_norm",
    "w_zeno_norm",
    "reset_cost_norm",
    "heat_in_norm",
]

ZENO_COLUMNS = ["l", "beta", "w_zeno", "w_zeno_norm"]

THERM_COLUMNS = [
    "l",
    "dt",
    "beta",
    "therm_model",
    "n_beta",
    "tau_beta",
    "w_ideal",
    "w_avg",
    "w_ideal_norm",
    "w_avg_norm",
]

MIXED_FUEL_COLUMNS = [
    "q",
    "l",
    "dt",
    "beta",
    "classical_limit",
    "p_fail_first",
    "p_fail_rest",
    "p_out_pure",
    "p_out_mixed",
    "q_star",
    "energy_to_apparatus",
    "reset_cost",
    "net_work",
    "net_work_norm",
]

SAMPLE_COLUMNS = [
    "l",
    "dt",
    "beta",
    "n_samples",
    "seed",
    "w_sampled_mean",
    "w_sampled_std",
    "w_avg",
]


def format_value(value: Any) -> str:
    """Render one cell: floats with 12 significant digits, booleans as true/false."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return "%.12g" % value
    return str(value)


def add_normalised(row: dict[str, Any], keys: Iterable[str], beta: float) -> dict[str, Any]:
    """Add ``<key>_norm`` columns: energies in units of kT log 2."""
    unit = math.log(2) / beta
    for key in keys:
        row[f"{key}_norm"] = row[key] / unit
    return row


def _write_rows(handle, rows: Iterable[Mapping[str, Any]], columns: list[str]) -> int:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(columns)
    count = 0
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
        count += 1
    return count


def emit_csv(
    rows: Iterable[Mapping[str, Any]],
    path: str | Path | None,
    columns: list[str] | None = None,
) -> Path | None:
    """Write rows as UTF-8 CSV with a header row and LF line endings.

    The file is overwritten, so two identical runs give byte-identical
    files. With ``path=None`` the table goes to stdout.

    Args:
        rows: Row mappings; keys outside ``columns`` are ignored.
        path: Output file, or None for stdout.
        columns: Column order of the header and every row; defaults to
            the run/sweep table.

    Returns:
        The written path, or None when writing to stdout.
    """
    columns = RUN_COLUMNS if columns is None else columns
    if path is None:
        _write_rows(sys.stdout, rows, columns)
        return None
    output_csv = Path(path)
    if output_csv.parent != Path(""):
        output_csv.parent.mkdir(parents=True, exist_ok=True)
    with open(output_csv, "w", newline="", encoding="utf-8") as f:
        count = _write_rows(f, rows, columns)
    logger.info("Wrote %d row(s) to %s", count, output_csv)
    return output_csv
