"""Readers for the schema-tagged CSV files the simulation pipeline emits.

Each file starts with a ``# schema: <name>`` line followed by a standard
CSV header.  A mismatched schema aborts with a column diff so stale files
fail loudly rather than misrender.
"""

from __future__ import annotations

import csv

RECORDS_SCHEMA = "cerdec-records-1"
REPORT_SCHEMA = "cerdec-report-1"
TVD_SCHEMA = "cerdec-tvd-1"
CONVERGENCE_SCHEMA = "cerdec-convergence-1"

_EXPECTED_COLUMNS = {
    RECORDS_SCHEMA: [
        "channel_id", "channel_hash", "eps_physical", "policy", "K", "w",
        "r_ref", "r_ref_stderr", "r_dec", "r_dec_stderr", "gain",
        "gain_stderr", "tvd_partial", "tvd_completed", "alpha", "n_samples",
        "skipped_fraction",
    ],
    REPORT_SCHEMA: [
        "bin_lo", "bin_hi", "count", "mean_eps", "mean_logical", "K",
        "median_gain", "q1", "q3",
    ],
    TVD_SCHEMA: [
        "bin_lo", "bin_hi", "count", "mean_eps", "tvd_partial", "tvd_completed",
    ],
    CONVERGENCE_SCHEMA: ["series", "n_samples", "r_hat", "stderr"],
}

_FLOAT_COLUMNS = {
    "eps_physical", "r_ref", "r_ref_stderr", "r_dec", "r_dec_stderr",
    "gain", "gain_stderr", "tvd_partial", "tvd_completed", "alpha",
    "skipped_fraction", "bin_lo", "bin_hi", "mean_eps", "mean_logical",
    "median_gain", "q1", "q3", "r_hat", "stderr",
}
_INT_COLUMNS = {"K", "count", "n_samples"}


class SchemaMismatch(RuntimeError):
    pass


def read_csv(path, schema: str) -> list:
    """Rows as typed dicts; raises SchemaMismatch on any schema drift."""
    expected = _EXPECTED_COLUMNS[schema]
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != f"# schema: {schema}":
            raise SchemaMismatch(
                f"{path}: expected '# schema: {schema}', found {first!r}"
            )
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        if reader.fieldnames is None or list(reader.fieldnames) != expected:
            missing = set(expected) - set(reader.fieldnames or [])
            extra = set(reader.fieldnames or []) - set(expected)
            raise SchemaMismatch(
                f"{path}: column mismatch (missing {sorted(missing)}, "
                f"unexpected {sorted(extra)})"
            )
        rows = []
        for raw in reader:
            row = {}
            for key, value in raw.items():
                if key in _FLOAT_COLUMNS:
                    row[key] = float(value) if value != "" else float("nan")
                elif key in _INT_COLUMNS:
                    row[key] = int(value)
                else:
                    row[key] = value
            rows.append(row)
    return rows
