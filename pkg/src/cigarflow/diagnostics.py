"""Per-step scalar monitors and their CSV serialization.

The CSV layout is part of the external interface: one header row, the
columns below in exactly this order, values as full-precision decimal text
(shortest round-trip representation), rows in time order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields

import numpy as np

__all__ = ["DiagnosticsRecord", "CSV_COLUMNS", "emit_diagnostics", "read_diagnostics"]

CSV_COLUMNS = [
    "t",
    "dt",
    "sup_R",
    "inf_R",
    "sup_u_tilde",
    "sup_grad_sq",
    "w_drift",
    "sup_h",
    "width_bound",
    "cinf_est",
    "res_poisson",
    "res_curv_evo",
]


@dataclass
class DiagnosticsRecord:
    """Scalar monitors of one flow state.

    The first twelve fields are the CSV columns; `v_discrepancy` (the gap
    between the evolved v = f(0) - f at the origin and the independently
    accumulated -integral of R(origin)) travels with the record but is not
    serialized.
    """

    t: float
    dt: float
    sup_R: float
    inf_R: float
    sup_u_tilde: float
    sup_grad_sq: float
    w_drift: float
    sup_h: float
    width_bound: float
    cinf_est: float
    res_poisson: float
    res_curv_evo: float
    v_discrepancy: float = float("nan")

    def csv_row(self):
        return [repr(float(getattr(self, name))) for name in CSV_COLUMNS]

    @property
    def finite(self):
        return all(np.isfinite(getattr(self, name)) for name in CSV_COLUMNS)


def emit_diagnostics(records, stream):
    """Write records as CSV to a text stream; raises on empty input."""
    records = list(records)
    if not records:
        raise ValueError("no diagnostics records to emit")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow(rec.csv_row())


def read_diagnostics(path):
    """Read a diagnostics CSV back into records."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_COLUMNS:
            raise ValueError(f"unexpected diagnostics header: {header}")
        for row in reader:
            values = [float(v) for v in row]
            out.append(DiagnosticsRecord(*values))
    return out
