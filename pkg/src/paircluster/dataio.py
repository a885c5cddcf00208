"""CSV ingestion and emission.

Input is long format, one row per observation, header
``pair_id,unit_id,treatment,outcome`` with treatment in {0,1}.  Row
order never affects results; writing uses the canonical order, so a
write/read round trip reproduces the structure exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .data import Assignment, ExperimentData, validate_dataset
from .errors import EmptyInput, ParseError

__all__ = ["CSV_HEADER", "read_csv", "write_csv"]

CSV_HEADER = ["pair_id", "unit_id", "treatment", "outcome"]


def read_csv(path) -> tuple[ExperimentData, Assignment]:
    """Parse and validate an experiment CSV file."""
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInput(f"{path}: file is empty") from None
        if [h.strip() for h in header] != CSV_HEADER:
            raise ParseError(
                f"expected header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}",
                line=1,
            )
        for lineno, record in enumerate(reader, start=2):
            if not record or (len(record) == 1 and not record[0].strip()):
                continue
            if len(record) != 4:
                raise ParseError(f"expected 4 fields, got {len(record)}", line=lineno)
            pair_id, unit_id, w_text, y_text = (f.strip() for f in record)
            try:
                treatment = int(w_text)
            except ValueError:
                raise ParseError(f"treatment {w_text!r} is not an integer", line=lineno) from None
            try:
                outcome = float(y_text)
            except ValueError:
                raise ParseError(f"outcome {y_text!r} is not a number", line=lineno) from None
            if outcome != outcome or outcome in (float("inf"), float("-inf")):
                raise ParseError(f"outcome {y_text!r} is not finite", line=lineno)
            rows.append((pair_id, unit_id, treatment, outcome))
    if not rows:
        raise EmptyInput(f"{path}: no data rows")
    return validate_dataset(rows)


def write_csv(path, data: ExperimentData, assignment: Assignment) -> None:
    """Write a dataset and assignment in canonical order."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        for pair in data.pairs:
            for unit in pair.units:
                w = assignment.treated[(pair.pair_id, unit.unit_id)]
                for y in unit.outcomes:
                    writer.writerow([pair.pair_id, unit.unit_id, w, repr(float(y))])
