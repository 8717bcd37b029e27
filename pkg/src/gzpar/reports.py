"""CSV outputs with stable, versioned headers.

Every file starts with a ``# gzpar:<schema> v<version>`` line followed by the
column header, so consumers can check what they are reading.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

SCHEMAS = {
    "windows": (1, ["window_index", "size", "undetermined", "percent"]),
    "propagation": (1, ["window_index", "start", "size", "DNA", "Quality", "SeqHeader",
                        "QualHeader"]),
    "model": (1, ["i", "L_i", "one_minus_L_i"]),
    "seek": (1, ["fraction", "seek_offset", "block_start_bit", "delay_bytes", "seq_total",
                 "seq_ambiguous", "percent_unambiguous", "resolved_block_found"]),
    "speedup": (1, ["threads", "seconds", "mb_per_s", "speedup"]),
    "match_probs": (1, ["k", "p_k", "log10_one_minus_p_k"]),
}


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return f"{v:.10g}"
    return v


def write_csv(target, schema: str, rows):
    """Write dict or tuple rows under ``schema``; ``target`` is a path or text stream."""
    version, cols = SCHEMAS[schema]
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="") as fh:
            return write_csv(fh, schema, rows)
    target.write(f"# gzpar:{schema} v{version}\n")
    w = csv.writer(target, lineterminator="\n")
    w.writerow(cols)
    n = 0
    for row in rows:
        if isinstance(row, dict):
            row = [row[c] for c in cols]
        w.writerow([_cell(v) for v in row])
        n += 1
    return n


def read_csv(source):
    """Return ``(schema, version, rows)`` with rows as dicts of strings."""
    text = Path(source).read_text() if isinstance(source, (str, Path)) else source.read()
    first, _, rest = text.partition("\n")
    if not first.startswith("# gzpar:"):
        raise ValueError("not a gzpar CSV file (missing schema line)")
    name, _, ver = first[len("# gzpar:"):].partition(" v")
    rows = list(csv.DictReader(io.StringIO(rest)))
    return name, int(ver), rows


def window_rows(counts):
    return [(c.index, c.size, c.undetermined, c.percent) for c in counts]


def seek_rows(reports):
    return [(r.fraction, r.seek_offset, r.block_start_bit, r.delay_bytes, r.seq_total,
             r.seq_ambiguous, r.percent_unambiguous, r.resolved_block_found) for r in reports]
