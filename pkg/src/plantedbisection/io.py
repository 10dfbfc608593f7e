"""Plain-text file formats.

Graphs: a header line ``2n <vertex-count>`` followed by one ``i j`` line per
edge (0-based, ``i < j``, sorted).  Assignments: one line of ``2n`` digits in
canonical form.  Posterior tables and sample sets: two-column CSV with the
assignment as a bit string.  Floats are written with ``repr`` (shortest
string that round-trips).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .exceptions import InvalidAssignmentError, ParseError
from .graphmodel import ClassAssignment, Graph, canonicalize
from .posterior import PosteriorTable, SampleSet

GRAPH_HEADER = "2n"


def format_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def write_graph(graph, path):
    path = Path(path)
    lines = [f"{GRAPH_HEADER} {graph.num_vertices}"]
    lines += [f"{i} {j}" for i, j in graph.edges()]
    path.write_text("\n".join(lines) + "\n")


def _ints(tokens, lineno, path):
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(f"expected integers, got {' '.join(tokens)!r}", lineno, path) from None


def read_graph(path):
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("missing header line", 1, path)
    head = lines[0].split()
    if len(head) == 2 and head[0] == GRAPH_HEADER:
        head = head[1:]
    if len(head) != 1:
        raise ParseError(f"header must be '{GRAPH_HEADER} <vertex-count>'", 1, path)
    (m,) = _ints(head, 1, path)
    if m <= 0 or m % 2:
        raise ParseError(f"vertex count must be even and positive, got {m}", 1, path)
    n = m // 2
    edges = []
    prev = None
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != 2:
            raise ParseError(f"expected 'i j', got {line!r}", lineno, path)
        i, j = _ints(tokens, lineno, path)
        if not 0 <= i < j < m:
            raise ParseError(f"need 0 <= i < j < {m}, got {i} {j}", lineno, path)
        if prev is not None and (i, j) <= prev:
            raise ParseError("edges must be sorted and distinct", lineno, path)
        prev = (i, j)
        edges.append((i, j))
    return Graph.from_edges(n, edges)


def write_assignment(theta, path):
    Path(path).write_text(theta.to_string() + "\n")


def read_assignment(path):
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if len(lines) != 1:
        raise ParseError(f"expected a single line, found {len(lines)}", 1, path)
    text = lines[0].strip()
    if set(text) - {"0", "1"}:
        raise ParseError("assignment must consist of 0/1 characters", 1, path)
    try:
        theta = canonicalize([int(c) for c in text])
    except InvalidAssignmentError as exc:
        raise ParseError(str(exc), 1, path) from None
    if theta.to_string() != text:
        raise ParseError("assignment is not in canonical form (first bit must be 0)", 1, path)
    return theta


def _bit_strings(bits):
    return ["".join(map(str, row)) for row in bits.tolist()]


def _parse_bits(text, lineno, path):
    if not text or set(text) - {"0", "1"}:
        raise ParseError(f"bad assignment {text!r}", lineno, path)
    try:
        return ClassAssignment(len(text) // 2, tuple(int(c) for c in text)).bits
    except InvalidAssignmentError as exc:
        raise ParseError(str(exc), lineno, path) from None


def _write_two_column(path, header, keys, values):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(zip(keys, values))


def _read_two_column(path, header, convert):
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != list(header):
        raise ParseError(f"expected header {','.join(header)}", 1, path)
    bits, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise ParseError(f"expected 2 columns, got {len(row)}", lineno, path)
        bits.append(_parse_bits(row[0], lineno, path))
        try:
            values.append(convert(row[1]))
        except ValueError:
            raise ParseError(f"bad value {row[1]!r}", lineno, path) from None
    if not bits:
        raise ParseError("no data rows", 2, path)
    if len({len(b) for b in bits}) != 1:
        raise ParseError("assignments of different lengths", None, path)
    return np.array(bits, dtype=np.uint8), values


def write_posterior_csv(table, path):
    _write_two_column(path, ("assignment", "log_weight"), _bit_strings(table.bits),
                      [format_float(v) for v in table.log_weights])


def read_posterior_csv(path):
    """Read a table written by :func:`write_posterior_csv`; evidence is not stored."""
    bits, values = _read_two_column(path, ("assignment", "log_weight"), float)
    return PosteriorTable(bits.shape[1] // 2, bits, np.array(values, dtype=np.float64))


def write_samples_csv(samples, path):
    _write_two_column(path, ("assignment", "count"), _bit_strings(samples.bits),
                      samples.counts.tolist())


def read_samples_csv(path):
    bits, values = _read_two_column(path, ("assignment", "count"), int)
    return SampleSet(bits.shape[1] // 2, bits, np.array(values, dtype=np.int64))


def write_report_json(report, path):
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")


def read_report_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, path) from None
