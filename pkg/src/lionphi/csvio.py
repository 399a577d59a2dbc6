"""Deterministic CSV writing: fixed column order, 17-significant-digit
floats, LF newlines; files round-trip byte-identically through read/write."""

from __future__ import annotations

import math


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(v)


def write_csv(path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", newline="") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def reemit_csv(path_in, path_out) -> None:
    """Reparse and re-emit; output bytes equal input bytes for our files."""
    header, rows = read_csv(path_in)
    lines = [",".join(header)] + [",".join(r) for r in rows]
    with open(path_out, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
