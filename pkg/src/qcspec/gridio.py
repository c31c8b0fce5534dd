"""Plain-text file formats: series, crossing matrices, and spectrum grids.

All floats are written with repr (shortest round-trip form), so write/read
cycles are bit-exact. Every structured file opens with a versioned magic
line; header counts are checked against the body.
"""

import numpy as np

from .series import QcsMatrix
from .simulate import TruthGrid
from .spectrum import SpectrumGrid

__all__ = [
    "read_series",
    "write_series",
    "write_qcs",
    "read_qcs",
    "write_grid",
    "read_grid",
]

_GRID_MAGIC = "qcspec-grid 1"
_QCS_MAGIC = "qcspec-qcs 1"


class ParseError(ValueError):
    """Malformed input file; carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


def _strip_comment(text):
    return text.split("#", 1)[0].strip()


def read_series(path):
    """Read a one-value-per-line series file; '#' starts a comment."""
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = _strip_comment(raw)
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ParseError(f"not a number: {text!r}", lineno) from None
    if not values:
        raise ParseError("empty input")
    return np.array(values)


def write_series(path, y):
    with open(path, "w", encoding="utf-8") as fh:
        for v in np.asarray(y, dtype=float):
            fh.write(repr(float(v)) + "\n")


def _fmt_row(row):
    return " ".join(repr(float(v)) for v in row)


def _parse_floats(text, expect, lineno):
    parts = text.split()
    if len(parts) != expect:
        raise ParseError(f"expected {expect} values, got {len(parts)}", lineno)
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise ParseError("not a number in row", lineno) from None


def write_qcs(path, qcs):
    """Write a crossing matrix with its level and quantile metadata."""
    n, nlev = qcs.u.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_QCS_MAGIC + "\n")
        fh.write(f"n {n}\n")
        fh.write(f"alphas {_fmt_row(qcs.alphas)}\n")
        fh.write(f"qhat {_fmt_row(qcs.qhat)}\n")
        fh.write(f"data {n} {nlev}\n")
        for row in qcs.u:
            fh.write(_fmt_row(row) + "\n")
        fh.write("end\n")


def read_qcs(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _QCS_MAGIC:
        raise ParseError("not a qcspec-qcs file (bad or missing version line)", 1)
    header = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("data "):
        key, _, rest = lines[i].partition(" ")
        header[key] = rest
        i += 1
    if i == len(lines):
        raise ParseError("missing data section")
    _, nrow, ncol = lines[i].split()
    nrow, ncol = int(nrow), int(ncol)
    alphas = _parse_floats(header["alphas"], ncol, None)
    qhat = _parse_floats(header["qhat"], ncol, None)
    if int(header["n"]) != nrow:
        raise ParseError("header n does not match data rows")
    body = lines[i + 1 : i + 1 + nrow]
    if len(body) != nrow or len(lines) <= i + 1 + nrow or lines[i + 1 + nrow] != "end":
        raise ParseError("truncated data section")
    u = np.array([_parse_floats(t, ncol, i + 2 + j) for j, t in enumerate(body)])
    return QcsMatrix(u=u, alphas=alphas, qhat=qhat)


def write_grid(path, grid, meta=None):
    """Write a spectrum or truth grid; optional extra meta key=value pairs."""
    f, nlev = grid.s.shape
    kind = "truth" if isinstance(grid, TruthGrid) else "spectrum"
    merged = dict(grid.meta or {})
    if meta:
        merged.update(meta)
    if isinstance(grid, TruthGrid):
        merged["provenance"] = grid.provenance
    se = getattr(grid, "mc_se", None)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_GRID_MAGIC + "\n")
        fh.write(f"kind {kind}\n")
        fh.write(f"normalized {int(getattr(grid, 'normalized', False))}\n")
        for key in sorted(merged):
            fh.write(f"meta {key}={merged[key]}\n")
        fh.write(f"alphas {_fmt_row(grid.alphas)}\n")
        fh.write(f"freqs {_fmt_row(grid.freqs)}\n")
        fh.write(f"se {int(se is not None)}\n")
        fh.write(f"data {f} {nlev}\n")
        for row in grid.s:
            fh.write(_fmt_row(row) + "\n")
        if se is not None:
            fh.write("sedata\n")
            for row in se:
                fh.write(_fmt_row(row) + "\n")
        fh.write("end\n")


def read_grid(path):
    """Read a grid file; returns a SpectrumGrid or TruthGrid per its kind."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _GRID_MAGIC:
        raise ParseError("not a qcspec-grid file (bad or missing version line)", 1)
    meta = {}
    header = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("data "):
        key, _, rest = lines[i].partition(" ")
        if key == "meta":
            mkey, _, mval = rest.partition("=")
            meta[mkey] = mval
        else:
            header[key] = rest
        i += 1
    if i == len(lines):
        raise ParseError("missing data section")
    _, f, nlev = lines[i].split()
    f, nlev = int(f), int(nlev)
    alphas = _parse_floats(header["alphas"], nlev, None)
    freqs = _parse_floats(header["freqs"], f, None)
    has_se = header.get("se", "0") == "1"
    rows = lines[i + 1 : i + 1 + f]
    if len(rows) != f:
        raise ParseError("truncated data section")
    s = np.array([_parse_floats(t, nlev, i + 2 + j) for j, t in enumerate(rows)])
    j = i + 1 + f
    se = None
    if has_se:
        if j >= len(lines) or lines[j] != "sedata":
            raise ParseError("missing sedata section")
        rows = lines[j + 1 : j + 1 + f]
        if len(rows) != f:
            raise ParseError("truncated sedata section")
        se = np.array([_parse_floats(t, nlev, j + 2 + k) for k, t in enumerate(rows)])
        j += 1 + f
    if j >= len(lines) or lines[j] != "end":
        raise ParseError("missing end marker")
    if header.get("kind") == "truth":
        return TruthGrid(
            freqs=freqs,
            alphas=alphas,
            s=s,
            provenance=meta.pop("provenance", "unknown"),
            mc_se=se,
            meta=meta,
        )
    return SpectrumGrid(
        freqs=freqs,
        alphas=alphas,
        s=s,
        normalized=header.get("normalized", "0") == "1",
        meta=meta,
    )
