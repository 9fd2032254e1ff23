"""CSV and text artifacts shared by every module.

All CSV files are UTF-8 with LF line endings, a ``#``-prefixed metadata
header, and floats printed with 17 significant digits so that values
round-trip exactly.
"""
from __future__ import annotations

import io
import os
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__

__all__ = ["format_value", "write_csv", "read_csv", "csv_text", "write_triplets", "read_triplets"]


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def csv_text(
    columns: Sequence[str],
    rows,
    meta: Mapping | None = None,
    scenario: str | None = None,
) -> str:
    """Render a table as CSV text.

    When ``scenario`` is given every row is stamped with the scenario name
    and the package version so each number stays traceable.
    """
    buf = io.StringIO()
    header = {"version": __version__}
    if meta:
        header.update(meta)
    for key, val in header.items():
        buf.write(f"# {key}: {format_value(val) if not isinstance(val, str) else val}\n")
    cols = list(columns)
    if scenario is not None:
        cols += ["scenario", "version"]
    buf.write(",".join(cols) + "\n")
    for row in rows:
        cells = [format_value(v) for v in row]
        if scenario is not None:
            cells += [scenario, __version__]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def write_csv(path, columns, rows, meta=None, scenario=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text(columns, rows, meta=meta, scenario=scenario))
    return path


def read_csv(path):
    """Return ``(meta, columns, rows)`` with numeric cells converted to float."""
    meta: dict[str, str] = {}
    columns: list[str] = []
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(":")
                meta[key.strip()] = val.strip()
            elif not columns:
                columns = line.split(",")
            elif line:
                cells = []
                for c in line.split(","):
                    try:
                        cells.append(float(c))
                    except ValueError:
                        cells.append(c)
                rows.append(cells)
    return meta, columns, rows


def write_triplets(path, matrix, meta=None) -> Path:
    """Sparse export, one ``row col re im`` line per stored entry (0-based)."""
    import scipy.sparse as sp

    coo = sp.coo_matrix(matrix)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# shape: {coo.shape[0]} {coo.shape[1]}\n")
        for key, val in (meta or {}).items():
            fh.write(f"# {key}: {val}\n")
        fh.write("# columns: row col re im\n")
        order = np.lexsort((coo.col, coo.row))
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {format_value(v.real)} {format_value(v.imag)}\n")
    return path


def read_triplets(path):
    import scipy.sparse as sp

    shape = None
    rows, cols, vals = [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# shape:"):
                shape = tuple(int(s) for s in line.split(":")[1].split())
            elif line.startswith("#") or not line.strip():
                continue
            else:
                r, c, re, im = line.split()
                rows.append(int(r))
                cols.append(int(c))
                vals.append(float(re) + 1j * float(im))
    return sp.csr_matrix((vals, (rows, cols)), shape=shape)


def artifact_root() -> Path:
    """Artifact directory from ``DIRAC_ARTIFACTS`` (default ``./dirac-artifacts``)."""
    return Path(os.environ.get("DIRAC_ARTIFACTS", "dirac-artifacts"))
