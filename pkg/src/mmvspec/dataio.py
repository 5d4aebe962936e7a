"""File formats: delimited tables with a JSON header line.

Every file starts with a single ``#``-prefixed JSON object describing the
payload, followed by a CSV column-name row and data rows. Complex values are
stored as paired re/im columns. Parse failures raise DataFormatError with
the offending 1-based line number.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .covariance import CovarianceSample
from .errors import DataFormatError
from .model import ObservationMask

__all__ = [
    "write_ensemble_csv",
    "read_ensemble_csv",
    "write_covariance_csv",
    "read_covariance_csv",
    "write_curve_csv",
    "read_curve_csv",
]


def _mask_to_json(mask: ObservationMask) -> dict:
    out = {"kind": mask.kind, "n": mask.n, "L": mask.L}
    if mask.kind == "common-rows":
        out["rows"] = list(mask.rows)
    return out


def _mask_from_json(obj: dict, cells) -> ObservationMask:
    kind = obj.get("kind")
    n, L = int(obj["n"]), int(obj["L"])
    if kind == "full":
        return ObservationMask.full(n, L)
    if kind == "common-rows":
        return ObservationMask.common_rows([int(i) for i in obj["rows"]], n, L)
    if kind == "entrywise":
        return ObservationMask.entrywise(cells, n, L)
    raise KeyError(f"unknown mask kind {kind!r}")


def _write_table(path, header: dict, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def _read_table(path, expected_format: str):
    """Returns (header dict, column names, data rows with line numbers)."""
    try:
        with open(path, "r", newline="") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataFormatError(str(exc)) from exc
    lines = raw.splitlines()
    if not lines or not lines[0].strip():
        raise DataFormatError("empty file", line=1)
    if not lines[0].startswith("#"):
        raise DataFormatError("missing JSON header line", line=1)
    try:
        header = json.loads(lines[0][1:])
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"bad JSON header: {exc}", line=1) from exc
    if header.get("format") != expected_format:
        raise DataFormatError(
            f"expected format {expected_format!r}, found {header.get('format')!r}",
            line=1)
    if len(lines) < 2:
        raise DataFormatError("missing column-name row", line=2)
    body = io.StringIO("\n".join(lines[1:]))
    reader = csv.reader(body)
    columns = next(reader)
    rows = [(idx + 3, row) for idx, row in enumerate(reader) if row]
    return header, columns, rows


def _parse_fields(row, lineno, types):
    if len(row) != len(types):
        raise DataFormatError(
            f"expected {len(types)} fields, found {len(row)}", line=lineno)
    out = []
    for val, typ in zip(row, types):
        try:
            out.append(typ(val))
        except ValueError as exc:
            raise DataFormatError(f"bad value {val!r}", line=lineno) from exc
    return out


def write_ensemble_csv(path, Z, mask: ObservationMask) -> None:
    """Store the observed entries of an n x L ensemble, one cell per row."""
    Zm = np.asarray(Z, dtype=complex)
    if Zm.shape != (mask.n, mask.L):
        raise DataFormatError(f"data shape {Zm.shape} does not match mask")
    obs = mask.bool_array()
    cells = np.argwhere(obs)
    rows = [(int(i), int(l), repr(float(Zm[i, l].real)), repr(float(Zm[i, l].imag)))
            for i, l in cells]
    header = {"format": "ensemble", "n": mask.n, "L": mask.L,
              "mask": _mask_to_json(mask)}
    _write_table(path, header, ("row", "col", "re", "im"), rows)


def read_ensemble_csv(path):
    """Read an ensemble file back as (Z, mask); unobserved entries are 0."""
    header, columns, rows = _read_table(path, "ensemble")
    if list(columns) != ["row", "col", "re", "im"]:
        raise DataFormatError(f"unexpected columns {columns}", line=2)
    try:
        n, L = int(header["n"]), int(header["L"])
        mask_obj = header["mask"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"bad header field: {exc}", line=1) from exc
    Z = np.zeros((n, L), dtype=complex)
    seen = set()
    cells = []
    for lineno, row in rows:
        i, l, re, im = _parse_fields(row, lineno, (int, int, float, float))
        if not (0 <= i < n and 0 <= l < L):
            raise DataFormatError(f"cell ({i}, {l}) out of range", line=lineno)
        if (i, l) in seen:
            raise DataFormatError(f"duplicate cell ({i}, {l})", line=lineno)
        seen.add((i, l))
        cells.append((i, l))
        Z[i, l] = re + 1j * im
    try:
        mask = _mask_from_json(mask_obj, cells)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"bad mask header: {exc}", line=1) from exc
    expected = mask.bool_array()
    if len(cells) != int(expected.sum()):
        raise DataFormatError(
            f"mask expects {int(expected.sum())} cells, file has {len(cells)}")
    for i, l in cells:
        if not expected[i, l]:
            raise DataFormatError(f"cell ({i}, {l}) not covered by the mask")
    return Z, mask


def write_covariance_csv(path, sample: CovarianceSample) -> None:
    """Store an m x m sample covariance with its mask metadata."""
    m = sample.omega.m
    rows = [(p, q, repr(float(sample.sigma[p, q].real)),
             repr(float(sample.sigma[p, q].imag)))
            for p in range(m) for q in range(m)]
    header = {"format": "covariance", "n": sample.omega.n, "m": m,
              "L": sample.L, "omega": list(sample.omega.rows)}
    _write_table(path, header, ("p", "q", "re", "im"), rows)


def read_covariance_csv(path) -> CovarianceSample:
    """Read a covariance file; Hermitian/PSD validation applies on load."""
    header, columns, rows = _read_table(path, "covariance")
    if list(columns) != ["p", "q", "re", "im"]:
        raise DataFormatError(f"unexpected columns {columns}", line=2)
    try:
        n, m, L = int(header["n"]), int(header["m"]), int(header["L"])
        omega = [int(i) for i in header["omega"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"bad header field: {exc}", line=1) from exc
    S = np.zeros((m, m), dtype=complex)
    filled = np.zeros((m, m), dtype=bool)
    for lineno, row in rows:
        p, q, re, im = _parse_fields(row, lineno, (int, int, float, float))
        if not (0 <= p < m and 0 <= q < m):
            raise DataFormatError(f"index ({p}, {q}) out of range", line=lineno)
        if filled[p, q]:
            raise DataFormatError(f"duplicate entry ({p}, {q})", line=lineno)
        filled[p, q] = True
        S[p, q] = re + 1j * im
    if not filled.all():
        missing = np.argwhere(~filled)[0]
        raise DataFormatError(f"missing entry ({missing[0]}, {missing[1]})")
    mask = ObservationMask.common_rows(omega, n, L)
    return CovarianceSample(S, mask, L)


def write_curve_csv(path, freqs, values, meta: dict | None = None) -> None:
    """Store a sampled (f, value) curve, e.g. a dual-polynomial norm."""
    f = np.asarray(freqs, dtype=float)
    v = np.asarray(values, dtype=float)
    if f.shape != v.shape:
        raise DataFormatError("frequency and value arrays differ in length")
    header = {"format": "curve", "points": int(f.size)}
    if meta:
        header.update(meta)
    rows = [(repr(float(a)), repr(float(b))) for a, b in zip(f, v)]
    _write_table(path, header, ("f", "value"), rows)


def read_curve_csv(path):
    """Read a curve file back as (freqs, values, header)."""
    header, columns, rows = _read_table(path, "curve")
    if list(columns) != ["f", "value"]:
        raise DataFormatError(f"unexpected columns {columns}", line=2)
    fs, vs = [], []
    for lineno, row in rows:
        f, v = _parse_fields(row, lineno, (float, float))
        fs.append(f)
        vs.append(v)
    return np.asarray(fs), np.asarray(vs), header
