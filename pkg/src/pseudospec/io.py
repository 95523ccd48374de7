"""Matrix files.

Text format::

    n
    a11 a12 ... a1n
    ...
    an1 an2 ... ann

Entries are separated by whitespace and written ``re``, ``re+imi``,
``re-imi`` or ``imi`` (``j`` is accepted for ``i``).  Blank lines and text
after ``#`` are ignored.  Structured format (JSON)::

    {"n": 2, "rows": [[[re, im], [re, im]], [[re, im], [re, im]]]}

Numbers are parsed with :func:`float`, which rounds decimal strings
correctly and ignores the locale.
"""
from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from ._validation import MAX_DIMENSION
from .exceptions import DimensionTooLarge, MalformedMatrix

_NUM = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")


def _real(tok: str, line: int, col: int) -> float:
    if not _NUM.fullmatch(tok):
        raise MalformedMatrix(f"bad number {tok!r}", line, col)
    return float(tok)


def parse_entry(tok: str, line: int | None = None, col: int | None = None) -> complex:
    """Parse one matrix entry: ``re``, ``re+imi``, ``re-imi`` or ``imi``."""
    if tok[-1:] in ("i", "j"):
        body = tok[:-1]
        split = -1
        for k in range(len(body) - 1, 0, -1):
            if body[k] in "+-" and body[k - 1] not in "eE":
                split = k
                break
        re_part, im_part = (body[:split], body[split:]) if split > 0 else ("", body)
        if im_part in ("", "+", "-"):
            im_part += "1"
        re_val = _real(re_part, line, col) if re_part else 0.0
        return complex(re_val, _real(im_part, line, col))
    return complex(_real(tok, line, col), 0.0)


def _check_n(n, line):
    if n < 1:
        raise MalformedMatrix("dimension must be positive", line, 1)
    if n > MAX_DIMENSION:
        raise DimensionTooLarge(f"dimension {n} > {MAX_DIMENSION}")


def parse_matrix_text(text: str) -> np.ndarray:
    """Parse either format from a string."""
    if text.lstrip().startswith("{"):
        return _parse_json(text)
    rows: list[list[complex]] = []
    n = None
    last = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        if not content.strip():
            continue
        last = lineno
        if n is None:
            tok = content.strip()
            if not re.fullmatch(r"\d+", tok):
                raise MalformedMatrix(f"first line must be the dimension, got {tok!r}", lineno, 1)
            n = int(tok)
            _check_n(n, lineno)
            continue
        if len(rows) == n:
            raise MalformedMatrix(f"more than {n} rows", lineno, 1)
        row = []
        for m in re.finditer(r"\S+", content):
            row.append(parse_entry(m.group(), lineno, m.start() + 1))
        if len(row) != n:
            col = len(content.rstrip()) + 1 if len(row) < n else \
                list(re.finditer(r"\S+", content))[n].start() + 1
            what = "too short" if len(row) < n else "too long"
            raise MalformedMatrix(f"row {what}: expected {n} entries, got {len(row)}", lineno, col)
        rows.append(row)
    if n is None:
        raise MalformedMatrix("empty matrix file", 1, 1)
    if len(rows) != n:
        raise MalformedMatrix(f"expected {n} rows, got {len(rows)}", last + 1, 1)
    return np.array(rows, dtype=np.complex128)


def _parse_json(text: str) -> np.ndarray:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedMatrix(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(obj, dict) or "n" not in obj or "rows" not in obj:
        raise MalformedMatrix("JSON matrix needs fields 'n' and 'rows'", 1, 1)
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise MalformedMatrix("'n' must be an integer", 1, 1)
    _check_n(n, 1)
    rows = obj["rows"]
    if not isinstance(rows, list) or len(rows) != n:
        raise MalformedMatrix(f"'rows' must hold {n} rows", 1, 1)
    out = np.empty((n, n), dtype=np.complex128)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise MalformedMatrix(f"row {i + 1} must hold {n} entries", i + 1, 1)
        for j, pair in enumerate(row):
            ok = (isinstance(pair, list) and len(pair) == 2
                  and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pair))
            if not ok or not all(np.isfinite(pair)):
                raise MalformedMatrix(f"entry ({i + 1}, {j + 1}) must be a finite [re, im] pair",
                                      i + 1, j + 1)
            out[i, j] = complex(pair[0], pair[1])
    return out


def parse_matrix(path) -> np.ndarray:
    """Read a matrix file in either format."""
    return parse_matrix_text(Path(path).read_text(encoding="utf-8"))


def _fmt(x: float) -> str:
    return repr(float(x))


def format_entry(z: complex) -> str:
    if z.imag == 0.0 and not np.signbit(z.imag):
        return _fmt(z.real)
    sign = "-" if np.signbit(z.imag) else "+"
    return f"{_fmt(z.real)}{sign}{_fmt(abs(z.imag))}i"


def format_matrix(a) -> str:
    """Text-format rendering that parses back to the same matrix bit for bit."""
    a = np.asarray(a, dtype=np.complex128)
    lines = [str(a.shape[0])]
    lines += [" ".join(format_entry(complex(v)) for v in row) for row in a]
    return "\n".join(lines) + "\n"


def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=np.complex128)
    return {"n": int(a.shape[0]),
            "rows": [[[float(v.real), float(v.imag)] for v in row] for row in a]}
