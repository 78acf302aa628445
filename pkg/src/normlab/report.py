"""Report documents and their deterministic serialization.

JSON is written with floats at 17 significant digits so every double
round-trips exactly and repeated runs are byte-identical; CSV traces use
the same convention.  Files are written atomically (write then rename).
"""

from __future__ import annotations

import os
import tempfile

import numpy as np

from .bisector import BisectorTrace
from .norms import Norm


def format_float(value: float) -> str:
    return format(float(value), ".17g")


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON text with .17g floats and sorted keys."""
    pieces: list[str] = []
    _write(obj, pieces, indent, 0)
    pieces.append("\n")
    return "".join(pieces)


def _write(obj, out: list[str], indent: int, level: int) -> None:
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    elif isinstance(obj, np.bool_):
        obj = bool(obj)
    elif isinstance(obj, np.integer):
        obj = int(obj)
    elif isinstance(obj, np.floating):
        obj = float(obj)
    pad = " " * (indent * (level + 1))
    closing = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append('"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"')
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        keys = list(obj.keys())
        for i, key in enumerate(keys):
            out.append(pad + '"' + str(key) + '": ')
            _write(obj[key], out, indent, level + 1)
            out.append(",\n" if i + 1 < len(keys) else "\n")
        out.append(closing + "}")
    elif isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(seq):
            out.append(pad)
            _write(item, out, indent, level + 1)
            out.append(",\n" if i + 1 < len(seq) else "\n")
        out.append(closing + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} deterministically")


def write_text_atomic(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_csv(trace: BisectorTrace) -> str:
    """Delimited trace export: one root interval per transversal offset."""
    lines = ["offset,s_lo,s_hi,z_lo_u,z_lo_w,z_hi_u,z_hi_w"]
    x = trace.x
    for offset, root in zip(trace.offsets, trace.roots):
        z_lo = root.point(x, root.s_lo)
        z_hi = root.point(x, root.s_hi)
        lines.append(",".join(format_float(v) for v in
                              (offset, root.s_lo, root.s_hi,
                               z_lo.u, z_lo.w, z_hi.u, z_hi.w)))
    return "\n".join(lines) + "\n"


def build_report(norm: Norm, classification=None, suites=(), witnesses=()) -> dict:
    """The verification report document shared by the CLI commands."""
    return {
        "norm": norm.to_dict(),
        "classification": classification.to_dict() if classification is not None else None,
        "suites": [s.to_dict() for s in suites],
        "witnesses": [w.to_dict() for w in witnesses],
    }
