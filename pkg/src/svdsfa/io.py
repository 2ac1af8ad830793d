"""Model documents (JSON) and time-series CSV files.

Floats are written with 17 significant digits so every float64 survives a
round trip bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path

import numpy as np

from .sfa import METHODS, PREPROCESS_MODES, Preprocessor, SfaModel

SCHEMA_VERSION = "sfa-model/1"
_REQUIRED = ("version", "method", "epsilon", "m", "n", "M", "P", "rank_of_b", "mode",
             "s0", "w0", "v0", "eigenvalues", "weights")


class ModelFormatError(ValueError):
    """Raised when a model document cannot be read back into a model."""


def _fmt(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    return format(float(x), ".17g")


def _dump(obj) -> str:
    # json.dumps always uses float.__repr__, so numbers are formatted by hand
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _dump(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_dump(x) for x in obj) + "]"
    if isinstance(obj, dict):
        return "{\n" + ",\n".join(f"  {json.dumps(k)}: {_dump(v)}" for k, v in obj.items()) + "\n}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def model_to_dict(model: SfaModel) -> dict:
    pre = model.preprocessor
    if pre is None:
        raise ValueError("only models with a preprocessor can be saved")
    return {
        "version": SCHEMA_VERSION,
        "method": model.method,
        "epsilon": model.epsilon,
        "m": pre.input_dim,
        "n": pre.output_dim,
        "M": model.expanded_dim,
        "P": model.n_components,
        "rank_of_b": model.rank_of_b,
        "mode": pre.mode,
        "s0": pre.s0,
        "w0": pre.w0.ravel(),
        "v0": model.v0,
        "eigenvalues": model.eigenvalues,
        "weights": model.weights.ravel(),
        "diagnostics": {
            "rank_deficient": model.rank_deficient,
            "unstable": model.unstable,
            "solver": model.solver,
        },
    }


def dumps_model(model: SfaModel) -> str:
    return _dump(model_to_dict(model)) + "\n"


def save_model(model: SfaModel, destination) -> None:
    """Write ``model`` as a UTF-8 JSON document to a path or text stream."""
    text = dumps_model(model)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text, encoding="utf-8")


def _array(doc, key, shape) -> np.ndarray:
    try:
        arr = np.array(doc[key], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"field {key!r} is not a numeric array") from exc
    if arr.size != math.prod(shape):
        raise ModelFormatError(f"field {key!r} has {arr.size} values, expected {math.prod(shape)}")
    if not np.all(np.isfinite(arr)):
        raise ModelFormatError(f"field {key!r} contains non-finite values")
    return arr.reshape(shape)


def model_from_dict(doc: dict) -> SfaModel:
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise ModelFormatError(f"unsupported version {version!r}; expected {SCHEMA_VERSION!r}")
    missing = [k for k in _REQUIRED if k not in doc]
    if missing:
        raise ModelFormatError(f"schema error: missing field(s) {', '.join(missing)}")
    if doc["method"] not in METHODS:
        raise ModelFormatError(f"unknown method {doc['method']!r}")
    if doc["mode"] not in PREPROCESS_MODES:
        raise ModelFormatError(f"unknown preprocessing mode {doc['mode']!r}")
    try:
        m, n, big_m, p, rank = (int(doc[k]) for k in ("m", "n", "M", "P", "rank_of_b"))
        epsilon = float(doc["epsilon"])
    except (TypeError, ValueError) as exc:
        raise ModelFormatError("dimension fields must be integers") from exc
    if not math.isfinite(epsilon):
        raise ModelFormatError("field 'epsilon' is not finite")
    diag = doc.get("diagnostics", {})
    pre = Preprocessor(_array(doc, "w0", (n, m)), _array(doc, "s0", (m,)), doc["mode"])
    return SfaModel(
        v0=_array(doc, "v0", (big_m,)),
        eigenvalues=_array(doc, "eigenvalues", (p,)),
        weights=_array(doc, "weights", (p, big_m)),
        method=doc["method"],
        epsilon=epsilon,
        rank_of_b=rank,
        preprocessor=pre,
        rank_deficient=bool(diag.get("rank_deficient", False)),
        unstable=bool(diag.get("unstable", False)),
        solver=str(diag.get("solver", "")),
    )


def loads_model(text: str) -> SfaModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"truncated or malformed model document: {exc}") from exc
    return model_from_dict(doc)


def load_model(source) -> SfaModel:
    """Read a model document from a path or text stream."""
    if hasattr(source, "read"):
        return loads_model(source.read())
    return loads_model(Path(source).read_text(encoding="utf-8"))


def write_series_csv(destination, t, values, columns=("value",)) -> None:
    """Write ``t`` plus one or more value columns, one sample per row."""
    t = np.asarray(t)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape != (t.size, len(columns)):
        raise ValueError(f"values of shape {values.shape} do not match {t.size} rows x {len(columns)} columns")
    own = not hasattr(destination, "write")
    fh = open(destination, "w", encoding="utf-8", newline="") if own else destination
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", *columns])
        for ti, row in zip(t.tolist(), values):
            writer.writerow([int(ti), *(_fmt(x) for x in row)])
    finally:
        if own:
            fh.close()


def read_series_csv(source) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Read a CSV written by :func:`write_series_csv`.

    Returns the integer time index, a 2-D value array and the column names.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        if not os.path.exists(source):
            raise FileNotFoundError(f"no such file: {source}")
        text = Path(source).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:1] != ["t"] or len(rows[0]) < 2:
        raise ValueError("CSV must start with a header row 't,<column>...'")
    header = rows[0]
    body = [r for r in rows[1:] if r]
    try:
        t = np.array([int(r[0]) for r in body], dtype=np.int64)
        values = np.array([[float(x) for x in r[1:]] for r in body], dtype=np.float64)
    except (ValueError, IndexError) as exc:
        raise ValueError(f"malformed CSV row: {exc}") from exc
    if values.size == 0:
        values = values.reshape(0, len(header) - 1)
    if values.shape[1] != len(header) - 1:
        raise ValueError("CSV rows do not match the header width")
    return t, values, header[1:]
