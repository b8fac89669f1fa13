"""State/operator/operation document format.

Documents are JSON with complex numbers encoded as ``[re, im]`` pairs:

* state/operator files: ``{"dims": [d1, d2], "kind": "pure" | "density" |
  "observable", "data": ...}`` where ``data`` is a flat amplitude list for
  pure states (composite index ``i*d2 + j``) and a row-major list of rows
  for matrices.
* operation files: ``{"class": "LU"|"LI"|"LP"|"GENERAL", "pairs":
  [{"A": matrix, "B": matrix}, ...]}`` in the same matrix encoding.

Reports emitted by the CLI reuse this grammar so outputs can feed back in
as inputs.  Parsers reject invalid documents with a diagnostic naming the
violated invariant and its magnitude.
"""

import json

import numpy as np

from .errors import InputFormatError, InvalidStateError, SchmidtkitError
from .hilbert import BipartiteDims, BipartitePureState, DensityOperator, Observable

KINDS = ("pure", "density", "observable")


def complex_to_pair(z):
    return [float(np.real(z)), float(np.imag(z))]


def vector_to_data(vec):
    return [complex_to_pair(z) for z in np.asarray(vec).reshape(-1)]


def matrix_to_data(mat):
    return [[complex_to_pair(z) for z in row] for row in np.asarray(mat)]


def _pair_to_complex(item, where):
    if (
        not isinstance(item, (list, tuple))
        or len(item) != 2
        or not all(isinstance(v, (int, float)) for v in item)
    ):
        raise InputFormatError(f"{where}: expected a [re, im] pair, got {item!r}")
    return complex(item[0], item[1])


def data_to_vector(data, where="data"):
    return np.array([_pair_to_complex(x, where) for x in data], dtype=complex)


def data_to_matrix(data, where="data"):
    rows = []
    for i, row in enumerate(data):
        if not isinstance(row, (list, tuple)):
            raise InputFormatError(f"{where}[{i}]: expected a row of [re, im] pairs")
        rows.append([_pair_to_complex(x, f"{where}[{i}]") for x in row])
    mat = np.array(rows, dtype=complex)
    if mat.ndim != 2:
        raise InputFormatError(f"{where}: ragged or empty matrix")
    return mat


def state_document(obj):
    """Serialize a pure state, density operator, or observable to a dict."""
    if isinstance(obj, BipartitePureState):
        kind, data = "pure", vector_to_data(obj.amplitudes)
    elif isinstance(obj, DensityOperator):
        kind, data = "density", matrix_to_data(obj.matrix)
    elif isinstance(obj, Observable):
        kind, data = "observable", matrix_to_data(obj.matrix)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    return {"dims": [obj.dims.d1, obj.dims.d2], "kind": kind, "data": data}


def parse_state_document(doc):
    """Parse a state document dict into the corresponding hilbert object."""
    if not isinstance(doc, dict):
        raise InputFormatError("document root must be a JSON object")
    for key in ("dims", "kind", "data"):
        if key not in doc:
            raise InputFormatError(f"missing required field {key!r}")
    dims_raw = doc["dims"]
    if not (isinstance(dims_raw, (list, tuple)) and len(dims_raw) == 2):
        raise InputFormatError(f"dims must be [d1, d2], got {dims_raw!r}")
    try:
        dims = BipartiteDims(int(dims_raw[0]), int(dims_raw[1]))
    except (TypeError, ValueError, SchmidtkitError) as exc:
        raise InputFormatError(f"invalid dims {dims_raw!r}: {exc}") from exc
    kind = doc["kind"]
    if kind not in KINDS:
        raise InputFormatError(f"kind must be one of {KINDS}, got {kind!r}")
    try:
        if kind == "pure":
            return BipartitePureState(dims, data_to_vector(doc["data"]))
        mat = data_to_matrix(doc["data"])
        if kind == "density":
            return DensityOperator(dims, mat)
        return Observable(dims, mat)
    except InvalidStateError:
        raise
    except SchmidtkitError as exc:
        raise InputFormatError(str(exc)) from exc


def dump(doc, path=None):
    """Deterministically serialize a document dict to a string (or file)."""
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def load_document(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path} is not valid JSON: {exc}") from exc


def save_state(obj, path):
    return dump(state_document(obj), path)


def load_state(path):
    """Load and validate a state/operator file."""
    return parse_state_document(load_document(path))
