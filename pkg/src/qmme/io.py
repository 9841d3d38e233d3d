"""Deterministic JSON model files and CSV trajectory output.

Schema (version 1): an object with

    schema        "qmme-model"
    version       1
    frequencies   [w1, ..., wr]
    h_bar         complex matrix
    couplings     [complex matrix, ...]
    bath          {"family": name, "params": {...}}
    p_series      {"r", "dim", "trunc", "tail_norm",
                   "coefficients": [{"n": [...], "matrix": ...}, ...]}

Complex scalars are written as [re, im] pairs, matrices as nested lists of
pairs. On load, ``p_generator`` with serializable profile terms is accepted
in place of ``p_series``; saving always writes explicit coefficients.
Serialization is canonical: sorted keys, floats at 17 significant digits, so
identical models produce byte-identical files.
"""

import io as _io
import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError, SchemaVersionMismatch
from .fourier import FourierOperatorSeries
from .model import ReducedModel, bath_from_family, p_series_from_profile_terms

__all__ = [
    "SCHEMA_NAME",
    "SCHEMA_VERSION",
    "model_to_dict",
    "model_from_dict",
    "load_model",
    "save_model",
    "load_density_matrix",
    "dumps_canonical",
    "write_trajectory_csv",
]

SCHEMA_NAME = "qmme-model"
SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# canonical JSON writer
# ---------------------------------------------------------------------------

def _format_float(x):
    x = float(x)
    if not math.isfinite(x):
        raise ParseError(f"non-finite value {x!r} cannot be serialized")
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return format(x, ".17g")


def _write_canonical(obj, out, indent):
    pad = "  " * indent
    if obj is None:
        out.write("null")
    elif obj is True:
        out.write("true")
    elif obj is False:
        out.write("false")
    elif isinstance(obj, str):
        out.write(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.write(_format_float(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{\n")
        keys = sorted(obj, key=str)
        for i, k in enumerate(keys):
            if not isinstance(k, str):
                raise ParseError(f"JSON object keys must be strings, got {k!r}")
            out.write(f'{pad}  {json.dumps(k)}: ')
            _write_canonical(obj[k], out, indent + 1)
            out.write(",\n" if i + 1 < len(keys) else "\n")
        out.write(pad + "}")
    elif isinstance(obj, (list, tuple)):
        flat = all(isinstance(v, (int, float, np.integer, np.floating)) for v in obj)
        if not obj:
            out.write("[]")
        elif flat:
            out.write("[")
            for i, v in enumerate(obj):
                _write_canonical(v, out, indent)
                if i + 1 < len(obj):
                    out.write(", ")
            out.write("]")
        else:
            out.write("[\n")
            for i, v in enumerate(obj):
                out.write(pad + "  ")
                _write_canonical(v, out, indent + 1)
                out.write(",\n" if i + 1 < len(obj) else "\n")
            out.write(pad + "]")
    else:
        raise ParseError(f"cannot serialize object of type {type(obj).__name__}")


def dumps_canonical(obj):
    """Serialize to deterministic JSON text (sorted keys, fixed float format)."""
    buf = _io.StringIO()
    _write_canonical(obj, buf, 0)
    buf.write("\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# matrices and complex pairs
# ---------------------------------------------------------------------------

def _pair(z):
    return [float(z.real), float(z.imag)]


def _matrix_to_json(m):
    m = np.asarray(m, dtype=complex)
    return [[_pair(v) for v in row] for row in m]


def _matrix_from_json(v, where):
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: not a numeric array ({exc})") from None
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ParseError(
            f"{where}: expected a square matrix of [re, im] pairs, got shape {arr.shape}"
        )
    return arr[..., 0] + 1j * arr[..., 1]


def _require(d, key, where):
    if not isinstance(d, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in d:
        raise ParseError(f"{where}: missing required key {key!r}")
    return d[key]


# ---------------------------------------------------------------------------
# model <-> dict
# ---------------------------------------------------------------------------

def model_to_dict(model):
    """Plain-data form of a model. The bath must come from a named family."""
    if model.bath.family == "custom":
        raise ParseError(
            "a bath built from raw callables has no serializable form; "
            "register a family and rebuild it by name"
        )
    p = model.p_series
    return {
        "schema": SCHEMA_NAME,
        "version": SCHEMA_VERSION,
        "frequencies": [float(w) for w in model.frequencies],
        "h_bar": _matrix_to_json(model.h_bar),
        "couplings": [_matrix_to_json(s) for s in model.couplings],
        "bath": {
            "family": model.bath.family,
            "params": {k: float(v) for k, v in sorted(model.bath.params.items())},
        },
        "p_series": {
            "r": p.r,
            "dim": p.d,
            "trunc": p.trunc,
            "tail_norm": float(p.tail_norm),
            "coefficients": [
                {"n": [int(v) for v in n], "matrix": _matrix_to_json(p.coeffs[n])}
                for n in p.indices()
            ],
        },
    }


def model_from_dict(data):
    if not isinstance(data, dict):
        raise ParseError("model document must be a JSON object")
    if data.get("schema") != SCHEMA_NAME:
        raise SchemaVersionMismatch(
            f"schema is {data.get('schema')!r}, expected {SCHEMA_NAME!r}"
        )
    if data.get("version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"schema version {data.get('version')!r} is not supported "
            f"(this reader handles version {SCHEMA_VERSION})"
        )
    freqs = _require(data, "frequencies", "model")
    try:
        omega = np.asarray(freqs, dtype=float).reshape(-1)
    except (TypeError, ValueError):
        raise ParseError("model.frequencies: not a numeric vector") from None
    h_bar = _matrix_from_json(_require(data, "h_bar", "model"), "model.h_bar")
    raw_couplings = _require(data, "couplings", "model")
    if not isinstance(raw_couplings, list) or not raw_couplings:
        raise ParseError("model.couplings: expected a nonempty list")
    couplings = [
        _matrix_from_json(s, f"model.couplings[{i}]") for i, s in enumerate(raw_couplings)
    ]
    bath_obj = _require(data, "bath", "model")
    family = _require(bath_obj, "family", "model.bath")
    params = bath_obj.get("params", {})
    if not isinstance(params, dict):
        raise ParseError("model.bath.params: expected an object")
    try:
        bath = bath_from_family(family, params, len(couplings))
    except KeyError as exc:
        raise ParseError(f"model.bath: missing parameter {exc}") from None

    if "p_series" in data:
        ps = data["p_series"]
        r = int(_require(ps, "r", "model.p_series"))
        trunc = int(_require(ps, "trunc", "model.p_series"))
        coeff_list = _require(ps, "coefficients", "model.p_series")
        if not isinstance(coeff_list, list):
            raise ParseError("model.p_series.coefficients: expected a list")
        coeffs = {}
        for i, entry in enumerate(coeff_list):
            where = f"model.p_series.coefficients[{i}]"
            n = _require(entry, "n", where)
            try:
                idx = tuple(int(v) for v in n)
            except (TypeError, ValueError):
                raise ParseError(f"{where}.n: not an integer vector") from None
            if idx in coeffs:
                raise ParseError(f"{where}: duplicate index {idx}")
            coeffs[idx] = _matrix_from_json(_require(entry, "matrix", where), where)
        dim = int(ps.get("dim", h_bar.shape[0]))
        p_series = FourierOperatorSeries(
            r, dim, trunc, coeffs, tail_norm=float(ps.get("tail_norm", 0.0))
        )
    elif "p_generator" in data:
        pg = data["p_generator"]
        trunc = int(_require(pg, "trunc", "model.p_generator"))
        raw_terms = _require(pg, "terms", "model.p_generator")
        if not isinstance(raw_terms, list) or not raw_terms:
            raise ParseError("model.p_generator.terms: expected a nonempty list")
        terms = []
        for i, td in enumerate(raw_terms):
            where = f"model.p_generator.terms[{i}]"
            terms.append(
                {
                    "profile": _require(td, "profile", where),
                    "index": _require(td, "index", where),
                    "amplitude": float(_require(td, "amplitude", where)),
                    "matrix": _matrix_from_json(_require(td, "matrix", where), where),
                }
            )
        p_series = p_series_from_profile_terms(terms, r=omega.size, trunc=trunc)
    else:
        raise ParseError("model: needs either 'p_series' or 'p_generator'")

    return ReducedModel(
        frequencies=omega,
        p_series=p_series,
        h_bar=h_bar,
        couplings=couplings,
        bath=bath,
    )


def load_model(path):
    """Read a model JSON file; raises ParseError with position on bad JSON."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    return model_from_dict(data)


def save_model(model, path):
    """Write a model as canonical JSON (always explicit coefficients)."""
    Path(path).write_text(dumps_canonical(model_to_dict(model)))


def load_density_matrix(path):
    """Read a density matrix from JSON: either {'matrix': ...} or a bare array."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    if isinstance(data, dict):
        data = _require(data, "matrix", "density matrix")
    return _matrix_from_json(data, "density matrix")


# ---------------------------------------------------------------------------
# trajectory CSV
# ---------------------------------------------------------------------------

def write_trajectory_csv(target, ts, states, extra=None):
    """Write a trajectory as CSV.

    Columns: t, re_ij/im_ij for every matrix entry (row-major), trace_re,
    min_eig, then any extra columns (name -> sequence). Floats use the same
    17-significant-digit format as the JSON writer.
    """
    ts = np.asarray(ts, dtype=float).reshape(-1)
    states = np.asarray(states, dtype=complex)
    if states.ndim != 3 or states.shape[0] != ts.size:
        raise ParseError(
            f"states must be (len(ts), d, d), got {states.shape} for {ts.size} times"
        )
    d = states.shape[1]
    extra = dict(extra or {})
    for name, col in extra.items():
        if len(col) != ts.size:
            raise ParseError(f"extra column {name!r} has {len(col)} rows, expected {ts.size}")

    header = ["t"]
    for i in range(d):
        for j in range(d):
            header += [f"re_{i}{j}", f"im_{i}{j}"]
    header += ["trace_re", "min_eig"]
    header += list(extra)

    def _rows(out):
        out.write(",".join(header) + "\n")
        for k, t in enumerate(ts):
            rho = states[k]
            vals = [_format_float(t)]
            for i in range(d):
                for j in range(d):
                    vals += [_format_float(rho[i, j].real), _format_float(rho[i, j].imag)]
            vals.append(_format_float(rho.trace().real))
            herm = 0.5 * (rho + rho.conj().T)
            vals.append(_format_float(float(np.linalg.eigvalsh(herm)[0])))
            for name in extra:
                vals.append(_format_float(float(extra[name][k])))
            out.write(",".join(vals) + "\n")

    if hasattr(target, "write"):
        _rows(target)
    else:
        with open(target, "w") as fh:
            _rows(fh)
