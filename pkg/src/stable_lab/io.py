"""File formats: measure JSON, matrix triangles, CF tables and reports."""

import csv
import hashlib
import io
import json

import numpy as np

from .stable_core import InvariantError, SpectralMeasureEig

NUMBER_FORMAT = "%.17g"
ECHO_PREFIX = "# config: "


def fmt(x):
    return NUMBER_FORMAT % x


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config):
    """Git blob hash of the canonical JSON encoding of ``config``."""
    body = canonical_json(config).encode()
    return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()


def load_measure(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvariantError("measure file is readable JSON", str(exc)) from None
    return SpectralMeasureEig.from_dict(data)


def save_measure(measure, path):
    with open(path, "w") as fh:
        json.dump(measure.to_dict(), fh)


def triangle_columns(n):
    sep = "" if n < 10 else "_"
    cols = []
    for j in range(1, n + 1):
        for k in range(j, n + 1):
            cols += [f"re_{j}{sep}{k}", f"im_{j}{sep}{k}"]
    return cols


def to_triangle(x):
    """Upper-triangle entries of ``x`` as ``[re_11, im_11, re_12, ...]``."""
    x = np.asarray(x)
    j, k = np.triu_indices(x.shape[-1])
    tri = x[..., j, k]
    out = np.empty(tri.shape[:-1] + (2 * tri.shape[-1],))
    out[..., 0::2] = tri.real
    out[..., 1::2] = tri.imag
    return out


def from_triangle(values, n):
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != n * (n + 1):
        raise InvariantError("triangle has N(N+1) numbers", f"got {values.shape[-1]} for N={n}")
    tri = values[..., 0::2] + 1j * values[..., 1::2]
    x = np.zeros(values.shape[:-1] + (n, n), dtype=complex)
    j, k = np.triu_indices(n)
    x[..., j, k] = tri
    x[..., k, j] = np.conj(tri)
    # diagonal imaginary parts are dropped: Hermitian diagonals are real
    idx = np.arange(n)
    x[..., idx, idx] = x[..., idx, idx].real
    return x


def matrices_to_csv(samples, config=None):
    samples = np.asarray(samples)
    n = samples.shape[-1]
    buf = io.StringIO()
    if config is not None:
        buf.write(ECHO_PREFIX + canonical_json(config) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(triangle_columns(n))
    for row in to_triangle(samples):
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def matrices_to_json(samples, config=None):
    samples = np.asarray(samples)
    n = samples.shape[-1]
    payload = {"columns": triangle_columns(n), "samples": to_triangle(samples).tolist()}
    if config is not None:
        payload["config"] = config
    return json.dumps(payload) + "\n"


def read_matrices(text):
    """Inverse of :func:`matrices_to_csv` / :func:`matrices_to_json`."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(stripped)
        values = np.asarray(data["samples"], dtype=float).reshape(-1, len(data["columns"]))
    else:
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        rows = list(csv.reader(lines))
        header, body = rows[0], rows[1:]
        values = np.array([[float(v) for v in r] for r in body]).reshape(-1, len(header))
    n = int(round((np.sqrt(1 + 4 * values.shape[1]) - 1) / 2))
    return from_triangle(values, n)


def read_echo(path):
    """Config echo embedded in an output file, or the file itself if it is a config JSON."""
    with open(path) as fh:
        text = fh.read()
    for line in text.splitlines():
        if line.startswith(ECHO_PREFIX):
            return json.loads(line[len(ECHO_PREFIX):])
    data = json.loads(text)
    return data.get("config", data)


def cf_rows_to_csv(rows, config=None):
    """CF table: ``s_spec,m,re_cf,im_cf,se,source``."""
    buf = io.StringIO()
    if config is not None:
        buf.write(ECHO_PREFIX + canonical_json(config) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["s_spec", "m", "re_cf", "im_cf", "se", "source"])
    for r in rows:
        m = r["m"]
        writer.writerow([
            r["s_spec"],
            "inf" if m is None else int(m),
            fmt(r["value"].real),
            fmt(r["value"].imag),
            fmt(r["se"]),
            r["source"],
        ])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def make_report(config, tables, verdicts, seed):
    config = _jsonable(config)
    return {
        "config": config,
        "config_hash": config_hash(config),
        "seed": seed,
        "tables": _jsonable(tables),
        "verdicts": _jsonable(verdicts),
    }


def report_to_json(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
