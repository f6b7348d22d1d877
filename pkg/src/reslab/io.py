"""File formats: graph and parameter JSON in, CSV/JSON tables out.

Graph file:

    {"vertices": [{"id": "v", "coupling": {"type": "delta", "alpha": 1.0}}],
     "edges": [{"from": "v", "to": "v", "length": 1.0, "flux": 0.0}],
     "leads": [{"at": "v", "count": 2}]}

Matrix couplings are given as {"type": "matrix", "re": rows, "im": rows}.

Tables are written with a header row and a trailing comment block carrying
the tool version and a hash of the job configuration.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import fields

import numpy as np

from .graph import Edge, GraphError, MetricGraph, Vertex

TOOL_VERSION = "0.1.0"


class InputError(ValueError):
    """Unreadable or invalid input; the CLI maps it to exit code 2."""


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from None
    try:
        return json.loads(text), text
    except json.JSONDecodeError as e:
        raise InputError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from None


def graph_from_dict(d: dict) -> MetricGraph:
    if not isinstance(d, dict):
        raise InputError("graph file must hold a JSON object")
    try:
        verts = [Vertex(str(v["id"]), dict(v.get("coupling", {"type": "kirchhoff"})))
                 for v in d.get("vertices", [])]
        edges = [Edge(str(e["from"]), str(e["to"]), float(e["length"]),
                      float(e.get("flux", 0.0)))
                 for e in d.get("edges", [])]
        leads = [(str(x["at"]), int(x["count"])) for x in d.get("leads", [])]
        return MetricGraph(verts, edges, leads)
    except GraphError as e:
        raise InputError(f"invalid graph: {e}") from None
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise InputError(f"malformed graph record: {e!r}") from None


def graph_to_dict(g: MetricGraph) -> dict:
    return {
        "vertices": [{"id": v.id, "coupling": v.coupling} for v in g.vertices],
        "edges": [{"from": e.start, "to": e.end, "length": e.length, "flux": e.flux}
                  for e in g.edges],
        "leads": [{"at": v, "count": c} for v, c in g.leads],
    }


def load_graph(path) -> tuple:
    """(MetricGraph, raw text) from a graph file."""
    d, text = _read_json(path)
    return graph_from_dict(d), text


def load_params(path) -> tuple:
    """(dict, raw text) from a parameter file; a missing path gives ({}, "")."""
    if path is None:
        return {}, ""
    d, text = _read_json(path)
    if not isinstance(d, dict):
        raise InputError(f"{path}: parameter file must hold a JSON object")
    return d, text


def build_model(cls, params: dict):
    """Instantiate a model dataclass, rejecting unknown keys."""
    known = {f.name for f in fields(cls)}
    extra = sorted(set(params) - known)
    if extra:
        raise InputError(f"unknown parameter(s) for {cls.__name__}: {', '.join(extra)}")
    kw = {}
    for k, v in params.items():
        if isinstance(v, list) and k == "c" and len(v) == 2:
            v = complex(v[0], v[1])  # complex coupling given as [re, im]
        kw[k] = v
    try:
        return cls(**kw)
    except (TypeError, ValueError) as e:
        raise InputError(f"invalid parameters for {cls.__name__}: {e}") from None


# ---------------------------------------------------------------------------
# output

def config_hash(config: dict, inputs=()) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(config, sort_keys=True, default=str).encode())
    for text in inputs:
        h.update(b"\0")
        h.update(text.encode())
    return h.hexdigest()[:16]


def _plain(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def _cell(x) -> str:
    x = _plain(x)
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _jsonable(x):
    x = _plain(x)
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def render_table(columns, rows, meta: dict, fmt: str = "csv") -> str:
    """Serialize a table; meta must contain "tool-version" and "config-hash"."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(x) for x in r])
        for k, v in meta.items():
            buf.write(f"# {k}: {_cell(v)}\n")
        return buf.getvalue()
    if fmt == "json":
        doc = {"columns": list(columns),
               "rows": [[_jsonable(x) for x in r] for r in rows],
               "meta": {k: _jsonable(v) for k, v in meta.items()}}
        return json.dumps(doc, indent=1) + "\n"
    raise InputError(f"unknown format {fmt!r}")


def read_csv_table(text: str) -> tuple:
    """(columns, rows as string lists, meta) from render_table CSV output."""
    lines = text.splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    meta = {}
    for ln in lines:
        if ln.startswith("# ") and ": " in ln:
            k, v = ln[2:].split(": ", 1)
            meta[k] = v
    rows = list(csv.reader(body))
    return rows[0], rows[1:], meta
