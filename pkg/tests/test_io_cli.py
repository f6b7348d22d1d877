import json
import math

import numpy as np
import pytest

from reslab.cli import run, trajectory
from reslab.io import graph_to_dict, read_csv_table
from reslab.models.graph_models import PolygonModel, StubModel

REGION = ["--re-min", "0.5", "--re-max", "10", "--im-min", "-2", "--im-max", "1"]


def invoke(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def table(out):
    cols, rows, meta = read_csv_table(out)
    return cols, [[float(x) for x in r] if all(_num(x) for x in r) else r for r in rows], meta


def _num(x):
    try:
        float(x)
        return True
    except ValueError:
        return False


@pytest.fixture
def stub_file(tmp_path):
    p = tmp_path / "stub.json"
    p.write_text(json.dumps(graph_to_dict(StubModel(b=1.0).graph())))
    return p


@pytest.fixture
def dirichlet_file(tmp_path):
    p = tmp_path / "seg.json"
    p.write_text(json.dumps({
        "vertices": [{"id": "a", "coupling": {"type": "dirichlet"}},
                     {"id": "b", "coupling": {"type": "dirichlet"}}],
        "edges": [{"from": "a", "to": "b", "length": 1.0}],
    }))
    return p


def params(tmp_path, name, d):
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(d))
    return p


# resonances

def test_stub_file_roots(capsys, stub_file):
    code, out, _ = invoke(capsys, "resonances", "--graph", stub_file, *REGION)
    assert code == 0
    cols, rows, meta = table(out)
    assert cols == ["re_k", "im_k", "multiplicity", "residual", "imag_axis"]
    assert len(rows) == 3
    for n, r in enumerate(rows, start=1):
        assert abs(complex(r[0], r[1]) - complex(n * math.pi, 0.5 * math.log(1 / 3))) < 1e-9
        assert r[2] == 1 and r[4] == 0
    assert set(meta) == {"tool-version", "config-hash"}


def test_empty_region(capsys, stub_file):
    code, out, _ = invoke(capsys, "resonances", "--graph", stub_file,
                          "--re-min", "0.5", "--re-max", "2", "--im-min", "-0.3", "--im-max", "0.3")
    assert code == 0
    cols, rows, _ = read_csv_table(out)
    assert cols[:4] == ["re_k", "im_k", "multiplicity", "residual"] and rows == []


def test_malformed_json(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"vertices": [\n  {"id": "a",}\n]}')
    code, out, err = invoke(capsys, "resonances", "--graph", p, *REGION)
    assert code == 2 and out == ""
    assert f"{p}:2:" in err


@pytest.mark.parametrize("argv", [
    ["resonances", "--model", "stub", "--re-min", "1", "--re-max", "0", "--im-min", "-1", "--im-max", "0"],
    ["resonances", "--model", "stub", "--re-min", "0", "--re-max", "1", "--im-min", "-1"],
    ["resonances", "--model", "stub", "--tol", "0", *REGION],
    ["resonances", *REGION],
    ["resonances", "--model", "nosuch", *REGION],
    ["count", "--model", "polygon", "--r-list", "50,20"],
    ["trajectory", "--model", "loop", "--param", "nosuch", "--from", "0", "--to", "1"],
    ["decay", "--model", "winter", "--tmax", "-1"],
    ["scatter", "--model", "stub", "--re-min", "0.1", "--re-max", "1"],
])
def test_input_errors(capsys, argv):
    code, out, err = invoke(capsys, *argv)
    assert code == 2 and out == "" and err


def test_unknown_params(capsys, tmp_path):
    p = params(tmp_path, "stub", {"b": 1.0, "beta": 2.0})
    code, _, err = invoke(capsys, "resonances", "--model", "stub", "--params", p, *REGION)
    assert code == 2 and "beta" in err


def test_numeric_failure(capsys, tmp_path):
    p = params(tmp_path, "fr", {"g": 8.0})
    code, out, err = invoke(capsys, "resonances", "--model", "friedrichs", "--params", p,
                            "--re-min", "-10", "--re-max", "10", "--im-min", "-10", "--im-max", "1")
    assert code == 3 and out == "" and "numeric failure" in err


def test_imag_axis_tag(capsys, tmp_path):
    # stub with b = 3: the half-line with an attractive vertex has an antibound state
    p = params(tmp_path, "stub", {"b": 3.0})
    code, out, _ = invoke(capsys, "resonances", "--model", "stub", "--params", p,
                          "--re-min", "-0.5", "--re-max", "4", "--im-min", "-1", "--im-max", "1")
    assert code == 0
    _, rows, _ = table(out)
    assert rows
    for r in rows:
        assert r[4] == (abs(r[0]) < 1e-9)


def test_deterministic_and_thread_independent(capsys, monkeypatch, stub_file):
    argv = ["resonances", "--graph", stub_file, "--re-min", "0.5", "--re-max", "20",
            "--im-min", "-2", "--im-max", "1"]
    monkeypatch.setenv("RESLAB_THREADS", "1")
    _, a, _ = invoke(capsys, *argv)
    _, b, _ = invoke(capsys, *argv)
    monkeypatch.setenv("RESLAB_THREADS", "4")
    _, c, _ = invoke(capsys, *argv)
    assert a == b == c


def test_config_hash_tracks_inputs(capsys, tmp_path):
    p1 = params(tmp_path, "a", {"b": 1.0})
    p2 = params(tmp_path, "b", {"b": 2.0})
    h = []
    for p in (p1, p2):
        _, out, _ = invoke(capsys, "resonances", "--model", "stub", "--params", p, *REGION)
        h.append(read_csv_table(out)[2]["config-hash"])
    assert h[0] != h[1]


def test_json_mirror(capsys, stub_file, tmp_path):
    dest = tmp_path / "out.json"
    code, out, _ = invoke(capsys, "resonances", "--graph", stub_file, *REGION,
                          "--format", "json", "--out", dest)
    assert code == 0 and out == ""
    doc = json.loads(dest.read_text())
    assert doc["columns"][:4] == ["re_k", "im_k", "multiplicity", "residual"]
    assert len(doc["rows"]) == 3
    assert {"tool-version", "config-hash"} <= set(doc["meta"])
    _, csv_out, _ = invoke(capsys, "resonances", "--graph", stub_file, *REGION)
    _, rows, meta = table(csv_out)
    assert np.array_equal(np.array(doc["rows"], dtype=float), np.array(rows))
    assert doc["meta"]["config-hash"] == meta["config-hash"]


# count

def test_count_polygon(capsys, tmp_path):
    p = params(tmp_path, "poly", {"n": 5, "l": 1.0})
    code, out, _ = invoke(capsys, "count", "--model", "polygon", "--params", p,
                          "--r-list", "50,100,200,400")
    assert code == 0
    cols, rows, meta = table(out)
    assert cols == ["R", "N"] and len(rows) == 4
    assert abs(float(meta["fitted_W"]) - 2.5) < 0.05 * 2.5


def test_count_dirichlet(capsys, dirichlet_file):
    code, out, _ = invoke(capsys, "count", "--graph", dirichlet_file, "--r-list", "20.5,40.5,80.5")
    assert code == 0
    _, rows, meta = table(out)
    # zeros +-n pi: 2 floor(R / pi) of them in the disc
    assert [r[1] for r in rows] == [2 * math.floor(R / math.pi) for R in (20.5, 40.5, 80.5)]
    assert abs(float(meta["fitted_W"]) - 1.0) < 0.02


def test_count_zero_size(capsys, tmp_path):
    p = params(tmp_path, "stub", {"b": math.sqrt(2)})
    code, out, _ = invoke(capsys, "count", "--model", "stub", "--params", p, "--r-list", "20,40,80")
    assert code == 0
    _, rows, meta = table(out)
    assert abs(float(meta["fitted_slope"])) < 1e-3


# trajectory

def test_trajectory_zero_length(capsys):
    code, out, _ = invoke(capsys, "trajectory", "--model", "loop", "--param", "lam",
                          "--from", "0.3", "--to", "0.3", "--k0-re", 2 * math.pi)
    assert code == 0
    _, rows, _ = table(out)
    assert len(rows) == 1 and rows[0][0] == 0.3
    code, out, _ = invoke(capsys, "trajectory", "--model", "loop", "--param", "lam",
                          "--from", "0", "--to", "1", "--steps", "0", "--k0-re", 2 * math.pi)
    assert code == 0 and len(table(out)[1]) == 1


def test_trajectory_loop_closes(capsys):
    code, out, _ = invoke(capsys, "trajectory", "--model", "loop", "--param", "lam",
                          "--from", "0", "--to", "1", "--steps", "200", "--k0-re", 2 * math.pi)
    assert code == 0
    _, rows, _ = table(out)
    k = np.array([complex(r[1], r[2]) for r in rows])
    assert len(k) == 201
    assert abs(k[0] - 2 * math.pi) < 1e-12
    # stays in the closed lower half-plane, touching the axis only at 2 pi
    assert k.imag.max() < 1e-12 and k.imag.min() < -1e-3
    on_axis = np.abs(k.imag) < 1e-12
    assert np.all(np.abs(k[on_axis] - 2 * math.pi) < 1e-9)
    assert abs(k[-1] - 2 * math.pi) < 1e-9
    assert not any(r[4] for r in rows)


def test_trajectory_cross_lands_elsewhere(capsys, tmp_path):
    p = params(tmp_path, "cross", {"alpha": 1.0})
    code, out, _ = invoke(capsys, "trajectory", "--model", "cross", "--params", p, "--param", "lam",
                          "--from", "0.6", "--to", "1", "--steps", "100", "--k0-re", 2.5 * math.pi)
    assert code == 0
    _, rows, _ = table(out)
    assert abs(complex(rows[-1][1], rows[-1][2]) - 2 * math.pi) < 1e-5
    assert min(r[2] for r in rows) < -0.2


def test_trajectory_lost(capsys):
    code, out, err = invoke(capsys, "trajectory", "--model", "stub", "--param", "b", "--from", "1",
                            "--to", "2", "--k0-re", "0", "--k0-im", "1e8")
    assert code == 4 and out == "" and err


def test_trajectory_partial_on_jump():
    rows, lost = trajectory(lambda p: (lambda k: k - (0 if p < 0.5 else 100)),
                            [0, 0.25, 0.5, 0.75], 0j)
    assert lost and len(rows) == 2


def test_trajectory_flags_jump():
    ps = list(np.linspace(0, 1, 11))
    rows, lost = trajectory(lambda p: (lambda k: k - (0.01 * p if p < 0.75 else 0.4 + 0.01 * p)),
                            ps, 0j)
    assert not lost
    assert [r[3] for r in rows].index(True) == 8


# decay

@pytest.mark.parametrize("model, d, extra, tol", [
    ("friedrichs", {"g": 0.1}, [], 1e-8),
    ("twochannel", {"c": 0.1}, ["--method", "spectral"], 1e-8),
    # leading order in |c|: off by O(c^2) at t = 0
    ("twochannel", {"c": 0.1}, ["--method", "poles"], 3 * 0.1 ** 2),
    # the resonance expansion converges slowly at t = 0
    ("winter", {"alpha": 500.0}, [], 1e-2),
])
def test_decay_single_point(capsys, tmp_path, model, d, extra, tol):
    p = params(tmp_path, model, d)
    code, out, _ = invoke(capsys, "decay", "--model", model, "--params", p, "--tmax", "0", *extra)
    assert code == 0
    _, rows, _ = read_csv_table(out)
    assert len(rows) == 1 and float(rows[0][0]) == 0.0
    assert abs(float(rows[0][1]) - 1) < tol


def test_decay_twochannel_uncoupled(capsys, tmp_path):
    p = params(tmp_path, "tc", {"c": 0.0})
    code, out, _ = invoke(capsys, "decay", "--model", "twochannel", "--params", p,
                          "--tmax", "20", "--points", "11")
    assert code == 0
    _, rows, _ = read_csv_table(out)
    assert [float(r[1]) for r in rows] == [1.0] * 11


def test_decay_smooth_column(capsys, tmp_path):
    p = params(tmp_path, "w", {"alpha": 500.0, "R": 1.0})
    code, out, _ = invoke(capsys, "decay", "--model", "winter", "--params", p, "--terms", "100",
                          "--points", "101", "--smooth", "0.05")
    assert code == 0
    cols, rows, meta = read_csv_table(out)
    assert cols == ["t", "P", "err", "method", "dlogP"] and len(rows) == 101
    assert meta["window"] == "0.05"


# scatter

def test_scatter_twochannel_below_threshold(capsys, tmp_path):
    p = params(tmp_path, "tc", {"a": -1.0, "b": -0.5, "c": 0.3, "E": 1.0})
    code, out, _ = invoke(capsys, "scatter", "--model", "twochannel", "--params", p,
                          "--re-min", "0.05", "--re-max", "2", "--points", "80")
    assert code == 0
    cols, rows, _ = table(out)
    assert cols[0] == "k" and "abs_A" in cols and "flux" in cols
    iA, iF = cols.index("abs_A"), cols.index("flux")
    for r in rows:
        if r[0] < 1:
            assert abs(r[iA] - 1) < 1e-12
        assert abs(r[iF] - 1) < 1e-12


def test_scatter_friedrichs(capsys, tmp_path):
    p = params(tmp_path, "fr", {"g": 0.1})
    code, out, _ = invoke(capsys, "scatter", "--model", "friedrichs", "--params", p,
                          "--re-min", "0.01", "--re-max", "3", "--points", "300")
    assert code == 0
    cols, rows, meta = table(out)
    assert max(abs(r[cols.index("abs_S")] - 1) for r in rows) < 1e-10
    # the phase turns fastest within a few widths of Re z_p
    lam = np.array([r[0] for r in rows])
    ph = np.unwrap([r[cols.index("arg_S")] for r in rows])
    i = int(np.argmax(np.abs(np.diff(ph))))
    zr, zi = float(meta["pole_re"]), float(meta["pole_im"])
    assert abs(0.5 * (lam[i] + lam[i + 1]) - zr) < 3 * abs(zi) + lam[1] - lam[0]
