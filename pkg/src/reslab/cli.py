"""Command-line front end.

    reslab resonances --graph g.json --re-min 0 --re-max 20 --im-min -3 --im-max 0
    reslab count --model polygon --params p.json --r-list 50,100,200,400
    reslab trajectory --model loop --param lam --from 0 --to 1 --steps 200 --k0-re 6.283
    reslab decay --model winter --params w.json --tmax 1.27 --terms 200
    reslab scatter --model twochannel --re-min 0.1 --re-max 3 --points 100

Exit codes: 0 success, 2 input error, 3 numeric failure, 4 trajectory lost.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
import warnings

import numpy as np

from . import decay as dc
from .graph import GraphError, build_flower
from .io import InputError, TOOL_VERSION, build_model, config_hash, load_graph, load_params, \
    render_table
from .models import friedrichs as fr
from .models import graph_models as gm
from .models import twochannel as tc
from .models import winter as wt
from .numerics import QuadratureError
from .rootfind import RootFindError, counting_function, find_roots
from .secular import SecularFunction

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_LOST = 0, 2, 3, 4

MODELS = {
    "stub": gm.StubModel,
    "lasso": gm.LassoModel,
    "loop": gm.LoopTwoLeadsModel,
    "cross": gm.CrossModel,
    "polygon": gm.PolygonModel,
    "winter": wt.WinterModel,
    "twochannel": tc.TwoChannelModel,
    "friedrichs": fr.FriedrichsModel,
}
GRAPH_MODELS = ("stub", "lasso", "loop", "cross", "polygon")

NUMERIC_ERRORS = (RootFindError, QuadratureError, dc.DecayError, fr.FriedrichsDivergence,
                  tc.BranchAmbiguity, ArithmeticError, FloatingPointError)


class TrackLost(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# job setup

@dataclasses.dataclass
class Job:
    command: str
    args: argparse.Namespace
    target: object = None  # MetricGraph or model instance
    model: str | None = None
    inputs: tuple = ()

    def config(self) -> dict:
        d = {k: v for k, v in sorted(vars(self.args).items())
             if k not in ("out", "format", "graph", "params", "func")}
        d["command"] = self.command
        return d


def _load_target(job: Job):
    a = job.args
    if a.graph is not None and a.model is not None:
        raise InputError("give either --graph or --model, not both")
    if a.graph is not None:
        g, text = load_graph(a.graph)
        job.target, job.inputs = g, (text,)
        return
    if a.model is None:
        raise InputError("one of --graph or --model is required")
    if a.model not in MODELS:
        raise InputError(f"unknown model {a.model!r}; choose from {', '.join(MODELS)}")
    params, text = load_params(a.params)
    job.model = a.model
    job.target = build_model(MODELS[a.model], params)
    job.inputs = (text,)


def _region(a):
    vals = (a.re_min, a.re_max, a.im_min, a.im_max)
    if any(v is None for v in vals):
        raise InputError("region needs --re-min, --re-max, --im-min and --im-max")
    if not (a.re_min < a.re_max and a.im_min < a.im_max):
        raise InputError("region is degenerate")
    return vals


def _tol(a):
    if not a.tol > 0:
        raise InputError("--tol must be positive")
    return a.tol


def _secular(job: Job):
    if job.model is None:
        return SecularFunction(build_flower(job.target))
    if job.model in GRAPH_MODELS:
        try:
            return SecularFunction(build_flower(job.target.graph()))
        except (GraphError, ValueError) as e:
            raise InputError(f"model has no graph realization: {e}") from None
    return None


def _condition(name: str, m):
    """(f(k), phase rate) with the closed-form condition of a model."""
    if name in ("stub", "lasso", "loop", "cross"):
        rate = {"stub": lambda: m.l, "lasso": lambda: m.L,
                "loop": lambda: 2 * m.l if m.variant == "general" else m.l,
                "cross": lambda: 2 * m.l}[name]()
        return m.condition, max(1.0, rate)
    if name == "polygon":
        s = SecularFunction(build_flower(m.graph()))
        return s, s.phase_rate
    if name == "winter":
        return (lambda k: wt.winter_condition(m, k)), max(1.0, 2 * m.R)
    if name == "twochannel":
        return (lambda k: tc.twochannel_condition(m, k)), 1.0
    if name == "friedrichs":
        return (lambda z: fr.friedrichs_w(m, z, "continued") - z), max(1.0, m.a)
    raise InputError(f"no condition for {name!r}")


# ---------------------------------------------------------------------------
# commands

ROOT_COLUMNS = ["re_k", "im_k", "multiplicity", "residual"]


def _in_region(z, region):
    x0, x1, y0, y1 = region
    return x0 <= z.real <= x1 and y0 <= z.imag <= y1


def cmd_resonances(job: Job):
    a = job.args
    region = _region(a)
    tol = _tol(a)
    if job.model == "twochannel":
        poles = [p for p in tc.twochannel_poles(job.target) if _in_region(p.k, region)]
        rows = [[p.k.real, p.k.imag, 1, p.root.residual, p.branch, p.kind] for p in poles]
        return ROOT_COLUMNS + ["branch", "kind"], rows, {}
    if job.model == "friedrichs":
        p = fr.friedrichs_pole(job.target, tol=min(tol, 1e-12))
        rows = [[p.location.real, p.location.imag, 1, p.residual]] \
            if _in_region(p.location, region) else []
        return ROOT_COLUMNS, rows, {}
    if job.model == "winter":
        f, rate = _condition("winter", job.target)
        roots = find_roots(f, region, tol=tol, rate=rate)
    else:
        roots = find_roots(_secular(job), region, tol=tol)
    # zeros on the imaginary axis (bound states, antibound states) are tagged
    rows = [[r.location.real, r.location.imag, r.multiplicity, r.residual,
             abs(r.location.real) <= max(tol, 1e-9) * max(1.0, abs(r.location))]
            for r in roots]
    return ROOT_COLUMNS + ["imag_axis"], rows, {}


def _r_list(a):
    if a.r_list is None:
        raise InputError("--r-list is required")
    try:
        R = [float(x) for x in a.r_list.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"bad --r-list {a.r_list!r}") from None
    if not R or any(r <= 0 for r in R) or any(np.diff(R) <= 0):
        raise InputError("--r-list must be positive and ascending")
    return R


def cmd_count(job: Job):
    R = _r_list(job.args)
    s = _secular(job)
    if s is None:
        raise InputError("counting needs a graph or a graph model")
    rep = counting_function(s, R)
    rows = [[r, n] for r, n in zip(rep.radii, rep.counts)]
    meta = {"fitted_slope": rep.fitted_slope, "fitted_W": rep.fitted_W,
            "fit_residual": rep.fit_residual, "total_length": s.total_length}
    return ["R", "N"], rows, meta


def _newton(f, k0: complex, tol: float, maxit: int = 60):
    k = complex(k0)
    for _ in range(maxit):
        h = 1e-7 * max(1.0, abs(k))
        fk = complex(f(k))
        d = (complex(f(k + h)) - complex(f(k - h))) / (2 * h)
        if d == 0 or not np.isfinite(d):
            return k, False
        delta = fk / d
        k -= delta
        if not np.isfinite(k):
            return k, False
        if abs(delta) < tol * max(1.0, abs(k)):
            return k, True
    return k, False


def trajectory(cond_of, p_values, k0: complex, tol: float = 1e-12,
               max_move: float = 0.5, max_halvings: int = 10):
    """Continue a zero of cond_of(p) along p_values.

    Each step starts Newton at the previous root; a step that fails or moves
    farther than max_move is retried over halved parameter increments.
    Returns (rows, lost) with rows (p, k, residual, jump).
    """
    k, ok = _newton(cond_of(p_values[0]), k0, tol)
    if not ok:
        raise TrackLost(f"no zero near the seed {k0}")
    rows = [(p_values[0], k, abs(complex(cond_of(p_values[0])(k))), False)]
    moves = []

    def advance(p0, p1, k, depth):
        knew, ok = _newton(cond_of(p1), k, tol)
        if ok and abs(knew - k) <= max_move:
            return knew
        if depth >= max_halvings:
            return None
        pm = 0.5 * (p0 + p1)
        km = advance(p0, pm, k, depth + 1)
        return None if km is None else advance(pm, p1, km, depth + 1)

    for p_prev, p in zip(p_values[:-1], p_values[1:]):
        knew = advance(p_prev, p, k, 0)
        if knew is None:
            return rows, True
        move = abs(knew - k)
        jump = len(moves) >= 3 and move > 10 * float(np.median(moves))
        moves.append(move)
        k = knew
        rows.append((p, k, abs(complex(cond_of(p)(k))), jump))
    return rows, False


def cmd_trajectory(job: Job):
    a = job.args
    if job.model is None:
        raise InputError("trajectory needs --model")
    m = job.target
    names = {f.name for f in dataclasses.fields(m)}
    if a.param not in names:
        raise InputError(f"{type(m).__name__} has no parameter {a.param!r}")
    if a.p_from is None or a.p_to is None:
        raise InputError("trajectory needs --from and --to")
    if a.steps < 0:
        raise InputError("--steps must be non-negative")
    if a.steps == 0 or a.p_from == a.p_to:
        pv = [a.p_from]
    else:
        pv = list(np.linspace(a.p_from, a.p_to, a.steps + 1))

    def model_at(p):
        try:
            return dataclasses.replace(m, **{a.param: p})
        except (TypeError, ValueError) as e:
            raise InputError(f"{a.param} = {p}: {e}") from None

    # validate the whole sweep before any numerics
    for p in (pv[0], pv[-1]):
        model_at(p)

    def cond_of(p):
        return _condition(job.model, model_at(p))[0]

    if a.k0_re is not None:
        k0 = complex(a.k0_re, a.k0_im or 0.0)
    else:
        f, rate = _condition(job.model, model_at(pv[0]))
        roots = find_roots(f, _region(a), tol=_tol(a), rate=rate)
        if not roots:
            raise InputError("no zero in the region to seed from")
        k0 = min(roots, key=lambda r: (abs(r.location.imag), r.location.real)).location
    rows, lost = trajectory(cond_of, pv, k0, tol=min(_tol(a), 1e-12))
    out = [[float(p), k.real, k.imag, res, jump] for p, k, res, jump in rows]
    meta = {"lost": lost}
    return [a.param, "re_k", "im_k", "residual", "jump"], out, meta


def _times(a, default_tmax):
    tmax = default_tmax if a.tmax is None else a.tmax
    if tmax < 0:
        raise InputError("--tmax must be non-negative")
    if tmax == 0:
        return np.array([0.0])
    if a.points < 2:
        raise InputError("--points must be at least 2 for tmax > 0")
    return np.linspace(0.0, tmax, a.points)


def cmd_decay(job: Job):
    a = job.args
    m = job.target
    meta = {}
    if job.model == "winter":
        if a.terms is not None:
            if a.terms < 1:
                raise InputError("--terms must be positive")
            m = m.with_N(a.terms)
        t = _times(a, 2 * m.period)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", wt.TruncationWarning)
            P, err = wt.winter_decay_law(m, t)
        for w in caught:
            print(f"reslab: warning: {w.message}", file=sys.stderr)
        samples = dc.DecayLawSamples(t, P, err, "resonance-expansion")
        meta.update(terms=m.N, period=m.period)
    elif job.model == "twochannel":
        t = _times(a, 50.0)
        samples = dc.twochannel_decay_law(m, t, a.method or "poles")
    elif job.model == "friedrichs":
        t = _times(a, 50.0)
        samples = dc.decay_law(dc.friedrichs_spectral_density(m), t)
    else:
        raise InputError("decay needs --model winter, twochannel or friedrichs")
    cols = ["t", "P", "err", "method"]
    rows = [[float(ti), float(p), float(e), samples.method]
            for ti, p, e in zip(samples.times, samples.values, samples.errors)]
    if a.smooth is not None:
        try:
            L = dc.smoothed_log_derivative(samples, a.smooth).values
        except ValueError as e:
            raise InputError(f"--smooth: {e}") from None
        cols.append("dlogP")
        for r, v in zip(rows, L):
            r.append(float(v))
        meta["window"] = a.smooth
    return cols, rows, meta


def cmd_scatter(job: Job):
    a = job.args
    if a.re_min is None or a.re_max is None or not 0 < a.re_min < a.re_max:
        raise InputError("scatter needs 0 < --re-min < --re-max")
    if a.points < 1:
        raise InputError("--points must be positive")
    x = np.linspace(a.re_min, a.re_max, a.points)
    m = job.target
    if job.model == "twochannel":
        A, B = tc.twochannel_smatrix(m, x)
        kap = tc.kappa(x.astype(complex), m.E)
        open2 = np.where(x * x > m.E, kap.real / x, 0.0)
        flux = np.abs(A) ** 2 + open2 * np.abs(B) ** 2
        rows = [[float(k), A_.real, A_.imag, abs(A_), B_.real, B_.imag, abs(B_), float(fl)]
                for k, A_, B_, fl in zip(x, A, B, flux)]
        return ["k", "re_A", "im_A", "abs_A", "re_B", "im_B", "abs_B", "flux"], rows, {}
    if job.model == "friedrichs":
        S = fr.friedrichs_smatrix(m, x)
        rows = [[float(l), s.real, s.imag, abs(s), float(np.angle(s))] for l, s in zip(x, S)]
        p = fr.friedrichs_pole(m).location
        return ["lambda", "re_S", "im_S", "abs_S", "arg_S"], rows, \
            {"pole_re": p.real, "pole_im": p.imag}
    raise InputError("scatter needs --model twochannel or friedrichs")


COMMANDS = {
    "resonances": cmd_resonances,
    "count": cmd_count,
    "trajectory": cmd_trajectory,
    "decay": cmd_decay,
    "scatter": cmd_scatter,
}


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reslab", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--graph", metavar="FILE")
        s.add_argument("--model", choices=sorted(MODELS))
        s.add_argument("--params", metavar="FILE")
        s.add_argument("--out", metavar="FILE")
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        s.add_argument("--tol", type=float, default=1e-10)
        for r in ("re-min", "re-max", "im-min", "im-max"):
            s.add_argument(f"--{r}", type=float)
        if name == "count":
            s.add_argument("--r-list", help="comma-separated ascending radii")
        if name == "trajectory":
            s.add_argument("--param")
            s.add_argument("--from", dest="p_from", type=float)
            s.add_argument("--to", dest="p_to", type=float)
            s.add_argument("--steps", type=int, default=100)
            s.add_argument("--k0-re", type=float, help="seed root; else the zero in "
                           "the region closest to the real axis")
            s.add_argument("--k0-im", type=float)
        if name in ("decay", "scatter"):
            s.add_argument("--points", type=int, default=201)
        if name == "decay":
            s.add_argument("--tmax", type=float)
            s.add_argument("--terms", type=int, help="resonance terms (winter)")
            s.add_argument("--method", choices=("poles", "spectral"))
            s.add_argument("--smooth", type=float, metavar="WINDOW",
                           help="add the boxcar-smoothed d ln P/dt column")
    return p


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    job = Job(args.command, args)
    code = EXIT_OK
    try:
        _load_target(job)
        with np.errstate(all="ignore"):
            cols, rows, meta = COMMANDS[args.command](job)
        if meta.pop("lost", False):
            print("reslab: warning: lost track of the root; table is partial",
                  file=sys.stderr)
            code = EXIT_LOST
    except (InputError, GraphError) as e:
        print(f"reslab: input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except TrackLost as e:
        print(f"reslab: {e}", file=sys.stderr)
        return EXIT_LOST
    except NUMERIC_ERRORS as e:
        print(f"reslab: numeric failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"reslab: input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    meta["tool-version"] = TOOL_VERSION
    meta["config-hash"] = config_hash(job.config(), job.inputs)
    try:
        _emit(render_table(cols, rows, meta, args.format), args.out)
    except OSError as e:
        print(f"reslab: cannot write output: {e}", file=sys.stderr)
        return EXIT_INPUT
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
