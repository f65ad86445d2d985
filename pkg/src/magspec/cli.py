"""Command-line front end.

Every command builds a JSON report and, where it makes sense, a table.
With ``--format json`` both go to one JSON document; with ``--format csv``
the table is written as CSV and the report goes to a sibling ``.json``
file (or to stderr when writing to stdout).  Numbers in reports carry an
``abs_tol``/``rel_tol`` or certificate field.

Exit codes: 0 ok, 2 usage error, 3 numerical failure.
"""

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import correction as corr
from . import dynamics as dyn
from . import fields, model, weyl
from .errors import MagspecError, NumericalFailure, UsageError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


def num(value, abs_tol=None, rel_tol=None, **extra):
    out = {"value": float(value)}
    if abs_tol is not None:
        out["abs_tol"] = float(abs_tol)
    if rel_tol is not None:
        out["rel_tol"] = float(rel_tol)
    out.update(extra)
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _grid(text):
    """``a:b:step`` (b included when on the grid) or a comma list."""
    if ":" not in text:
        return _floats(text)
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    n = int(math.floor((b - a) / step + 1e-9))
    return [a + i * step for i in range(n + 1)]


def _keyvals(text):
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise argparse.ArgumentTypeError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        try:
            out[k.strip()] = float(v) if "." in v or "e" in v.lower() else int(v)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad value in {part!r}") from None
    return out


def _global_options():
    p = _Parser(add_help=False)
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    p.add_argument("--tol", type=float, default=None, help="tolerance override")
    p.add_argument("--config", help="JSON file with defaults for this command")
    return p


def build_parser():
    common = _global_options()
    parser = _Parser(prog="magspec", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, help=help_, parents=[common])

    p = add("trajectory", "degenerate model run (or a field from JSON)")
    p.add_argument("--model", type=_keyvals, default={"nu": 2}, help="e.g. nu=2,W=1")
    p.add_argument("--k", default="kstar", help="xi2 value or 'kstar'")
    p.add_argument("--mu", type=float, default=100.0)
    p.add_argument("--alpha", type=float, default=0.0, help="V = W - alpha x1 (model units)")
    p.add_argument("--periods", type=int, default=10)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--field", help="field JSON file; enables the generic mode")
    p.add_argument("--potential", default="1", help="scalar potential expression (generic mode)")
    p.add_argument("--x0", type=_floats)
    p.add_argument("--p0", type=_floats, help="initial kinetic momentum")
    p.add_argument("--T", type=float, default=1.0)

    p = add("drift-scan", "guiding-center deviation versus mu")
    p.add_argument("--alpha", type=float, default=0.5, help="V = 1 - alpha x1, constant field")
    p.add_argument("--beta", type=float, default=0.0, help="extra alpha*beta x1 x2 term")
    p.add_argument("--mus", type=_floats, default=[25.0, 50.0, 100.0, 200.0])
    p.add_argument("--T", type=float, default=2.0)

    p = add("kstar", "critical momentum k*")
    p.add_argument("--nu", type=int, default=2)
    p.add_argument("--W", type=float, default=1.0)

    p = add("period", "period, drift increment and action over a k grid")
    p.add_argument("--nu", type=int, default=2)
    p.add_argument("--W", type=float, default=1.0)
    p.add_argument("--k", type=_grid, default=[0.3])
    p.add_argument("--well", choices=("right", "left"), default="right")

    p = add("lines", "magnetic line of a field")
    p.add_argument("--field", required=True, help="canonical kind or JSON file")
    p.add_argument("--params", type=_keyvals, default={})
    p.add_argument("--x0", type=_floats, required=True)
    p.add_argument("--arc", type=float, default=1.0)
    p.add_argument("--step", type=float, default=0.01)

    p = add("weyl", "magnetic Weyl density at a point")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--f", type=_floats, default=[])
    p.add_argument("--V", type=float, default=0.0)
    p.add_argument("--E", type=float, default=0.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--g", type=float, default=1.0)

    p = add("landau", "2D Landau density over a threshold grid")
    p.add_argument("--f", type=float, default=1.0)
    p.add_argument("--V", type=float, default=0.0)
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--tau", type=_grid, default=[0.0])

    p = add("eigencount", "eigenvalue count of the auxiliary 1D operator")
    p.add_argument("--nu", type=int, default=2)
    p.add_argument("--hbar", type=float, default=0.02)
    p.add_argument("--xi2", type=float, default=0.0)
    p.add_argument("--W", type=float, default=1.0)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--N", type=int, default=400)
    p.add_argument("--method", choices=("fd", "bs", "both"), default="both")

    p = add("correction", "correction term of the degenerate zone")
    p.add_argument("--nu", type=int, default=2)
    p.add_argument("--W", type=float, default=1.0)
    p.add_argument("--hbar", type=_floats, default=[0.05])
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--xi2-samples", type=int, default=0, help="tabulate n0 on this many points")

    p = add("gfunc", "the periodic function G")
    p.add_argument("--t-grid", type=_grid, default=_grid("0:1:0.01"))
    p.add_argument("--eta-cutoff", type=float, default=200.0)

    p = add("fit-correction", "sweep the correction term and fit the closed form")
    p.add_argument("--nu", type=int, default=2)
    p.add_argument("--hbar", type=_floats, default=[0.05, 0.025, 0.0125])
    p.add_argument("--periods", type=int, default=1)
    p.add_argument("--per-period", type=int, default=32)
    p.add_argument("--h", type=float, default=1.0)
    return parser


# --- commands -------------------------------------------------------------------


def _resolve_k(text, nu, W):
    if str(text).lower() == "kstar":
        return model.find_kstar(nu, W).value * 1.0
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"--k must be a number or 'kstar', got {text!r}") from None


def cmd_trajectory(a):
    tol = a.tol or 1e-11
    if a.field:
        return _generic_trajectory(a, tol)
    unknown = set(a.model) - {"nu", "W"}
    if unknown:
        raise UsageError(f"unknown --model keys: {sorted(unknown)}")
    nu = int(a.model.get("nu", 2))
    W = float(a.model.get("W", 1.0))
    if W != 1.0:
        raise UsageError("trajectory runs the W=1 model; rescale k instead")
    k = _resolve_k(a.k, nu, W)
    m = model.EffectiveModel(nu, k)
    T_k = model.period_T(m)
    I_k = model.drift_increment_I(m)
    # physical duration covering the requested number of x1-periods
    T_phys = (a.periods + 0.5) * math.sqrt(2.0) * T_k * a.mu ** (-1.0 / nu)
    run = dyn.simulate_model(nu, a.mu, k, T_phys, alpha=a.alpha, tol=tol, n_samples=a.samples)
    s = run.sample
    rows = [
        {"t": t, "x1": x[0], "x2": x[1], "xi1": xi[0], "xi2": xi[1], "H": H}
        for t, x, xi, H in zip(s.t, s.x, s.xi, s.H)
    ]
    dx = np.array(run.dx2_per_period)
    dtol = 100 * tol * max(1.0, float(np.max(np.abs(dx))))
    report = {
        "command": "trajectory",
        "nu": nu,
        "k": num(k, 1e-10 if str(a.k).lower() == "kstar" else 0.0),
        "mu": a.mu,
        "alpha": a.alpha,
        "units": "dx2 in mu=1 model units; physical dx2 = model dx2 * mu^(-1/nu)",
        "dx2_per_period": num(run.mean_dx2, dtol),
        "dx2_spread": num(float(np.ptp(dx)) if dx.size else 0.0, dtol),
        "periods": len(dx),
        "path_length_per_period": num(run.path_length_per_period, dtol),
        "I": num(I_k, 1e-9),
        "T": num(T_k, rel_tol=1e-8),
        "sqrt2_I": num(math.sqrt(2.0) * I_k, 2e-9),
        "periodic": bool(abs(run.mean_dx2) < 1e-3),
        "energy_drift": num(s.energy_drift, abs_tol=s.energy_tol),
    }
    return report, rows


def _generic_trajectory(a, tol):
    doc = _load_json(a.field)
    fd = fields.field_from_json(doc)
    A, g = fd["potential"], fd["metric"]
    V = fields.ScalarField.from_expression(a.potential, A.dim)
    sys_ = dyn.MagneticSystem(g, A, V, a.mu)
    if a.x0 is None or a.p0 is None or len(a.x0) != A.dim or len(a.p0) != A.dim:
        raise UsageError(f"--x0 and --p0 need {A.dim} components")
    z0 = dyn.PhasePoint.from_kinetic(sys_, a.x0, a.p0)
    tr = dyn.integrate_trajectory(sys_, z0, a.T, tol, n_samples=a.samples)
    d = A.dim
    rows = []
    for t, x, xi, H in zip(tr.t, tr.x, tr.xi, tr.H):
        row = {"t": t}
        row.update({f"x{i + 1}": x[i] for i in range(d)})
        row.update({f"xi{i + 1}": xi[i] for i in range(d)})
        row["H"] = H
        rows.append(row)
    report = {
        "command": "trajectory",
        "mode": "field",
        "H0": num(tr.H[0], tr.energy_tol),
        "energy_drift": num(tr.energy_drift, abs_tol=tr.energy_tol),
        "truncated": tr.truncated,
    }
    return report, rows


def cmd_drift_scan(a):
    tol = a.tol or 1e-12
    A = dyn.symmetric_gauge_system(1.0, 1.0).potential
    V = fields.ScalarField(
        2,
        lambda x: 1.0 - a.alpha * x[0] + a.alpha * a.beta * x[0] * x[1],
        lambda x: np.array([-a.alpha + a.alpha * a.beta * x[1], a.alpha * a.beta * x[0]]),
    )
    sys_ = dyn.MagneticSystem(fields.MetricTensor.identity(2), A, V, 1.0)
    res = dyn.guiding_center_error_scan(sys_, [0.0, 0.0], [1.0, 0.0], a.mus, a.T, tol)
    rows = [
        {"mu": m, "deviation": d, "periods": n}
        for m, d, n in zip(res.mus, res.deviations, res.periods)
    ]
    report = {
        "command": "drift-scan",
        "slope": num(res.slope, 0.05, note="least-squares log-log fit"),
        "no_drift": res.no_drift,
        "integrator_tol": tol,
    }
    return report, rows


def cmd_kstar(a):
    ks = model.find_kstar(a.nu, a.W, xtol=a.tol or 1e-10)
    report = {
        "command": "kstar",
        "nu": a.nu,
        "W": a.W,
        "kstar": num(ks.value, ks.xtol),
        "dI_dk": num(ks.dI_dk, rel_tol=1e-4, note="central difference"),
    }
    return report, None


def _period_row(args):
    nu, W, k, well, tol = args
    m = model.EffectiveModel(nu, k, W)
    census = model.well_census(m)
    row = {"k": k, "label": census.label}
    if census.degenerate:
        row.update({"T": math.inf, "I": math.nan})
    else:
        row["T"] = model.period_T(m, well, rel_tol=tol)
        row["I"] = model.drift_increment_I(m, well)
    row["S"] = model.action(m, well)
    lo, hi = model.turning_points(m, well)
    row.update({"x1_minus": lo, "x1_plus": hi})
    return row


def _pmap(func, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(jobs) as ex:
            return list(ex.map(func, items))
    return [func(i) for i in items]


def cmd_period(a):
    tol = a.tol or 1e-9
    rows = _pmap(_period_row, [(a.nu, a.W, k, a.well, tol) for k in a.k], a.jobs)
    report = {
        "command": "period",
        "nu": a.nu,
        "W": a.W,
        "well": a.well,
        "certificate": {"T_rel_tol": tol, "I_abs_tol": 1e-9, "S_rel_tol": 1e-11},
        "rows": len(rows),
    }
    return report, rows


def cmd_lines(a):
    p = Path(a.field)
    if p.suffix == ".json" or p.exists():
        fd = fields.field_from_json(_load_json(a.field))
        F = fd["two_form"]
    else:
        _, F = fields.canonical_field(a.field, **a.params)
    if len(a.x0) != F.dim:
        raise UsageError(f"--x0 needs {F.dim} components")
    ln = fields.magnetic_line(F, a.x0, a.arc, a.step, tol=a.tol or fields.RANK_TOL)
    rows = [dict(s=s, **{f"x{i + 1}": v for i, v in enumerate(pt)}) for s, pt in zip(ln.arc, ln.points)]
    report = {
        "command": "lines",
        "field": a.field,
        "samples": len(rows),
        "step": num(float(ln.arc[1] - ln.arc[0]), note="RK4, unit speed"),
        "rank_tol": a.tol or fields.RANK_TOL,
    }
    return report, rows


def cmd_weyl(a):
    p = weyl.WeylParams(a.d, a.r, tuple(a.f), a.V, a.E, a.mu, a.h, a.g)
    dv = weyl.magnetic_weyl_density(p)
    jumps = []
    if a.r == 1 and a.d == 2:
        jumps, _ = weyl.landau_jumps(a.f[0], a.V, a.mu, a.h, dv.terms + 1)
    report = {
        "command": "weyl",
        "density": num(dv.value, 0.0, note="finite exact sum"),
        "terms": dv.terms,
        "alpha_bounds": list(dv.bounds),
        "largest_discarded": dv.largest_discarded,
        "jumps": [num(t, 0.0) for t in jumps],
    }
    return report, None


def cmd_landau(a):
    rows = [
        {"tau": t, "density": weyl.landau_density_2d(a.f, a.V, a.g, a.mu, a.h, t)} for t in a.tau
    ]
    taus, size = weyl.landau_jumps(a.f, a.V, a.mu, a.h, 8)
    report = {
        "command": "landau",
        "jump_size": num(size, 0.0),
        "first_jumps": [num(t, 0.0) for t in taus],
        "certificate": "exact finite sums",
    }
    return report, rows


def cmd_eigencount(a):
    op = corr.AuxOperator1D(a.nu, a.hbar, a.xi2, a.W)
    report = {"command": "eigencount", "tau": a.tau}
    if a.method in ("fd", "both"):
        c = corr.fd_eigencount(op, a.tau, a.N)
        cert = {k: v for k, v in c.certificate.items() if k != "history"}
        report["fd"] = {"count": c.count, "certificate": cert}
    if a.method in ("bs", "both"):
        c, levels = corr.bohr_sommerfeld_eigenvalues(op, a.tau)
        report["bohr_sommerfeld"] = {
            "count": c.count,
            "levels": [num(E, c.certificate["xtol"]) for E in levels],
        }
    return report, None


def _corr_one(args):
    nu, W, hbar, h, tau = args
    return corr.correction_term(nu, W, hbar, h, tau)


def cmd_correction(a):
    results = _pmap(_corr_one, [(a.nu, a.W, hb, a.h, a.tau) for hb in a.hbar], a.jobs)
    rows = []
    sweeps = []
    for r in results:
        entry = {
            "hbar": r.hbar,
            "correction": num(r.value, 1e-9 / r.h, note="level sum with Hurwitz-zeta tail"),
            "levels": r.n_levels,
            "window": list(r.window),
        }
        if a.xi2_samples:
            grid = np.linspace(r.window[0], r.window[1], a.xi2_samples)
            n0 = [
                corr.bohr_sommerfeld_count(corr.AuxOperator1D(a.nu, r.hbar, float(x), a.W), a.tau)
                for x in grid
            ]
            entry["xi2_grid"] = grid.tolist()
            entry["n0"] = n0
        sweeps.append(entry)
        rows.append({"hbar": r.hbar, "correction": r.value, "level_sum": r.level_sum})
    report = {"command": "correction", "nu": a.nu, "W": a.W, "h": a.h, "tau": a.tau, "sweeps": sweeps}
    return report, rows


def cmd_gfunc(a):
    tol = a.tol or 1e-5
    rows = [{"t": t, "G": corr.g_function(t, a.eta_cutoff, tol), "abs_tol": tol} for t in a.t_grid]
    n = 512
    mids = (np.arange(n) + 0.5) / n
    integral = float(np.mean([corr.g_function(t, a.eta_cutoff, tol) for t in mids]))
    report = {
        "command": "gfunc",
        "integral_0_1": num(integral, 1e-4, note="512-node midpoint rule"),
        "max_abs": num(max(abs(r["G"]) for r in rows), tol),
        "samples": len(rows),
    }
    return report, rows


def cmd_fit_correction(a):
    S_cl = corr.classical_action_at_kstar(a.nu)
    Ws, hs, vals, amps, rows = [], [], [], [], []
    for hb in a.hbar:
        t0 = math.ceil(S_cl / (2 * math.pi * hb))
        sw = corr.action_sweep(a.nu, hb, t0, a.periods, a.per_period, a.h, jobs=a.jobs)
        amps.append(corr.oscillation_amplitude(sw))
        Ws.extend(sw.W)
        hs.extend([hb] * len(sw.W))
        vals.extend(sw.values)
        rows.extend({"hbar": hb, "t": t, "W": w, "correction": v} for t, w, v in zip(sw.t, sw.W, sw.values))
    p = float(np.polyfit(np.log(a.hbar), np.log(amps), 1)[0]) if len(a.hbar) > 1 else math.nan
    fit = corr.fit_correction(Ws, hs, vals, a.nu, a.h, S0_range=(0.5 * S_cl, 1.5 * S_cl))
    report = {
        "command": "fit-correction",
        "exponent_p": num(p, 0.05, note="log-log slope of the RMS amplitude"),
        "amplitudes": [num(v, 1e-8) for v in amps],
        "fit": {"kappa": num(fit.kappa, rel_tol=1e-3), "S0": num(fit.S0, rel_tol=1e-6), "rms": fit.rms},
        "classical_action": num(S_cl, rel_tol=1e-10),
        "S0_relative_gap": abs(abs(fit.S0) - S_cl) / S_cl,
    }
    return report, rows


COMMANDS = {
    "trajectory": cmd_trajectory,
    "drift-scan": cmd_drift_scan,
    "kstar": cmd_kstar,
    "period": cmd_period,
    "lines": cmd_lines,
    "weyl": cmd_weyl,
    "landau": cmd_landau,
    "eigencount": cmd_eigencount,
    "correction": cmd_correction,
    "gfunc": cmd_gfunc,
    "fit-correction": cmd_fit_correction,
}


# --- plumbing ---------------------------------------------------------------------


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON in {path}: {exc}") from None


def _apply_config(parser, argv, args):
    """Reparse with the config file as defaults; flags still win."""
    cfg = _load_json(args.config)
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    dests = {act.dest for act in subparser._actions} - {"help", "config", "command"}
    unknown = set(k.replace("-", "_") for k in cfg) - dests
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    subparser.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
    return parser.parse_args(argv)


def _dumps(obj):
    def clean(o):
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        if isinstance(o, (np.floating, float)):
            v = float(o)
            return v if math.isfinite(v) else str(v)
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.bool_):
            return bool(o)
        return o

    return json.dumps(clean(obj), indent=2, sort_keys=True) + "\n"


def _csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(float(v)) if isinstance(v, (float, np.floating)) else v for k, v in r.items()})
    return buf.getvalue()


def emit(report, rows, fmt, out, stdout, stderr):
    if fmt == "json" or not rows:
        doc = dict(report)
        if rows:
            doc["table"] = rows
        text = _dumps(doc)
        if out:
            Path(out).write_text(text)
        else:
            stdout.write(text)
        return
    table = _csv(rows)
    if out:
        Path(out).write_text(table)
        Path(out).with_suffix(".json").write_text(_dumps(report))
    else:
        stdout.write(table)
        stderr.write(_dumps(report))


def _error(kind, exc, stderr):
    stderr.write(_dumps({"error": {"type": kind, "class": type(exc).__name__, "message": str(exc)}}))


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            args = _apply_config(parser, argv, args)
        if args.tol is not None and not args.tol > 0:
            raise UsageError("--tol must be positive")
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        report, rows = COMMANDS[args.command](args)
        emit(report, rows, args.format, args.out, stdout, stderr)
    except NumericalFailure as exc:
        _error("numerical", exc, stderr)
        return EXIT_NUMERIC
    except (UsageError, MagspecError, ValueError) as exc:
        _error("usage", exc, stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
