"""Command line entry point: ``zeroloss <subcommand> ...``.

Every subcommand writes plain CSV/JSON (LF line endings, UTF-8) and, with
``--out-dir``, a ``run_manifest.json`` recording the exact argument vector so
``zeroloss replay`` can regenerate the outputs.  Exit codes: 0 success,
2 bad flags or input files, 3 numerical failure, 4 precondition violation.
"""

import argparse
import datetime as _dt
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds, docmodel, finitehyp, fitting, montecarlo
from .errors import ParseError, ZerolossError
from .geometry import DiskProblem, FeatureMap

MANIFEST = "run_manifest.json"


# --- argument types -------------------------------------------------------------


def _int_list(text):
    """'2,4,8' or '1..64' (inclusive) or a mix of both."""
    out = []
    try:
        for item in text.split(","):
            item = item.strip()
            if ".." in item:
                lo, hi = (int(v) for v in item.split(".."))
                if hi < lo:
                    raise ValueError
                out.extend(range(lo, hi + 1))
            elif item:
                out.append(int(item))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _float_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v

    return parse


def _non_negative_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _unit(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {text}")
    return v


# --- output helpers ---------------------------------------------------------------


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path, obj):
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("ZEROLOSS_THREADS")
    if env:
        try:
            k = int(env)
        except ValueError:
            raise argparse.ArgumentTypeError(f"ZEROLOSS_THREADS must be an integer, got {env!r}") from None
        if k >= 1:
            return k
    return 1


def _params(args):
    skip = {"func", "argv"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _clean(v):
    """JSON-safe scalars: NaN and inf become None."""
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


# --- subcommands ------------------------------------------------------------------


def cmd_separable(args):
    fmap = FeatureMap.identity() if args.feature == "linear" else FeatureMap.polynomial(10)
    config = montecarlo.ExperimentConfig(
        n_values=tuple(sorted(set(args.n_list))),
        trials_per_n=args.trials,
        test_count=args.test_count,
        feature_map=fmap,
        master_seed=args.seed,
        epsilons=tuple(sorted(set(args.epsilons))),
        quantiles=tuple(sorted(set(args.quantiles))),
        max_updates=args.max_updates,
    )
    records = montecarlo.run_experiment(config, DiskProblem(), threads=_threads(args))
    rows = montecarlo.summarize(records, config.epsilons, config.quantiles)
    tight = {f"{e:g}": montecarlo.tight_R(rows, e) for e in config.epsilons}
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "trials.csv", montecarlo.records_to_csv(records))
    _write_text(out / "summary.csv", montecarlo.summary_to_csv(rows))
    summary = {"feature": args.feature, "seed": args.seed, "rows": montecarlo.summary_to_json(rows), "tight_R": tight}
    _write_json(out / "summary.json", _clean(summary))
    if args.plot:
        from .plotting import plot_separable

        plot_separable(out / "trials.csv", out / "summary.json", out / "separable.svg", R_values=args.R or ())
    return None


def _load_finite(source):
    if os.path.exists(source) or source.lstrip().startswith("{"):
        return finitehyp.load_problem(source)
    if source in finitehyp.bundled_problem_names():
        return finitehyp.bundled_problem(source)
    raise ParseError(f"no such problem file or bundled problem: {source!r}")


def cmd_finite(args):
    problem = _load_finite(args.problem)
    report = finitehyp.exact_report(problem, args.n, args.epsilon, args.mode, args.condition_nonempty)
    d = report.to_dict()
    mean_h = report.mean_minima_count
    d["checks"] = {
        "mean_count_error": abs(report.mean_bad_count - report.formula_bad_count),
        "covariance_error": abs(
            (report.rhs_ratio_of_means - report.lhs_mean_ratio) - report.covariance_term / mean_h
        ),
    }
    d["problem"] = {"m": problem.m, "hypotheses": int(problem.hypotheses.shape[0]), "e_min": problem.e_min}
    return {"finite_report.json": d}


def cmd_doc(args):
    if args.point_mass is not None:
        if args.curve != "learning":
            raise argparse.ArgumentTypeError("--point-mass only applies to --curve learning")
        params = docmodel.PointMassDoc(args.point_mass)
    else:
        missing = [f for f in ("e_min", "alpha", "beta") if getattr(args, f) is None]
        if missing:
            raise argparse.ArgumentTypeError("missing " + ", ".join("--" + m.replace("_", "-") for m in missing))
        params = docmodel.DocParams(args.e_min, args.e_max, args.alpha, args.beta)

    lines = []
    if args.curve == "qn":
        lines.append("n,E,q_n")
        steps = int(round((params.e_max - params.e_min) / args.grid_step))
        grid = params.e_min + args.grid_step * np.arange(steps + 1)
        grid = grid[grid <= params.e_max + 1e-12]
        for n in args.n_list:
            vals = docmodel.q_n(grid, n, params)
            lines += [f"{n},{e!r},{float(v)!r}" for e, v in zip(grid.tolist(), vals)]
    else:
        lines.append("n,expected_error,expected_error_closed")
        closed_ok = isinstance(params, docmodel.DocParams) and params.e_max == 1.0
        for n in args.n_list:
            quad = docmodel.expected_error_quadrature(n, params)
            closed = (
                repr(docmodel.expected_error_closed(n, params.e_min, params.alpha, params.beta)) if closed_ok else ""
            )
            lines.append(f"{n},{quad!r},{closed}")
    name = f"doc_{args.curve}.csv"
    return {name: "\n".join(lines) + "\n"}


def cmd_bounds(args):
    def need(*names):
        missing = [n for n in names if getattr(args, n) is None]
        if missing:
            raise argparse.ArgumentTypeError(
                f"--kind {args.kind} needs " + ", ".join("--" + m.replace("_", "-") for m in missing)
            )

    out = {"kind": args.kind}
    if args.kind == "vc":
        need("d", "epsilon")
        out.update(d=args.d, epsilon=args.epsilon)
        if args.solve_n:
            need("delta")
            out.update(delta=args.delta, n=bounds.vc_min_n(args.d, args.epsilon, args.delta))
        else:
            need("n")
            out.update(n=args.n, value=bounds.vc_bound(args.d, args.n, args.epsilon))
    elif args.kind == "frac":
        need("R", "epsilon")
        out.update(R=args.R, epsilon=args.epsilon, form=args.form)
        if args.solve_n:
            need("delta")
            out.update(delta=args.delta, n=bounds.frac_min_n(args.R, args.epsilon, args.delta, args.form))
        else:
            need("n")
            out.update(n=args.n, value=bounds.frac_bound(args.R, args.n, args.epsilon, args.form))
    else:
        need("R", "n")
        tight, loose = bounds.quartile_eps(args.R, args.n, args.q)
        out.update(R=args.R, n=args.n, q=args.q, epsilon_tight=tight, epsilon_loose=loose)
    return {"bounds.json": _clean(out)}


def _curve_source(source):
    if os.path.exists(source):
        return source
    path = resources.files("zeroloss") / "data" / "curves" / f"{source}.csv"
    if path.is_file():
        return path.open("r", encoding="utf-8", newline="")
    return source  # let the parser report the missing file


def bundled_curve_names():
    root = resources.files("zeroloss") / "data" / "curves"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".csv"))


def cmd_fit(args):
    src = _curve_source(args.input)
    try:
        points = fitting.parse_curve_csv(src)
    finally:
        if hasattr(src, "close"):
            src.close()
    e0 = args.fix_e0
    if args.classes is not None:
        e0 = fitting.e0_for_classes(args.classes)
    fit = fitting.fit_curve(points, e0_fixed=e0)
    n_max = max(p.n for p in points)
    grid = sorted({0, *(p.n for p in points), *np.unique(np.geomspace(1, 10 * max(n_max, 1), 200).astype(int)).tolist()})
    report, curve_csv = fitting.fit_report(fit, points, grid)
    return {
        "fit.json": _clean(report),
        "fit_curve.csv": curve_csv,
        "fit_data.csv": fitting.curve_to_csv(points),
    }


def _plot(args, out):
    from . import plotting

    if args.command == "doc":
        plotting.plot_doc(out / f"doc_{args.curve}.csv", out / f"doc_{args.curve}.svg", args.curve)
    elif args.command == "fit":
        plotting.plot_fit(out / "fit_data.csv", out / "fit_curve.csv", out / "fit.json", out / "fit.svg")


# --- parser -----------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="zeroloss", description="Global-minima generalization experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("separable", help="perceptron Monte Carlo on the disk problem")
    s.add_argument("--n-list", type=_int_list, required=True, help="e.g. 2,4,8 or 1..64")
    s.add_argument("--trials", type=_positive(int), default=10000)
    s.add_argument("--test-count", type=_positive(int), default=100000)
    s.add_argument("--feature", choices=("linear", "poly10"), default="linear")
    s.add_argument("--seed", type=_non_negative_int, required=True)
    s.add_argument("--epsilons", type=_float_list, default=[0.05, 0.1])
    s.add_argument("--quantiles", type=_float_list, default=[0.25, 0.5, 0.75])
    s.add_argument("--max-updates", type=_positive(int), default=1_000_000)
    s.add_argument("--R", type=_float_list, default=None, help="volume ratios to overlay on the plot")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--threads", type=_positive(int), default=None)
    s.add_argument("--plot", action="store_true")
    s.set_defaults(func=cmd_separable)

    f = sub.add_parser("finite", help="exact enumeration on a finite problem")
    f.add_argument("--problem", required=True, help="JSON file or bundled name: " + ", ".join(finitehyp.bundled_problem_names()))
    f.add_argument("--n", type=_positive(int), required=True)
    f.add_argument("--epsilon", type=_unit, required=True)
    f.add_argument("--mode", choices=("support", "exhaustive"), default="support")
    f.add_argument("--condition-nonempty", action="store_true")
    f.add_argument("--out-dir")
    f.set_defaults(func=cmd_finite)

    d = sub.add_parser("doc", help="density-of-classifiers curves")
    d.add_argument("--e-min", type=_unit)
    d.add_argument("--e-max", type=_unit, default=1.0)
    d.add_argument("--alpha", type=_positive(float))
    d.add_argument("--beta", type=_positive(float))
    d.add_argument("--point-mass", type=_unit, default=None, help="all classifiers at this error")
    d.add_argument("--n-list", type=_int_list, required=True)
    d.add_argument("--curve", choices=("qn", "learning"), default="qn")
    d.add_argument("--grid-step", type=_positive(float), default=1e-3)
    d.add_argument("--out-dir")
    d.add_argument("--plot", action="store_true")
    d.set_defaults(func=cmd_doc)

    b = sub.add_parser("bounds", help="evaluate or invert a generalization bound")
    b.add_argument("--kind", choices=("vc", "frac", "quartile"), required=True)
    b.add_argument("--solve-n", action="store_true", help="report the smallest n reaching --delta")
    b.add_argument("--d", type=_positive(int))
    b.add_argument("--R", type=float)
    b.add_argument("--epsilon", type=_unit)
    b.add_argument("--delta", type=_positive(float))
    b.add_argument("--n", type=_non_negative_int)
    b.add_argument("--q", type=_positive(float), default=0.25)
    b.add_argument("--form", choices=("power", "exp"), default="exp")
    b.add_argument("--out-dir")
    b.set_defaults(func=cmd_bounds)

    t = sub.add_parser("fit", help="fit the learning curve to (n, mean error) data")
    t.add_argument("--input", required=True, help="CSV path or bundled name: " + ", ".join(bundled_curve_names()))
    g = t.add_mutually_exclusive_group()
    g.add_argument("--fix-e0", type=_unit)
    g.add_argument("--classes", type=int)
    t.add_argument("--out-dir")
    t.add_argument("--plot", action="store_true")
    t.set_defaults(func=cmd_fit)

    r = sub.add_parser("replay", help="re-run the command recorded in a run manifest")
    r.add_argument("manifest")
    r.add_argument("--out-dir", help="write to this directory instead of the recorded one")
    r.set_defaults(func=None)
    return p


def _replay(args):
    try:
        with open(args.manifest, encoding="utf-8") as fh:
            manifest = json.load(fh)
        argv = list(manifest["argv"])
    except (OSError, ValueError, KeyError) as exc:
        raise ParseError(f"unreadable manifest: {exc}") from exc
    if args.out_dir:
        if "--out-dir" in argv:
            argv[argv.index("--out-dir") + 1] = args.out_dir
        else:
            argv += ["--out-dir", args.out_dir]
    return main(argv)


def _run(args, argv):
    if args.command == "replay":
        return _replay(args)
    if getattr(args, "plot", False) and not args.out_dir:
        raise argparse.ArgumentTypeError("--plot needs --out-dir")
    started = _now()
    outputs = args.func(args)
    out = Path(args.out_dir) if args.out_dir else None
    if outputs:
        if out is None:
            # only the primary output goes to stdout
            content = next(iter(outputs.values()))
            if isinstance(content, str):
                sys.stdout.write(content)
            else:
                sys.stdout.write(json.dumps(content, indent=2, sort_keys=True, allow_nan=False) + "\n")
        else:
            out.mkdir(parents=True, exist_ok=True)
            for name, content in outputs.items():
                if isinstance(content, str):
                    _write_text(out / name, content)
                else:
                    _write_json(out / name, content)
    if out is not None:
        if getattr(args, "plot", False):
            _plot(args, out)
        manifest = {
            "subcommand": args.command,
            "argv": argv,
            "params": _params(args),
            "master_seed": getattr(args, "seed", None),
            "tool_version": __version__,
            "started": started,
            "finished": _now(),
        }
        _write_json(out / MANIFEST, manifest)
    return 0


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return _run(args, argv)
    except argparse.ArgumentTypeError as exc:
        print(f"zeroloss: error: {exc}", file=sys.stderr)
        return 2
    except ZerolossError as exc:
        print(f"zeroloss: {exc.code}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
