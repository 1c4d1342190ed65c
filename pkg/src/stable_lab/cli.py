"""Command-line front end: ``stable-lab <command> [flags]``.

Exit codes: 0 success, 1 runtime failure, 2 invalid input, 3 acceptance failure.
"""

import argparse
import json
import sys

import numpy as np

from . import io as sio
from .charfn import HaarSample, RegimeError, default_n_haar, haar_averages
from .matrix_core import EnsembleSpec, classify_support, sample_Y_m_batch
from .presets import PRESETS, preset
from .stable_core import InvariantError, SpectralMeasureEig, mean_with_se
from . import verify

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT, EXIT_ACCEPTANCE = 0, 1, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_ensemble_flags(p):
    p.add_argument("--config", help="rerun from a config echo (output file or config JSON)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--N", type=int, dest="N")
    p.add_argument("--m", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--measure", help="JSON file with N, atoms, weights")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--t", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"))


DEFAULTS = {
    "alpha": 2.0,
    "N": 2,
    "m": 1,
    "n": 1000,
    "t": 0.5,
    "mu": 0.0,
    "format": "csv",
    "preset": "orbital",
    "grid_radii": [0.5, 1.0],
}


def build_parser():
    parser = _Parser(prog="stable-lab", description="Stable random-matrix sums: sampling and convergence checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="draw samples of Y_m")
    _add_ensemble_flags(p)
    p.add_argument("--n", type=int, help="number of samples")

    p = sub.add_parser("cf-compare", help="analytic, limiting and empirical CF over the test grid")
    _add_ensemble_flags(p)
    p.add_argument("--n", type=int, help="fresh samples for the empirical column")
    p.add_argument("--n-haar", type=int, dest="n_haar")
    p.add_argument("--grid-radii", type=_float_list, dest="grid_radii")

    p = sub.add_parser("rate-fit", help="log-log slope of the CF distance against m")
    _add_ensemble_flags(p)
    p.add_argument("--n-haar", type=int, dest="n_haar")
    p.add_argument("--m-list", type=_int_list, dest="m_list")
    p.add_argument("--grid-radii", type=_float_list, dest="grid_radii")
    p.add_argument("--no-drift", action="store_true", help="drop the alpha = 1 drift (diagnostic)")

    p = sub.add_parser("classify", help="support class of an eigenvalue measure")
    p.add_argument("--measure")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--N", type=int, dest="N")
    p.add_argument("--t", type=float)

    p = sub.add_parser("selftest", help="run the acceptance suite")
    p.add_argument("--only", type=_int_list, help="comma-separated criterion numbers")
    p.add_argument("--out", help="write a JSON report here")
    return parser


def _resolve(args, keys):
    """Merge flags over the config echo over defaults."""
    base = {}
    if getattr(args, "config", None):
        try:
            base = sio.read_echo(args.config)
        except (OSError, ValueError) as exc:
            raise InvariantError("config file is readable", str(exc)) from None
        if base.get("command") not in (None, args.command):
            raise InvariantError("config echo matches the command", f"{base.get('command')} != {args.command}")
    cfg = {}
    for key in keys:
        val = getattr(args, key, None)
        if val is None:
            val = base.get(key, DEFAULTS.get(key))
        cfg[key] = val
    if getattr(args, "measure", None) is None and getattr(args, "preset", None) is None and "measure" in base:
        cfg["measure"] = base["measure"]
    if cfg.get("seed") is None:
        cfg["seed"] = int(np.random.SeedSequence().entropy % (1 << 64))
    return cfg


def _measure(cfg, args):
    """``--measure`` file, else ``--preset``, else the echoed measure, else the default preset."""
    if getattr(args, "measure", None):
        m = sio.load_measure(args.measure)
    elif getattr(args, "preset", None) is None and isinstance(cfg.get("measure"), dict):
        m = SpectralMeasureEig.from_dict(cfg["measure"])
    else:
        t = 0.5 if cfg.get("t") is None else cfg["t"]
        m = preset(cfg.get("preset") or "orbital", int(cfg["N"]), t)
    if getattr(args, "N", None) is not None and m.dim != args.N:
        raise InvariantError("measure.dim = N", f"{m.dim} != {args.N}")
    cfg["N"] = m.dim
    cfg["measure"] = m.to_dict()
    return m


def _emit(text, out):
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _ensemble(cfg, args):
    measure = _measure(cfg, args)
    return EnsembleSpec(cfg["alpha"], measure, m=cfg["m"], mu=cfg["mu"])


ENSEMBLE_KEYS = ["alpha", "N", "m", "seed", "preset", "t", "mu", "format"]


def cmd_sample(args):
    cfg = _resolve(args, ENSEMBLE_KEYS + ["n"])
    spec = _ensemble(cfg, args)
    if int(cfg["n"]) < 0:
        raise InvariantError("n >= 0", f"got {cfg['n']}")
    cfg["command"] = "sample"
    samples = sample_Y_m_batch(spec, int(cfg["n"]), cfg["seed"])
    text = sio.matrices_to_csv(samples, cfg) if cfg["format"] == "csv" else sio.matrices_to_json(samples, cfg)
    _emit(text, args.out)
    return EXIT_OK


def _s_label(s):
    return ";".join(sio.fmt(v) for v in sio.to_triangle(s))


def cmd_cf_compare(args):
    cfg = _resolve(args, ENSEMBLE_KEYS + ["n", "n_haar", "grid_radii"])
    spec = _ensemble(cfg, args)
    cfg["command"] = "cf-compare"
    if cfg["n_haar"] is None:
        cfg["n_haar"] = default_n_haar(spec.dim)
    ws = classify_support(spec.measure)
    grid = verify.default_s_grid(spec.dim, cfg["seed"], ws, tuple(cfg["grid_radii"]))
    grid = np.concatenate([np.zeros((1, spec.dim, spec.dim), dtype=complex), grid])
    haar = HaarSample.draw(spec.dim, int(cfg["n_haar"]), (cfg["seed"], 2))
    samples = sample_Y_m_batch(spec, int(cfg["n"]), (cfg["seed"], 8))
    rows = []
    for s in grid:
        label = _s_label(s)
        avg = haar_averages(s, spec.measure, spec.alpha, haar)
        if spec.mu:
            # the shift mu I multiplies the CF by exp(i mu tr S)
            phase = np.exp(1j * spec.mu * np.real(np.trace(s)))
        else:
            phase = 1.0
        cm = avg.cf_m(spec.m)
        ci = avg.cf_infinity()
        emp = mean_with_se(np.exp(1j * np.real(np.einsum("ij,sji->s", s, samples)))) if len(samples) else None
        rows.append({"s_spec": label, "m": spec.m, "value": cm.value * phase, "se": cm.std_error, "source": "analytic"})
        rows.append({"s_spec": label, "m": None, "value": ci.value * phase, "se": ci.std_error, "source": "limit"})
        if emp is not None:
            rows.append({"s_spec": label, "m": spec.m, "value": emp.value, "se": emp.std_error, "source": "empirical"})
    if cfg["format"] == "csv":
        text = sio.cf_rows_to_csv(rows, cfg)
    else:
        text = sio.report_to_json(sio.make_report(cfg, {"cf": rows}, {}, cfg["seed"]))
    _emit(text, args.out)
    return EXIT_OK


def cmd_rate_fit(args):
    cfg = _resolve(args, ENSEMBLE_KEYS + ["n_haar", "m_list", "grid_radii"])
    spec = _ensemble(cfg, args)
    cfg["command"] = "rate-fit"
    cfg["drift"] = not args.no_drift
    if cfg["m_list"] is None:
        cfg["m_list"] = [8, 16, 32, 64, 128, 256, 512]
    exp = verify.ExperimentConfig(
        spec, cfg["m_list"], n_haar=cfg["n_haar"], seed=cfg["seed"], grid_radii=tuple(cfg["grid_radii"])
    )
    cfg["n_haar"] = exp.n_haar
    curve = verify.rate_fit(exp, drift=cfg["drift"])
    passed = curve.in_window()
    verdicts = {"slope_in_window": passed, "window": list(verify.RATE_WINDOW)}
    if cfg["format"] == "csv":
        lines = [sio.ECHO_PREFIX + sio.canonical_json(cfg), "m,distance"]
        lines += [f"{m},{sio.fmt(d)}" for m, d in zip(curve.m_values, curve.distances)]
        lines.append(f"# slope: {sio.fmt(curve.slope)} +- {sio.fmt(curve.slope_stderr)} pass={passed}")
        text = "\n".join(lines) + "\n"
    else:
        text = sio.report_to_json(sio.make_report(cfg, {"rate": curve.to_dict()}, verdicts, cfg["seed"]))
    _emit(text, args.out)
    return EXIT_OK if passed else EXIT_ACCEPTANCE


def cmd_classify(args):
    cfg = {"N": args.N if args.N is not None else 2, "preset": args.preset, "t": args.t if args.t is not None else 0.5}
    if args.measure is None and args.preset is None:
        raise InvariantError("one of --measure or --preset is given")
    measure = _measure(cfg, args)
    print(classify_support(measure))
    return EXIT_OK


def cmd_selftest(args):
    from .acceptance import run_all

    results = run_all(only=args.only, echo=print)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    if args.out:
        report = sio.make_report(
            {"command": "selftest", "only": args.only},
            {"criteria": [{"number": r.number, "name": r.name, "detail": r.detail, "seconds": r.seconds} for r in results]},
            {str(r.number): r.passed for r in results},
            None,
        )
        _emit(sio.report_to_json(report), args.out)
    return EXIT_ACCEPTANCE if failed else EXIT_OK


COMMANDS = {
    "sample": cmd_sample,
    "cf-compare": cmd_cf_compare,
    "rate-fit": cmd_rate_fit,
    "classify": cmd_classify,
    "selftest": cmd_selftest,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"stable-lab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantError as exc:
        print(f"stable-lab: invalid input: invariant '{exc.invariant}' violated: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RegimeError as exc:
        print(f"stable-lab: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, json.JSONDecodeError) as exc:
        print(f"stable-lab: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except SystemExit as exc:
        # --help and friends
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
