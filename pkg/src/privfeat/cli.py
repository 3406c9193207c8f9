"""Command-line front end.

Exit codes: 0 success, 2 input/IO error, 3 domain error (unknown feature,
out-of-range parameter).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from typing import List, Optional

import numpy as np

from . import catalog, leakage, selector
from .errors import DecodeError, MissingFeatureScores, PrivfeatError, ScoreFileError, UnknownFeatureId
from .signal import DEFAULT_SAMPLE_RATE, DEFAULT_WINDOW_MS, WindowPlan, read_wav, resample

EXIT_OK, EXIT_INPUT, EXIT_DOMAIN = 0, 2, 3


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _input_error(msg):
    return CliError(msg, EXIT_INPUT)


def _domain_error(msg):
    return CliError(msg, EXIT_DOMAIN)


def _emit(text: str, out: Optional[str]):
    if out:
        try:
            with open(out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise _input_error(f"cannot write {out}: {exc}")
    else:
        sys.stdout.write(text)


def _parse_features(spec: str) -> Optional[List[str]]:
    if spec is None or spec.strip() == "all":
        return None
    if spec.startswith("@"):
        path = spec[1:]
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise _input_error(f"cannot read feature list {path}: {exc}")
        ids = [t.strip() for line in text.splitlines()
               if not line.lstrip().startswith("#") for t in line.split(",")]
    else:
        ids = [t.strip() for t in spec.split(",")]
    ids = [i for i in ids if i]
    if not ids:
        raise _domain_error("feature selection is empty")
    try:
        catalog.resolve_selection(ids)
    except UnknownFeatureId as exc:
        raise _domain_error(str(exc))
    except ValueError as exc:
        raise _domain_error(str(exc))
    return ids


def _check_range(name, value, lo=None, hi=None, lo_open=False):
    bad = (lo is not None and (value <= lo if lo_open else value < lo)) or \
          (hi is not None and value > hi) or value != value
    if bad:
        lo_s = "(" if lo_open else "["
        raise _domain_error(f"--{name} out of range {lo_s}{lo}, {hi}]: {value}")


def _plan(args) -> WindowPlan:
    _check_range("window-ms", args.window_ms, 0, None, lo_open=True)
    hop = args.hop_ms if args.hop_ms is not None else args.window_ms / 2.0
    _check_range("hop-ms", hop, 0, args.window_ms, lo_open=True)
    _check_range("rate-hz", args.rate_hz, 0, None, lo_open=True)
    plan = WindowPlan(args.window_ms, hop)
    try:
        plan.window_samples(args.rate_hz)
    except ValueError as exc:
        raise _domain_error(str(exc))
    return plan


def _load_audio(path, rate_hz):
    if not path:
        raise _input_error("--input is required")
    try:
        buf = read_wav(path)
    except OSError as exc:
        raise _input_error(f"cannot read {path}: {exc}")
    except DecodeError as exc:
        raise _input_error(f"{path}: {exc}")
    if buf.sample_rate_hz != rate_hz:
        buf = resample(buf, rate_hz)
    return buf


def _score_table(args):
    d = args.metrics_dir or selector.default_metrics_dir()
    try:
        return selector.load_score_table(d)
    except (ScoreFileError, MissingFeatureScores) as exc:
        raise _input_error(str(exc))


# -- commands ------------------------------------------------------------------------------

def cmd_extract(args) -> int:
    if args.device:
        raise _input_error("live device capture is not supported; pass --input FILE")
    ids = _parse_features(args.features)
    plan = _plan(args)
    t0 = time.perf_counter()
    buf = _load_audio(args.input, args.rate_hz)
    try:
        vectors = catalog.extract_stream(buf, plan, ids)
    except PrivfeatError as exc:
        raise _input_error(f"{args.input}: {exc}")
    columns = catalog.component_ids(ids)
    if args.format == "json":
        text = catalog.vectors_to_json(vectors)
    else:
        text = catalog.vectors_to_csv(vectors, columns)
    _emit(text, args.out)
    print(f"frames={len(vectors)} features={len(catalog.resolve_selection(ids))} "
          f"components={len(columns)} wall_s={time.perf_counter() - t0:.3f}", file=sys.stderr)
    return EXIT_OK


def _request(args) -> selector.SelectionRequest:
    _check_range("alpha", args.alpha, 0.0, 1.0)
    _check_range("budget-ms", args.budget_ms, 0.0, None, lo_open=True)
    return selector.SelectionRequest(args.category, args.alpha, args.budget_ms)


def cmd_select(args) -> int:
    req = _request(args)
    table = _score_table(args)
    _emit(selector.select(table, req).to_json(), args.out)
    return EXIT_OK


def cmd_get_metrics(args) -> int:
    try:
        catalog.lookup(args.feature)
    except UnknownFeatureId as exc:
        raise _domain_error(str(exc))
    table = _score_table(args)
    _emit(json.dumps(selector.get_metrics(args.feature, table), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_registry(args) -> int:
    lines = [f"{s.id}\t{s.group}\t{s.arity}\t{s.privacy_class}\t{s.display_name}"
             for s in catalog.registry()]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_profile(args) -> int:
    from .profiler import profile, write_latency_csv
    plan = _plan(args)
    _check_range("iterations", args.iterations, 10, None)
    ids = _parse_features(args.features)
    try:
        prof = profile(plan, args.iterations,
                       "supplied_file" if args.input else "seeded_noise",
                       args.rate_hz, args.input, args.seed, selection=ids)
    except (OSError, DecodeError) as exc:
        raise _input_error(str(exc))
    if args.format == "json":
        _emit(prof.to_json(), args.out)
    elif args.out:
        try:
            write_latency_csv(prof, args.out)
        except OSError as exc:
            raise _input_error(str(exc))
    else:
        sys.stdout.write("feature,latency_ms\n")
        for k, v in prof.timings.items():
            sys.stdout.write(f"{k},{v.mean_ms:.6f}\n")
    print(f"features={len(prof.timings)} total_ms={prof.total_ms:.3f} "
          f"iterations={args.iterations}", file=sys.stderr)
    return EXIT_OK


def cmd_sili(args) -> int:
    if not args.input:
        raise _input_error("--input is required")
    try:
        res = leakage.sili(leakage.load_sili_input(args.input))
    except OSError as exc:
        raise _input_error(f"cannot read {args.input}: {exc}")
    except (ValueError, KeyError) as exc:
        raise _input_error(f"{args.input}: {exc}")
    if args.format == "json":
        _emit(json.dumps({"sili": res.value, "clamped": list(res.clamped)}) + "\n", args.out)
    else:
        _emit(f"{res.value:.6g}\n", args.out)
    if res.clamped:
        print(f"clamped attributes: {','.join(res.clamped)}", file=sys.stderr)
    return EXIT_OK


def cmd_csli(args) -> int:
    if not args.input:
        raise _input_error("--input is required")
    try:
        value = leakage.csli(leakage.load_csli_input(args.input))
    except OSError as exc:
        raise _input_error(f"cannot read {args.input}: {exc}")
    except (ValueError, KeyError) as exc:
        raise _input_error(f"{args.input}: {exc}")
    if args.format == "json":
        _emit(json.dumps({"csli": value}) + "\n", args.out)
    else:
        _emit(f"{value:.6g}\n", args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    if not args.input or not args.labels:
        raise _input_error("--input and --labels are required")
    _check_range("bins", args.bins, 2, None)
    try:
        row_ids, columns = catalog.read_feature_csv(args.input)
        labels = leakage.read_labels(args.labels)
    except OSError as exc:
        raise _input_error(str(exc))
    except ValueError as exc:
        raise _input_error(str(exc))
    missing = [r for r in row_ids if r not in labels]
    if missing:
        raise _input_error(f"{args.labels}: no label for row_id {missing[0]!r}")
    try:
        table = leakage.LabeledFeatureTable(columns, np.array([labels[r] for r in row_ids]))
    except leakage.InvalidTable as exc:
        raise _input_error(str(exc))
    report = leakage.leakage_report(table, args.bins)
    if args.format == "json":
        text = json.dumps([vars(r) for r in report], indent=2) + "\n"
    else:
        text = "component,correlation,correlation_flag,mi_bits\n" + "".join(
            f"{r.component},{r.correlation:.9g},{r.correlation_flag or ''},{r.mi:.9g}\n"
            for r in report)
    _emit(text, args.out)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="privfeat", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt_default="csv"):
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default=fmt_default)

    def framing(sp):
        sp.add_argument("--window-ms", type=float, default=DEFAULT_WINDOW_MS)
        sp.add_argument("--hop-ms", type=float, default=None,
                        help="default: half the window")
        sp.add_argument("--rate-hz", type=int, default=DEFAULT_SAMPLE_RATE)
        sp.add_argument("--features", default="all",
                        help="'all', a comma list, or @file with one id per line")

    def scores(sp):
        sp.add_argument("--metrics-dir", default=None,
                        help=f"score CSV directory (default: ${selector.METRICS_ENV} "
                             "or the bundled placeholder tables)")

    sp = sub.add_parser("extract", help="extract features from a WAV file")
    sp.add_argument("--input")
    sp.add_argument("--device", help=argparse.SUPPRESS)
    framing(sp)
    common(sp)
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("select", help="choose a feature subset under a latency budget")
    sp.add_argument("--alpha", type=float, default=selector.DEFAULT_ALPHA)
    sp.add_argument("--category", choices=selector.CATEGORIES, default=selector.DEFAULT_CATEGORY)
    sp.add_argument("--budget-ms", type=float, default=selector.DEFAULT_BUDGET_MS)
    scores(sp)
    common(sp, "json")
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("get-metrics", help="show privacy/utility/latency scores of one feature")
    sp.add_argument("--feature", required=True)
    scores(sp)
    common(sp, "json")
    sp.set_defaults(func=cmd_get_metrics)

    sp = sub.add_parser("registry", help="list the feature catalog")
    common(sp)
    sp.set_defaults(func=cmd_registry)

    sp = sub.add_parser("profile", help="measure per-feature latency")
    sp.add_argument("--input", help="WAV workload (default: seeded noise)")
    sp.add_argument("--iterations", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    framing(sp)
    common(sp)
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("sili", help="speaker information leakage index")
    sp.add_argument("--input")
    common(sp)
    sp.set_defaults(func=cmd_sili)

    sp = sub.add_parser("csli", help="composite speech leakage index")
    sp.add_argument("--input")
    common(sp)
    sp.set_defaults(func=cmd_csli)

    sp = sub.add_parser("analyze", help="correlation / mutual-information leakage report")
    sp.add_argument("--input", help="feature CSV (first column = row id)")
    sp.add_argument("--labels", help="CSV row_id,label")
    sp.add_argument("--bins", type=int, default=16)
    common(sp)
    sp.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"privfeat {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except UnknownFeatureId as exc:
        print(f"privfeat {args.command}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (PrivfeatError, OSError, ValueError) as exc:
        print(f"privfeat {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
