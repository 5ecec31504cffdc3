"""Command-line interface: ``rica unmix | bench | dcor | replay``.

Every command that writes files also writes ``manifest.json`` recording the
command line, the resolved configuration, the seed, the package version and
SHA-256 digests of inputs and outputs. ``rica replay`` re-runs a manifest
and, with ``--check``, verifies that the new outputs are byte-identical.

Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure.
Outputs are staged in a temporary directory and moved into place only after
the command succeeded, so a failing run leaves no partial files.
"""

import argparse
import hashlib
import json
import os
import re
import shutil
import sys
import tempfile

import numpy as np

from . import __version__
from .distcorr import dcor_n
from .evalsim import (
    CATALOGUE,
    CONTAMINATIONS,
    ContaminationSpec,
    amari_error,
    format_failures,
    format_summary,
    run_benchmark,
    write_manifest,
    write_results_csv,
)
from .exceptions import (
    ConditioningError,
    DegenerateScaleError,
    ExactFitError,
    GenerationError,
    ObjectiveError,
    ValidationError,
)
from .ica import METHODS, RicaConfig, fit
from .transforms import biloop_dcor_stats, bowl_dcor_stats

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

MANIFEST = "manifest.json"
_NUMERIC_ERRORS = (
    ConditioningError,
    DegenerateScaleError,
    ExactFitError,
    ObjectiveError,
    GenerationError,
    np.linalg.LinAlgError,
    FloatingPointError,
)


class InputError(Exception):
    """Bad file, flag or configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# Delimited text I/O


def _parse_float(token):
    try:
        return float(token)
    except ValueError:
        return None


def read_matrix(path):
    """Read a numeric delimited text file.

    The delimiter (comma or whitespace) is detected from the first non-empty
    line, which is treated as a header when any of its fields is not a
    number. Blank lines and lines starting with ``#`` are skipped.

    Returns
    -------
    data : ndarray, shape (n, d)
    header : list of str or None
    """
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    numbered = [(i + 1, ln.strip()) for i, ln in enumerate(lines)]
    numbered = [(i, ln) for i, ln in numbered if ln and not ln.startswith("#")]
    if not numbered:
        raise InputError(f"{path}: no data")
    comma = "," in numbered[0][1]

    def split(line):
        return [f.strip() for f in line.split(",")] if comma else line.split()

    header = None
    first = split(numbered[0][1])
    if any(_parse_float(f) is None for f in first):
        header = first
        numbered = numbered[1:]
    width = len(header) if header else None
    rows = []
    for lineno, line in numbered:
        fields = split(line)
        if width is None:
            width = len(fields)
        if len(fields) != width:
            raise InputError(f"{path}: line {lineno} has {len(fields)} fields, expected {width}")
        row = []
        for col, f in enumerate(fields, start=1):
            v = _parse_float(f)
            if v is None or not np.isfinite(v):
                raise InputError(f"{path}: line {lineno}, column {col}: not a finite number: {f!r}")
            row.append(v)
        rows.append(row)
    if not rows:
        raise InputError(f"{path}: header but no data rows")
    return np.array(rows, dtype=float), header


def format_matrix(m, header=None):
    """Comma-separated text with ``%.17g`` numbers, which round-trip exactly."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    out = []
    if header:
        out.append(",".join(header))
    out.extend(",".join(format(float(v), ".17g") for v in row) for row in m)
    return "\n".join(out) + "\n"


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _parse_columns(spec, d, flag):
    try:
        cols = [int(c) for c in re.split(r"[,\s]+", spec.strip()) if c]
    except ValueError:
        raise InputError(f"{flag}: expected comma-separated column indices, got {spec!r}") from None
    if not cols:
        raise InputError(f"{flag}: no columns given")
    bad = [c for c in cols if not 0 <= c < d]
    if bad:
        raise InputError(f"{flag}: column(s) {bad} out of range for {d} columns (0-based)")
    if len(set(cols)) != len(cols):
        raise InputError(f"{flag}: repeated column in {spec!r}")
    return cols


# ---------------------------------------------------------------------------
# Output staging


class _Outputs:
    """Collects output files in a staging directory until commit."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.names = []
        self._stage = None
        if out_dir is not None:
            parent = os.path.dirname(os.path.abspath(out_dir)) or "."
            if not os.path.isdir(parent):
                raise InputError(f"parent directory of --out-dir does not exist: {parent}")
            self._stage = tempfile.mkdtemp(prefix=".rica-stage-", dir=parent)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.discard()
        return False

    def path(self, name):
        self.names.append(name)
        return os.path.join(self._stage, name)

    def write_text(self, name, text):
        with open(self.path(name), "w", newline="\n") as fh:
            fh.write(text)

    def digests(self):
        return {n: sha256_file(os.path.join(self._stage, n)) for n in sorted(self.names)}

    def commit(self):
        os.makedirs(self.out_dir, exist_ok=True)
        for name in self.names:
            os.replace(os.path.join(self._stage, name), os.path.join(self.out_dir, name))
        self.discard()

    def discard(self):
        if self._stage is not None:
            shutil.rmtree(self._stage, ignore_errors=True)
            self._stage = None


def _manifest(command, argv, config, seed, inputs, outputs):
    return {
        "command": command,
        "argv": argv,
        "config": config,
        "seed": seed,
        "version": __version__,
        "inputs": inputs,
        "outputs": outputs,
    }


def _finish(outs, command, argv, config, seed, inputs):
    manifest = _manifest(command, argv, config, seed, inputs, outs.digests())
    write_manifest(outs.path(MANIFEST), manifest)
    outs.commit()


def _input_record(path):
    return {"path": path, "sha256": sha256_file(path)}


# ---------------------------------------------------------------------------
# Commands


def _config_from_args(args):
    return RicaConfig(seed=args.seed, sweeps=args.sweeps)


def cmd_unmix(args, argv):
    x, _ = read_matrix(args.input)
    n, d = x.shape
    mixing = None
    if args.true_mixing:
        mixing, _ = read_matrix(args.true_mixing)
        if mixing.shape != (d, d):
            raise InputError(f"--true-mixing must be {d} x {d}, got {mixing.shape[0]} x {mixing.shape[1]}")
    config = _config_from_args(args)
    res = fit(args.method, x, config)
    summary = {
        "method": res.method,
        "n": n,
        "d": d,
        "objective": res.objective,
        "sweeps": res.diagnostics["sweeps"],
        "evaluations": res.diagnostics["evaluations"],
    }
    if mixing is not None:
        summary["amari"] = amari_error(res.unmixing @ mixing)

    inputs = {"input": _input_record(args.input)}
    if args.true_mixing:
        inputs["true_mixing"] = _input_record(args.true_mixing)
    with _Outputs(args.out_dir) as outs:
        if args.out_dir is not None:
            _write_unmix(outs, res, summary, d)
            _finish(outs, "unmix", argv, _config_dict(config, args.method), args.seed, inputs)

    if args.json:
        print(json.dumps(summary, sort_keys=True))
    else:
        print(f"method      {res.method}")
        print(f"objective   {res.objective:.6g}")
        print(f"sweeps      {summary['sweeps']}")
        if "amari" in summary:
            print(f"amari       {summary['amari']:.6g}")
        if args.out_dir is None:
            print("unmixing matrix (rows map observations to sources):")
            print(format_matrix(res.unmixing), end="")
    return EXIT_OK


def _write_unmix(outs, res, summary, d):
    outs.write_text("sources.csv", format_matrix(res.sources, [f"s{k}" for k in range(d)]))
    outs.write_text("unmixing.csv", format_matrix(res.unmixing))
    outs.write_text("center.csv", format_matrix(res.center))
    outs.write_text("objective_trace.csv", "objective\n" + "".join(f"{v:.17g}\n" for v in res.objective_trace))
    outs.write_text("summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _config_dict(config, method):
    return {"method": method, **{k: getattr(config, k) for k in config.__dataclass_fields__}}


BENCH_KEYS = {
    "methods", "distributions", "contamination", "d", "n", "replications",
    "seed", "fraction", "count", "mixed_sources", "sweeps", "jobs", "timing",
}


def _bench_settings(args):
    settings = {
        "methods": args.method or ["rica", "dcovica"],
        "distributions": list(args.distributions),
        "contamination": args.contamination,
        "d": args.d,
        "n": args.n,
        "replications": args.replications,
        "seed": args.seed,
        "fraction": args.fraction,
        "count": args.count,
        "mixed_sources": args.mixed_sources,
        "sweeps": args.sweeps,
        "jobs": args.jobs,
        "timing": args.timing,
    }
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read {args.config}: {exc.strerror or exc}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}: invalid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise InputError(f"{args.config}: expected a JSON object")
        for key in loaded:
            if key not in BENCH_KEYS:
                raise InputError(f"{args.config}: unknown key {key!r}")
        settings.update(loaded)
    if isinstance(settings["distributions"], str):
        settings["distributions"] = list(settings["distributions"])
    if isinstance(settings["methods"], str):
        settings["methods"] = [settings["methods"]]
    for m in settings["methods"]:
        if m not in METHODS:
            raise InputError(f"methods: unknown method {m!r}")
    for k in settings["distributions"]:
        if k not in CATALOGUE:
            raise InputError(f"distributions: unknown key {k!r}")
    if settings["contamination"] not in CONTAMINATIONS:
        raise InputError(f"contamination: unknown kind {settings['contamination']!r}")
    for key in ("d", "n", "replications", "count", "jobs"):
        v = settings[key]
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise InputError(f"{key}: expected a non-negative integer, got {v!r}")
    if settings["d"] < 2:
        raise InputError("d: need at least 2 sources")
    if settings["jobs"] < 1:
        raise InputError("jobs: need at least 1 worker")
    return settings


def cmd_bench(args, argv):
    st = _bench_settings(args)
    try:
        contamination = ContaminationSpec(st["contamination"], fraction=st["fraction"], count=st["count"])
    except ValidationError as exc:
        raise InputError(f"contamination: {exc}") from None
    config = {} if st["sweeps"] is None else {"sweeps": st["sweeps"]}
    results = run_benchmark(
        st["methods"],
        st["distributions"],
        contamination,
        d=st["d"],
        n=st["n"],
        replications=st["replications"],
        seed=st["seed"],
        mixed_sources=st["mixed_sources"],
        config=config,
        n_jobs=st["jobs"],
    )
    title = f"d = {st['d']}, n = {st['n']}, contamination = {contamination.label}, replications = {st['replications']}"
    table = format_summary(results, title) if results else title + "\n(no trials)\n"
    failures = format_failures(results)

    with _Outputs(args.out_dir) as outs:
        if args.out_dir is not None:
            write_results_csv(results, outs.path("results.csv"), timing=st["timing"])
            outs.write_text("summary.txt", table)
            inputs = {"config": _input_record(args.config)} if args.config else {}
            _finish(outs, "bench", argv, st, st["seed"], inputs)

    if args.json:
        rows = [
            {"method": r.method, "distribution": r.distribution, "replication": r.replication,
             "seed": r.seed, "amari": r.amari, "error": r.error}
            for r in results
        ]
        print(json.dumps({"settings": st, "trials": rows}, sort_keys=True))
    else:
        print(table, end="")
        for line in failures:
            print("failed:", line)
    return EXIT_OK


TRANSFORMS = ("none", "bowl", "biloop")


def cmd_dcor(args, argv):
    x, _ = read_matrix(args.input)
    d = x.shape[1]
    cx = _parse_columns(args.cols_x, d, "--cols-x")
    cy = _parse_columns(args.cols_y, d, "--cols-y")
    if set(cx) & set(cy) and cx != cy:
        raise InputError("--cols-x and --cols-y overlap")
    a, b = x[:, cx], x[:, cy]
    if args.transform == "none":
        st = dcor_n(a, b)
    elif args.transform == "bowl":
        st = bowl_dcor_stats(a, b)
    else:
        if len(cx) != 1 or len(cy) != 1:
            raise InputError("--transform biloop needs a single column in --cols-x and --cols-y")
        st = biloop_dcor_stats(a[:, 0], b[:, 0])
    report = {
        "transform": args.transform,
        "cols_x": cx,
        "cols_y": cy,
        "n": int(x.shape[0]),
        "dcov": st.dcov,
        "dvar_x": st.dvar_x,
        "dvar_y": st.dvar_y,
        "dcor": st.dcor,
    }
    with _Outputs(args.out_dir) as outs:
        if args.out_dir is not None:
            outs.write_text("dcor.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
            config = {"transform": args.transform, "cols_x": cx, "cols_y": cy}
            _finish(outs, "dcor", argv, config, None, {"input": _input_record(args.input)})
    if args.json:
        print(json.dumps(report, sort_keys=True))
    else:
        for key in ("dcov", "dvar_x", "dvar_y", "dcor"):
            print(f"{key:<8}{report[key]:.10g}")
    return EXIT_OK


def cmd_replay(args, argv):
    try:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {args.manifest}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.manifest}: invalid JSON: {exc}") from None
    for key in ("command", "argv", "inputs", "outputs"):
        if key not in manifest:
            raise InputError(f"{args.manifest}: missing key {key!r}")
    for label, rec in manifest["inputs"].items():
        if not os.path.exists(rec["path"]):
            raise InputError(f"input {label!r} not found: {rec['path']}")
        if sha256_file(rec["path"]) != rec["sha256"]:
            raise InputError(f"input {label!r} changed since the manifest was written: {rec['path']}")
    code = main(list(manifest["argv"]) + ["--out-dir", args.out_dir])
    if code != EXIT_OK or not args.check:
        return code
    original = os.path.dirname(os.path.abspath(args.manifest))
    mismatched = []
    for name, digest in sorted(manifest["outputs"].items()):
        new = os.path.join(args.out_dir, name)
        if not os.path.exists(new) or sha256_file(new) != digest:
            mismatched.append(name)
    if sha256_file(os.path.join(args.out_dir, MANIFEST)) != sha256_file(os.path.join(original, MANIFEST)):
        mismatched.append(MANIFEST)
    if mismatched:
        print("replay differs: " + ", ".join(mismatched), file=sys.stderr)
        return EXIT_NUMERIC
    print(f"replay identical: {len(manifest['outputs']) + 1} files")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def build_parser():
    parser = _Parser(prog="rica", description="Robust ICA by bowl-transformed distance correlation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--out-dir", default=None, help="directory for output files and manifest.json")
        p.add_argument("--json", action="store_true", help="print a machine-readable report")

    p = sub.add_parser("unmix", help="estimate independent components of a data file")
    p.add_argument("input", help="delimited numeric file, one observation per row")
    p.add_argument("--method", choices=sorted(METHODS), default="rica")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweeps", type=int, default=None, help="default: d + 1 for rica, 0 for dcovica")
    p.add_argument("--true-mixing", default=None, help="d x d mixing matrix A (x = A s) to report the Amari error")
    common(p)
    p.set_defaults(func=cmd_unmix)

    p = sub.add_parser("bench", help="simulation benchmark on the source catalogue")
    p.add_argument("--config", default=None, help="JSON file overriding any of the flags below")
    p.add_argument("--method", action="append", choices=sorted(METHODS), help="repeatable; default both")
    p.add_argument("--distributions", default="ejpr", help="catalogue keys, e.g. 'abc' (default 'ejpr')")
    p.add_argument("--contamination", choices=CONTAMINATIONS, default="none")
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--count", type=int, default=0, help="outlier count for 'increasing'")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--replications", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweeps", type=int, default=None)
    p.add_argument("--mixed-sources", action="store_true", help="draw each source column's distribution at random")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--timing", action="store_true", help="record wall-clock runtimes (not reproducible)")
    common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("dcor", help="distance covariance and correlation between column groups")
    p.add_argument("input")
    p.add_argument("--cols-x", required=True, help="0-based column indices, comma separated")
    p.add_argument("--cols-y", required=True)
    p.add_argument("--transform", choices=TRANSFORMS, default="none")
    common(p)
    p.set_defaults(func=cmd_dcor)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--check", action="store_true", help="exit 3 unless every output is byte-identical")
    p.set_defaults(func=cmd_replay)
    return parser


def _recorded_argv(argv):
    """The command line without ``--out-dir``, which does not affect results."""
    out = []
    skip = False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--out-dir":
            skip = True
            continue
        if tok.startswith("--out-dir="):
            continue
        out.append(tok)
    return out


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        return args.func(args, _recorded_argv(argv))
    except (InputError, ValidationError) as exc:
        print(f"rica {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _NUMERIC_ERRORS as exc:
        print(f"rica {args.command}: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
