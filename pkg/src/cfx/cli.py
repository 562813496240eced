"""Command-line front end.

``cfx --model M.json --input "[...]" --target Y`` prints a JSON report;
``cfx estimate-weights data.csv`` prints inverse-MAD feature weights.
Exit codes: 0 success, 2 no counterfactual, 3 invalid input.
"""
import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from .blackbox import blackbox_counterfactual
from .engine import CounterfactualQuery, compute_counterfactual
from .errors import CfxError, InputError, NoCounterfactual, ParseError, ValidationError
from .models import read_model
from .regularizers import Regularizer, mad_weights, read_dataset

EXIT_OK, EXIT_NO_CF, EXIT_INPUT = 0, 2, 3


def dumps(obj):
    """JSON text with every float written to 17 significant digits."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return format(v, ".17g") if math.isfinite(v) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    return json.dumps(str(obj))


@dataclass(frozen=True)
class RunConfig:
    model: str
    inputs: list
    target: object
    regularizer: str = "l1"
    weights: str = "uniform"
    margin: float = 1e-4
    tolerance: float = 0.0
    method: str = "auto"
    output: str = None
    batch: bool = False


def parse_target(text):
    """JSON value when the text parses as one, else the raw string (for labels like ``B``)."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_vector(text):
    try:
        v = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"--input is not a JSON array: {exc}") from None
    if not isinstance(v, list) or not v or not all(
            isinstance(a, (int, float)) and not isinstance(a, bool) for a in v):
        raise ParseError("--input must be a non-empty JSON array of numbers")
    return [float(a) for a in v]


def _read_input(text):
    """Inline JSON array, or a path to a file holding one."""
    if text.lstrip().startswith("["):
        return _parse_vector(text)
    try:
        with open(text) as fh:
            return _parse_vector(fh.read())
    except OSError as exc:
        raise ParseError(f"cannot read input: {exc}") from None


def _weights(mode, dim):
    if mode == "uniform":
        return np.ones(dim)
    kind, _, path = mode.partition(":")
    if kind == "mad" and path:
        return mad_weights(read_dataset(path)[1])
    if kind == "file" and path:
        try:
            with open(path) as fh:
                w = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read weights: {exc}") from None
        return np.asarray(w, dtype=float)
    raise ValidationError(f"bad --weights value {mode!r}")


def _regularizer(cfg, dim):
    if cfg.regularizer == "l2":
        return Regularizer.euclidean()
    return Regularizer.manhattan(_weights(cfg.weights, dim))


def _solve_one(model, cfg, x):
    query = CounterfactualQuery(x, cfg.target, _regularizer(cfg, len(x)), cfg.margin,
                                cfg.tolerance)
    if cfg.method == "blackbox":
        return blackbox_counterfactual(model, query)
    return compute_counterfactual(model, query)


def _error_doc(exc):
    return {"error": exc.reason, "message": str(exc)}


def _code(exc):
    return EXIT_NO_CF if isinstance(exc, NoCounterfactual) else EXIT_INPUT


def run(cfg):
    """Execute ``cfg``; returns ``(exit code, report document)``."""
    try:
        if not math.isfinite(cfg.margin) or cfg.margin <= 0:
            raise ValidationError("--margin must be > 0")
        if not math.isfinite(cfg.tolerance) or cfg.tolerance < 0:
            raise ValidationError("--tolerance must be >= 0")
        try:
            model = read_model(cfg.model)
        except OSError as exc:
            raise ParseError(f"cannot read model: {exc}") from None
    except CfxError as exc:
        return _code(exc), _error_doc(exc)

    if not cfg.batch:
        try:
            return EXIT_OK, _solve_one(model, cfg, cfg.inputs[0]).to_dict()
        except CfxError as exc:
            return _code(exc), _error_doc(exc)

    records, worst = [], EXIT_OK
    for i, x in enumerate(cfg.inputs):
        try:
            rec = _solve_one(model, cfg, x).to_dict()
        except CfxError as exc:
            rec = _error_doc(exc)
            code = _code(exc)
            worst = code if worst == EXIT_OK else max(worst, code)
        records.append({"row": i, **rec})
    return worst, {"records": records}


def _emit(doc, output):
    text = dumps(doc) + "\n"
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_parser():
    p = argparse.ArgumentParser(prog="cfx", description="Compute a counterfactual explanation.")
    p.add_argument("--model", required=True, help="model JSON file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="JSON array, or a file containing one")
    src.add_argument("--batch", help="CSV with a header row; one counterfactual per row")
    p.add_argument("--target", required=True, help="requested prediction (JSON value or label)")
    p.add_argument("--regularizer", choices=["l1", "l2"], default="l1")
    p.add_argument("--weights", default="uniform", help="uniform | mad:<csv> | file:<json>")
    p.add_argument("--margin", type=float, default=1e-4)
    p.add_argument("--tolerance", type=float, default=0.0)
    p.add_argument("--method", choices=["auto", "blackbox"], default="auto")
    p.add_argument("--output", help="write the report here instead of stdout")
    return p


def _weights_parser():
    p = argparse.ArgumentParser(prog="cfx estimate-weights",
                                description="Inverse-MAD feature weights from a CSV dataset.")
    p.add_argument("csv")
    p.add_argument("--output")
    return p


def estimate_weights(path, output=None):
    try:
        w = mad_weights(read_dataset(path)[1])
    except CfxError as exc:
        _emit(_error_doc(exc), None)
        print(f"cfx: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit([float(v) for v in w], output)
    return EXIT_OK


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv and argv[0] == "estimate-weights":
        try:
            args = _weights_parser().parse_args(argv[1:])
        except SystemExit as exc:
            return EXIT_INPUT if exc.code else EXIT_OK
        return estimate_weights(args.csv, args.output)

    try:
        args = _run_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        if args.batch:
            _, data = read_dataset(args.batch)
            inputs = [list(map(float, row)) for row in data]
        else:
            inputs = [_read_input(args.input)]
    except InputError as exc:
        _emit(_error_doc(exc), args.output)
        print(f"cfx: {exc}", file=sys.stderr)
        return EXIT_INPUT
    cfg = RunConfig(args.model, inputs, parse_target(args.target), args.regularizer,
                    args.weights, args.margin, args.tolerance, args.method, args.output,
                    bool(args.batch))
    code, doc = run(cfg)
    _emit(doc, cfg.output)
    if code != EXIT_OK and "error" in doc:
        print(f"cfx: {doc['error']}: {doc['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
