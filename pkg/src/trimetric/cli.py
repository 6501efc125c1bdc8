"""``trimetric`` command-line interface.

Exit codes: 0 success, 1 computation or per-system failure, 2 usage or
configuration error.
"""

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .codec import HEADER_BITS, compress, decompress
from .exceptions import ConfigError, TrimetricError
from .game import load_game
from .leais import IteratedMap, leais_feedforward, leais_iterated
from .model import load_model, serialize_canonical
from .report import NerParams, RunConfig, compute_ner, run_report
from .sci import sci_estimate
from .scoring import (MetricsRecord, Weights, normalize_cohort, risk_score_oriented,
                      scatter_export, scatter_to_csv, security_score_literal)

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _dump(doc, out=None):
    text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read_model(path):
    try:
        return load_model(path)
    except OSError as exc:
        raise UsageError(f"cannot read model {path}: {exc.strerror}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _read_game(path):
    try:
        return load_game(path)
    except OSError as exc:
        raise UsageError(f"cannot read game {path}: {exc.strerror}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _int_list(text):
    return tuple(int(v) for v in text.split(","))


def _float_list(text):
    return [float(v) for v in text.split(",")]


def cmd_sci(args):
    model = _read_model(args.model)
    artifact = serialize_canonical(model, args.model)
    if args.attach_data:
        try:
            data = Path(args.attach_data).read_bytes()
        except OSError as exc:
            raise UsageError(f"cannot read {args.attach_data}: {exc.strerror}") from exc
        artifact = artifact.with_attached_data(data)
    _dump(sci_estimate(artifact, model.input_spec).to_dict())


def cmd_leais(args):
    model = _read_model(args.model)
    mode = "fd" if args.fd else "analytic"
    result = leais_feedforward(model, args.samples, args.seed, mode, args.step)
    _dump(result.to_dict())


def cmd_leais_map(args):
    try:
        fmap = IteratedMap(args.family, args.param)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _dump({"lambda": leais_iterated(fmap, args.x0, args.t, args.transient)})


def cmd_ner(args):
    game = _read_game(args.game)
    try:
        params = NerParams(args.dynamics, args.steps, args.damping, args.epsilon,
                           args.grid, args.init)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    result, equilibria = compute_ner(game, params)
    doc = result.to_dict()
    doc.update(dynamics=args.dynamics, steps=args.steps,
               equilibria=[eq.tolist() for eq in equilibria])
    _dump(doc)


def cmd_score(args):
    try:
        with open(args.metrics, encoding="utf-8") as fh:
            rows = json.load(fh)
        records = [MetricsRecord(str(r["system_id"]), float(r["sci"]), float(r["leais"]),
                                 float(r["ner"]), r.get("ner_kind", "literal"))
                   for r in rows]
        weights = Weights.from_any(args.weights)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid metrics input: {exc}") from exc
    normalized = normalize_cohort(records)
    rows = scatter_export(normalized)
    if args.format == "csv":
        text = scatter_to_csv(rows)
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return
    doc = {
        "weights": list(weights.as_tuple()),
        "records": [{"raw": r.to_dict(), "normalized": n.to_dict(),
                     "security_score_literal": security_score_literal(r, weights),
                     "risk_score_oriented": risk_score_oriented(n, weights)}
                    for r, n in zip(records, normalized)],
        "scatter": [row.to_dict() for row in rows],
    }
    _dump(doc, args.output)


def demo_config_path():
    return resources.files("trimetric") / "demo" / "demo_config.json"


def cmd_report(args):
    if args.demo == bool(args.config):
        raise UsageError("give exactly one of --config or --demo")
    if args.demo:
        with resources.as_file(demo_config_path()) as path:
            config = RunConfig.load(path)
            report = run_report(config)
    else:
        config = RunConfig.load(args.config)
        report = run_report(config)
    text = report.to_json(include_timings=args.include_timings)
    out = args.output or (None if args.demo else config.output)
    if out and not args.demo and not args.output:
        out = config.base_dir / out
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    for err in report.doc["errors"]:
        print(f"error: {err['system_id']}: {err['message']}", file=sys.stderr)
    return report.exit_code


def cmd_compress_stats(args):
    try:
        data = Path(args.input).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc.strerror}") from exc
    blob = compress(data)
    wire = blob.to_bytes()
    if args.blob_out:
        Path(args.blob_out).write_bytes(wire)
    size = blob.payload_bits + HEADER_BITS
    _dump({
        "original_len": blob.original_len,
        "num_codes": len(blob.codes),
        "payload_bits": blob.payload_bits,
        "compressed_size_bits": size,
        "bits_per_byte": size / len(data) if data else None,
        "wire_bytes": len(wire),
        "roundtrip_ok": decompress(wire) == data,
    })


def build_parser():
    parser = argparse.ArgumentParser(prog="trimetric", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"trimetric {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sci", help="complexity index of a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--attach-data", help="raw file appended to the artifact")
    p.set_defaults(func=cmd_sci)

    p = sub.add_parser("leais", help="sensitivity exponent of a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fd", action="store_true", help="central differences instead of the analytic Jacobian")
    p.add_argument("--step", type=float, default=1e-5)
    p.set_defaults(func=cmd_leais)

    p = sub.add_parser("leais-map", help="Lyapunov exponent of a 1-D map")
    p.add_argument("--family", choices=("logistic", "tent", "linear"), required=True)
    p.add_argument("--param", type=float, required=True)
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--transient", type=int, default=0)
    p.set_defaults(func=cmd_leais_map)

    p = sub.add_parser("ner", help="equilibrium robustness of a game file")
    p.add_argument("--game", required=True)
    p.add_argument("--dynamics", choices=("br", "fp"), default="br")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--damping", type=float, default=1.0)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--grid", type=int, default=100)
    p.add_argument("--init", type=_int_list, help="initial pure actions, e.g. 0,1")
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; dynamics are deterministic")
    p.set_defaults(func=cmd_ner)

    p = sub.add_parser("score", help="normalize and score a cohort of metric records")
    p.add_argument("--metrics", required=True, help="JSON array of metric records")
    p.add_argument("--weights", type=_float_list, default=[1 / 3, 1 / 3, 1 / 3])
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="evaluate a whole cohort from a run config")
    p.add_argument("--config")
    p.add_argument("--demo", action="store_true", help="run the bundled demo config")
    p.add_argument("--output")
    p.add_argument("--include-timings", action="store_true",
                   help="add wall-clock timings (makes output non-reproducible)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("compress-stats", help="codec statistics for a file")
    p.add_argument("--input", required=True)
    p.add_argument("--blob-out", help="write the wire-format blob here")
    p.set_defaults(func=cmd_compress_stats)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"trimetric: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrimetricError, ArithmeticError) as exc:
        print(f"trimetric: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
