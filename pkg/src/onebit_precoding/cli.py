"""Command-line front end.

Two subcommands: ``solve`` runs one precoder on an instance file, ``sweep``
runs a Monte-Carlo BER or complexity sweep over an SNR grid and writes CSV
or JSON.

Exit codes: 0 success, 2 instance parse error, 3 degenerate instance,
4 instance too large for exhaustive search, 5 flag validation error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import baselines, branch_bound, model, sim
from .branch_bound import TrickConfig
from .errors import DegenerateInstance, InstanceTooLarge, ParseError, ZeroCorrelation
from .version import __version__

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DEGENERATE = 3
EXIT_TOO_LARGE = 4
EXIT_FLAGS = 5


class FlagError(Exception):
    """Flag combination that argparse alone cannot reject."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 by default, which collides with the
    # parse-error code; route every flag problem to 5 instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FLAGS, f"{self.prog}: error: {message}\n")


_TRICK_FLAGS = (
    ("--trick-radius-init", "trick_radius_init", "seed the search radius from the quantized Wiener-filter vector"),
    ("--trick-sorted-qr", "trick_sorted_qr", "sort columns during triangularization"),
    ("--trick-eigen-future", "trick_eigen_future", "add the spectral bound on unexplored levels"),
    ("--trick-preprune", "trick_preprune", "halve the root branching via sign symmetry"),
)


def _add_trick_flags(p):
    for flag, dest, help_text in _TRICK_FLAGS:
        p.add_argument(flag, dest=dest, choices=("on", "off"), default="on",
                       help=help_text + " (default: on)")


def _tricks_from_args(args):
    return TrickConfig(
        radius_init=args.trick_radius_init == "on",
        sorted_qr=args.trick_sorted_qr == "on",
        eigen_future=args.trick_eigen_future == "on",
        preprune=args.trick_preprune == "on",
    )


def load_instance(path):
    """Read one problem instance from a JSON file.

    Required fields: ``U``, ``B``, ``N0``, ``H_re``, ``H_im`` (U x B nested
    arrays), ``s_re``, ``s_im`` (length-U arrays).
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read '{path}': {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"'{path}' is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("instance document must be a JSON object")

    def get(name):
        if name not in doc:
            raise ParseError(f"missing field '{name}'")
        return doc[name]

    def dim(name):
        value = get(name)
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise ParseError(f"field '{name}' must be a positive integer")
        return value

    U = dim("U")
    B = dim("B")

    def arr(name, shape):
        try:
            a = np.asarray(get(name), dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"field '{name}' is not a numeric array") from exc
        if a.shape != shape:
            raise ParseError(f"field '{name}' must have shape {shape}, got {a.shape}")
        return a

    H = arr("H_re", (U, B)) + 1j * arr("H_im", (U, B))
    s = arr("s_re", (U,)) + 1j * arr("s_im", (U,))
    N0 = get("N0")
    if isinstance(N0, bool) or not isinstance(N0, (int, float)):
        raise ParseError("field 'N0' must be a number")
    try:
        return model.PrecodingProblem(H, s, float(N0))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def _result_payload(precoder, x, beta, qp_mse, cmqp_value, stats):
    return {
        "precoder": precoder,
        "version": __version__,
        "x_re": [float(v) for v in x.real],
        "x_im": [float(v) for v in x.imag],
        "beta": float(beta),
        "qp_mse": float(qp_mse),
        "cmqp_value": float(cmqp_value),
        "stats": {
            "nodes_visited": int(stats.nodes_visited),
            "leaves_reached": int(stats.leaves_reached),
            "radius_updates": int(stats.radius_updates),
            "wall_time_ms": float(stats.wall_time * 1e3),
        },
    }


def cmd_solve(args):
    problem = load_instance(args.instance)
    if args.precoder == "bb1":
        res = branch_bound.bb1_solve(problem, _tricks_from_args(args))
    elif args.precoder == "exhaustive":
        res = baselines.exhaustive_solve(problem)
    elif args.precoder == "wf_quantized":
        res = baselines.wf_quantized_precoder(problem)
    else:
        x, beta = baselines.wf_infinite_precoder(problem)
        try:
            val = model.cmqp_objective(x, problem.H_tilde, problem.z_mrt)
        except ZeroCorrelation as exc:
            raise DegenerateInstance(str(exc)) from exc
        res = model.PrecodeResult(x=x, beta=beta,
                                  qp_mse=model.qp_objective(x, beta, problem),
                                  cmqp_value=val, stats=model.SearchStats())
    payload = _result_payload(args.precoder, res.x, res.beta, res.qp_mse,
                              res.cmqp_value, res.stats)
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def _snr_grid(lo, hi, step):
    if step <= 0:
        raise FlagError("--snr-step must be positive")
    if hi < lo:
        raise FlagError("--snr-max must be >= --snr-min")
    n = int((hi - lo) / step + 1e-9) + 1
    return tuple(lo + i * step for i in range(n))


def cmd_sweep(args):
    if args.trials < 1:
        raise FlagError("--trials must be >= 1")
    if args.symbols_per_trial < 1:
        raise FlagError("--symbols-per-trial must be >= 1")
    if args.seed < 0:
        raise FlagError("--seed must be >= 0")
    if args.jobs < 1:
        raise FlagError("--jobs must be >= 1")
    grid = _snr_grid(args.snr_min, args.snr_max, args.snr_step)
    config = sim.SimConfig(B=args.bs_antennas, U=args.users,
                           snr_db_points=grid, trials=args.trials,
                           symbols_per_trial=args.symbols_per_trial,
                           master_seed=args.seed, precoder=args.precoder,
                           tricks=_tricks_from_args(args))
    meta = dict(sim.config_metadata(config))
    meta["kind"] = args.kind
    meta["jobs"] = args.jobs
    print(json.dumps(meta, sort_keys=True), file=sys.stderr)
    result = sim.run_ber_sweep(config, jobs=args.jobs)
    for p in result.points:
        if args.kind == "complexity":
            line = f"snr_db={p.snr_db:g} mean_nodes={p.mean_nodes:g} mean_ms={p.mean_wall_time * 1e3:g}"
        else:
            line = f"snr_db={p.snr_db:g} ber={p.ber:g} ({p.bit_errors}/{p.bits_sent})"
        print(line, file=sys.stderr)
    if args.format == "csv":
        if args.out == "-":
            sim.write_csv(result, sys.stdout)
        else:
            with open(args.out, "w") as fh:
                sim.write_csv(result, fh)
    else:
        doc = json.dumps(sim.to_json_dict(result), sort_keys=True, indent=2)
        if args.out == "-":
            print(doc)
        else:
            Path(args.out).write_text(doc + "\n")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="onebit-precode",
                     description="1-bit downlink precoding: exact tree search, "
                                 "baselines and Monte-Carlo sweeps.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one instance file",
                             description="Solve a single precoding instance "
                                         "from a JSON file and print the result as JSON.")
    p_solve.add_argument("instance", help="path to the instance JSON file")
    p_solve.add_argument("--precoder", choices=sim.PRECODERS, default="bb1")
    _add_trick_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="run a Monte-Carlo sweep",
                             description="Sweep an SNR grid with a chosen "
                                         "precoder and write per-point BER and "
                                         "complexity aggregates.")
    p_sweep.add_argument("kind", choices=("ber", "complexity"),
                         help="which summary to print on stderr; the output "
                              "file always carries both")
    p_sweep.add_argument("--bs-antennas", type=int, default=4, metavar="B",
                         help="transmit antennas (default: 4)")
    p_sweep.add_argument("--users", type=int, default=2, metavar="U",
                         help="single-antenna users (default: 2)")
    p_sweep.add_argument("--snr-min", type=float, default=0.0)
    p_sweep.add_argument("--snr-max", type=float, default=10.0)
    p_sweep.add_argument("--snr-step", type=float, default=2.0)
    p_sweep.add_argument("--trials", type=int, default=10,
                         help="independent channel draws per SNR point (default: 10)")
    p_sweep.add_argument("--symbols-per-trial", type=int, default=100,
                         help="data vectors per channel draw (default: 100)")
    p_sweep.add_argument("--seed", type=int, default=0, help="master seed (default: 0)")
    p_sweep.add_argument("--precoder", choices=sim.PRECODERS, default="bb1")
    p_sweep.add_argument("--jobs", type=int, default=1,
                         help="worker threads over trials (default: 1; any "
                              "value yields identical results)")
    p_sweep.add_argument("--out", default="-", metavar="PATH",
                         help="output path, '-' for stdout (default: '-')")
    p_sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_trick_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(json.dumps({"error": "ParseError", "message": str(exc)}))
        return EXIT_PARSE
    except DegenerateInstance as exc:
        print(json.dumps({"error": "DegenerateInstance", "message": str(exc)}))
        return EXIT_DEGENERATE
    except InstanceTooLarge as exc:
        print(json.dumps({"error": "InstanceTooLarge", "message": str(exc)}))
        return EXIT_TOO_LARGE
    except FlagError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_FLAGS


if __name__ == "__main__":
    sys.exit(main())
