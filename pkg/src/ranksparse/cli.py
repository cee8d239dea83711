"""Command-line entry point: ``ranksparse <subcommand> ...``.

Exit codes: 0 on success, 1 on a usage or input error, 2 on a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from .certificate import build_certificate, certified_gamma_interval, condition_report
from .experiments import (
    PhaseDiagramConfig,
    gamma_sweep,
    parse_grid,
    phase_diagram,
    rigidity_demo,
)
from .matcore import MatrixParseError, SvdError, read_matrix, write_matrix
from .solver import SolverConfig, SolverError, decompose

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved for numerical failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def _clean(x):
    # JSON has no inf/nan
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def _dump(obj, path=None):
    text = json.dumps(_clean(obj), indent=2, default=_json_default) + "\n"
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _grid(text, kind=int):
    try:
        return parse_grid(text, kind)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _pair(args):
    a = read_matrix(args.sparse)
    b = read_matrix(args.lowrank)
    if a.shape != b.shape:
        raise UsageError(f"shape mismatch: sparse {a.shape} vs low-rank {b.shape}")
    return a, b


def cmd_decompose(args):
    C = read_matrix(args.input)
    cfg = SolverConfig(args.gamma, tol_primal=args.tol_primal, tol_change=args.tol_change,
                       max_iters=args.max_iters)
    res = decompose(C, cfg)
    if args.out_sparse:
        write_matrix(res.a_hat, args.out_sparse)
    if args.out_lowrank:
        write_matrix(res.b_hat, args.out_lowrank)
    _dump(res.to_dict(), args.report)
    if not res.converged:
        logging.warning("solver stopped at max_iters=%d (primal residual %.3e)",
                        res.iterations, res.primal_residual)
    return EXIT_OK


def cmd_analyze(args):
    a, b = _pair(args)
    rep = condition_report(a, b, xi_samples=args.xi_samples, seed=args.seed).to_dict()
    if args.json:
        _dump(rep)
    else:
        for k, v in rep.items():
            print(f"{k:28s} {v}")
    return EXIT_OK


def cmd_certify(args):
    a, b = _pair(args)
    out = {}
    if args.gamma is not None:
        out["certificate"] = build_certificate(a, b, args.gamma).to_dict()
    if args.interval or args.gamma is None:
        out["certified_interval"] = certified_gamma_interval(a, b).to_dict()
    _dump(out, args.report)
    return EXIT_OK


def cmd_phase(args):
    cfg = PhaseDiagramConfig(
        n=args.n,
        m_grid=tuple(_grid(args.m)),
        k_grid=tuple(_grid(args.k)),
        trials_per_cell=args.trials,
        gamma_policy=args.policy,
        gamma=args.gamma,
        success_tol=args.success_tol,
        seed=args.seed,
        workers=args.workers,
    )
    res = phase_diagram(cfg)
    _write_text(args.out, res.to_csv())
    if args.pgm:
        _write_text(args.pgm, res.to_pgm())
    return EXIT_OK


def cmd_gamma_sweep(args):
    C = read_matrix(args.input)
    a = b = None
    if args.sparse or args.lowrank:
        if not (args.sparse and args.lowrank):
            raise UsageError("--sparse and --lowrank must be given together")
        a, b = _pair(args)
    res = gamma_sweep(C, eps=args.eps, t_grid=_grid(args.t, float),
                      diff_threshold=args.threshold, a_true=a, b_true=b)
    if args.out:
        lines = ["t,diff_t" + (",tol_t" if res.tol_t is not None else "")]
        for i, t in enumerate(res.t_grid):
            row = f"{t:.6f},{res.diff_t[i]:.6e}"
            if res.tol_t is not None:
                row += f",{res.tol_t[i]:.6e}"
            lines.append(row)
        _write_text(args.out, "\n".join(lines) + "\n")
    _dump({k: v for k, v in res.to_dict().items() if k in
           ("plateaus", "chosen_t", "chosen_gamma", "solves")}, args.report)
    return EXIT_OK


def cmd_rigidity(args):
    res = rigidity_demo(args.n, args.epsilon, seed=args.seed)
    _dump(res.to_dict(), args.report)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="ranksparse", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("decompose", help="split a matrix into sparse + low-rank parts")
    s.add_argument("--input", required=True)
    s.add_argument("--gamma", type=_positive, required=True)
    s.add_argument("--out-sparse")
    s.add_argument("--out-lowrank")
    s.add_argument("--report", help="JSON report path (default: stdout)")
    s.add_argument("--tol-primal", type=_positive, default=1e-7)
    s.add_argument("--tol-change", type=_positive, default=1e-9)
    s.add_argument("--max-iters", type=int, default=50000)
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("analyze", help="incoherence diagnostics of a sparse/low-rank pair")
    s.add_argument("--sparse", required=True)
    s.add_argument("--lowrank", required=True)
    s.add_argument("--json", action="store_true", help="print JSON instead of a table")
    s.add_argument("--xi-samples", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("certify", help="dual certificate for a candidate pair")
    s.add_argument("--sparse", required=True)
    s.add_argument("--lowrank", required=True)
    s.add_argument("--gamma", type=_positive)
    s.add_argument("--interval", action="store_true", help="also report the certified gamma interval")
    s.add_argument("--report")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("phase", help="success-probability grid over (m, k)")
    s.add_argument("--n", type=int, default=25)
    s.add_argument("--m", default="10:10:250", help="lo:step:hi")
    s.add_argument("--k", default="1:1:12", help="lo:step:hi")
    s.add_argument("--trials", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--policy", choices=("recommended", "fixed", "sweep"), default="recommended")
    s.add_argument("--gamma", type=_positive)
    s.add_argument("--success-tol", type=_positive, default=1e-3)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", required=True)
    s.add_argument("--pgm")
    s.set_defaults(func=cmd_phase)

    s = sub.add_parser("gamma-sweep", help="diff_t stability sweep over t = gamma / (1 + gamma)")
    s.add_argument("--input", required=True)
    s.add_argument("--eps", type=_positive, default=0.01)
    s.add_argument("--t", default="0.02:0.01:0.98", help="lo:step:hi")
    s.add_argument("--threshold", type=_positive, default=1e-3)
    s.add_argument("--sparse", help="ground-truth sparse part, adds tol_t")
    s.add_argument("--lowrank", help="ground-truth low-rank part, adds tol_t")
    s.add_argument("--out", help="CSV of t, diff_t[, tol_t]")
    s.add_argument("--report")
    s.set_defaults(func=cmd_gamma_sweep)

    s = sub.add_parser("rigidity", help="planted rigidity upper bound with certificate")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--report")
    s.set_defaults(func=cmd_rigidity)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SolverError, SvdError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"ranksparse: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, MatrixParseError, ValueError, OSError) as exc:
        print(f"ranksparse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
