"""Command-line front end.

Exit status: 0 when a result was computed, 2 when the target is provably
unreachable, 1 for usage, input or solver errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, numcore
from .channels import (
    ENSEMBLES,
    KrausChannel,
    amplitude_damping_qutrit,
    channel_from_json,
    depolarizing,
    from_bloch,
    pauli_channel,
    state_from_json,
    state_to_json,
)
from .errors import QepcError
from .experiments import (
    BOUNDARY_MARGIN,
    DEFAULT_THRESHOLDS,
    monte_carlo,
    parse_pgrid,
    qecc_compare,
    render_report,
)
from .precomp import PSD_CLIP_TOL, RANGE_TOL, Family, Unique, solve_exact, solve_exact_bipartite
from .sdp.programs import FEASIBILITY_OPTIONS, FIDELITY_OPTIONS, max_fidelity

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


# -- input ---------------------------------------------------------------------


def _read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return data


def load_channel_spec(path) -> KrausChannel:
    """Kraus JSON, or one of the shorthands ``{"pauli": [p0, p1, p2, p3]}``,
    ``{"depolarizing": p}``, ``{"amplitude_damping_qutrit": gamma}``."""
    data = _read_json(path)
    try:
        if "pauli" in data:
            return pauli_channel(data["pauli"])
        if "depolarizing" in data:
            return depolarizing(float(data["depolarizing"]))
        if "amplitude_damping_qutrit" in data:
            return amplitude_damping_qutrit(float(data["amplitude_damping_qutrit"]))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from None
    return channel_from_json(data)


def load_state_spec(path):
    """State JSON, or the qubit shorthand ``{"bloch": [x, y, z]}``."""
    data = _read_json(path)
    if "bloch" in data:
        try:
            return from_bloch(data["bloch"])
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}: {exc}") from None
    return state_from_json(data)


def _matrix_json(A) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(A)]


def _write(text: str, out) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# -- subcommands ---------------------------------------------------------------


def precomp_to_json(res) -> dict:
    if isinstance(res, Unique):
        return {"case": res.case, "outcome": "Unique", "rho_in": state_to_json(res.rho_in),
                "residual": res.residual}
    if isinstance(res, Family):
        return {
            "case": res.case, "outcome": "Family",
            "particular": _matrix_json(res.particular),
            "kernel_basis": [[[float(z.real), float(z.imag)] for z in col] for col in res.kernel_basis.T],
            "psd_member": None if res.psd_member is None else state_to_json(res.psd_member),
            "residual": res.residual,
        }
    out = {"case": res.case, "outcome": "Infeasible", "reason": res.reason.value,
           "certificate": res.certificate}
    if res.candidate is not None:
        out["candidate"] = _matrix_json(res.candidate)
    return out


def cmd_solve(args) -> int:
    ch = load_channel_spec(args.channel)
    rho_t = load_state_spec(args.target)
    tols = {"range_tol": args.range_tol, "psd_tol": args.psd_tol}
    if args.bipartite:
        res = solve_exact_bipartite(ch, args.bipartite, rho_t, args.rtol, **tols)
    else:
        res = solve_exact(ch, rho_t, args.rtol, **tols)
    _write(_dump(precomp_to_json(res)), args.out)
    # an empty case-2b family is as unreachable as cases 1b and 2a
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def cmd_maxfid(args) -> int:
    ch = load_channel_spec(args.channel)
    rho_t = load_state_spec(args.target)
    F, rho_in = max_fidelity(ch, rho_t, _sdp_options(FIDELITY_OPTIONS, args))
    _write(_dump({"fidelity": F, "rho_in": state_to_json(rho_in)}), args.out)
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    if args.channel:
        ch = load_channel_spec(args.channel)
    elif args.pauli:
        ch = pauli_channel(_floats(args.pauli, 4, "--pauli"))
    else:
        raise _UsageError("montecarlo: one of --channel or --pauli is required")
    report = monte_carlo(
        ch, args.samples, args.ensemble, args.seed, _floats(args.thresholds, None, "--thresholds"),
        boundary_margin=args.boundary_margin,
        feasibility_opts=_sdp_options(FEASIBILITY_OPTIONS, args),
        fidelity_opts=_sdp_options(FIDELITY_OPTIONS, args),
    )
    fmt = args.format or _format_from(args.out)
    _write(render_report(report, fmt), args.out)
    print(report.summary(), file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


def cmd_qecc_compare(args) -> int:
    codes = [c.strip() for c in args.codes.split(",") if c.strip()]
    cmp = qecc_compare(parse_pgrid(args.pgrid), codes)
    fmt = args.format or _format_from(args.out, default="csv")
    _write(render_report(cmp, fmt), args.out)
    stream = sys.stderr if args.out in (None, "-") else sys.stdout
    for c in cmp.curves:
        x = "none" if c.crossover_p is None else f"{c.crossover_p:.6f}"
        print(f"crossover {c.code} (n={c.n}): {x}", file=stream)
    return EXIT_OK


def _format_from(out, default="json") -> str:
    if out and out != "-":
        suffix = Path(out).suffix.lower()
        if suffix in (".json", ".csv"):
            return suffix[1:]
    return default


def _floats(text, count, flag) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise _UsageError(f"{flag}: expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise _UsageError(f"{flag}: expected {count} numbers, got {len(vals)}")
    return vals


def _sdp_options(base, args):
    changes = {k: getattr(args, k) for k in ("feas_tol", "gap_tol", "max_iter")
               if getattr(args, k, None) is not None}
    if not changes:
        return base
    # an explicit tolerance is taken literally: no looser fallback tier
    if "feas_tol" in changes:
        changes["acceptable_feas_tol"] = None
    if "gap_tol" in changes:
        changes["acceptable_gap_tol"] = None
    return replace(base, **changes)


# -- parser --------------------------------------------------------------------


def _positive_float(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return x


def _positive_int(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {text!r}")
    return n


def _add_sdp_flags(p):
    g = p.add_argument_group("solver tolerances (defaults are program specific)")
    g.add_argument("--feas-tol", type=_positive_float,
                   help=f"primal/dual residual tolerance (fidelity {FIDELITY_OPTIONS.feas_tol:g}, "
                        f"feasibility {FEASIBILITY_OPTIONS.feas_tol:g})")
    g.add_argument("--gap-tol", type=_positive_float,
                   help=f"relative duality gap (fidelity {FIDELITY_OPTIONS.gap_tol:g}, "
                        f"feasibility {FEASIBILITY_OPTIONS.gap_tol:g})")
    g.add_argument("--max-iter", type=_positive_int,
                   help=f"interior-point iteration cap (default {FIDELITY_OPTIONS.max_iter})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qepc", description="Error pre-compensated input states for noisy channels.",
                     epilog="Exit status: 0 computed, 2 provably infeasible, 1 error. "
                            "QEPC_THREADS caps solver threads (0 = one per CPU).")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="analytic pre-compensation (cases 1a/1b/2a/2b)")
    p.add_argument("channel", help="channel JSON")
    p.add_argument("target", help="target state JSON")
    p.add_argument("--bipartite", type=_positive_int, metavar="DIM_A",
                   help="channel acts on B of an A x B target with dim A = DIM_A")
    p.add_argument("--rtol", "--tol", type=_positive_float, default=numcore.DEFAULT_RTOL,
                   help="relative singular-value cutoff for rank(M) (default %(default)g)")
    p.add_argument("--range-tol", type=_positive_float, default=RANGE_TOL,
                   help="relative range residual allowed in the singular case (default %(default)g)")
    p.add_argument("--psd-tol", type=_positive_float, default=PSD_CLIP_TOL,
                   help="negative eigenvalues above -PSD_TOL are clipped (default %(default)g)")
    p.add_argument("--out", "-o", help="result file (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("maxfid", help="maximize output fidelity by SDP")
    p.add_argument("channel", help="channel JSON")
    p.add_argument("target", help="target state JSON")
    p.add_argument("--out", "-o", help="result file (default stdout)")
    _add_sdp_flags(p)
    p.set_defaults(func=cmd_maxfid)

    p = sub.add_parser("montecarlo", help="statistics over random targets")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--channel", help="channel JSON")
    src.add_argument("--pauli", metavar="P0,P1,P2,P3", help="Pauli channel probabilities")
    p.add_argument("--samples", "-n", type=_positive_int, default=10000, help="default %(default)s")
    p.add_argument("--ensemble", choices=ENSEMBLES, default="hilbert-schmidt",
                   help="default %(default)s")
    p.add_argument("--seed", type=int, default=0, help="default %(default)s")
    p.add_argument("--thresholds", default=",".join(f"{t:g}" for t in DEFAULT_THRESHOLDS),
                   help="fidelity thresholds (default %(default)s)")
    p.add_argument("--boundary-margin", type=_positive_float, default=BOUNDARY_MARGIN,
                   help="|t*| below which analytic/SDP disagreement is tolerated (default %(default)g)")
    p.add_argument("--out", "-o", help="report file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), help="default from --out suffix, else json")
    _add_sdp_flags(p)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("qecc-compare", help="pre-compensation vs error-correcting codes")
    p.add_argument("--codes", default="shor,five", help="comma-separated subset of shor,five")
    p.add_argument("--pgrid", default="0:1:0.001", metavar="A:B:STEP", help="default %(default)s")
    p.add_argument("--out", "-o", help="curve file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), help="default from --out suffix, else csv")
    p.set_defaults(func=cmd_qecc_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
    except (QepcError, ValueError, OSError) as exc:
        print(f"qepc: error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
