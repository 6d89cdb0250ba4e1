"""Command-line entry point.

Exit codes: 0 success, 1 a check failed (rejected certificate, violated
property), 2 usage error or violated precondition.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import bounds
from . import frames as fr
from . import qsim
from .lp.build import build_ring_lp, build_segment_lp
from .lp.model import Certificate, LPError, RationalLP
from .lp.presolve import solve_via_presolve
from .lp.verify import verify_certificate
from .rational import format_rational, format_with_decimal, parse_rational
from .ring_model import count_colorings, uniform_same_color_prob, write_beta_csv

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _out(line: str = "") -> None:
    sys.stdout.write(line + "\n")


def _budget(args) -> fr.Budget:
    return fr.Budget(args.max_t, args.max_total)


# ---------------------------------------------------------------------------
# subcommands


def cmd_count(args) -> int:
    a, b = count_colorings(args.l)
    _out(f"a_{args.l} = {a}")
    _out(f"b_{args.l} = {b}")
    return EXIT_OK


def cmd_uniform_prob(args) -> int:
    _out(format_with_decimal(uniform_same_color_prob(args.n, args.d)))
    return EXIT_OK


def cmd_beta(args) -> int:
    if args.out:
        count = write_beta_csv(args.out, args.ring, k=args.segment, proper_only=args.proper_only)
    else:
        from .ring_model import distinct_beta_array

        count = len(distinct_beta_array(args.ring, k=args.segment, proper_only=args.proper_only))
    _out(f"distinct beta vectors: {count}")
    return EXIT_OK


def _print_witness(w: bounds.BiasWitness) -> None:
    _out(f"delta = {format_with_decimal(w.delta)}")
    for s, a, b in zip(w.support, w.p, w.p_prime):
        if a or b:
            label = f"{s[0]},{s[1]}" if isinstance(s, tuple) else str(s)
            _out(f"  {label}: p = {format_rational(a)}, p' = {format_rational(b)}")


def cmd_bias_lp(args) -> int:
    w = bounds.bias_lp_ring(args.ring) if args.ring is not None else bounds.bias_lp_segment(args.segment)
    _print_witness(w)
    ok = bounds.verify_witness(w)
    _out(f"brute-force recheck over proper colorings: {'ok' if ok else 'MISMATCH'}")
    if args.out:
        _write_json(args.out, w.to_json_dict())
    return EXIT_OK if ok else EXIT_FAILED


def cmd_gamma(args) -> int:
    with open(args.witness) as fh:
        w = bounds.BiasWitness.from_json_dict(json.load(fh))
    g = bounds.gamma(w, threads=args.threads)
    eb = bounds.error_lower_bound(w.delta, g)
    _out(f"gamma = {format_with_decimal(g)}")
    _out(f"error lower bound = {format_with_decimal(eb.epsilon_lower)}")
    _out(f"success upper bound = {format_with_decimal(eb.success_upper)}")
    if args.out:
        w.gamma = g
        _write_json(args.out, w.to_json_dict())
    return EXIT_OK


def _solve_and_report(lp: RationalLP, args) -> int:
    _out(f"variables: {lp.n_vars}, rows: {lp.n_rows}")
    if args.out:
        lp.save(args.out)
    cert = solve_via_presolve(lp)
    verdict = verify_certificate(lp, cert)
    _out(f"optimum: {format_with_decimal(cert.objective_value)}")
    _out(f"certificate: {verdict.reason}")
    if args.cert:
        cert.save(args.cert)
    return EXIT_OK if verdict else EXIT_FAILED


def _dump(args, context: fr.Context) -> None:
    if not args.dump_constraints:
        return
    with open(args.dump_constraints, "w") as fh:
        for c in fr.generate_marginal_constraints(context, args.r, _budget(args)):
            fh.write(c.to_line() + "\n")


def cmd_ring_lp(args) -> int:
    _dump(args, fr.Ring(args.n))
    lp = build_ring_lp(args.n, args.r, use_cyclic_classes=not args.no_class_reduction,
                       use_color_symmetry=args.color_sym, budget=_budget(args))
    return _solve_and_report(lp, args)


def cmd_segment_lp(args) -> int:
    _dump(args, fr.Segment(args.k))
    lp = build_segment_lp(args.k, args.r, use_color_symmetry=args.color_sym, budget=_budget(args))
    return _solve_and_report(lp, args)


def cmd_verify(args) -> int:
    lp = RationalLP.load(args.lp)
    cert = Certificate.load(args.cert)
    verdict = verify_certificate(lp, cert)
    if verdict:
        _out(f"accepted: objective {format_with_decimal(cert.objective_value)}")
        return EXIT_OK
    _out(f"rejected ({verdict.kind}): {verdict.reason}")
    return EXIT_FAILED


def cmd_bound(args) -> int:
    value = bounds.compose_exponential(args.q, args.k, args.r, args.n)
    e = args.n // (args.k + args.r)
    _out(f"({format_rational(args.q)})^{e} = {format_with_decimal(value)}")
    return EXIT_OK


def cmd_experiments11(args) -> int:
    rep = bounds.experiments11()
    _out(f"proper colorings scanned: {rep.colorings_scanned}")
    _out(f"min bias: {format_with_decimal(rep.min_bias)}")
    _out(f"minimizer: {''.join(map(str, rep.argmin))}")
    ok = rep.min_bias == bounds.EXPERIMENT_MIN_BIAS and rep.per_coloring_check
    _out(f"check min bias == 1/451: {'ok' if ok else 'FAILED'}")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_n4_scan(args) -> int:
    rep = bounds.n4_infeasibility_scan(args.grid, threads=args.threads)
    _out(f"grid points: {rep.points}")
    _out(f"all points violated: {'yes' if rep.all_violated else 'NO'}")
    _out(f"worst min_rho q(rho): {format_with_decimal(rep.worst_value)}")
    _out("at (" + ", ".join(format_rational(x) for x in rep.worst_point) + ")")
    return EXIT_OK if rep.all_violated else EXIT_FAILED


def cmd_qsim(args) -> int:
    spec = qsim.ProtocolSpec.load(args.spec)
    dist = qsim.run_protocol(spec)
    if args.out:
        dist.write_csv(args.out)
    cyclic = qsim.check_cyclicity(dist, args.tol)
    _out(f"cyclicity: {'ok' if cyclic else 'FAILED'}")
    ok = cyclic
    if args.check_independence:
        rep = qsim.check_independence(dist, spec.r, args.tol)
        passed = rep.passed(args.tol)
        _out(f"independence: {'ok' if passed else 'FAILED'} (max deviation {rep.max_deviation:.3e}, "
             f"{rep.collections_checked} collections, {rep.placements_checked} placements)")
        ok = ok and passed
    return EXIT_OK if ok else EXIT_FAILED


def cmd_figures(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.which == "4":
        sizes = range(11, args.n_max + 1)
        bounds.write_bias_vs_n(str(out / "bias-vs-n.csv"), sizes, args.gamma_max, threads=args.threads)
        _out(f"wrote {out / 'bias-vs-n.csv'}")
    elif args.which == "5":
        for n in args.sizes:
            path = out / f"witness-n{n}.csv"
            bounds.write_witness_ring(str(path), bounds.bias_lp_ring(n))
            _out(f"wrote {path}")
    else:
        path = out / "witness-grid-k15.csv"
        bounds.write_witness_grid(str(path), bounds.bias_lp_segment(15))
        _out(f"wrote {path}")
    return EXIT_OK


def _write_json(path: str, data: dict) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonsignal", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads for brute-force scans (results do not depend on it)")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        return p

    def add_budget(p):
        p.add_argument("--max-t", type=int, help="largest number of frames in a collection")
        p.add_argument("--max-total", type=int, help="largest total frame length")
        p.add_argument("--dump-constraints", metavar="FILE", help="write every marginal constraint, one per line")

    def add_context(p):
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--ring", type=int, metavar="N")
        g.add_argument("--segment", type=int, metavar="K")

    p = add("count", cmd_count, "number of proper colorings of a length-l segment with equal/unequal endpoints")
    p.add_argument("--l", type=int, required=True)

    p = add("uniform-prob", cmd_uniform_prob, "same-color probability at distance d, uniform proper coloring")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)

    p = add("beta", cmd_beta, "distinct same-color statistics vectors")
    add_context(p)
    p.add_argument("--proper-only", action="store_true")
    p.add_argument("--out", help="CSV file")

    p = add("bias-lp", cmd_bias_lp, "solve the pairwise-bias LP")
    add_context(p)
    p.add_argument("--out", help="witness JSON file")

    p = add("gamma", cmd_gamma, "improper penalty of a witness and the resulting bounds")
    p.add_argument("--witness", required=True)
    p.add_argument("--out", help="write the witness back with gamma filled in")

    p = add("ring-lp", cmd_ring_lp, "non-signaling success LP on the ring")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--no-class-reduction", action="store_true", help="one variable per coloring")
    p.add_argument("--color-sym", action="store_true", help="group colorings under color permutations")
    p.add_argument("--out", help="LP JSON file")
    p.add_argument("--cert", help="certificate JSON file")
    add_budget(p)

    p = add("segment-lp", cmd_segment_lp, "non-signaling success LP on a segment")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--color-sym", action="store_true", help="group colorings under color permutations")
    p.add_argument("--out", help="LP JSON file")
    p.add_argument("--cert", help="certificate JSON file")
    add_budget(p)

    p = add("verify", cmd_verify, "exact check of an LP certificate")
    p.add_argument("--lp", required=True)
    p.add_argument("--cert", required=True)

    p = add("bound", cmd_bound, "compose a segment bound into a ring bound q^floor(n/(k+r))")
    p.add_argument("--q", type=_rational, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--n", type=int, required=True)

    add("experiments11", cmd_experiments11, "distance-sampling experiments on the 11-ring")

    p = add("n4-scan", cmd_n4_scan, "grid scan showing no perfect independent coloring of the 4-ring")
    p.add_argument("--grid", type=int, default=1000)

    p = add("qsim", cmd_qsim, "simulate a protocol and test its output distribution")
    p.add_argument("--spec", required=True)
    p.add_argument("--check-independence", action="store_true")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", help="CSV of the output distribution")

    p = add("figures", cmd_figures, "emit figure data as CSV")
    p.add_argument("--which", choices=["4", "5", "6"], required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-max", type=int, default=max(bounds.BIAS_SIZES))
    p.add_argument("--gamma-max", type=int, default=bounds.BIAS_GAMMA_MAX,
                   help="largest n whose gamma is brute-forced (otherwise gamma <= 1 is used)")
    p.add_argument("--sizes", type=int, nargs="+", default=list(bounds.WITNESS_SIZES))
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, LPError, KeyError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"nonsignal {args.command}: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
