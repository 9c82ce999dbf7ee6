"""Command-line interface.

Exit codes: 0 = accepted / success, 1 = rejected (or selftest failure),
2 = invalid input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import certify, mpdo, oracle, spinchain
from .errors import MarkovMpdoError


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise SystemExit(f"error: cannot read {path}: {exc}")


def _write(path: str, data: bytes):
    Path(path).write_bytes(data)


def cmd_verify(args) -> int:
    instance = certify.parse_instance(_read(args.instance))
    witness = certify.parse_witness(_read(args.witness))
    verdict = certify.verify(instance, witness, policy=args.policy,
                             tol_cptp=args.tol_cptp)
    sys.stdout.write(verdict.render())
    return 0 if verdict.accepted else 1


def cmd_entropy(args) -> int:
    witness = certify.parse_witness(_read(args.witness))
    report = mpdo.entropy_estimate(mpdo.MarkovianMpdo(
        witness.mpdo.initial, witness.mpdo.channels))
    eps = " ".join(repr(e) for e in report.epsilons) or "(none)"
    print(f"epsilons: {eps}")
    print(f"epsilon_max: {report.epsilon_max!r}")
    print(f"entropy_estimate: {report.entropy_estimate!r}")
    print(f"entropy_error_bound: {report.entropy_error_bound!r}")
    print(f"certified: {'true' if report.certified else 'false'}")
    return 0


def cmd_build(args) -> int:
    instance = certify.parse_instance(_read(args.instance))
    witness, plan = spinchain.build_witness(instance.hamiltonian, args.beta, args.block)
    _write(args.out, certify.serialize_witness(witness))
    print(f"blocked sites: {plan.m}")
    print(f"blocked dims: {' '.join(str(d) for d in plan.blocked_dims)}")
    print(f"wrote witness: {args.out}")
    return 0


def cmd_gibbs(args) -> int:
    instance = certify.parse_instance(_read(args.instance))
    rho = spinchain.gibbs_state(instance.hamiltonian, args.beta)
    temperature = 1.0 / args.beta if args.beta > 0 else None
    from .spectra import von_neumann_entropy
    import numpy as np
    entropy = von_neumann_entropy(rho)
    e = float(np.einsum("ij,ji->", rho.matrix, instance.hamiltonian.dense()).real)
    print(f"energy: {e!r}")
    print(f"entropy: {entropy!r}")
    if temperature is None:
        print("free_energy: n/a (beta = 0)")
    else:
        print(f"free_energy: {e - temperature * entropy!r}")
    return 0


def cmd_cmi_scan(args) -> int:
    instance = certify.parse_instance(_read(args.instance))
    scan = spinchain.cmi_decay_scan(instance.hamiltonian, args.beta, args.a, args.lmax)
    for ell, delta in scan.rows:
        print(f"ell {ell}: delta {delta!r}")
    if scan.fit is not None:
        print(f"fit: slope {scan.fit[0]!r} intercept {scan.fit[1]!r}")
    else:
        print("fit: n/a")
    if args.csv:
        Path(args.csv).write_text(scan.to_csv())
        print(f"wrote csv: {args.csv}")
    return 0


def cmd_round(args) -> int:
    witness = certify.parse_witness(_read(args.witness))
    rounded, budget = certify.round_witness(witness, args.bits)
    _write(args.out, certify.serialize_witness(rounded))
    print(f"trace_norm_budget: {budget!r}")
    print(f"wrote witness: {args.out}")
    return 0


def cmd_selftest(args) -> int:
    return 0 if oracle.selftest() else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="markovmpdo",
        description="Markovian MPDO free-energy certification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="verify a witness against an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--witness", required=True)
    p.add_argument("--policy", choices=certify.POLICIES, default="sound")
    p.add_argument("--tol-cptp", dest="tol_cptp", type=float, default=1e-8)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("entropy", help="epsilon list and entropy estimate of a witness")
    p.add_argument("--witness", required=True)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("build", help="build a Gibbs witness by blocking")
    p.add_argument("--instance", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--block", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("gibbs", help="exact F, S, E of the Gibbs state (desk scale)")
    p.add_argument("--instance", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.set_defaults(func=cmd_gibbs)

    p = sub.add_parser("cmi-scan", help="CMI decay scan of the Gibbs state")
    p.add_argument("--instance", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--lmax", type=int, required=True)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_cmi_scan)

    p = sub.add_parser("round", help="round a witness to a fixed bit budget")
    p.add_argument("--witness", required=True)
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_round)

    p = sub.add_parser("selftest", help="run the oracle suite")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MarkovMpdoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
