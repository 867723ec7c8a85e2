"""Command-line front door: load JSON inputs, dispatch, emit JSON reports.

Every subcommand is a thin shell over one library operation.  Reports go to
stdout (or ``--out``) with all numbers at 12 significant digits; diagnostics
go to stderr.  Exit codes: 0 on success, 1 when the checked property fails
or the instance is infeasible, 2 on input or parse errors.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import games, linalg, localops, norms, serialize, strategies

DEFAULT_TOL = 1e-8


class DomainFailure(Exception):
    """The operation ran but the checked property does not hold."""

    def __init__(self, report):
        super().__init__("domain failure")
        self.report = report


def _spaces_from_obj(obj) -> strategies.RoundSpaces:
    return strategies.RoundSpaces(tuple(obj["in_dims"]), tuple(obj["out_dims"]))


def _party_spaces_from_obj(obj) -> localops.PartySpaces:
    return localops.PartySpaces(tuple(obj["party_in_dims"]),
                                tuple(obj["party_out_dims"]))


def _load(path):
    try:
        return serialize.load(path)
    except FileNotFoundError as exc:
        raise IOError(f"cannot read {path}: {exc}") from exc


def _report_validation(rep: strategies.ValidationReport) -> dict:
    return {
        "valid": rep.valid,
        "kind": rep.kind,
        "max_residual": rep.max_residual,
        "residuals": rep.residuals,
        "min_eig": rep.min_eig,
        "rank": rep.rank,
    }


# ---------------------------------------------------------------------------
# subcommand handlers: return the report dict or raise DomainFailure
# ---------------------------------------------------------------------------

def cmd_validate_strategy(args) -> dict:
    obj = _load(args.file)
    s = serialize.strategy_from_obj(obj)
    if args.rounds is not None and s.spaces.rounds != args.rounds:
        raise ValueError(f"file declares {s.spaces.rounds} rounds, "
                         f"expected {args.rounds}")
    q = s.total().q if isinstance(s, strategies.MeasuringStrategy) else s.q
    rep = strategies.validate(q, s.spaces, s.kind, tol=args.tol)
    report = _report_validation(rep)
    report["residual"] = rep.max_residual
    if not rep.valid:
        raise DomainFailure(report)
    return report


def cmd_build_strategy(args) -> dict:
    op = serialize.operational_from_obj(_load(args.file))
    built = strategies.build_strategy(op)
    return serialize.strategy_to_obj(built)


def cmd_interact(args) -> dict:
    a = serialize.strategy_from_obj(_load(args.strategy))
    b = serialize.strategy_from_obj(_load(args.costrategy))
    probs = strategies.interaction_probability(a, b)
    return {
        "outcomes_rows": list(a.outcomes),
        "outcomes_cols": list(b.outcomes),
        "probabilities": [[float(p) for p in row] for row in probs],
        "total": float(probs.sum()),
    }


def cmd_max_prob(args) -> dict:
    s = serialize.strategy_from_obj(_load(args.file))
    if not isinstance(s, strategies.MeasuringStrategy):
        raise ValueError("max-prob needs a measuring strategy file")
    label = _match_label(s.outcomes, args.outcome)
    res = strategies.max_output_probability(s, label, tol=min(args.tol, 1e-9),
                                            max_iter=args.max_iter)
    return {
        "outcome": label,
        "probability": res.probability,
        "primal_value": res.primal_value,
        "dual_value": res.dual_value,
        "gap": res.gap,
        "witness": serialize.strategy_to_obj(res.witness),
    }


def _match_label(labels, wanted):
    for label in labels:
        if str(label) == str(wanted):
            return label
    raise ValueError(f"unknown outcome {wanted!r}; file has {list(labels)}")


def cmd_game_value(args) -> dict:
    obj = _load(args.file)
    referee = serialize.strategy_from_obj(obj["referee"])
    payout = {_match_label(referee.outcomes, k): float(v)
              for k, v in obj["payout"].items()}
    game = games.GameSpec(
        tuple(obj["alice_dims"]["q"]), tuple(obj["alice_dims"]["a"]),
        tuple(obj["bob_dims"]["q"]), tuple(obj["bob_dims"]["a"]),
        referee, payout)
    res = games.game_value(game, tol=min(args.tol, 1e-9), max_iter=args.max_iter)
    return {
        "value": res.value,
        "primal_value": res.primal_value,
        "dual_value": res.dual_value,
        "gap": res.gap,
        "alice_strategy": serialize.strategy_to_obj(res.alice_strategy),
        "bob_strategy": serialize.strategy_to_obj(res.bob_strategy),
    }


def cmd_coinflip_audit(args) -> dict:
    alice = serialize.strategy_from_obj(_load(args.alice))
    bob = serialize.strategy_from_obj(_load(args.bob))
    protocol = games.CoinFlipProtocol(alice, bob)
    audit = games.coinflip_audit(protocol, tol=max(args.tol, 1e-6))
    report = {
        "honest": list(audit.honest),
        "p_alice": {str(k): v for k, v in audit.p_alice.items()},
        "p_bob": {str(k): v for k, v in audit.p_bob.items()},
        "products": {str(k): v for k, v in audit.products.items()},
        "kitaev_ok": audit.kitaev_ok,
        "bound": 1.0 / np.sqrt(2.0),
    }
    if not audit.kitaev_ok:
        raise DomainFailure(report)
    return report


def cmd_parallel_rep(args) -> dict:
    s = serialize.strategy_from_obj(_load(args.strategy))
    if isinstance(s, strategies.MeasuringStrategy):
        raise ValueError("parallel-rep expects a non-measuring strategy file")
    accept, _ = serialize.hermitian_from_obj(_load(args.accept))
    res = games.parallel_repetition_check(accept, s, args.s, args.k, tol=args.tol)
    report = {
        "hypothesis_ok": res.hypothesis_ok,
        "hypothesis_min_eig": res.hypothesis_min_eig,
        "ok": res.ok,
        "min_eig": res.min_eig,
        "s": args.s,
        "k": args.k,
    }
    if not (res.hypothesis_ok and res.ok):
        raise DomainFailure(report)
    return report


def cmd_snorm(args) -> dict:
    obj = _load(args.file)
    spaces = _spaces_from_obj(obj)
    j, _ = serialize.hermitian_from_obj(obj["j"])
    res = norms.snorm(j, spaces, dual=args.dual, tol=min(args.tol, 1e-9),
                      max_iter=args.max_iter)
    return {
        "value": res.value,
        "gap": res.gap,
        "dual": args.dual,
        "optimizer": serialize.strategy_to_obj(res.optimizer),
    }


def cmd_distinguish_sets(args) -> dict:
    def load_hull(path):
        obj = _load(path)
        spaces = _spaces_from_obj(obj)
        gens = tuple(strategies.Strategy(spaces, obj["kind"],
                                         serialize.hermitian_from_obj(g)[0])
                     for g in obj["generators"])
        return norms.StrategySetHull(obj["kind"], spaces, gens)

    h0, h1 = load_hull(args.hull0), load_hull(args.hull1)
    res = norms.distinguish_sets(h0, h1, tol=min(args.tol, 1e-9),
                                 max_iter=args.max_iter)
    return {
        "distance": res.distance,
        "gap": res.gap,
        "distinguisher": serialize.strategy_to_obj(res.distinguisher),
    }


def cmd_no_signaling(args) -> dict:
    obj = _load(args.file)
    spaces = _party_spaces_from_obj(obj)
    choi, _ = serialize.hermitian_from_obj(obj["choi"])
    rep = localops.no_signaling_check(choi, spaces, tol=args.tol)
    report = {
        "ok": rep.ok,
        "max_residual": rep.max_residual,
        "residuals": {",".join(str(i) for i in k): v
                      for k, v in rep.residuals.items()},
    }
    if not rep.ok:
        raise DomainFailure(report)
    return report


def cmd_losr_ball(args) -> dict:
    obj = _load(args.file)
    spaces = _party_spaces_from_obj(obj)
    choi, _ = serialize.hermitian_from_obj(obj["choi"])
    res = localops.losr_ball_certificate(choi, spaces, tol=args.tol)
    report = {
        "in_ball": res.in_ball,
        "radius": res.radius,
        "threshold": res.threshold,
        "span_residual": res.span_residual,
    }
    if res.decomposition is not None:
        report["certificate"] = {
            "target": serialize.matrix_to_obj(spaces.to_paired(choi),
                                              spaces.local_dims, spaces.local_dims),
            "decomposition": serialize.decomposition_to_obj(res.decomposition),
        }
        report["weights_sum"] = float(sum(res.channel_weights()))
    if not res.in_ball:
        raise DomainFailure(report)
    return report


def cmd_sep_decompose(args) -> dict:
    obj = _load(args.file)
    spaces = _party_spaces_from_obj(obj)
    cones = tuple(obj["cones"])
    op, _ = serialize.hermitian_from_obj(obj["op"])
    plus, minus = localops.sep_generate(op, spaces, cones, tol=args.tol)
    return {
        "plus": serialize.decomposition_to_obj(plus),
        "minus": serialize.decomposition_to_obj(minus),
        "plus_norm": linalg.op_norm(plus.reconstruct()),
        "minus_norm": linalg.op_norm(minus.reconstruct()),
    }


def cmd_nonlocal_box(args) -> dict:
    box = localops.nonlocal_box()
    ns = localops.no_signaling_check(box.choi, box.spaces, tol=max(args.tol, 1e-12))
    return {
        "choi": serialize.matrix_to_obj(box.choi, box.spaces.standard_factors,
                                        box.spaces.standard_factors),
        "kraus": [serialize.matrix_to_obj(k) for k in box.kraus],
        "decomposition": serialize.decomposition_to_obj(box.decomposition),
        "no_signaling_ok": ns.ok,
        "no_signaling_max_residual": ns.max_residual,
    }


def cmd_verify_cert(args) -> dict:
    obj = _load(args.file)
    if "certificate" in obj:
        obj = obj["certificate"]
    dec = serialize.decomposition_from_obj(obj["decomposition"])
    target, _, _ = serialize.matrix_from_obj(obj["target"])
    chk = localops.verify_decomposition(dec, target, tol=args.tol)
    report = {
        "ok": chk.ok,
        "reconstruction_residual": chk.reconstruction_residual,
        "min_factor_eig": chk.min_factor_eig,
        "max_cone_residual": chk.max_cone_residual,
        "min_weight": chk.min_weight,
        "terms": len(dec.terms),
    }
    if not chk.ok:
        raise DomainFailure(report)
    return report


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsk",
        description="finite-round quantum strategy toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, configure=None, help=None):
        p = sub.add_parser(name, help=help)
        p.add_argument("--tol", type=float,
                       default=float(os.environ.get("QSK_TOL", DEFAULT_TOL)))
        p.add_argument("--max-iter", type=int, default=500, dest="max_iter")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=str, default=None)
        if configure:
            configure(p)
        p.set_defaults(handler=handler)
        return p

    add("validate-strategy", cmd_validate_strategy, lambda p: (
        p.add_argument("file"),
        p.add_argument("--rounds", type=int, default=None)),
        help="check the linear-constraint characterization")
    add("build-strategy", cmd_build_strategy, lambda p: p.add_argument("file"),
        help="operational description to representation")
    add("interact", cmd_interact, lambda p: (
        p.add_argument("strategy"), p.add_argument("costrategy")),
        help="joint outcome probabilities")
    add("max-prob", cmd_max_prob, lambda p: (
        p.add_argument("file"), p.add_argument("--outcome", required=True)),
        help="maximum forcing probability of an outcome")
    add("game-value", cmd_game_value, lambda p: p.add_argument("file"),
        help="value of a zero-sum refereed game")
    add("coinflip-audit", cmd_coinflip_audit, lambda p: (
        p.add_argument("alice"), p.add_argument("bob")),
        help="cheating probabilities of a coin-flipping protocol")
    add("parallel-rep", cmd_parallel_rep, lambda p: (
        p.add_argument("strategy"), p.add_argument("accept"),
        p.add_argument("--s", type=float, required=True),
        p.add_argument("--k", type=int, required=True)),
        help="k-fold repetition domination check")
    add("snorm", cmd_snorm, lambda p: (
        p.add_argument("file"), p.add_argument("--dual", action="store_true")),
        help="round-r norm of a Hermitian Choi matrix")
    add("distinguish-sets", cmd_distinguish_sets, lambda p: (
        p.add_argument("hull0"), p.add_argument("hull1")),
        help="optimal fixed distinguisher between hulls")
    add("no-signaling", cmd_no_signaling, lambda p: p.add_argument("file"),
        help="subset partial-trace membership test")
    add("losr-ball", cmd_losr_ball, lambda p: p.add_argument("file"),
        help="shared-randomness ball certificate")
    add("sep-decompose", cmd_sep_decompose, lambda p: p.add_argument("file"),
        help="bounded separable generation of an operator")
    add("nonlocal-box", cmd_nonlocal_box,
        help="the correlated-bit channel and its certificates")
    add("verify-cert", cmd_verify_cert, lambda p: p.add_argument("file"),
        help="re-check a separable certificate from scratch")
    return parser


def _emit(report: dict, out_path) -> None:
    text = serialize.dumps(report)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tol <= 0:
        print("error: tolerance must be positive", file=sys.stderr)
        return 2
    try:
        report = args.handler(args)
    except DomainFailure as fail:
        _emit(fail.report, args.out)
        return 1
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, KeyError, TypeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    _emit(report, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
