"""Command-line front end.

Errors go to stderr as a single JSON record and yield exit status 2
(1 means "checked and rejected", e.g. a failed validation).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import classical, equilibrium, qgame
from .eisert import EisertParams, chi_coefficients, eisert_payoff
from .errors import GameError
from .gamedef import GameDocument, bundled_path, parse_payoff_table, parse_profile
from .gamedef import load_game as _load_path


def load_game(name: str) -> GameDocument:
    """Load a game file; bare names of bundled games also resolve."""
    path = Path(name)
    if not path.exists() and bundled_path(path.name).exists() and path.name == name:
        path = bundled_path(name)
    return _load_path(path)


def _read(name: str) -> str:
    path = Path(name)
    if not path.exists() and bundled_path(path.name).exists() and path.name == name:
        path = bundled_path(name)
    return path.read_text(encoding="utf-8")


def fmt(x: float) -> str:
    return f"{float(x):.12g}"


def fmt_vec(u) -> str:
    return "(" + ", ".join(fmt(x) for x in u) + ")"


def _gamma(args) -> float | None:
    if getattr(args, "gamma_deg", None) is not None:
        return math.radians(args.gamma_deg)
    return getattr(args, "gamma", None)


def _quantum(doc: GameDocument, args):
    if doc.kind != "quantum":
        raise GameError(f"{doc.source} is not a quantum game file")
    return doc.build(_gamma(args))


def cmd_validate(args, out) -> int:
    try:
        doc = load_game(args.file)
        game = doc.build()
    except GameError as exc:
        print(f"violation: {exc.message}", file=out)
        print(json.dumps(exc.record(), sort_keys=True), file=sys.stderr)
        return 1
    if doc.kind == "classical":
        problems = classical.validate_game(game)
    else:
        problems = qgame.validate_qgame(game)
        if not problems and not qgame.check_projector_orthogonality(game):
            problems.append("terminal-class projectors are not orthogonal and complete")
    if problems:
        for p in problems:
            print(f"violation: {p}", file=out)
        return 1
    print(f"OK {doc.kind} game: {args.file}", file=out)
    return 0


def cmd_simulate(args, out) -> int:
    game = _quantum(load_game(args.file), args)
    profile = parse_profile(game, args.profile)
    results = qgame.play_profile(game, profile)
    if args.seed is None:
        for c, p, _ in results:
            print(f"{c}\t{fmt(p)}\t{fmt_vec(game.payoffs[c])}", file=out)
        return 0
    rng = np.random.default_rng(args.seed)
    probs = np.array([p for _, p, _ in results])
    pick = int(rng.choice(len(results), p=probs / probs.sum()))
    c, p, run = results[pick]
    moves = " ".join(f"{{{r.operator.name},{r.outcome}@{r.qudit}}}" for r in run.records)
    print(f"run: {moves}", file=out)
    print(f"class: {c}\tprobability: {fmt(p)}\tpayoff: {fmt_vec(game.payoffs[c])}", file=out)
    return 0


def cmd_payoff(args, out) -> int:
    game = _quantum(load_game(args.file), args)
    u = qgame.expected_utility(game, parse_profile(game, args.profile))
    print(fmt_vec(u), file=out)
    return 0


def cmd_nash(args, out) -> int:
    doc = load_game(args.file)
    if doc.kind == "classical":
        table = classical.strategic_form(doc.build())
        for p in classical.pure_nash(table):
            label = ",".join(f"{i + 1}:{'/'.join(s)}" for i, s in enumerate(table.labels(p)))
            print(f"{label}\t{fmt_vec(table.payoff(p))}", file=out)
        return 0
    table = equilibrium.build_profile_table(_quantum(doc, args))
    eq = equilibrium.pure_nash_quantum(table)
    if not eq:
        print("no pure Nash equilibrium", file=out)
    for p in eq:
        print(f"{table.label(p)}\t{fmt_vec(table.payoff(p))}", file=out)
    return 0


def _grid(text: str) -> np.ndarray:
    try:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except ValueError:
        raise GameError(f"bad --gamma-grid {text!r}; expected LO:HI:N") from None


def cmd_sweep(args, out) -> int:
    doc = load_game(args.file)
    if not doc.has_gamma():
        raise GameError(f"{doc.source} has no ghz_like initial state to sweep")
    rows = equilibrium.sweep_gamma(
        lambda g: doc.build(g), _grid(args.gamma_grid), open_interval=False, max_workers=args.workers
    )
    n = doc.data["players"]
    path = Path(args.out)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["gamma", "equilibrium_label"] + [f"u_{i}" for i in range(1, n + 1)])
        for row in rows:
            for label, u in zip(row.equilibria, row.payoffs):
                writer.writerow([fmt(row.gamma), label] + [fmt(x) for x in u])
    print(f"wrote {len(rows)} gamma values to {path}", file=out)
    return 0


def cmd_check_realization(args, out) -> int:
    qdoc, cdoc = load_game(args.qfile), load_game(args.cfile)
    if qdoc.kind != "quantum" or cdoc.kind != "classical":
        raise GameError("check-realization takes a quantum file then a classical file")
    result = qgame.check_realization(qdoc.build(), cdoc.build())
    if not result.ok:
        print(f"not a realization: {result.obstruction}", file=out)
        return 1
    print(f"realization: yes ({len(result.xi)} histories mapped)", file=out)
    for h, c in sorted(result.xi.items(), key=lambda kv: (len(kv[0]), kv[0])):
        print(f"({classical.history_key(h)}) -> {c}", file=out)
    return 0


def cmd_eisert(args, out) -> int:
    table = parse_payoff_table(_read(args.payoffs), source=args.payoffs)
    gamma = _gamma(args)
    if gamma is None:
        raise GameError("eisert needs --gamma or --gamma-deg")
    p = EisertParams(gamma, args.theta1, args.phi1, args.theta2, args.phi2, tuple(map(tuple, table))).check()
    print(f"payoff: {fmt_vec(eisert_payoff(p))}", file=out)
    probs = np.abs(chi_coefficients(p)) ** 2
    for key, pr in zip(("00", "01", "10", "11"), probs):
        print(f"|chi_{key}|^2 = {fmt(pr)}", file=out)
    return 0


def _add_gamma(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=float, help="entanglement angle in radians")
    g.add_argument("--gamma-deg", type=float, help="entanglement angle in degrees")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qextensive", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check all structural conditions of a game file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="list terminal classes reached by a profile")
    p.add_argument("file")
    p.add_argument("--profile", required=True, help='e.g. "1:V0,2:V1,3:V0"')
    p.add_argument("--seed", type=int, help="sample a single run instead")
    _add_gamma(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("payoff", help="expected payoff vector of a profile")
    p.add_argument("file")
    p.add_argument("--profile", required=True)
    _add_gamma(p)
    p.set_defaults(func=cmd_payoff)

    p = sub.add_parser("nash", help="pure Nash equilibria and their payoffs")
    p.add_argument("file")
    _add_gamma(p)
    p.set_defaults(func=cmd_nash)

    p = sub.add_parser("sweep", help="equilibria over a grid of gamma values, as CSV")
    p.add_argument("file")
    p.add_argument("--gamma-grid", required=True, help="LO:HI:N, inclusive, radians")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check-realization", help="is QFILE a quantum realization of CFILE?")
    p.add_argument("qfile")
    p.add_argument("cfile")
    p.set_defaults(func=cmd_check_realization)

    p = sub.add_parser("eisert", help="closed-form payoff of the static two-qubit scheme")
    _add_gamma(p)
    for name in ("theta1", "phi1", "theta2", "phi2"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--payoffs", required=True, help="JSON file with payoffs 00, 01, 10, 11")
    p.set_defaults(func=cmd_eisert)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except GameError as exc:
        print(json.dumps(exc.record(), sort_keys=True), file=err)
        return 2
    except OSError as exc:
        print(json.dumps({"error": "IOError", "message": str(exc)}, sort_keys=True), file=err)
        return 2


if __name__ == "__main__":
    sys.exit(main())
