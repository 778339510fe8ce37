"""Command-line front end: solve, verify, gen, oracle, bench.

Exit codes are stable contracts: 0 success (solve: satisfiable), 20
unsatisfiable, 30 oracle refused (too large), 2 input or usage errors,
1 failed verification.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import instance as inst_mod
from . import oracle
from .assignment import parse_solution
from .errors import Q2SatError, TooLarge
from .solver import SolverConfig, solve

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_INPUT = 2
EXIT_UNSAT = 20
EXIT_TOO_LARGE = 30


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_instance(path: str) -> inst_mod.Instance:
    return inst_mod.parse(_read_text(path))


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    cfg = SolverConfig()
    if args.tol is not None:
        cfg.tol_sat = args.tol
    outcome = solve(inst, cfg)
    doc = json.dumps(outcome.to_json(), separators=(",", ":"))
    _write_text(args.out, doc)
    if outcome.sat:
        return EXIT_OK
    print(f"unsat: {outcome.cause_string()}", file=sys.stderr)
    return EXIT_UNSAT


def cmd_verify(args) -> int:
    inst = _load_instance(args.instance)
    try:
        doc = json.loads(_read_text(args.solution))
    except json.JSONDecodeError as exc:
        raise Q2SatError(f"solution file is not valid JSON: {exc}") from exc
    if doc.get("status") != "sat":
        print("solution document is not a sat verdict", file=sys.stderr)
        return EXIT_VERIFY_FAIL
    entries = parse_solution(doc)
    total, worst = oracle.product_energy(inst, entries)
    tol = args.tol if args.tol is not None else 1e-9
    print(f"total energy {total:.3e}, max per-term {worst:.3e}, tolerance {tol:.0e}")
    return EXIT_OK if worst <= tol else EXIT_VERIFY_FAIL


def _random_formula(rng, n: int, m: int):
    """Random 2-SAT formula that stays inside the projector model."""
    unit_bits: dict[int, int] = {}
    pair_states: dict[tuple[int, int], set[int]] = {}
    clauses = []
    guard = 0
    while len(clauses) < m and guard < 50 * m + 100:
        guard += 1
        u = int(rng.integers(n))
        w = int(rng.integers(n))
        pu = bool(rng.integers(2))
        pw = bool(rng.integers(2))
        if u == w:
            if pu != pw:
                continue
            bit = 0 if pu else 1
            if unit_bits.get(u, bit) != bit:
                continue
            unit_bits[u] = bit
            clauses.append(((u, pu),))
            continue
        a, pa, b, pb = (u, pu, w, pw) if u < w else (w, pw, u, pu)
        idx = 2 * (0 if pa else 1) + (0 if pb else 1)
        states = pair_states.setdefault((a, b), set())
        if len(states | {idx}) > 3:
            continue
        states.add(idx)
        clauses.append(((u, pu), (w, pw)))
    return clauses


def cmd_gen(args) -> int:
    n = args.n
    seed = args.seed
    if args.kind == "2sat":
        m = args.m if args.m is not None else 2 * n
        import numpy as np

        formula = _random_formula(np.random.default_rng(seed), n, m)
        inst = inst_mod.gen_classical_2sat(formula, n)
    elif args.kind == "planted":
        m = args.m if args.m is not None else n
        inst = inst_mod.gen_planted(n, m, seed=seed)
    elif args.kind == "planted-entangled":
        m = args.m if args.m is not None else n
        inst = inst_mod.gen_planted(n, m, seed=seed, entangled_only=True)
    elif args.kind == "ring":
        inst = inst_mod.gen_ring(n, kind="singlet", seed=seed)
    else:  # random
        m = args.m if args.m is not None else 2 * n
        inst = inst_mod.gen_random(n, m, seed=seed)
    _write_text(args.out, inst_mod.serialize(inst))
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = _load_instance(args.instance)
    try:
        verdict, energy = oracle.dense_verdict(inst)
    except TooLarge as exc:
        print(f"too large: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    print(f"minimum energy {energy:.6e} -> {verdict}")
    return EXIT_OK


def cmd_bench(args) -> int:
    sizes = [int(float(s)) for s in args.sizes.split(",") if s]
    rows = ["size,edges,steps,millis"]
    for size in sizes:
        if args.kind == "ring":
            inst = inst_mod.gen_ring(size, kind="singlet", seed=args.seed)
        elif args.kind == "planted-entangled":
            inst = inst_mod.gen_planted(size, size, seed=args.seed, entangled_only=True)
        else:
            raise Q2SatError(f"bench kind {args.kind!r} not supported")
        t0 = time.perf_counter()
        outcome = solve(inst)
        micros = int((time.perf_counter() - t0) * 1_000_000)
        if not outcome.sat:
            raise Q2SatError(f"benchmark instance of size {size} reported unsat")
        rows.append(f"{size},{outcome.edges},{outcome.steps},{micros // 1000}")
        del inst, outcome
    text = "\n".join(rows) + "\n"
    sys.stdout.write(text)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="q2sat", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance file ('-' for stdin)")
    p.add_argument("instance")
    p.add_argument("--tol", type=float, default=None, help="satisfaction tolerance")
    p.add_argument("--out", default=None, help="solution file (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a solution against an instance")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--tol", type=float, default=None, help="per-term energy bound")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="generate an instance")
    p.add_argument(
        "--kind",
        required=True,
        choices=["2sat", "planted", "planted-entangled", "ring", "random"],
    )
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("oracle", help="dense minimum energy (n <= 10)")
    p.add_argument("instance")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="timing and step counts over sizes")
    p.add_argument("--kind", default="ring", choices=["ring", "planted-entangled"])
    p.add_argument("--sizes", required=True, help="comma list, e.g. 1e4,1e5,1e6")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (Q2SatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
