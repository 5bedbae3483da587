"""Satisfiability: the decision pipeline, the dep-free translation and the
complexity classifier.

    python demos/satisfiability_tour.py
"""
from __future__ import annotations

from teamlogic import reductions as R, sat
from teamlogic.formula import UNBOUNDED, FragmentSignature, parse, render


def main() -> None:
    for text in ("<>(p & dep(;q)) & <>(p & !q)", "<>p & []!p", "[]dep(p;q) & <>(p & q) & <>(p & !q)",
                 "p -> <>q"):
        r = sat.sat(parse(text))
        where = f", model with {r.witness[0].n} worlds" if r.witness else ""
        print(f"{text:40} {r.verdict} ({r.method}{where})")

    f = parse("<>dep(p;q)")
    print(f"\ndep-free disjuncts of {render(f)}:")
    for g in sat.translate_phi_T(f):
        print("   ", render(g))

    d = R.DqbfInstance(1, 2, (frozenset(),), ((1, -2), (-1, 2)))
    r = sat.sat(R.gen_sat_dqbf(d), sat.SatConfig(phi_t_limit=100000))
    print(f"\nDQBF where x2 may not see x1: oracle {R.oracle_dqbf(d)}, formula {r.verdict}")

    print()
    full = frozenset({"box", "diamond", "and", "dep-or", "neg", "dep"})
    for ops, k, problem in ((full, UNBOUNDED, "sat"), (full, 2, "sat"), (full, UNBOUNDED, "mc"),
                            (full | {"impl"}, UNBOUNDED, "mc"), (full - {"and"}, UNBOUNDED, "sat")):
        label = ",".join(sorted(ops))
        print(f"{problem.upper():3} {label:45} arity {k!s:9} {sat.classify(FragmentSignature(ops, k), problem)}")


if __name__ == "__main__":
    main()
