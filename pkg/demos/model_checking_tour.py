"""Model checking on a small team, then a 3SAT instance pushed through every
model checking reduction and compared with brute force.

    python demos/model_checking_tour.py
"""
from __future__ import annotations

from pathlib import Path

from teamlogic import mc, reductions as R
from teamlogic.formula import parse
from teamlogic.kripke import load

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    k, t = load((ROOT / "fixtures" / "example.kripke").read_text())
    print(f"team {k.members(t)} over worlds {list(k.worlds)}")
    for text in ("dep(;p) | dep(;q)", "dep(;p) \\/ dep(;q)", "<>(p | !p)", "[](q -> p)"):
        verdict, how = mc.check(k, t, parse(text))
        print(f"  {text:24} {verdict!s:5} via {how}")

    cnf = R.CnfInstance(3, ((1, -2), (2, 3), (-1, -3)))
    print(f"\nCNF {cnf.clauses}: brute force says {R.oracle_sat3(cnf)}")
    for name in ("wedge-vee", "diamond", "box-vee", "diamond-wedge", "diamond-vee", "vee-nor"):
        inst = R.MC_GENERATORS[name](cnf)
        verdict, how = mc.check(inst.structure, inst.team, inst.formula)
        print(f"  {name:14} {inst.structure.n:3} worlds  {verdict!s:5} via {how}")

    q = R.QbfInstance(2, (("a", (1,)), ("e", (2,))), ((1, -2), (-1, 2)))
    print(f"\nQBF forall x1 exists x2 {q.matrix}: brute force says {R.oracle_qbf(q)}")
    for name in ("midl-qbf-sor", "midl-qbf-diamond"):
        inst = R.MC_GENERATORS[name](q)
        print(f"  {name:16} {mc.check(inst.structure, inst.team, inst.formula)[0]}")


if __name__ == "__main__":
    main()
