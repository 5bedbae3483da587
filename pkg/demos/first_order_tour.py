"""First-order team semantics: translations between dependence and
independence-friendly logic, grids and tilings.

    python demos/first_order_tour.py
"""
from __future__ import annotations

from teamlogic import folog as F


def main() -> None:
    f = F.fo_parse("A x. E y. (dep(x;y) & E(x,y))")
    g = F.translate_d2_to_if2(f)
    h = F.translate_if2_to_d3(g)
    print("D2  ", F.fo_render(f))
    print("IF2 ", F.fo_render(g))
    print("D3  ", F.fo_render(h))
    a = F.FoStructure((0, 1, 2), {"E": {(0, 1), (1, 2), (2, 0)}})
    unit = F.FoTeam.unit()
    print("on a 3-cycle:", [F.fo_eval(a, unit, x) for x in (f, g, h)])
    e = F.translate_d_to_eso(f)
    print("ESO ", ", ".join(f"{n}/{k}" for n, k in e.relations), ".", F.fo_render(e.matrix))

    grid = F.gen_grid(2, 2)
    print("\n3x3 grid violates:", F.violated_conjuncts(grid) or "nothing")
    broken = F.FoStructure(grid.universe, {"H": grid.relations["H"] - {("0_0", "1_0")},
                                           "V": grid.relations["V"]}, grid.arities)
    print("grid minus one edge violates:", F.violated_conjuncts(broken))

    ts = F.TileSet((("a", "a", "a", "a"), ("b", "b", "a", "a")))
    small = F.gen_grid(1, 1)
    for border in ("a", "b"):
        phi = F.FAnd(F.gen_phi_tiling(ts), F.gen_phi_border(ts, border))
        b = F.find_expansion(small, F.tile_relations(ts), phi)
        found = None if b is None else {
            e: next(n for n, _ in F.tile_relations(ts) if (e,) in b.relations[n]) for e in small.universe}
        agree = (b is None) == (F.tile_bruteforce(small, ts, border) is None)
        print(f"\n2x2 grid, border {border}: {found}  (direct search agrees: {agree})")

if __name__ == "__main__":
    main()
