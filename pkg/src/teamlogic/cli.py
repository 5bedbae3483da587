"""``tdl``: command-line front end.

Exit status: 0 true/sat, 1 false/unsat, 2 usage or input error, 3 resource cap.
Verdict commands print one line ``verdict=... strategy=... millis=...`` on
stdout; everything else diagnostic goes to stderr.
"""
from __future__ import annotations

import argparse
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import folog, mc, reductions, sat
from .formula import (
    UNBOUNDED, FormulaError, FragmentSignature, OPERATORS, dual, midl_rewrites,
    parse, render, signature_of,
)
from .kripke import KripkeError, ResourceCapError, load, store

EXIT_TRUE, EXIT_FALSE, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3

CNF_VARIANTS = ("wedge-vee", "diamond", "box-vee", "diamond-wedge", "diamond-vee", "vee-nor")
QBF_VARIANTS = ("midl-qbf-sor", "midl-qbf-diamond")


class UsageError(Exception):
    pass


def _verdict(word: str, strategy: str, start: float, extra: str = "") -> str:
    ms = int((time.perf_counter() - start) * 1000)
    return f"verdict={word} strategy={strategy} millis={ms}{extra}"


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _formula_text(args, required: bool = True) -> str | None:
    if getattr(args, "formula", None) is not None:
        return args.formula
    if getattr(args, "formula_file", None) is not None:
        return _read(args.formula_file).strip()
    if required:
        raise UsageError("a formula is required (--formula or --formula-file)")
    return None


def _header_formula(text: str) -> str | None:
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("# formula:"):
            return line[len("# formula:"):].strip()
    return None


def _write(out: str | None, text: str) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text)
        print(f"wrote {out}", file=sys.stderr)


# --- check ----------------------------------------------------------------------

def _check_one(job: tuple) -> tuple[int, str]:
    path, ftext, fo, strategy = job
    start = time.perf_counter()
    try:
        text = _read(path)
        if fo:
            src = ftext if ftext is not None else _header_formula(text)
            if src is None:
                raise UsageError(f"{path}: no formula given and no '# formula:' header")
            a = folog.fo_load(text)
            ok = folog.fo_eval(a, folog.FoTeam.unit(), folog.fo_parse(src))
            how = "fo_eval"
        else:
            src = ftext if ftext is not None else _header_formula(text)
            if src is None:
                raise UsageError(f"{path}: no formula given and no '# formula:' header")
            k, t = load(text)
            f = parse(src)
            if strategy == "auto":
                ok, how = mc.check(k, t, f)
            else:
                fn = {"eval": mc.eval, "poormans": mc.eval_poormans,
                      "vee_bounded": mc.eval_vee_bounded, "nor_unary": mc.eval_nor_unary,
                      "few_deps": mc.eval_few_deps}[strategy]
                ok, how = fn(k, t, f), strategy
    except (ResourceCapError, mc.FewDepsRefused) as e:
        return EXIT_CAP, _verdict("unknown", "refused", start) + f"\n{path}: {e}"
    except (UsageError, FormulaError, KripkeError, mc.UnknownPropositionError) as e:
        return EXIT_USAGE, f"{path}: {e}"
    return (EXIT_TRUE if ok else EXIT_FALSE), _verdict("true" if ok else "false", how, start)


def cmd_check(args) -> int:
    ftext = _formula_text(args, required=False)
    jobs = [(p, ftext, args.fo, args.strategy) for p in args.structures]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_check_one, jobs))
    else:
        results = [_check_one(j) for j in jobs]
    many = len(jobs) > 1
    codes = []
    for (path, *_), (code, text) in zip(jobs, results):
        line, _, diag = text.partition("\n")
        if code == EXIT_USAGE:
            print(line, file=sys.stderr)
        else:
            print(line + (f" file={path}" if many else ""))
            if diag:
                print(diag, file=sys.stderr)
        codes.append(code)
    for c in (EXIT_USAGE, EXIT_CAP, EXIT_FALSE):
        if c in codes:
            return c
    return EXIT_TRUE


# --- sat ------------------------------------------------------------------------

def cmd_sat(args) -> int:
    start = time.perf_counter()
    f = parse(_formula_text(args))
    res = sat.sat(f, sat.SatConfig(max_worlds=args.max_worlds))
    if res.verdict == "sat":
        if args.witness and res.witness is not None:
            k, w = res.witness
            _write(args.witness, store(k, k.team([w])))
        print(_verdict("sat", res.method, start))
        return EXIT_TRUE
    if res.verdict == "unsat":
        print(_verdict("unsat", res.method, start))
        return EXIT_FALSE
    print(_verdict("unknown", res.method, start))
    print(f"no model with at most {args.max_worlds} worlds; completeness not guaranteed", file=sys.stderr)
    return EXIT_CAP


# --- classify -------------------------------------------------------------------

def cmd_classify(args) -> int:
    if args.formula is not None or args.formula_file is not None:
        sig = signature_of(parse(_formula_text(args)))
        if args.arity is not None:
            sig = FragmentSignature(sig.operators, _arity(args.arity))
    else:
        if args.ops is None:
            raise UsageError("give --ops or a formula")
        ops = [o.strip() for o in args.ops.split(",") if o.strip()]
        bad = set(ops) - set(OPERATORS)
        if bad:
            raise UsageError(f"unknown operators {sorted(bad)}; choose from {', '.join(OPERATORS)}")
        arity = _arity(args.arity) if args.arity is not None else (UNBOUNDED if "dep" in ops else None)
        sig = FragmentSignature(frozenset(ops), arity)
    print(sat.classify(sig, args.problem))
    return EXIT_TRUE


def _arity(text: str):
    if text == "unbounded":
        return UNBOUNDED
    try:
        k = int(text)
    except ValueError:
        raise UsageError(f"--arity takes 'unbounded' or an integer, got {text!r}") from None
    if k < 0:
        raise UsageError("--arity must be non-negative")
    return k


# --- gen ------------------------------------------------------------------------

def _out_dir(path: str) -> Path:
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _qcsp(text: str) -> reductions.QcspInstance:
    q = reductions.parse_qdimacs(text)
    k = 0
    for kind, vs in q.prefix:
        if kind != "a":
            break
        k += len(vs)
    if sorted(v for kind, vs in q.prefix if kind == "a" for v in vs) != list(range(1, k + 1)):
        raise UsageError("QCSP input: universals must be 1..k in one leading block")
    return reductions.QcspInstance(k, q.num_vars, q.matrix)


def cmd_gen(args) -> int:
    kind = args.kind
    if kind in ("3sat-mc", "qbf-mc", "taut-mc"):
        if kind == "3sat-mc":
            src = reductions.parse_dimacs(_read(args.cnf))
            stem = Path(args.cnf).stem
            variants = CNF_VARIANTS if args.variant == "all" else (args.variant,)
            if not set(variants) <= set(CNF_VARIANTS):
                raise UsageError(f"3sat-mc variants: {', '.join(CNF_VARIANTS)} or all")
        elif kind == "qbf-mc":
            src = reductions.parse_qdimacs(_read(args.qbf))
            stem = Path(args.qbf).stem
            variants = QBF_VARIANTS if args.variant == "all" else (args.variant,)
            if not set(variants) <= set(QBF_VARIANTS):
                raise UsageError(f"qbf-mc variants: {', '.join(QBF_VARIANTS)} or all")
        else:
            src = parse(_formula_text(args))
            stem, variants = "taut", ("pidl-taut",)
        out = _out_dir(args.out)
        for v in variants:
            inst = reductions.MC_GENERATORS[v](src)
            path = out / f"{stem}-{v}.kripke"
            path.write_text(inst.store())
            print(path)
        return EXIT_TRUE
    if kind == "sat-dqbf":
        f = reductions.gen_sat_dqbf(reductions.parse_dqdimacs(_read(args.input)))
    elif kind == "sat-qbf3":
        f = reductions.gen_sat_qbf3(reductions.parse_qdimacs(_read(args.input)))
    elif kind == "sat-qcsp":
        f = reductions.gen_sat_qcsp(_qcsp(_read(args.input)), args.variant)
    elif kind == "random":
        rng = random.Random(args.seed)
        out = _out_dir(args.out)
        for i in range(args.count):
            if args.family == "cnf":
                text = reductions.to_dimacs(reductions.random_cnf(rng, args.vars, args.clauses))
                path = out / f"random-{args.seed}-{i}.cnf"
            else:
                text = reductions.to_qdimacs(reductions.random_qbf(rng, args.vars, args.clauses))
                path = out / f"random-{args.seed}-{i}.qdimacs"
            path.write_text(text)
            print(path)
        return EXIT_TRUE
    elif kind == "grid":
        _write(args.out, folog.fo_store(folog.gen_grid(args.rows, args.cols)))
        return EXIT_TRUE
    elif kind == "phi-grid":
        _write(args.out, folog.fo_render(folog.gen_phi_infgrid() if args.infinite else folog.gen_phi_grid()))
        return EXIT_TRUE
    elif kind == "phi-tiling":
        ts, border = folog.tiles_load(_read(args.input))
        g = folog.gen_phi_tiling(ts)
        if border is not None:
            g = folog.FAnd(g, folog.gen_phi_border(ts, border))
        _write(args.out, folog.fo_render(g))
        return EXIT_TRUE
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown generator {kind}")
    _write(args.out, render(f))
    return EXIT_TRUE


# --- translate ------------------------------------------------------------------

def cmd_translate(args) -> int:
    kind = args.kind
    if kind in ("d2-if2", "if2-d3", "d-eso"):
        g = folog.fo_parse(_formula_text(args))
        if kind == "d2-if2":
            print(folog.fo_render(folog.translate_d2_to_if2(g)))
        elif kind == "if2-d3":
            print(folog.fo_render(folog.translate_if2_to_d3(g)))
        else:
            e = folog.translate_d_to_eso(g)
            rels = ", ".join(f"{n}/{a}" for n, a in e.relations)
            head = f"exists {rels} . " if rels else ""
            print(head + folog.fo_render(e.matrix))
            print(f"team relation {e.team_relation} over ({','.join(e.team_vars)})", file=sys.stderr)
        return EXIT_TRUE
    f = parse(_formula_text(args))
    if kind == "phi-t":
        for i, g in enumerate(sat.translate_phi_T(f, args.arity)):
            if i >= args.limit:
                print(f"stopped after {args.limit} disjuncts", file=sys.stderr)
                return EXIT_CAP
            print(render(g))
    elif kind == "dual":
        print(render(dual(f)))
    elif kind in ("neg-as-impl", "dep-as-impl", "impl-as-dual-or"):
        print(render(midl_rewrites(f, kind)))
    elif kind == "mdl-d2":
        if args.structure is None:
            raise UsageError("mdl-d2 needs --structure")
        k, t = load(_read(args.structure))
        a, x, g = folog.translate_mdl_to_d2(f, k, t)
        rows = " ".join("(" + ",".join(str(v) for v in s) + ")" for s in x.assignments)
        text = folog.fo_store(a) + f"# team over ({','.join(x.domain)}): {rows}\n"
        if args.out:
            _write(args.out, text)
        else:
            print(text, end="", file=sys.stderr)
        print(folog.fo_render(g))
    return EXIT_TRUE


# --- oracle ---------------------------------------------------------------------

def cmd_oracle(args) -> int:
    start = time.perf_counter()
    kind = args.kind
    if kind == "taut":
        ok = reductions.oracle_taut(parse(_formula_text(args)))
    else:
        if args.input is None:
            raise UsageError(f"oracle {kind} needs an input file")
        text = _read(args.input)
        if kind == "3sat":
            ok = reductions.oracle_sat3(reductions.parse_dimacs(text))
        elif kind == "qbf":
            ok = reductions.oracle_qbf(reductions.parse_qdimacs(text))
        elif kind == "dqbf":
            ok = reductions.oracle_dqbf(reductions.parse_dqdimacs(text))
        else:
            ok = reductions.oracle_qcsp(_qcsp(text))
    if kind == "3sat":
        word = "sat" if ok else "unsat"
    else:
        word = "true" if ok else "false"
    print(_verdict(word, f"oracle_{kind}", start))
    return EXIT_TRUE if ok else EXIT_FALSE


# --- parser ---------------------------------------------------------------------

def _formula_opts(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--formula", help="formula text")
    g.add_argument("--formula-file", help="file holding the formula")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tdl", description="Team semantics toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="model check structure files")
    c.add_argument("structures", nargs="+")
    _formula_opts(c)
    c.add_argument("--fo", action="store_true", help="first-order structure and sentence")
    c.add_argument("--strategy", default="auto",
                   choices=("auto", "eval", "poormans", "vee_bounded", "nor_unary", "few_deps"))
    c.add_argument("--jobs", type=int, default=1)
    c.set_defaults(run=cmd_check)

    s = sub.add_parser("sat", help="satisfiability")
    _formula_opts(s)
    s.add_argument("--max-worlds", type=int, default=6)
    s.add_argument("--witness", help="write a model here when satisfiable")
    s.set_defaults(run=cmd_sat)

    k = sub.add_parser("classify", help="complexity of a fragment")
    k.add_argument("--ops", help="comma separated: " + ",".join(OPERATORS))
    k.add_argument("--arity", help="'unbounded' or a dep arity bound k")
    k.add_argument("--problem", required=True, type=str.lower, choices=("sat", "mc"))
    _formula_opts(k)
    k.set_defaults(run=cmd_classify)

    g = sub.add_parser("gen", help="instance generators")
    g.add_argument("kind", choices=("3sat-mc", "qbf-mc", "taut-mc", "sat-dqbf", "sat-qbf3",
                                    "sat-qcsp", "random", "grid", "phi-grid", "phi-tiling"))
    g.add_argument("--variant", default="all")
    g.add_argument("--cnf")
    g.add_argument("--qbf")
    g.add_argument("--input", help="source instance for sat-* and phi-tiling")
    g.add_argument("--out")
    g.add_argument("--family", choices=("cnf", "qbf"), default="cnf")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--vars", type=int, default=3)
    g.add_argument("--clauses", type=int, default=4)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--rows", type=int, default=2)
    g.add_argument("--cols", type=int, default=2)
    g.add_argument("--infinite", action="store_true")
    _formula_opts(g)
    g.set_defaults(run=cmd_gen)

    t = sub.add_parser("translate", help="formula translations")
    t.add_argument("kind", choices=("phi-t", "dual", "neg-as-impl", "dep-as-impl", "impl-as-dual-or",
                                    "mdl-d2", "d2-if2", "if2-d3", "d-eso"))
    _formula_opts(t)
    t.add_argument("--arity", type=int)
    t.add_argument("--limit", type=int, default=64)
    t.add_argument("--structure")
    t.add_argument("--out")
    t.set_defaults(run=cmd_translate)

    o = sub.add_parser("oracle", help="brute-force source problem oracles")
    o.add_argument("kind", choices=("3sat", "qbf", "dqbf", "qcsp", "taut"))
    o.add_argument("input", nargs="?")
    _formula_opts(o)
    o.set_defaults(run=cmd_oracle)
    return p


def _needs(args) -> None:
    if args.command == "gen":
        need = {"3sat-mc": ("cnf", "out"), "qbf-mc": ("qbf", "out"), "taut-mc": ("out",),
                "sat-dqbf": ("input",), "sat-qbf3": ("input",), "sat-qcsp": ("input",),
                "random": ("out",), "phi-tiling": ("input",)}.get(args.kind, ())
        missing = [n for n in need if getattr(args, n) is None]
        if missing:
            raise UsageError(f"gen {args.kind} needs " + " ".join("--" + m for m in missing))
        if args.kind == "sat-qcsp" and args.variant == "all":
            args.variant = "bot"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        _needs(args)
        return args.run(args)
    except ResourceCapError as e:
        print(f"resource cap: {e}", file=sys.stderr)
        return EXIT_CAP
    except (UsageError, FormulaError, KripkeError, reductions.ReductionError, ValueError) as e:
        print(f"tdl: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
