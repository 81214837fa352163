"""Command line front end.

Every subcommand reads files or flags, writes one deterministic primary
artifact (JSON or DOT) to --out or stdout, and reports problems as JSON
diagnostics on stderr.  Exit codes: 0 success, 1 verification failure,
2 input error, 3 budget exhausted (partial artifacts are still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from .words import (
    EMPTY,
    Alphabet,
    Presentation,
    WordError,
    format_word,
    parse_presentation,
    parse_word_tokens,
    presentation_to_json,
    validate_special,
)
from .rewriting import (
    DEFAULT_BUDGET,
    Budget,
    BudgetExhausted,
    RewritingError,
    equal_words,
    knuth_bendix,
    normalize,
    normalize_trace,
    orient_system,
)
from .special import (
    SpecialAnalysisError,
    compute_delta,
    right_units_presentation,
    torsion_flag,
    units_presentation,
)
from .cayley import (
    CayleyError,
    cayley_ball,
    cayley_complex_chain,
    check_rooted_tree,
    check_unique_entrance,
    condensation_matches_hasse,
    scc_condense,
)
from .homology import (
    HomologyError,
    chain_homology,
    exactness_check,
)
from .constructions import (
    AmalgamSpec,
    ConstructionError,
    IncompleteSystemError,
    OttoPrideSpec,
    amalgam_context,
    amalgam_derivation,
    amalgam_presentation,
    bass_serre_ball_amalgam,
    bass_serre_ball_op,
    bass_serre_forest_bi,
    check_beta_section,
    check_derivation_wellformed,
    free_product,
    hnn_presentation,
    op_context,
    op_derivation,
    op_forest_derivation,
    otto_pride_presentation,
)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3

INPUT_ERRORS = (WordError, RewritingError, CayleyError, HomologyError,
                SpecialAnalysisError, ConstructionError, OSError,
                json.JSONDecodeError, KeyError, ValueError)


@dataclass
class RunConfig:
    command: str
    args: argparse.Namespace


def _diag(kind, **details):
    sys.stderr.write(json.dumps({"kind": kind, **details}, sort_keys=True)
                     + "\n")


def _emit(args, text):
    if getattr(args, "out", None):
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, payload):
    _emit(args, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _load_presentation(args):
    with open(args.presentation) as f:
        text = f.read()
    return parse_presentation(text, name=args.presentation, order=args.order)


def _word(s):
    return parse_word_tokens(s.split())


def _solver_for(p, budget_limit):
    result = knuth_bendix(orient_system(p), budget_limit)
    if not result.completed:
        raise IncompleteSystemError("completion did not finish within budget")
    return lambda w: normalize(result.system, w), result.system


def _default_margin(p):
    return max((max(len(l), len(r)) for l, r in p.relations), default=0)


def _unknowns(*verdicts):
    out = []
    for where, v in verdicts:
        if v is not None and v.value == "unknown":
            out.append({"where": where, "verdict": "unknown",
                        "budget_spent": v.budget_spent})
    return out


# ---------------------------------------------------------------------------
# construction spec files


def _pres_from_spec(data):
    letters = tuple(data["letters"])
    alphabet = Alphabet(letters)
    relations = []
    for r in data.get("relations", []):
        lhs = r["lhs"] if isinstance(r["lhs"], list) else r["lhs"].split()
        rhs = r["rhs"] if isinstance(r["rhs"], list) else r["rhs"].split()
        relations.append((parse_word_tokens(lhs, alphabet),
                          parse_word_tokens(rhs, alphabet)))
    return Presentation(alphabet, tuple(relations))


def _load_spec(path):
    with open(path) as f:
        return json.load(f)


def _amalgam_spec(data):
    return AmalgamSpec(
        _pres_from_spec(data["m1"]), _pres_from_spec(data["m2"]),
        _pres_from_spec(data["w"]),
        {x: _word(img) for x, img in data["f1"].items()},
        {x: _word(img) for x, img in data["f2"].items()})


def _op_spec(data):
    basis = data.get("free_basis")
    return OttoPrideSpec(
        _pres_from_spec(data["m"]),
        tuple(_word(g) for g in data["a_gens"]),
        {_word(g): _word(img) for g, img in data["phi"].items()},
        free_basis=tuple(_word(c) for c in basis) if basis else None,
        stable_letter=data.get("stable_letter", "t"))


# ---------------------------------------------------------------------------
# subcommands


def cmd_parse(args):
    p = _load_presentation(args)
    payload = {"presentation": presentation_to_json(p)}
    try:
        sp = validate_special(p)
        payload["special"] = True
        payload["relators"] = [format_word(r) for r in sp.relators]
    except WordError:
        payload["special"] = False
    _emit_json(args, payload)
    return EXIT_OK


def cmd_complete(args):
    p = _load_presentation(args)
    result = knuth_bendix(orient_system(p), args.budget)
    payload = {
        "completed": result.completed,
        "steps": result.steps,
        "rules": [{"lhs": format_word(r.lhs), "rhs": format_word(r.rhs)}
                  for r in result.system.rules],
    }
    _emit_json(args, payload)
    if not result.completed:
        _diag("budget_exhausted", steps=result.steps)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_rewrite(args):
    with open(args.system) as f:
        system = orient_system(parse_presentation(f.read()))
    word = _word(args.word)
    system.alphabet.check_word(word)
    try:
        normalize(system, word, Budget(args.budget))
    except BudgetExhausted as e:
        _emit_json(args, {"input": format_word(word),
                          "partial": format_word(e.partial)})
        _diag("budget_exhausted")
        return EXIT_BUDGET
    trace = normalize_trace(system, word)
    _emit_json(args, {
        "input": format_word(word),
        "normal_form": format_word(trace[-1]),
        "trace": [format_word(w) for w in trace],
    })
    return EXIT_OK


def cmd_equal(args):
    p = _load_presentation(args)
    u, v = _word(args.u), _word(args.v)
    p.alphabet.check_word(u)
    p.alphabet.check_word(v)
    result = knuth_bendix(orient_system(p), args.budget)
    ctx = result.system if result.completed else p
    verdict = equal_words(ctx, u, v, args.budget)
    payload = verdict.to_json()
    payload["unknowns"] = _unknowns(("equal", verdict))
    _emit_json(args, payload)
    if verdict.proven:
        return EXIT_OK
    if verdict.refuted:
        return EXIT_VERIFY
    return EXIT_BUDGET


def cmd_analyze_special(args):
    sp = validate_special(_load_presentation(args))
    ua = compute_delta(sp, budget_limit=args.budget)
    units = units_presentation(ua)
    right, zmap = right_units_presentation(ua)
    payload = {
        "delta": [format_word(d) for d in ua.delta],
        "partition": [[format_word(d) for d in cls] for cls in ua.partition],
        "units": presentation_to_json(units),
        "units_completed": ua.units_completed,
        "right_units": {
            "presentation": presentation_to_json(right),
            "zmap": {z: format_word(w) for z, w in sorted(zmap.items())},
        },
        "I": [format_word(w) for w in ua.I],
        "I0": [format_word(w) for w in ua.I0],
        "torsion": torsion_flag(sp, ua) if len(sp.relators) == 1 else None,
        "certified": ua.certified,
        "diagnostics": ua.diagnostics,
    }
    if args.emit != "all":
        keep = {"units": ["units", "units_completed"],
                "right-units": ["right_units"],
                "delta": ["delta", "partition"]}[args.emit]
        payload = {k: payload[k] for k in keep + ["diagnostics", "certified"]}
    _emit_json(args, payload)
    return EXIT_OK


def _ball_from_args(args, p):
    solver, _ = _solver_for(p, args.budget)
    margin = args.margin if args.margin is not None else _default_margin(p)
    return cayley_ball(solver, p.alphabet, args.radius, margin)


def cmd_cayley(args):
    p = _load_presentation(args)
    g = _ball_from_args(args, p)
    if args.format == "dot":
        _emit(args, g.to_dot())
    else:
        _emit_json(args, g.to_json())
    return EXIT_OK


def cmd_condense(args):
    p = _load_presentation(args)
    g = _ball_from_args(args, p)
    rep = scc_condense(g)
    check_rooted_tree(rep)
    _emit_json(args, rep.to_json())
    return EXIT_OK


def cmd_check_tree(args):
    p = _load_presentation(args)
    g = _ball_from_args(args, p)
    rep = scc_condense(g)
    verdict = check_rooted_tree(rep)
    ua = None
    try:
        sp = validate_special(p)
        if len(sp.relators) == 1:
            ua = compute_delta(sp, budget_limit=args.budget)
            if not ua.certified:
                ua = None
    except WordError:
        pass
    violations = check_unique_entrance(g, rep, ua)
    payload = {
        "is_tree": {"verdict": verdict.value,
                    "edges": [list(e) for e in verdict.witness or []]},
        "entrance_violations": violations,
        "unknowns": _unknowns(("check-tree", verdict)),
    }
    if ua is not None:
        payload["condensation_matches_hasse"] = \
            condensation_matches_hasse(ua, g, rep)
    _emit_json(args, payload)
    if verdict.refuted or violations:
        return EXIT_VERIFY
    return EXIT_OK


def cmd_construct(args):
    data = _load_spec(args.spec)
    kind = data.get("kind", args.kind)
    if kind != args.kind:
        raise ConstructionError(
            f"spec file kind {kind!r} does not match --kind {args.kind!r}")
    if kind == "free-product":
        p = free_product(_pres_from_spec(data["m1"]),
                         _pres_from_spec(data["m2"]))
        diagnostics = []
    elif kind == "amalgam":
        spec = _amalgam_spec(data)
        p = amalgam_presentation(spec, args.budget)
        diagnostics = spec.diagnostics
    elif kind == "otto-pride":
        p = otto_pride_presentation(_op_spec(data))
        diagnostics = []
    elif kind == "hnn":
        p = hnn_presentation(
            _pres_from_spec(data["m"]),
            tuple(_word(g) for g in data["a_gens"]),
            tuple(_word(g) for g in data["b_gens"]),
            {_word(g): _word(img) for g, img in data["phi"].items()},
            stable_letter=data.get("stable_letter", "t"))
        diagnostics = []
    else:
        raise ConstructionError(f"unknown construction kind {kind!r}")
    _emit_json(args, {"kind": kind,
                      "presentation": presentation_to_json(p),
                      "diagnostics": diagnostics})
    return EXIT_OK


def _bass_serre_context(args):
    data = _load_spec(args.spec)
    if args.kind == "amalgam":
        return amalgam_context(_amalgam_spec(data), args.budget)
    if args.kind == "otto-pride":
        return op_context(_op_spec(data), args.budget)
    raise ConstructionError(f"unknown bass-serre kind {args.kind!r}")


def _bass_serre_graph(args, ctx):
    kwargs = {"margin": args.margin} if args.margin is not None else {}
    if args.forest:
        forest_kind = {"amalgam": "amalgam",
                       "otto-pride": "otto_pride"}[args.kind]
        return bass_serre_forest_bi(ctx, forest_kind, args.radius,
                                    args.budget, **kwargs)
    if args.kind == "amalgam":
        return bass_serre_ball_amalgam(ctx, args.radius, args.budget,
                                       **kwargs)
    return bass_serre_ball_op(ctx, args.radius, args.budget, **kwargs)


def cmd_bass_serre(args):
    ctx = _bass_serre_context(args)
    g = _bass_serre_graph(args, ctx)
    if args.format == "dot":
        _emit(args, g.to_dot())
    elif args.format == "matrix":
        _emit(args, g.boundary_matrix().to_triplets())
    else:
        payload = g.to_json()
        payload["forest_by_search"] = g.forest_by_search()
        payload["forest_by_rank"] = g.forest_by_rank()
        _emit_json(args, payload)
    return EXIT_OK


def cmd_chain(args):
    sp = validate_special(_load_presentation(args))
    g = _ball_from_args(args, sp.base)
    export = cayley_complex_chain(sp, g)
    _emit_json(args, {
        "boundary1": export.boundary1.to_triplets(),
        "boundary2": export.boundary2.to_triplets(),
        "augmentation": export.augmentation.to_triplets(),
        "cell_base_vertices": list(export.cell_base_vertices),
        "skipped": export.skipped,
        "composite_zero": (export.boundary1 @ export.boundary2).is_zero(),
    })
    return EXIT_OK


def cmd_homology(args):
    sp = validate_special(_load_presentation(args))
    g = _ball_from_args(args, sp.base)
    export = cayley_complex_chain(sp, g)
    homology = chain_homology([export.boundary1, export.boundary2])
    exact = exactness_check([export.boundary2, export.boundary1],
                            augmentation=export.augmentation)
    _emit_json(args, {"homology": homology, "exactness": exact})
    if exact["total_defect"] != 0:
        return EXIT_VERIFY
    return EXIT_OK


def cmd_verify_derivations(args):
    import random
    ctx = _bass_serre_context(args)
    if args.kind == "amalgam":
        g = bass_serre_ball_amalgam(ctx, args.radius, args.budget)
        d = amalgam_derivation(ctx)
        beta_kind = "amalgam"
    elif args.forest:
        g = bass_serre_forest_bi(ctx, "otto_pride", args.radius,
                                 args.budget, margin=args.margin)
        d = op_forest_derivation(ctx, g._edge_ball)
        beta_kind = "otto_pride_forest"
    else:
        g = bass_serre_ball_op(ctx, args.radius, args.budget)
        d = op_derivation(ctx)
        beta_kind = "otto_pride"
    sample_radius = max(1, args.radius - 1)
    ball = cayley_ball(ctx.solver, ctx.presentation.alphabet,
                       sample_radius, 0).vertices
    rng = random.Random(args.seed)
    samples = [(rng.choice(ball), rng.choice(ball))
               for _ in range(args.samples)]
    deriv = check_derivation_wellformed(
        d, list(ctx.presentation.relations), samples)
    beta = check_beta_section(ctx, g, d, beta_kind)
    _emit_json(args, {"derivation": deriv, "beta": beta,
                      "seed": args.seed, "samples": args.samples})
    if not (deriv["passed"] and beta["passed"]):
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    parser = argparse.ArgumentParser(
        prog="monoidkit",
        description="combinatorial structure of finitely presented monoids")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, **flags):
        p = sub.add_parser(name)
        p.set_defaults(handler=handler)
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("json", "dot", "text", "matrix"),
                       default="json")
        p.add_argument("--out")
        p.add_argument("--order", type=lambda s: s.split(","), default=None)
        if flags.get("presentation"):
            p.add_argument("--presentation", required=True)
        if flags.get("radius"):
            p.add_argument("--radius", type=int, required=True)
            p.add_argument("--margin", type=int, default=None)
        if flags.get("spec"):
            p.add_argument("--spec", required=True)
            p.add_argument("--kind", required=True,
                           choices=("free-product", "amalgam", "otto-pride",
                                    "hnn"))
        return p

    add("parse", cmd_parse, presentation=True)
    add("complete", cmd_complete, presentation=True)
    p = add("rewrite", cmd_rewrite)
    p.add_argument("--system", required=True)
    p.add_argument("--word", required=True)
    p = add("equal", cmd_equal, presentation=True)
    p.add_argument("--u", required=True)
    p.add_argument("--v", required=True)
    p = add("analyze-special", cmd_analyze_special, presentation=True)
    p.add_argument("--emit", choices=("units", "right-units", "delta", "all"),
                   default="all")
    add("cayley", cmd_cayley, presentation=True, radius=True)
    add("condense", cmd_condense, presentation=True, radius=True)
    add("check-tree", cmd_check_tree, presentation=True, radius=True)
    add("construct", cmd_construct, spec=True)
    p = add("bass-serre", cmd_bass_serre, spec=True, radius=True)
    p.add_argument("--forest", action="store_true")
    add("chain", cmd_chain, presentation=True, radius=True)
    add("homology", cmd_homology, presentation=True, radius=True)
    p = add("verify-derivations", cmd_verify_derivations, spec=True,
            radius=True)
    p.add_argument("--forest", action="store_true")
    p.add_argument("--samples", type=int, default=200)
    return parser


def run(config: RunConfig) -> int:
    try:
        return config.args.handler(config.args)
    except (BudgetExhausted, IncompleteSystemError) as e:
        _diag("budget_exhausted", detail=str(e))
        return EXIT_BUDGET
    except INPUT_ERRORS as e:
        _diag("input_error", error=type(e).__name__, detail=str(e))
        return EXIT_INPUT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(RunConfig(args.command, args))


if __name__ == "__main__":
    sys.exit(main())
