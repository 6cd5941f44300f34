"""Command-line front end.

Subcommands follow the analysis workflow: ``derive`` the CCCGs, estimate
each group's ``beta``, ``solve`` the modified beta factor model, evaluate a
fault ``tree``, and ``diff`` two design variants. ``tables`` dumps the
embedded scoring tables for audit.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 numeric or
solver error.
"""

from __future__ import annotations

import argparse
import sys
from collections import defaultdict
from dataclasses import replace
from pathlib import Path

from .bfm import BfmError, solve_all
from .domain import Domain
from .faulttree import (FaultTreeError, TooLarge, eval_exact, eval_rare_event, expand_events,
                        format_cut_sets)
from .model import ModelError, Normalization, Severity, SystemModel, validate_model
from .modelfile import ModelDocument, ModelFileError, load_model, parse_weights
from .report import (Table, beta_rows, beta_table, failure_table, scoring_tables_text, sci)
from .simulate import McConfig, simulate_system

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3, 4

# validation codes that do not block structural commands such as ``derive``
BETA_CODES = {"MISSING_BETA", "MISSING_CELL", "BETA_OUT_OF_RANGE", "SHEET_DOMAIN_MISMATCH"}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load(path: str, args) -> ModelDocument:
    try:
        doc = load_model(path, strict=not getattr(args, "lenient", False))
    except ModelFileError as exc:
        raise CliError(f"parse error: {exc}", EXIT_PARSE) from None
    except ModelError as exc:
        raise CliError(f"invalid model {path}: {exc}", EXIT_INVALID) from None
    for w in doc.warnings:
        _err(f"warning: {w}")
    normalize = getattr(args, "normalize", None)
    if normalize:
        doc.model = _apply_normalize(doc.model, normalize)
    return doc


def _apply_normalize(model: SystemModel, spec: str) -> SystemModel:
    if spec in ("proportional", "none"):
        options = replace(model.options, normalization=Normalization(spec))
    elif spec.startswith("weights:"):
        path = spec.split(":", 1)[1]
        try:
            weights = parse_weights(Path(path).read_text(), source=path)
        except OSError as exc:
            raise CliError(f"cannot read weights file: {exc}", EXIT_PARSE) from None
        except ModelFileError as exc:
            raise CliError(f"parse error: {exc}", EXIT_PARSE) from None
        options = replace(model.options, normalization=Normalization.WEIGHTS, weights=weights)
    else:
        raise CliError(f"--normalize expects proportional, none or weights:<file>, got {spec!r}",
                       EXIT_PARSE)
    return replace(model, options=options)


def _validate(doc: ModelDocument, ignore: set[str] = frozenset()) -> None:
    diags = validate_model(doc.model)
    blocking = [d for d in diags if d.severity is Severity.ERROR and d.code not in ignore]
    for d in diags:
        if d.code not in ignore:
            _err(str(d))
    if blocking:
        raise CliError(f"{doc.source}: {len(blocking)} validation error(s)", EXIT_INVALID)


def _solve(model: SystemModel):
    try:
        return solve_all(model)
    except BfmError as exc:
        raise CliError(f"solver error: {exc}", EXIT_NUMERIC) from None


def cmd_derive(args) -> int:
    doc = _load(args.model, args)
    _validate(doc, ignore=BETA_CODES)
    model = doc.model
    if not model.cccgs:
        print("no CCCGs (no coupling attribute value shared by two identical components)")
    for g in model.cccgs:
        marker = "derived" if g.origin == "derived" else "user-specified"
        domains = ",".join(d.value for d in Domain if d in g.domains) or "-"
        print(f"CCCG {g.id} [{marker}] label={g.label} size={len(g.members)} domains={domains}")
        print(f"  members: {' '.join(g.sorted_members)}")
        shared = ", ".join(str(a) for a in sorted(g.shared_attributes)) or "-"
        print(f"  shared:  {shared}")
    return EXIT_OK


def cmd_beta(args) -> int:
    doc = _load(args.model, args)
    _validate(doc)
    try:
        breakdowns = solve_all(doc.model)
    except BfmError:
        breakdowns = None
    print(beta_table(doc.model, breakdowns).render(args.format), end="")
    return EXIT_OK


def cmd_solve(args) -> int:
    doc = _load(args.model, args)
    _validate(doc)
    breakdowns = _solve(doc.model)
    table = failure_table(doc.model, breakdowns, per_component=args.per_component)
    print(table.render(args.format), end="")
    if args.format == "text":
        for b in breakdowns:
            for note in b.notes:
                _err(f"note: {b.component_id} ({b.domain.value}): {note}")
    return EXIT_OK


def cmd_tree(args) -> int:
    doc = _load(args.model, args)
    model = doc.model
    if model.tree is None:
        raise CliError(f"{doc.source}: model declares no [tree]", EXIT_INVALID)
    _validate(doc)
    breakdowns = _solve(model)
    mode = args.mode or model.options.evaluation
    try:
        events = expand_events(model, breakdowns)
        if mode == "exact":
            p = eval_exact(model.tree, events, backend=args.backend)
            print(f"exact,{p:.6e}")
        elif mode == "rare":
            result = eval_rare_event(model.tree, events, max_cut_sets=model.options.max_cut_sets)
            if result.exceeds_one:
                _err(f"warning: rare-event sum {result.probability:.4g} exceeds 1 "
                     "(reported value clamped)")
            print(f"rare,{result.reported:.6e},raw={result.probability:.6e},"
                  f"cut_sets={len(result.cut_sets)}")
            if args.cutsets:
                Path(args.cutsets).write_text(format_cut_sets(result.cut_sets))
        else:
            config = McConfig(
                seed=model.options.mc_seed if args.seed is None else args.seed,
                replications=model.options.mc_replications if args.reps is None else args.reps,
                confidence_level=model.options.mc_confidence,
                workers=args.workers,
                backend=args.backend,
            )
            print(simulate_system(model.tree, events, config).record())
    except TooLarge as exc:
        raise CliError(f"{exc}; rerun with --mode mc", EXIT_NUMERIC) from None
    except (FaultTreeError, ValueError) as exc:
        raise CliError(f"evaluation error: {exc}", EXIT_NUMERIC) from None
    return EXIT_OK


def _rel(a: float, b: float) -> float:
    if a == b:
        return 0.0
    if a == 0:
        return float("inf")
    return (b - a) / a


def _pct(r: float) -> str:
    return "inf" if r == float("inf") else f"{r * 100:+.2f}%"


def _largest_change(a, b) -> float:
    """Largest relative change over INDIVIDUAL, each CCF share and Total."""
    ca, cb = dict(a.contributions), dict(b.contributions)
    pairs = [(a.q_independent, b.q_independent), (a.q_total, b.q_total)]
    pairs += [(ca.get(g, 0.0), cb.get(g, 0.0)) for g in sorted(set(ca) | set(cb))]
    return max(abs(_rel(x, y)) for x, y in pairs)


def cmd_diff(args) -> int:
    doc_a, doc_b = _load(args.model_a, args), _load(args.model_b, args)
    _validate(doc_a)
    _validate(doc_b)
    ids_a, ids_b = set(doc_a.model.component_ids), set(doc_b.model.component_ids)
    if ids_a != ids_b:
        only = sorted(ids_a ^ ids_b)
        msg = f"component sets differ ({len(only)} not shared: {', '.join(only[:8])})"
        if not args.loose:
            raise CliError(f"{msg}; pass --loose to compare the intersection", EXIT_INVALID)
        _err(f"warning: {msg}; comparing the intersection")
    common = ids_a & ids_b

    betas_a = {(r.cccg_id, r.domain): r for r in beta_rows(doc_a.model)}
    betas_b = {(r.cccg_id, r.domain): r for r in beta_rows(doc_b.model)}
    bt = Table(["CCCG", "Domain", "Beta A", "Beta B", "Delta", "Rel"])
    for key in sorted(set(betas_a) | set(betas_b), key=lambda k: (k[0], k[1].value)):
        ra, rb = betas_a.get(key), betas_b.get(key)
        va = float(ra.beta) if ra else None
        vb = float(rb.beta) if rb else None
        if va is None or vb is None:
            bt.rows.append([key[0], key[1].value, "-" if va is None else f"{va:.5f}",
                            "-" if vb is None else f"{vb:.5f}", "-", "-"])
        else:
            bt.rows.append([key[0], key[1].value, f"{va:.5f}", f"{vb:.5f}", f"{vb - va:+.5f}",
                            _pct(_rel(va, vb))])

    sol_a = {(b.component_id, b.domain): b for b in _solve(doc_a.model)}
    sol_b = {(b.component_id, b.domain): b for b in _solve(doc_b.model)}
    class_of = {c.id: c.class_id for c in doc_a.model.components}
    grouped: dict[tuple, list[str]] = defaultdict(list)
    for key in sorted(set(sol_a) & set(sol_b), key=lambda k: (k[0], k[1].value)):
        if key[0] not in common:
            continue
        a, b = sol_a[key], sol_b[key]
        sig = (class_of[key[0]], key[1], a.q_independent, a.q_total, b.q_independent, b.q_total,
               _largest_change(a, b))
        grouped[sig].append(key[0])

    ft = Table(["Row", "Domain", "INDIVIDUAL A", "INDIVIDUAL B", "Total A", "Total B",
                "Delta Total", "Rel", "Max Rel", "Flag"])
    class_counts = defaultdict(int)
    for cid in common:
        class_counts[class_of[cid]] += 1
    changed = 0
    for sig, members in grouped.items():
        class_id, domain, ia, ta, ib, tb, worst = sig
        name = f"{class_id} (x{len(members)})" if len(members) == class_counts[class_id] \
            and len(members) > 1 else " ".join(members)
        rel = _rel(ta, tb)
        flag = "CHANGED" if worst > args.threshold else ""
        changed += bool(flag)
        ft.rows.append([name, domain.value, sci(ia), sci(ib), sci(ta), sci(tb),
                        f"{tb - ta:+.3E}", _pct(rel), _pct(worst), flag])

    if args.format == "csv":
        print(bt.to_csv(), end="")
        print()
        print(ft.to_csv(), end="")
    else:
        print("betas")
        print(bt.to_text())
        print("failure probabilities")
        print(ft.to_text(), end="")
        print(f"{changed} row(s) changed by more than {args.threshold:.1%}")
    return EXIT_OK


def cmd_tables(args) -> int:
    print(scoring_tables_text(), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccfbeta",
        description="Common cause failure quantification with the modified beta factor model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def model_cmd(name, help_text, func):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("model", help="model file")
        p.add_argument("--lenient", action="store_true",
                       help="warn about unknown keys instead of failing")
        p.add_argument("--normalize", help="proportional | none | weights:<file>")
        p.set_defaults(func=func)
        return p

    model_cmd("derive", "list the CCCGs derived from coupling attributes", cmd_derive)
    p = model_cmd("beta", "per-CCCG beta table", cmd_beta)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p = model_cmd("solve", "failure probability breakdown per component", cmd_solve)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--per-component", action="store_true",
                   help="do not collapse identical class members into one row")
    p = model_cmd("tree", "system failure probability of the fault tree", cmd_tree)
    p.add_argument("--mode", choices=("exact", "rare", "mc"))
    p.add_argument("--seed", type=lambda s: int(s, 0))
    p.add_argument("--reps", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--backend", choices=("compiled", "python"))
    p.add_argument("--cutsets", help="write minimal cut sets here (rare mode)")

    p = sub.add_parser("diff", help="what-if comparison of two models")
    p.add_argument("model_a")
    p.add_argument("model_b")
    p.add_argument("--loose", action="store_true", help="compare the shared components only")
    p.add_argument("--threshold", type=float, default=0.05,
                   help="relative Total change that flags a row (default 0.05)")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--normalize")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("tables", help="dump the embedded scoring tables")
    p.set_defaults(func=cmd_tables)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        _err(str(exc))
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
