"""Command-line front end: ``endwalk <command> TEMPLATE [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from endwalk.errors import EndwalkError, HorizonExceeded, ResourceLimit
from endwalk.graph_core import Walk

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_RESOURCE = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _clean(x):
    """Make a value JSON-safe with floats fixed at 12 significant digits."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}")
    return x


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True)


def _series_csv(columns: dict[str, list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(columns)
    w.writerow(["n"] + names)
    for i in range(max(len(v) for v in columns.values())):
        w.writerow([i + 1] + [columns[k][i] if i < len(columns[k]) else "" for k in names])
    return buf.getvalue()


def _template(args):
    from endwalk.template import resolve_template
    return resolve_template(args.template)


def _system(t):
    from endwalk.gensys import build_dependency_digraph, build_system, prune_unproductive
    from endwalk.template import require_valid
    require_valid(t)
    s = prune_unproductive(build_system(t))
    return s, build_dependency_digraph(s)


# -- commands -----------------------------------------------------------------

def cmd_validate(args):
    from endwalk.template import validate_template
    t = _template(args)
    problems = validate_template(t)
    out = {"template": t.name, "valid": not problems, "violations": problems, "k": t.k,
           "parts": sorted(t.parts), "gluings": len(t.gluing)}
    if not problems:
        out["symmetry_group_order"] = len(t.symmetry_group())
    return out, EXIT_OK if not problems else EXIT_FAILED


def cmd_configs(args):
    from endwalk.arrangement import config_to_dict, enumerate_configurations
    from endwalk.gensys import Canonicalizer
    t = _template(args)
    s, d = _system(t)
    canon = Canonicalizer(t)
    classes = sorted({canon(c) for g in range(len(t.gluing))
                      for c in enumerate_configurations(t.k, pair=g) if c.is_feasible})
    index = {c: i for i, c in enumerate(s.configs)}
    rows = []
    for c in classes:
        row = config_to_dict(c)
        i = index.get(c)
        row["index"] = i
        if i is not None:
            comp = d.component_of[i]
            row["class"] = d.classes[comp]
            if i in d.persistent:
                row["tags"] = row["tags"] + ["persistent"]
        rows.append(row)
    return {"template": t.name, "count": len(rows), "nonboring": s.size,
            "configurations": rows}, EXIT_OK


def cmd_system(args):
    from endwalk.gensys import system_to_dict
    s, d = _system(_template(args))
    return system_to_dict(s, d), EXIT_OK


def cmd_solve(args):
    from endwalk.solver import Solver
    t = _template(args)
    s, d = _system(t)
    rep = Solver(s, d).find_critical_point(tol=args.tol)
    out = {"template": t.name}
    out.update(rep.to_dict())
    return out, EXIT_OK


def cmd_series(args):
    from endwalk.solver import Solver
    t = _template(args)
    s, d = _system(t)
    sv = Solver(s, d)
    out = {"template": t.name, "N": args.n, "series": sv.series_coefficients(args.n)}
    if args.returns:
        out["sar_series"] = sv.series_returns(args.n)
    if args.format == "csv":
        cols = {"c": out["series"]}
        if args.returns:
            cols["sar"] = out["sar_series"]
        return _series_csv(cols), EXIT_OK
    return out, EXIT_OK


def cmd_oracle(args):
    from endwalk.oracle import growth_report, oracle_for_template
    t = _template(args)
    rep = oracle_for_template(t, args.n, jobs=args.jobs, cap=args.cap,
                              with_sup_p=not args.no_sup_p)
    if args.format == "csv":
        return _series_csv({"c": rep.c, "sar": rep.sar, "sap": rep.sap}), EXIT_OK
    out = {"template": t.name}
    out.update(rep.to_dict())
    out["growth"] = growth_report(rep, args.mu).to_dict()
    return out, EXIT_OK


def cmd_compare(args):
    from endwalk.oracle import oracle_for_template
    from endwalk.solver import Solver
    t = _template(args)
    s, d = _system(t)
    series = Solver(s, d).series_coefficients(args.n)
    brute = oracle_for_template(t, args.n, jobs=args.jobs, cap=args.cap, with_sup_p=False).c
    mism = [n for n, (a, b) in enumerate(zip(series, brute), start=1) if a != b]
    matched = args.n - len(mism)
    print(f"{matched}/{args.n} coefficients match", file=sys.stderr)
    return {"template": t.name, "N": args.n, "series": series, "oracle": brute,
            "mismatches": mism, "match": not mism}, EXIT_OK if not mism else EXIT_FAILED


def cmd_ballistic(args):
    from endwalk.oracle import displacement_stats
    from endwalk.template import build_patch_for_horizon
    t = _template(args)
    if args.n_min < 1 or args.n_max < args.n_min:
        raise ValueError("need 1 <= --n-min <= --n-max")
    patch = build_patch_for_horizon(t, args.n_max, args.cap)
    stats = [displacement_stats(patch, n, args.threshold).to_dict()
             for n in range(args.n_min, args.n_max + 1)]
    return {"template": t.name, "threshold": args.threshold, "stats": stats}, EXIT_OK


def parse_walk(text: str) -> list[int]:
    try:
        verts = [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise ValueError(f"walk must be a list of vertex ids, got {text!r}") from None
    if len(verts) < 2:
        raise ValueError("a walk needs at least two vertices")
    return verts


def cmd_explain(args):
    from endwalk.arrangement import arrangement_to_dict, saw_to_complete_arrangement
    from endwalk.template import build_patch_for_horizon
    t = _template(args)
    verts = parse_walk(args.walk)
    patch = build_patch_for_horizon(t, len(verts), args.cap)
    if verts[0] != patch.origin:
        raise ValueError(f"walks start at the origin vertex {patch.origin}")
    arcs = []
    for u, v in zip(verts, verts[1:]):
        if not (0 <= u < patch.graph.n and 0 <= v < patch.graph.n):
            raise ValueError(f"vertex outside the patch in step {u}->{v}")
        step = [a for a in patch.graph.out_arcs(u) if patch.graph.head[a] == v]
        if not step:
            raise ValueError(f"no edge between {u} and {v}")
        arcs.append(step[0])
    A = saw_to_complete_arrangement(Walk(tuple(verts), tuple(arcs)), patch)
    out = {"template": t.name, "walk": verts}
    out.update(arrangement_to_dict(A))
    return out, EXIT_OK


COMMANDS = {
    "validate": (cmd_validate, "check a template and list violations"),
    "configs": (cmd_configs, "list configuration classes with tags"),
    "system": (cmd_system, "dump the polynomial system"),
    "solve": (cmd_solve, "critical point, connective constant and spectral report"),
    "series": (cmd_series, "exact SAW counts from the polynomial system"),
    "oracle": (cmd_oracle, "brute-force counts on a patch"),
    "compare": (cmd_compare, "compare series against the oracle"),
    "ballistic": (cmd_ballistic, "end-to-end displacement statistics"),
    "explain": (cmd_explain, "complete arrangement of a SAW given by patch vertex ids"),
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="endwalk", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("template", help="template JSON path or bundled name")
        sp.add_argument("-o", "--output", help="write the result here instead of stdout")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes (ENDWALK_JOBS overrides)")
        sp.add_argument("--cap", type=int, default=200_000, help="patch instance cap")
        if name in ("series", "oracle"):
            sp.add_argument("--format", choices=("json", "csv"), default="json")
        if name in ("series", "oracle", "compare"):
            sp.add_argument("--n", type=int, default=12, help="largest walk length")
        if name == "series":
            sp.add_argument("--returns", action="store_true", help="also print SAR counts")
        if name == "oracle":
            sp.add_argument("--no-sup-p", action="store_true",
                            help="skip the polygon maximum over vertex classes")
            sp.add_argument("--mu", type=float, help="connective constant for the gap flags")
        if name == "solve":
            sp.add_argument("--tol", type=float, default=1e-14, help="bisection tolerance")
        if name == "ballistic":
            sp.add_argument("--n-min", type=int, default=4)
            sp.add_argument("--n-max", type=int, default=10)
            sp.add_argument("--threshold", type=float, default=0.2)
        if name == "explain":
            sp.add_argument("walk", help="comma-separated patch vertex ids starting at the origin")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "n", 1) is not None and getattr(args, "n", 1) < 1:
        parser.error("--n must be positive")
    handler = COMMANDS[args.command][0]
    try:
        result, code = handler(args)
    except (ResourceLimit, HorizonExceeded) as exc:
        print(f"endwalk: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (EndwalkError, ValueError, OSError) as exc:
        print(f"endwalk: {exc}", file=sys.stderr)
        return EXIT_FAILED
    text = result if isinstance(result, str) else dumps(result) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
