"""Independent searches used by several test modules."""

from __future__ import annotations

import numpy as np

from endwalk.arrangement import (TreeArrangement, arrangement_to_saw, contract_arrangement,
                                 enumerate_star_arrangements, node_part_graph,
                                 patch_configuration, project_arrangement,
                                 saw_to_complete_arrangement, support, template_configuration)
from endwalk.errors import MalformedArrangement, PreconditionFailed
from endwalk.graph_core import iter_saws


def same_arrangement(A, B) -> bool:
    return A.shapes == B.shapes and A.configs == B.configs


def _star_options(patch, a, subtree, allowed):
    part = node_part_graph(patch, frozenset((a,)))
    out = []
    for arr in enumerate_star_arrangements(part):
        if not set(arr.shape.vertices) <= allowed:
            continue
        ok = True
        for (u, b), cfg in arr.configs:
            if b in subtree:
                ok = not cfg.is_boring
            else:
                ok = cfg.is_boring and cfg.x == (b, u)
            if not ok:
                break
        if ok:
            out.append(arr)
    return out


def complete_arrangements_on(patch, w, subtree) -> list[TreeArrangement]:
    """Every complete arrangement on ``subtree`` (single-instance nodes) whose
    contraction is ``w``, found by joining all compatible stars."""
    allowed = set(w.vertices)
    nodes = sorted(subtree)
    options = {a: _star_options(patch, a, subtree, allowed) for a in nodes}
    found = []

    def rec(i, shapes, configs):
        if i == len(nodes):
            A = TreeArrangement(patch, dict(shapes), dict(configs))
            try:
                if A.is_complete() and arrangement_to_saw(A) == w:
                    found.append(A)
            except (MalformedArrangement, PreconditionFailed):
                pass
            return
        a = nodes[i]
        for arr in options[a]:
            added = []
            clash = False
            for (u, b), cfg in arr.configs:
                key = frozenset((u, b))
                prev = configs.get(key)
                if prev is None:
                    configs[key] = cfg
                    added.append(key)
                elif prev != cfg:
                    clash = True
                    break
            if not clash:
                shapes[frozenset((a,))] = arr.shape
                rec(i + 1, shapes, configs)
                del shapes[frozenset((a,))]
            for key in added:
                del configs[key]

    rec(0, {}, {})
    return found


def candidate_subtrees(patch, w):
    """The support of w and every one-node extension of it."""
    base = frozenset(support(patch, w))
    out = [base]
    for a in sorted(base):
        for b in patch.inst_nbr[a]:
            if b >= 0 and b not in base:
                out.append(base | {b})
    return out


def inverse_cases(patch, max_len, origins):
    """Yield (kind, ok) for contract/project round trips built from SAWs."""
    for o in origins:
        for w in iter_saws(patch.graph, o, max_len):
            if w.length == 0:
                continue
            A = saw_to_complete_arrangement(w, patch)
            edges = A.interior_edges()
            for f in edges:
                B = contract_arrangement(A, f)
                yield "project_contract", same_arrangement(project_arrangement(B, f), A)
                yield "contract_project", same_arrangement(
                    contract_arrangement(project_arrangement(B, f), f), B)
                for g in edges:
                    if g == f:
                        continue
                    C = contract_arrangement(B, g)
                    for h in (f, g):
                        yield "merged_star", same_arrangement(
                            contract_arrangement(project_arrangement(C, h), h), C)


def realize(patch, system, ci, min_depth=0):
    """A tree arc (a, b) of the patch carrying template configuration ci with
    a the entered instance, both ends materialised, a at depth >= min_depth."""
    c = system.configs[ci]
    t = patch.template
    for a in range(patch.instance_count):
        if patch.inst_depth[a] < min_depth:
            continue
        for b in patch.inst_nbr[a]:
            if b >= 0 and patch.arc_gluing(a, b) == (c.pair, c.x):
                return a, b
    raise LookupError(f"no realisation of {c}")


def completion_chain_matrix(patch, system, F, z, n, min_depth=1):
    """Sum over chains c_0 -> ... -> c_n of star arrangements on the patch,
    each pinned at the arc realising the previous configuration, with one
    marked non-boring sibling continuing the chain and every other non-boring
    sibling weighted by its F value."""
    size = system.size
    index = {c: i for i, c in enumerate(system.configs)}
    out = np.zeros((size, size))
    graphs = {}

    def part(a):
        if a not in graphs:
            graphs[a] = node_part_graph(patch, frozenset((a,)))
        return graphs[a]

    def walk(a, b, pc, steps, weight, row):
        for arr in enumerate_star_arrangements(part(a), pinned=((a, b), pc)):
            sibs = [(key, cfg) for key, cfg in arr.nonboring() if key != (a, b)]
            w_star = weight * z ** arr.weight
            tidx = [index[template_configuration(patch, cfg)] for _, cfg in sibs]
            for j, (key, cfg) in enumerate(sibs):
                others = np.prod([F[tidx[m]] for m in range(len(sibs)) if m != j]) if len(sibs) > 1 else 1.0
                wj = w_star * others
                if steps == 1:
                    out[row, tidx[j]] += wj
                else:
                    nb = key[1]
                    walk(nb, a, cfg, steps - 1, wj, row)

    for ci in range(size):
        a, b = realize(patch, system, ci, min_depth)
        pc = patch_configuration(patch, (a, b), system.configs[ci])
        walk(a, b, pc, n, 1.0, ci)
    return out
