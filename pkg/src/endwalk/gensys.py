"""The polynomial system of configuration generating functions.

For each non-boring configuration class c the polynomial P_c(z, y) sums, over
all star arrangements on the part where the walk enters, the weight of the
star times one variable per further non-boring configuration.  Classes are
canonicalised under the declared symmetry group.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import networkx as nx

from endwalk.arrangement import (
    Configuration,
    PartGraph,
    Port,
    enumerate_configurations,
    enumerate_star_arrangements,
    template_configuration,
)
from endwalk.errors import InvariantViolation
from endwalk.template import GraphTemplate, RootStar, require_valid, root_contract

# A polynomial maps (z_degree, ((var, power), ...)) to a positive integer.
Polynomial = dict


def config_image(template: GraphTemplate, elem, c: Configuration) -> Configuration:
    img = template.gluing_image(elem, c.pair)

    def lab(s):
        return 1 - s if img.swap else s

    return Configuration(img.pair, tuple(img.positions[v] for v in c.verts),
                         tuple(lab(s) for s in c.sides), lab(c.x), lab(c.y))


class Canonicalizer:
    """Smallest image of a configuration under the template's symmetry group."""

    def __init__(self, template: GraphTemplate):
        self.template = template
        self.group = template.symmetry_group()
        self._cache: dict[Configuration, Configuration] = {}

    def __call__(self, c: Configuration) -> Configuration:
        hit = self._cache.get(c)
        if hit is None:
            hit = min(config_image(self.template, e, c) for e in self.group)
            self._cache[c] = hit
        return hit


def part_graph(template: GraphTemplate, part_id: str) -> PartGraph:
    """Part graph of one part type with local vertex ids; ports are keyed by
    port index and carry their gluing pair and side."""
    p = template.parts[part_id]
    ports = {}
    for j in range(len(p.ports)):
        g, s = template.port_gluing[(part_id, j)]
        ports[j] = Port(template.adhesion(g, s), s, 1 - s, g)
    edges = [(i, u, v) for i, (u, v) in enumerate(p.edges)]
    return PartGraph(range(p.n), edges, ports)


def to_local(port: Port, c: Configuration) -> Configuration:
    return Configuration(c.pair, tuple(port.adhesion[v] for v in c.verts), c.sides, c.x, c.y)


def to_positions(port: Port, c: Configuration) -> Configuration:
    return Configuration(c.pair, tuple(port.adhesion.index(v) for v in c.verts), c.sides, c.x, c.y)


def _add(poly: Polynomial, zdeg: int, factors: Iterable[int], coeff: int = 1) -> None:
    exps = tuple(sorted(Counter(factors).items()))
    key = (zdeg, exps)
    poly[key] = poly.get(key, 0) + coeff


@dataclass
class PolynomialSystem:
    template: GraphTemplate
    configs: list[Configuration]
    polys: list[Polynomial]
    root_saw: Polynomial = field(default_factory=dict)
    root_sar: Polynomial = field(default_factory=dict)
    root_star: RootStar | None = None
    pruned: tuple[Configuration, ...] = ()

    def __post_init__(self):
        self.index = {c: i for i, c in enumerate(self.configs)}

    @property
    def size(self) -> int:
        return len(self.configs)

    def variables(self, poly: Polynomial) -> set[int]:
        return {v for (_, exps) in poly for v, _ in exps}


def nonboring_classes(template: GraphTemplate, canon: Canonicalizer) -> list[Configuration]:
    found = set()
    for g in range(len(template.gluing)):
        for c in enumerate_configurations(template.k, pair=g):
            if not c.is_boring and c.is_feasible:
                found.add(canon(c))
    return sorted(found)


def configuration_polynomial(template: GraphTemplate, c: Configuration, canon: Canonicalizer,
                             index: Mapping[Configuration, int],
                             graphs: Mapping[str, PartGraph] | None = None) -> Polynomial:
    """P_c: star arrangements on the entered part with C(x) = c pinned."""
    pair = template.gluing[c.pair]
    part_id, port_idx = pair.side(c.x)
    graph = graphs[part_id] if graphs else part_graph(template, part_id)
    pin = to_local(graph.ports[port_idx], c)
    poly: Polynomial = {}
    for arr in enumerate_star_arrangements(graph, pinned=(port_idx, pin)):
        factors = []
        for key, cfg in arr.nonboring(exclude=port_idx):
            tc = canon(to_positions(graph.ports[key], cfg))
            if tc not in index:
                raise InvariantViolation(f"configuration {tc} is missing from the index")
            factors.append(index[tc])
        _add(poly, arr.weight, factors)
    return poly


def root_part_graph(root: RootStar) -> PartGraph:
    ports = {b.arc: Port(b.adhesion, b.arc, (b.arc[1], b.arc[0]), frozenset(b.arc))
             for b in root.boundary}
    return PartGraph(root.vertices, root.edges, ports)


def root_polynomials(root: RootStar, canon: Canonicalizer,
                     index: Mapping[Configuration, int]) -> tuple[Polynomial, Polynomial]:
    """Root polynomials for all SAWs from o and for returns to N(o)."""
    graph = root_part_graph(root)
    patch = root.patch
    neighbours = set(patch.graph.neighbours(root.origin))

    def collect(arrangements):
        poly: Polynomial = {}
        for arr in arrangements:
            factors = []
            for _, cfg in arr.nonboring():
                tc = canon(template_configuration(patch, cfg))
                if tc not in index:
                    raise InvariantViolation(f"root configuration {tc} is missing from the index")
                factors.append(index[tc])
            _add(poly, arr.weight, factors)
        return poly

    saw = collect(enumerate_star_arrangements(graph, start=root.origin, source=True))
    sar = collect(enumerate_star_arrangements(graph, start=root.origin, source=True,
                                              target=True, end_in=neighbours))
    return saw, sar


def build_system(template: GraphTemplate, root: RootStar | None = None,
                 with_root: bool = True) -> PolynomialSystem:
    """Unpruned system over every non-boring class, plus root polynomials."""
    require_valid(template)
    canon = Canonicalizer(template)
    configs = nonboring_classes(template, canon)
    index = {c: i for i, c in enumerate(configs)}
    graphs = {pid: part_graph(template, pid) for pid in template.parts}
    polys = [configuration_polynomial(template, c, canon, index, graphs) for c in configs]
    system = PolynomialSystem(template, configs, polys)
    if with_root:
        root = root or root_contract(template)
        system.root_star = root
        system.root_saw, system.root_sar = root_polynomials(root, canon, index)
    return system


def _restrict(poly: Polynomial, keep: Mapping[int, int]) -> Polynomial:
    out: Polynomial = {}
    for (zdeg, exps), coeff in poly.items():
        if all(v in keep for v, _ in exps):
            key = (zdeg, tuple((keep[v], p) for v, p in exps))
            out[key] = out.get(key, 0) + coeff
    return out


def prune_unproductive(system: PolynomialSystem) -> PolynomialSystem:
    """Drop classes without any completion, deleting monomials that use them."""
    productive: set[int] = set()
    changed = True
    while changed:
        changed = False
        for i, poly in enumerate(system.polys):
            if i in productive:
                continue
            if any(all(v in productive for v, _ in exps) for (_, exps) in poly):
                productive.add(i)
                changed = True
    kept = sorted(productive)
    remap = {old: new for new, old in enumerate(kept)}
    out = PolynomialSystem(
        system.template,
        [system.configs[i] for i in kept],
        [_restrict(system.polys[i], remap) for i in kept],
        _restrict(system.root_saw, remap),
        _restrict(system.root_sar, remap),
        system.root_star,
        system.pruned + tuple(system.configs[i] for i in range(system.size) if i not in productive),
    )
    return out


@dataclass
class DependencyDigraph:
    graph: nx.DiGraph
    components: list[tuple[int, ...]]
    classes: list[str]
    component_of: dict[int, int]
    order: list[int]
    persistent: frozenset
    simple: frozenset

    @property
    def persistent_components(self) -> list[int]:
        return [i for i, cls in enumerate(self.classes) if cls == "I_persistent"]

    @property
    def persistent_single_component(self) -> bool:
        return len(self.persistent_components) == 1


def build_dependency_digraph(system: PolynomialSystem) -> DependencyDigraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(system.size))
    for c, poly in enumerate(system.polys):
        for v in system.variables(poly):
            g.add_edge(c, v)
    kinds = [c.kind for c in system.configs]
    for u, v in g.edges:
        if kinds[u] == "U" and kinds[v] == "I":
            raise InvariantViolation(
                f"dependency arc from U-configuration {system.configs[u]} to I-configuration {system.configs[v]}")
    comps = sorted((tuple(sorted(c)) for c in nx.strongly_connected_components(g)), key=lambda c: c[0])
    component_of = {c: i for i, comp in enumerate(comps) for c in comp}
    simple = frozenset(i for i, c in enumerate(system.configs) if c.is_simple)
    forward = set(simple)
    backward = set(simple)
    for s in simple:
        forward |= nx.descendants(g, s)
        backward |= nx.ancestors(g, s)
    persistent = frozenset(i for i in forward & backward if kinds[i] == "I")
    classes = []
    for comp in comps:
        members = {kinds[i] for i in comp}
        if len(members) > 1:
            raise InvariantViolation(f"strong component {comp} mixes I- and U-configurations")
        if members == {"U"}:
            classes.append("U")
        elif all(i in persistent for i in comp):
            classes.append("I_persistent")
        elif any(i in persistent for i in comp):
            raise InvariantViolation(f"strong component {comp} mixes persistent and transient classes")
        else:
            classes.append("I_transient")
    cond = nx.condensation(g, scc=[set(c) for c in comps])
    # condensation numbers components in the order given; reverse topological
    # order lets the solver finish every dependency before its users
    order = list(reversed(list(nx.lexicographical_topological_sort(cond))))
    return DependencyDigraph(g, comps, classes, component_of, order, persistent, simple)


def derivative(poly: Polynomial, var: int) -> Polynomial:
    out: Polynomial = {}
    for (zdeg, exps), coeff in poly.items():
        for j, (v, p) in enumerate(exps):
            if v == var:
                rest = exps[:j] + (((v, p - 1),) if p > 1 else ()) + exps[j + 1:]
                key = (zdeg, rest)
                out[key] = out.get(key, 0) + coeff * p
    return out


def jacobian_symbolic(system: PolynomialSystem, rows: Iterable[int] | None = None,
                      cols: Iterable[int] | None = None) -> dict[tuple[int, int], Polynomial]:
    """Nonzero partial derivatives dP_c/dy_c'.  Entries between two
    I-configurations must only involve U-configuration variables."""
    rows = range(system.size) if rows is None else list(rows)
    cols = None if cols is None else set(cols)
    kinds = [c.kind for c in system.configs]
    out = {}
    for c in rows:
        for v in sorted(system.variables(system.polys[c])):
            if cols is not None and v not in cols:
                continue
            d = derivative(system.polys[c], v)
            if kinds[c] == "I" and kinds[v] == "I":
                bad = [u for (_, exps) in d for u, _ in exps if kinds[u] != "U"]
                if bad:
                    raise InvariantViolation(
                        f"Jacobian entry ({c},{v}) depends on I-configuration variables {sorted(set(bad))}")
            out[(c, v)] = d
    return out


def system_to_dict(system: PolynomialSystem, digraph: DependencyDigraph | None = None) -> dict:
    from endwalk.arrangement import config_to_dict

    def mono(poly):
        return [{"z": zdeg, "y": [[v, p] for v, p in exps], "coeff": coeff}
                for (zdeg, exps), coeff in sorted(poly.items())]

    entries = []
    for i, c in enumerate(system.configs):
        d = config_to_dict(c)
        d["index"] = i
        if digraph is not None:
            comp = digraph.component_of[i]
            d["component"] = comp
            d["class"] = digraph.classes[comp]
            if i in digraph.persistent:
                d["tags"] = d["tags"] + ["persistent"]
        d["monomials"] = mono(system.polys[i])
        entries.append(d)
    out = {"template": system.template.name, "k": system.template.k,
           "symmetry_group_order": len(system.template.symmetry_group()),
           "configurations": entries,
           "root_saw": mono(system.root_saw), "root_sar": mono(system.root_sar),
           "pruned": [config_to_dict(c) for c in system.pruned]}
    if digraph is not None:
        out["components"] = [{"members": list(m), "class": cls}
                             for m, cls in zip(digraph.components, digraph.classes)]
        out["persistent_single_component"] = digraph.persistent_single_component
    return out


@lru_cache(maxsize=16)
def _cached_system(name: str):
    from endwalk.template import bundled_template
    t = bundled_template(name)
    s = prune_unproductive(build_system(t))
    return s, build_dependency_digraph(s)


def bundled_system(name: str):
    """Pruned system and dependency digraph of a bundled template (cached)."""
    return _cached_system(name)
