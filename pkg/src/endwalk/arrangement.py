"""Configurations, shapes and arrangements.

Every arc family is identified by a *side label*: the label of the tree arc
whose tail owns the virtual arcs.  At template level the label of a gluing
side is 0 (class A) or 1 (class B); on a patch it is the instance pair
``(a, b)``.  A configuration's entry ``x`` is the label of the arc whose tail
part starts at the adhesion set, so ``x`` names the side on which the walk is
picked up; ``y`` works the same way for the end of the walk.

Shapes are ``Walk`` objects whose arcs are tags: ``('e', edge_key)`` for a
real edge and ``('v', port_key)`` for a virtual arc of that port.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Mapping

from endwalk.errors import MalformedArrangement, PreconditionFailed, ResourceLimit
from endwalk.graph_core import Digraph, Walk, iter_saws
from endwalk.template import Patch

DEFAULT_K_CAP = 4
DEFAULT_SHAPE_CAP = 5_000_000


@dataclass(frozen=True, order=True)
class Configuration:
    """A walk on the doubled adhesion graph with entry and exit sides.

    ``verts`` is empty for the empty configuration; ``sides[i]`` labels the
    arc between ``verts[i]`` and ``verts[i + 1]``.
    """

    pair: Hashable
    verts: tuple
    sides: tuple
    x: Hashable
    y: Hashable

    def __post_init__(self):
        if self.verts and len(self.sides) != len(self.verts) - 1:
            raise ValueError("a configuration walk needs one side label per arc")
        if not self.verts and self.sides:
            raise ValueError("the empty configuration has no arcs")

    @property
    def is_empty(self) -> bool:
        return not self.verts

    @property
    def is_boring(self) -> bool:
        return self.x == self.y and all(s == self.x for s in self.sides)

    @property
    def is_feasible(self) -> bool:
        """An empty walk cannot carry different entry and exit sides."""
        return bool(self.verts) or self.x == self.y

    @property
    def kind(self) -> str:
        return "I" if self.x != self.y else "U"

    @property
    def is_simple(self) -> bool:
        return self.kind == "I" and len(self.verts) == 1

    def reversed(self) -> "Configuration":
        return Configuration(self.pair, self.verts[::-1], self.sides[::-1], self.y, self.x)

    def tags(self) -> list[str]:
        out = ["boring"] if self.is_boring else [self.kind]
        if self.is_simple:
            out.append("simple")
        if not self.is_feasible:
            out.append("infeasible")
        return out


def enumerate_configurations(k: int, pair: Hashable = 0, labels: tuple = (0, 1),
                             k_cap: int = DEFAULT_K_CAP) -> list[Configuration]:
    """Every configuration on a doubled adhesion graph with k positions."""
    if k < 1:
        raise ValueError("adhesion size must be positive")
    if k > k_cap:
        raise ResourceLimit(f"adhesion size {k} exceeds the cap {k_cap}")
    walks: list[tuple[tuple, tuple]] = [((), ())]
    for j in range(1, k + 1):
        for verts in itertools.permutations(range(k), j):
            for sides in itertools.product(labels, repeat=j - 1):
                walks.append((verts, sides))
    return [Configuration(pair, v, s, x, y)
            for v, s in walks for x in labels for y in labels]


# -- part graphs and shapes --------------------------------------------------

@dataclass(frozen=True)
class Port:
    """An outgoing tree arc seen from a part: adhesion vertices in canonical
    order and the side labels of this arc (``here``) and its reverse."""

    adhesion: tuple
    here: Hashable
    there: Hashable
    pair: Hashable


class PartGraph:
    """Real edges of a part plus the virtual arcs of each outgoing tree arc."""

    def __init__(self, vertices: Iterable, edges: Iterable[tuple], ports: Mapping[Hashable, Port]):
        self.vertices = tuple(vertices)
        self.index = {v: i for i, v in enumerate(self.vertices)}
        self.edges = tuple(edges)
        self.ports = dict(ports)
        self.port_sets = {key: frozenset(p.adhesion) for key, p in self.ports.items()}
        self.edge_keys = {key for key, _, _ in self.edges}
        arcs, labels, rev = [], [], []
        for key, u, v in self.edges:
            i, j = self.index[u], self.index[v]
            arcs += [(i, j), (j, i)]
            labels += [("e", key), ("e", key)]
            rev += [len(arcs) - 1, len(arcs) - 2]
        for key, port in self.ports.items():
            for u, v in itertools.combinations(port.adhesion, 2):
                i, j = self.index[u], self.index[v]
                arcs += [(i, j), (j, i)]
                labels += [("v", key), ("v", key)]
                rev += [len(arcs) - 1, len(arcs) - 2]
        self.digraph = Digraph(len(self.vertices), arcs, rev, labels)
        self._endpoints = {}
        for key, u, v in self.edges:
            self._endpoints[key] = frozenset((u, v))

    def shapes(self, start=None, max_len: int | None = None,
               cap: int = DEFAULT_SHAPE_CAP) -> Iterator[Walk]:
        """All SAWs on the part graph, optionally from one start vertex."""
        starts = self.vertices if start is None else (start,)
        limit = len(self.vertices) - 1 if max_len is None else max_len
        count = 0
        g = self.digraph
        for s in starts:
            for w in iter_saws(g, self.index[s], limit):
                count += 1
                if count > cap:
                    raise ResourceLimit(f"more than {cap} shapes on one part")
                yield Walk(tuple(self.vertices[i] for i in w.vertices),
                           tuple(g.labels[a] for a in w.arcs))

    def contains(self, shape: Walk) -> bool:
        if shape.is_empty:
            return True
        if not shape.is_self_avoiding() or any(v not in self.index for v in shape.vertices):
            return False
        for i, (kind, key) in enumerate(shape.arcs):
            ends = frozenset(shape.vertices[i:i + 2])
            if kind == "e":
                if self._endpoints.get(key) != ends:
                    return False
            elif kind == "v":
                if key not in self.port_sets or not ends <= self.port_sets[key]:
                    return False
            else:
                return False
        return True


def shape_weight(shape: Walk) -> int:
    return sum(1 for kind, _ in shape.arcs if kind == "e")


def induced_configuration(shape: Walk, key: Hashable, port: Port) -> tuple[tuple, tuple]:
    """The unique walk on the adhesion graph matching the shape's visits:
    consecutive visits joined by this port's own virtual arc keep that arc,
    every other gap becomes a far-side arc."""
    verts, sides = [], []
    members = set(port.adhesion)
    last = None
    for i, v in enumerate(shape.vertices):
        if v in members:
            if last is not None:
                direct = i == last + 1 and shape.arcs[last] == ("v", key)
                sides.append(port.here if direct else port.there)
            verts.append(v)
            last = i
    return tuple(verts), tuple(sides)


def check_compatibility(shape: Walk, config: Configuration, key: Hashable,
                        port: Port) -> tuple[bool, str | None]:
    verts, sides = induced_configuration(shape, key, port)
    if (verts, sides) != (config.verts, config.sides):
        return False, "C1"
    members = set(port.adhesion)
    if config.x == port.here and (shape.is_empty or shape.start not in members):
        return False, "C2"
    if config.y == port.here and (shape.is_empty or shape.end not in members):
        return False, "C3"
    return True, None


def star_violation(part: PartGraph, shape: Walk,
                   configs: Mapping[Hashable, Configuration]) -> str | None:
    """First violated arrangement condition at one star, or None."""
    if not part.contains(shape):
        return "shape is not a SAW on the part graph"
    entries = exits = 0
    for key, port in part.ports.items():
        if key not in configs:
            return f"no configuration on {key!r}"
        c = configs[key]
        if c.x not in (port.here, port.there) or c.y not in (port.here, port.there):
            return f"directions on {key!r} do not belong to the arc"
        ok, clause = check_compatibility(shape, c, key, port)
        if not ok:
            return f"{clause} on {key!r}"
        entries += c.x == port.here
        exits += c.y == port.here
    if entries > 1:
        return "D2: more than one entry arc"
    if exits > 1:
        return "D3: more than one exit arc"
    if entries == 0 and (shape.is_empty or not shape.arcs or shape.arcs[0][0] != "e"):
        return "D2: no entry arc and the shape does not start with a real edge"
    if exits == 0 and (shape.is_empty or not shape.arcs or shape.arcs[-1][0] != "e"):
        return "D3: no exit arc and the shape does not end with a real edge"
    return None


@dataclass(frozen=True)
class StarArrangement:
    shape: Walk
    configs: tuple[tuple[Hashable, Configuration], ...]
    entry: Hashable | None
    exit: Hashable | None

    @property
    def weight(self) -> int:
        return shape_weight(self.shape)

    def config(self, key) -> Configuration:
        for k, c in self.configs:
            if k == key:
                return c
        raise KeyError(key)

    def nonboring(self, exclude=None) -> list[tuple[Hashable, Configuration]]:
        return [(k, c) for k, c in self.configs if k != exclude and not c.is_boring]


def enumerate_star_arrangements(part: PartGraph, *, pinned: tuple[Hashable, Configuration] | None = None,
                                start=None, source: bool = False, target: bool = False,
                                end_in=None, max_len: int | None = None,
                                cap: int = DEFAULT_SHAPE_CAP) -> Iterator[StarArrangement]:
    """Every star arrangement on ``part`` satisfying the constraints.

    ``source``/``target`` force all entry/exit directions to point inward,
    ``end_in`` restricts the last vertex of the shape.
    """
    pin_key = pin = None
    if pinned is not None:
        pin_key, pin = pinned
        port = part.ports[pin_key]
        if pin.is_empty or not pin.is_feasible:
            return
        if pin.x == port.here:
            if source or (start is not None and start != pin.verts[0]):
                return
            start = pin.verts[0]
        if pin.y == port.here and target:
            return
    keys = list(part.ports)
    end_set = None if end_in is None else set(end_in)
    for shape in part.shapes(start=start, max_len=max_len, cap=cap):
        if end_set is not None and shape.end not in end_set:
            continue
        induced = {key: induced_configuration(shape, key, part.ports[key]) for key in keys}
        if pin is not None and induced[pin_key] != (pin.verts, pin.sides):
            continue
        entries = [] if source else [k for k in keys if shape.start in part.port_sets[k]]
        exits = [] if target else [k for k in keys if shape.end in part.port_sets[k]]
        if shape.arcs and shape.arcs[0][0] == "e":
            entries.append(None)
        if shape.arcs and shape.arcs[-1][0] == "e":
            exits.append(None)
        if pin is not None:
            port = part.ports[pin_key]
            entries = [e for e in entries if (e == pin_key) == (pin.x == port.here)]
            exits = [e for e in exits if (e == pin_key) == (pin.y == port.here)]
        for ent in entries:
            for ext in exits:
                configs = []
                for key in keys:
                    p = part.ports[key]
                    verts, sides = induced[key]
                    configs.append((key, Configuration(p.pair, verts, sides,
                                                       p.here if key == ent else p.there,
                                                       p.here if key == ext else p.there)))
                yield StarArrangement(shape, tuple(configs), ent, ext)


# -- arrangements on patches ------------------------------------------------

def node_part_graph(patch: Patch, group: frozenset) -> PartGraph:
    """Part graph of a (possibly contracted) group of instances."""
    verts = sorted({v for a in group for v in patch.inst_verts[a]})
    edges = [(e, u, v) for e, (u, v) in enumerate(patch.edges) if patch.edge_owner[e] in group]
    ports = {}
    for a in sorted(group):
        for b in patch.inst_nbr[a]:
            if b not in group:
                g, _ = patch.arc_gluing(a, b)
                ports[(a, b)] = Port(patch.adhesion(a, b), (a, b), (b, a), frozenset((a, b)))
    return PartGraph(verts, edges, ports)


def _tree_key(a: int, b: int) -> frozenset:
    return frozenset((a, b))


@dataclass
class TreeArrangement:
    """Shapes on groups of patch instances and configurations on the tree
    edges leaving them.  A group with several instances is a contracted node."""

    patch: Patch
    shapes: dict
    configs: dict
    _owner: dict = field(default=None, repr=False)

    def __post_init__(self):
        self._owner = {a: g for g in self.shapes for a in g}

    @property
    def groups(self) -> list[frozenset]:
        return sorted(self.shapes, key=min)

    @property
    def instances(self) -> frozenset:
        return frozenset(self._owner)

    def group_of(self, a: int):
        return self._owner.get(a)

    def out_arcs(self, group: frozenset) -> list[tuple[int, int]]:
        return [(a, b) for a in sorted(group) for b in self.patch.inst_nbr[a] if b not in group]

    def boundary_arcs(self) -> list[tuple[int, int]]:
        return [arc for g in self.groups for arc in self.out_arcs(g) if arc[1] not in self._owner]

    def interior_edges(self) -> list[tuple[int, int]]:
        return [arc for g in self.groups for arc in self.out_arcs(g)
                if arc[1] in self._owner and arc[0] < arc[1]]

    @property
    def weight(self) -> int:
        return sum(shape_weight(s) for s in self.shapes.values())

    def config(self, arc) -> Configuration:
        return self.configs[_tree_key(*arc)]

    def star_configs(self, group) -> dict:
        return {arc: self.configs[_tree_key(*arc)] for arc in self.out_arcs(group)
                if _tree_key(*arc) in self.configs}

    def violations(self) -> list[str]:
        bad = []
        for g in self.groups:
            part = node_part_graph(self.patch, g)
            reason = star_violation(part, self.shapes[g], self.star_configs(g))
            if reason:
                bad.append(f"node {sorted(g)}: {reason}")
        return bad

    def is_valid(self) -> bool:
        return not self.violations()

    def is_reduced(self) -> bool:
        return all(not self.config(arc).is_boring for arc in self.interior_edges())

    def is_complete(self) -> bool:
        if not self.is_reduced():
            return False
        for a, b in self.boundary_arcs():
            c = self.config((a, b))
            if not c.is_boring or c.x != (b, a):
                return False
        return True

    def source(self):
        found = [g for g in self.groups
                 if all(self.config(arc).x != arc for arc in self.out_arcs(g))]
        return found[0] if len(found) == 1 else None

    def target(self):
        found = [g for g in self.groups
                 if all(self.config(arc).y != arc for arc in self.out_arcs(g))]
        return found[0] if len(found) == 1 else None


def _segments(shape: Walk, adhesion) -> tuple[list[int], list[Walk]]:
    members = set(adhesion)
    idx = [i for i, v in enumerate(shape.vertices) if v in members]
    if not idx:
        return idx, []
    segs = [shape.sub(0, idx[0])]
    segs += [shape.sub(idx[j], idx[j + 1]) for j in range(len(idx) - 1)]
    segs.append(shape.sub(idx[-1], len(shape.vertices) - 1))
    return idx, segs


def _check_local(A: TreeArrangement, groups) -> None:
    for g in groups:
        part = node_part_graph(A.patch, g)
        reason = star_violation(part, A.shapes[g], A.star_configs(g))
        if reason:
            raise MalformedArrangement(f"node {sorted(g)}: {reason}")


def contract_arrangement(A: TreeArrangement, f: tuple[int, int], validate: bool = True) -> TreeArrangement:
    """Merge the two nodes joined by tree edge f, interleaving their shapes
    along the configuration on f."""
    a, b = f
    ga, gb = A.group_of(a), A.group_of(b)
    if ga is None or gb is None or ga == gb:
        raise MalformedArrangement(f"{f} is not an edge between two nodes of the arrangement")
    if validate:
        _check_local(A, (ga, gb))
    c = A.config(f)
    if c.is_empty:
        raise MalformedArrangement("interior configuration is empty")
    k = len(c.verts)
    labels = [c.x, *c.sides, c.y]
    pieces = {}
    for g in (ga, gb):
        shape = A.shapes[g]
        idx, segs = _segments(shape, c.verts)
        if [shape.vertices[i] for i in idx] != list(c.verts):
            raise MalformedArrangement("shape visits the adhesion set out of order")
        pieces[g] = segs
    merged = None
    for j in range(k + 1):
        head = A.group_of(labels[j][1])
        piece = pieces[head][j]
        merged = piece if merged is None else merged.concat(piece)
    if not merged.is_self_avoiding():
        raise MalformedArrangement("contracted shape is not self-avoiding")
    new_group = ga | gb
    shapes = {g: s for g, s in A.shapes.items() if g not in (ga, gb)}
    shapes[new_group] = merged
    configs = {key: v for key, v in A.configs.items() if key != _tree_key(a, b)}
    return TreeArrangement(A.patch, shapes, configs)


def _split_group(patch: Patch, group: frozenset, a: int, b: int) -> tuple[frozenset, frozenset]:
    side_a = {a}
    stack = [a]
    while stack:
        u = stack.pop()
        for w in patch.inst_nbr[u]:
            if w in group and w not in side_a and not (u == a and w == b):
                side_a.add(w)
                stack.append(w)
    return frozenset(side_a), group - side_a


def project_arrangement(A: TreeArrangement, f: tuple[int, int]) -> TreeArrangement:
    """Split the node containing tree edge f back into its two sides."""
    a, b = f
    group = A.group_of(a)
    if group is None or A.group_of(b) != group:
        raise PreconditionFailed(f"{f} is not inside a contracted node")
    na, nb = _split_group(A.patch, group, a, b)
    shape = A.shapes[group]
    adhesion = A.patch.adhesion(a, b)
    idx, segs = _segments(shape, adhesion)
    if not idx:
        raise PreconditionFailed("the shape avoids the adhesion set of the split edge")
    owner = A.patch.edge_owner
    label_to = {na: (b, a), nb: (a, b)}

    def seg_group(seg: Walk):
        kind, key = seg.arcs[0]
        inst = owner[key] if kind == "e" else key[0]
        return na if inst in na else nb

    out = A.out_arcs(group)
    x_arc = [arc for arc in out if A.config(arc).x == arc]
    y_arc = [arc for arc in out if A.config(arc).y == arc]
    if len(x_arc) > 1 or len(y_arc) > 1:
        raise MalformedArrangement("contracted node has several entry or exit arcs")
    if x_arc:
        x_group = na if x_arc[0][0] in na else nb
    elif shape.arcs and shape.arcs[0][0] == "e":
        x_group = seg_group(shape.sub(0, 1))
    else:
        raise MalformedArrangement("no entry arc and no leading real edge")
    if y_arc:
        y_group = na if y_arc[0][0] in na else nb
    elif shape.arcs and shape.arcs[-1][0] == "e":
        y_group = seg_group(shape.sub(len(shape.arcs) - 1, len(shape.arcs)))
    else:
        raise MalformedArrangement("no exit arc and no trailing real edge")
    verts = tuple(shape.vertices[i] for i in idx)
    k = len(verts)
    side_groups = []
    for j, seg in enumerate(segs):
        side_groups.append(seg_group(seg) if seg.arcs else None)
    new_shapes = {g: s for g, s in A.shapes.items() if g != group}
    for g in (na, nb):
        walk = None
        for j, seg in enumerate(segs):
            sg = side_groups[j]
            if sg == g:
                piece = seg
            elif 0 < j < k:
                other = nb if g == na else na
                piece = Walk((verts[j - 1], verts[j]), (("v", label_to[other]),))
            else:
                piece = Walk((verts[0],) if j == 0 else (verts[-1],))
            walk = piece if walk is None else walk.concat(piece)
        new_shapes[g] = walk
    sides = tuple(label_to[side_groups[j]] for j in range(1, k))
    configs = dict(A.configs)
    configs[_tree_key(a, b)] = Configuration(_tree_key(a, b), verts, sides,
                                             label_to[x_group], label_to[y_group])
    return TreeArrangement(A.patch, new_shapes, configs)


def graph_walk_to_shape(patch: Patch, w: Walk) -> Walk:
    return Walk(w.vertices, tuple(("e", arc // 2) for arc in w.arcs))


def shape_to_graph_walk(patch: Patch, shape: Walk) -> Walk:
    """Translate real-edge tags back to patch arc ids; virtual tags stay."""
    arcs = []
    for i, (kind, key) in enumerate(shape.arcs):
        if kind == "e":
            u = shape.vertices[i]
            arcs.append(2 * key if patch.edges[key][0] == u else 2 * key + 1)
        else:
            arcs.append((kind, key))
    return Walk(shape.vertices, tuple(arcs))


def support(patch: Patch, w: Walk) -> frozenset:
    return frozenset(patch.steiner(patch.edge_owner[arc // 2] for arc in w.arcs))


def saw_to_complete_arrangement(w: Walk, patch: Patch) -> TreeArrangement:
    """The unique complete arrangement representing a SAW of positive length."""
    if w.is_empty or w.length == 0:
        raise PreconditionFailed("trivial walks have no complete arrangement")
    if not w.is_self_avoiding() or not w.is_walk_in(patch.graph):
        raise PreconditionFailed("not a self-avoiding walk on the patch")
    sup = support(patch, w)
    part = node_part_graph(patch, sup)
    shape = graph_walk_to_shape(patch, w)
    configs = {}
    for key, port in part.ports.items():
        verts, sides = induced_configuration(shape, key, port)
        configs[_tree_key(*key)] = Configuration(port.pair, verts, sides, port.there, port.there)
    A = TreeArrangement(patch, {sup: shape}, configs)
    return decontract(A)


def decontract(A: TreeArrangement) -> TreeArrangement:
    """Project every contracted node down to single instances."""
    while True:
        big = [g for g in A.groups if len(g) > 1]
        if not big:
            return A
        g = big[0]
        a = min(g)
        b = min(x for x in A.patch.inst_nbr[a] if x in g) if any(
            x in g for x in A.patch.inst_nbr[a]) else None
        if b is None:
            raise MalformedArrangement("contracted node is not a subtree")
        A = project_arrangement(A, (a, b))


def contract_all(A: TreeArrangement, order: Iterable[tuple[int, int]] | None = None,
                 validate: bool = True) -> TreeArrangement:
    edges = list(order) if order is not None else A.interior_edges()
    for f in edges:
        A = contract_arrangement(A, f, validate=validate)
    if len(A.shapes) != 1:
        raise MalformedArrangement("arrangement is not on a subtree")
    return A


def arrangement_to_saw(A: TreeArrangement, order: Iterable[tuple[int, int]] | None = None) -> Walk:
    """The walk represented by A: contract every interior edge."""
    merged = contract_all(A, order)
    _check_local(merged, merged.groups)
    return shape_to_graph_walk(A.patch, next(iter(merged.shapes.values())))


def template_configuration(patch: Patch, c: Configuration) -> Configuration:
    """Translate a patch-level configuration to gluing index and canonical
    positions with side labels 0/1."""
    a, b = sorted(c.pair, reverse=True)
    if a < 0:
        a, b = b, a
    g, s = patch.arc_gluing(a, b)
    adh = patch.adhesion(a, b)

    def lab(arc):
        return s if arc == (a, b) else 1 - s

    return Configuration(g, tuple(adh.index(v) for v in c.verts),
                         tuple(lab(t) for t in c.sides), lab(c.x), lab(c.y))


def patch_configuration(patch: Patch, arc: tuple[int, int], c: Configuration) -> Configuration:
    """Inverse of template_configuration on the tree arc ``arc``."""
    a, b = arc
    if a < 0:
        a, b = b, a
    g, s = patch.arc_gluing(a, b)
    if g != c.pair:
        raise ValueError("configuration belongs to a different gluing pair")
    adh = patch.adhesion(a, b)

    def lab(t):
        return (a, b) if t == s else (b, a)

    return Configuration(_tree_key(a, b), tuple(adh[p] for p in c.verts),
                         tuple(lab(t) for t in c.sides), lab(c.x), lab(c.y))


def config_to_dict(c: Configuration) -> dict:
    def enc(x):
        if isinstance(x, frozenset):
            return sorted(x)
        if isinstance(x, tuple):
            return list(x)
        return x

    return {"pair": enc(c.pair), "walk": list(c.verts), "sides": [enc(s) for s in c.sides],
            "entry": enc(c.x), "exit": enc(c.y), "tags": c.tags()}


def arrangement_to_dict(A: TreeArrangement) -> dict:
    nodes = []
    for g in A.groups:
        s = A.shapes[g]
        nodes.append({
            "instances": sorted(g),
            "parts": [A.patch.inst_part[a] for a in sorted(g)],
            "shape": {"vertices": list(s.vertices),
                      "arcs": [[kind, key if kind == "e" else list(key)] for kind, key in s.arcs]},
            "weight": shape_weight(s),
        })
    configs = []
    for key in sorted(A.configs, key=lambda k: sorted(k)):
        d = config_to_dict(A.configs[key])
        d["boundary"] = any(x not in A.instances for x in key)
        configs.append(d)
    src, tgt = A.source(), A.target()
    return {"nodes": nodes, "configurations": configs, "weight": A.weight,
            "complete": A.is_complete(),
            "source": sorted(src) if src else None, "target": sorted(tgt) if tgt else None}
