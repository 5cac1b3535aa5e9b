"""Tree-decomposition templates, finite patches and the contracted root star.

A template lists part types in two bipartition classes.  Every instance of a
part type has one tree neighbour per port; the neighbour's type and the way
the port vertices are identified come from the unique gluing pair that
mentions the (part, port).  Each edge of the infinite graph is declared by
exactly one part type, which plays the role of the edge-placement map.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from endwalk.errors import ResourceLimit, TemplateError
from endwalk.graph_core import Digraph, _Sentinel, bfs_distances

UNBOUNDED = _Sentinel("UNBOUNDED")

DEFAULT_INSTANCE_CAP = 2_000_000
DEFAULT_ROOT_CAP = 400

BUNDLED = ("double_ray", "t3", "triangle_edge", "k4_edge", "hex_cactus")


@dataclass(frozen=True)
class PartType:
    id: str
    n: int
    edges: tuple[tuple[int, int], ...]
    ports: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class GluingPair:
    a: tuple[str, int]
    b: tuple[str, int]
    map: tuple[int, ...]

    def side(self, s: int) -> tuple[str, int]:
        return self.a if s == 0 else self.b


@dataclass(frozen=True, order=True)
class PartMap:
    """Image of one part type under a template symmetry."""

    to: str
    vertices: tuple[int, ...]
    ports: tuple[int, ...]


@dataclass(frozen=True)
class GluingImage:
    pair: int
    swap: bool
    positions: tuple[int, ...]


class GraphTemplate:
    """Finite presentation of an infinite graph through its tree decomposition."""

    def __init__(self, name: str, class_a: Iterable[PartType], class_b: Iterable[PartType],
                 gluing: Iterable[GluingPair], root_part: str, root_vertex: int,
                 symmetries: Iterable[Mapping[str, PartMap]] = ()):
        self.name = name
        self.class_a = tuple(class_a)
        self.class_b = tuple(class_b)
        self.gluing = tuple(gluing)
        self.root_part = root_part
        self.root_vertex = root_vertex
        self.symmetries = tuple(dict(s) for s in symmetries)
        self.parts: dict[str, PartType] = {}
        self.part_class: dict[str, int] = {}
        for cls, family in ((0, self.class_a), (1, self.class_b)):
            for p in family:
                self.parts.setdefault(p.id, p)
                self.part_class.setdefault(p.id, cls)
        self.port_gluing: dict[tuple[str, int], tuple[int, int]] = {}
        for g, pair in enumerate(self.gluing):
            for s in (0, 1):
                self.port_gluing.setdefault(pair.side(s), (g, s))
        sizes = {len(port) for p in self.parts.values() for port in p.ports}
        self.k = min(sizes) if sizes else 0
        self._group = None

    def __repr__(self) -> str:
        return f"GraphTemplate({self.name!r})"

    def adhesion(self, g: int, side: int) -> tuple[int, ...]:
        """Local vertices of the side-``side`` part of gluing g, listed by
        canonical position (the order of the class-A port tuple)."""
        pair = self.gluing[g]
        part, port = pair.side(side)
        verts = self.parts[part].ports[port]
        if side == 0:
            return verts
        return tuple(verts[m] for m in pair.map)

    def position(self, g: int, side: int, vertex: int) -> int:
        return self.adhesion(g, side).index(vertex)

    def partner(self, part: str, port: int) -> tuple[int, int, str, int]:
        """(gluing index, side of part, neighbour part, neighbour port)."""
        g, s = self.port_gluing[(part, port)]
        other, oport = self.gluing[g].side(1 - s)
        return g, s, other, oport

    # -- symmetries -------------------------------------------------------

    def _full_map(self, gen: Mapping[str, PartMap]) -> dict[str, PartMap]:
        out = {}
        for pid, p in self.parts.items():
            out[pid] = gen.get(pid) or PartMap(pid, tuple(range(p.n)), tuple(range(len(p.ports))))
        return out

    def gluing_image(self, elem: Mapping[str, PartMap], g: int) -> GluingImage:
        pair = self.gluing[g]
        (pa, ia), (pb, ib) = pair.a, pair.b
        ma, mb = elem[pa], elem[pb]
        key_a = (ma.to, ma.ports[ia])
        key_b = (mb.to, mb.ports[ib])
        if key_a not in self.port_gluing or key_b not in self.port_gluing:
            raise TemplateError(f"symmetry sends gluing {g} to an unknown port")
        g2, sa = self.port_gluing[key_a]
        g3, sb = self.port_gluing[key_b]
        if g2 != g3 or sa == sb:
            raise TemplateError(f"symmetry does not map gluing {g} onto a gluing pair")
        adh_a = self.adhesion(g, 0)
        adh_b = self.adhesion(g, 1)
        img_a = self.adhesion(g2, sa)
        img_b = self.adhesion(g2, sb)
        positions = []
        for p in range(len(adh_a)):
            va = ma.vertices[adh_a[p]]
            vb = mb.vertices[adh_b[p]]
            if va not in img_a or vb not in img_b:
                raise TemplateError(f"symmetry moves the port vertices of gluing {g} off the port")
            qa, qb = img_a.index(va), img_b.index(vb)
            if qa != qb:
                raise TemplateError(f"symmetry breaks the vertex identification of gluing {g}")
            positions.append(qa)
        return GluingImage(g2, sa == 1, tuple(positions))

    def symmetry_group(self) -> list[dict[str, PartMap]]:
        """All elements of the group generated by the declared symmetries."""
        if self._group is not None:
            return self._group
        ident = self._full_map({})
        gens = [self._full_map(s) for s in self.symmetries]

        def key(e):
            return tuple((pid, e[pid]) for pid in sorted(e))

        def compose(e2, e1):
            out = {}
            for pid, m1 in e1.items():
                m2 = e2[m1.to]
                out[pid] = PartMap(m2.to, tuple(m2.vertices[v] for v in m1.vertices),
                                   tuple(m2.ports[i] for i in m1.ports))
            return out

        seen = {key(ident): ident}
        queue = deque([ident])
        while queue:
            e = queue.popleft()
            for s in gens:
                f = compose(s, e)
                kf = key(f)
                if kf not in seen:
                    seen[kf] = f
                    queue.append(f)
                    if len(seen) > 10_000:
                        raise ResourceLimit("symmetry group larger than 10000 elements")
        self._group = [seen[k] for k in sorted(seen)]
        return self._group


# -- JSON ------------------------------------------------------------------

_TOP_KEYS = {"name", "classA", "classB", "gluing", "root", "symmetries"}
_PART_KEYS = {"id", "n", "edges", "ports"}
_GLUE_KEYS = {"a", "b", "map"}
_ROOT_KEYS = {"part", "vertex"}
_SYM_KEYS = {"parts"}
_MAP_KEYS = {"to", "vertices", "ports"}


def _check_keys(obj, allowed, required, where):
    if not isinstance(obj, dict):
        raise TemplateError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise TemplateError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise TemplateError(f"{where}: missing keys {sorted(missing)}")


def _int_list(x, where):
    if not isinstance(x, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in x):
        raise TemplateError(f"{where}: expected a list of integers")
    return tuple(x)


def _parse_part(obj, where) -> PartType:
    _check_keys(obj, _PART_KEYS, _PART_KEYS, where)
    if not isinstance(obj["id"], str):
        raise TemplateError(f"{where}: id must be a string")
    if not isinstance(obj["n"], int):
        raise TemplateError(f"{where}: n must be an integer")
    if not isinstance(obj["edges"], list) or not isinstance(obj["ports"], list):
        raise TemplateError(f"{where}: edges and ports must be lists")
    edges = []
    for e in obj["edges"]:
        pair = _int_list(e, f"{where}.edges")
        if len(pair) != 2:
            raise TemplateError(f"{where}: every edge needs two endpoints")
        edges.append(pair)
    ports = tuple(_int_list(p, f"{where}.ports") for p in obj["ports"])
    return PartType(obj["id"], obj["n"], tuple(edges), ports)


def template_from_dict(data: Mapping) -> GraphTemplate:
    _check_keys(data, _TOP_KEYS, _TOP_KEYS - {"symmetries"}, "template")
    class_a = [_parse_part(p, f"classA[{i}]") for i, p in enumerate(data["classA"])]
    class_b = [_parse_part(p, f"classB[{i}]") for i, p in enumerate(data["classB"])]
    gluing = []
    for i, g in enumerate(data["gluing"]):
        where = f"gluing[{i}]"
        _check_keys(g, _GLUE_KEYS, {"a", "b"}, where)
        sides = []
        for s in ("a", "b"):
            v = g[s]
            if (not isinstance(v, list) or len(v) != 2 or not isinstance(v[0], str)
                    or not isinstance(v[1], int)):
                raise TemplateError(f"{where}.{s}: expected [partId, portIndex]")
            sides.append((v[0], v[1]))
        mp = _int_list(g["map"], f"{where}.map") if "map" in g else None
        gluing.append((sides[0], sides[1], mp))
    root = data["root"]
    _check_keys(root, _ROOT_KEYS, _ROOT_KEYS, "root")
    syms = []
    for i, s in enumerate(data.get("symmetries", [])):
        _check_keys(s, _SYM_KEYS, _SYM_KEYS, f"symmetries[{i}]")
        gen = {}
        for pid, m in s["parts"].items():
            _check_keys(m, _MAP_KEYS, _MAP_KEYS, f"symmetries[{i}].{pid}")
            gen[pid] = PartMap(m["to"], _int_list(m["vertices"], pid), _int_list(m["ports"], pid))
        syms.append(gen)
    parts = {p.id: p for p in class_a + class_b}
    pairs = []
    for a, b, mp in gluing:
        if mp is None:
            size = len(parts[a[0]].ports[a[1]]) if a[0] in parts and 0 <= a[1] < len(parts[a[0]].ports) else 0
            mp = tuple(range(size))
        pairs.append(GluingPair(a, b, mp))
    return GraphTemplate(str(data["name"]), class_a, class_b, pairs, root["part"], root["vertex"], syms)


def template_to_dict(t: GraphTemplate) -> dict:
    def part(p):
        return {"id": p.id, "n": p.n, "edges": [list(e) for e in p.edges],
                "ports": [list(q) for q in p.ports]}

    out = {
        "name": t.name,
        "classA": [part(p) for p in t.class_a],
        "classB": [part(p) for p in t.class_b],
        "gluing": [{"a": list(g.a), "b": list(g.b), "map": list(g.map)} for g in t.gluing],
        "root": {"part": t.root_part, "vertex": t.root_vertex},
    }
    if t.symmetries:
        out["symmetries"] = [
            {"parts": {pid: {"to": m.to, "vertices": list(m.vertices), "ports": list(m.ports)}
                       for pid, m in s.items()}} for s in t.symmetries]
    return out


def load_template(source) -> GraphTemplate:
    """Read a template from a path, a JSON string or an already parsed dict."""
    if isinstance(source, Mapping):
        return template_from_dict(source)
    if isinstance(source, str) and source.lstrip().startswith("{"):
        data = json.loads(source)
    else:
        path = Path(source)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise TemplateError(f"{path}: {exc}") from exc
    return template_from_dict(data)


def bundled_template(name: str) -> GraphTemplate:
    stem = name[:-5] if name.endswith(".json") else name
    ref = resources.files("endwalk").joinpath("data", f"{stem}.json")
    if not ref.is_file():
        raise TemplateError(f"no bundled template named {name!r}")
    return template_from_dict(json.loads(ref.read_text()))


def resolve_template(name_or_path) -> GraphTemplate:
    """Load from a file when it exists, else fall back to a bundled template."""
    if isinstance(name_or_path, GraphTemplate):
        return name_or_path
    path = Path(name_or_path)
    if path.is_file():
        return load_template(path)
    return bundled_template(path.name)


# -- validation -----------------------------------------------------------

def _connected(n: int, edges) -> bool:
    if n == 0:
        return False
    adj = [[] for _ in range(n)]
    for u, v in edges:
        if 0 <= u < n and 0 <= v < n:
            adj[u].append(v)
            adj[v].append(u)
    seen = {0}
    stack = [0]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == n


def validate_template(t: GraphTemplate) -> list[str]:
    """List of violated standing assumptions; empty means valid."""
    bad: list[str] = []
    if not t.class_a or not t.class_b:
        bad.append("both bipartition classes need at least one part type")
    ids = [p.id for p in t.class_a + t.class_b]
    for pid in sorted({i for i in ids if ids.count(i) > 1}):
        bad.append(f"part id {pid!r} declared more than once")
    sizes = set()
    for p in t.class_a + t.class_b:
        if p.n < 1:
            bad.append(f"part {p.id}: needs at least one vertex")
        seen_edges = set()
        for u, v in p.edges:
            if not (0 <= u < p.n and 0 <= v < p.n):
                bad.append(f"part {p.id}: edge ({u},{v}) out of range")
            elif u == v:
                bad.append(f"part {p.id}: loop at {u}")
            elif frozenset((u, v)) in seen_edges:
                bad.append(f"part {p.id}: edge ({u},{v}) declared twice")
            seen_edges.add(frozenset((u, v)))
        if not p.ports:
            bad.append(f"part {p.id}: has no ports")
        for i, port in enumerate(p.ports):
            sizes.add(len(port))
            if not port:
                bad.append(f"part {p.id}: port {i} is empty")
            if len(set(port)) != len(port):
                bad.append(f"part {p.id}: port {i} repeats a vertex")
            if any(not 0 <= v < p.n for v in port):
                bad.append(f"part {p.id}: port {i} out of range")
        virtual = [(u, v) for port in p.ports for u in port for v in port if u < v]
        if p.n >= 1 and not _connected(p.n, list(p.edges) + virtual):
            bad.append(f"part {p.id}: part graph is disconnected")
    if len(sizes) > 1:
        bad.append(f"port sizes differ: {sorted(sizes)}")
    k = t.k
    used: dict[tuple[str, int], int] = {}
    for g, pair in enumerate(t.gluing):
        ok = True
        for s in (0, 1):
            pid, port = pair.side(s)
            if pid not in t.parts:
                bad.append(f"gluing {g}: unknown part {pid!r}")
                ok = False
            elif not 0 <= port < len(t.parts[pid].ports):
                bad.append(f"gluing {g}: part {pid} has no port {port}")
                ok = False
            else:
                if (pid, port) in used:
                    bad.append(f"gluing {g}: duplicated (part,port) ({pid},{port}), "
                               f"already in gluing {used[(pid, port)]}")
                used.setdefault((pid, port), g)
        if not ok:
            continue
        ca, cb = t.part_class[pair.a[0]], t.part_class[pair.b[0]]
        if ca == cb:
            bad.append(f"gluing {g}: self-gluing within one bipartition class")
        elif ca != 0:
            bad.append(f"gluing {g}: side a must be a class A part")
        if sorted(pair.map) != list(range(k)):
            bad.append(f"gluing {g}: map is not a permutation of the {k} port positions")
            continue
        pa, pb = t.parts[pair.a[0]], t.parts[pair.b[0]]
        if pa.n == k and pb.n == k:
            bad.append(f"gluing {g}: adjacent-part coincidence ({pa.id} and {pb.id} equal the adhesion set)")
        if len(t.parts[pair.a[0]].ports[pair.a[1]]) == k == len(t.parts[pair.b[0]].ports[pair.b[1]]):
            adh_a = t.adhesion(g, 0)
            adh_b = t.adhesion(g, 1)
            ea = {frozenset((adh_a.index(u), adh_a.index(v))) for u, v in pa.edges
                  if u in adh_a and v in adh_a}
            eb = {frozenset((adh_b.index(u), adh_b.index(v))) for u, v in pb.edges
                  if u in adh_b and v in adh_b}
            if ea & eb:
                bad.append(f"gluing {g}: an edge between port vertices is owned by both sides")
    for pid, p in t.parts.items():
        for i in range(len(p.ports)):
            if (pid, i) not in used:
                bad.append(f"port ({pid},{i}) is not glued")
    if t.root_part not in t.parts:
        bad.append(f"root part {t.root_part!r} unknown")
    elif not 0 <= t.root_vertex < t.parts[t.root_part].n:
        bad.append("root vertex out of range")
    if not bad:
        bad.extend(_validate_symmetries(t))
    return bad


def _validate_symmetries(t: GraphTemplate) -> list[str]:
    bad = []
    for si, gen in enumerate(t.symmetries):
        where = f"symmetry {si}"
        full = t._full_map(gen)
        unknown = set(gen) - set(t.parts)
        if unknown:
            bad.append(f"{where}: unknown parts {sorted(unknown)}")
            continue
        targets = [m.to for m in full.values()]
        if sorted(targets) != sorted(t.parts) or any(x not in t.parts for x in targets):
            bad.append(f"{where}: part map is not a bijection")
            continue
        swaps = {t.part_class[pid] != t.part_class[m.to] for pid, m in full.items()}
        if len(swaps) > 1:
            bad.append(f"{where}: bipartition classes are not preserved or swapped consistently")
            continue
        for pid, m in full.items():
            p, q = t.parts[pid], t.parts[m.to]
            if p.n != q.n or sorted(m.vertices) != list(range(p.n)):
                bad.append(f"{where}: vertex map of {pid} is not a bijection onto {m.to}")
                continue
            if len(p.ports) != len(q.ports) or sorted(m.ports) != list(range(len(p.ports))):
                bad.append(f"{where}: port map of {pid} is not a bijection onto {m.to}")
                continue
            img = {frozenset((m.vertices[u], m.vertices[v])) for u, v in p.edges}
            if img != {frozenset(e) for e in q.edges}:
                bad.append(f"{where}: vertex map of {pid} is not a graph isomorphism")
            for i, port in enumerate(p.ports):
                if {m.vertices[v] for v in port} != set(q.ports[m.ports[i]]):
                    bad.append(f"{where}: port {i} of {pid} does not map onto a port")
        if bad:
            continue
        for g in range(len(t.gluing)):
            try:
                t.gluing_image(full, g)
            except TemplateError as exc:
                bad.append(f"{where}: {exc}")
    return bad


def require_valid(t: GraphTemplate) -> None:
    bad = validate_template(t)
    if bad:
        raise TemplateError("invalid template: " + "; ".join(bad))


# -- patches --------------------------------------------------------------

@dataclass
class Patch:
    """A finite piece of the infinite graph with its decomposition tree.

    Instance ids are dense and assigned in creation order; instance 0 is the
    root.  A port whose neighbour was not materialised points at a negative
    ghost id; ``ghosts`` maps it back to (instance, port).
    """

    template: GraphTemplate
    inst_part: list[str]
    inst_verts: list[tuple[int, ...]]
    inst_nbr: list[list[int]]
    inst_parent: list[int]
    inst_depth: list[int]
    edges: list[tuple[int, int]]
    edge_owner: list[int]
    vertex_count: int
    origin: int
    ghosts: dict[int, tuple[int, int]] = field(default_factory=dict)
    graph: Digraph = None
    vertex_parts: list[list[int]] = None

    @property
    def instance_count(self) -> int:
        return len(self.inst_part)

    def is_ghost(self, a: int) -> bool:
        return a < 0

    def arc_port(self, a: int, b: int) -> int:
        return self.inst_nbr[a].index(b)

    def arc_gluing(self, a: int, b: int) -> tuple[int, int]:
        """(gluing index, side of a) of the tree arc (a, b); a is materialised."""
        return self.template.port_gluing[(self.inst_part[a], self.arc_port(a, b))]

    def adhesion(self, a: int, b: int) -> tuple[int, ...]:
        """Global adhesion vertices of the tree edge, in canonical position order."""
        if a < 0:
            a, b = b, a
        g, s = self.arc_gluing(a, b)
        verts = self.inst_verts[a]
        return tuple(verts[v] for v in self.template.adhesion(g, s))

    def tree_neighbours(self, a: int) -> list[int]:
        return list(self.inst_nbr[a])

    def dangling_vertices(self) -> set[int]:
        out = set()
        for ghost, (a, _) in self.ghosts.items():
            out.update(self.adhesion(a, ghost))
        return out

    def tree_path(self, a: int, b: int) -> list[int]:
        up_a = [a]
        while self.inst_parent[up_a[-1]] >= 0:
            up_a.append(self.inst_parent[up_a[-1]])
        up_b = [b]
        while self.inst_parent[up_b[-1]] >= 0:
            up_b.append(self.inst_parent[up_b[-1]])
        set_b = {x: i for i, x in enumerate(up_b)}
        for i, x in enumerate(up_a):
            if x in set_b:
                return up_a[:i + 1] + up_b[:set_b[x]][::-1]
        raise ValueError("instances lie in different trees")

    def steiner(self, instances: Iterable[int]) -> set[int]:
        """Smallest subtree containing the given instances."""
        inst = sorted(set(instances))
        if not inst:
            return set()
        out = {inst[0]}
        for b in inst[1:]:
            out.update(self.tree_path(inst[0], b))
        return out

    def edge_between(self, u: int, v: int) -> int:
        for arc in self.graph.out_arcs(u):
            if self.graph.head[arc] == v:
                return arc // 2
        raise ValueError(f"no edge between {u} and {v}")


class _PatchBuilder:
    def __init__(self, template: GraphTemplate, cap: int):
        require_valid(template)
        self.t = template
        self.cap = cap
        self.inst_part: list[str] = []
        self.inst_verts: list[tuple[int, ...]] = []
        self.inst_nbr: list[list] = []
        self.inst_parent: list[int] = []
        self.inst_depth: list[int] = []
        self.edges: list[tuple[int, int]] = []
        self.edge_owner: list[int] = []
        self.edge_seen: set[frozenset] = set()
        self.nv = 0
        self.new_edges: list[tuple[int, int]] = []

    def _add(self, part: str, verts: list[int], parent: int, depth: int) -> int:
        if len(self.inst_part) >= self.cap:
            raise ResourceLimit(f"patch exceeds {self.cap} part instances")
        a = len(self.inst_part)
        p = self.t.parts[part]
        self.inst_part.append(part)
        self.inst_verts.append(tuple(verts))
        self.inst_nbr.append([None] * len(p.ports))
        self.inst_parent.append(parent)
        self.inst_depth.append(depth)
        self.new_edges = []
        for u, v in p.edges:
            gu, gv = verts[u], verts[v]
            key = frozenset((gu, gv))
            if key in self.edge_seen:
                raise TemplateError(f"edge {{{gu},{gv}}} is owned by two part instances")
            self.edge_seen.add(key)
            self.edges.append((gu, gv))
            self.edge_owner.append(a)
            self.new_edges.append((gu, gv))
        return a

    def root(self) -> int:
        p = self.t.parts[self.t.root_part]
        verts = list(range(p.n))
        self.nv = p.n
        return self._add(p.id, verts, -1, 0)

    def expand(self, a: int, port: int) -> int:
        part = self.inst_part[a]
        g, s, other, oport = self.t.partner(part, port)
        here = self.t.adhesion(g, s)
        there = self.t.adhesion(g, 1 - s)
        q = self.t.parts[other]
        verts = [-1] * q.n
        for pos in range(len(here)):
            verts[there[pos]] = self.inst_verts[a][here[pos]]
        for i in range(q.n):
            if verts[i] < 0:
                verts[i] = self.nv
                self.nv += 1
        c = self._add(other, verts, a, self.inst_depth[a] + 1)
        self.inst_nbr[c][oport] = a
        self.inst_nbr[a][port] = c
        return c

    def finish(self) -> Patch:
        ghosts = {}
        for a, nbrs in enumerate(self.inst_nbr):
            for i, b in enumerate(nbrs):
                if b is None:
                    gid = -(len(ghosts) + 1)
                    nbrs[i] = gid
                    ghosts[gid] = (a, i)
        vertex_parts: list[list[int]] = [[] for _ in range(self.nv)]
        for a, verts in enumerate(self.inst_verts):
            for v in verts:
                vertex_parts[v].append(a)
        patch = Patch(self.t, self.inst_part, self.inst_verts, self.inst_nbr, self.inst_parent,
                      self.inst_depth, self.edges, self.edge_owner, self.nv,
                      self.t.root_vertex, ghosts)
        patch.graph = Digraph.from_edges(self.nv, self.edges)
        patch.vertex_parts = vertex_parts
        return patch


def build_patch(template: GraphTemplate, tree_radius: int,
                cap: int = DEFAULT_INSTANCE_CAP) -> Patch:
    """Breadth-first instantiation of part copies out to a tree radius."""
    if tree_radius < 0:
        raise ValueError("tree_radius must be nonnegative")
    b = _PatchBuilder(template, cap)
    frontier = [b.root()]
    for _ in range(tree_radius):
        nxt = []
        for a in frontier:
            for port, nb in enumerate(b.inst_nbr[a]):
                if nb is None:
                    nxt.append(b.expand(a, port))
        frontier = nxt
    return b.finish()


def build_patch_for_horizon(template: GraphTemplate, horizon: int,
                            cap: int = DEFAULT_INSTANCE_CAP) -> Patch:
    """Smallest patch grown from the root whose exact horizon is >= horizon.

    A port is expanded as soon as one of its vertices lies within distance
    ``horizon`` of the origin.  Distances only shrink when parts are added,
    so they are maintained by label correction and re-checked at the end.
    """
    b = _PatchBuilder(template, cap)
    b.root()
    inf = float("inf")
    dist: list[float] = [inf] * b.nv
    adj: list[list[int]] = [[] for _ in range(b.nv)]
    origin = template.root_vertex
    dist[origin] = 0

    def absorb(new_edges):
        while len(dist) < b.nv:
            dist.append(inf)
            adj.append([])
        queue = deque()
        for u, v in new_edges:
            adj[u].append(v)
            adj[v].append(u)
            queue.append(u)
            queue.append(v)
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if dist[v] + 1 < dist[w]:
                    dist[w] = dist[v] + 1
                    queue.append(w)

    absorb(b.new_edges)

    def port_dist(a, port):
        g, s, _, _ = template.partner(b.inst_part[a], port)
        verts = b.inst_verts[a]
        return min(dist[verts[v]] for v in template.adhesion(g, s))

    heap = []

    def push_ports(a):
        for port, nb in enumerate(b.inst_nbr[a]):
            if nb is None:
                heapq.heappush(heap, (port_dist(a, port), a, port))

    push_ports(0)
    while True:
        while heap and heap[0][0] <= horizon:
            _, a, port = heapq.heappop(heap)
            if b.inst_nbr[a][port] is not None:
                continue
            c = b.expand(a, port)
            absorb(b.new_edges)
            push_ports(c)
        heap = []
        for a in range(len(b.inst_part)):
            for port, nb in enumerate(b.inst_nbr[a]):
                if nb is None:
                    d = port_dist(a, port)
                    if d <= horizon:
                        heap.append((d, a, port))
        if not heap:
            break
        heapq.heapify(heap)
    return b.finish()


def exact_horizon(patch: Patch, origin: int | None = None):
    """Largest n for which all walk counts of length <= n on the patch equal
    those of the infinite graph: (distance to the nearest dangling-port
    vertex) - 1, floored at 0; UNBOUNDED without dangling ports."""
    if origin is None:
        origin = patch.origin
    dangling = patch.dangling_vertices()
    if not dangling:
        return UNBOUNDED
    dist = bfs_distances(patch.graph, origin)
    reach = [dist[v] for v in dangling if dist[v] >= 0]
    if not reach:
        return UNBOUNDED
    return max(min(reach) - 1, 0)


# -- root contraction -----------------------------------------------------

@dataclass(frozen=True)
class BoundaryArc:
    arc: tuple[int, int]
    pair: int
    side: int
    adhesion: tuple[int, ...]


@dataclass
class RootStar:
    """The merged part of all parts meeting the distance-2 ball around the
    origin, with its outgoing tree arcs typed by gluing pair and side."""

    template: GraphTemplate
    patch: Patch
    instances: frozenset
    origin: int
    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]
    boundary: tuple[BoundaryArc, ...]


def root_contract(template: GraphTemplate, cap: int = DEFAULT_ROOT_CAP) -> RootStar:
    patch = build_patch_for_horizon(template, 3)
    dist = bfs_distances(patch.graph, patch.origin)
    members = frozenset(a for a, verts in enumerate(patch.inst_verts)
                        if any(0 <= dist[v] <= 2 for v in verts))
    verts = sorted({v for a in members for v in patch.inst_verts[a]})
    if len(verts) > cap:
        raise ResourceLimit(f"merged root part has {len(verts)} vertices (cap {cap})")
    edges = tuple((e, u, v) for e, (u, v) in enumerate(patch.edges)
                  if patch.edge_owner[e] in members)
    boundary = []
    for a in sorted(members):
        for b in patch.inst_nbr[a]:
            if b not in members:
                g, s = patch.arc_gluing(a, b)
                boundary.append(BoundaryArc((a, b), g, s, patch.adhesion(a, b)))
    return RootStar(template, patch, members, patch.origin, tuple(verts), edges, tuple(boundary))
