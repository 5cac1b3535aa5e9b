"""Finite digraphs, walks and exhaustive enumeration of self-avoiding walks."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Hashable, Iterator, Sequence


class _Sentinel:
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def __repr__(self) -> str:
        return self.name

    def __reduce__(self):
        return self.name


UNREACHABLE = _Sentinel("UNREACHABLE")


class Digraph:
    """A finite digraph with dense arc ids and an explicit reversal involution.

    Parallel arcs are allowed, loops are not.  ``labels`` is an optional
    per-arc payload (used for virtual/non-virtual tags and side tags).
    """

    __slots__ = ("n", "tail", "head", "rev", "labels", "_out")

    def __init__(self, n: int, arcs: Sequence[tuple[int, int]], reversal: Sequence[int],
                 labels: Sequence[Hashable] | None = None):
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        if len(reversal) != len(arcs):
            raise ValueError("reversal must have one entry per arc")
        if labels is not None and len(labels) != len(arcs):
            raise ValueError("labels must have one entry per arc")
        self.n = n
        self.tail = tuple(a for a, _ in arcs)
        self.head = tuple(b for _, b in arcs)
        self.rev = tuple(reversal)
        self.labels = tuple(labels) if labels is not None else None
        out: list[list[int]] = [[] for _ in range(n)]
        for e, (a, b) in enumerate(arcs):
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"arc {e} has an endpoint outside the vertex range")
            if a == b:
                raise ValueError(f"arc {e} is a loop")
            r = self.rev[e]
            if not 0 <= r < len(arcs) or self.rev[r] != e:
                raise ValueError(f"reversal is not an involution at arc {e}")
            if arcs[r] != (b, a):
                raise ValueError(f"reversal of arc {e} does not swap its endpoints")
            out[a].append(e)
        self._out = tuple(tuple(o) for o in out)

    @classmethod
    def from_edges(cls, n: int, edges: Sequence[tuple[int, int]],
                   labels: Sequence[Hashable] | None = None) -> "Digraph":
        """Symmetric digraph: edge i becomes arcs 2i (u->v) and 2i+1 (v->u)."""
        arcs = []
        rev = []
        for i, (u, v) in enumerate(edges):
            arcs.append((u, v))
            arcs.append((v, u))
            rev.extend((2 * i + 1, 2 * i))
        arc_labels = None
        if labels is not None:
            arc_labels = [lab for pair in labels for lab in pair]
        return cls(n, arcs, rev, arc_labels)

    @property
    def arc_count(self) -> int:
        return len(self.tail)

    def out_arcs(self, v: int) -> tuple[int, ...]:
        return self._out[v]

    def neighbours(self, v: int) -> list[int]:
        return sorted({self.head[a] for a in self._out[v]})

    def degree(self, v: int) -> int:
        return len(self._out[v])


@dataclass(frozen=True)
class Walk:
    """Alternating vertex/arc sequence.  ``arcs[i]`` joins ``vertices[i]`` to
    ``vertices[i + 1]``.  The empty walk has no vertices at all."""

    vertices: tuple
    arcs: tuple = ()

    def __post_init__(self):
        if not self.vertices:
            if self.arcs:
                raise ValueError("the empty walk carries no arcs")
        elif len(self.arcs) != len(self.vertices) - 1:
            raise ValueError("a walk needs exactly one arc between consecutive vertices")

    @property
    def length(self) -> int:
        return len(self.arcs)

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    @property
    def start(self):
        return self.vertices[0]

    @property
    def end(self):
        return self.vertices[-1]

    def is_self_avoiding(self) -> bool:
        return len(set(self.vertices)) == len(self.vertices)

    def index(self, v) -> int:
        return self.vertices.index(v)

    def sub(self, i: int, j: int) -> "Walk":
        """Sub-walk from position i to position j inclusive."""
        return Walk(self.vertices[i:j + 1], self.arcs[i:j])

    def concat(self, other: "Walk") -> "Walk":
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        if self.end != other.start:
            raise ValueError("walks do not meet")
        return Walk(self.vertices + other.vertices[1:], self.arcs + other.arcs)

    def is_walk_in(self, graph: Digraph) -> bool:
        for i, a in enumerate(self.arcs):
            if graph.tail[a] != self.vertices[i] or graph.head[a] != self.vertices[i + 1]:
                return False
        return True

    def reversed_in(self, graph: Digraph) -> "Walk":
        return Walk(self.vertices[::-1], tuple(graph.rev[a] for a in reversed(self.arcs)))


EMPTY_WALK = Walk(())


class MultiWalk:
    """A sequence of ('v', vertex) and ('a', arc) items, such as the
    intersection of a walk with a subgraph.  Walk components are separated
    exactly where two vertices follow each other."""

    __slots__ = ("items",)

    def __init__(self, items: Sequence[tuple[str, Hashable]]):
        self.items = tuple(items)
        for i, (kind, _) in enumerate(self.items):
            if kind == "a" and not (0 < i < len(self.items) - 1
                                    and self.items[i - 1][0] == "v"
                                    and self.items[i + 1][0] == "v"):
                raise ValueError("every arc must sit between two vertices")

    def __eq__(self, other) -> bool:
        return isinstance(other, MultiWalk) and self.items == other.items

    def __hash__(self) -> int:
        return hash(self.items)

    def __repr__(self) -> str:
        return f"MultiWalk({list(self.items)!r})"

    def components(self) -> list[Walk]:
        comps: list[Walk] = []
        verts: list = []
        arcs: list = []
        prev = None
        for kind, x in self.items:
            if kind == "v":
                if prev == "v":
                    comps.append(Walk(tuple(verts), tuple(arcs)))
                    verts, arcs = [], []
                verts.append(x)
            else:
                arcs.append(x)
            prev = kind
        if verts:
            comps.append(Walk(tuple(verts), tuple(arcs)))
        return comps


def _dfs(graph: Digraph, origin: int, max_len: int,
         visit: Callable[[list[int], list[int]], None], first_arc: int | None = None) -> None:
    """Depth-first traversal of all SAWs from origin with at most max_len arcs.

    ``visit(path, arcs)`` is called once per walk, in ascending arc-id order,
    with the live (mutable) vertex and arc stacks.  With ``first_arc`` only
    walks starting with that arc are visited (the unit of parallel work).
    """
    head = graph.head
    out = graph._out
    on_path = bytearray(graph.n)
    on_path[origin] = 1
    path = [origin]
    arcs: list[int] = []
    if first_arc is not None:
        if graph.tail[first_arc] != origin:
            raise ValueError("first arc does not leave the origin")
        if max_len == 0:
            return
        path.append(head[first_arc])
        arcs.append(first_arc)
        on_path[head[first_arc]] = 1
    floor = len(arcs)
    visit(path, arcs)
    if max_len == floor:
        return
    cursor = [0]
    while cursor:
        v = path[-1]
        options = out[v]
        i = cursor[-1]
        while i < len(options) and on_path[head[options[i]]]:
            i += 1
        if i == len(options):
            cursor.pop()
            if len(arcs) > floor:
                arcs.pop()
                on_path[path.pop()] = 0
            continue
        cursor[-1] = i + 1
        a = options[i]
        w = head[a]
        path.append(w)
        arcs.append(a)
        on_path[w] = 1
        visit(path, arcs)
        if len(arcs) < max_len:
            cursor.append(0)
        else:
            arcs.pop()
            on_path[path.pop()] = 0


def enumerate_saws(graph: Digraph, origin: int, max_len: int) -> list[int]:
    """counts[n] = number of self-avoiding walks of length n from origin."""
    if not 0 <= origin < graph.n:
        raise ValueError("origin outside the graph")
    if max_len < 0:
        raise ValueError("max_len must be nonnegative")
    counts = [0] * (max_len + 1)

    def visit(path, arcs):
        counts[len(arcs)] += 1

    _dfs(graph, origin, max_len, visit)
    return counts


def iter_saws(graph: Digraph, origin: int, max_len: int) -> Iterator[Walk]:
    """Stream every SAW from origin of length <= max_len exactly once, in
    depth-first order with arcs tried by ascending id."""
    if not 0 <= origin < graph.n:
        raise ValueError("origin outside the graph")
    head = graph.head
    out = graph._out
    on_path = bytearray(graph.n)
    on_path[origin] = 1
    path = [origin]
    arcs: list[int] = []
    yield Walk((origin,))
    cursor = [0] if max_len > 0 else []
    while cursor:
        options = out[path[-1]]
        i = cursor[-1]
        while i < len(options) and on_path[head[options[i]]]:
            i += 1
        if i == len(options):
            cursor.pop()
            if arcs:
                arcs.pop()
                on_path[path.pop()] = 0
            continue
        cursor[-1] = i + 1
        a = options[i]
        path.append(head[a])
        arcs.append(a)
        on_path[head[a]] = 1
        yield Walk(tuple(path), tuple(arcs))
        if len(arcs) < max_len:
            cursor.append(0)
        else:
            arcs.pop()
            on_path[path.pop()] = 0


def enumerate_closed(graph: Digraph, origin: int, max_len: int) -> tuple[list[int], list[int]]:
    """Self-avoiding returns and polygons through origin.

    SAR[n] counts SAWs of length n from origin ending at a neighbour of
    origin.  SAP[n] counts polygons of length n through origin, identified by
    their edge set.  On a simple graph each polygon of length n >= 3 comes
    from exactly two returns of length n - 1 closed by the final edge.
    """
    if not 0 <= origin < graph.n:
        raise ValueError("origin outside the graph")
    sar = [0] * (max_len + 1)
    closing = [0] * (max_len + 2)
    near = bytearray(graph.n)
    for w in graph.neighbours(origin):
        near[w] = 1

    def visit(path, arcs):
        n = len(arcs)
        if n and near[path[-1]]:
            sar[n] += 1
            if n >= 2:
                closing[n + 1] += 1

    _dfs(graph, origin, max_len, visit)
    sap = [0] * (max_len + 1)
    for n in range(3, max_len + 1):
        sap[n] = closing[n] // 2
    return sar, sap


def bfs_distances(graph: Digraph, source: int) -> list[int]:
    """Distances from source; -1 marks unreachable vertices."""
    dist = [-1] * graph.n
    dist[source] = 0
    queue = deque([source])
    head = graph.head
    out = graph._out
    while queue:
        v = queue.popleft()
        for a in out[v]:
            w = head[a]
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def graph_distance(graph: Digraph, u: int, v: int):
    """Length of a shortest walk from u to v, or UNREACHABLE."""
    d = bfs_distances(graph, u)[v]
    return UNREACHABLE if d < 0 else d
