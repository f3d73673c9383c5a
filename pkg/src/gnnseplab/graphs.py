"""Vertex-labeled graphs and the depth-two tree family ``T[k_1, ..., k_m]``."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence


class GraphError(ValueError):
    """Raised for structurally invalid graphs or permutations."""


class InvalidSpecError(ValueError):
    """Raised when a degree multiset contains an entry below 1 or is empty."""


@dataclass(frozen=True)
class LabeledGraph:
    """Finite simple graph on vertices ``0..n-1`` with one color in ``1..num_colors`` per vertex.

    Edges are stored as sorted ``(u, v)`` pairs with ``u < v``.
    """

    n: int
    edges: frozenset[tuple[int, int]]
    labels: tuple[int, ...]
    num_colors: int = 1

    def __init__(
        self,
        n: int,
        edges: Iterable[Sequence[int]] = (),
        labels: Sequence[int] | None = None,
        num_colors: int | None = None,
    ) -> None:
        if n < 0:
            raise GraphError(f"vertex count must be nonnegative, got {n}")
        norm = set()
        for e in edges:
            u, v = (int(x) for x in e)
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            pair = (u, v) if u < v else (v, u)
            if pair in norm:
                raise GraphError(f"duplicate edge {pair}")
            norm.add(pair)
        labels = tuple(int(c) for c in labels) if labels is not None else (1,) * n
        if len(labels) != n:
            raise GraphError(f"expected {n} labels, got {len(labels)}")
        if num_colors is None:
            num_colors = max(labels, default=1)
        if num_colors < 1:
            raise GraphError("at least one color is required")
        for v, c in enumerate(labels):
            if not 1 <= c <= num_colors:
                raise GraphError(f"label {c} of vertex {v} outside 1..{num_colors}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", frozenset(norm))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "num_colors", num_colors)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])

    def disjoint_union(self, other: LabeledGraph) -> LabeledGraph:
        """Place ``other`` after ``self``; its vertex ``v`` becomes ``self.n + v``."""
        off = self.n
        edges = list(self.edges) + [(u + off, v + off) for u, v in other.edges]
        return LabeledGraph(
            self.n + other.n,
            edges,
            self.labels + other.labels,
            max(self.num_colors, other.num_colors),
        )

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "edges": [list(e) for e in sorted(self.edges)],
            "labels": list(self.labels),
        }

    @classmethod
    def from_json(cls, data: dict) -> LabeledGraph:
        try:
            n = int(data["n"])
            edges = data.get("edges", [])
            labels = data.get("labels")
        except (KeyError, TypeError) as exc:
            raise GraphError(f"malformed graph JSON: missing field {exc}") from exc
        return cls(n, edges, labels)


@dataclass(frozen=True, order=True)
class DegreeSpec:
    """Multiset ``{{k_1, ..., k_m}}`` of depth-one degrees, kept sorted."""

    degrees: tuple[int, ...]

    def __init__(self, degrees: Iterable[int]) -> None:
        ks = tuple(sorted(int(k) for k in degrees))
        if not ks:
            raise InvalidSpecError("a degree spec needs at least one entry")
        if ks[0] < 1:
            raise InvalidSpecError(f"degrees must be >= 1, got {list(ks)}")
        object.__setattr__(self, "degrees", ks)

    @property
    def m(self) -> int:
        return len(self.degrees)

    @property
    def vertex_count(self) -> int:
        # 1 + m + sum(k_i - 1)
        return 1 + sum(self.degrees)

    @classmethod
    def parse(cls, text: str) -> DegreeSpec:
        try:
            return cls(int(tok) for tok in text.split(",") if tok.strip())
        except ValueError as exc:
            if isinstance(exc, InvalidSpecError):
                raise
            raise InvalidSpecError(f"cannot parse degree list {text!r}") from exc

    def to_json(self) -> dict:
        return {"degrees": list(self.degrees)}

    @classmethod
    def from_json(cls, data: dict) -> DegreeSpec:
        if not isinstance(data, dict) or "degrees" not in data:
            raise InvalidSpecError("tree spec JSON needs a 'degrees' field")
        return cls(data["degrees"])

    def __str__(self) -> str:
        return "[" + ",".join(map(str, self.degrees)) + "]"


@dataclass(frozen=True)
class RootedGraph:
    graph: LabeledGraph
    root: int = field(default=0)

    def __post_init__(self) -> None:
        if not 0 <= self.root < self.graph.n:
            raise GraphError(f"root {self.root} is not a vertex")


def make_tree(spec: DegreeSpec | Iterable[int]) -> RootedGraph:
    """Build ``T[k_1..k_m]``: root 0, depth-one vertices ``1..m``, then the leaves of each in turn."""
    if not isinstance(spec, DegreeSpec):
        spec = DegreeSpec(spec)
    m = spec.m
    edges = [(0, i + 1) for i in range(m)]
    nxt = m + 1
    for i, k in enumerate(spec.degrees):
        for _ in range(k - 1):
            edges.append((i + 1, nxt))
            nxt += 1
    return RootedGraph(LabeledGraph(nxt, edges), 0)


def tree_isomorphic(a: DegreeSpec, b: DegreeSpec) -> bool:
    return a.degrees == b.degrees


def specs_up_to_vertices(max_vertices: int) -> list[DegreeSpec]:
    """All specs whose tree has at most ``max_vertices`` vertices, ordered by size then lexicographically."""
    out: list[DegreeSpec] = []

    def parts(total: int, smallest: int, acc: list[int]):
        if total == 0:
            yield tuple(acc)
            return
        for k in range(smallest, total + 1):
            acc.append(k)
            yield from parts(total - k, k, acc)
            acc.pop()

    for total in range(1, max_vertices):
        out.extend(DegreeSpec(p) for p in parts(total, 1, []))
    return out


def apply_permutation(g: LabeledGraph, perm: Sequence[int]) -> LabeledGraph:
    """Relabel vertex ``v`` as ``perm[v]``."""
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(g.n)):
        raise GraphError("permutation is not a bijection on the vertex set")
    labels = [0] * g.n
    for v, c in enumerate(g.labels):
        labels[perm[v]] = c
    return LabeledGraph(g.n, [(perm[u], perm[v]) for u, v in g.edges], labels, g.num_colors)


def inverse_permutation(perm: Sequence[int]) -> list[int]:
    inv = [0] * len(perm)
    for v, p in enumerate(perm):
        inv[p] = v
    return inv


def random_graph(rng: random.Random, n: int, p: float = 0.3, num_colors: int = 1) -> LabeledGraph:
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    labels = [rng.randint(1, num_colors) for _ in range(n)]
    return LabeledGraph(n, edges, labels, num_colors)


def complete_graph(n: int) -> LabeledGraph:
    return LabeledGraph(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def path_graph(n: int) -> LabeledGraph:
    return LabeledGraph(n, [(i, i + 1) for i in range(n - 1)])
