"""Color refinement (1-WL) with exact canonical renumbering.

Colors are dense integer ids. Each round the signature
``(old color, sorted neighbor colors)`` of every vertex is computed and the
distinct signatures are numbered in sorted order, so ids are reproducible and
comparable between vertices of the same (possibly disjoint-union) graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .graphs import GraphError, LabeledGraph, RootedGraph


@dataclass(frozen=True)
class Coloring:
    colors: tuple[int, ...]
    round: int = 0

    @property
    def num_classes(self) -> int:
        return len(set(self.colors))

    def classes(self) -> list[list[int]]:
        groups: dict[int, list[int]] = {}
        for v, c in enumerate(self.colors):
            groups.setdefault(c, []).append(v)
        return [groups[c] for c in sorted(groups)]


@dataclass(frozen=True)
class RefinementTrace:
    """Colorings from round 0 onwards.

    ``stable_round`` is the first round whose successor induces the same
    partition, or ``None`` if the run was cut off by ``max_rounds`` first.
    Rounds past the last stored one have the last stored partition.
    """

    colorings: tuple[Coloring, ...]
    stable_round: int | None

    def at(self, t: int) -> Coloring:
        if t < 0:
            raise ValueError("round must be nonnegative")
        if t < len(self.colorings):
            return self.colorings[t]
        if self.stable_round is None:
            raise ValueError(f"round {t} was not computed")
        return self.colorings[-1]

    def to_json(self) -> dict:
        return {
            "rounds": [list(c.colors) for c in self.colorings],
            "stable_round": self.stable_round,
        }


def _renumber(keys: Sequence) -> tuple[int, ...]:
    ranks = {k: i for i, k in enumerate(sorted(set(keys)))}
    return tuple(ranks[k] for k in keys)


def initial_coloring(g: LabeledGraph) -> Coloring:
    return Coloring(_renumber(g.labels), 0)


def cr_step(g: LabeledGraph, c: Coloring) -> Coloring:
    if len(c.colors) != g.n:
        raise GraphError(f"coloring covers {len(c.colors)} vertices, graph has {g.n}")
    col = c.colors
    sigs = [
        (col[v], tuple(sorted(col[w] for w in g.neighbors[v])))
        for v in range(g.n)
    ]
    return Coloring(_renumber(sigs), c.round + 1)


def cr_run(g: LabeledGraph, max_rounds: int | None = None) -> RefinementTrace:
    """Refine from the label coloring until stable or until ``max_rounds`` rounds are stored."""
    if max_rounds is not None and max_rounds < 0:
        raise ValueError("max_rounds must be nonnegative")
    cur = initial_coloring(g)
    rounds = [cur]
    while max_rounds is None or cur.round < max_rounds:
        nxt = cr_step(g, cur)
        # the new partition refines the old one, so equal class counts mean equal partitions
        if nxt.num_classes == cur.num_classes:
            return RefinementTrace(tuple(rounds), cur.round)
        rounds.append(nxt)
        cur = nxt
    return RefinementTrace(tuple(rounds), None)


def refines(fine: Sequence, coarse: Sequence) -> bool:
    """True iff equal values in ``fine`` always imply equal values in ``coarse``."""
    seen: dict = {}
    for f, c in zip(fine, coarse, strict=True):
        if seen.setdefault(f, c) != c:
            return False
    return True


def cr_compare(a: RootedGraph, b: RootedGraph, t: int) -> bool:
    """True iff ``t`` rounds of color refinement separate the two roots.

    Refinement runs on the disjoint union so color ids are shared.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    union = a.graph.disjoint_union(b.graph)
    trace = cr_run(union, t)
    col = trace.at(t).colors
    return col[a.root] != col[a.graph.n + b.root]


def first_separating_round(a: RootedGraph, b: RootedGraph) -> int | None:
    """Smallest ``t`` at which refinement separates the roots, or ``None`` if never."""
    union = a.graph.disjoint_union(b.graph)
    trace = cr_run(union)
    for c in trace.colorings:
        if c.colors[a.root] != c.colors[a.graph.n + b.root]:
            return c.round
    return None
