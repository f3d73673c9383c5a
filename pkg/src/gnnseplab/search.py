"""Collision search for bounded piecewise-polynomial GNNs and certified root separation.

All collision work is exact: sequences of root embeddings are compared as
tuples of lowest-terms rationals.  Separation for analytic activations uses
interval enclosures and only reports distinctness when they are disjoint.
"""

from __future__ import annotations

import enum
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .fields import RATIONAL, IntervalField, UnsupportedFieldError
from .gnn import ANALYTIC_NAMES, IDENTITY, RecurrentGNN, activation_from_json, gnn_run, orbit_root_seq, perceptron_gnn, root_embedding_seq
from .graphs import DegreeSpec, LabeledGraph, make_tree, specs_up_to_vertices, tree_isomorphic
from .refine import cr_compare, cr_run, first_separating_round

log = logging.getLogger(__name__)


class UnsupportedActivationError(UnsupportedFieldError):
    pass


def enumerate_specs(m: int, M: int) -> Iterator[DegreeSpec]:
    """Every nondecreasing ``k`` in ``{1..M}^m`` once, lexicographically."""
    for ks in itertools.combinations_with_replacement(range(1, M + 1), m):
        yield DegreeSpec(ks)


def _specs_with_max(m: int, M: int) -> list[tuple[int, ...]]:
    return [ks + (M,) for ks in itertools.combinations_with_replacement(range(1, M + 1), m - 1)]


@dataclass(frozen=True)
class CollisionResult:
    spec_a: DegreeSpec
    spec_b: DegreeSpec
    iterations_checked: int
    seq_a: tuple
    seq_b: tuple
    cr_round_distinguished: int

    def to_json(self) -> dict:
        return {
            "spec_a": list(self.spec_a.degrees),
            "spec_b": list(self.spec_b.degrees),
            "iterations_checked": self.iterations_checked,
            "seq_a": [[str(x) for x in v] for v in self.seq_a],
            "seq_b": [[str(x) for x in v] for v in self.seq_b],
            "cr_round_distinguished": self.cr_round_distinguished,
        }


def _require_exact(gnn: RecurrentGNN) -> None:
    if not gnn.comb.is_piecewise:
        raise UnsupportedActivationError(
            "collision search needs piecewise-polynomial activations; analytic ones admit no collisions"
        )


def _keys(gnn: RecurrentGNN, I: int, chunk: Sequence[tuple[int, ...]]) -> list[tuple]:
    return [orbit_root_seq(gnn, ks, I, RATIONAL) for ks in chunk]


def verify_collision(gnn: RecurrentGNN, I: int, a: DegreeSpec, b: DegreeSpec) -> bool:
    """Exact check on the full trees: equal root sequences up to ``I``, different multisets, CR separates at round 2."""
    _require_exact(gnn)
    if tree_isomorphic(a, b):
        return False
    if root_embedding_seq(gnn, a, I, RATIONAL) != root_embedding_seq(gnn, b, I, RATIONAL):
        return False
    return cr_compare(make_tree(a), make_tree(b), 2)


def find_collision(
    gnn: RecurrentGNN,
    I: int,
    m_values: Iterable[int],
    M_max: int,
    threads: int = 1,
) -> CollisionResult | None:
    """Search small trees for two non-isomorphic roots the GNN cannot separate through iteration ``I``.

    For each ``m`` the box side grows from 1 to ``M_max``; at side ``M`` only
    the specs with largest entry ``M`` are new.  The first repeated sequence
    is verified on the full trees and returned.  ``None`` means the budget
    was exhausted, not that no collision exists.
    """
    _require_exact(gnn)
    pool = ProcessPoolExecutor(threads) if threads > 1 else None
    try:
        for m in m_values:
            seen: dict[tuple, tuple[int, ...]] = {}
            for M in range(1, M_max + 1):
                batch = _specs_with_max(m, M)
                if pool is not None and len(batch) >= 64 * threads:
                    size = -(-len(batch) // threads)
                    chunks = [batch[i:i + size] for i in range(0, len(batch), size)]
                    keys = list(itertools.chain.from_iterable(
                        pool.map(_keys, itertools.repeat(gnn), itertools.repeat(I), chunks)
                    ))
                else:
                    keys = _keys(gnn, I, batch)
                for ks, key in zip(batch, keys):
                    prev = seen.get(key)
                    if prev is None:
                        seen[key] = ks
                        continue
                    a, b = DegreeSpec(prev), DegreeSpec(ks)
                    if not verify_collision(gnn, I, a, b):
                        raise AssertionError(f"orbit evaluation and full-tree evaluation disagree on {a} / {b}")
                    log.info("collision %s / %s at m=%d, M=%d", a, b, m, M)
                    return CollisionResult(
                        a,
                        b,
                        I,
                        root_embedding_seq(gnn, a, I),
                        root_embedding_seq(gnn, b, I),
                        first_separating_round(make_tree(a), make_tree(b)),
                    )
            log.info("no collision for m=%d up to M=%d (%d specs)", m, M_max, len(seen))
    finally:
        if pool is not None:
            pool.shutdown()
    return None


class Verdict(enum.Enum):
    ISOMORPHIC = "isomorphic"
    DISTINCT_CERTIFIED = "distinct_certified"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class SeparationVerdict:
    verdict: Verdict
    bits: int | None = None

    def to_json(self) -> dict:
        return {"verdict": self.verdict.value, "bits": self.bits}


def _check_analytic(activation: str) -> None:
    if activation not in ANALYTIC_NAMES:
        raise UnsupportedActivationError(
            f"unsupported activation {activation!r}; expected one of {', '.join(ANALYTIC_NAMES)}"
        )


def root_enclosure(activation: str, spec: DegreeSpec, bits: int):
    """Interval around ``xi^2(s)`` of the one-neuron perceptron on ``T[spec]``, via the full tree."""
    gnn = perceptron_gnn(activation)
    return root_embedding_seq(gnn, spec, 2, IntervalField(bits))[2][0]


def _precisions(max_bits: int, start_bits: int = 64) -> list[int]:
    bits = [min(start_bits, max_bits)]
    while bits[-1] < max_bits:
        bits.append(min(2 * bits[-1], max_bits))
    return bits


def separate_roots(activation: str, a: DegreeSpec, b: DegreeSpec, max_bits: int = 512) -> SeparationVerdict:
    _check_analytic(activation)
    if tree_isomorphic(a, b):
        return SeparationVerdict(Verdict.ISOMORPHIC)
    for bits in _precisions(max_bits):
        if root_enclosure(activation, a, bits).disjoint(root_enclosure(activation, b, bits)):
            return SeparationVerdict(Verdict.DISTINCT_CERTIFIED, bits)
    return SeparationVerdict(Verdict.UNDECIDED, max_bits)


def multiset_exp_oracle(alpha: Sequence[int], alpha_prime: Sequence[int]) -> bool:
    """Decide ``sum exp(alpha_i) == sum exp(alpha'_i)`` for integer exponents by multiset equality."""
    if any(a < 0 for a in itertools.chain(alpha, alpha_prime)):
        raise ValueError("exponents must be nonnegative integers")
    return sorted(alpha) == sorted(alpha_prime)


def separation_exponents(spec: DegreeSpec) -> list[int]:
    """Arguments of the inner activations at the root: ``1 + m`` then each ``k_i + 1``."""
    return [1 + spec.m] + [k + 1 for k in spec.degrees]


@dataclass
class SeparationReport:
    activation: str
    max_total_vertices: int
    max_bits: int
    num_specs: int = 0
    pairs: int = 0
    certified: int = 0
    undecided: int = 0
    max_bits_used: int = 0
    oracle_disagreements: int = 0
    undecided_pairs: list = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.undecided == 0 and self.oracle_disagreements == 0

    def to_json(self) -> dict:
        return {
            "activation": self.activation,
            "max_total_vertices": self.max_total_vertices,
            "max_bits": self.max_bits,
            "num_specs": self.num_specs,
            "pairs": self.pairs,
            "certified": self.certified,
            "undecided": self.undecided,
            "max_bits_used": self.max_bits_used,
            "oracle_disagreements": self.oracle_disagreements,
            "undecided_pairs": [[list(a.degrees), list(b.degrees)] for a, b in self.undecided_pairs],
            "success": self.success,
        }


def exhaustive_separation(activation: str, max_total_vertices: int, max_bits: int = 512) -> SeparationReport:
    """Certify every non-isomorphic pair among trees with at most ``max_total_vertices`` vertices.

    Equivalent to calling :func:`separate_roots` on every pair, but each tree's
    enclosure is computed once per precision and only pairs still overlapping
    move on to the next doubling.
    """
    _check_analytic(activation)
    specs = specs_up_to_vertices(max_total_vertices)
    rep = SeparationReport(activation, max_total_vertices, max_bits, num_specs=len(specs))
    pending = list(itertools.combinations(specs, 2))
    rep.pairs = len(pending)
    for a, b in pending:
        if multiset_exp_oracle(separation_exponents(a), separation_exponents(b)):
            rep.oracle_disagreements += 1
    for bits in _precisions(max_bits):
        if not pending:
            break
        encl = {}
        for s in {s for pair in pending for s in pair}:
            encl[s] = root_enclosure(activation, s, bits)
        still = [(a, b) for a, b in pending if not encl[a].disjoint(encl[b])]
        rep.certified += len(pending) - len(still)
        rep.max_bits_used = bits
        pending = still
    rep.undecided = len(pending)
    rep.undecided_pairs = pending
    return rep


def check_cr_refines_gnn(gnn: RecurrentGNN, graph: LabeledGraph, d: int) -> bool:
    """True iff ``d`` rounds of refinement equal implies ``d`` GNN iterations equal, for every vertex pair."""
    _require_exact(gnn)
    colors = cr_run(graph, d).at(d).colors
    emb = gnn_run(gnn, graph, d, RATIONAL)[d]
    rep: dict[int, tuple] = {}
    for v, c in enumerate(colors):
        if rep.setdefault(c, emb[v]) != emb[v]:
            return False
    return True


def depth_one_separation(d1: int, d2: int, activation: str = "identity", max_bits: int = 512) -> bool:
    """Separate the centres of stars with ``d1`` and ``d2`` leaves in one iteration of ``x1 + x2 -> act``.

    The root embedding is ``act(1 + degree)``; exact for identity, certified by
    disjoint intervals for analytic activations.
    """
    if d1 == d2:
        return False
    a, b = DegreeSpec([1] * d1), DegreeSpec([1] * d2)
    if activation == "identity":
        gnn = perceptron_gnn(IDENTITY)
        return root_embedding_seq(gnn, a, 1)[1] != root_embedding_seq(gnn, b, 1)[1]
    _check_analytic(activation)
    gnn = perceptron_gnn(activation_from_json(activation))
    for bits in _precisions(max_bits):
        field_ = IntervalField(bits)
        ya = root_embedding_seq(gnn, a, 1, field_)[1][0]
        yb = root_embedding_seq(gnn, b, 1, field_)[1][0]
        if ya.disjoint(yb):
            return True
    return False
