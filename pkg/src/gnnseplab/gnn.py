"""Feedforward combine networks and recurrent sum-aggregation GNNs.

Weights and biases are always :class:`fractions.Fraction`.  Evaluation is
generic over a :class:`~gnnseplab.fields.ScalarField`; the rational field
only accepts piecewise-polynomial activations.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import gmpy2

from .fields import RATIONAL, Interval, ScalarField, UnsupportedFieldError
from .graphs import DegreeSpec, LabeledGraph, make_tree

ANALYTIC_NAMES = ("exp", "sigmoid", "tanh", "sinh", "cosh")


class ModelError(ValueError):
    """Malformed network description or dimension mismatch."""


def _frac(x) -> Fraction:
    if isinstance(x, float):
        raise ModelError(f"float {x!r} not accepted; give rationals as 'p/q' strings")
    try:
        return Fraction(x)
    except (ValueError, TypeError) as exc:
        raise ModelError(f"not a rational: {x!r}") from exc


def _trim(coeffs: Sequence[Fraction]) -> tuple[Fraction, ...]:
    cs = list(coeffs)
    while cs and cs[-1] == 0:
        cs.pop()
    return tuple(cs)


@dataclass(frozen=True)
class Piecewise:
    """Univariate piecewise polynomial.

    Piece ``i`` (coefficients low to high degree) applies on
    ``[breakpoints[i-1], breakpoints[i])`` with the outer ends unbounded.
    """

    breakpoints: tuple[Fraction, ...]
    pieces: tuple[tuple[Fraction, ...], ...]
    label: str | None = None

    def __post_init__(self) -> None:
        bps = tuple(_frac(b) for b in self.breakpoints)
        pieces = tuple(_trim(_frac(c) for c in p) for p in self.pieces)
        if any(b >= c for b, c in zip(bps, bps[1:])):
            raise ModelError("breakpoints must be strictly increasing")
        if len(pieces) != len(bps) + 1:
            raise ModelError(f"{len(bps)} breakpoints need {len(bps) + 1} pieces, got {len(pieces)}")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "pieces", pieces)

    @property
    def num_pieces(self) -> int:
        return len(self.pieces)

    @property
    def degree(self) -> int:
        return max((len(p) - 1 for p in self.pieces), default=0)

    def piece_index(self, x: Fraction) -> int:
        return bisect_right(self.breakpoints, x)

    def to_json(self):
        if self.label is not None:
            return self.label
        return {
            "piecewise": {
                "breakpoints": [str(b) for b in self.breakpoints],
                "pieces": [[str(c) for c in p] for p in self.pieces],
            }
        }


@dataclass(frozen=True)
class Analytic:
    name: str

    def __post_init__(self) -> None:
        if self.name not in ANALYTIC_NAMES:
            raise ModelError(f"unknown analytic activation {self.name!r}")

    def to_json(self):
        return self.name


ActivationSpec = Piecewise | Analytic

RELU = Piecewise((Fraction(0),), ((), (Fraction(0), Fraction(1))), label="relu")
IDENTITY = Piecewise((), ((Fraction(0), Fraction(1)),), label="identity")


def activation_from_json(data) -> ActivationSpec:
    if data == "relu":
        return RELU
    if data == "identity":
        return IDENTITY
    if isinstance(data, str):
        return Analytic(data)
    if isinstance(data, dict) and "piecewise" in data:
        pw = data["piecewise"]
        try:
            return Piecewise(tuple(pw["breakpoints"]), tuple(tuple(p) for p in pw["pieces"]))
        except (KeyError, TypeError) as exc:
            raise ModelError(f"malformed piecewise activation: {exc}") from exc
    raise ModelError(f"unrecognised activation {data!r}")


def _horner(coeffs: Sequence[Fraction], x, field: ScalarField):
    acc = field.const(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _endpoint_piece(act: Piecewise, v) -> int:
    if gmpy2.is_infinite(v):
        return 0 if v < 0 else act.num_pieces - 1
    return act.piece_index(Fraction(*v.as_integer_ratio()))


def activation_eval(act: ActivationSpec, x, field: ScalarField = RATIONAL, trace: list | None = None):
    """Apply ``act`` to a scalar of ``field``.

    With a trace list, the index of the piece used is appended (``-1`` when an
    interval straddles a breakpoint and several pieces were hulled).
    """
    if isinstance(act, Analytic):
        if field.exact:
            raise UnsupportedFieldError(f"activation {act.name!r} needs an interval field")
        if not isinstance(x, Interval):
            x = field.const(x)
        if trace is not None:
            trace.append(0)
        return getattr(x, act.name)()
    if field.exact:
        i = act.piece_index(x)
        if trace is not None:
            trace.append(i)
        return _horner(act.pieces[i], x, field)
    if not isinstance(x, Interval):
        x = field.const(x)
    # pieces whose half-open domain meets [lo, hi]
    first = _endpoint_piece(act, x.lo)
    last = _endpoint_piece(act, x.hi)
    out = None
    for i in range(first, last + 1):
        part = x
        if first != last:
            lo, hi = x.lo, x.hi
            if i > first:
                lo = max(lo, field.const(act.breakpoints[i - 1]).lo)
            if i < last:
                hi = min(hi, field.const(act.breakpoints[i]).hi)
            part = Interval(lo, hi, x.prec)
        y = _horner(act.pieces[i], part, field)
        out = y if out is None else out.hull(y)
    if trace is not None:
        trace.append(first if first == last else -1)
    return out


@dataclass(frozen=True)
class Layer:
    weights: tuple[tuple[Fraction, ...], ...]
    bias: tuple[Fraction, ...]
    activation: ActivationSpec = IDENTITY

    def __post_init__(self) -> None:
        w = tuple(tuple(_frac(x) for x in row) for row in self.weights)
        b = tuple(_frac(x) for x in self.bias)
        if not w or len({len(r) for r in w}) != 1 or not w[0]:
            raise ModelError("weight matrix must be a nonempty rectangle")
        if len(b) != len(w):
            raise ModelError(f"bias has {len(b)} entries, weight matrix has {len(w)} rows")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return len(self.weights[0])

    @property
    def out_dim(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class FeedForwardNet:
    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        layers = tuple(self.layers)
        if not layers:
            raise ModelError("a network needs at least one layer")
        for i, (a, b) in enumerate(zip(layers, layers[1:])):
            if a.out_dim != b.in_dim:
                raise ModelError(f"layer {i} outputs {a.out_dim} values, layer {i + 1} expects {b.in_dim}")
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def is_piecewise(self) -> bool:
        return all(isinstance(l.activation, Piecewise) for l in self.layers)

    @property
    def degree(self) -> int:
        """Degree of the network as a piecewise polynomial map (product of layer degrees)."""
        if not self.is_piecewise:
            raise UnsupportedFieldError("degree is only defined for piecewise-polynomial networks")
        d = 1
        for l in self.layers:
            d *= max(1, l.activation.degree)
        return d

    @property
    def max_pieces(self) -> int:
        return max(l.activation.num_pieces for l in self.layers if isinstance(l.activation, Piecewise))


def nn_eval(net: FeedForwardNet, x: Sequence, field: ScalarField = RATIONAL, trace: list | None = None) -> tuple:
    if len(x) != net.input_dim:
        raise ModelError(f"network expects {net.input_dim} inputs, got {len(x)}")
    h = list(x)
    zero = field.const(0)
    for layer in net.layers:
        out = []
        for row, b in zip(layer.weights, layer.bias):
            z = zero + b
            for w, xi in zip(row, h):
                if w:
                    z = z + w * xi
            out.append(activation_eval(layer.activation, z, field, trace))
        h = out
    return tuple(h)


@dataclass(frozen=True)
class RecurrentGNN:
    """``xi^{t+1}(v) = comb(xi^t(v), sum of xi^t over neighbours)`` with ``comb: R^{2d} -> R^d``."""

    comb: FeedForwardNet
    d: int

    def __post_init__(self) -> None:
        if self.comb.input_dim != 2 * self.d or self.comb.output_dim != self.d:
            raise ModelError(
                f"combine network maps {self.comb.input_dim} -> {self.comb.output_dim}, "
                f"expected {2 * self.d} -> {self.d}"
            )

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "layers": [
                {
                    "weights": [[str(w) for w in row] for row in l.weights],
                    "bias": [str(b) for b in l.bias],
                    "activation": l.activation.to_json(),
                }
                for l in self.comb.layers
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> RecurrentGNN:
        if not isinstance(data, dict):
            raise ModelError("model JSON must be an object")
        try:
            d = int(data["d"])
            layers = tuple(
                Layer(
                    tuple(tuple(r) for r in ld["weights"]),
                    tuple(ld["bias"]),
                    activation_from_json(ld.get("activation", "identity")),
                )
                for ld in data["layers"]
            )
        except KeyError as exc:
            raise ModelError(f"model JSON missing field {exc}") from exc
        return cls(FeedForwardNet(layers), d)


def _vadd(a: Sequence, b: Sequence) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def _indicator(color: int, d: int, field: ScalarField) -> tuple:
    return tuple(field.const(1 if i == color - 1 else 0) for i in range(d))


def gnn_run(gnn: RecurrentGNN, graph: LabeledGraph, T: int, field: ScalarField = RATIONAL) -> list[list[tuple]]:
    """Embeddings ``table[t][v]`` for ``t = 0..T``."""
    if T < 0:
        raise ValueError("T must be nonnegative")
    if graph.num_colors > gnn.d:
        raise ModelError(f"{graph.num_colors} colors do not fit embedding dimension {gnn.d}")
    zero = tuple(field.const(0) for _ in range(gnn.d))
    cur = [_indicator(c, gnn.d, field) for c in graph.labels]
    table = [cur]
    for _ in range(T):
        nxt = []
        for v in range(graph.n):
            agg = zero
            for w in graph.neighbors[v]:
                agg = _vadd(agg, cur[w])
            nxt.append(nn_eval(gnn.comb, cur[v] + agg, field))
        cur = nxt
        table.append(cur)
    return table


def root_embedding_seq(gnn: RecurrentGNN, spec: DegreeSpec, T: int, field: ScalarField = RATIONAL) -> tuple[tuple, ...]:
    """Root embeddings ``(xi^0(s), ..., xi^T(s))`` of ``T[spec]``, evaluated on the full tree."""
    tree = make_tree(spec)
    table = gnn_run(gnn, tree.graph, T, field)
    return tuple(row[tree.root] for row in table)


def _scale(k: int, v: tuple) -> tuple:
    return tuple(k * x for x in v)


def orbit_root_seq(
    gnn: RecurrentGNN,
    ks: Sequence[int],
    T: int,
    field: ScalarField = RATIONAL,
    trace: list | None = None,
) -> tuple[tuple, ...]:
    """Root embeddings of ``T[ks]`` computed on one representative per vertex orbit.

    The leaves under ``x_i`` all share one embedding, so a step only needs the
    root, each ``x_i`` and one leaf per ``x_i``; the ``k_i - 1`` leaves enter
    as a multiple.  ``ks`` is taken in the given order.  A leaf representative
    is tracked even when ``k_i = 1``: its coefficient is then zero, which
    keeps the gate pattern (appended to ``trace`` per iteration in the order
    root, ``x_1..x_m``, leaves ``1..m``) the same length for every ``ks``.
    """
    d = gnn.d
    m = len(ks)
    comb = gnn.comb
    e = _indicator(1, d, field)
    root, xs, leaves = e, [e] * m, [e] * m
    out = [root]
    for _ in range(T):
        agg = xs[0]
        for x in xs[1:]:
            agg = _vadd(agg, x)
        new_root = nn_eval(comb, root + agg, field, trace)
        new_xs = [
            nn_eval(comb, xs[i] + _vadd(root, _scale(ks[i] - 1, leaves[i])), field, trace)
            for i in range(m)
        ]
        new_leaves = [nn_eval(comb, leaves[i] + xs[i], field, trace) for i in range(m)]
        root, xs, leaves = new_root, new_xs, new_leaves
        out.append(root)
    return tuple(out)


def region_signature(gnn: RecurrentGNN, ks: Sequence[int], T: int) -> tuple[int, ...]:
    trace: list[int] = []
    orbit_root_seq(gnn, ks, T, RATIONAL, trace)
    return tuple(trace)


# Small constructors used throughout the experiments.

def identity_sum_gnn() -> RecurrentGNN:
    """``comb(x1, x2) = x1 + x2`` in dimension one."""
    return RecurrentGNN(FeedForwardNet((Layer(((1, 1),), (0,), IDENTITY),)), 1)


def perceptron_gnn(activation: ActivationSpec | str) -> RecurrentGNN:
    """One neuron ``comb(x1, x2) = act(x1 + x2)`` with unit weights and zero bias."""
    if isinstance(activation, str):
        activation = activation_from_json(activation)
    return RecurrentGNN(FeedForwardNet((Layer(((1, 1),), (0,), activation),)), 1)


def _random_rational(rng: random.Random, max_num: int, max_den: int) -> Fraction:
    return Fraction(rng.randint(-max_num, max_num), rng.randint(1, max_den))


def random_relu_gnn(
    rng: random.Random,
    d: int = 1,
    hidden: int | None = None,
    max_num: int = 4,
    max_den: int = 4,
) -> RecurrentGNN:
    """ReLU hidden layer of width ``hidden`` (random in 1..3 if omitted) followed by a linear readout."""
    if hidden is None:
        hidden = rng.randint(1, 3)
    w1 = tuple(tuple(_random_rational(rng, max_num, max_den) for _ in range(2 * d)) for _ in range(hidden))
    b1 = tuple(_random_rational(rng, max_num, max_den) for _ in range(hidden))
    w2 = tuple(tuple(_random_rational(rng, max_num, max_den) for _ in range(hidden)) for _ in range(d))
    b2 = tuple(_random_rational(rng, max_num, max_den) for _ in range(d))
    return RecurrentGNN(FeedForwardNet((Layer(w1, b1, RELU), Layer(w2, b2, IDENTITY))), d)
