"""Sparse multivariate polynomials over Q and the counting bounds built on them.

A :class:`Poly` maps exponent tuples to nonzero :class:`~fractions.Fraction`
coefficients.  :class:`QGeneratedPoly` writes every coefficient as an integer
combination of a fixed list of generators.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .fields import RATIONAL
from .gnn import RecurrentGNN, orbit_root_seq
from .graphs import DegreeSpec

Exp = tuple[int, ...]


class ArityError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class RegionTooSmallError(RuntimeError):
    """Not enough same-region integer points were found within the search radius."""


class ExtractionError(AssertionError):
    """A fitted polynomial disagreed with the network on a held-out point."""


class Poly:
    __slots__ = ("m", "terms")

    def __init__(self, m: int, terms: Mapping[Sequence[int], object] | None = None) -> None:
        self.m = m
        clean: dict[Exp, Fraction] = {}
        for e, c in (terms or {}).items():
            e = tuple(int(x) for x in e)
            if len(e) != m or any(x < 0 for x in e):
                raise ArityError(f"exponent {e} invalid for {m} variables")
            c = Fraction(c)
            if c:
                clean[e] = clean.get(e, Fraction(0)) + c
                if not clean[e]:
                    del clean[e]
        self.terms = clean

    @classmethod
    def const(cls, c, m: int) -> Poly:
        return cls(m, {(0,) * m: c})

    @classmethod
    def var(cls, i: int, m: int) -> Poly:
        e = [0] * m
        e[i] = 1
        return cls(m, {tuple(e): 1})

    @classmethod
    def _raw(cls, m: int, terms: dict[Exp, Fraction]) -> Poly:
        p = cls.__new__(cls)
        p.m = m
        p.terms = terms
        return p

    @property
    def degree(self) -> int:
        """Maximal total degree; ``-1`` for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def _lift(self, other) -> Poly:
        if isinstance(other, Poly):
            if other.m != self.m:
                raise ArityError(f"mixing polynomials in {self.m} and {other.m} variables")
            return other
        return Poly.const(other, self.m)

    def __add__(self, other) -> Poly:
        other = self._lift(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Poly._raw(self.m, out)

    __radd__ = __add__

    def __neg__(self) -> Poly:
        return Poly._raw(self.m, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> Poly:
        return self + (-self._lift(other))

    def __rsub__(self, other) -> Poly:
        return self._lift(other) - self

    def __mul__(self, other) -> Poly:
        other = self._lift(other)
        out: dict[Exp, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Poly._raw(self.m, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, n: int) -> Poly:
        if n < 0:
            raise ValueError("negative power")
        result = Poly.const(1, self.m)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.m == other.m and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == Poly.const(other, self.m)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.m, frozenset(self.terms.items())))

    def __call__(self, x: Sequence) -> Fraction:
        return poly_eval(self, x)

    def permute(self, perm: Sequence[int]) -> Poly:
        """Substitute ``X_i -> X_{perm[i]}``."""
        out = {}
        for e, c in self.terms.items():
            ne = [0] * self.m
            for i, a in enumerate(e):
                ne[perm[i]] += a
            out[tuple(ne)] = c
        return Poly._raw(self.m, out)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "terms": [{"exp": list(e), "coeff": str(c)} for e, c in sorted(self.terms.items())],
        }

    @classmethod
    def from_json(cls, data: dict) -> Poly:
        return cls(int(data["m"]), {tuple(t["exp"]): Fraction(t["coeff"]) for t in data["terms"]})

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items(), key=lambda t: (-sum(t[0]), t[0])):
            mono = "*".join(f"X{i + 1}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(e) if a)
            parts.append(str(c) if not mono else (mono if c == 1 else f"{c}*{mono}"))
        return " + ".join(parts)


def poly_eval(p: Poly, x: Sequence) -> Fraction:
    if len(x) != p.m:
        raise ArityError(f"polynomial in {p.m} variables evaluated at {len(x)} coordinates")
    total = Fraction(0)
    for e, c in p.terms.items():
        term = c
        for xi, a in zip(x, e):
            if a:
                term *= xi**a
        total += term
    return total


def poly_compose(f: Poly, gs: Sequence[Poly]) -> Poly:
    """``f(g_1, ..., g_{d2})`` as a polynomial in the variables of the ``g_j``."""
    if len(gs) != f.m:
        raise ArityError(f"f has {f.m} variables but {len(gs)} substitutions were given")
    if not gs:
        return f
    m = gs[0].m
    if any(g.m != m for g in gs):
        raise ArityError("substituted polynomials must share their variables")
    powers: list[dict[int, Poly]] = [{0: Poly.const(1, m), 1: g} for g in gs]

    def power(j: int, a: int) -> Poly:
        cache = powers[j]
        if a not in cache:
            cache[a] = power(j, a - 1) * gs[j]
        return cache[a]

    out = Poly(m)
    for e, c in f.terms.items():
        term = Poly.const(c, m)
        for j, a in enumerate(e):
            if a:
                term = term * power(j, a)
        out = out + term
    return out


@dataclass(frozen=True, eq=True)
class QGeneratedPoly:
    """``sum_alpha (sum_i coeffs[(alpha, i)] * generators[i]) X^alpha`` with integer ``coeffs``."""

    m: int
    generators: tuple[Fraction, ...]
    coeffs: dict = field(default_factory=dict)

    @property
    def q(self) -> int:
        return len(self.generators)

    @property
    def lambda_max(self) -> int:
        return max((abs(v) for v in self.coeffs.values()), default=0)

    def reconstruct(self) -> Poly:
        terms: dict[Exp, Fraction] = {}
        for (e, i), lam in self.coeffs.items():
            terms[e] = terms.get(e, 0) + lam * self.generators[i]
        return Poly(self.m, terms)


def q_generate(p: Poly) -> QGeneratedPoly:
    """Single generator ``1/D`` with ``D`` the lcm of the coefficient denominators."""
    D = math.lcm(*(c.denominator for c in p.terms.values())) if p.terms else 1
    coeffs = {}
    for e, c in p.terms.items():
        lam = c * D
        assert lam.denominator == 1
        coeffs[(e, 0)] = int(lam)
    return QGeneratedPoly(p.m, (Fraction(1, D),), coeffs)


def _as_symbolic(p: QGeneratedPoly, nvars: int, var_offset: int, gen_offset: int, total: int) -> Poly:
    # X^alpha * S_i in a ring whose extra variables stand for the generators
    terms = {}
    for (e, i), lam in p.coeffs.items():
        ex = [0] * total
        ex[var_offset:var_offset + nvars] = e
        ex[gen_offset + i] += 1
        terms[tuple(ex)] = terms.get(tuple(ex), 0) + lam
    return Poly(total, terms)


def compose_generated(f: QGeneratedPoly, gs: Sequence[QGeneratedPoly]) -> QGeneratedPoly:
    """Generated representation of ``f(g_1, ..., g_{d2})``.

    The generators are treated as indeterminates, the composition is expanded
    with integer coefficients, and every distinct monomial in the generators
    becomes one generator of the result (its value is the product of the
    input generator values).
    """
    if len(gs) != f.m:
        raise ArityError(f"f has {f.m} variables but {len(gs)} substitutions were given")
    d1 = gs[0].m if gs else 0
    if any(g.m != d1 for g in gs):
        raise ArityError("substituted polynomials must share their variables")
    base_values = list(f.generators)
    offsets = []
    for g in gs:
        offsets.append(len(base_values))
        base_values.extend(g.generators)
    nb = len(base_values)
    total = d1 + nb
    # f lives on (Y_1..Y_d2, generators of f); substitute Y_j -> g_j, keep generator symbols
    f_sym = _as_symbolic(f, f.m, 0, f.m, f.m + f.q)
    subs = [_as_symbolic(g, d1, 0, d1 + off, total) for g, off in zip(gs, offsets)]
    subs += [Poly.var(d1 + i, total) for i in range(f.q)]
    expanded = poly_compose(f_sym, subs)

    gen_index: dict[Exp, int] = {}
    coeffs: dict = {}
    for e in sorted(expanded.terms):
        c = expanded.terms[e]
        assert c.denominator == 1
        alpha, mono = e[:d1], e[d1:]
        i = gen_index.setdefault(mono, len(gen_index))
        coeffs[(alpha, i)] = coeffs.get((alpha, i), 0) + int(c)
    generators = [Fraction(1)] * len(gen_index)
    for mono, i in gen_index.items():
        v = Fraction(1)
        for b, a in zip(base_values, mono):
            v *= b**a
        generators[i] = v
    return QGeneratedPoly(d1, tuple(generators), coeffs)


@dataclass(frozen=True)
class BoundParams:
    m: int
    q: int
    T: int
    M: int
    lambda_max: int
    r: int = 1
    n_iters: int = 1

    def __post_init__(self) -> None:
        for name in ("m", "q", "T", "M", "lambda_max", "r", "n_iters"):
            if getattr(self, name) < 1:
                raise PreconditionError(f"{name} must be >= 1")


def value_count_bound(p: BoundParams) -> int:
    """Upper bound on the number of value tuples of ``T`` generated polynomials on the box ``{1..M}^m``."""
    base = 2 * p.lambda_max * p.M**p.q * math.comb(p.m + p.q - 1, p.q) + 1
    return base ** (p.q * p.T)


def multiset_count(M: int, m: int) -> int:
    return math.comb(M + m - 1, m)


def collision_condition(M: int, m: int, q: int, n_iters: int, r: int = 1, lambda_max: int = 1) -> bool:
    """Pigeonhole condition: one polynomial region holds more multisets than there are value tuples.

    Evaluated as ``C(M+m-1, m) > r^n * bound`` to stay in integers.
    """
    rhs = value_count_bound(BoundParams(m, q, n_iters, M, lambda_max))
    return multiset_count(M, m) > r**n_iters * rhs


def min_box_size(m: int, q: int, n_iters: int, r: int = 1, lambda_max: int = 1) -> int:
    """Smallest box side ``M`` satisfying :func:`collision_condition`.

    Requires ``m > q^2 * n_iters``.  Writing ``n = q^2 * n_iters``, the log of
    the left side grows at rate at least ``m/(M+m-1)`` and the log of the right
    side at rate at most ``n/M``, so the condition is monotone in ``M`` from
    ``M0 = n(m-1)/(m-n)`` on.  Below ``M0`` every ``M`` is checked; above it a
    doubling search brackets the crossing and bisection finds it.
    """
    if min(m, q, n_iters, r, lambda_max) < 1:
        raise PreconditionError("all parameters must be >= 1")
    n = q * q * n_iters
    if m <= n:
        raise PreconditionError(f"need m > q^2 * n_iters, got m={m}, q^2*n_iters={n}")

    def ok(M: int) -> bool:
        return collision_condition(M, m, q, n_iters, r, lambda_max)

    m0 = -(-n * (m - 1) // (m - n))
    for M in range(1, m0 + 1):
        if ok(M):
            return M
    lo, hi = m0, max(2 * m0, m0 + 1)
    while not ok(hi):
        lo, hi = hi, 2 * hi
    # ok(hi) holds, ok(lo) fails
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def degree_bound_seq(q0: int, deg_phi: int, T: int) -> list[int]:
    """``q_{t+1} = q_t * deg_phi`` starting from ``max(1, q0)``.

    This bounds degree growth through repeated composition with the combine
    map.  It does not bound the degree of tree root embeddings in ``k``;
    see :func:`tree_degree_bound_seq` for that.
    """
    if deg_phi < 1 or T < 0:
        raise PreconditionError("deg_phi must be >= 1 and T >= 0")
    seq = [max(1, q0)]
    for _ in range(T):
        seq.append(seq[-1] * deg_phi)
    return seq


def tree_degree_bound_seq(deg_phi: int, T: int) -> list[int]:
    """Degree bound in ``k`` for embeddings on ``T[k]``: ``q_0 = 0``, ``q_{t+1} = deg_phi * (q_t + 1)``.

    The ``+1`` accounts for the ``k_i - 1`` identical leaves summed at ``x_i``.
    """
    if deg_phi < 1 or T < 0:
        raise PreconditionError("deg_phi must be >= 1 and T >= 0")
    seq = [0]
    for _ in range(T):
        seq.append(deg_phi * (seq[-1] + 1))
    return seq


def monomials(m: int, q: int) -> list[Exp]:
    """Exponents of total degree at most ``q``, graded then lexicographic."""
    out = []
    for deg in range(q + 1):
        for combo in itertools.combinations_with_replacement(range(m), deg):
            e = [0] * m
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


def distinct_value_count(polys: Sequence[Poly], M: int) -> int:
    """Number of distinct tuples ``(P_1(x), ..., P_T(x))`` for ``x`` in ``{1..M}^m``."""
    m = polys[0].m
    return len({tuple(p(x) for p in polys) for x in itertools.product(range(1, M + 1), repeat=m)})


def solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Solve a square nonsingular system by Gauss-Jordan elimination over Q."""
    n = len(A)
    rows = [list(map(Fraction, r)) + [Fraction(v)] for r, v in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col]), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        rows[col], rows[piv] = rows[piv], rows[col]
        inv = 1 / rows[col][col]
        rows[col] = [v * inv for v in rows[col]]
        for r in range(n):
            if r != col and rows[r][col]:
                f = rows[r][col]
                rows[r] = [a - f * c for a, c in zip(rows[r], rows[col])]
    return [rows[r][n] for r in range(n)]


@dataclass
class RegionFit:
    poly: Poly
    signature: tuple[int, ...]
    degree_bound: int
    fit_points: list[tuple[int, ...]]
    holdout_points: list[tuple[int, ...]]


def _shell(center: Sequence[int], r: int) -> Iterable[tuple[int, ...]]:
    ranges = [range(max(1, c - r), c + r + 1) for c in center]
    for p in itertools.product(*ranges):
        if max(abs(a - c) for a, c in zip(p, center)) == r:
            yield p


def extract_region_poly(
    gnn: RecurrentGNN,
    m: int,
    t: int,
    seed: DegreeSpec | Sequence[int],
    *,
    holdout: int = 20,
    max_radius: int = 8,
    coord: int = 0,
) -> RegionFit:
    """Recover the polynomial piece of ``k -> xi^t(T[k], s)`` on the region of ``seed``.

    Integer points around ``seed`` (in growing L-infinity shells) whose gate
    pattern equals the seed's are collected.  The first ones with linearly
    independent monomial rows (all monomials of degree at most the tree degree
    bound) determine the fit; every other same-pattern point is held out and
    must match exactly.
    """
    ks = tuple(seed.degrees if isinstance(seed, DegreeSpec) else seed)
    if len(ks) != m:
        raise ArityError(f"seed has {len(ks)} entries, expected m={m}")
    if not gnn.comb.is_piecewise:
        raise PreconditionError("extraction needs piecewise-polynomial activations")
    q = tree_degree_bound_seq(gnn.comb.degree, t)[t]
    basis = monomials(m, q)

    def evaluate(p):
        trace: list[int] = []
        seq = orbit_root_seq(gnn, p, t, RATIONAL, trace)
        return seq[t][coord], tuple(trace)

    def row(p):
        return [math.prod(x**a for x, a in zip(p, e)) for e in basis]

    _, sig0 = evaluate(ks)
    echelon: list[tuple[int, list[Fraction]]] = []
    fit: list[tuple[tuple[int, ...], Fraction]] = []
    held: list[tuple[tuple[int, ...], Fraction]] = []
    done = False
    for r in range(max_radius + 1):
        for p in _shell(ks, r):
            val, sig = evaluate(p)
            if sig != sig0:
                continue
            if len(fit) < len(basis):
                v = [Fraction(x) for x in row(p)]
                for col, er in echelon:
                    if v[col]:
                        f = v[col]
                        v = [a - f * b for a, b in zip(v, er)]
                lead = next((i for i, x in enumerate(v) if x), None)
                if lead is not None:
                    inv = 1 / v[lead]
                    echelon.append((lead, [x * inv for x in v]))
                    fit.append((p, val))
                    continue
            held.append((p, val))
            if len(fit) == len(basis) and len(held) >= holdout:
                done = True
                break
        if done:
            break
    if not done:
        raise RegionTooSmallError(
            f"found {len(fit)}/{len(basis)} independent and {len(held)}/{holdout} held-out points "
            f"within radius {max_radius} of {list(ks)}"
        )
    coeffs = solve_exact([row(p) for p, _ in fit], [v for _, v in fit])
    poly = Poly(m, dict(zip(basis, coeffs)))
    for p, v in held:
        if poly(p) != v:
            raise ExtractionError(f"fitted polynomial gives {poly(p)} at {p}, network gives {v}")
    return RegionFit(poly, sig0, q, [p for p, _ in fit], [p for p, _ in held])
