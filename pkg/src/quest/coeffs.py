"""Coefficient matrix construction.

Every 3-point subset of the correspondences yields a 6x6 matrix whose
columns mix the symbolic rotation applied to first-view points with the
constant second-view points; the depth vector of the subset is in its null
space, so its determinant vanishes. The determinant is a homogeneous
degree-6 polynomial in (w, x, y, z) that always contains the factor
w^2 + x^2 + y^2 + z^2; dividing it out leaves one degree-4 equation in the
35 canonical monomials per subset. Stacking one row per subset gives the
coefficient matrix A with A @ x = 0 for the monomial vector x of the true
rotation.

Rows are produced by symbolic expansion at build time rather than from
hard-coded closed-form coefficient formulas: it is self-contained, immune
to transcription slips, and testable against a numeric-determinant oracle.
The row builder expands the determinant by generalized Laplace expansion
along the two columns shared by both row blocks, which collapses it to six
products of three quadratics and vectorizes over dense coefficient
vectors; tests pin it to the generic memoized-cofactor expansion in
`polymat` term by term.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import Correspondence, monomial_positions, monomials_of_degree
from .errors import DegenerateTripleError, InsufficientPointsError
from .polymat import Poly4, PolyMatrix, ZERO, poly_add, poly_scale

_DEG2 = monomials_of_degree(2)
_DEG4 = monomials_of_degree(4)
_DEG6 = monomials_of_degree(6)
_POS2 = monomial_positions(2)
_POS4 = monomial_positions(4)
_POS6 = monomial_positions(6)

# Symbolic rotation matrix: each entry a homogeneous quadratic in
# (w, x, y, z). For a unit quaternion it equals the rotation matrix; for a
# general quaternion it carries an extra factor w^2 + x^2 + y^2 + z^2.
_R_TERMS = [
    [
        {(2, 0, 0, 0): 1, (0, 2, 0, 0): 1, (0, 0, 2, 0): -1, (0, 0, 0, 2): -1},
        {(0, 1, 1, 0): 2, (1, 0, 0, 1): -2},
        {(0, 1, 0, 1): 2, (1, 0, 1, 0): 2},
    ],
    [
        {(0, 1, 1, 0): 2, (1, 0, 0, 1): 2},
        {(2, 0, 0, 0): 1, (0, 2, 0, 0): -1, (0, 0, 2, 0): 1, (0, 0, 0, 2): -1},
        {(0, 0, 1, 1): 2, (1, 1, 0, 0): -2},
    ],
    [
        {(0, 1, 0, 1): 2, (1, 0, 1, 0): -2},
        {(0, 0, 1, 1): 2, (1, 1, 0, 0): 2},
        {(2, 0, 0, 0): 1, (0, 2, 0, 0): -1, (0, 0, 2, 0): -1, (0, 0, 0, 2): 1},
    ],
]

R_POLY = PolyMatrix([[Poly4(t) for t in row] for row in _R_TERMS])

# Dense mirror of R_POLY over the degree-2 monomial basis: (row, col, 10).
_RP = np.zeros((3, 3, len(_DEG2)))
for _r in range(3):
    for _c in range(3):
        for _exp, _coeff in R_POLY[_r, _c].terms.items():
            _RP[_r, _c, _POS2[_exp]] = _coeff

# Monomial-product index tables: deg2 x deg2 -> deg4 and deg4 x deg2 -> deg6.
_T22 = np.array([[_POS4[tuple(np.add(e1, e2))] for e2 in _DEG2] for e1 in _DEG2])
_T42 = np.array([[_POS6[tuple(np.add(e4, e2))] for e2 in _DEG2] for e4 in _DEG4])

# Long division of a homogeneous degree-6 vector by the norm polynomial,
# unrolled over the descending-lex order: position i is reduced into
# quotient slot _DIV_Q[i] while positions _DIV_SUB[i] absorb the lower
# cross terms; positions with _DIV_Q[i] < 0 are remainder.
_DIV_Q = np.full(len(_DEG6), -1, dtype=int)
_DIV_SUB = np.zeros((len(_DEG6), 3), dtype=int)
for _i, (_a, _b, _c2, _d) in enumerate(_DEG6):
    if _a >= 2:
        _DIV_Q[_i] = _POS4[(_a - 2, _b, _c2, _d)]
        _DIV_SUB[_i] = (
            _POS6[(_a - 2, _b + 2, _c2, _d)],
            _POS6[(_a - 2, _b, _c2 + 2, _d)],
            _POS6[(_a - 2, _b, _c2, _d + 2)],
        )

_ROW_PAIRS = ((0, 1), (0, 2), (1, 2))
_PAIR_INDEX = {p: i for i, p in enumerate(_ROW_PAIRS)}
_COMPLEMENT = {0: (1, 2), 1: (0, 2), 2: (0, 1)}


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    """Stacked degree-4 constraint rows, one per 3-point subset.

    A has C(n, 3) unit-norm rows and 35 columns in the canonical monomial
    order; triples records which subset produced each row."""

    A: np.ndarray
    triples: tuple
    n_points: int


def build_triple_matrix(ci: Correspondence, cj: Correspondence, ck: Correspondence) -> PolyMatrix:
    """The 6x6 polynomial matrix whose null vector is (ui, vi, uj, vj, uk, vk).

    Rows 0-2 encode the translation-free constraint between points i and j,
    rows 3-5 the one between i and k. Odd columns (0-based 1, 3, 5) are
    constants; even columns are quadratics."""

    def rm(m):
        return [
            poly_add(
                poly_add(poly_scale(R_POLY[r, 0], m[0]), poly_scale(R_POLY[r, 1], m[1])),
                poly_scale(R_POLY[r, 2], m[2]),
            )
            for r in range(3)
        ]

    rmi, rmj, rmk = rm(ci.m), rm(cj.m), rm(ck.m)
    rows = []
    for r in range(3):
        rows.append(
            [rmi[r], Poly4.constant(-ci.n[r]), poly_scale(rmj[r], -1.0), Poly4.constant(cj.n[r]), ZERO, ZERO]
        )
    for r in range(3):
        rows.append(
            [rmi[r], Poly4.constant(-ci.n[r]), ZERO, ZERO, poly_scale(rmk[r], -1.0), Poly4.constant(ck.n[r])]
        )
    return PolyMatrix(rows)


def _point_factors(c: Correspondence) -> np.ndarray:
    """Per-point quadratic factors of the determinant expansion.

    Row p holds the degree-2 coefficient vector of
    (R m)_u * n_v - (R m)_v * n_u for the row pair (u, v) = _ROW_PAIRS[p].
    """
    a = np.einsum("rtk,t->rk", _RP, c.m)
    return np.stack([a[u] * c.n[v] - a[v] * c.n[u] for (u, v) in _ROW_PAIRS])


def _det6_from_factors(Ki, Kj, Kk) -> np.ndarray:
    """Degree-6 coefficient vector of the 6x6 determinant.

    Laplace expansion along the two columns holding point i: the
    complementary 4x4 splits into independent 2x2 blocks for points j and
    k, leaving six signed products of one quadratic factor per point."""
    det6 = np.zeros(len(_DEG6))
    p4 = np.empty(len(_DEG4))
    for a in range(3):
        kj = Kj[_PAIR_INDEX[_COMPLEMENT[a]]]
        for b in range(3):
            if a == b:
                continue
            ki = Ki[_PAIR_INDEX[(a, b)]] if a < b else -Ki[_PAIR_INDEX[(b, a)]]
            kk = Kk[_PAIR_INDEX[_COMPLEMENT[b]]]
            sign = -1.0 if (a + b) % 2 == 0 else 1.0
            p4[:] = 0.0
            np.add.at(p4, _T22, np.outer(ki, kj))
            np.add.at(det6, _T42, np.outer(p4, sign * kk))
    return det6


def _divide_norm(det6: np.ndarray):
    """Divide a homogeneous degree-6 vector by the norm polynomial.

    Returns (quotient over the 35 degree-4 monomials, max remainder
    coefficient relative to the largest input coefficient)."""
    scale = np.abs(det6).max()
    if scale == 0.0:
        return np.zeros(len(_DEG4)), 0.0
    work = det6.astype(float).copy()
    quot = np.zeros(len(_DEG4))
    rem_max = 0.0
    for i in range(len(_DEG6)):
        c = work[i]
        if c == 0.0:
            continue
        q = _DIV_Q[i]
        if q >= 0:
            quot[q] = c
            work[_DIV_SUB[i]] -= c
        else:
            rem_max = max(rem_max, abs(c))
    return quot, rem_max / scale


def _finish_row(quot: np.ndarray, rem_norm: float) -> np.ndarray:
    if rem_norm > 1e-6:
        raise DegenerateTripleError(
            f"norm-factor division left a relative remainder of {rem_norm:.3e}"
        )
    if np.abs(quot).max() < 1e-12:
        raise DegenerateTripleError("constraint row vanished (repeated or collinear points?)")
    row = quot / np.linalg.norm(quot)
    for v in row:
        if abs(v) > 1e-12:
            if v < 0.0:
                row = -row
            break
    return row


def coefficient_row(ci: Correspondence, cj: Correspondence, ck: Correspondence) -> np.ndarray:
    """One unit-norm constraint row (35 monomial coefficients) for a triple.

    Sign-fixed so the first non-negligible coefficient is positive; raises
    DegenerateTripleError when the triple carries no constraint or the norm
    factor fails to divide out (relative remainder above 1e-6)."""
    quot, rem = _divide_norm(
        _det6_from_factors(_point_factors(ci), _point_factors(cj), _point_factors(ck))
    )
    return _finish_row(quot, rem)


def build_A(points) -> CoefficientMatrix:
    """Stack coefficient rows over all 3-point subsets in lexicographic
    triple order: 6 points -> 20x35, 7 -> 35x35, 8 -> 56x35."""
    points = list(points)
    n = len(points)
    if n < 6:
        raise InsufficientPointsError(f"need at least 6 correspondences, got {n}")
    factors = [_point_factors(c) for c in points]
    rows = []
    triples = []
    for (i, j, k) in combinations(range(n), 3):
        try:
            quot, rem = _divide_norm(_det6_from_factors(factors[i], factors[j], factors[k]))
            rows.append(_finish_row(quot, rem))
        except DegenerateTripleError as e:
            raise DegenerateTripleError(f"triple ({i}, {j}, {k}): {e}") from e
        triples.append((i, j, k))
    return CoefficientMatrix(np.array(rows), tuple(triples), n)
