"""One-dimensional polynomial and quadrature machinery.

Provides Gauss-Lobatto-Legendre (GLL) quadrature rules, nodal Lagrange bases
with barycentric weights, interpolation and differentiation matrices, and
segment mass matrices.  Everything lives on the reference segment [-1, 1].

Key objects:
    gll_rule:        n-point GLL rule (nodes include both endpoints).
    NodalBasis:      Lagrange basis on the (P+1)-point GLL set, evaluated
                     through the second barycentric formula.
    SegmentOperators: mass matrix and node-to-quadrature interpolation for a
                     (basis, rule) pair.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Barycentric evaluation is singular at the nodes; inside this absolute
# distance the exact nodal value is returned instead.
NODE_COINCIDENCE_TOL = 1e-14

# Allowed slack outside [-1, 1] for evaluation coordinates.
REFERENCE_BAND_TOL = 1e-10


def _legendre_and_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate P_n(x) and P_n'(x) via the three-term recurrence."""
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for k in range(1, n):
        p_next = ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
        p_prev, p = p, p_next
    # derivative from the standard identity (1-x^2) P_n' = n (P_{n-1} - x P_n)
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = n * (p_prev - x * p) / (1.0 - x * x)
    # endpoints: P_n'(+-1) = (+-1)^{n-1} n(n+1)/2
    at_end = np.isclose(np.abs(x), 1.0)
    if np.any(at_end):
        sgn = np.sign(x[at_end]) ** (n - 1)
        dp[at_end] = sgn * n * (n + 1) / 2.0
    return p, dp


@dataclass(frozen=True)
class QuadratureRule:
    """An n-point quadrature rule on [-1, 1] of Gauss-Lobatto type."""

    n: int
    points: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def _gll_points_weights(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n < 2:
        raise ValueError(f"GLL rule needs at least 2 points, got n={n}")
    if n == 2:
        return np.array([-1.0, 1.0]), np.array([1.0, 1.0])
    m = n - 1
    # interior nodes are the roots of P'_{n-1}; Newton from Chebyshev guesses
    k = np.arange(1, m)
    x = -np.cos(np.pi * k / m)
    for _ in range(100):
        p, dp = _legendre_and_derivative(m, x)
        # d/dx P'_m via the Legendre ODE: (1-x^2) P'' = 2x P' - m(m+1) P
        d2p = (2.0 * x * dp - m * (m + 1) * p) / (1.0 - x * x)
        dx = dp / d2p
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    points = np.concatenate(([-1.0], x, [1.0]))
    # exact symmetry, which Newton preserves only to roundoff
    points = 0.5 * (points - points[::-1])
    p_end, _ = _legendre_and_derivative(m, points)
    weights = 2.0 / (m * (m + 1) * p_end**2)
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


def gll_rule(n: int) -> QuadratureRule:
    """Return the n-point Gauss-Lobatto-Legendre rule.

    The rule integrates polynomials up to degree 2n-3 exactly and always
    includes the endpoints -1 and +1.

    Args:
        n: number of points, n >= 2.

    Raises:
        ValueError: if n < 2.
    """
    points, weights = _gll_points_weights(n)
    return QuadratureRule(n=n, points=points, weights=weights)


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    """Barycentric weights w_i = 1 / prod_{j != i} (x_i - x_j)."""
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def differentiation_matrix(nodes: np.ndarray, bary: np.ndarray) -> np.ndarray:
    """Derivative-at-nodes matrix for the Lagrange basis on the given nodes.

    D[i, j] = l_j'(x_i); rows sum to zero by construction (negative-sum
    diagonal trick), so constants differentiate to exactly zero.
    """
    n = len(nodes)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    d = (bary[None, :] / bary[:, None]) / diff
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -np.sum(d, axis=1))
    return d


class NodalBasis:
    """Nodal Lagrange basis of order P on the (P+1)-point GLL set.

    Evaluation anywhere in [-1, 1] goes through the second (true) barycentric
    formula, guarded against the node singularity.  The same machinery also
    provides the differentiation matrix and dense interpolation matrices for
    fixed target sets.
    """

    def __init__(self, order: int, nodes: np.ndarray | None = None):
        if order < 0:
            raise ValueError(f"polynomial order must be >= 0, got {order}")
        self.order = order
        if nodes is None:
            if order == 0:
                nodes = np.array([0.0])
            else:
                nodes = gll_rule(order + 1).points
        else:
            nodes = np.asarray(nodes, dtype=float)
            if nodes.shape != (order + 1,):
                raise ValueError("nodes must have length order+1")
        self.nodes = nodes
        self.bary_weights = barycentric_weights(nodes)
        if order == 0:
            self.diff_matrix = np.zeros((1, 1))
        else:
            self.diff_matrix = differentiation_matrix(nodes, self.bary_weights)
        for arr in (self.nodes, self.bary_weights, self.diff_matrix):
            arr.setflags(write=False)

    @classmethod
    def from_nodes(cls, nodes: np.ndarray) -> "NodalBasis":
        """Basis on an arbitrary set of distinct nodes (order = len-1)."""
        nodes = np.asarray(nodes, dtype=float)
        return cls(order=len(nodes) - 1, nodes=nodes)

    def eval_rows(self, targets: np.ndarray) -> np.ndarray:
        """Evaluation functionals l_i(xi) for each target, shape (m, P+1).

        Row r of the result dotted with nodal values gives the interpolant at
        ``targets[r]``.  Targets must lie in [-1-1e-10, 1+1e-10].
        """
        xi = np.atleast_1d(np.asarray(targets, dtype=float))
        if np.any(xi < -1.0 - REFERENCE_BAND_TOL) or np.any(xi > 1.0 + REFERENCE_BAND_TOL):
            raise ValueError(f"evaluation coordinate outside [-1, 1] band: {xi}")
        diff = xi[:, None] - self.nodes[None, :]
        on_node = np.abs(diff) <= NODE_COINCIDENCE_TOL
        safe = np.where(on_node, 1.0, diff)
        terms = self.bary_weights[None, :] / safe
        rows = terms / np.sum(terms, axis=1, keepdims=True)
        hit = np.any(on_node, axis=1)
        if np.any(hit):
            rows[hit] = 0.0
            idx = np.argmax(on_node[hit], axis=1)
            rows[np.nonzero(hit)[0], idx] = 1.0
        return rows

    def eval(self, nodal_values: np.ndarray, xi: float) -> float:
        """Barycentric evaluation of the interpolant at a single point."""
        row = self.eval_rows(np.array([xi]))[0]
        return float(row @ np.asarray(nodal_values, dtype=float))


def barycentric_eval(basis: NodalBasis, nodal_values: np.ndarray, xi: float) -> float:
    """Value at xi of the unique degree-<=P interpolant of ``nodal_values``.

    Exact (no division) when xi coincides with a node to within 1e-14.
    """
    return basis.eval(nodal_values, xi)


def interpolation_matrix(basis: NodalBasis, targets: np.ndarray) -> np.ndarray:
    """Dense matrix I with (I @ nodal_values)[r] = interpolant(targets[r]).

    Targets must lie inside [-1, 1].
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    if np.any(np.abs(targets) > 1.0 + REFERENCE_BAND_TOL):
        raise ValueError("interpolation targets must lie in [-1, 1]")
    return basis.eval_rows(targets)


def segment_mass_matrix(basis: NodalBasis, quad: QuadratureRule) -> np.ndarray:
    """Segment mass matrix M[i, j] = sum_q l_i(xi_q) l_j(xi_q) w_q.

    Requires quad.n >= P+2 so the degree-2P integrand is integrated exactly.
    """
    if quad.n < basis.order + 2:
        raise ValueError(
            f"insufficient quadrature: need at least {basis.order + 2} points "
            f"for order {basis.order}, got {quad.n}"
        )
    phi = basis.eval_rows(quad.points)  # (Q, P+1)
    return phi.T @ (quad.weights[:, None] * phi)


@dataclass(frozen=True)
class SegmentOperators:
    """Mass matrix and node-to-quadrature interpolation for one (P, Q) pair."""

    basis: NodalBasis
    quad: QuadratureRule
    mass: np.ndarray
    interp_to_quad: np.ndarray

    @classmethod
    def build(cls, basis: NodalBasis, quad: QuadratureRule) -> "SegmentOperators":
        mass = segment_mass_matrix(basis, quad)
        interp = interpolation_matrix(basis, quad.points)
        mass.setflags(write=False)
        interp.setflags(write=False)
        return cls(basis=basis, quad=quad, mass=mass, interp_to_quad=interp)
