"""Spatial index over interface edges and point location on edge traces.

The index is a static axis-aligned bounding-box tree built over the (padded)
boxes of a zone side's edges; a query returns every edge whose padded box
contains the point, which is guaranteed to include the distance-minimizing
edge for points on the interface.

Point location minimizes the squared distance d(s) = |x(s) - y*|^2 along one
edge trace with a secant quasi-Newton iteration plus Armijo backtracking,
falling back to a multistart sweep when a single start fails.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import NodalBasis
from .errors import InterfaceCoverageError, LocationError
from .mesh import (
    InterfaceZone,
    Mesh,
    edge_geometry_nodes,
    geometry_basis,
)

BOX_PADDING_FRACTION = 1e-8
GRADIENT_TOL = 1e-12
STEP_TOL = 1e-14
MAX_ITERATIONS = 50
ARMIJO_C = 1e-4
MULTISTART_SEEDS = 8
MATCH_DISTANCE = 1e-8
VERTEX_TIE_TOL = 1e-12

_PROBE = np.linspace(-1.0, 1.0, 17)


@dataclass(frozen=True)
class _Node:
    lo: np.ndarray
    hi: np.ndarray
    left: "_Node | None"
    right: "_Node | None"
    items: np.ndarray | None  # edge ids at leaves


class EdgeBoxIndex:
    """Bounding-box hierarchy over a set of edges of one mesh."""

    def __init__(self, mesh: Mesh, edge_ids):
        self.mesh = mesh
        self.edge_ids = np.asarray(list(edge_ids), dtype=int)
        boxes = np.empty((len(self.edge_ids), 2, 2))
        for k, eid in enumerate(self.edge_ids):
            element = mesh.element_of_edge(eid)
            nodes = edge_geometry_nodes(element, eid % 4)
            basis = geometry_basis(element.geometry_order)
            pts = basis.eval_rows(_PROBE) @ nodes
            lo = pts.min(axis=0)
            hi = pts.max(axis=0)
            # probe sampling can clip a curved edge; pad by curve extent too
            pad = BOX_PADDING_FRACTION * max(np.max(hi - lo), 1.0) + 1e-12
            if element.geometry_order > 1:
                pad += 0.5 * np.max(np.diff(pts, axis=0))  # sampling slack
            boxes[k, 0] = lo - pad
            boxes[k, 1] = hi + pad
        self._boxes = boxes
        order = np.arange(len(self.edge_ids))
        self._root = self._build(order)

    def _build(self, idx: np.ndarray) -> _Node:
        lo = self._boxes[idx, 0].min(axis=0)
        hi = self._boxes[idx, 1].max(axis=0)
        if len(idx) <= 4:
            return _Node(lo=lo, hi=hi, left=None, right=None, items=idx)
        centers = 0.5 * (self._boxes[idx, 0] + self._boxes[idx, 1])
        axis = int(np.argmax(hi - lo))
        order = idx[np.argsort(centers[:, axis], kind="stable")]
        mid = len(order) // 2
        return _Node(lo=lo, hi=hi, left=self._build(order[:mid]),
                     right=self._build(order[mid:]), items=None)

    def query(self, point) -> list[int]:
        """Edge ids whose padded bounding box contains the point."""
        p = np.asarray(point, dtype=float)
        out: list[int] = []
        stack = [self._root]
        while stack:
            node = stack.pop()
            if np.any(p < node.lo) or np.any(p > node.hi):
                continue
            if node.items is not None:
                for k in node.items:
                    if np.all(p >= self._boxes[k, 0]) and np.all(p <= self._boxes[k, 1]):
                        out.append(int(self.edge_ids[k]))
            else:
                stack.append(node.left)
                stack.append(node.right)
        return out


def edge_bounding_boxes(mesh: Mesh, zone: InterfaceZone, side: str) -> EdgeBoxIndex:
    """Index over one side ('left' or 'right') of an interface zone."""
    edges = zone.left_edges if side == "left" else zone.right_edges
    return EdgeBoxIndex(mesh, edges)


class _EdgeCurve:
    """Cached trace polynomial of one edge with value/derivative evaluation."""

    def __init__(self, mesh: Mesh, edge_id: int):
        element = mesh.element_of_edge(edge_id)
        self.nodes = edge_geometry_nodes(element, edge_id % 4)
        self.basis: NodalBasis = geometry_basis(element.geometry_order)
        self.dnodes = self.basis.diff_matrix @ self.nodes

    def point(self, s: float) -> np.ndarray:
        return self.basis.eval_rows(np.array([s]))[0] @ self.nodes

    def dist_and_grad(self, s: float, target: np.ndarray):
        row = self.basis.eval_rows(np.array([s]))[0]
        delta = row @ self.nodes - target
        tangent = row @ self.dnodes
        return float(delta @ delta), float(2.0 * delta @ tangent)


def _minimize_from(curve: _EdgeCurve, target: np.ndarray, s0: float):
    """Secant quasi-Newton with Armijo backtracking on d(s), clamped to
    [-1, 1].  Returns (s, converged)."""
    s = float(np.clip(s0, -1.0, 1.0))
    d, g = curve.dist_and_grad(s, target)
    curvature = None
    s_prev, g_prev = None, None
    for _ in range(MAX_ITERATIONS):
        at_lo = s <= -1.0 and g >= 0.0
        at_hi = s >= 1.0 and g <= 0.0
        if abs(g) <= GRADIENT_TOL or at_lo or at_hi:
            return s, True
        if s_prev is not None and s != s_prev:
            est = (g - g_prev) / (s - s_prev)
            if est > 0.0:
                curvature = est
        step = -g / curvature if curvature else -0.5 * g
        if abs(step) > 2.0:
            step = np.sign(step) * 2.0
        s_prev, g_prev = s, g
        alpha = 1.0
        while alpha > 1e-12:
            s_new = float(np.clip(s + alpha * step, -1.0, 1.0))
            d_new, g_new = curve.dist_and_grad(s_new, target)
            if d_new <= d + ARMIJO_C * (s_new - s) * g:
                break
            alpha *= 0.5
        if abs(s_new - s) <= STEP_TOL:
            return s_new, True
        s, d, g = s_new, d_new, g_new
    return s, False


def locate_point_on_edge(mesh: Mesh, edge_id: int, target) -> tuple[float, float]:
    """Reference coordinate on the edge trace closest to ``target``.

    Returns (s*, distance).  For straight edges this matches the analytic
    orthogonal projection clamped to the segment.  Falls back to 8 uniform
    multistart seeds before reporting failure.

    Raises:
        LocationError: no start converged.
    """
    target = np.asarray(target, dtype=float)
    curve = _EdgeCurve(mesh, edge_id)
    # seed from the best coarse sample so curved edges with several local
    # minima start in the right basin
    probe_d = np.sum((curve.basis.eval_rows(_PROBE) @ curve.nodes - target) ** 2,
                     axis=1)
    s0 = float(_PROBE[int(np.argmin(probe_d))])
    s, ok = _minimize_from(curve, target, s0)
    if ok:
        d = curve.dist_and_grad(s, target)[0]
        return float(s), float(np.sqrt(d))
    best = (np.inf, s)
    for seed in np.linspace(-1.0, 1.0, MULTISTART_SEEDS):
        s_k, ok_k = _minimize_from(curve, target, float(seed))
        if ok_k:
            d_k = curve.dist_and_grad(s_k, target)[0]
            if d_k < best[0]:
                best = (d_k, s_k)
                ok = True
    if not ok:
        raise LocationError(
            f"point location failed on edge {edge_id} for target {target}"
        )
    d, s = best
    return float(s), float(np.sqrt(d))


def opposing_edge_hits(mesh: Mesh, zone: InterfaceZone, side: str, target,
                       index: EdgeBoxIndex | None = None) -> list[tuple[int, float, float]]:
    """All opposing-side edges within the match distance of ``target``,
    as (edge_id, s*, distance) sorted by edge id.

    Raises:
        InterfaceCoverageError: no opposing edge within 1e-8.
    """
    opposite = "right" if side == "left" else "left"
    if index is None:
        index = edge_bounding_boxes(mesh, zone, opposite)
    target = np.asarray(target, dtype=float)
    candidates = index.query(target)
    if not candidates:
        candidates = list(index.edge_ids)
    hits = []
    for eid in candidates:
        s, dist = locate_point_on_edge(mesh, eid, target)
        if dist <= MATCH_DISTANCE:
            hits.append((eid, s, dist))
    if not hits:
        raise InterfaceCoverageError(
            f"no opposing edge within {MATCH_DISTANCE} of {target} "
            f"(zone at x={zone.x}, from {side})"
        )
    hits.sort(key=lambda h: h[0])
    return hits


def find_opposing_edge(mesh: Mesh, zone: InterfaceZone, side: str, target,
                       index: EdgeBoxIndex | None = None) -> tuple[int, float]:
    """Opposing-side edge containing ``target`` and its reference coordinate.

    ``side`` names the side the query point comes FROM; the opposite side is
    searched.  Ties within 1e-12 of a shared vertex resolve to the lowest
    edge id.

    Raises:
        InterfaceCoverageError: no opposing edge within 1e-8.
    """
    hits = opposing_edge_hits(mesh, zone, side, target, index=index)
    best_d = min(h[2] for h in hits)
    close = [h for h in hits if h[2] <= best_d + VERTEX_TIE_TOL]
    eid, s, _ = close[0]
    return eid, s
