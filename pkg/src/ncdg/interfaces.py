"""Non-conformal interface treatments behind a common handler contract.

Three strategies fill the flux-table rows of an interface zone's edges:

* conformal-null: requires exactly aligned spans (shift = 0) and treats the
  matched edges like ordinary conformal pairs.
* point-to-point: for each interface quadrature point, evaluates the
  opposing edge's degree-P trace polynomial at the located reference
  coordinate (cached barycentric evaluation rows) and feeds the pointwise
  states to the numerical flux.  Each side computes its own flux, so the
  treatment is not exactly conservative.
* mortar: projects both traces onto mortar segments (L2-optimal, via cached
  S matrices), solves the numerical flux on each mortar, and back-projects
  with the scale factors; both sides share the mortar fluxes, making the
  treatment conservative to roundoff.

All maps, matrices, and mass factorizations are built once at setup; the
meshes are static.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InterfaceCoverageError
from .locate import edge_bounding_boxes, opposing_edge_hits
from .mesh import InterfaceZone, edge_span_y
from .physics import AdvectionModel

SPAN_SNAP_REL = 1e-10
SLIVER_SCALE = 1e-10
TILING_TOL = 1e-9
IDENTITY_TOL = 1e-14


# ---------------------------------------------------------------------------
# point-to-point
# ---------------------------------------------------------------------------

@dataclass
class P2PSideMap:
    """Per edge of one side: opposing edge ids and evaluation data per
    interface quadrature point."""

    edge_ids: np.ndarray      # (nE,)
    opposing: np.ndarray      # (nE, Q) opposing edge ids
    xi_star: np.ndarray       # (nE, Q) reference coordinate on opposing edge
    eval_rows: np.ndarray     # (nE, Q, P+1) barycentric evaluation rows
    distances: np.ndarray     # (nE, Q) achieved mapping distances


@dataclass
class P2PMap:
    left: P2PSideMap
    right: P2PSideMap

    def corrupt(self, operator, side: str, edge_pos: int, delta: float) -> None:
        """Test hook: scale one edge's evaluation weights by 1+delta, which
        breaks the partition of unity (a genuinely damaged map)."""
        side_map = self.left if side == "left" else self.right
        side_map.eval_rows[edge_pos] *= 1.0 + delta


def _build_side(operator, zone: InterfaceZone, side: str) -> P2PSideMap:
    mesh = operator.mesh
    edge_ids = np.array(zone.left_edges if side == "left" else zone.right_edges)
    opposite = "right" if side == "left" else "left"
    index = edge_bounding_boxes(mesh, zone, opposite)
    opp_spans = {int(e): edge_span_y(mesh, int(e))
                 for e in (zone.right_edges if side == "left" else zone.left_edges)}
    q = operator.quad.n
    opposing = np.empty((len(edge_ids), q), dtype=int)
    xi_star = np.empty((len(edge_ids), q))
    dists = np.empty((len(edge_ids), q))
    for k, eid in enumerate(edge_ids):
        lo, hi = edge_span_y(mesh, int(eid))
        y_center = 0.5 * (lo + hi)
        for j in range(q):
            target = operator.edge_x[eid, j]
            hits = opposing_edge_hits(mesh, zone, side, target, index=index)
            if len(hits) > 1:
                # vertex tie: the flux integrand approaches the corner from
                # within this edge, so prefer the opposing edge overlapping
                # a nudge toward the edge interior; aligned zones then map
                # every quadrature point to the exactly-facing edge
                y_in = target[1] + 1e-6 * (hi - lo) * np.sign(y_center - target[1])
                tol = 1e-12 * max(abs(hi), abs(lo), 1.0)
                inside = [h for h in hits
                          if opp_spans[h[0]][0] - tol <= y_in <= opp_spans[h[0]][1] + tol]
                if inside:
                    hits = inside
            opp, xi, dist = hits[0]
            opposing[k, j] = opp
            xi_star[k, j] = xi
            dists[k, j] = dist
    rows = operator.basis.eval_rows(xi_star.ravel()).reshape(
        len(edge_ids), q, operator.order + 1)
    return P2PSideMap(edge_ids=edge_ids, opposing=opposing, xi_star=xi_star,
                      eval_rows=rows, distances=dists)


def build_p2p_map(operator, zone: InterfaceZone) -> P2PMap:
    """Locate every interface trace quadrature point on the opposing side."""
    return P2PMap(left=_build_side(operator, zone, "left"),
                  right=_build_side(operator, zone, "right"))


def p2p_exterior_trace(side_map: P2PSideMap, nodal_traces: np.ndarray) -> np.ndarray:
    """Exterior values u+ at one side's interface quadrature points.

    Evaluates the opposing edges' trace polynomials via the cached rows;
    exact whenever the opposing trace has degree <= P.
    """
    gathered = nodal_traces[side_map.opposing]      # (nE, Q, n_vars, P+1)
    return np.einsum("eqk,eqvk->evq", side_map.eval_rows, gathered)


class P2PHandler:
    def __init__(self, operator, zone: InterfaceZone):
        self.operator = operator
        self.zone = zone
        self.map = build_p2p_map(operator, zone)
        self._all_ids = np.concatenate([self.map.left.edge_ids,
                                        self.map.right.edge_ids])

    def compute_fluxes(self, nodal_traces, edge_traces, flux_table) -> None:
        op = self.operator
        u_plus = np.concatenate([
            p2p_exterior_trace(self.map.left, nodal_traces),
            p2p_exterior_trace(self.map.right, nodal_traces)])
        ids = self._all_ids
        flux_table[ids] = op.numerical_flux(edge_traces[ids], u_plus, ids)


# ---------------------------------------------------------------------------
# conformal-null (aligned zones only)
# ---------------------------------------------------------------------------

class ConformalZoneHandler:
    def __init__(self, operator, zone: InterfaceZone):
        mesh = operator.mesh
        spans_l = {zone.left_edges[k]: edge_span_y(mesh, zone.left_edges[k])
                   for k in range(len(zone.left_edges))}
        spans_r = {zone.right_edges[k]: edge_span_y(mesh, zone.right_edges[k])
                   for k in range(len(zone.right_edges))}
        if len(spans_l) != len(spans_r):
            raise InterfaceCoverageError(
                "conformal method requires an aligned interface (shift = 0)")
        left_sorted = sorted(spans_l, key=lambda e: spans_l[e])
        right_sorted = sorted(spans_r, key=lambda e: spans_r[e])
        scale = max(abs(s) for sp in spans_l.values() for s in sp) or 1.0
        for a, b in zip(left_sorted, right_sorted):
            if (abs(spans_l[a][0] - spans_r[b][0]) > 1e-10 * scale or
                    abs(spans_l[a][1] - spans_r[b][1]) > 1e-10 * scale):
                raise InterfaceCoverageError(
                    "conformal method requires an aligned interface (shift = 0)")
        self.operator = operator
        self.left_ids = np.array(left_sorted)
        self.right_ids = np.array(right_sorted)

    def compute_fluxes(self, nodal_traces, edge_traces, flux_table) -> None:
        op = self.operator
        f = op.numerical_flux(edge_traces[self.left_ids],
                              edge_traces[self.right_ids], self.left_ids)
        flux_table[self.left_ids] = f
        flux_table[self.right_ids] = -f


# ---------------------------------------------------------------------------
# mortar
# ---------------------------------------------------------------------------

@dataclass
class MortarSide:
    edge_id: int
    offset: float
    scale: float
    s_matrix: np.ndarray       # S[i, j] = int l_i(o + s z) l_j(z) dz
    project_fwd: np.ndarray    # M^-1 S^T : edge nodal -> mortar nodal
    project_back: np.ndarray   # s M^-1 S : mortar flux nodal -> edge nodal
    identity: bool


@dataclass
class MortarPatch:
    """One mortar segment with cached projection data for both parents."""

    interval: tuple[float, float]
    left: MortarSide
    right: MortarSide


def _edge_affine(span: tuple[float, float], interval: tuple[float, float]):
    """Offset and scale with xi = o + s z mapping mortar to parent edge."""
    e0, e1 = span
    a, b = interval
    s = (b - a) / (e1 - e0)
    o = ((a + b) - (e0 + e1)) / (e1 - e0)
    return o, s


def _make_side(operator, edge_id: int, span, interval, mass_inv) -> MortarSide:
    o, s = _edge_affine(span, interval)
    if abs(o) <= IDENTITY_TOL and abs(s - 1.0) <= IDENTITY_TOL:
        eye = np.eye(operator.order + 1)
        return MortarSide(edge_id=edge_id, offset=0.0, scale=1.0,
                          s_matrix=operator.segment_mass.copy(),
                          project_fwd=eye, project_back=eye.copy(), identity=True)
    z = operator.quad.points
    w = operator.quad.weights
    rows = operator.basis.eval_rows(o + s * z)          # (Q, P+1): l_i(o+sz)
    phi = operator.interp_q                              # (Q, P+1): l_j(z)
    s_mat = rows.T @ (w[:, None] * phi)
    return MortarSide(edge_id=edge_id, offset=o, scale=s, s_matrix=s_mat,
                      project_fwd=mass_inv @ s_mat.T,
                      project_back=s * (mass_inv @ s_mat), identity=False)


def build_mortars(operator, zone: InterfaceZone) -> list[MortarPatch]:
    """Interval intersections of the two edge partitions along the zone.

    Breakpoints from both sides are snapped together at 1e-10 of the zone
    length; slivers below 1e-10 relative scale are dropped after checking
    that each edge is still tiled to 1e-9.
    """
    mesh = operator.mesh
    spans_l = {e: edge_span_y(mesh, e) for e in zone.left_edges}
    spans_r = {e: edge_span_y(mesh, e) for e in zone.right_edges}
    lo = min(s[0] for s in spans_l.values())
    hi = max(s[1] for s in spans_l.values())
    length = hi - lo
    snap = SPAN_SNAP_REL * length
    breaks: list[float] = []
    for span in list(spans_l.values()) + list(spans_r.values()):
        for y in span:
            for existing in breaks:
                if abs(existing - y) <= snap:
                    break
            else:
                breaks.append(y)
    breaks.sort()

    def parent_of(spans: dict, mid: float) -> int:
        for eid, (a, b) in spans.items():
            if a - snap <= mid <= b + snap:
                return eid
        raise InterfaceCoverageError(f"no parent edge covers y={mid}")

    patches = []
    for a, b in zip(breaks, breaks[1:]):
        if b - a < SLIVER_SCALE * length:
            continue
        mid = 0.5 * (a + b)
        el = parent_of(spans_l, mid)
        er = parent_of(spans_r, mid)
        patches.append(MortarPatch(
            interval=(a, b),
            left=_make_side(operator, el, spans_l[el], (a, b), operator.segment_mass_inv),
            right=_make_side(operator, er, spans_r[er], (a, b), operator.segment_mass_inv),
        ))

    tiling: dict[int, float] = {}
    for patch in patches:
        tiling[patch.left.edge_id] = tiling.get(patch.left.edge_id, 0.0) + patch.left.scale
        tiling[patch.right.edge_id] = tiling.get(patch.right.edge_id, 0.0) + patch.right.scale
    for eid in list(spans_l) + list(spans_r):
        if abs(tiling.get(eid, 0.0) - 1.0) > TILING_TOL:
            raise InterfaceCoverageError(
                f"mortars do not tile edge {eid}: sum of scales {tiling.get(eid, 0.0)}")
    return patches


def project_to_mortar(patch: MortarPatch, side: str, trace_nodal: np.ndarray) -> np.ndarray:
    """L2-optimal degree-P representation on the mortar of one parent trace.

    ``trace_nodal`` has the nodal values on the last axis.
    """
    ms = patch.left if side == "left" else patch.right
    if ms.identity:
        return np.asarray(trace_nodal, dtype=float).copy()
    return np.asarray(trace_nodal, dtype=float) @ ms.project_fwd.T


class MortarHandler:
    def __init__(self, operator, zone: InterfaceZone):
        self.operator = operator
        self.zone = zone
        self.patches = build_mortars(operator, zone)
        self.edge_ids = np.array(list(zone.left_edges) + list(zone.right_edges))
        self._edge_pos = {int(e): k for k, e in enumerate(self.edge_ids)}
        # static per-patch data for the numerical flux on the mortar
        q = operator.quad.n
        self._normals = np.empty((len(self.patches), q, 2))
        for k, patch in enumerate(self.patches):
            self._normals[k] = operator.edge_normals[patch.left.edge_id, 0]
        if isinstance(operator.model, AdvectionModel):
            self._vn = np.empty((len(self.patches), q))
            for k, patch in enumerate(self.patches):
                a, b = patch.interval
                y = 0.5 * (a + b) + 0.5 * (b - a) * operator.quad.points
                x = np.full_like(y, zone.x)
                vx, vy = operator.model.velocity_at(x, y)
                self._vn[k] = (vx * self._normals[k, :, 0] +
                               vy * self._normals[k, :, 1])
        else:
            self._vn = None

    def _accumulate(self, nodal_traces) -> np.ndarray:
        """Mortar exchange: project traces in, flux on mortars, scale-factored
        back-projection; returns per-edge flux nodal coefficients."""
        op = self.operator
        phi = op.interp_q
        n_patches = len(self.patches)
        q = op.quad.n
        u_l = np.empty((n_patches, op.n_vars, q))
        u_r = np.empty((n_patches, op.n_vars, q))
        for k, patch in enumerate(self.patches):
            tl = nodal_traces[patch.left.edge_id]
            tr = nodal_traces[patch.right.edge_id]
            if not patch.left.identity:
                tl = tl @ patch.left.project_fwd.T
            if not patch.right.identity:
                tr = tr @ patch.right.project_fwd.T
            u_l[k] = tl @ phi.T
            u_r[k] = tr @ phi.T

        if self._vn is not None:
            from .physics import upwind_flux
            flux = upwind_flux(u_l, u_r, self._vn[:, None, :])
        else:
            from .riemann import exact_riemann_flux
            flux = np.moveaxis(
                exact_riemann_flux(np.moveaxis(u_l, 1, -1),
                                   np.moveaxis(u_r, 1, -1),
                                   self._normals, gamma=op.model.gamma), -1, 1)

        # L2-project mortar flux values onto degree P, then scatter back to
        # the parents with the scale-factored transpose projections
        flux_nodal = np.einsum("iq,pvq->pvi", op.quad_project, flux)
        acc = np.zeros((len(self.edge_ids), op.n_vars, op.order + 1))
        for k, patch in enumerate(self.patches):
            fl = flux_nodal[k]
            acc[self._edge_pos[patch.left.edge_id]] += (
                fl if patch.left.identity else fl @ patch.left.project_back.T)
            fr = -flux_nodal[k]
            acc[self._edge_pos[patch.right.edge_id]] += (
                fr if patch.right.identity else fr @ patch.right.project_back.T)
        return acc

    def compute_fluxes(self, nodal_traces, edge_traces, flux_table) -> None:
        acc = self._accumulate(nodal_traces)
        flux_table[self.edge_ids] = np.einsum("qi,evi->evq",
                                              self.operator.interp_q, acc)

    def edge_flux_nodal(self, field) -> dict[int, np.ndarray]:
        acc = self._accumulate(self.operator.nodal_traces(field.coeffs))
        return {int(e): acc[k] for k, e in enumerate(self.edge_ids)}


def mortar_flux_and_return(operator, zone: InterfaceZone, field) -> dict[int, np.ndarray]:
    """Per-edge flux nodal coefficients of one zone's mortar exchange."""
    return MortarHandler(operator, zone).edge_flux_nodal(field)


def make_zone_handler(method: str, operator, zone: InterfaceZone):
    if method == "conformal":
        return ConformalZoneHandler(operator, zone)
    if method == "p2p":
        return P2PHandler(operator, zone)
    if method == "mortar":
        return MortarHandler(operator, zone)
    raise ValueError(f"unknown interface method {method!r}")
