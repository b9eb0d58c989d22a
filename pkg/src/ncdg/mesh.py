"""Quadrilateral mesh data model, isoparametric geometry, and generators.

Element reference square is [-1, 1]^2 with counter-clockwise vertices
v0=(-1,-1), v1=(1,-1), v2=(1,1), v3=(-1,1).  Each element owns four edges
(DG style: an "edge" is one element's side); facing sides of neighbouring
elements are recorded as conformal pairs.

Side convention (s is the trace parameter in [-1, 1]):
    side 0 (south): (xi, eta) = (s, -1),  v0 -> v1
    side 1 (east):  (xi, eta) = (+1, s),  v1 -> v2
    side 2 (north): (xi, eta) = (s, +1),  v3 -> v2
    side 3 (west):  (xi, eta) = (-1, s),  v0 -> v3
Sides 0 and 1 run with the counter-clockwise boundary, sides 2 and 3 against
it; the outward-normal sign accounts for this.  With this convention the
solution trace on a side is a plain slice of the tensor-product coefficients,
and facing sides of axis-aligned neighbours share the same parameter
direction (no orientation flip).

Edge ids are global and structural: edge_id = 4 * element_id + side.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import NodalBasis

BOUNDARY_TAGS = ("periodic", "dirichlet0", "farfield")

# (corner vertex indices) per side, in trace-parameter order
SIDE_CORNERS = ((0, 1), (1, 2), (3, 2), (0, 3))
# outward-normal sign per side: n = sign * (t_y, -t_x) / |t|
SIDE_NORMAL_SIGN = (1.0, 1.0, -1.0, -1.0)


@dataclass
class Element:
    """One quadrilateral with an isoparametric mapping of order ``geometry_order``.

    ``geometry_nodes`` is a (g+1, g+1, 2) tensor grid of control points on
    GLL(g+1) x GLL(g+1) reference nodes; for order 1 this is the bilinear
    interpolant of the four vertices.
    """

    id: int
    vertex_ids: tuple[int, int, int, int]
    geometry_order: int
    geometry_nodes: np.ndarray

    def __post_init__(self):
        g = self.geometry_order
        expected = (g + 1, g + 1, 2)
        if self.geometry_nodes.shape != expected:
            raise ValueError(
                f"geometry_nodes shape {self.geometry_nodes.shape} != {expected}"
            )


@dataclass(frozen=True)
class Edge:
    """One side of one element."""

    id: int
    element_id: int
    side: int
    endpoints: np.ndarray  # (2, 2): trace start / end in physical space


@dataclass(frozen=True)
class InterfaceZone:
    """A non-conformal interface along a vertical line x = const.

    ``left_edges`` are east sides of the left subdomain, ``right_edges`` west
    sides of the right one, both ordered by increasing y; the arc coordinate
    along the zone is y itself.
    """

    left_edges: tuple[int, ...]
    right_edges: tuple[int, ...]
    x: float


@dataclass
class Mesh:
    vertices: np.ndarray
    elements: list[Element]
    edges: list[Edge]
    conformal_pairs: list[tuple[int, int, bool]]  # (edge_a, edge_b, reversed)
    boundary_tags: dict[int, str] = field(default_factory=dict)
    interface_zones: list[InterfaceZone] = field(default_factory=list)
    periodic_pairs: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.vertices.setflags(write=False)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def element_of_edge(self, edge_id: int) -> Element:
        return self.elements[edge_id // 4]

    def edge_category(self, edge_id: int) -> str:
        """One of 'interior', 'periodic', 'boundary', 'interface'."""
        cats = []
        tag = self.boundary_tags.get(edge_id)
        if tag == "periodic":
            cats.append("periodic")
        elif tag is not None:
            cats.append("boundary")
        if any(edge_id in (a, b) for a, b, _ in self.conformal_pairs) and tag != "periodic":
            cats.append("interior")
        for zone in self.interface_zones:
            if edge_id in zone.left_edges or edge_id in zone.right_edges:
                cats.append("interface")
        if len(cats) != 1:
            raise ValueError(f"edge {edge_id} has categories {cats}")
        return cats[0]


# ---------------------------------------------------------------------------
# geometry evaluation
# ---------------------------------------------------------------------------

_geom_bases: dict[int, NodalBasis] = {}


def geometry_basis(order: int) -> NodalBasis:
    basis = _geom_bases.get(order)
    if basis is None:
        basis = NodalBasis(order)
        _geom_bases[order] = basis
    return basis


def element_map(element: Element, xi, eta) -> np.ndarray:
    """Physical coordinates of reference points; xi, eta broadcastable."""
    basis = geometry_basis(element.geometry_order)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    rx = basis.eval_rows(xi)
    ry = basis.eval_rows(eta)
    return np.einsum("pa,pb,abc->pc", rx, ry, element.geometry_nodes)


def element_jacobian(element: Element, xi, eta) -> np.ndarray:
    """Jacobian d(x,y)/d(xi,eta) at reference points, shape (n, 2, 2)."""
    basis = geometry_basis(element.geometry_order)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    rx = basis.eval_rows(xi)
    ry = basis.eval_rows(eta)
    dx = rx @ basis.diff_matrix
    dy = ry @ basis.diff_matrix
    g = element.geometry_nodes
    d_dxi = np.einsum("pa,pb,abc->pc", dx, ry, g)
    d_deta = np.einsum("pa,pb,abc->pc", rx, dy, g)
    return np.stack([d_dxi, d_deta], axis=-1)  # [.., coord, ref-direction]


def edge_geometry_nodes(element: Element, side: int) -> np.ndarray:
    """Control points of one edge's trace curve, shape (g+1, 2)."""
    g = element.geometry_nodes
    if side == 0:
        return g[:, 0, :]
    if side == 1:
        return g[-1, :, :]
    if side == 2:
        return g[:, -1, :]
    if side == 3:
        return g[0, :, :]
    raise ValueError(f"side must be 0..3, got {side}")


def edge_point(mesh: Mesh, edge_id: int, s) -> np.ndarray:
    """Physical point(s) on the edge trace at parameter(s) s."""
    element = mesh.element_of_edge(edge_id)
    nodes = edge_geometry_nodes(element, edge_id % 4)
    basis = geometry_basis(element.geometry_order)
    rows = basis.eval_rows(np.atleast_1d(np.asarray(s, dtype=float)))
    return rows @ nodes


def edge_tangent(mesh: Mesh, edge_id: int, s) -> np.ndarray:
    """Tangent dx/ds on the edge trace at parameter(s) s."""
    element = mesh.element_of_edge(edge_id)
    nodes = edge_geometry_nodes(element, edge_id % 4)
    basis = geometry_basis(element.geometry_order)
    rows = basis.eval_rows(np.atleast_1d(np.asarray(s, dtype=float)))
    return rows @ (basis.diff_matrix @ nodes)


def edge_normal(mesh: Mesh, edge_id: int, s) -> np.ndarray:
    """Outward unit normal(s) at parameter(s) s."""
    t = edge_tangent(mesh, edge_id, s)
    sign = SIDE_NORMAL_SIGN[edge_id % 4]
    n = sign * np.stack([t[..., 1], -t[..., 0]], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def edge_length(mesh: Mesh, edge_id: int, n_quad: int = 8) -> float:
    """Arc length of the edge trace (exact for straight edges)."""
    from .basis import gll_rule

    rule = gll_rule(n_quad)
    t = edge_tangent(mesh, edge_id, rule.points)
    return float(np.sum(rule.weights * np.linalg.norm(t, axis=-1)))


def edge_span_y(mesh: Mesh, edge_id: int) -> tuple[float, float]:
    """(y_min, y_max) of a vertical interface edge."""
    ends = mesh.edges[edge_id].endpoints
    return float(min(ends[0, 1], ends[1, 1])), float(max(ends[0, 1], ends[1, 1]))


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundarySpec:
    """Outer-boundary treatment: 'periodic', 'dirichlet0', or 'farfield'."""

    x: str = "periodic"
    y: str = "periodic"

    def __post_init__(self):
        for tag in (self.x, self.y):
            if tag not in BOUNDARY_TAGS:
                raise ValueError(f"unknown boundary tag {tag!r}")


def _bilinear_geometry(verts: np.ndarray) -> np.ndarray:
    """(2, 2, 2) control grid from 4 CCW corners."""
    g = np.empty((2, 2, 2))
    g[0, 0] = verts[0]
    g[1, 0] = verts[1]
    g[1, 1] = verts[2]
    g[0, 1] = verts[3]
    return g


class _Block:
    """One structured column of quads with arbitrary row boundaries."""

    def __init__(self, xs: np.ndarray, ys: np.ndarray):
        self.xs = xs
        self.ys = ys
        self.nx = len(xs) - 1
        self.ny = len(ys) - 1

    def build(self, mesh_builder: "_MeshBuilder") -> np.ndarray:
        """Append vertices/elements; returns element-id grid (nx, ny)."""
        nvx, nvy = self.nx + 1, self.ny + 1
        gx, gy = np.meshgrid(self.xs, self.ys, indexing="ij")
        base = mesh_builder.add_vertices(
            np.stack([gx.ravel(), gy.ravel()], axis=-1)
        )

        def vid(i, j):
            return base + i * nvy + j

        ids = np.empty((self.nx, self.ny), dtype=int)
        for i in range(self.nx):
            for j in range(self.ny):
                vids = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
                ids[i, j] = mesh_builder.add_element(vids)
        return ids


class _MeshBuilder:
    def __init__(self):
        self.vertex_chunks: list[np.ndarray] = []
        self.n_vertices = 0
        self.elements: list[Element] = []
        self.pairs: list[tuple[int, int, bool]] = []
        self.boundary_tags: dict[int, str] = {}
        self.zones: list[InterfaceZone] = []
        self.periodic_pairs: list[tuple[int, int]] = []

    def add_vertices(self, coords: np.ndarray) -> int:
        base = self.n_vertices
        self.vertex_chunks.append(coords)
        self.n_vertices += len(coords)
        return base

    def add_element(self, vertex_ids) -> int:
        eid = len(self.elements)
        self.elements.append(
            Element(id=eid, vertex_ids=tuple(vertex_ids), geometry_order=1,
                    geometry_nodes=np.empty((2, 2, 2)))
        )
        return eid

    def pair(self, edge_a: int, edge_b: int, reverse: bool = False):
        self.pairs.append((edge_a, edge_b, reverse))

    def periodic(self, edge_a: int, edge_b: int):
        self.pairs.append((edge_a, edge_b, False))
        self.periodic_pairs.append((edge_a, edge_b))
        self.boundary_tags[edge_a] = "periodic"
        self.boundary_tags[edge_b] = "periodic"

    def finish(self) -> Mesh:
        vertices = np.concatenate(self.vertex_chunks, axis=0)
        edges = []
        for el in self.elements:
            el.geometry_nodes = _bilinear_geometry(vertices[list(el.vertex_ids)])
            el.geometry_nodes.setflags(write=False)
            for side in range(4):
                c0, c1 = SIDE_CORNERS[side]
                ends = np.array([vertices[el.vertex_ids[c0]],
                                 vertices[el.vertex_ids[c1]]])
                edges.append(Edge(id=4 * el.id + side, element_id=el.id,
                                  side=side, endpoints=ends))
        return Mesh(vertices=vertices, elements=self.elements, edges=edges,
                    conformal_pairs=self.pairs, boundary_tags=self.boundary_tags,
                    interface_zones=self.zones, periodic_pairs=self.periodic_pairs)


def _connect_block(builder: _MeshBuilder, ids: np.ndarray):
    nx, ny = ids.shape
    for i in range(nx):
        for j in range(ny):
            if i + 1 < nx:  # east of (i,j) faces west of (i+1,j)
                builder.pair(4 * ids[i, j] + 1, 4 * ids[i + 1, j] + 3)
            if j + 1 < ny:  # north of (i,j) faces south of (i,j+1)
                builder.pair(4 * ids[i, j] + 2, 4 * ids[i, j + 1] + 0)


def _tag_y_boundaries(builder: _MeshBuilder, ids: np.ndarray, tag_y: str):
    nx, ny = ids.shape
    if tag_y == "periodic":
        for i in range(nx):
            builder.periodic(4 * ids[i, ny - 1] + 2, 4 * ids[i, 0] + 0)
    else:
        for i in range(nx):
            builder.boundary_tags[4 * ids[i, 0] + 0] = tag_y
            builder.boundary_tags[4 * ids[i, ny - 1] + 2] = tag_y


def build_cartesian_mesh(domain, nx: int, ny: int,
                         boundary: BoundarySpec = BoundarySpec()) -> Mesh:
    """Regular nx-by-ny mesh of a rectangle (x0, x1, y0, y1)."""
    x0, x1, y0, y1 = map(float, domain)
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be >= 1")
    if x1 <= x0 or y1 <= y0:
        raise ValueError(f"degenerate domain {domain}")
    builder = _MeshBuilder()
    block = _Block(np.linspace(x0, x1, nx + 1), np.linspace(y0, y1, ny + 1))
    ids = block.build(builder)
    _connect_block(builder, ids)
    _tag_y_boundaries(builder, ids, boundary.y)
    if boundary.x == "periodic":
        for j in range(ny):
            builder.periodic(4 * ids[nx - 1, j] + 1, 4 * ids[0, j] + 3)
    else:
        for j in range(ny):
            builder.boundary_tags[4 * ids[0, j] + 3] = boundary.x
            builder.boundary_tags[4 * ids[nx - 1, j] + 1] = boundary.x
    return builder.finish()


def _row_boundaries(y0: float, y1: float, ny: int, shift: float) -> np.ndarray:
    """Row boundaries of one column; shifted columns gain partial-height rows
    at the extremes so the column still fills [y0, y1] exactly."""
    hy = (y1 - y0) / ny
    if shift == 0.0:
        return np.linspace(y0, y1, ny + 1)
    interior = y0 + shift * hy + hy * np.arange(ny)
    return np.concatenate(([y0], interior, [y1]))


def build_column_mesh(x_boundaries, rows_per_column,
                      boundary: BoundarySpec = BoundarySpec()) -> Mesh:
    """Columns of structured blocks with explicit row boundaries per column.

    ``x_boundaries`` has one entry more than there are columns; each column k
    spans x_boundaries[k]..x_boundaries[k+1] with within-column x lines given
    implicitly by ``rows_per_column[k]`` being (xs, ys) or just ys (single
    element across).  Every adjacent column pair becomes an interface zone.
    """
    builder = _MeshBuilder()
    grids = []
    for k, rows in enumerate(rows_per_column):
        if isinstance(rows, tuple):
            xs, ys = rows
        else:
            xs = np.array([x_boundaries[k], x_boundaries[k + 1]], dtype=float)
            ys = np.asarray(rows, dtype=float)
        block = _Block(np.asarray(xs, dtype=float), ys)
        ids = block.build(builder)
        _connect_block(builder, ids)
        _tag_y_boundaries(builder, ids, boundary.y)
        grids.append((ids, float(x_boundaries[k + 1])))

    for k in range(len(grids) - 1):
        ids_l, x_if = grids[k]
        ids_r, _ = grids[k + 1]
        left_edges = tuple(4 * e + 1 for e in ids_l[-1, :])
        right_edges = tuple(4 * e + 3 for e in ids_r[0, :])
        builder.zones.append(InterfaceZone(left_edges=left_edges,
                                           right_edges=right_edges, x=x_if))

    first_ids = grids[0][0]
    last_ids = grids[-1][0]
    if boundary.x == "periodic":
        if first_ids.shape[1] != last_ids.shape[1]:
            raise ValueError("periodic in x requires matching outer columns")
        for j in range(first_ids.shape[1]):
            builder.periodic(4 * last_ids[-1, j] + 1, 4 * first_ids[0, j] + 3)
    else:
        for j in range(first_ids.shape[1]):
            builder.boundary_tags[4 * first_ids[0, j] + 3] = boundary.x
        for j in range(last_ids.shape[1]):
            builder.boundary_tags[4 * last_ids[-1, j] + 1] = boundary.x
    return builder.finish()


def build_shifted_interface_mesh(domain, columns, ny: int, shift: float,
                                 boundary: BoundarySpec = BoundarySpec()) -> Mesh:
    """Columns of Cartesian blocks with odd-indexed columns shifted vertically.

    ``columns`` is a sequence of element counts across; each column has width
    proportional to its count.  Odd-indexed columns are offset upward by
    ``shift`` of a cell height, gaining partial-height rows at the extremes.
    Adjacent columns become interface zones.  With shift = 0 every interface
    edge faces exactly one opposing edge with an identical span.
    """
    x0, x1, y0, y1 = map(float, domain)
    columns = list(columns)
    if any(c < 1 for c in columns) or ny < 1:
        raise ValueError("column counts and ny must be >= 1")
    if not 0.0 <= shift < 1.0:
        raise ValueError("shift must lie in [0, 1)")
    if x1 <= x0 or y1 <= y0:
        raise ValueError(f"degenerate domain {domain}")
    total = sum(columns)
    hx = (x1 - x0) / total
    if (boundary.x == "periodic" and shift != 0.0 and len(columns) >= 2
            and (len(columns) - 1) % 2 == 1):
        raise ValueError("periodic in x requires an unshifted last column")

    x_bounds = [x0]
    rows = []
    x_left = x0
    for k, cnt in enumerate(columns):
        x_right = x_left + cnt * hx
        col_shift = shift if k % 2 == 1 else 0.0
        ys = _row_boundaries(y0, y1, ny, col_shift)
        rows.append((np.linspace(x_left, x_right, cnt + 1), ys))
        x_bounds.append(x_right)
        x_left = x_right
    return build_column_mesh(x_bounds, rows, boundary)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate_mesh(mesh: Mesh, n_quad: int = 6) -> None:
    """Check structural and geometric invariants; raises ValueError on defect.

    Verifies: each edge belongs to exactly one category; positive Jacobian at
    an n_quad^2 grid in every element; unit normals and endpoint consistency
    on every edge; periodic pairs with equal lengths; interface zones that
    tile a common vertical span with antiparallel normals.
    """
    from .basis import gll_rule

    rule = gll_rule(n_quad)
    xi, eta = np.meshgrid(rule.points, rule.points, indexing="ij")
    for el in mesh.elements:
        jac = element_jacobian(el, xi.ravel(), eta.ravel())
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        if np.any(det <= 0.0):
            raise ValueError(f"element {el.id} has non-positive Jacobian")

    for edge in mesh.edges:
        n = edge_normal(mesh, edge.id, rule.points)
        if np.max(np.abs(np.linalg.norm(n, axis=-1) - 1.0)) > 1e-13:
            raise ValueError(f"edge {edge.id} normal is not unit length")
        ends = edge_point(mesh, edge.id, np.array([-1.0, 1.0]))
        if np.max(np.abs(ends - edge.endpoints)) > 1e-13:
            raise ValueError(f"edge {edge.id} trace endpoints mismatch")

    for eid in range(mesh.n_edges):
        mesh.edge_category(eid)  # raises if not exactly one category

    for a, b in mesh.periodic_pairs:
        la = edge_length(mesh, a)
        lb = edge_length(mesh, b)
        if abs(la - lb) > 1e-12 * max(la, 1.0):
            raise ValueError(f"periodic pair ({a}, {b}) has unequal lengths")

    for zone in mesh.interface_zones:
        for side_edges, want_sign in ((zone.left_edges, 1.0), (zone.right_edges, -1.0)):
            spans = []
            for eid in side_edges:
                ends = mesh.edges[eid].endpoints
                if np.max(np.abs(ends[:, 0] - zone.x)) > 1e-10:
                    raise ValueError(f"zone edge {eid} is off the line x={zone.x}")
                n = edge_normal(mesh, eid, np.zeros(1))[0]
                if abs(n[0] - want_sign) > 1e-12 or abs(n[1]) > 1e-12:
                    raise ValueError(f"zone edge {eid} normal {n} inconsistent")
                spans.append(edge_span_y(mesh, eid))
            spans.sort()
            for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
                if abs(a1 - b0) > 1e-10:
                    raise ValueError(f"zone side has gap/overlap at y={a1}")
        left_total = sum(edge_length(mesh, e) for e in zone.left_edges)
        right_total = sum(edge_length(mesh, e) for e in zone.right_edges)
        if abs(left_total - right_total) > 1e-10 * max(left_total, 1.0):
            raise ValueError("zone sides have different total spans")
        lo_l = min(edge_span_y(mesh, e)[0] for e in zone.left_edges)
        lo_r = min(edge_span_y(mesh, e)[0] for e in zone.right_edges)
        hi_l = max(edge_span_y(mesh, e)[1] for e in zone.left_edges)
        hi_r = max(edge_span_y(mesh, e)[1] for e in zone.right_edges)
        if abs(lo_l - lo_r) > 1e-10 or abs(hi_l - hi_r) > 1e-10:
            raise ValueError("zone sides cover different spans")
