import numpy as np
import pytest

from ncdg.errors import InterfaceCoverageError
from ncdg.locate import (
    EdgeBoxIndex,
    edge_bounding_boxes,
    find_opposing_edge,
    locate_point_on_edge,
)
from ncdg.mesh import (
    BoundarySpec,
    Edge,
    Element,
    Mesh,
    build_cartesian_mesh,
    build_shifted_interface_mesh,
    edge_point,
    edge_span_y,
    validate_mesh,
)


def make_curved_mesh(bulge=0.2):
    """Single quadratic element whose east edge is the parabola
    x(s) = 1 + bulge*(1 - s^2), y(s) = s."""
    vertices = np.array([[0.0, -1.0], [1.0, -1.0], [1.0, 1.0], [0.0, 1.0]])
    g = np.zeros((3, 3, 2))
    for a, xv in enumerate((0.0, 0.5, 1.0)):
        for b, yv in enumerate((-1.0, 0.0, 1.0)):
            g[a, b] = (xv, yv)
    g[2, 1, 0] = 1.0 + bulge
    g[1, 1, 0] = 0.5 + 0.5 * bulge
    element = Element(id=0, vertex_ids=(0, 1, 2, 3), geometry_order=2,
                      geometry_nodes=g)
    edges = []
    corner_pairs = ((0, 1), (1, 2), (3, 2), (0, 3))
    for side, (c0, c1) in enumerate(corner_pairs):
        ends = np.array([vertices[element.vertex_ids[c0]],
                         vertices[element.vertex_ids[c1]]])
        edges.append(Edge(id=side, element_id=0, side=side, endpoints=ends))
    tags = {i: "dirichlet0" for i in range(4)}
    return Mesh(vertices=vertices, elements=[element], edges=edges,
                conformal_pairs=[], boundary_tags=tags)


def golden_section_min(f, lo, hi, tol=1e-14):
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


class TestLocateStraight:
    def test_midpoint(self):
        mesh = build_cartesian_mesh((0, 1, 0, 1), 1, 1,
                                    BoundarySpec(x="dirichlet0", y="dirichlet0"))
        # west edge (id 3) runs (0,0) -> (0,1)
        s, dist = locate_point_on_edge(mesh, 3, (0.0, 0.5))
        assert s == pytest.approx(0.0, abs=1e-12)
        assert dist == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_offset(self):
        mesh = build_cartesian_mesh((0, 1, 0, 1), 1, 1,
                                    BoundarySpec(x="dirichlet0", y="dirichlet0"))
        s, dist = locate_point_on_edge(mesh, 3, (0.3, 0.5))
        assert s == pytest.approx(0.0, abs=1e-12)
        assert dist == pytest.approx(0.3, abs=1e-12)

    def test_matches_analytic_clamped_projection(self):
        mesh = build_cartesian_mesh((-1, 2, 0, 2), 3, 2,
                                    BoundarySpec(x="dirichlet0", y="dirichlet0"))
        rng = np.random.default_rng(8)
        for _ in range(100):
            eid = int(rng.integers(0, mesh.n_edges))
            target = rng.uniform(-2, 3, size=2)
            s, dist = locate_point_on_edge(mesh, eid, target)
            a, b = mesh.edges[eid].endpoints
            t = np.clip(np.dot(target - a, b - a) / np.dot(b - a, b - a), 0, 1)
            proj = a + t * (b - a)
            assert s == pytest.approx(2 * t - 1, abs=1e-10)
            assert dist == pytest.approx(np.linalg.norm(target - proj), abs=1e-12)


class TestLocateCurved:
    def test_on_curve_points_recovered(self):
        mesh = make_curved_mesh()
        validate_mesh(mesh)
        rng = np.random.default_rng(21)
        for s_true in rng.uniform(-1, 1, 50):
            target = edge_point(mesh, 1, np.array([s_true]))[0]
            s, dist = locate_point_on_edge(mesh, 1, target)
            mapped = edge_point(mesh, 1, np.array([s]))[0]
            assert np.linalg.norm(mapped - target) <= 1e-10

    def test_against_golden_section_oracle(self):
        mesh = make_curved_mesh()
        rng = np.random.default_rng(22)
        for _ in range(30):
            target = rng.uniform(-0.5, 2.0, size=2)

            def objective(s):
                return np.sum((edge_point(mesh, 1, np.array([s]))[0] - target) ** 2)

            s_oracle = golden_section_min(objective, -1.0, 1.0)
            s, dist = locate_point_on_edge(mesh, 1, target)
            assert dist**2 <= objective(s_oracle) + 1e-12


class TestBoxIndex:
    def zone_mesh(self):
        return build_shifted_interface_mesh(
            (-2, 2, -2, 2), (4, 4), 8, 0.5,
            BoundarySpec(x="dirichlet0", y="dirichlet0"))

    def test_point_inside_one_box(self):
        mesh = self.zone_mesh()
        zone = mesh.interface_zones[0]
        index = edge_bounding_boxes(mesh, zone, "right")
        eid = zone.right_edges[3]
        lo, hi = edge_span_y(mesh, eid)
        hits = index.query((0.0, 0.5 * (lo + hi)))
        assert eid in hits

    def test_shared_endpoint_returns_both(self):
        mesh = self.zone_mesh()
        zone = mesh.interface_zones[0]
        index = edge_bounding_boxes(mesh, zone, "left")
        e0, e1 = zone.left_edges[0], zone.left_edges[1]
        y_shared = edge_span_y(mesh, e0)[1]
        hits = index.query((0.0, y_shared))
        assert e0 in hits and e1 in hits

    @pytest.mark.parametrize("shift", [0.0, 0.3, 0.5, 0.77])
    def test_completeness_against_exhaustive_scan(self, shift):
        mesh = build_shifted_interface_mesh(
            (-2, 2, -2, 2), (4, 4), 8, shift,
            BoundarySpec(x="dirichlet0", y="dirichlet0"))
        zone = mesh.interface_zones[0]
        index = edge_bounding_boxes(mesh, zone, "right")
        rng = np.random.default_rng(17)
        for y in rng.uniform(-2, 2, 250):
            target = (0.0, y)
            hits = index.query(target)
            best = min(
                zone.right_edges,
                key=lambda e: locate_point_on_edge(mesh, e, target)[1],
            )
            assert best in hits, (shift, y)

    def test_curved_edge_box_contains_curve(self):
        mesh = make_curved_mesh()
        index = EdgeBoxIndex(mesh, [1])
        for s in np.linspace(-1, 1, 33):
            pt = edge_point(mesh, 1, np.array([s]))[0]
            assert index.query(pt) == [1]


class TestFindOpposing:
    def test_aligned_maps_to_facing_edge(self):
        mesh = build_shifted_interface_mesh((-2, 2, -2, 2), (2, 2), 4, 0.0,
                                            BoundarySpec(x="dirichlet0", y="dirichlet0"))
        zone = mesh.interface_zones[0]
        for k, left in enumerate(zone.left_edges):
            target = edge_point(mesh, left, np.array([0.31]))[0]
            eid, s = find_opposing_edge(mesh, zone, "left", target)
            assert eid == zone.right_edges[k]
            mapped = edge_point(mesh, eid, np.array([s]))[0]
            assert np.linalg.norm(mapped - target) <= 1e-12

    def test_half_shift_midpoint(self):
        mesh = build_shifted_interface_mesh((-2, 2, -2, 2), (2, 2), 4, 0.5,
                                            BoundarySpec(x="dirichlet0", y="dirichlet0"))
        zone = mesh.interface_zones[0]
        left = zone.left_edges[1]
        target = edge_point(mesh, left, np.array([0.0]))[0]  # midpoint
        eid, s = find_opposing_edge(mesh, zone, "left", target)
        lo, hi = edge_span_y(mesh, eid)
        assert lo <= target[1] <= hi
        mapped = edge_point(mesh, eid, np.array([s]))[0]
        assert np.linalg.norm(mapped - target) <= 1e-12

    def test_vertex_tie_breaks_to_lower_id(self):
        mesh = build_shifted_interface_mesh((-2, 2, -2, 2), (2, 2), 4, 0.0,
                                            BoundarySpec(x="dirichlet0", y="dirichlet0"))
        zone = mesh.interface_zones[0]
        e0, e1 = zone.right_edges[1], zone.right_edges[2]
        y_shared = edge_span_y(mesh, e0)[1]
        eid, _ = find_opposing_edge(mesh, zone, "left", (0.0, y_shared))
        assert eid == min(e0, e1)

    def test_involutive_on_span_interiors(self):
        mesh = build_shifted_interface_mesh((-2, 2, -2, 2), (2, 2), 4, 0.5,
                                            BoundarySpec(x="dirichlet0", y="dirichlet0"))
        zone = mesh.interface_zones[0]
        rng = np.random.default_rng(4)
        for left in zone.left_edges:
            s0 = float(rng.uniform(-0.9, 0.9))
            target = edge_point(mesh, left, np.array([s0]))[0]
            right, s_r = find_opposing_edge(mesh, zone, "left", target)
            back_pt = edge_point(mesh, right, np.array([s_r]))[0]
            back, s_b = find_opposing_edge(mesh, zone, "right", back_pt)
            assert back == left

    def test_coverage_error_off_interface(self):
        mesh = build_shifted_interface_mesh((-2, 2, -2, 2), (2, 2), 4, 0.5,
                                            BoundarySpec(x="dirichlet0", y="dirichlet0"))
        zone = mesh.interface_zones[0]
        with pytest.raises(InterfaceCoverageError):
            find_opposing_edge(mesh, zone, "left", (0.5, 0.0))
