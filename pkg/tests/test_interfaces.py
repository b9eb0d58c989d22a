import numpy as np
import pytest

from ncdg.basis import gll_rule
from ncdg.dg import DgOperator
from ncdg.errors import InterfaceCoverageError
from ncdg.interfaces import (
    build_mortars,
    build_p2p_map,
    mortar_flux_and_return,
    p2p_exterior_trace,
    project_to_mortar,
)
from ncdg.mesh import (
    BoundarySpec,
    build_column_mesh,
    build_shifted_interface_mesh,
    edge_length,
)
from ncdg.physics import AdvectionModel, EulerModel

DIRICHLET = BoundarySpec(x="dirichlet0", y="dirichlet0")


def shifted_op(shift, columns=(2, 2), ny=4, p=3, q=None, domain=(-2, 2, -2, 2),
               model=None, method="p2p", boundary=DIRICHLET, **kw):
    mesh = build_shifted_interface_mesh(domain, columns, ny, shift, boundary)
    model = model or AdvectionModel(velocity=(1.0, 0.0))
    return DgOperator(mesh, p, q or p + 2, model, method=method, **kw)


def fig2_mesh(boundary=DIRICHLET):
    """3 left edges (thirds) facing 2 right edges (halves), as a single
    column pair on the unit square."""
    xs_l = np.array([0.0, 0.5])
    xs_r = np.array([0.5, 1.0])
    ys_l = np.array([0.0, 1 / 3, 2 / 3, 1.0])
    ys_r = np.array([0.0, 0.5, 1.0])
    return build_column_mesh([0.0, 0.5, 1.0], [(xs_l, ys_l), (xs_r, ys_r)],
                             boundary)


class TestP2PMap:
    def test_aligned_maps_to_mirror(self):
        op = shifted_op(0.0)
        zone = op.mesh.interface_zones[0]
        p2p = build_p2p_map(op, zone)
        for k, eid in enumerate(p2p.left.edge_ids):
            assert np.all(p2p.left.opposing[k] == zone.right_edges[k])
            # facing edges share the trace parameter direction, so the
            # located coordinate equals the quadrature coordinate
            np.testing.assert_allclose(p2p.left.xi_star[k], op.quad.points,
                                       atol=1e-12)
        assert np.max(p2p.left.distances) <= 1e-12
        assert np.max(p2p.right.distances) <= 1e-12

    def test_half_shift_splits_across_two_edges(self):
        op = shifted_op(0.5, columns=(8, 8), ny=16, p=3)
        zone = op.mesh.interface_zones[0]
        p2p = build_p2p_map(op, zone)
        for k in range(len(p2p.left.edge_ids)):
            assert len(set(p2p.left.opposing[k])) <= 2

    def test_every_point_has_entry_within_tolerance(self):
        op = shifted_op(0.5, columns=(7, 7, 7), ny=21, p=5, q=12,
                        domain=(-5, 5, -5, 5),
                        boundary=BoundarySpec(x="periodic", y="farfield"),
                        model=EulerModel(),
                        farfield_state=EulerModel().conserved(1, 1, 0, 1))
        zone = op.mesh.interface_zones[0]
        p2p = build_p2p_map(op, zone)
        assert p2p.left.opposing.shape == (21, 12)
        assert p2p.right.opposing.shape == (22, 12)
        assert np.max(p2p.left.distances) <= 1e-8
        assert np.max(p2p.right.distances) <= 1e-8


class TestP2PTrace:
    def test_constant_field(self):
        op = shifted_op(0.5)
        zone = op.mesh.interface_zones[0]
        handler = op.zone_handlers[0]
        f = op.constant_field(3.7)
        tn = op.nodal_traces(f.coeffs)
        up = p2p_exterior_trace(handler.map.left, tn)
        np.testing.assert_allclose(up, 3.7, atol=1e-13)

    def test_linear_field_exact(self):
        op = shifted_op(0.5)
        handler = op.zone_handlers[0]
        f = op.project(lambda x, y: x + 2 * y)
        tn = op.nodal_traces(f.coeffs)
        for side_map, ids in ((handler.map.left, handler.map.left.edge_ids),
                              (handler.map.right, handler.map.right.edge_ids)):
            up = p2p_exterior_trace(side_map, tn)
            exact = (op.edge_x[ids][..., 0] + 2 * op.edge_x[ids][..., 1])
            np.testing.assert_allclose(up[:, 0, :], exact, atol=1e-12)

    def test_discontinuous_field_matches_direct_evaluation(self):
        # field is a different polynomial on each side of the zone; u+ must
        # equal the monomial evaluation of the opposing element's trace
        op = shifted_op(0.5, p=3)
        zone = op.mesh.interface_zones[0]
        handler = op.zone_handlers[0]
        rng = np.random.default_rng(5)
        f = op.constant_field(0.0)
        f.coeffs[:] = rng.standard_normal(f.coeffs.shape)
        tn = op.nodal_traces(f.coeffs)
        side_map = handler.map.left
        up = p2p_exterior_trace(side_map, tn)
        for k in range(len(side_map.edge_ids)):
            for j in range(op.quad.n):
                opp = side_map.opposing[k, j]
                xi = side_map.xi_star[k, j]
                vander = np.vander(op.basis.nodes, increasing=True)
                coef = np.linalg.solve(vander, tn[opp, 0])
                direct = np.polyval(coef[::-1], xi)
                assert up[k, 0, j] == pytest.approx(direct, abs=1e-12)


class TestMortarConstruction:
    def test_aligned_all_identity(self):
        op = shifted_op(0.0, columns=(3, 3), ny=6)
        zone = op.mesh.interface_zones[0]
        patches = build_mortars(op, zone)
        assert len(patches) == 6
        for patch in patches:
            for side in (patch.left, patch.right):
                assert side.identity
                assert side.offset == 0.0 and side.scale == 1.0

    def test_half_shift_interior_split(self):
        op = shifted_op(0.5, columns=(2, 2), ny=4)
        zone = op.mesh.interface_zones[0]
        patches = build_mortars(op, zone)
        # 4 left edges vs 5 right edges -> 9 breakpoints -> 8 intervals
        assert len(patches) == 8
        scales = sorted(p.left.scale for p in patches)
        assert scales[0] == pytest.approx(0.5, abs=1e-12)
        # every interior left edge is split into two halves
        by_edge = {}
        for p in patches:
            by_edge.setdefault(p.left.edge_id, []).append(p.left.scale)
        for eid, ss in by_edge.items():
            assert sum(ss) == pytest.approx(1.0, abs=1e-12)

    def test_fig2_widths(self):
        mesh = fig2_mesh()
        op = DgOperator(mesh, 3, 5, AdvectionModel(), method="mortar")
        zone = mesh.interface_zones[0]
        patches = build_mortars(op, zone)
        widths = sorted(p.interval[1] - p.interval[0] for p in patches)
        np.testing.assert_allclose(widths, [1 / 6, 1 / 6, 1 / 3, 1 / 3],
                                   atol=1e-12)

    def test_tiling_sums_to_one(self):
        op = shifted_op(0.5, columns=(7, 7, 7), ny=21, domain=(-5, 5, -5, 5),
                        boundary=BoundarySpec(x="periodic", y="farfield"),
                        model=EulerModel(),
                        farfield_state=EulerModel().conserved(1, 1, 0, 1),
                        method="mortar")
        for zone in op.mesh.interface_zones:
            patches = build_mortars(op, zone)
            tiling = {}
            for p in patches:
                for side in (p.left, p.right):
                    tiling[side.edge_id] = tiling.get(side.edge_id, 0.0) + side.scale
                assert 0.0 < p.left.scale <= 1.0
                assert abs(p.left.offset) + p.left.scale <= 1.0 + 1e-12
            for eid, total in tiling.items():
                assert total == pytest.approx(1.0, abs=1e-12)

    def test_s_matrix_adjointness(self):
        # both S matrices built from their definitions by quadrature must be
        # exact transposes
        op = shifted_op(0.5, p=4, q=6)
        zone = op.mesh.interface_zones[0]
        rule = gll_rule(op.quad.n)
        basis = op.basis
        for patch in build_mortars(op, zone):
            for side in (patch.left, patch.right):
                o, s = side.offset, side.scale
                rows_os = basis.eval_rows(o + s * rule.points)
                rows_z = basis.eval_rows(rule.points)
                s_fwd = np.einsum("qi,qj,q->ij", rows_os, rows_z, rule.weights)
                s_bwd = np.einsum("qi,qj,q->ij", rows_z, rows_os, rule.weights)
                np.testing.assert_allclose(s_bwd, s_fwd.T, atol=1e-13)
                np.testing.assert_allclose(side.s_matrix, s_fwd, atol=1e-13)


class TestMortarProjection:
    def test_identity_patch(self):
        op = shifted_op(0.0)
        patch = build_mortars(op, op.mesh.interface_zones[0])[0]
        vals = np.array([[1.0, -2.0, 0.5, 3.0]])
        np.testing.assert_allclose(project_to_mortar(patch, "left", vals), vals,
                                   atol=1e-12)

    def test_constant_any_offsets(self):
        op = shifted_op(0.5)
        for patch in build_mortars(op, op.mesh.interface_zones[0]):
            vals = np.full((1, op.order + 1), 2.25)
            out = project_to_mortar(patch, "right", vals)
            np.testing.assert_allclose(out, 2.25, atol=1e-12)

    def test_linear_trace_affine_substitution(self):
        op = shifted_op(0.5)
        patches = build_mortars(op, op.mesh.interface_zones[0])
        patch = next(p for p in patches if not p.left.identity)
        o, s = patch.left.offset, patch.left.scale
        vals = op.basis.nodes[None, :]  # u(xi) = xi
        out = project_to_mortar(patch, "left", vals)
        np.testing.assert_allclose(out[0], o + s * op.basis.nodes, atol=1e-12)

    def test_polynomial_restriction_exact(self):
        # restriction of a degree-P trace onto any mortar is still degree P,
        # so the projection reproduces it pointwise
        op = shifted_op(0.5, p=4, q=6)
        rng = np.random.default_rng(3)
        coef = rng.standard_normal(5)
        vals = np.polyval(coef[::-1], op.basis.nodes)[None, :]
        for patch in build_mortars(op, op.mesh.interface_zones[0]):
            out = project_to_mortar(patch, "left", vals)[0]
            o, s = patch.left.offset, patch.left.scale
            expected = np.polyval(coef[::-1], o + s * op.basis.nodes)
            np.testing.assert_allclose(out, expected, atol=1e-12)


class TestMortarFlux:
    def euler_zone_op(self, shift=0.5):
        model = EulerModel()
        return shifted_op(shift, columns=(2, 2), ny=4, p=3, model=model,
                          method="mortar",
                          boundary=BoundarySpec(x="farfield", y="farfield"),
                          farfield_state=model.conserved(1, 1, 0, 1))

    def test_freestream_back_projection_exact(self):
        op = self.euler_zone_op()
        model = op.model
        state = model.conserved(1.0, 1.0, 0.0, 1.0)
        f = op.constant_field(state)
        zone = op.mesh.interface_zones[0]
        nodal = mortar_flux_and_return(op, zone, f)
        fx, fy = model.flux(state)
        for eid, coeffs in nodal.items():
            n = op.edge_normals[eid, 0]
            exact = fx * n[0] + fy * n[1]
            np.testing.assert_allclose(
                coeffs, np.tile(exact[:, None], (1, op.order + 1)), atol=1e-13)

    def test_conservation_on_fig2_layout(self):
        mesh = fig2_mesh(BoundarySpec(x="farfield", y="farfield"))
        model = EulerModel()
        op = DgOperator(mesh, 3, 5, model, method="mortar",
                        farfield_state=model.conserved(1, 0.3, -0.1, 1))
        rng = np.random.default_rng(11)
        f = op.constant_field(model.conserved(1, 0.3, -0.1, 1))
        f.coeffs += 0.05 * rng.standard_normal(f.coeffs.shape)
        zone = mesh.interface_zones[0]
        nodal = mortar_flux_and_return(op, zone, f)
        ref_mass = op.segment_mass @ np.ones(op.order + 1)
        total = np.zeros(op.n_vars)
        for eid, coeffs in nodal.items():
            half_len = 0.5 * edge_length(op.mesh, eid)
            total += half_len * (coeffs @ ref_mass)
        assert np.max(np.abs(total)) <= 1e-12

    def test_interface_integral_sum_is_zero_every_variable(self):
        op = self.euler_zone_op()
        rng = np.random.default_rng(7)
        f = op.constant_field(op.model.conserved(1, 0.5, 0.1, 1))
        f.coeffs += 0.03 * rng.standard_normal(f.coeffs.shape)
        ft = op.zone_flux_table(f)
        for defect in op.interface_flux_integrals(ft):
            assert np.max(np.abs(defect)) <= 1e-12


class TestHandlerEquivalence:
    def test_aligned_advection_all_methods_identical(self):
        ops = {m: shifted_op(0.0, columns=(3, 3), ny=6, p=4, method=m)
               for m in ("conformal", "mortar", "p2p")}
        rng = np.random.default_rng(2)
        coeffs = rng.standard_normal(
            (ops["conformal"].mesh.n_elements, 1, 5, 5))
        rates = {m: op.rhs(coeffs.copy(), 0.0) for m, op in ops.items()}
        base = rates["conformal"]
        for m in ("mortar", "p2p"):
            assert np.max(np.abs(rates[m] - base)) <= 1e-11, m

    def test_aligned_euler_all_methods_identical(self):
        model = EulerModel()
        state = model.conserved(1.0, 0.4, -0.2, 1.0)
        ops = {m: shifted_op(0.0, columns=(2, 2), ny=4, p=3, model=model,
                             method=m, farfield_state=state,
                             boundary=BoundarySpec(x="farfield", y="farfield"))
               for m in ("conformal", "mortar", "p2p")}
        rng = np.random.default_rng(4)
        f = ops["conformal"].constant_field(state)
        f.coeffs += 0.02 * rng.standard_normal(f.coeffs.shape)
        rates = {m: op.rhs(f.coeffs.copy(), 0.0) for m, op in ops.items()}
        base = rates["conformal"]
        for m in ("mortar", "p2p"):
            assert np.max(np.abs(rates[m] - base)) <= 1e-10, m

    def test_conformal_handler_rejects_shifted_zone(self):
        with pytest.raises(InterfaceCoverageError):
            shifted_op(0.5, method="conformal")

    def test_polynomial_transparency(self):
        # a globally degree-P field has matching traces on both sides: both
        # handlers must see zero jump at interface quadrature points
        op = shifted_op(0.5, p=3)
        f = op.project(lambda x, y: 0.3 + x - 0.5 * y + 0.1 * x * y)
        tn = op.nodal_traces(f.coeffs)
        et = op.trace_values(f.coeffs)
        handler = op.zone_handlers[0]
        for side_map in (handler.map.left, handler.map.right):
            up = p2p_exterior_trace(side_map, tn)
            np.testing.assert_allclose(up, et[side_map.edge_ids], atol=1e-11)
        op_m = shifted_op(0.5, p=3, method="mortar")
        for patch in op_m.zone_handlers[0].patches:
            pl = project_to_mortar(patch, "left", tn[patch.left.edge_id])
            pr = project_to_mortar(patch, "right", tn[patch.right.edge_id])
            np.testing.assert_allclose(pl, pr, atol=1e-11)


class TestP2PConservationDefect:
    def test_aligned_defect_zero(self):
        op = shifted_op(0.0, columns=(3, 3), ny=6, p=4)
        rng = np.random.default_rng(9)
        f = op.constant_field(1.0)
        f.coeffs += 0.1 * rng.standard_normal(f.coeffs.shape)
        ft = op.zone_flux_table(f)
        for defect in op.interface_flux_integrals(ft):
            assert np.max(np.abs(defect)) <= 1e-12

    def test_shifted_defect_finite_and_reported(self):
        op = shifted_op(0.5, columns=(2, 2), ny=4, p=3)
        rng = np.random.default_rng(10)
        f = op.constant_field(1.0)
        f.coeffs += 0.1 * rng.standard_normal(f.coeffs.shape)
        ft = op.zone_flux_table(f)
        defects = op.interface_flux_integrals(ft)
        assert len(defects) == 1
        assert np.all(np.isfinite(defects[0]))
