"""DG right-hand-side assembly, projection, and RK4 stepping.

The operator precomputes all static data (geometry at quadrature points,
mass-matrix inverses grouped by element geometry, edge normals and surface
Jacobians, connectivity index arrays) so each right-hand-side evaluation is a
short sequence of batched tensor contractions over all elements at once.

Solution coefficients are nodal values at the (P+1)^2 tensor-product GLL
solution points, stored as (n_elements, n_vars, P+1, P+1) with the xi index
first.  Traces on the four sides are plain slices of that array (see the
side convention in mesh.py).  Volume and surface integrals both use the
Q-point GLL rule, Q >= P+2.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .basis import NodalBasis, gll_rule, interpolation_matrix, segment_mass_matrix
from .errors import DivergedError
from .mesh import SIDE_NORMAL_SIGN, Mesh
from .physics import AdvectionModel, EulerModel, upwind_flux
from .riemann import exact_riemann_flux

# coefficient-slice selectors for each side's nodal line
_SIDE_SLICES = (
    (slice(None), 0),     # south: [:, 0]
    (-1, slice(None)),    # east:  [P, :]
    (slice(None), -1),    # north: [:, P]
    (0, slice(None)),     # west:  [0, :]
)


@dataclass
class Field:
    """Per-element tensor-product nodal coefficients of the conserved vars."""

    mesh: Mesh
    order: int
    n_vars: int
    coeffs: np.ndarray  # (n_elements, n_vars, P+1, P+1)

    def copy(self) -> "Field":
        return Field(self.mesh, self.order, self.n_vars, self.coeffs.copy())

    def check_finite(self, t: float) -> None:
        if not np.all(np.isfinite(self.coeffs)):
            raise DivergedError(f"non-finite coefficients at t={t}", time=t)


@dataclass
class TraceData:
    """Interior/exterior values and normals at edge quadrature points."""

    u_minus: np.ndarray   # (n_edges, n_vars, Q)
    u_plus: np.ndarray    # NaN where no exterior (boundary edges)
    normals: np.ndarray   # (n_edges, Q, 2)


class PhaseTimers:
    """Cumulative per-phase wall-clock accounting for one run."""

    PHASES = ("setup", "volume", "surface", "interface", "time_integration")

    def __init__(self):
        self.seconds = dict.fromkeys(self.PHASES, 0.0)

    def add(self, phase: str, dt: float) -> None:
        self.seconds[phase] += dt


class DgOperator:
    """Spatial DG operator on one mesh for one physics model.

    ``method`` selects the interface-zone treatment: 'conformal' (zones must
    be aligned), 'mortar', or 'p2p'.  Meshes without zones ignore it.
    """

    def __init__(self, mesh: Mesh, order: int, quad_points: int, model,
                 method: str = "conformal", farfield_state=None,
                 timers: PhaseTimers | None = None):
        if quad_points < order + 2:
            raise ValueError(
                f"insufficient quadrature: Q={quad_points} < P+2={order + 2}")
        t0 = time.perf_counter()
        self.mesh = mesh
        self.order = order
        self.n_quad = quad_points
        self.model = model
        self.n_vars = model.n_vars
        self.method = method
        self.timers = timers or PhaseTimers()

        self.basis = NodalBasis(order)
        self.quad = gll_rule(quad_points)
        self.interp_q = interpolation_matrix(self.basis, self.quad.points)
        self.deriv_q = self.interp_q @ self.basis.diff_matrix
        self.segment_mass = segment_mass_matrix(self.basis, self.quad)
        self.segment_mass_inv = np.linalg.inv(self.segment_mass)
        # discrete L2 projection of quadrature-point values onto degree P
        self.quad_project = self.segment_mass_inv @ (self.interp_q.T *
                                                     self.quad.weights)
        # 2D tensor-product operators flattened to single matrices so each
        # right-hand side is a handful of large BLAS products
        self.interp2 = np.kron(self.interp_q, self.interp_q)   # (Q^2, N^2)
        self.vol_op_xi = np.kron(self.deriv_q, self.interp_q)  # (Q^2, N^2)
        self.vol_op_eta = np.kron(self.interp_q, self.deriv_q)

        self._build_geometry()
        self._build_mass()
        self._build_connectivity()
        self._bind_model(farfield_state)

        self.zone_handlers = []
        if mesh.interface_zones:
            from .interfaces import make_zone_handler
            for zone in mesh.interface_zones:
                self.zone_handlers.append(make_zone_handler(method, self, zone))
        self.timers.add("setup", time.perf_counter() - t0)

    # -- static data ------------------------------------------------------

    def _build_geometry(self):
        mesh, quad = self.mesh, self.quad
        n_el = mesh.n_elements
        q = quad.n
        orders = {el.geometry_order for el in mesh.elements}
        self.x_q = np.empty((n_el, q, q, 2))
        d_dxi = np.empty((n_el, q, q, 2))
        d_deta = np.empty((n_el, q, q, 2))
        self.edge_x = np.empty((4 * n_el, q, 2))
        self.edge_normals = np.empty((4 * n_el, q, 2))
        self.edge_sj = np.empty((4 * n_el, q))
        for g in orders:
            sel = np.array([el.id for el in mesh.elements if el.geometry_order == g])
            gb = NodalBasis(g)
            nodes = np.stack([mesh.elements[e].geometry_nodes for e in sel])
            ig = interpolation_matrix(gb, quad.points)
            dg = ig @ gb.diff_matrix
            self.x_q[sel] = np.einsum("qa,rb,eabc->eqrc", ig, ig, nodes)
            d_dxi[sel] = np.einsum("qa,rb,eabc->eqrc", dg, ig, nodes)
            d_deta[sel] = np.einsum("qa,rb,eabc->eqrc", ig, dg, nodes)
            edge_nodes = (nodes[:, :, 0, :], nodes[:, -1, :, :],
                          nodes[:, :, -1, :], nodes[:, 0, :, :])
            for side in range(4):
                ids = 4 * sel + side
                pts = np.einsum("qa,eac->eqc", ig, edge_nodes[side])
                tan = np.einsum("qa,eac->eqc", dg, edge_nodes[side])
                sj = np.linalg.norm(tan, axis=-1)
                nrm = SIDE_NORMAL_SIGN[side] * np.stack(
                    [tan[..., 1], -tan[..., 0]], axis=-1) / sj[..., None]
                self.edge_x[ids] = pts
                self.edge_normals[ids] = nrm
                self.edge_sj[ids] = sj

        self.jac_det = (d_dxi[..., 0] * d_deta[..., 1] -
                        d_dxi[..., 1] * d_deta[..., 0])
        if np.any(self.jac_det <= 0.0):
            raise ValueError("mesh has non-positive Jacobian at quadrature points")
        self.dxi_dx = d_deta[..., 1] / self.jac_det
        self.dxi_dy = -d_deta[..., 0] / self.jac_det
        self.deta_dx = -d_dxi[..., 1] / self.jac_det
        self.deta_dy = d_dxi[..., 0] / self.jac_det
        w2 = np.outer(quad.weights, quad.weights)
        self.jw = self.jac_det * w2
        self.lift_w = self.edge_sj * quad.weights[None, :]
        # metric terms pre-scaled by J*w, flattened over the volume grid
        qq = q * q
        self._mxx = (self.dxi_dx * self.jw).reshape(n_el, qq)
        self._mxy = (self.dxi_dy * self.jw).reshape(n_el, qq)
        self._myx = (self.deta_dx * self.jw).reshape(n_el, qq)
        self._myy = (self.deta_dy * self.jw).reshape(n_el, qq)

    def _build_mass(self):
        n1 = self.order + 1
        groups: dict[bytes, list[int]] = {}
        for e in range(self.mesh.n_elements):
            key = np.round(self.jw[e], 13).tobytes()
            groups.setdefault(key, []).append(e)
        self._mass_groups = []
        iq = self.interp_q
        for ids in groups.values():
            jw = self.jw[ids[0]]
            m4 = np.einsum("qn,rm,qr,qN,rM->nmNM", iq, iq, jw, iq, iq)
            m2 = m4.reshape(n1 * n1, n1 * n1)
            self._mass_groups.append((np.array(ids), np.linalg.inv(m2)))

    def _apply_inverse_mass(self, rhs: np.ndarray) -> np.ndarray:
        n_el, n_vars = rhs.shape[:2]
        n1 = self.order + 1
        flat = rhs.reshape(n_el, n_vars, n1 * n1)
        out = np.empty_like(flat)
        for ids, minv in self._mass_groups:
            sel = flat[ids]
            out[ids] = (sel.reshape(-1, n1 * n1) @ minv.T).reshape(sel.shape)
        return out.reshape(rhs.shape)

    def _build_connectivity(self):
        mesh = self.mesh
        pa, pb, rev = [], [], []
        for a, b, r in mesh.conformal_pairs:
            pa.append(a)
            pb.append(b)
            rev.append(r)
        self.pair_a = np.array(pa, dtype=int)
        self.pair_b = np.array(pb, dtype=int)
        self.pair_rev = np.array(rev, dtype=bool)
        if np.any(self.pair_rev):
            # matched quadrature points on reversed pairs need index flips;
            # the structured generators never produce them
            raise NotImplementedError("reversed conformal pairs are not supported")
        self.bc_dirichlet = np.array(
            sorted(e for e, tag in mesh.boundary_tags.items() if tag == "dirichlet0"),
            dtype=int)
        self.bc_farfield = np.array(
            sorted(e for e, tag in mesh.boundary_tags.items() if tag == "farfield"),
            dtype=int)
        # all non-zone fluxes go through one batched call per evaluation
        self._surf_ids = np.concatenate(
            [self.pair_a, self.bc_dirichlet, self.bc_farfield]).astype(int)
        self._n_pairs = len(self.pair_a)
        self._n_dirichlet = len(self.bc_dirichlet)

    def _bind_model(self, farfield_state):
        model = self.model
        if isinstance(model, EulerModel) and len(self.bc_dirichlet):
            raise ValueError(
                "dirichlet-zero exterior state is a vacuum for the Euler "
                "equations; use far-field or periodic boundaries")
        if isinstance(model, AdvectionModel):
            vx, vy = model.velocity_at(self.x_q[..., 0], self.x_q[..., 1])
            self._vol_vx, self._vol_vy = vx, vy
            n_el = self.mesh.n_elements
            qq = self.quad.n ** 2
            self._adv_a = ((self.dxi_dx * vx + self.dxi_dy * vy) *
                           self.jw).reshape(n_el, qq)
            self._adv_b = ((self.deta_dx * vx + self.deta_dy * vy) *
                           self.jw).reshape(n_el, qq)
            evx, evy = model.velocity_at(self.edge_x[..., 0], self.edge_x[..., 1])
            self.edge_vn = (evx * self.edge_normals[..., 0] +
                            evy * self.edge_normals[..., 1])
        elif not isinstance(model, EulerModel):
            raise TypeError(f"unsupported model {model!r}")
        if farfield_state is None and len(self.bc_farfield):
            raise ValueError("far-field boundary present but no state given")
        self.farfield_state = (None if farfield_state is None
                               else np.asarray(farfield_state, dtype=float))

    # -- field construction ------------------------------------------------

    def project(self, func) -> Field:
        """Discrete L2 projection of a pointwise function onto the field.

        ``func(x, y)`` maps coordinate arrays to either a scalar array or a
        tuple/array of n_vars component arrays.
        """
        vals = func(self.x_q[..., 0], self.x_q[..., 1])
        if self.n_vars == 1:
            vals = np.asarray(vals)[:, None]
        else:
            vals = np.asarray(vals)
            if vals.shape[-1] == self.n_vars:  # components on last axis
                vals = np.moveaxis(vals, -1, 1)
        if not np.all(np.isfinite(vals)):
            raise ValueError("initial condition is not finite on the domain")
        n_el = self.mesh.n_elements
        n1 = self.order + 1
        weighted = (vals * self.jw[:, None]).reshape(n_el * self.n_vars, -1)
        rhs = (weighted @ self.interp2).reshape(n_el, self.n_vars, n1, n1)
        return Field(self.mesh, self.order, self.n_vars,
                     self._apply_inverse_mass(rhs))

    def constant_field(self, values) -> Field:
        vals = np.atleast_1d(np.asarray(values, dtype=float))
        n1 = self.order + 1
        coeffs = np.broadcast_to(
            vals[None, :, None, None],
            (self.mesh.n_elements, self.n_vars, n1, n1)).copy()
        return Field(self.mesh, self.order, self.n_vars, coeffs)

    # -- traces and fluxes --------------------------------------------------

    def nodal_traces(self, coeffs: np.ndarray) -> np.ndarray:
        """Nodal trace table (4*n_el, n_vars, P+1); row 4e+s is side s of e."""
        n_el, n_vars, n1, _ = coeffs.shape
        tn = np.empty((4 * n_el, n_vars, n1))
        for side in range(4):
            si, sj = _SIDE_SLICES[side]
            tn[side::4] = coeffs[:, :, si, sj]
        return tn

    def trace_values(self, coeffs: np.ndarray) -> np.ndarray:
        """Interior trace values at edge quadrature points (4*n_el, n_vars, Q)."""
        tn = self.nodal_traces(coeffs)
        n1 = self.order + 1
        flat = tn.reshape(-1, n1) @ self.interp_q.T
        return flat.reshape(tn.shape[0], tn.shape[1], self.quad.n)

    def numerical_flux(self, um: np.ndarray, up: np.ndarray,
                       edge_ids: np.ndarray) -> np.ndarray:
        """Normal numerical flux at the quadrature points of the given edges.

        um/up are (n, n_vars, Q) from the perspective of the edges' own
        outward normals.
        """
        if isinstance(self.model, AdvectionModel):
            vn = self.edge_vn[edge_ids]
            return upwind_flux(um, up, vn[:, None, :])
        normals = self.edge_normals[edge_ids]
        f = exact_riemann_flux(np.moveaxis(um, 1, -1), np.moveaxis(up, 1, -1),
                               normals, gamma=self.model.gamma)
        return np.moveaxis(f, -1, 1)

    def gather_traces(self, field: Field) -> TraceData:
        """TraceData with exterior values filled on conformal/periodic pairs."""
        et = self.trace_values(field.coeffs)
        up = np.full_like(et, np.nan)
        up[self.pair_a] = et[self.pair_b]
        up[self.pair_b] = et[self.pair_a]
        return TraceData(u_minus=et, u_plus=up, normals=self.edge_normals)

    # -- right-hand side ----------------------------------------------------

    def rhs(self, coeffs: np.ndarray, t: float) -> np.ndarray:
        """du/dt for the weak form: M du = volume - surface-lift."""
        iq = self.interp_q
        n_el, n_vars, n1, _ = coeffs.shape
        qq = self.quad.n ** 2

        t0 = time.perf_counter()
        uq = (coeffs.reshape(n_el * n_vars, n1 * n1) @ self.interp2.T)
        if isinstance(self.model, AdvectionModel):
            a = self._adv_a[:, None] * uq.reshape(n_el, n_vars, qq)
            b = self._adv_b[:, None] * uq.reshape(n_el, n_vars, qq)
        else:
            u3 = uq.reshape(n_el, n_vars, qq)
            rho, mx, my, en = u3[:, 0], u3[:, 1], u3[:, 2], u3[:, 3]
            vx = mx / rho
            vy = my / rho
            p = (self.model.gamma - 1.0) * (en - 0.5 * (mx * vx + my * vy))
            enp = en + p
            fx = np.stack([mx, p + mx * vx, my * vx, vx * enp], axis=1)
            fy = np.stack([my, mx * vy, p + my * vy, vy * enp], axis=1)
            a = self._mxx[:, None] * fx + self._mxy[:, None] * fy
            b = self._myx[:, None] * fx + self._myy[:, None] * fy
        vol = (a.reshape(n_el * n_vars, qq) @ self.vol_op_xi +
               b.reshape(n_el * n_vars, qq) @ self.vol_op_eta)
        vol = vol.reshape(coeffs.shape)
        self.timers.add("volume", time.perf_counter() - t0)

        t0 = time.perf_counter()
        et = self.trace_values(coeffs)
        flux_table = np.zeros_like(et)
        if len(self._surf_ids):
            ids = self._surf_ids
            np_, nd = self._n_pairs, self._n_dirichlet
            up = np.zeros_like(et[ids])
            up[:np_] = et[self.pair_b]
            if len(ids) - np_ - nd:
                up[np_ + nd:] = self.farfield_state[None, :, None]
            f = self.numerical_flux(et[ids], up, ids)
            flux_table[ids] = f
            flux_table[self.pair_b] = -f[:np_]
        self.timers.add("surface", time.perf_counter() - t0)

        t0 = time.perf_counter()
        if self.zone_handlers:
            tn = self.nodal_traces(coeffs)
            for handler in self.zone_handlers:
                handler.compute_fluxes(tn, et, flux_table)
        self.timers.add("interface", time.perf_counter() - t0)

        t0 = time.perf_counter()
        weighted = flux_table * self.lift_w[:, None, :]
        surf = np.zeros_like(coeffs)
        for side in range(4):
            contrib = (weighted[side::4].reshape(n_el * n_vars, -1) @ iq)
            si, sj = _SIDE_SLICES[side]
            surf[:, :, si, sj] += contrib.reshape(n_el, n_vars, n1)
        out = self._apply_inverse_mass(vol - surf)
        self.timers.add("volume", time.perf_counter() - t0)
        return out

    def rhs_field(self, field: Field, t: float = 0.0) -> Field:
        return Field(self.mesh, self.order, self.n_vars,
                     self.rhs(field.coeffs, t))

    # -- diagnostics ---------------------------------------------------------

    def interface_flux_integrals(self, flux_table: np.ndarray) -> list[np.ndarray]:
        """Per zone: sum over both sides of the edge flux integrals (n_vars,).

        Zero (to roundoff) for a conservative interface treatment.
        """
        out = []
        for zone in self.mesh.interface_zones:
            total = np.zeros(self.n_vars)
            for eid in list(zone.left_edges) + list(zone.right_edges):
                total += flux_table[eid] @ self.lift_w[eid]
            out.append(total)
        return out

    def zone_flux_table(self, field: Field) -> np.ndarray:
        """Flux table with only the interface-zone rows filled (diagnostics)."""
        et = self.trace_values(field.coeffs)
        tn = self.nodal_traces(field.coeffs)
        flux_table = np.zeros_like(et)
        for handler in self.zone_handlers:
            handler.compute_fluxes(tn, et, flux_table)
        return flux_table


def rk4_step(y: np.ndarray, rate, t: float, dt: float) -> np.ndarray:
    """Classical 4-stage Runge-Kutta update for dy/dt = rate(t, y)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    k1 = rate(t, y)
    k2 = rate(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = rate(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = rate(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
