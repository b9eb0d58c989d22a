"""Error norms: quadrature L2 error against an exact field, and the global
piecewise-polynomial maximum found by Newton ascent in reference coordinates
(not just the largest sampled value, which under-reads coarse fields)."""
from __future__ import annotations

import numpy as np

from .basis import gll_rule, interpolation_matrix
from .dg import DgOperator, Field


def _volume_geometry(op: DgOperator, n_quad: int):
    """x and J*w on an n_quad^2 grid per element, cached on the operator."""
    cache = getattr(op, "_vol_geom_cache", None)
    if cache is None:
        cache = op._vol_geom_cache = {}
    if n_quad in cache:
        return cache[n_quad]
    from .basis import NodalBasis
    rule = gll_rule(n_quad)
    mesh = op.mesh
    n_el = mesh.n_elements
    x = np.empty((n_el, n_quad, n_quad, 2))
    jdet = np.empty((n_el, n_quad, n_quad))
    for g in {el.geometry_order for el in mesh.elements}:
        sel = np.array([el.id for el in mesh.elements if el.geometry_order == g])
        gb = NodalBasis(g)
        nodes = np.stack([mesh.elements[e].geometry_nodes for e in sel])
        ig = interpolation_matrix(gb, rule.points)
        dg = ig @ gb.diff_matrix
        x[sel] = np.einsum("qa,rb,eabc->eqrc", ig, ig, nodes)
        d_dxi = np.einsum("qa,rb,eabc->eqrc", dg, ig, nodes)
        d_deta = np.einsum("qa,rb,eabc->eqrc", ig, dg, nodes)
        jdet[sel] = (d_dxi[..., 0] * d_deta[..., 1] -
                     d_dxi[..., 1] * d_deta[..., 0])
    jw = jdet * np.outer(rule.weights, rule.weights)
    interp = interpolation_matrix(op.basis, rule.points)
    cache[n_quad] = (x, jw, interp)
    return cache[n_quad]


def l2_error(op: DgOperator, field: Field, exact, n_quad_err: int | None = None,
             t: float = 0.0) -> np.ndarray:
    """Per-variable L2 norm of (field - exact) by n_quad_err^2 quadrature.

    ``exact(x, y, t)`` returns a scalar array or an (..., n_vars) array; pass
    ``exact=None`` for the plain L2 norm of the field.
    """
    if n_quad_err is None:
        n_quad_err = op.n_quad + 2
    if n_quad_err < op.n_quad:
        raise ValueError("error quadrature must be at least the solver's Q")
    x, jw, interp = _volume_geometry(op, n_quad_err)
    tmp = np.einsum("qi,evij->evqj", interp, field.coeffs)
    uq = np.einsum("rj,evqj->evqr", interp, tmp)
    if exact is not None:
        vals = np.asarray(exact(x[..., 0], x[..., 1], t))
        if field.n_vars == 1:
            vals = vals[:, None]
        elif vals.shape[-1] == field.n_vars:
            vals = np.moveaxis(vals, -1, 1)
        uq = uq - vals
    return np.sqrt(np.einsum("evqr,eqr->v", uq**2, jw))


def linf_peak(op: DgOperator, field: Field,
              max_iterations: int = 40) -> tuple[float, tuple[float, float]]:
    """Global maximum of a scalar piecewise-polynomial field and its location.

    Newton ascent on the reference coordinates from every quadrature seed in
    every element, clamped to the reference square; non-improving starts keep
    their seed value, so the result is never below the sampled maximum.
    """
    if field.n_vars != 1:
        raise ValueError("linf_peak is defined for scalar fields")
    u = field.coeffs[:, 0]
    n_el, n1, _ = u.shape
    basis = op.basis
    d = basis.diff_matrix
    ux = np.einsum("ai,eij->eaj", d, u)
    uy = u @ d.T
    uxx = np.einsum("ai,eij->eaj", d, ux)
    uyy = uy @ d.T
    uxy = ux @ d.T

    q = op.quad.n
    pts_xi = np.tile(np.repeat(op.quad.points, q), n_el)
    pts_eta = np.tile(np.tile(op.quad.points, q), n_el)
    eidx = np.repeat(np.arange(n_el), q * q)

    def evaluate(tensor, xi, eta):
        rx = basis.eval_rows(xi)
        ry = basis.eval_rows(eta)
        return np.einsum("bi,bij,bj->b", rx, tensor[eidx], ry)

    val = evaluate(u, pts_xi, pts_eta)
    # nodal values are also candidates (solution points)
    best_sampled = float(np.max(u))
    active = np.ones(len(val), dtype=bool)
    for _ in range(max_iterations):
        if not np.any(active):
            break
        gx = evaluate(ux, pts_xi, pts_eta)
        gy = evaluate(uy, pts_xi, pts_eta)
        hxx = evaluate(uxx, pts_xi, pts_eta)
        hyy = evaluate(uyy, pts_xi, pts_eta)
        hxy = evaluate(uxy, pts_xi, pts_eta)
        det = hxx * hyy - hxy * hxy
        concave = (det > 0) & (hxx < 0)
        safe_det = np.where(det == 0.0, 1.0, det)
        dx = np.where(concave, -(hyy * gx - hxy * gy) / safe_det, 0.0)
        dy = np.where(concave, -(-hxy * gx + hxx * gy) / safe_det, 0.0)
        active &= concave & (np.hypot(dx, dy) > 1e-13)
        step = np.ones(len(val))
        improved = np.zeros(len(val), dtype=bool)
        new_xi, new_eta, new_val = pts_xi, pts_eta, val
        for _ in range(8):
            trial = ~improved & active
            if not np.any(trial):
                break
            t_xi = np.clip(pts_xi + step * dx, -1.0, 1.0)
            t_eta = np.clip(pts_eta + step * dy, -1.0, 1.0)
            t_val = evaluate(u, t_xi, t_eta)
            accept = trial & (t_val >= val)
            new_xi = np.where(accept, t_xi, new_xi)
            new_eta = np.where(accept, t_eta, new_eta)
            new_val = np.where(accept, t_val, new_val)
            improved |= accept
            step *= 0.5
        active &= improved
        pts_xi, pts_eta, val = new_xi, new_eta, new_val

    k = int(np.argmax(val))
    peak = float(val[k])
    if peak < best_sampled:
        # fall back to the best sampled nodal value's element center report
        e = int(np.argmax(np.max(u.reshape(n_el, -1), axis=1)))
        i, j = np.unravel_index(int(np.argmax(u[e])), (n1, n1))
        from .mesh import element_map
        loc = element_map(op.mesh.elements[e],
                          np.array([basis.nodes[i]]), np.array([basis.nodes[j]]))[0]
        return best_sampled, (float(loc[0]), float(loc[1]))
    from .mesh import element_map
    loc = element_map(op.mesh.elements[int(eidx[k])],
                      np.array([pts_xi[k]]), np.array([pts_eta[k]]))[0]
    return peak, (float(loc[0]), float(loc[1]))
