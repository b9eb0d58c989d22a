"""Versioned plain-text mesh format.

Layout (whitespace-separated, '#' comments allowed):

    ncdg-mesh 1
    vertices <count>
    <x> <y>
    elements <count>
    <geometry_order> <v0> <v1> <v2> <v3> [<x> <y> times (g+1)^2, row-major
                                          over (xi-index, eta-index)]
    boundary <count>
    <edge_id> <periodic|dirichlet0|farfield>
    periodic <count>
    <edge_a> <edge_b>
    zones <count>
    <x> <n_left> <left edge ids...> <n_right> <right edge ids...>
    end

Conformal connectivity is not stored: it is rebuilt on load by pairing edges
that share both endpoint vertex ids.  Periodic pairs (whose endpoints differ
by a translation) are stored explicitly.  A worked 2x2 example lives in
docs/mesh_format.md.
"""
from __future__ import annotations

import numpy as np

from .mesh import (
    SIDE_CORNERS,
    BOUNDARY_TAGS,
    Edge,
    Element,
    InterfaceZone,
    Mesh,
    _bilinear_geometry,
)

FORMAT_NAME = "ncdg-mesh"
FORMAT_VERSION = 1


def save_mesh(mesh: Mesh, path) -> None:
    lines = [f"{FORMAT_NAME} {FORMAT_VERSION}"]
    lines.append(f"vertices {len(mesh.vertices)}")
    for x, y in mesh.vertices:
        lines.append(f"{float(x)!r} {float(y)!r}")
    lines.append(f"elements {mesh.n_elements}")
    for el in mesh.elements:
        parts = [str(el.geometry_order)] + [str(v) for v in el.vertex_ids]
        if el.geometry_order > 1:
            for a in range(el.geometry_order + 1):
                for b in range(el.geometry_order + 1):
                    parts.append(repr(float(el.geometry_nodes[a, b, 0])))
                    parts.append(repr(float(el.geometry_nodes[a, b, 1])))
        lines.append(" ".join(parts))
    lines.append(f"boundary {len(mesh.boundary_tags)}")
    for eid in sorted(mesh.boundary_tags):
        lines.append(f"{eid} {mesh.boundary_tags[eid]}")
    lines.append(f"periodic {len(mesh.periodic_pairs)}")
    for a, b in mesh.periodic_pairs:
        lines.append(f"{a} {b}")
    lines.append(f"zones {len(mesh.interface_zones)}")
    for zone in mesh.interface_zones:
        parts = [repr(zone.x), str(len(zone.left_edges))]
        parts += [str(e) for e in zone.left_edges]
        parts.append(str(len(zone.right_edges)))
        parts += [str(e) for e in zone.right_edges]
        lines.append(" ".join(parts))
    lines.append("end")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


class _Tokens:
    def __init__(self, text: str):
        toks = []
        for line in text.splitlines():
            body = line.split("#", 1)[0]
            toks.extend(body.split())
        self._toks = toks
        self._pos = 0

    def next(self) -> str:
        if self._pos >= len(self._toks):
            raise ValueError("unexpected end of mesh file")
        tok = self._toks[self._pos]
        self._pos += 1
        return tok

    def expect(self, word: str) -> None:
        tok = self.next()
        if tok != word:
            raise ValueError(f"expected {word!r} in mesh file, got {tok!r}")


def load_mesh(path) -> Mesh:
    with open(path) as fh:
        toks = _Tokens(fh.read())
    toks.expect(FORMAT_NAME)
    version = int(toks.next())
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported mesh format version {version}")

    toks.expect("vertices")
    n_vertices = int(toks.next())
    vertices = np.empty((n_vertices, 2))
    for i in range(n_vertices):
        vertices[i, 0] = float(toks.next())
        vertices[i, 1] = float(toks.next())

    toks.expect("elements")
    n_elements = int(toks.next())
    elements = []
    for eid in range(n_elements):
        order = int(toks.next())
        vids = tuple(int(toks.next()) for _ in range(4))
        if order == 1:
            nodes = _bilinear_geometry(vertices[list(vids)])
        else:
            nodes = np.empty((order + 1, order + 1, 2))
            for a in range(order + 1):
                for b in range(order + 1):
                    nodes[a, b, 0] = float(toks.next())
                    nodes[a, b, 1] = float(toks.next())
        nodes.setflags(write=False)
        elements.append(Element(id=eid, vertex_ids=vids, geometry_order=order,
                                geometry_nodes=nodes))

    toks.expect("boundary")
    boundary_tags = {}
    for _ in range(int(toks.next())):
        eid = int(toks.next())
        tag = toks.next()
        if tag not in BOUNDARY_TAGS:
            raise ValueError(f"unknown boundary tag {tag!r}")
        boundary_tags[eid] = tag

    toks.expect("periodic")
    periodic_pairs = []
    for _ in range(int(toks.next())):
        periodic_pairs.append((int(toks.next()), int(toks.next())))

    toks.expect("zones")
    zones = []
    for _ in range(int(toks.next())):
        x = float(toks.next())
        left = tuple(int(toks.next()) for _ in range(int(toks.next())))
        right = tuple(int(toks.next()) for _ in range(int(toks.next())))
        zones.append(InterfaceZone(left_edges=left, right_edges=right, x=x))
    toks.expect("end")

    edges = []
    by_vertex_pair: dict[frozenset, list[int]] = {}
    zone_members = set()
    for zone in zones:
        zone_members.update(zone.left_edges)
        zone_members.update(zone.right_edges)
    for el in elements:
        for side in range(4):
            c0, c1 = SIDE_CORNERS[side]
            va, vb = el.vertex_ids[c0], el.vertex_ids[c1]
            eid = 4 * el.id + side
            ends = np.array([vertices[va], vertices[vb]])
            edges.append(Edge(id=eid, element_id=el.id, side=side, endpoints=ends))
            if eid not in boundary_tags and eid not in zone_members:
                by_vertex_pair.setdefault(frozenset((va, vb)), []).append(eid)

    pairs = []
    for key, ids in by_vertex_pair.items():
        if len(ids) == 2:
            a, b = ids
            c0a, _ = SIDE_CORNERS[a % 4]
            c0b, _ = SIDE_CORNERS[b % 4]
            start_a = elements[a // 4].vertex_ids[c0a]
            start_b = elements[b // 4].vertex_ids[c0b]
            pairs.append((a, b, start_a != start_b))
        elif len(ids) > 2:
            raise ValueError(f"more than two edges share vertices {set(key)}")
        else:
            raise ValueError(
                f"edge {ids[0]} is neither paired, boundary-tagged, nor in a zone"
            )
    for a, b in periodic_pairs:
        pairs.append((a, b, False))

    return Mesh(vertices=vertices, elements=elements, edges=edges,
                conformal_pairs=pairs, boundary_tags=boundary_tags,
                interface_zones=zones, periodic_pairs=periodic_pairs)
