"""Conforming triangulations of coated smooth domains.

The core region is meshed with concentric hexagonal rings mapped onto the
(star-shaped) inner boundary; the coating is meshed as structured rows of
tube-coordinate quadrilaterals split into triangles, sharing the interface
ring vertex-for-vertex so the interface is a union of edges.  Boundary
vertices sit on the exact curves, at equally spaced parent arclengths, so
boundary quadrature can use exact arclength weights downstream.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LayerUnderResolved, MeshFailure

CORE = 0
LAYER = 1


@dataclass
class TriMesh:
    """Triangulation with tagged boundary rings and per-triangle regions.

    outer/inner hold vertex indices ordered along the respective curve;
    outer_s/inner_s are the parent-curve arclengths of those vertices (None
    for meshes loaded from disk or not built over a curve).  h is the
    measured maximum edge length.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    region: np.ndarray
    outer: np.ndarray
    inner: np.ndarray
    outer_s: np.ndarray = None
    inner_s: np.ndarray = None
    curve: object = field(default=None, repr=False)
    layer: object = field(default=None, repr=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def h(self):
        e = self.vertices[self.triangles[:, [1, 2, 0]]] - self.vertices[self.triangles]
        return float(np.sqrt((e**2).sum(-1)).max())

    def signed_areas(self):
        p = self.vertices
        t = self.triangles
        a = p[t[:, 1]] - p[t[:, 0]]
        b = p[t[:, 2]] - p[t[:, 0]]
        return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])

    def centroid(self):
        areas = self.signed_areas()
        mids = self.vertices[self.triangles].mean(axis=1)
        return (areas[:, None] * mids).sum(axis=0) / areas.sum()

    def has_layer(self):
        return bool(np.any(self.region == LAYER))


def _orient_ccw(vertices, triangles):
    a = vertices[triangles[:, 1]] - vertices[triangles[:, 0]]
    b = vertices[triangles[:, 2]] - vertices[triangles[:, 0]]
    det = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    flip = det < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    return triangles


def _hex_core(n_rings, boundary_points_of):
    """Hexagonal-ring triangulation of a star-shaped region.

    boundary_points_of(frac) returns boundary points at parameter fractions;
    interior ring i carries 6i vertices at radial fraction i/N.
    """
    verts = [np.zeros(2)]
    ring_start = [0, 1]
    for i in range(1, n_rings + 1):
        frac = np.arange(6 * i) / (6.0 * i)
        pts = (i / n_rings) * boundary_points_of(frac)
        verts.extend(pts)
        ring_start.append(ring_start[-1] + 6 * i)
    verts = np.array(verts)
    tris = [(0, 1 + j, 1 + (j + 1) % 6) for j in range(6)]
    for i in range(1, n_rings):
        si, so = ring_start[i], ring_start[i + 1]
        ni, no = 6 * i, 6 * (i + 1)
        for sector in range(6):
            for k in range(i + 1):
                a = so + (sector * (i + 1) + k) % no
                b = so + (sector * (i + 1) + k + 1) % no
                c = si + (sector * i + k) % ni
                tris.append((a, b, c))
                if k < i:
                    d = si + (sector * i + k + 1) % ni
                    tris.append((b, d, c))
    tris = np.array(tris, dtype=np.int64)
    boundary = np.arange(ring_start[n_rings], ring_start[n_rings + 1])
    return verts, tris, boundary


def generate_mesh(curve, layer, h):
    """Mesh the domain bounded by `curve`, optionally with a coating.

    With a coating, the interface ring lies exactly on the offset curve and
    the coating is filled with max(2, ceil(depth/h)) structured element rows.
    Raises MeshFailure for degenerate triangles and LayerUnderResolved when
    fewer than two rows fit the requested resolution.
    """
    eta0 = curve.reach()
    if h >= min(0.2 * eta0, curve.s0 / 16.0):
        raise MeshFailure(
            f"mesh size {h} too coarse: need h < min(0.2*eta0, perimeter/16) "
            f"= {min(0.2 * eta0, curve.s0 / 16.0):.6g}"
        )
    if layer is not None:
        layer.validate_against(curve)

    n_rings = max(2, int(round(curve.s0 / (6.0 * h))))
    nb = 6 * n_rings

    if layer is None:
        def bpoints(frac):
            return curve.position(frac * curve.s0)

        verts, tris, boundary = _hex_core(n_rings, bpoints)
        region = np.full(len(tris), CORE, dtype=np.int64)
        tris = _orient_ccw(verts, tris)
        mesh = TriMesh(
            vertices=verts,
            triangles=tris,
            region=region,
            outer=boundary,
            inner=np.array([], dtype=np.int64),
            outer_s=np.arange(nb) * curve.s0 / nb,
            inner_s=None,
            curve=curve,
            layer=None,
        )
        _check_areas(mesh)
        return mesh

    def bpoints(frac):
        s = frac * curve.s0
        depth = layer.thickness(s)
        return curve.position(s) + np.asarray(depth)[..., None] * curve.inward_normal(s)

    verts, tris, interface = _hex_core(n_rings, bpoints)
    verts = list(verts)
    tris = [tuple(t) for t in tris]
    region = [CORE] * len(tris)

    s_ring = np.arange(nb) * curve.s0 / nb
    depth = np.asarray(layer.thickness(s_ring))
    if float(depth.min()) <= 0.0:
        raise MeshFailure("coating must have positive depth everywhere to be meshed")
    rows = max(2, int(math.ceil(float(depth.max()) / h)))
    if rows < 2:
        raise LayerUnderResolved("fewer than two element rows across the coating")

    base = curve.position(s_ring)
    nu = curve.inward_normal(s_ring)
    ring_prev = list(interface)
    for k in range(1, rows + 1):
        frac_in = 1.0 - k / rows  # remaining depth fraction; 0 on the outer boundary
        start = len(verts)
        pts = base + (depth * frac_in)[:, None] * nu
        verts.extend(pts)
        ring_new = list(range(start, start + nb))
        for j in range(nb):
            a, b = ring_prev[j], ring_prev[(j + 1) % nb]
            c, d = ring_new[j], ring_new[(j + 1) % nb]
            tris.append((a, b, c))
            region.append(LAYER)
            tris.append((b, d, c))
            region.append(LAYER)
        ring_prev = ring_new

    verts = np.array(verts)
    tris = _orient_ccw(verts, np.array(tris, dtype=np.int64))
    mesh = TriMesh(
        vertices=verts,
        triangles=tris,
        region=np.array(region, dtype=np.int64),
        outer=np.array(ring_prev, dtype=np.int64),
        inner=np.asarray(interface, dtype=np.int64),
        outer_s=s_ring.copy(),
        inner_s=s_ring.copy(),
        curve=curve,
        layer=layer,
    )
    _check_areas(mesh)
    return mesh


def _check_areas(mesh):
    areas = mesh.signed_areas()
    if np.any(areas <= 1e-15 * float(np.median(np.abs(areas)))):
        raise MeshFailure("degenerate or inverted triangle produced")


def square_mesh(n):
    """Structured right-triangle mesh of the unit square (test fixture)."""
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel()], axis=1)
    idx = np.arange((n + 1) * (n + 1)).reshape(n + 1, n + 1)
    tris = []
    for i in range(n):
        for j in range(n):
            a, b = idx[i, j], idx[i + 1, j]
            c, d = idx[i + 1, j + 1], idx[i, j + 1]
            tris.append((a, b, c))
            tris.append((a, c, d))
    tris = np.array(tris, dtype=np.int64)
    on_bnd = (
        (verts[:, 0] == 0.0) | (verts[:, 0] == 1.0)
        | (verts[:, 1] == 0.0) | (verts[:, 1] == 1.0)
    )
    return TriMesh(
        vertices=verts,
        triangles=_orient_ccw(verts, tris),
        region=np.full(len(tris), CORE, dtype=np.int64),
        outer=np.flatnonzero(on_bnd),
        inner=np.array([], dtype=np.int64),
    )


def core_submesh(mesh):
    """Extract the core region as its own mesh, Dirichlet boundary on the
    former interface.  Returns (submesh, old_to_new vertex map)."""
    keep = mesh.region == CORE
    tris = mesh.triangles[keep]
    used = np.unique(tris)
    remap = -np.ones(mesh.n_vertices, dtype=np.int64)
    remap[used] = np.arange(len(used))
    sub = TriMesh(
        vertices=mesh.vertices[used],
        triangles=remap[tris],
        region=np.full(keep.sum(), CORE, dtype=np.int64),
        outer=remap[mesh.inner] if len(mesh.inner) else remap[mesh.outer],
        inner=np.array([], dtype=np.int64),
        outer_s=mesh.inner_s if len(mesh.inner) else mesh.outer_s,
        curve=mesh.curve,
        layer=None,
    )
    return sub, remap


def save_mesh(mesh, path):
    """Plain-text export: `v x y`, `t i j k region`, `b i OUTER|INNER`."""
    lines = []
    for x, y in mesh.vertices:
        lines.append(f"v {x:.17g} {y:.17g}")
    for (i, j, k), reg in zip(mesh.triangles, mesh.region):
        lines.append(f"t {i} {j} {k} {reg}")
    for i in mesh.outer:
        lines.append(f"b {i} OUTER")
    for i in mesh.inner:
        lines.append(f"b {i} INNER")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mesh(path):
    verts, tris, region, outer, inner = [], [], [], [], []
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts:
                continue
            tag = parts[0]
            if tag == "v":
                verts.append((float(parts[1]), float(parts[2])))
            elif tag == "t":
                tris.append(tuple(int(p) for p in parts[1:4]))
                region.append(int(parts[4]))
            elif tag == "b":
                (outer if parts[2] == "OUTER" else inner).append(int(parts[1]))
            else:
                raise MeshFailure(f"{path}:{ln}: unknown record {tag!r}")
    return TriMesh(
        vertices=np.array(verts),
        triangles=np.array(tris, dtype=np.int64),
        region=np.array(region, dtype=np.int64),
        outer=np.array(outer, dtype=np.int64),
        inner=np.array(inner, dtype=np.int64),
    )
