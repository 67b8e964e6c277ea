"""Polyhedral surface data model.

A :class:`Mesh` is a closed, oriented, 2-manifold polygonal surface; an
:class:`OpenMesh` additionally allows boundary loops.  Faces are ordered
vertex cycles whose orientation defines the outward side.  Both are treated
as immutable: geometry changes produce new objects via ``with_vertices``.
"""
from __future__ import annotations

from collections import defaultdict

import numpy as np

from .errors import (
    BoundaryEdge,
    DegenerateFace,
    InconsistentOrientation,
    MeshError,
    NonManifoldEdge,
    NonPlanarFace,
    PinchedVertex,
)

PLANARITY_REL_TOL = 1e-7


def _edge(u, v):
    return (u, v) if u < v else (v, u)


def newell_normal(pts):
    """Unnormalised Newell normal of a (possibly non-triangular) polygon."""
    pts = np.asarray(pts, dtype=float)
    nxt = np.roll(pts, -1, axis=0)
    return np.array([
        np.sum((pts[:, 1] - nxt[:, 1]) * (pts[:, 2] + nxt[:, 2])),
        np.sum((pts[:, 2] - nxt[:, 2]) * (pts[:, 0] + nxt[:, 0])),
        np.sum((pts[:, 0] - nxt[:, 0]) * (pts[:, 1] + nxt[:, 1])),
    ])


def planarity_deviation(pts):
    """Max distance of the points to their least-squares plane."""
    pts = np.asarray(pts, dtype=float)
    if len(pts) <= 3:
        return 0.0
    c = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(c)
    return float(np.max(np.abs(c @ vt[2])))


class Mesh:
    """Closed oriented polyhedral surface.

    Use :func:`build_mesh` to construct a validated instance.
    """

    closed = True

    def __init__(self, vertices, faces, labels=None, *, _boundary=()):
        v = np.array(vertices, dtype=float).reshape(-1, 3)
        v.setflags(write=False)
        self.vertices = v
        self.faces = tuple(tuple(int(i) for i in f) for f in faces)
        self.labels = tuple(labels) if labels is not None else None
        self._boundary = tuple(tuple(loop) for loop in _boundary)
        self._edge_faces = None

    # -- topology ---------------------------------------------------------
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def edge_faces(self):
        """Map from unordered edge to the list of incident face indices."""
        if self._edge_faces is None:
            ef = defaultdict(list)
            for fi, f in enumerate(self.faces):
                for k in range(len(f)):
                    ef[_edge(f[k], f[(k + 1) % len(f)])].append(fi)
            self._edge_faces = dict(ef)
        return self._edge_faces

    @property
    def edges(self):
        return sorted(self.edge_faces)

    @property
    def boundary(self):
        return self._boundary

    def euler_characteristic(self):
        return self.n_vertices - len(self.edge_faces) + len(self.faces)

    def interior_edges(self):
        return [e for e, fs in self.edge_faces.items() if len(fs) == 2]

    def index(self, label):
        """Vertex index for a construction label."""
        if self.labels is None:
            raise KeyError(label)
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(label) from None

    def diameter(self):
        v = self.vertices
        return float(np.linalg.norm(v.max(axis=0) - v.min(axis=0)))

    # -- derived meshes ----------------------------------------------------
    def with_vertices(self, vertices):
        """Same topology and labels, new coordinates (no re-validation)."""
        m = type(self).__new__(type(self))
        Mesh.__init__(m, np.reshape(vertices, (-1, 3)), self.faces, self.labels,
                      _boundary=self._boundary)
        m._edge_faces = self._edge_faces
        return m

    def reversed(self):
        """Orientation-reversed copy."""
        faces = [tuple(reversed(f)) for f in self.faces]
        bnd = [tuple(reversed(loop)) for loop in self._boundary]
        m = type(self).__new__(type(self))
        Mesh.__init__(m, self.vertices, faces, self.labels, _boundary=bnd)
        return m

    def translated(self, t):
        return self.with_vertices(self.vertices + np.asarray(t, dtype=float))

    def face_points(self, fi):
        return self.vertices[list(self.faces[fi])]

    def __repr__(self):
        return (f"{type(self).__name__}(V={self.n_vertices}, E={len(self.edge_faces)}, "
                f"F={len(self.faces)})")


class OpenMesh(Mesh):
    """Oriented polyhedral surface that may have boundary loops."""

    closed = False


def _boundary_loops(faces, edge_faces):
    # directed boundary edges follow the face orientation
    nxt = {}
    for e, fs in edge_faces.items():
        if len(fs) != 1:
            continue
        f = faces[fs[0]]
        n = len(f)
        for k in range(n):
            u, w = f[k], f[(k + 1) % n]
            if _edge(u, w) == e:
                if u in nxt:
                    raise PinchedVertex(f"boundary passes twice through vertex {u}")
                nxt[u] = w
    loops = []
    seen = set()
    for start in sorted(nxt):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        cur = nxt[start]
        while cur != start:
            if cur in seen or cur not in nxt:
                raise MeshError("boundary edges do not form simple loops")
            loop.append(cur)
            seen.add(cur)
            cur = nxt[cur]
        loops.append(tuple(loop))
    return loops


def _check_vertex_links(n_vertices, faces):
    """Each vertex star must be a single fan (cycle, or path on the boundary)."""
    link = defaultdict(list)
    for f in faces:
        n = len(f)
        for k in range(n):
            link[f[k]].append((f[k - 1], f[(k + 1) % n]))
    for v in range(n_vertices):
        pairs = link.get(v)
        if not pairs:
            raise PinchedVertex(f"vertex {v} is not used by any face")
        adj = defaultdict(set)
        for a, b in pairs:
            adj[a].add(b)
            adj[b].add(a)
        start = next(iter(adj))
        stack, seen = [start], {start}
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if len(seen) != len(adj):
            raise PinchedVertex(f"vertex {v} has a disconnected link")


def build_mesh(vertices, faces, allow_boundary=False, labels=None, planarity_tol=None):
    """Validate and build a :class:`Mesh` (or :class:`OpenMesh`).

    ``planarity_tol`` defaults to ``1e-7`` times the mesh diameter.
    """
    verts = np.asarray(vertices, dtype=float).reshape(-1, 3)
    if not np.all(np.isfinite(verts)):
        raise MeshError("vertex coordinates must be finite")
    faces = [tuple(int(i) for i in f) for f in faces]
    if not faces:
        raise MeshError("mesh needs at least one face")
    nv = len(verts)
    for f in faces:
        if len(f) < 3:
            raise MeshError(f"face {f} has fewer than 3 vertices")
        if len(set(f)) != len(f):
            raise MeshError(f"face {f} repeats a vertex")
        if min(f) < 0 or max(f) >= nv:
            raise MeshError(f"face {f} has an out-of-range index")
    if labels is not None and len(labels) != nv:
        raise MeshError("labels must match the vertex count")

    diam = float(np.linalg.norm(verts.max(axis=0) - verts.min(axis=0)))
    tol = PLANARITY_REL_TOL * diam if planarity_tol is None else planarity_tol
    for fi, f in enumerate(faces):
        dev = planarity_deviation(verts[list(f)])
        if dev > tol:
            raise NonPlanarFace(f"face {fi} deviates {dev:.3e} from its plane", deviation=dev)

    directed = {}
    edge_faces = defaultdict(list)
    for fi, f in enumerate(faces):
        n = len(f)
        for k in range(n):
            u, w = f[k], f[(k + 1) % n]
            if (u, w) in directed:
                raise InconsistentOrientation(
                    f"directed edge {(u, w)} used by faces {directed[(u, w)]} and {fi}")
            directed[(u, w)] = fi
            edge_faces[_edge(u, w)].append(fi)
    for e, fs in edge_faces.items():
        if len(fs) > 2 or (len(fs) == 1 and not allow_boundary):
            raise NonManifoldEdge(f"edge {e} lies on {len(fs)} face(s)", edge=e)
    _check_vertex_links(nv, faces)

    if allow_boundary:
        loops = _boundary_loops(faces, edge_faces)
        cls = OpenMesh if loops else Mesh
    else:
        loops = []
        cls = Mesh
    m = cls(verts, faces, labels, _boundary=loops)
    m._edge_faces = dict(edge_faces)
    if cls is Mesh:
        chi = m.euler_characteristic()
        if chi > 2 or chi % 2:
            raise MeshError(f"Euler characteristic {chi} is not that of a closed orientable surface")
    return m


def genus(m):
    if not m.closed:
        raise MeshError("genus is defined for closed meshes only")
    return (2 - m.euler_characteristic()) // 2


def triangle_list(m):
    """(T, 3) array of fan triangles; face ``f`` yields ``(f0, fk, fk+1)``."""
    tris = []
    for f in m.faces:
        for k in range(1, len(f) - 1):
            tris.append((f[0], f[k], f[k + 1]))
    return np.array(tris, dtype=int)


def enclosed_volume(m, vertices=None):
    """Algebraic volume via the divergence theorem (signed tetrahedra at the origin)."""
    v = m.vertices if vertices is None else np.reshape(vertices, (-1, 3))
    t = triangle_list(m)
    return float(np.einsum("ij,ij->i", v[t[:, 0]], np.cross(v[t[:, 1]], v[t[:, 2]])).sum() / 6.0)


def surface_area(m):
    v = m.vertices
    t = triangle_list(m)
    return float(0.5 * np.linalg.norm(np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]]),
                                      axis=1).sum())


def _face_normal(m, fi, vertices):
    pts = vertices[list(m.faces[fi])]
    n = newell_normal(pts)
    norm = np.linalg.norm(n)
    if norm < 1e-14 * max(1.0, float(np.abs(pts).max())) ** 2:
        raise DegenerateFace(f"face {fi} has zero area")
    return n / norm


def oriented_edge_faces(m, edge):
    """Return ``(f_left, f_right)``: the face traversing ``u->v`` and the one traversing ``v->u``."""
    u, v = edge
    fs = m.edge_faces.get(_edge(u, v))
    if fs is None:
        raise MeshError(f"{edge} is not an edge")
    if len(fs) != 2:
        raise BoundaryEdge(f"edge {edge} lies on {len(fs)} face(s)")
    f0 = m.faces[fs[0]]
    k = f0.index(u)
    if f0[(k + 1) % len(f0)] == v:
        return fs[0], fs[1]
    return fs[1], fs[0]


def dihedral_angle(m, edge, vertices=None):
    """Interior dihedral angle at ``edge`` in degrees; convex edges are below 180."""
    verts = m.vertices if vertices is None else np.reshape(vertices, (-1, 3))
    u, v = edge
    f1, f2 = oriented_edge_faces(m, (u, v))
    n1 = _face_normal(m, f1, verts)
    n2 = _face_normal(m, f2, verts)
    e = verts[v] - verts[u]
    e = e / np.linalg.norm(e)
    # in-plane directions pointing into each face
    w1 = np.cross(n1, e)
    w2 = np.cross(e, n2)
    phi = np.degrees(np.arctan2(-np.dot(w2, n1), np.dot(w2, w1)))
    return float(phi % 360.0)


def dihedral_angles(m, vertices=None, edges=None):
    """Vector of interior dihedral angles over ``edges`` (default: all interior edges)."""
    verts = m.vertices if vertices is None else np.reshape(vertices, (-1, 3))
    edges = m.interior_edges() if edges is None else edges
    return np.array([dihedral_angle(m, e, verts) for e in edges])


def quad_dihedral(points, a, b, c, d):
    """Angle in degrees, in [0, 360), of half-plane (a,b,d) about axis a->b measured from (a,b,c).

    Generalises a dihedral angle to a vertex quadruple that need not span a
    surface edge, e.g. a base hinge.
    """
    p = np.reshape(points, (-1, 3))
    axis = p[b] - p[a]
    axis = axis / np.linalg.norm(axis)
    x = p[c] - p[a]
    x = x - np.dot(x, axis) * axis
    y = p[d] - p[a]
    y = y - np.dot(y, axis) * axis
    return float(np.degrees(np.arctan2(np.dot(np.cross(x, y), axis), np.dot(x, y))) % 360.0)


def triangulate_faces(m):
    """Fan-triangulate every face from its first vertex; triangles pass through unchanged."""
    if all(len(f) == 3 for f in m.faces):
        return m
    tris = [tuple(t) for t in triangle_list(m)]
    return build_mesh(m.vertices, tris, allow_boundary=not m.closed, labels=m.labels)


def face_types(m):
    """Histogram of face sizes, e.g. ``{3: 20, 4: 3}``."""
    out = defaultdict(int)
    for f in m.faces:
        out[len(f)] += 1
    return dict(out)


def intra_face_pairs(m):
    """All unordered vertex pairs sharing a face (edges and face diagonals)."""
    pairs = set()
    for f in m.faces:
        for i in range(len(f)):
            for j in range(i + 1, len(f)):
                pairs.add(_edge(f[i], f[j]))
    return sorted(pairs)


def orient_consistently(faces):
    """Flip faces so every shared edge is traversed in opposite directions.

    Returns a new face list; raises :class:`InconsistentOrientation` for a
    non-orientable face set.
    """
    faces = [tuple(f) for f in faces]
    ef = defaultdict(list)
    for fi, f in enumerate(faces):
        for k in range(len(f)):
            ef[_edge(f[k], f[(k + 1) % len(f)])].append(fi)
    flip = [None] * len(faces)

    def directed(fi):
        f = faces[fi] if not flip[fi] else tuple(reversed(faces[fi]))
        return {(f[k], f[(k + 1) % len(f)]) for k in range(len(f))}

    for root in range(len(faces)):
        if flip[root] is not None:
            continue
        flip[root] = False
        stack = [root]
        while stack:
            fi = stack.pop()
            dfi = directed(fi)
            f = faces[fi]
            for k in range(len(f)):
                for fj in ef[_edge(f[k], f[(k + 1) % len(f)])]:
                    if fj == fi:
                        continue
                    if flip[fj] is None:
                        flip[fj] = False
                        if directed(fj) & dfi:
                            flip[fj] = True
                        stack.append(fj)
                    elif directed(fj) & dfi:
                        raise InconsistentOrientation("face set is not orientable")
    return [tuple(reversed(f)) if fl else f for f, fl in zip(faces, flip)]
