"""Certification of embeddedness, isometry and volume constancy."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from . import mesh as mc
from .errors import OpenMeshNotAllowed

CONTACT_REL_TOL = 1e-9
_O3D_ERRBOUND = (7.0 + 56.0 * 2.0 ** -53) * 2.0 ** -53
_O2D_ERRBOUND = (3.0 + 16.0 * 2.0 ** -53) * 2.0 ** -53


# -- adaptive predicates ------------------------------------------------------
def orient3d(a, b, c, d):
    """Sign of det[b-a, c-a, d-a]; exact via rationals when the float result is uncertain."""
    adx, ady, adz = a[0] - d[0], a[1] - d[1], a[2] - d[2]
    bdx, bdy, bdz = b[0] - d[0], b[1] - d[1], b[2] - d[2]
    cdx, cdy, cdz = c[0] - d[0], c[1] - d[1], c[2] - d[2]
    t1 = bdx * cdy - bdy * cdx
    t2 = cdx * ady - cdy * adx
    t3 = adx * bdy - ady * bdx
    det = adz * t1 + bdz * t2 + cdz * t3
    perm = (abs(adz) * (abs(bdx * cdy) + abs(bdy * cdx))
            + abs(bdz) * (abs(cdx * ady) + abs(cdy * adx))
            + abs(cdz) * (abs(adx * bdy) + abs(ady * bdx)))
    if abs(det) > _O3D_ERRBOUND * perm:
        return -1 if det > 0 else 1
    A = [Fraction(float(x)) for x in (*a, *b, *c, *d)]
    ax, ay, az, bx, by, bz, cx, cy, cz, dx, dy, dz = A
    m = ((bx - ax) * ((cy - ay) * (dz - az) - (cz - az) * (dy - ay))
         - (by - ay) * ((cx - ax) * (dz - az) - (cz - az) * (dx - ax))
         + (bz - az) * ((cx - ax) * (dy - ay) - (cy - ay) * (dx - ax)))
    return (m > 0) - (m < 0)


def orient2d(a, b, c):
    """Sign of the signed area of (a, b, c), exact on uncertainty."""
    detl = (a[0] - c[0]) * (b[1] - c[1])
    detr = (a[1] - c[1]) * (b[0] - c[0])
    det = float(detl - detr)
    if abs(det) > _O2D_ERRBOUND * (abs(detl) + abs(detr)):
        return int(det > 0) - int(det < 0)
    ax, ay, bx, by, cx, cy = (Fraction(float(v)) for v in (a[0], a[1], b[0], b[1], c[0], c[1]))
    m = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return (m > 0) - (m < 0)


# -- witnesses ----------------------------------------------------------------
@dataclass
class IntersectionWitness:
    faces: tuple
    points: np.ndarray
    kind: str  # "crossing" | "touching"
    depth: float = 0.0

    def __str__(self):
        return f"{self.kind} between faces {self.faces[0]} and {self.faces[1]} (depth {self.depth:.3e})"


def _drop_axis(n):
    return int(np.argmax(np.abs(n)))


def _proj(p, ax):
    keep = [k for k in range(3) if k != ax]
    return (p[keep[0]], p[keep[1]])


def _seg_cross_2d(p1, p2, q1, q2):
    """1 = proper crossing, 0 = touching/collinear overlap, -1 = disjoint."""
    o1 = orient2d(p1, p2, q1)
    o2 = orient2d(p1, p2, q2)
    o3 = orient2d(q1, q2, p1)
    o4 = orient2d(q1, q2, p2)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return 1
    def on(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
    if (o1 == 0 and on(p1, p2, q1)) or (o2 == 0 and on(p1, p2, q2)) or \
            (o3 == 0 and on(q1, q2, p1)) or (o4 == 0 and on(q1, q2, p2)):
        return 0
    return -1


def _clip_area(t1, t2):
    """Area of the intersection of two coplanar 2-D triangles (Sutherland-Hodgman)."""
    def ccw(t):
        t = [np.asarray(p, float) for p in t]
        if (t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0]) < 0:
            t = t[::-1]
        return t
    poly = ccw(t1)
    clip = ccw(t2)
    for k in range(3):
        a, b = clip[k], clip[(k + 1) % 3]
        out = []
        def inside(p):
            return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0
        for i in range(len(poly)):
            p, q = poly[i], poly[(i + 1) % len(poly)]
            ip, iq = inside(p), inside(q)
            if ip:
                out.append(p)
            if ip != iq:
                d = q - p
                e = b - a
                den = d[0] * e[1] - d[1] * e[0]
                if den != 0:
                    s = ((a[0] - p[0]) * e[1] - (a[1] - p[1]) * e[0]) / den
                    out.append(p + s * d)
        poly = out
        if not poly:
            return 0.0
    x = np.array([p[0] for p in poly])
    y = np.array([p[1] for p in poly])
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _coplanar_overlap(P, Q, normal, tol):
    ax = _drop_axis(normal)
    p = [_proj(x, ax) for x in P]
    q = [_proj(x, ax) for x in Q]
    hit = False
    for i in range(3):
        for j in range(3):
            if _seg_cross_2d(p[i], p[(i + 1) % 3], q[j], q[(j + 1) % 3]) >= 0:
                hit = True
    if not hit:
        # containment
        for tri, pts in ((q, p), (p, q)):
            s = [orient2d(tri[k], tri[(k + 1) % 3], pts[0]) for k in range(3)]
            if all(v >= 0 for v in s) or all(v <= 0 for v in s):
                hit = True
    if not hit:
        return None
    scale = np.abs(normal).max() / np.linalg.norm(normal)
    area = _clip_area(p, q) / scale
    return area


def _plane_signs(tri, pts):
    a, b, c = np.asarray(tri, dtype=float).tolist()
    return [orient3d(a, b, c, x) for x in np.asarray(pts, dtype=float).tolist()]


def _signed_dist(tri, pts):
    n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
    n = n / np.linalg.norm(n)
    return np.array([np.dot(x - tri[0], n) for x in pts])


def _penetration(d):
    return float(min(max(d.max(), 0.0), max(-d.min(), 0.0)))


def _line_interval(tri, d, origin, direction):
    """Interval of ``tri`` ∩ (other plane) projected on ``direction``."""
    pts = []
    for i in range(3):
        j = (i + 1) % 3
        if d[i] == 0:
            pts.append(tri[i])
        if d[i] * d[j] < 0:
            s = d[i] / (d[i] - d[j])
            pts.append(tri[i] + s * (tri[j] - tri[i]))
    if not pts:
        return None
    t = [np.dot(p - origin, direction) for p in pts]
    return min(t), max(t)


def _tri_tri_disjoint_verts(P, Q, tol):
    sq = _plane_signs(P, Q)
    if all(s > 0 for s in sq) or all(s < 0 for s in sq):
        return None
    sp = _plane_signs(Q, P)
    if all(s > 0 for s in sp) or all(s < 0 for s in sp):
        return None
    nP = np.cross(P[1] - P[0], P[2] - P[0])
    if all(s == 0 for s in sq):
        area = _coplanar_overlap(P, Q, nP, tol)
        if area is None:
            return None
        kind = "crossing" if area > tol * tol else "touching"
        return kind, float(np.sqrt(area)), np.array([P.mean(axis=0)])
    # non-coplanar: compare the two intervals on the planes' intersection line
    nQ = np.cross(Q[1] - Q[0], Q[2] - Q[0])
    direction = np.cross(nP, nQ)
    dn = np.linalg.norm(direction)
    if dn == 0:
        return None
    direction /= dn
    dQ = _signed_dist(P, Q)
    dP = _signed_dist(Q, P)
    # exact zero signs take precedence over rounding in distances
    dQ = np.where(np.array(sq) == 0, 0.0, dQ)
    dP = np.where(np.array(sp) == 0, 0.0, dP)
    iP = _line_interval(P, dP, P[0], direction)
    iQ = _line_interval(Q, dQ, P[0], direction)
    if iP is None or iQ is None:
        return None
    lo, hi = max(iP[0], iQ[0]), min(iP[1], iQ[1])
    if hi < lo:
        if not _exact_segment_hits(P, Q):
            return None
        lo = hi
    depth = min(hi - lo, _penetration(dP), _penetration(dQ))
    mid = P[0] + 0.5 * (lo + hi) * direction
    return ("crossing" if depth > tol else "touching"), float(depth), np.array([mid])


def _exact_segment_hits(P, Q):
    """Exact test: does an edge of one triangle meet the other triangle?"""
    for A, B in ((P, Q), (Q, P)):
        for i in range(3):
            p, q = A[i], A[(i + 1) % 3]
            s1 = orient3d(B[0], B[1], B[2], p)
            s2 = orient3d(B[0], B[1], B[2], q)
            if s1 * s2 > 0 or (s1 == 0 and s2 == 0):
                continue
            o = [orient3d(p, q, B[k], B[(k + 1) % 3]) for k in range(3)]
            if all(v >= 0 for v in o) or all(v <= 0 for v in o):
                return True
    return False


def _tri_tri_shared_vertex(P, Q, tol):
    # P[0] == Q[0] is the shared vertex
    v = P[0]
    sPQ = _plane_signs(Q, P[1:])
    sQP = _plane_signs(P, Q[1:])
    if all(s == 0 for s in sPQ) and all(s == 0 for s in sQP):
        n = np.cross(P[1] - v, P[2] - v)
        ax = _drop_axis(n)
        pv, p1, p2 = (_proj(x, ax) for x in P)
        q1, q2 = (_proj(x, ax) for x in Q[1:])

        def inside(a, b, x):
            o = orient2d(pv, a, b)
            return orient2d(pv, a, x) == o and orient2d(pv, x, b) == o
        if inside(p1, p2, q1) or inside(p1, p2, q2) or inside(q1, q2, p1) or inside(q1, q2, p2):
            area = _clip_area([pv, p1, p2], [pv, q1, q2]) * np.linalg.norm(n) / np.abs(n).max()
            kind = "crossing" if area > tol * tol else "touching"
            return kind, float(np.sqrt(area)), np.array([v])
        return None
    if (sPQ[0] == sPQ[1] and sPQ[0] != 0) or (sQP[0] == sQP[1] and sQP[0] != 0):
        return None
    dP = _signed_dist(Q, P[1:])
    dQ = _signed_dist(P, Q[1:])

    def far_point(T, d):
        if d[0] == d[1]:
            return None
        s = d[0] / (d[0] - d[1])
        return T[1] + s * (T[2] - T[1])
    pp = far_point(P, dP)
    pq = far_point(Q, dQ)
    if pp is None or pq is None:
        return None
    a, b = pp - v, pq - v
    la, lb = np.linalg.norm(a), np.linalg.norm(b)
    if la == 0 or lb == 0 or np.dot(a, b) <= 0:
        return None
    depth = min(la, lb, _penetration(dP), _penetration(dQ))
    return ("crossing" if depth > tol else "touching"), float(depth), np.array([v + 0.5 * min(la, lb) * a / la])


def _tri_tri_shared_edge(P, Q, tol):
    # P = (u, w, a), Q = (u, w, b): fold-over only when b lies in P's plane on a's side
    u, w, a = P
    b = Q[2]
    s = orient3d(u, w, a, b)
    dist = abs(_signed_dist(P, [b])[0])
    if s != 0 and dist > tol:
        return None
    e = (w - u) / np.linalg.norm(w - u)
    pa = (a - u) - np.dot(a - u, e) * e
    pb = (b - u) - np.dot(b - u, e) * e
    if np.dot(pa, pb) <= 0:
        return None
    kind = "crossing" if s == 0 else "touching"
    return kind, float(dist), np.array([0.5 * (u + w)])


def pair_test(P, Q, shared, tol):
    """Classify the intersection of triangles ``P`` and ``Q`` (3x3 arrays).

    ``shared`` lists index pairs ``(i, j)`` with ``P[i] == Q[j]`` as mesh
    vertices.  Returns ``(kind, depth, points)`` or ``None``.
    """
    if not shared:
        return _tri_tri_disjoint_verts(P, Q, tol)
    if len(shared) == 1:
        (i, j), = shared
        P2 = np.array([P[i], P[(i + 1) % 3], P[(i + 2) % 3]])
        Q2 = np.array([Q[j], Q[(j + 1) % 3], Q[(j + 2) % 3]])
        return _tri_tri_shared_vertex(P2, Q2, tol)
    if len(shared) == 2:
        (i1, j1), (i2, j2) = shared
        k = 3 - i1 - i2
        l = 3 - j1 - j2
        P2 = np.array([P[i1], P[i2], P[k]])
        Q2 = np.array([Q[j1], Q[j2], Q[l]])
        return _tri_tri_shared_edge(P2, Q2, tol)
    return None


# -- BVH ----------------------------------------------------------------------
class _Node:
    __slots__ = ("lo", "hi", "left", "right", "items")

    def __init__(self, lo, hi, left=None, right=None, items=None):
        self.lo, self.hi, self.left, self.right, self.items = lo, hi, left, right, items


def build_bvh(lo, hi, items=None, leaf_size=4):
    """Axis-aligned bounding-volume hierarchy over boxes ``lo[i]..hi[i]``."""
    if items is None:
        items = np.arange(len(lo))
    blo, bhi = lo[items].min(axis=0), hi[items].max(axis=0)
    if len(items) <= leaf_size:
        return _Node(blo, bhi, items=list(items))
    ax = int(np.argmax(bhi - blo))
    c = 0.5 * (lo[items, ax] + hi[items, ax])
    order = items[np.argsort(c, kind="stable")]
    half = len(order) // 2
    return _Node(blo, bhi, build_bvh(lo, hi, order[:half], leaf_size),
                 build_bvh(lo, hi, order[half:], leaf_size))


def _overlap(a, b):
    return np.all(a.lo <= b.hi) and np.all(b.lo <= a.hi)


def bvh_pairs(root):
    """All index pairs (i<j) whose boxes overlap."""
    out = []

    def leaf_pairs(a, b, same):
        for ii, i in enumerate(a.items):
            for j in (a.items[ii + 1:] if same else b.items):
                out.append((i, j) if i < j else (j, i))

    def visit(a, b, same):
        if not same and not _overlap(a, b):
            return
        if a.items is not None and b.items is not None:
            leaf_pairs(a, b, same)
        elif same:
            visit(a.left, a.left, True)
            visit(a.right, a.right, True)
            visit(a.left, a.right, False)
        elif a.items is None and (b.items is not None or np.prod(a.hi - a.lo) >= np.prod(b.hi - b.lo)):
            visit(a.left, b, False)
            visit(a.right, b, False)
        else:
            visit(a, b.left, False)
            visit(a, b.right, False)

    visit(root, root, True)
    return out


# -- mesh-level test ----------------------------------------------------------
def _triangles(m):
    tris, owner = [], []
    for fi, f in enumerate(m.faces):
        for k in range(1, len(f) - 1):
            tris.append((f[0], f[k], f[k + 1]))
            owner.append(fi)
    return np.array(tris, dtype=int), np.array(owner, dtype=int)


def _separated(V, tris, pairs):
    """Mask of triangle pairs certainly disjoint apart from shared vertices.

    A pair is rejected when the unshared vertices of one triangle lie
    strictly on one side of the other's plane by a margin far above
    rounding error, so the exact predicates would agree.
    """
    if len(pairs) == 0:
        return np.zeros(0, dtype=bool)
    I, J = pairs[:, 0], pairs[:, 1]
    diam = max(float(np.ptp(V, axis=0).max()), 1e-300)
    out = np.zeros(len(pairs), dtype=bool)
    for A, B in ((I, J), (J, I)):
        P = V[tris[A]]
        Q = V[tris[B]]
        n = np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])
        d = np.einsum("ijk,ik->ij", Q - P[:, None, 0], n)
        shared = (tris[B][:, :, None] == tris[A][:, None, :]).any(axis=2)
        eps = 1e-9 * np.linalg.norm(n, axis=1) * diam
        pos = (d > eps[:, None]) | shared
        neg = (d < -eps[:, None]) | shared
        nshared = shared.sum(axis=1)
        out |= (nshared < 2) & (pos.all(axis=1) | neg.all(axis=1))
    return out


def _witnesses(m, pairs, tris, owner, tol, first_only):
    V = m.vertices
    found = []
    pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
    pairs = pairs[owner[pairs[:, 0]] != owner[pairs[:, 1]]]
    pairs = pairs[~_separated(V, tris, pairs)]
    for i, j in pairs:
        ti, tj = tris[i], tris[j]
        shared = [(a, b) for a in range(3) for b in range(3) if ti[a] == tj[b]]
        r = pair_test(V[ti], V[tj], shared, tol)
        if r is None:
            continue
        kind, depth, pts = r
        w = IntersectionWitness((int(owner[i]), int(owner[j])), pts, kind, depth)
        if kind == "crossing" and first_only:
            return [w]
        found.append(w)
    found.sort(key=lambda w: (w.kind != "crossing", -w.depth))
    return found


def intersection_witnesses(m, contact_tol=None, brute_force=False, first_only=False):
    """All face-pair intersections of ``m`` (crossings first)."""
    tris, owner = _triangles(m)
    tol = CONTACT_REL_TOL * m.diameter() if contact_tol is None else contact_tol
    if brute_force:
        pairs = [(i, j) for i in range(len(tris)) for j in range(i + 1, len(tris))]
    else:
        P = m.vertices[tris]
        lo = P.min(axis=1) - tol
        hi = P.max(axis=1) + tol
        pairs = bvh_pairs(build_bvh(lo, hi))
    return _witnesses(m, pairs, tris, owner, tol, first_only)


def self_intersects(m, contact_tol=None, brute_force=False):
    """First crossing witness, else the deepest touching witness, else ``None``."""
    ws = intersection_witnesses(m, contact_tol, brute_force, first_only=True)
    return ws[0] if ws else None


def is_embedded(m, contact_tol=None):
    w = self_intersects(m, contact_tol)
    return w is None or w.kind != "crossing"


# -- path checks --------------------------------------------------------------
def winding_number(m, point, vertices=None):
    """Generalised winding number of a closed mesh about ``point`` (1 inside, 0 outside)."""
    x = m.vertices if vertices is None else np.reshape(vertices, (-1, 3))
    t = np.array(mc.triangle_list(m))
    a, b, c = (x[t[:, k]] - np.asarray(point, float) for k in range(3))
    la, lb, lc = (np.linalg.norm(v, axis=1) for v in (a, b, c))
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = (la * lb * lc + np.einsum("ij,ij->i", a, b) * lc
           + np.einsum("ij,ij->i", b, c) * la + np.einsum("ij,ij->i", c, a) * lb)
    return float(np.sum(2.0 * np.arctan2(num, den)) / (4.0 * np.pi))


def check_isometry(path, reference=None):
    """Max relative drift ``|len - len0| / len0`` over states and constrained pairs."""
    if len(path.states) == 0:
        raise ValueError("empty path")
    cs = path.constraints
    if cs is not None:
        pairs = cs.pairs
    else:
        pairs = np.array(mc.intra_face_pairs(path.mesh), dtype=int)
    X = path.configurations().reshape(len(path.states), -1, 3)
    if reference is None:
        ref = np.linalg.norm(X[0, pairs[:, 0]] - X[0, pairs[:, 1]], axis=1)
    else:
        ref = np.asarray(reference, dtype=float)
    L = np.linalg.norm(X[:, pairs[:, 0]] - X[:, pairs[:, 1]], axis=2)
    return float(np.max(np.abs(L - ref) / ref))


def check_bellows(path):
    """Max relative volume drift ``|vol - vol0| / (1 + |vol0|)``."""
    if not path.mesh.closed:
        raise OpenMeshNotAllowed("bellows check needs a closed mesh")
    vols = np.array([mc.enclosed_volume(path.mesh, s.q) for s in path.states])
    return float(np.max(np.abs(vols - vols[0])) / (1.0 + abs(vols[0])))


@dataclass
class ValidationReport:
    configurations: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return self.summary.get("verdict", False)

    def lines(self):
        out = []
        for k, v in self.summary.items():
            out.append(f"{k}: {v}")
        return out


def report_path(path, tol_isometry=1e-8, tol_bellows=1e-8, tol_unfolded=1e-4):
    """Validation report of a traced flex path."""
    from .flex import folding_range, unfolded_edges
    rep = ValidationReport()
    X = path.configurations().reshape(len(path.states), -1, 3)
    pairs = path.constraints.pairs if path.constraints is not None else \
        np.array(mc.intra_face_pairs(path.mesh), dtype=int)
    ref = np.linalg.norm(X[0, pairs[:, 0]] - X[0, pairs[:, 1]], axis=1)
    for k, s in enumerate(path.states):
        L = np.linalg.norm(X[k, pairs[:, 0]] - X[k, pairs[:, 1]], axis=1)
        emb = True if path.intersects is None else not bool(path.intersects[k])
        rep.configurations.append({
            "t": s.t,
            "embedded": emb,
            "max_edge_drift": float(np.max(np.abs(L - ref) / ref)),
            "volume": None if path.volumes is None else float(path.volumes[k]),
            "dihedrals": None if path.dihedrals is None else path.dihedrals[k].tolist(),
        })
    iso = check_isometry(path)
    bel = check_bellows(path) if path.mesh.closed else 0.0
    emb = all(c["embedded"] for c in rep.configurations)
    unf = sorted(unfolded_edges(path, tol_unfolded)) if len(path.states) >= 3 else []
    rep.summary = {
        "states": len(path.states),
        "folding_range_deg": folding_range(path),
        "isometry_drift": iso,
        "volume_drift": bel,
        "embedded": emb,
        "unfolded_edges": unf,
        "termination": dict(path.termination),
        "verdict": bool(iso < tol_isometry and bel < tol_bellows and emb),
    }
    return rep


def sweep_embeddedness(builder, grid, resolution=1e-3, refine=True):
    """Evaluate ``builder(*params) -> Mesh`` over the Cartesian ``grid`` (list of 1-D axes).

    Along every grid line whose embeddedness flips between neighbouring
    samples, the first failure is bracketed by bisection to ``resolution``
    in parameter units.  Builder errors propagate.
    """
    axes = [np.asarray(a, dtype=float) for a in grid]
    shape = tuple(len(a) for a in axes)
    emb = np.zeros(shape, dtype=bool)
    rep = ValidationReport()
    vols = {}
    for idx in product(*(range(n) for n in shape)):
        params = tuple(a[i] for a, i in zip(axes, idx))
        m = builder(*params)
        w = self_intersects(m)
        emb[idx] = w is None or w.kind != "crossing"
        vol = mc.enclosed_volume(m) if m.closed else None
        vols[idx] = vol
        rep.configurations.append({"params": params, "embedded": bool(emb[idx]), "volume": vol,
                                   "witness": None if w is None else str(w)})
    brackets = []
    if refine:
        for ax in range(len(shape)):
            for idx in product(*(range(n) for n in shape)):
                if idx[ax] + 1 >= shape[ax]:
                    continue
                nxt = list(idx)
                nxt[ax] += 1
                nxt = tuple(nxt)
                if emb[idx] and not emb[nxt]:
                    lo, hi = axes[ax][idx[ax]], axes[ax][nxt[ax]]
                    base = [a[i] for a, i in zip(axes, idx)]
                    while abs(hi - lo) > resolution:
                        mid = 0.5 * (lo + hi)
                        base[ax] = mid
                        if is_embedded(builder(*base)):
                            lo = mid
                        else:
                            hi = mid
                    brackets.append({"axis": ax, "at": tuple(base), "first_failure": hi})
    v = [x for x in vols.values() if x is not None]
    drift = float((max(v) - min(v)) / (1 + abs(v[0]))) if v else 0.0
    rep.summary = {"samples": int(emb.size), "embedded_samples": int(emb.sum()),
                   "all_embedded": bool(emb.all()), "volume_drift": drift,
                   "first_failures": brackets, "verdict": bool(emb.all())}
    return rep
