"""Flexible building blocks: Bricard octahedra, crinkles, collar crinkles and nets.

Octahedron vertices use the labels ``A..F`` with opposite (non-adjacent)
pairs ``(A, E)``, ``(B, D)`` and ``(C, F)``.  A crinkle is what remains
after deleting the two faces ``ABC`` and ``ACD`` that share the diagonal
``AC``; its boundary is the skew quadrilateral ``A-B-C-D``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import mesh as mc
from .errors import (
    FacesNotAdjacent,
    InfeasibleLengths,
    NoConvergence,
    PlanarityViolation,
    SymmetryViolation,
    WrongBranch,
)

LABELS = ("A", "B", "C", "D", "E", "F")
OPPOSITE = {"A": "E", "E": "A", "B": "D", "D": "B", "C": "F", "F": "C"}
OCTA_FACES = (("A", "B", "C"), ("A", "C", "D"), ("A", "B", "F"), ("A", "D", "F"),
              ("E", "B", "C"), ("E", "D", "C"), ("E", "B", "F"), ("E", "D", "F"))
OCTA_EDGES = tuple(sorted({tuple(sorted((f[i], f[(i + 1) % 3]))) for f in OCTA_FACES for i in range(3)}))

# line symmetry swaps A<->E, B<->D, C<->F; plane symmetry fixes B, D and swaps A<->E, C<->F
_TYPE_I_PERM = {"A": "E", "E": "A", "B": "D", "D": "B", "C": "F", "F": "C"}
_TYPE_II_PERM = {"A": "E", "E": "A", "B": "B", "D": "D", "C": "F", "F": "C"}

FOLD_TOL = 1e-12
DEFAULT_RETRIES = 64


def _key(u, v):
    return (u, v) if u < v else (v, u)


def symmetry_classes(kind):
    """Edge orbits of the octahedron under the symmetry of Bricard type ``kind``."""
    perm = {"I": _TYPE_I_PERM, "II": _TYPE_II_PERM}[_kind(kind)]
    seen, out = set(), []
    for e in OCTA_EDGES:
        if e in seen:
            continue
        img = _key(perm[e[0]], perm[e[1]])
        orbit = tuple(sorted({e, img}))
        seen.update(orbit)
        out.append(orbit)
    return out


def _kind(kind):
    k = str(kind).upper().replace("TYPE", "").strip(" _")
    if k in ("1", "I"):
        return "I"
    if k in ("2", "II"):
        return "II"
    raise ValueError(f"unsupported Bricard type {kind!r} (expected I or II)")


def _normalise_lengths(lengths):
    out = {}
    for k, v in dict(lengths).items():
        e = tuple(k) if not isinstance(k, str) else tuple(k)
        if len(e) != 2 or e[0] not in LABELS or e[1] not in LABELS:
            raise KeyError(f"bad octahedron edge key {k!r}")
        key = _key(*e)
        if key not in OCTA_EDGES:
            raise KeyError(f"{''.join(key)} is not an octahedron edge")
        if not v > 0:
            raise InfeasibleLengths(f"edge {''.join(key)} must have positive length, got {v}")
        out[key] = float(v)
    return out


def complete_lengths(kind, lengths):
    """Fill a partial edge-length map using the symmetry pairing of ``kind``.

    Raises :class:`SymmetryViolation` when two given lengths in the same orbit
    disagree, and ``KeyError`` when an orbit has no length at all.
    """
    given = _normalise_lengths(lengths)
    full = {}
    for orbit in symmetry_classes(kind):
        vals = [given[e] for e in orbit if e in given]
        if not vals:
            raise KeyError(f"no length given for edge orbit {[''.join(e) for e in orbit]}")
        if max(vals) - min(vals) > 1e-9 * max(vals):
            raise SymmetryViolation(
                f"type {_kind(kind)} pairs {' = '.join(''.join(e) for e in orbit)} but got {vals}")
        for e in orbit:
            full[e] = vals[0]
    return full


# -- damped least squares on squared distances -------------------------------
def solve_distances(x0, pairs, lengths, fixed=(), tol=FOLD_TOL, max_iter=200):
    """Levenberg-Marquardt on ``|x_i - x_j|^2 - L^2``; returns ``(x, rel_residual)``.

    ``fixed`` vertex indices keep their coordinates from ``x0``.  The
    residual is the max of ``|d^2 - L^2| / L^2``.
    """
    x = np.array(x0, dtype=float).reshape(-1, 3)
    pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
    L2 = np.asarray(lengths, dtype=float) ** 2
    free = np.ones(len(x), dtype=bool)
    free[list(fixed)] = False
    cols = np.repeat(free, 3)
    w = 1.0 / L2

    def resid(x):
        d = x[pairs[:, 0]] - x[pairs[:, 1]]
        return (np.einsum("ij,ij->i", d, d) - L2) * w

    def jac(x):
        d = 2.0 * (x[pairs[:, 0]] - x[pairs[:, 1]]) * w[:, None]
        J = np.zeros((len(pairs), x.size))
        rows = np.arange(len(pairs))
        for k in range(3):
            J[rows, 3 * pairs[:, 0] + k] = d[:, k]
            J[rows, 3 * pairs[:, 1] + k] = -d[:, k]
        return J[:, cols]

    r = resid(x)
    cost = r @ r
    lam = 1e-3
    for _ in range(max_iter):
        if np.max(np.abs(r), initial=0.0) < tol:
            break
        J = jac(x)
        A = J.T @ J
        g = J.T @ r
        improved = False
        for _ in range(30):
            step = np.linalg.solve(A + lam * (np.diag(np.diag(A)) + 1e-12 * np.eye(len(A))), -g)
            xn = x.copy()
            xn.reshape(-1)[np.flatnonzero(cols)] += step
            rn = resid(xn)
            cn = rn @ rn
            if cn < cost:
                x, r, cost = xn, rn, cn
                lam = max(lam / 3.0, 1e-12)
                improved = True
                break
            lam *= 4.0
        if not improved:
            break
    return x, float(np.max(np.abs(r), initial=0.0))


# -- Bricard octahedra ---------------------------------------------------------
def _rot_z(p):
    return np.array([-p[0], -p[1], p[2]])


def _mirror_x(p):
    return np.array([-p[0], p[1], p[2]])


def _assemble_symmetric(kind, u):
    """Vertex array (order A..F) from the free symmetric coordinates ``u``."""
    if kind == "I":
        a = np.array([u[0], 0.0, 0.0])
        b = u[1:4]
        c = u[4:7]
        pts = {"A": a, "B": b, "C": c, "E": _rot_z(a), "D": _rot_z(b), "F": _rot_z(c)}
    else:
        b = np.zeros(3)
        dd = np.array([0.0, u[0], 0.0])
        a = u[1:4]
        c = u[4:7]
        pts = {"A": a, "B": b, "C": c, "D": dd, "E": _mirror_x(a), "F": _mirror_x(c)}
    return np.array([pts[k] for k in LABELS])


def _solve_symmetric(kind, full, rng, retries, seed_u=None):
    orbits = symmetry_classes(kind)
    reps = [o[0] for o in orbits]
    idx = {k: i for i, k in enumerate(LABELS)}
    L = np.array([full[e] for e in reps])
    scale = L.max()

    def resid(u):
        x = _assemble_symmetric(kind, u)
        d = np.array([np.linalg.norm(x[idx[a]] - x[idx[b]]) for a, b in reps])
        return (d ** 2 - L ** 2) / L ** 2

    def jac(u, h=1e-7):
        r0 = resid(u)
        J = np.zeros((len(r0), len(u)))
        for k in range(len(u)):
            up = u.copy()
            up[k] += h * scale
            J[:, k] = (resid(up) - r0) / (h * scale)
        return J

    best = None
    for attempt in range(retries):
        u = (np.asarray(seed_u, float).copy() if (seed_u is not None and attempt == 0)
             else rng.normal(size=7) * scale * 0.6)
        lam = 1e-3
        r = resid(u)
        for _ in range(300):
            if np.max(np.abs(r)) < FOLD_TOL:
                break
            J = jac(u)
            A = J.T @ J
            g = J.T @ r
            step = np.linalg.lstsq(A + lam * np.eye(len(A)), -g, rcond=None)[0]
            rn = resid(u + step)
            if rn @ rn < r @ r:
                u, r = u + step, rn
                lam = max(lam / 3.0, 1e-14)
            else:
                lam *= 5.0
                if lam > 1e12:
                    break
        if np.max(np.abs(r)) < 1e-11:
            x = _assemble_symmetric(kind, u)
            face_areas = [np.linalg.norm(np.cross(x[idx[f[1]]] - x[idx[f[0]]], x[idx[f[2]]] - x[idx[f[0]]]))
                          for f in OCTA_FACES]
            if min(face_areas) > 1e-6 * scale ** 2:
                best = x
                break
    return best


def bricard_octahedron(kind, lengths, seed=None, retries=DEFAULT_RETRIES):
    """Self-intersecting flexible octahedron of Bricard type ``"I"`` or ``"II"``.

    ``lengths`` maps octahedron edges (strings such as ``"AB"``) to lengths;
    one length per symmetry orbit suffices and repeated orbit members must
    agree.  The vertices are solved in symmetric coordinates, so the output
    carries the symmetry exactly.  Returns a closed :class:`~flexpoly.mesh.Mesh`
    labelled ``A..F``.
    """
    kind = _kind(kind)
    full = complete_lengths(kind, lengths)
    for f in OCTA_FACES:
        a, b, c = sorted(full[_key(f[i], f[(i + 1) % 3])] for i in range(3))
        if a + b <= c * (1 + 1e-12):
            raise InfeasibleLengths(f"face {''.join(f)} violates the triangle inequality")
    rng = np.random.default_rng(seed)
    x = _solve_symmetric(kind, full, rng, retries)
    if x is None:
        raise InfeasibleLengths(f"no real type {kind} configuration found after {retries} starts")
    idx = {k: i for i, k in enumerate(LABELS)}
    faces = [tuple(idx[k] for k in f) for f in OCTA_FACES]
    faces = mc.orient_consistently(faces)
    return mc.Mesh(x, faces, labels=LABELS)


def symmetry_defect(octa, kind):
    """Distance by which ``octa`` fails the symmetry of ``kind`` (0 for an exact instance).

    The best symmetry element is fitted from the vertex pairing: the
    rotation axis through the midpoints of the swapped pairs for type I and
    the bisecting plane of ``A, E`` for type II.
    """
    kind = _kind(kind)
    x = {lb: octa.vertices[octa.index(lb)] for lb in LABELS}
    if kind == "I":
        mids = np.array([(x["A"] + x["E"]) / 2, (x["B"] + x["D"]) / 2, (x["C"] + x["F"]) / 2])
        c = mids.mean(axis=0)
        _, _, vt = np.linalg.svd(mids - c)
        axis = vt[0]

        def img(p):
            v = p - c
            along = np.dot(v, axis) * axis
            return c + 2 * along - v
        pairs = [("A", "E"), ("B", "D"), ("C", "F")]
        return max(max(np.linalg.norm(img(x[p]) - x[q]), np.linalg.norm(img(x[q]) - x[p]))
                   for p, q in pairs)
    n = x["E"] - x["A"]
    n = n / np.linalg.norm(n)
    c = (x["A"] + x["E"]) / 2

    def refl(p):
        return p - 2 * np.dot(p - c, n) * n
    pairs = [("A", "E"), ("C", "F"), ("B", "B"), ("D", "D")]
    return max(np.linalg.norm(refl(x[p]) - x[q]) for p, q in pairs)


# -- crinkles ----------------------------------------------------------------
POP_IN = "pop_in"
POP_OUT = "pop_out"


def _check_orientation(o):
    if o not in (POP_IN, POP_OUT):
        raise ValueError(f"orientation must be {POP_IN!r} or {POP_OUT!r}, got {o!r}")
    return o


def pop_side(points, boundary, v):
    """+1 / -1: side of vertex ``v`` relative to the oriented best-fit plane of ``boundary``.

    The plane normal is the Newell normal of the boundary cycle in the given
    order; a vertex on the negative side "pops in".
    """
    x = np.reshape(points, (-1, 3))
    b = x[list(boundary)]
    n = mc.newell_normal(b)
    s = float(np.dot(x[v] - b.mean(axis=0), n))
    return 1 if s > 0 else -1


def reflect_through_plane(points, plane_points):
    """Mirror ``points`` through the least-squares plane of ``plane_points``."""
    x = np.reshape(points, (-1, 3))
    p = np.reshape(plane_points, (-1, 3))
    c = p.mean(axis=0)
    n = np.linalg.svd(p - c)[2][2]
    return x - 2.0 * np.outer((x - c) @ n, n)


def _close_faces(surface, extra_faces):
    faces = list(surface.faces) + [tuple(f) for f in extra_faces]
    faces = mc.orient_consistently(faces)
    # keep the surface's own orientation
    if faces[0] != surface.faces[0]:
        faces = [tuple(reversed(f)) for f in faces]
    return faces


@dataclass(frozen=True)
class Crinkle:
    """Open flexible surface bounded by the skew quadrilateral ``A-B-C-D``.

    ``surface`` is labelled; the boundary labels are ``A, B, C, D`` and the
    interior vertices of an octahedral crinkle are ``E`` (opposite ``A``) and
    ``F`` (opposite ``C``).
    """
    surface: mc.OpenMesh
    diagonal_ac: float
    source: str
    orientation: str
    boundary_labels: tuple = ("A", "B", "C", "D")
    probe: str = "E"

    def idx(self, label):
        return self.surface.index(label)

    @property
    def boundary_idx(self):
        return tuple(self.idx(lb) for lb in self.boundary_labels)

    def closing_faces(self):
        a, b, c, d = self.boundary_idx
        return [(a, b, c), (a, c, d)]

    def closed(self, vertices=None):
        """Closed (self-intersecting) mesh: the surface plus triangles ``ABC`` and ``ACD``."""
        faces = _close_faces(self.surface, self.closing_faces())
        x = self.surface.vertices if vertices is None else vertices
        return mc.Mesh(x, faces, labels=self.surface.labels)

    def boundary_lengths(self):
        x = self.surface.vertices
        ids = self.boundary_idx
        return {(self.boundary_labels[k], self.boundary_labels[(k + 1) % 4]):
                float(np.linalg.norm(x[ids[k]] - x[ids[(k + 1) % 4]])) for k in range(4)}

    def with_vertices(self, x):
        return replace(self, surface=self.surface.with_vertices(x))


def crinkle_orientation(surface, boundary, probe):
    return POP_IN if pop_side(surface.vertices, boundary, probe) < 0 else POP_OUT


def crinkle_from_octahedron(octa, removed=(("A", "B", "C"), ("A", "C", "D")), source=None,
                            check=True):
    """Crinkle obtained by deleting two faces of ``octa`` that share exactly one edge.

    ``removed`` holds two faces given as label triples or vertex-index
    triples.  The shared edge becomes the fixed diagonal ``AC``; the mesh is
    relabelled so the boundary reads ``A-B-C-D`` and the vertices opposite
    ``A`` and ``C`` are ``E`` and ``F``.
    """
    def as_idx(f):
        return tuple(octa.index(v) if isinstance(v, str) else int(v) for v in f)
    f1, f2 = (as_idx(f) for f in removed)
    faces = [tuple(f) for f in octa.faces]
    keys = [frozenset(f) for f in faces]
    for f in (f1, f2):
        if frozenset(f) not in keys:
            raise FacesNotAdjacent(f"{f} is not a face of the octahedron")
    shared = set(f1) & set(f2)
    if len(shared) != 2 or frozenset(f1) == frozenset(f2):
        raise FacesNotAdjacent(f"faces {f1} and {f2} do not share exactly one edge")
    a, c = sorted(shared)
    b = next(v for v in f1 if v not in shared)
    d = next(v for v in f2 if v not in shared)
    kept = [f for f, k in zip(faces, keys) if k not in (frozenset(f1), frozenset(f2))]
    nbrs = {v: set() for v in range(octa.n_vertices)}
    for f in faces:
        for i in range(3):
            nbrs[f[i]].update((f[(i + 1) % 3], f[(i + 2) % 3]))
    e = next(v for v in range(octa.n_vertices) if v != a and v not in nbrs[a])
    fv = next(v for v in range(octa.n_vertices) if v != c and v not in nbrs[c])
    order = [a, b, c, d, e, fv]
    if len(set(order)) != 6:
        raise FacesNotAdjacent("octahedron combinatorics not recognised")
    re = {old: new for new, old in enumerate(order)}
    x = octa.vertices[order]
    new_faces = [tuple(re[v] for v in f) for f in kept]
    surf = mc.build_mesh(x, new_faces, allow_boundary=True, labels=LABELS)
    diag = float(np.linalg.norm(x[0] - x[2]))
    src = source or ("octahedron" if octa.labels is None else "bricard")
    cr = Crinkle(surf, diag, src, crinkle_orientation(surf, (0, 1, 2, 3), 4))
    if check:
        verify_crinkle(cr)
    return cr


def verify_crinkle(cr, vol_tol=1e-9):
    """Check the closing invariants: zero algebraic volume and a flexible closure."""
    from .flex import build_constraints, dof
    closed = cr.closed()
    vol = mc.enclosed_volume(closed)
    if abs(vol) > vol_tol * closed.diameter() ** 3:
        raise InfeasibleLengths(f"closed crinkle has volume {vol:.3e}, expected 0")
    rep = dof(build_constraints(closed), closed.vertices.ravel())
    if rep.flex_dof < 1:
        raise InfeasibleLengths("closed crinkle is rigid")
    return vol, rep


def set_pop_orientation(c, o):
    """Return ``c`` itself or its mirror image through the best-fit plane of its boundary.

    Labels, boundary order and every intrinsic distance are preserved; face
    cycles are reversed so the mirrored surface stays consistently oriented.
    """
    _check_orientation(o)
    if c.orientation == o:
        return c
    x = reflect_through_plane(c.surface.vertices, c.surface.vertices[list(c.boundary_idx)])
    s = c.surface
    faces = [tuple(reversed(f)) for f in s.faces]
    surf = mc.build_mesh(x, faces, allow_boundary=True, labels=s.labels)
    new = replace(c, surface=surf)
    now = crinkle_orientation(surf, new.boundary_idx, new.idx(new.probe))
    return replace(new, orientation=now)


def bricard_crinkle(kind, lengths, orientation=None, seed=None):
    """Convenience: octahedron of the given type with ``ABC`` and ``ACD`` removed."""
    octa = bricard_octahedron(kind, lengths, seed=seed)
    cr = crinkle_from_octahedron(octa, source=f"bricard-{_kind(kind)}")
    return cr if orientation is None else set_pop_orientation(cr, orientation)


def steffen_crinkle_lengths(w=11.0, z=5.0, short=10.0, long=12.0):
    """Type I crinkle lengths of the classical nine-vertex flexor.

    ``AB = BC = ED = DF = short``, ``CD = DA = FB = BE = long``,
    ``AC = EF = w`` and ``EC = AF = z``.
    """
    return {"AB": short, "BC": short, "CD": long, "DA": long, "AC": w, "EC": z}


# -- nets --------------------------------------------------------------------
@dataclass
class Net:
    """Planar polygons with named corners and a vertex-identification map.

    ``coords`` maps every net vertex name to its 2D position; ``identify``
    maps a net vertex name to the label of the surface vertex it becomes
    (names absent from the map keep their own name).  ``boundary`` is the
    ordered boundary cycle of the folded surface, in surface labels.
    """
    polygons: list
    coords: dict
    identify: dict = field(default_factory=dict)
    boundary: tuple = ()

    def label(self, name):
        return self.identify.get(name, name)

    @property
    def labels(self):
        out = []
        for poly in self.polygons:
            for v in poly:
                lb = self.label(v)
                if lb not in out:
                    out.append(lb)
        return out

    @property
    def classes(self):
        cl = {}
        for poly in self.polygons:
            for v in poly:
                cl.setdefault(self.label(v), set()).add(v)
        return cl

    @property
    def edge_lengths(self):
        """Length of every polygon side, keyed by the net vertex pair."""
        out = {}
        for poly in self.polygons:
            for k in range(len(poly)):
                a, b = poly[k], poly[(k + 1) % len(poly)]
                out[(a, b)] = float(np.linalg.norm(np.subtract(self.coords[a], self.coords[b])))
        return out

    def distance_constraints(self):
        """Surface-label pairs and lengths: every intra-polygon pair (face rigidity).

        Raises :class:`InfeasibleLengths` when two net pairs that glue onto
        the same surface pair carry different lengths.
        """
        out = {}
        for poly in self.polygons:
            for i in range(len(poly)):
                for j in range(i + 1, len(poly)):
                    a, b = self.label(poly[i]), self.label(poly[j])
                    if a == b:
                        raise InfeasibleLengths(f"polygon {poly} contains two copies of {a}")
                    L = float(np.linalg.norm(np.subtract(self.coords[poly[i]], self.coords[poly[j]])))
                    key = _key(a, b)
                    if key in out and abs(out[key] - L) > 1e-9 * max(L, out[key]):
                        raise InfeasibleLengths(
                            f"identified edge {a}{b} has lengths {out[key]:.12g} and {L:.12g}")
                    out.setdefault(key, L)
        return out

    def validate(self):
        """Check positivity, gluing consistency and planar non-overlap of the polygons."""
        for (a, b), L in self.edge_lengths.items():
            if not L > 0:
                raise InfeasibleLengths(f"net edge {a}{b} has zero length")
        self.distance_constraints()
        tris = []
        for pi, poly in enumerate(self.polygons):
            p = np.array([self.coords[v] for v in poly], dtype=float)
            area = 0.5 * (np.dot(p[:, 0], np.roll(p[:, 1], -1)) - np.dot(p[:, 1], np.roll(p[:, 0], -1)))
            if abs(area) < 1e-12:
                raise InfeasibleLengths(f"net polygon {poly} is degenerate")
            for k in range(1, len(poly) - 1):
                tris.append((pi, p[[0, k, k + 1]]))
        from .validation import _clip_area
        scale = max(np.ptp(np.array(list(self.coords.values())), axis=0).max(), 1e-12)
        for i in range(len(tris)):
            for j in range(i + 1, len(tris)):
                if tris[i][0] == tris[j][0]:
                    continue
                if _clip_area(tris[i][1], tris[j][1]) > 1e-9 * scale ** 2:
                    raise InfeasibleLengths(
                        f"net polygons {tris[i][0]} and {tris[j][0]} overlap in the plane")
        return True


def unfold(surface, root=0, boundary=None):
    """Net of ``surface`` obtained by unfolding a spanning tree of faces.

    Face copies of a surface vertex are named ``<label>_1``, ``<label>_2`` ...
    when the vertex is cut apart, and keep the bare label otherwise.  Tries
    each root face in turn and returns the first net without overlap.
    """
    labels = surface.labels or tuple(str(i) for i in range(surface.n_vertices))
    x = surface.vertices
    nf = len(surface.faces)
    last_err = None
    for r in list(range(root, nf)) + list(range(root)):
        try:
            net = _unfold_from(surface, labels, x, r)
            if boundary is not None:
                net.boundary = tuple(boundary)
            net.validate()
            return net
        except InfeasibleLengths as e:
            last_err = e
    raise InfeasibleLengths(f"no overlap-free unfolding found: {last_err}")


def _face_frame(pts):
    c = pts[0]
    e1 = pts[1] - c
    e1 /= np.linalg.norm(e1)
    n = mc.newell_normal(pts)
    n /= np.linalg.norm(n)
    e2 = np.cross(n, e1)
    return np.array([[np.dot(p - c, e1), np.dot(p - c, e2)] for p in pts])


def _place(local, ia, ib, pa, pb):
    """Rigid 2D motion (no reflection) taking local points ia, ib onto pa, pb."""
    u = local[ib] - local[ia]
    v = np.asarray(pb) - np.asarray(pa)
    ang = np.arctan2(v[1], v[0]) - np.arctan2(u[1], u[0])
    R = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    return (local - local[ia]) @ R.T + pa


def _unfold_from(surface, labels, x, root):
    faces = surface.faces
    ef = surface.edge_faces
    placed = {root: _face_frame(x[list(faces[root])])}
    queue = [root]
    while queue:
        fi = queue.pop(0)
        f = faces[fi]
        for k in range(len(f)):
            u, v = f[k], f[(k + 1) % len(f)]
            for fj in ef[_key(u, v)]:
                if fj in placed:
                    continue
                g = faces[fj]
                loc = _face_frame(x[list(g)])
                # consistently oriented faces traverse the shared edge as v->u
                placed[fj] = _place(loc, g.index(v), g.index(u), placed[fi][(k + 1) % len(f)],
                                    placed[fi][k])
                queue.append(fj)
    # merge corners that land on the same spot
    copies = {}
    coords, polys, ident = {}, [], {}
    tol = 1e-9 * max(surface.diameter(), 1e-12)
    for fi in range(len(faces)):
        names = []
        for k, vi in enumerate(faces[fi]):
            p = placed[fi][k]
            lst = copies.setdefault(vi, [])
            hit = next((nm for nm, q in lst if np.linalg.norm(q - p) < tol), None)
            if hit is None:
                hit = (labels[vi], len(lst) + 1)
                lst.append((hit, p))
            names.append(hit)
        polys.append(names)
    final = {}
    for vi, lst in copies.items():
        for (lb, k), p in lst:
            nm = lb if len(lst) == 1 else f"{lb}_{k}"
            final[(lb, k)] = nm
            coords[nm] = tuple(float(c) for c in p)
            if nm != lb:
                ident[nm] = lb
    polys = [tuple(final[n] for n in poly) for poly in polys]
    bnd = tuple(labels[v] for v in surface.boundary[0]) if surface.boundary else ()
    return Net(polys, coords, ident, bnd)


def _hints_ok(x, idx, boundary, hints):
    if not hints:
        return True
    bidx = [idx[b] for b in boundary]
    for lb, want in hints.items():
        side = pop_side(x, bidx, idx[lb])
        if (want == POP_IN and side > 0) or (want == POP_OUT and side < 0):
            return False
    return True


def fold_net(net, hints=None, seed=None, x0=None, retries=DEFAULT_RETRIES, rng=None, extra=None):
    """Fold ``net`` into space so that every polygon is realised rigidly.

    ``hints`` maps surface labels to ``"pop_in"`` / ``"pop_out"`` (side of
    the oriented boundary best-fit plane).  ``x0`` optionally maps labels to
    seed coordinates.  ``extra`` maps further label pairs to distances, e.g.
    the ``A C`` diagonal of a crinkle net, which no polygon fixes.  The solver is damped Gauss-Newton on squared
    distances, restarted from randomly perturbed flat layouts.  Returns an
    :class:`~flexpoly.mesh.OpenMesh` (or a closed Mesh for closed nets).
    """
    net.validate()
    labels = net.labels
    idx = {lb: i for i, lb in enumerate(labels)}
    cons = net.distance_constraints()
    for (a, b), d in (extra or {}).items():
        if not d > 0:
            raise InfeasibleLengths(f"extra distance {a}{b} must be positive")
        cons[_key(a, b)] = float(d)
    pairs = [(idx[a], idx[b]) for a, b in cons]
    L = np.array(list(cons.values()))
    faces = mc.orient_consistently([tuple(idx[net.label(v)] for v in poly) for poly in net.polygons])
    if hints and not net.boundary:
        raise ValueError("pop hints need a boundary cycle")
    rng = rng if rng is not None else np.random.default_rng(seed)
    flat = np.zeros((len(labels), 3))
    for lb, names in net.classes.items():
        flat[idx[lb], :2] = np.mean([net.coords[n] for n in names], axis=0)
    scale = float(L.max())
    converged = 0
    for attempt in range(retries):
        if attempt == 0 and x0 is not None:
            start = np.array([x0[lb] for lb in labels], dtype=float)
        else:
            start = flat + rng.normal(scale=0.25 * scale, size=flat.shape)
        x, res = solve_distances(start, pairs, L)
        if res > 1e-10:
            continue
        x = _polish(x, pairs, L)
        converged += 1
        for cand in (x, reflect_through_plane(x, x)):
            if _hints_ok(cand, idx, net.boundary, hints):
                mirrored = cand is not x
                fs = [tuple(reversed(f)) for f in faces] if mirrored else faces
                try:
                    return mc.build_mesh(cand, fs, allow_boundary=True, labels=labels)
                except Exception:
                    break
    if converged:
        raise WrongBranch(f"{converged} converged foldings, none matching the pop hints {hints}")
    raise NoConvergence(f"net folding failed after {retries} starts")


def _polish(x, pairs, L, iters=4):
    """A few Gauss-Newton steps on the distance residuals to reach machine precision."""
    pairs = np.asarray(pairs)
    for _ in range(iters):
        d = x[pairs[:, 0]] - x[pairs[:, 1]]
        r = np.einsum("ij,ij->i", d, d) - L ** 2
        J = np.zeros((len(pairs), x.size))
        rows = np.arange(len(pairs))
        for k in range(3):
            J[rows, 3 * pairs[:, 0] + k] = 2 * d[:, k]
            J[rows, 3 * pairs[:, 1] + k] = -2 * d[:, k]
        dx = np.linalg.lstsq(J, -r, rcond=None)[0]
        x = x + dx.reshape(-1, 3)
    return x


def crinkle_from_net(net, hints=None, seed=None, source="net", **kw):
    """Fold a crinkle net (4-vertex boundary ``A-B-C-D``) and wrap it as a :class:`Crinkle`."""
    surf = fold_net(net, hints=hints, seed=seed, **kw)
    a, b, c, d = (surf.index(lb) for lb in ("A", "B", "C", "D"))
    x = surf.vertices
    probe = "E" if "E" in surf.labels else next(lb for lb in surf.labels if lb not in "ABCD")
    return Crinkle(surf, float(np.linalg.norm(x[a] - x[c])), source,
                   crinkle_orientation(surf, (a, b, c, d), surf.index(probe)), probe=probe)


def net_edge_lengths(net):
    """Surface-edge lengths of a net in surface labels (polygon sides only)."""
    out = {}
    for (a, b), L in net.edge_lengths.items():
        out[_key(net.label(a), net.label(b))] = L
    return out


# -- collar crinkles ------------------------------------------------------------
COLLAR_LABELS = ("A", "B", "C", "D", "E", "F", "G", "H", "I", "J")
# faces in collar labels: the B-side fan, the row of rectangles, the translated D-side fan
COLLAR_FACES = (("A", "B", "G"), ("G", "B", "H"), ("H", "B", "C"),
                ("A", "G", "J", "F"), ("G", "H", "I", "J"), ("H", "C", "D", "I"),
                ("F", "J", "E"), ("J", "I", "E"), ("I", "D", "E"))


@dataclass(frozen=True)
class CollarCrinkle:
    """Open flexible surface bounded by the hexagon ``A-B-C-D-E-F``.

    ``A, C, D, F`` is a rectangle (the translation of the fixed diagonal
    ``AC`` onto ``FD``); ``G, H`` and their translates ``J, I`` are the
    interior vertices.
    """
    surface: mc.OpenMesh
    diagonal_ac: float
    diagonal_df: float
    height: float
    params: dict
    planar_quad: tuple = ("A", "C", "D", "F")
    boundary_labels: tuple = ("A", "B", "C", "D", "E", "F")

    def idx(self, label):
        return self.surface.index(label)

    @property
    def boundary_idx(self):
        return tuple(self.idx(lb) for lb in self.boundary_labels)

    def closing_faces(self):
        a, b, c, d, e, f = self.boundary_idx
        return [(a, b, c), (d, e, f), (a, c, d, f)]

    def closed(self, vertices=None):
        """Closed mesh: the surface plus triangles ``ABC``, ``DEF`` and rectangle ``ACDF``."""
        faces = _close_faces(self.surface, self.closing_faces())
        x = self.surface.vertices if vertices is None else vertices
        return mc.Mesh(x, faces, labels=self.surface.labels)

    def pop_pattern(self, vertices=None):
        x = self.surface.vertices if vertices is None else vertices
        return collar_pop_pattern(x, [self.idx(lb) for lb in self.boundary_labels],
                                  {lb: self.idx(lb) for lb in ("G", "H", "I", "J")})

    def planarity_residual(self, vertices=None):
        x = self.surface.vertices if vertices is None else np.reshape(vertices, (-1, 3))
        return mc.planarity_deviation(x[[self.idx(lb) for lb in self.planar_quad]])


def collar_pop_pattern(points, hexagon, interior):
    """Pop side of each interior collar vertex relative to the plane of ``A, C, D, F``.

    ``hexagon`` lists the indices of ``A..F`` in cycle order; the plane is
    oriented by the Newell normal of that cycle.
    """
    x = np.reshape(points, (-1, 3))
    n = mc.newell_normal(x[list(hexagon)])
    quad = x[[hexagon[0], hexagon[2], hexagon[3], hexagon[5]]]
    c = quad.mean(axis=0)
    return {lb: (POP_IN if np.dot(x[i] - c, n) < 0 else POP_OUT) for lb, i in interior.items()}


def collar_geometry(ab, ac, af, height, ad=None, center=0.0, branch=0):
    """Vertex array (``COLLAR_LABELS`` order) of the collar crinkle in a canonical frame.

    The underlying type II octahedron has ``BA = BC = BE = BF = ab``,
    ``DA = DC = DE = DF = ad`` (default ``ab``), ``AC = EF = ac`` and
    ``AF = EC = af``.  Its vertices ``A, F, E, C`` lie on a circle in the
    plane ``y = 0`` centred at ``(0, 0, center)``; ``center`` is the flex
    parameter.  ``branch`` (0 or 1) picks the sense of the rotation taking
    chord ``AC`` to chord ``FE``.  The cut ``A-F-E-C`` is opened by moving
    the ``D`` side by ``height`` along ``+y``.
    """
    ad = ab if ad is None else ad
    for name, v in (("ab", ab), ("ac", ac), ("af", af), ("ad", ad)):
        if not v > 0:
            raise InfeasibleLengths(f"{name} must be positive, got {v}")
    if not height > 0:
        raise InfeasibleLengths(f"rectangle height must be positive, got {height}")
    R0 = np.hypot(ac / 2.0, center)
    if af >= 2 * R0 * (1 - 1e-12):
        raise InfeasibleLengths(f"AF={af} exceeds the circumcircle diameter {2 * R0:.6g}")
    rb2, rd2 = ab ** 2 - R0 ** 2, ad ** 2 - R0 ** 2
    if rb2 <= 0 or rd2 <= 0:
        raise InfeasibleLengths("apex lengths are shorter than the circumradius of A, C, E, F")
    delta = 2.0 * np.arcsin(af / (2.0 * R0))
    sgn = 1.0 if branch == 0 else -1.0
    th_a = np.arctan2(-center, -ac / 2.0)
    th_c = np.arctan2(-center, ac / 2.0)

    def on_circle(th):
        return np.array([R0 * np.cos(th), 0.0, center + R0 * np.sin(th)])
    A, C = on_circle(th_a), on_circle(th_c)
    F = on_circle(th_a + sgn * delta)
    E = on_circle(th_c + sgn * delta)
    if abs(np.linalg.norm(E - F) - ac) > 1e-9 * ac:
        raise InfeasibleLengths("chord FE does not reproduce AC")
    B = np.array([0.0, -np.sqrt(rb2), center])
    D = np.array([0.0, np.sqrt(rd2), center])
    t = np.array([0.0, height, 0.0])
    # collar labels: G=F, H=E on the cut; J, I and D', A', C' are translates
    pts = {"A": A, "B": B, "C": C, "D": C + t, "E": D + t, "F": A + t,
           "G": F, "H": E, "I": E + t, "J": F + t}
    return np.array([pts[k] for k in COLLAR_LABELS])


def collar_crinkle(ab, ac, af, height, ad=None, center=0.0, branch=None, check=True,
                   hints=None):
    """Collar crinkle from a type II crinkle opened by a row of three rectangles.

    The pop pattern ``G, J`` in and ``H, I`` out (relative to the oriented
    hexagon ``A..F``) is enforced by default; ``branch`` forces a specific
    rotation sense instead.  Raises :class:`InfeasibleLengths` for
    non-realisable parameters and :class:`PlanarityViolation` if ``ACDF``
    comes out non-planar.
    """
    hints = hints if hints is not None else {"G": POP_IN, "J": POP_IN, "H": POP_OUT, "I": POP_OUT}
    branches = (branch,) if branch is not None else (0, 1)
    idx = {k: i for i, k in enumerate(COLLAR_LABELS)}
    faces = mc.orient_consistently([tuple(idx[v] for v in f) for f in COLLAR_FACES])
    found = None
    for br in branches:
        x = collar_geometry(ab, ac, af, height, ad=ad, center=center, branch=br)
        pat = collar_pop_pattern(x, [idx[k] for k in "ABCDEF"], {lb: idx[lb] for lb in hints})
        ok = branch is not None or pat == dict(hints)
        if ok:
            found = (br, x)
            break
    if found is None:
        raise InfeasibleLengths(f"no branch realises the pop pattern {hints}")
    br, x = found
    surf = mc.build_mesh(x, faces, allow_boundary=True, labels=COLLAR_LABELS)
    cc = CollarCrinkle(surf, float(ac), float(np.linalg.norm(x[idx["D"]] - x[idx["F"]])),
                       float(height),
                       dict(ab=ab, ac=ac, af=af, height=height, ad=ab if ad is None else ad,
                            center=center, branch=br))
    if cc.planarity_residual() > 1e-9 * surf.diameter():
        raise PlanarityViolation(f"ACDF deviates from its plane by {cc.planarity_residual():.3e}")
    if check:
        verify_collar(cc)
    return cc


def verify_collar(cc, vol_tol=1e-9):
    from .flex import build_constraints, dof
    closed = cc.closed()
    vol = mc.enclosed_volume(closed)
    if abs(vol) > vol_tol * closed.diameter() ** 3:
        raise InfeasibleLengths(f"closed collar crinkle has volume {vol:.3e}, expected 0")
    rep = dof(build_constraints(closed), closed.vertices.ravel())
    if rep.flex_dof < 1:
        raise InfeasibleLengths("closed collar crinkle is rigid")
    return vol, rep


def collar_net(cc):
    """Planar net of a collar crinkle (cut copies named ``A_1``, ``A_2`` ...)."""
    return unfold(cc.surface, boundary=cc.boundary_labels)
