"""Bases, crinkle attachment and the named assemblies.

A :class:`Base` is a rigid framework: clamped vertices, rigid faces that
appear in the final surface, bars, and open boundary polygons that are
closed by gluing crinkles (quadrilaterals) or collar crinkles (hexagons).
Boundary cycles are stored *outward*: the base closure (rigid faces plus the
crinkle closing faces of every boundary) is consistently oriented with
positive volume.  A crinkle "pops in" when its probe vertex lies on the
negative side of the boundary's Newell normal, i.e. towards the interior.
"""
from __future__ import annotations

import json
import logging
from importlib import resources
from dataclasses import dataclass, field, replace

import numpy as np

from . import flex as fx
from . import generators as gen
from . import mesh as mc
from . import validation as va
from .errors import (
    AlignmentFailure,
    AssemblyError,
    FlexPolyError,
    InfeasibleLengths,
    LengthMismatch,
    NestingViolation,
    PlanarityMismatch,
    SolverError,
    TunnelCollision,
    UnresolvedLabel,
)

log = logging.getLogger(__name__)

MATCH_RTOL = 1e-9


# -- small geometry helpers ----------------------------------------------------------
def rigid_align(src, dst):
    """Proper rigid motion ``(R, t)`` minimising ``|R src + t - dst|`` (Kabsch)."""
    src = np.asarray(src, float)
    dst = np.asarray(dst, float)
    cs, cd = src.mean(axis=0), dst.mean(axis=0)
    H = (src - cs).T @ (dst - cd)
    U, _, Vt = np.linalg.svd(H)
    S = np.eye(3)
    S[2, 2] = np.sign(np.linalg.det(Vt.T @ U.T)) or 1.0
    R = Vt.T @ S @ U.T
    return R, cd - R @ cs


def hinge_point(p, q, rp, rq, ref, angle_deg):
    """Point at distances ``rp, rq`` from ``p, q`` whose half-plane about ``p->q``
    makes ``angle_deg`` with the half-plane through ``ref``."""
    p, q, ref = (np.asarray(v, float) for v in (p, q, ref))
    L = np.linalg.norm(q - p)
    if L <= 0:
        raise InfeasibleLengths("hinge axis has zero length")
    a = (rp ** 2 - rq ** 2 + L ** 2) / (2 * L)
    r2 = rp ** 2 - a ** 2
    if r2 <= 0:
        raise InfeasibleLengths(f"triangle with sides {L:.6g}, {rp:.6g}, {rq:.6g} is not realisable")
    e = (q - p) / L
    u = ref - p - np.dot(ref - p, e) * e
    nu = np.linalg.norm(u)
    if nu <= 0:
        raise InfeasibleLengths("reference point lies on the hinge axis")
    u /= nu
    v = np.cross(e, u)
    t = np.radians(angle_deg)
    return p + a * e + np.sqrt(r2) * (np.cos(t) * u + np.sin(t) * v)


def _closing(cycle):
    if len(cycle) == 4:
        a, b, c, d = cycle
        return [(a, b, c), (a, c, d)]
    if len(cycle) == 6:
        a, b, c, d, e, f = cycle
        return [(a, b, c), (d, e, f), (a, c, d, f)]
    raise AssemblyError(f"open boundaries must be quadrilaterals or hexagons, got {cycle}")


def _diagonals(cycle):
    if len(cycle) == 4:
        return [(cycle[0], cycle[2])]
    return [(cycle[0], cycle[2]), (cycle[3], cycle[5])]


@dataclass
class Base:
    """Rigid framework of faces and bars with declared hinges and open boundaries."""
    labels: tuple
    vertices: np.ndarray
    rigid_faces: list
    bars: list
    hinges: list
    open_boundaries: dict
    fixed_labels: tuple
    drivers: dict = field(default_factory=dict)
    name: str = "base"

    def __post_init__(self):
        self.labels = tuple(self.labels)
        self.vertices = np.array(self.vertices, dtype=float).reshape(-1, 3)
        self._index = {lb: i for i, lb in enumerate(self.labels)}
        if len(self._index) != len(self.labels):
            raise AssemblyError("duplicate base labels")
        for a, b in list(self.bars) + [e for f in self.rigid_faces for e in zip(f, f[1:] + f[:1])]:
            if self.length(a, b) <= 0:
                raise InfeasibleLengths(f"bar {a}-{b} has zero length")
        for name, cyc in self.open_boundaries.items():
            if len(set(cyc)) != len(cyc) or len(cyc) not in (4, 6):
                raise AssemblyError(f"boundary {name!r} is not a simple quadrilateral or hexagon")
            for lb in cyc:
                self.index(lb)

    def index(self, label):
        try:
            return self._index[label]
        except KeyError:
            raise UnresolvedLabel(f"label {label!r} is not a base vertex") from None

    def point(self, label):
        return self.vertices[self.index(label)]

    def length(self, a, b):
        return float(np.linalg.norm(self.point(a) - self.point(b)))

    def with_vertices(self, x):
        return replace(self, vertices=np.array(x, float).reshape(-1, 3))

    def constraint_pairs(self):
        pairs = set()
        for f in self.rigid_faces:
            for i in range(len(f)):
                for j in range(i + 1, len(f)):
                    pairs.add(tuple(sorted((self.index(f[i]), self.index(f[j])))))
        edges = list(self.bars)
        for cyc in self.open_boundaries.values():
            edges += list(zip(cyc, cyc[1:] + cyc[:1])) + _diagonals(cyc)
            if len(cyc) == 6:
                a, _, c, d, _, f = cyc
                edges += [(a, d), (c, f)]
        for a, b in edges:
            pairs.add(tuple(sorted((self.index(a), self.index(b)))))
        return sorted(pairs)

    def constraint_system(self, q=None):
        x = self.vertices if q is None else np.reshape(q, (-1, 3))
        pairs = self.constraint_pairs()
        fixed = sorted(self.index(lb) for lb in self.fixed_labels)
        return fx.ConstraintSystem(len(x), pairs, [float(np.sum((x[i] - x[j]) ** 2)) for i, j in pairs],
                                   clamped=fixed, clamp_positions=x[fixed] if fixed else None,
                                   gauge=None if fixed else (0, 1, 2), q_ref=x.ravel())

    def dof(self):
        return fx.dof(self.constraint_system(), self.vertices.ravel())

    def closure_triangles(self):
        faces = [tuple(f) for f in self.rigid_faces]
        for cyc in self.open_boundaries.values():
            faces += _closing(cyc)
        tris = []
        for f in faces:
            ids = [self.index(lb) for lb in f]
            tris += [(ids[0], ids[k], ids[k + 1]) for k in range(1, len(ids) - 1)]
        return tris

    def closure_volume(self, vertices=None):
        """Signed volume of the base closure (rigid faces plus boundary caps)."""
        x = self.vertices if vertices is None else np.reshape(vertices, (-1, 3))
        t = np.array(self.closure_triangles())
        return float(np.einsum("ij,ij->i", x[t[:, 0]], np.cross(x[t[:, 1]], x[t[:, 2]])).sum() / 6.0)

    def validate(self):
        rep = self.dof()
        if rep.flex_dof != len(self.hinges):
            raise AssemblyError(f"base {self.name!r} has flex_dof {rep.flex_dof}, "
                                f"expected one per hinge ({len(self.hinges)})")
        if self.closure_volume() <= 0:
            raise AssemblyError("open boundaries are not stored in outward orientation")
        return rep


# -- assemblies -----------------------------------------------------------------------
@dataclass
class AssemblySpec:
    """A base together with the current glued geometry.

    ``points`` maps every label to its position, ``faces`` lists the label
    cycles of the surface so far and ``open`` the boundaries still waiting
    for a crinkle.
    """
    base: Base
    attachments: list = field(default_factory=list)
    removals: list = field(default_factory=list)
    tunnels: list = field(default_factory=list)
    points: dict = field(default_factory=dict)
    faces: list = field(default_factory=list)
    open: dict = field(default_factory=dict)
    fixed_labels: tuple = ()
    drivers: dict = field(default_factory=dict)

    @classmethod
    def start(cls, base):
        return cls(base=base, points={lb: base.point(lb).copy() for lb in base.labels},
                   faces=[tuple(f) for f in base.rigid_faces], open=dict(base.open_boundaries),
                   fixed_labels=tuple(base.fixed_labels), drivers=dict(base.drivers))

    def labels(self):
        used = {lb for f in self.faces for lb in f}
        return [lb for lb in self.points if lb in used]

    def mesh(self, allow_boundary=None):
        """Assemble the faces so far into a consistently oriented (Open)Mesh."""
        labels = self.labels()
        idx = {lb: i for i, lb in enumerate(labels)}
        x = np.array([self.points[lb] for lb in labels])
        faces = mc.orient_consistently([tuple(idx[v] for v in f) for f in self.faces])
        closed = not self.open if allow_boundary is None else not allow_boundary
        m = mc.build_mesh(x, faces, allow_boundary=not closed, labels=labels)
        if closed and mc.enclosed_volume(m) < 0:
            m = m.reversed()
        return m

    def driver(self, m, name=None):
        name = name or next(iter(self.drivers))
        return fx.Driver(*(m.index(lb) for lb in self.drivers[name]))


def _check_lengths(pts, cpts, pairs):
    worst, edge = 0.0, None
    for (i, j), e in pairs:
        a = np.linalg.norm(pts[i] - pts[j])
        b = np.linalg.norm(cpts[i] - cpts[j])
        r = abs(a - b) / max(a, b)
        if r > worst:
            worst, edge = r, e
    return worst, edge


def _merge(spec, boundary, comp, labels, x, mapping, prefix, names, o):
    """Glue a placed component: boundary labels map onto base labels, the rest are new."""
    names = dict(names or {})
    ren = dict(mapping)
    for lb in labels:
        if lb not in ren:
            ren[lb] = names.get(lb, f"{prefix}{lb}")
            if ren[lb] in spec.points:
                raise AssemblyError(f"label {ren[lb]!r} already exists in the assembly")
    points = dict(spec.points)
    for lb, p in zip(labels, x):
        if lb not in mapping:
            points[ren[lb]] = p
    faces = list(spec.faces) + [tuple(ren[labels[v]] for v in f) for f in comp.surface.faces]
    opened = {k: v for k, v in spec.open.items() if k != boundary}
    return replace(spec, points=points, faces=faces, open=opened,
                   attachments=list(spec.attachments) + [(boundary, comp, o)])


def _polish_interior(x, surface, fixed, tol=1e-14):
    pairs = sorted(set(mc.intra_face_pairs(surface)))
    L = [float(np.linalg.norm(surface.vertices[i] - surface.vertices[j])) for i, j in pairs]
    y, res = gen.solve_distances(x, pairs, L, fixed=fixed, tol=tol)
    return y, res


def _prefer_embedded(spec, candidates):
    """First candidate whose glued (possibly open) surface is free of self-intersection."""
    if len(candidates) == 1:
        return candidates[0]
    for cand in candidates:
        try:
            if va.is_embedded(cand.mesh(allow_boundary=True)):
                return cand
        except AssemblyError:
            continue
    return candidates[0]


def attach_crinkle(spec, boundary, c, o=None, names=None, prefix=None, corner=None):
    """Glue crinkle ``c`` onto the open quadrilateral ``boundary``.

    The crinkle is flexed until its ``A C`` hinge angle matches the base
    quadrilateral, rigidly aligned, and its interior vertices renamed (via
    ``names`` or ``prefix``).  ``o`` selects the pop branch (``"pop_in"`` /
    ``"pop_out"``); the mirror image of ``c`` is used when needed.  When
    several label correspondences fit, ``corner`` names the base vertex that
    receives ``A``; otherwise a placement without self-intersection is
    preferred.
    """
    if boundary not in spec.open:
        raise UnresolvedLabel(f"no open boundary named {boundary!r}")
    cyc = spec.open[boundary]
    if len(cyc) != 4:
        raise AlignmentFailure(f"boundary {boundary!r} is not a quadrilateral")
    if o is not None:
        gen._check_orientation(o)
    P = np.array([spec.points[lb] for lb in cyc])
    maps = [(0, 1, 2, 3), (0, 3, 2, 1), (2, 3, 0, 1), (2, 1, 0, 3)]
    if corner is not None:
        if corner not in (cyc[0], cyc[2]):
            raise UnresolvedLabel(f"corner {corner!r} is not on the diagonal of {boundary!r}")
        maps = [mp for mp in maps if cyc[mp[0]] == corner]
    pairs = [((0, 1), "AB"), ((1, 2), "BC"), ((2, 3), "CD"), ((3, 0), "DA"), ((0, 2), "AC")]
    cb = c.surface.vertices[list(c.boundary_idx)]
    good, worst = [], None
    for mp in maps:
        r, e = _check_lengths(P[list(mp)], cb, pairs)
        if r <= MATCH_RTOL:
            good.append(mp)
        elif worst is None or r < worst[0]:
            worst = (r, e)
    if not good:
        raise LengthMismatch(f"crinkle does not fit boundary {boundary!r}: edge {worst[1]} "
                             f"differs by {worst[0]:.2e} relative", edge=worst[1])
    scale = max(np.ptp(P, axis=0).max(), 1e-12)
    mirror = gen.set_pop_orientation(c, gen.POP_OUT if c.orientation == gen.POP_IN else gen.POP_IN)
    pre = prefix if prefix is not None else f"{boundary}."
    tried, found = [], []
    for mp in good:
        Q = P[list(mp)]
        target = mc.quad_dihedral(Q, 0, 2, 1, 3)
        for cand in (c, mirror):
            closed = cand.closed()
            a, b, cc, d = cand.boundary_idx
            cs = fx.build_constraints(closed)
            try:
                q = fx.flex_to(cs, closed, closed.vertices.ravel(), fx.Driver(a, cc, b, d), target)
            except SolverError as exc:
                tried.append(f"flex: {exc}")
                continue
            x = q.reshape(-1, 3)
            R, t = rigid_align(x[[a, b, cc, d]], Q)
            y = x @ R.T + t
            res = np.abs(y[[a, b, cc, d]] - Q).max()
            if res > 1e-6 * scale:
                tried.append(f"alignment residual {res:.2e}")
                continue
            y[[a, b, cc, d]] = Q
            y, lres = _polish_interior(y, cand.surface, [a, b, cc, d])
            if lres > 1e-10:
                tried.append(f"length residual {lres:.2e}")
                continue
            probe = cand.idx(cand.probe)
            z = np.vstack([P, y[probe]])
            got = gen.POP_IN if gen.pop_side(z, (0, 1, 2, 3), 4) < 0 else gen.POP_OUT
            if o is not None and got != o:
                tried.append(f"pop branch {got}")
                continue
            mapping = {cand.surface.labels[i]: cyc[k] for i, k in zip((a, b, cc, d), mp)}
            found.append(_merge(spec, boundary, cand, cand.surface.labels, y, mapping, pre, names, got))
    if not found:
        raise AlignmentFailure(f"crinkle cannot be aligned onto {boundary!r} ({'; '.join(tried)})")
    return _prefer_embedded(spec, found)


def attach_collar_crinkle(spec, boundary, cc, names=None, prefix=None):
    """Glue collar crinkle ``cc`` onto the open hexagon ``boundary``.

    ``A, C, D, F`` of the collar land on hexagon vertices 0, 2, 3, 5 (or
    the rotation by three); that base quadrilateral must be planar.
    """
    if boundary not in spec.open:
        raise UnresolvedLabel(f"no open boundary named {boundary!r}")
    cyc = spec.open[boundary]
    if len(cyc) != 6:
        raise AlignmentFailure(f"boundary {boundary!r} is not a hexagon")
    P = np.array([spec.points[lb] for lb in cyc])
    scale = max(np.ptp(P, axis=0).max(), 1e-12)
    dev = mc.planarity_deviation(P[[0, 2, 3, 5]])
    if dev > 1e-9 * scale:
        raise PlanarityMismatch(f"base quadrilateral {cyc[0]}-{cyc[2]}-{cyc[3]}-{cyc[5]} "
                                f"deviates from a plane by {dev:.2e}")
    names6 = ("AB", "BC", "CD", "DE", "EF", "FA")
    pairs = [((k, (k + 1) % 6), names6[k]) for k in range(6)] + [((0, 2), "AC"), ((3, 5), "DF")]
    cb = cc.surface.vertices[list(cc.boundary_idx)]
    maps = [tuple(range(6)), (3, 4, 5, 0, 1, 2)]
    good, worst = [], None
    for mp in maps:
        r, e = _check_lengths(P[list(mp)], cb, pairs)
        if r <= MATCH_RTOL:
            good.append(mp)
        elif worst is None or r < worst[0]:
            worst = (r, e)
    if not good:
        raise LengthMismatch(f"collar crinkle does not fit boundary {boundary!r}: edge {worst[1]} "
                             f"differs by {worst[0]:.2e} relative", edge=worst[1])
    tried = []
    bidx = list(cc.boundary_idx)
    for mp in good:
        Q = P[list(mp)]
        target = mc.quad_dihedral(Q, 0, 2, 1, 3)
        closed = cc.closed()
        a, b, c, d = bidx[:4]
        cs = fx.build_constraints(closed)
        try:
            q = fx.flex_to(cs, closed, closed.vertices.ravel(), fx.Driver(a, c, b, d), target)
        except SolverError as exc:
            tried.append(f"flex: {exc}")
            continue
        x = q.reshape(-1, 3)
        R, t = rigid_align(x[bidx], Q)
        y = x @ R.T + t
        res = np.abs(y[bidx] - Q).max()
        if res > 1e-6 * scale:
            tried.append(f"alignment residual {res:.2e}")
            continue
        y[bidx] = Q
        y, lres = _polish_interior(y, cc.surface, bidx)
        if lres > 1e-10:
            tried.append(f"length residual {lres:.2e}")
            continue
        mapping = {cc.surface.labels[i]: cyc[k] for i, k in zip(bidx, mp)}
        pre = prefix if prefix is not None else f"{boundary}."
        return _merge(spec, boundary, cc, cc.surface.labels, y, mapping, pre, names, None)
    raise AlignmentFailure(f"collar crinkle cannot be aligned onto {boundary!r} ({'; '.join(tried)})")


# -- Steffen ---------------------------------------------------------------------------
STEFFEN_DEFAULTS = {
    "l12": 12.0, "l14": 12.0, "l23": 12.0, "l34": 12.0, "l24": 11.0, "l13": 17.0,
    "l25": 10.0, "l45": 10.0, "hinge": 232.8419425461252,
    "crinkle": {"w": 11.0, "z": 5.0, "short": 10.0, "long": 12.0},
    "orientations": ["pop_out", "pop_in"], "seed": 0,
}


def _params(defaults, params):
    p = json.loads(json.dumps(defaults))
    for k, v in (params or {}).items():
        if k not in p:
            raise KeyError(f"unknown parameter {k!r}")
        if isinstance(p[k], dict) and isinstance(v, dict):
            p[k].update(v)
        else:
            p[k] = v
    return p


def make_steffen_base(params=None):
    """Fixed tetrahedral chamber ``1-2-3-4`` plus a triangle ``2-4-5`` hinged on ``2-4``.

    ``hinge`` is the angle (degrees, about ``2->4``) of the half-plane of 5
    measured from the half-plane of 3.
    """
    p = _params(STEFFEN_DEFAULTS, params)
    for k in ("l12", "l14", "l23", "l34", "l24", "l13", "l25", "l45"):
        if not p[k] > 0:
            raise InfeasibleLengths(f"{k} must be positive, got {p[k]}")
    x2 = np.zeros(3)
    x4 = np.array([p["l24"], 0.0, 0.0])
    x3 = hinge_point(x2, x4, p["l23"], p["l34"], np.array([0.0, 1.0, 0.0]), 0.0)
    # angle between the half-planes of 3 and 1 from |13|
    L = p["l24"]
    a3 = (p["l23"] ** 2 - p["l34"] ** 2 + L ** 2) / (2 * L)
    a1 = (p["l12"] ** 2 - p["l14"] ** 2 + L ** 2) / (2 * L)
    r3 = np.sqrt(max(p["l23"] ** 2 - a3 ** 2, 0.0))
    r1 = np.sqrt(max(p["l12"] ** 2 - a1 ** 2, 0.0))
    if r1 <= 0 or r3 <= 0:
        raise InfeasibleLengths("tetrahedron faces are degenerate")
    cphi = ((a1 - a3) ** 2 + r1 ** 2 + r3 ** 2 - p["l13"] ** 2) / (2 * r1 * r3)
    if not -1 < cphi < 1:
        raise InfeasibleLengths(f"|1-3| = {p['l13']} is not realisable with the other tetrahedron edges")
    x1 = hinge_point(x2, x4, p["l12"], p["l14"], x3, np.degrees(np.arccos(cphi)))
    x5 = hinge_point(x2, x4, p["l25"], p["l45"], x3, p["hinge"])
    base = Base(labels=("1", "2", "3", "4", "5"), vertices=[x1, x2, x3, x4, x5],
                rigid_faces=[("3", "2", "1"), ("4", "3", "1")],
                bars=[("2", "5"), ("4", "5")], hinges=[("2", "4")],
                open_boundaries={"a": ("4", "5", "2", "3"), "b": ("2", "5", "4", "1")},
                fixed_labels=("1", "2", "3", "4"), drivers={"hinge": ("2", "4", "3", "5")},
                name="steffen")
    if base.closure_volume() <= 0:
        raise InfeasibleLengths("hinge angle puts triangle 2-4-5 inside the fixed chamber")
    return base


def steffen_assembly(params=None):
    p = _params(STEFFEN_DEFAULTS, params)
    base = make_steffen_base({k: v for k, v in p.items() if k not in ("crinkle", "orientations", "seed")})
    base.validate()
    cr = gen.bricard_crinkle("I", gen.steffen_crinkle_lengths(**p["crinkle"]), seed=p["seed"])
    spec = AssemblySpec.start(base)
    spec = attach_crinkle(spec, "a", cr, p["orientations"][0], names={"E": "6", "F": "7"})
    spec = attach_crinkle(spec, "b", cr, p["orientations"][1], names={"E": "8", "F": "9"})
    return spec


def build_steffen(params=None):
    """Nine-vertex, fourteen-triangle flexible polyhedron on the Steffen base."""
    return steffen_assembly(params).mesh()


# -- flappy bird -----------------------------------------------------------------------
BIRD_DEFAULTS = {
    "width": 11.0, "depth": 13.3483, "apex_height": 9.796, "wing": 11.7601,
    "beta_a": 34.4031, "beta_b": 34.4031, "collar_chord": 1.2909, "side_chord": 1.7839,
    "orientations": ["pop_in", "pop_in"], "seed": 0,
}
BIRD_FIXED = ("2", "3", "5", "6", "7")


def make_flappy_bird_base(params=None):
    """Fixed right rectangular pyramid ``2-3-5-6-7`` with wing triangles on ``3-5`` and ``2-6``.

    The rectangle ``3-5-6-2`` (``width`` along x, ``depth`` along y) lies in
    ``z = 0`` under the apex 7.  Wing tips 4 and 1 sit at distance ``wing``
    from both hinge ends, ``beta_a`` / ``beta_b`` degrees below the rectangle.
    """
    p = _params(BIRD_DEFAULTS, params)
    d, h, H, w = p["width"], p["depth"], p["apex_height"], p["wing"]
    if not (d > 0 and h > 0):
        raise InfeasibleLengths("pyramid base must have positive width and depth")
    if not H > 0:
        raise InfeasibleLengths(f"apex height must be positive, got {H}")
    if not w > d / 2:
        raise InfeasibleLengths(f"wing length {w} must exceed half the width {d / 2}")
    x = {"3": [-d / 2, -h / 2, 0.0], "5": [d / 2, -h / 2, 0.0], "6": [d / 2, h / 2, 0.0],
         "2": [-d / 2, h / 2, 0.0], "7": [0.0, 0.0, H]}
    x = {k: np.array(v) for k, v in x.items()}
    x["4"] = hinge_point(x["3"], x["5"], w, w, x["2"], 180.0 + p["beta_a"])
    x["1"] = hinge_point(x["2"], x["6"], w, w, x["3"], 180.0 - p["beta_b"])
    labels = ("1", "2", "3", "4", "5", "6", "7")
    return Base(labels=labels, vertices=[x[k] for k in labels],
                rigid_faces=[("7", "2", "3"), ("7", "5", "6")],
                bars=[("3", "4"), ("4", "5"), ("2", "1"), ("1", "6")],
                hinges=[("3", "5"), ("2", "6")],
                open_boundaries={"side_a": ("5", "7", "3", "4"), "side_b": ("6", "1", "2", "7"),
                                 "hex": ("2", "1", "6", "5", "4", "3")},
                fixed_labels=BIRD_FIXED,
                drivers={"hinge_26": ("6", "2", "3", "1"), "hinge_35": ("3", "5", "2", "4")},
                name="flappy_bird")


def bird_components(p):
    """Collar crinkle and side crinkle matching the bird parameters ``p``."""
    d, h, H, w = p["width"], p["depth"], p["apex_height"], p["wing"]
    rho = np.sqrt(w ** 2 - (d / 2) ** 2)
    cc = gen.collar_crinkle(w, d, p["collar_chord"], h, center=-rho * np.sin(np.radians(p["beta_a"])))
    s = float(np.sqrt(d ** 2 / 4 + h ** 2 / 4 + H ** 2))
    side = gen.bricard_crinkle("I", {"AB": w, "BC": w, "CD": s, "DA": s, "AC": d,
                                     "EC": p["side_chord"]}, seed=p["seed"])
    return cc, side


def flappy_bird_assembly(params=None, prefix=""):
    p = _params(BIRD_DEFAULTS, params)
    base = make_flappy_bird_base({k: v for k, v in p.items() if k not in ("orientations", "seed")})
    base.validate()
    cc, side = bird_components(p)
    spec = AssemblySpec.start(base)
    spec = attach_collar_crinkle(spec, "hex", cc, names={"G": "G", "H": "H", "I": "I", "J": "J"})
    spec = attach_crinkle(spec, "side_a", side, p["orientations"][0], names={"E": "E1", "F": "F1"})
    spec = attach_crinkle(spec, "side_b", side, p["orientations"][1], names={"E": "E2", "F": "F2"})
    return spec


def build_flappy_bird(params=None):
    """Fifteen-vertex flexible polyhedron with three rectangular faces."""
    return flappy_bird_assembly(params).mesh()


# -- composites: torus and bipedal crawler --------------------------------------------------
def _relabelled(sa, prefix, transform=None):
    """Points and faces of ``sa`` with prefixed labels, optionally mapped through ``transform``."""
    pts = {prefix + lb: (p if transform is None else transform(p)) for lb, p in sa.points.items()}
    faces = [tuple(prefix + lb for lb in f) for f in sa.faces]
    return pts, faces


def _remove(faces, triples):
    keys = {frozenset(t) for t in triples}
    kept = [f for f in faces if frozenset(f) not in keys]
    if len(faces) - len(kept) != len(keys):
        raise AssemblyError(f"faces to remove not found: {triples}")
    return kept


def _composite(base, points, faces, fixed, drivers, removals, tunnels, parts):
    return AssemblySpec(base=base, attachments=[a for p in parts for a in p.attachments],
                        removals=removals, tunnels=tunnels, points=points, faces=faces, open={},
                        fixed_labels=tuple(fixed), drivers=drivers)


def _inside_triangle(p, tri, margin):
    a, b, c = tri
    n = np.cross(b - a, c - a)
    n /= np.linalg.norm(n)
    for u, v in ((a, b), (b, c), (c, a)):
        e = np.cross(n, v - u)
        if np.dot(p - u, e / np.linalg.norm(e)) < margin:
            return False
    return True


TORUS_DEFAULTS = {"bird": dict(BIRD_DEFAULTS), "inner_scale": 0.22, "inner_lift": 2.75,
                  "taper": 0.45, "clearance": 0.2}
TORUS_DEFAULTS["bird"].pop("orientations")
TORUS_DEFAULTS["bird"].pop("seed")
TORUS_DEFAULTS["orientations"] = ["pop_in", "pop_in"]
TORUS_DEFAULTS["seed"] = 0
TUNNEL_FACES = (("7", "2", "3"), ("7", "5", "6"))


def torus_assembly(params=None):
    """Genus-one flexor: a scaled flappy bird nested inside another, joined by two fixed tunnels.

    The inner bird's pyramid triangles ``7-2-3`` and ``7-5-6`` are removed;
    each opening is joined by a prism of trapezoids to a (``taper``-shrunk)
    copy projected onto the matching outer triangle, whose remaining
    annulus is fan-triangulated.
    """
    p = _params(TORUS_DEFAULTS, params)
    bird = dict(p["bird"], orientations=p["orientations"], seed=p["seed"])
    k, lift = p["inner_scale"], p["inner_lift"]
    if not 0 < k < 1:
        raise NestingViolation(f"inner scale must lie in (0, 1), got {k}")
    if not 0 < p["taper"] <= 1:
        raise TunnelCollision(f"tunnel taper must lie in (0, 1], got {p['taper']}")
    outer = flappy_bird_assembly(bird)
    om = outer.mesh()
    inner = replace(outer)
    shift = np.array([0.0, 0.0, lift])
    ipts, ifaces = _relabelled(inner, "i", lambda x: k * x + shift)
    im = mc.Mesh(np.array([ipts["i" + lb] for lb in om.labels]), om.faces,
                 labels=["i" + lb for lb in om.labels])
    for lb, x in ipts.items():
        if va.winding_number(om, x) < 0.5:
            raise NestingViolation(f"inner vertex {lb} lies outside the outer bird")
    if not va.is_embedded(im):
        raise NestingViolation("inner bird is not embedded")
    pts = dict(outer.points)
    pts.update(ipts)
    faces = _remove(list(outer.faces), TUNNEL_FACES) + _remove(ifaces, [tuple("i" + v for v in t)
                                                                      for t in TUNNEL_FACES])
    fixed = list(BIRD_FIXED) + ["i" + lb for lb in BIRD_FIXED]
    tunnels = []
    for tri in TUNNEL_FACES:
        O = np.array([pts[lb] for lb in tri])
        I = np.array([pts["i" + lb] for lb in tri])
        n = np.cross(O[1] - O[0], O[2] - O[0])
        n /= np.linalg.norm(n)
        T = I - np.outer((I - O[0]) @ n, n)
        T = T.mean(axis=0) + p["taper"] * (T - T.mean(axis=0))
        for t in T:
            if not _inside_triangle(t, O, p["clearance"]):
                raise TunnelCollision(f"tunnel mouth leaves outer triangle {'-'.join(tri)}")
        names = [f"t{tri[1]}.{lb}" for lb in tri]
        for nm, t in zip(names, T):
            pts[nm] = t
        strip = []
        for a, b in ((0, 1), (1, 2), (2, 0)):
            strip += [(tri[a], tri[b], names[b]), (tri[a], names[b], names[a])]
            strip.append((names[a], names[b], "i" + tri[b], "i" + tri[a]))
        faces += strip
        fixed += names
        tunnels.append(strip)
    sa = _composite(outer.base, pts, faces, fixed,
                    {"outer": outer.drivers["hinge_26"],
                     "inner": tuple("i" + lb for lb in outer.drivers["hinge_26"])},
                    removals=[("outer", t) for t in TUNNEL_FACES] + [("inner", t) for t in TUNNEL_FACES],
                    tunnels=tunnels, parts=[outer])
    m = sa.mesh()
    w = va.self_intersects(m)
    if w is not None and w.kind == "crossing":
        tun = {lb for s in tunnels for f in s for lb in f if lb.startswith("t")}
        hit = any(tun & {m.labels[v] for v in m.faces[fi]} for fi in w.faces)
        raise (TunnelCollision if hit else NestingViolation)(f"torus self-intersects: {w}")
    return sa


def build_torus(params=None):
    return torus_assembly(params).mesh()


BIPEDAL_DEFAULTS = {"bird": dict(TORUS_DEFAULTS["bird"]), "spacing": 24.0,
                    "orientations": ["pop_in", "pop_in"], "seed": 0}


def bipedal_assembly(params=None):
    """Two flappy birds side by side along x joined by a fixed rectangle and two trapezoids.

    Bird ``a`` loses its triangle ``7-5-6`` and bird ``b`` (translated by
    ``spacing``) its triangle ``7-2-3``; the bridge closes the gap.
    """
    p = _params(BIPEDAL_DEFAULTS, params)
    bird = dict(p["bird"], orientations=p["orientations"], seed=p["seed"])
    if not p["spacing"] > bird["width"]:
        raise TunnelCollision(f"spacing {p['spacing']} must exceed the pyramid width {bird['width']}")
    one = flappy_bird_assembly(bird)
    shift = np.array([p["spacing"], 0.0, 0.0])
    apts, afaces = _relabelled(one, "a")
    bpts, bfaces = _relabelled(one, "b", lambda x: x + shift)
    pts = {**apts, **bpts}
    faces = _remove(afaces, [("a7", "a5", "a6")]) + _remove(bfaces, [("b7", "b2", "b3")])
    bridge = [("a5", "a6", "b2", "b3"), ("a7", "a5", "b3", "b7"), ("a7", "a6", "b2", "b7")]
    faces += bridge
    fixed = ["a" + lb for lb in BIRD_FIXED] + ["b" + lb for lb in BIRD_FIXED]
    sa = _composite(one.base, pts, faces, fixed,
                    {"a": tuple("a" + lb for lb in one.drivers["hinge_26"]),
                     "b": tuple("b" + lb for lb in one.drivers["hinge_26"])},
                    removals=[("a", ("7", "5", "6")), ("b", ("7", "2", "3"))],
                    tunnels=[bridge], parts=[one])
    m = sa.mesh()
    w = va.self_intersects(m)
    if w is not None and w.kind == "crossing":
        raise TunnelCollision(f"bipedal crawler self-intersects: {w}")
    return sa


def build_bipedal(params=None):
    return bipedal_assembly(params).mesh()


def flex_grid(sa, m, n=5, angle_step=1.0, names=None):
    """``n x n`` configurations of a two-parameter assembly with independent flexes.

    Each driver is traced with the other held, ``n`` states are sampled
    evenly over each range, and the vertex sets moved by each sample are
    combined.  Returns ``(grid, paths)`` where ``grid[i][j]`` is a ``(3V,)``
    array.
    """
    names = names or list(sa.drivers)[:2]
    cs = fx.build_constraints(m, clamp=[m.index(lb) for lb in sa.fixed_labels])
    drv = [sa.driver(m, nm) for nm in names]
    q0 = m.vertices.ravel().copy()
    paths, samples = [], []
    for k in range(2):
        path = fx.trace_flex(cs, m, q0, drv[k], fx.TraceOptions(angle_step=angle_step),
                             holds=[drv[1 - k]])
        a = path.angles
        order = np.argsort(a)
        picks = [path.states[order[int(round(t * (len(order) - 1)))]].q for t in np.linspace(0, 1, n)]
        paths.append(path)
        samples.append([np.reshape(q, (-1, 3)) - np.reshape(q0, (-1, 3)) for q in picks])
    base = np.reshape(q0, (-1, 3))
    grid = [[(base + samples[0][i] + samples[1][j]).ravel() for j in range(n)] for i in range(n)]
    return grid, paths


# -- parameter search ---------------------------------------------------------------------
SEARCH_KEYS = ("depth", "apex_height", "wing", "beta_a", "collar_chord", "side_chord")


def bird_folding_range(params=None, angle_step=2.0):
    """Folding range (degrees) at hinge 2-6 of a symmetric bird, 0.0 when infeasible.

    ``beta_b`` follows ``beta_a``.  A candidate that fails to assemble or
    starts self-intersecting scores 0.
    """
    p = dict(params or {})
    if "beta_a" in p:
        p["beta_b"] = p["beta_a"]
    try:
        sa = flappy_bird_assembly(p)
        m = sa.mesh()
        if not va.is_embedded(m):
            return 0.0
        cs = fx.build_constraints(m, clamp=[m.index(lb) for lb in sa.fixed_labels])
        path = fx.trace_flex(cs, m, m.vertices.ravel(), sa.driver(m, "hinge_26"),
                             fx.TraceOptions(angle_step=angle_step))
    except (FlexPolyError, ValueError, np.linalg.LinAlgError) as exc:
        log.debug("candidate %s rejected: %s", p, exc)
        return 0.0
    return fx.folding_range(path)


def search_bird_parameters(start=None, steps=None, budget=40, shrink=0.5, grow=1.5, min_step=1e-3,
                           angle_step=2.0, callback=None):
    """Coordinate pattern search maximising the bird's folding range.

    Each coordinate of :data:`SEARCH_KEYS` is probed at ``+step`` and
    ``-step``; improvements are accepted greedily and enlarge that step by
    ``grow``, and all steps shrink after a sweep without progress.  Returns the log of accepted candidates as a
    list of ``{"params", "range", "evaluation"}`` dicts, so ranges in the log
    increase strictly.
    """
    x = {k: float(BIRD_DEFAULTS[k]) for k in SEARCH_KEYS}
    x.update(start or {})
    st = {"depth": 0.1, "apex_height": 0.1, "wing": 0.1, "beta_a": 0.5,
          "collar_chord": 0.05, "side_chord": 0.05}
    st.update(steps or {})
    best = bird_folding_range(x, angle_step)
    n_eval = 1
    history = [{"params": dict(x), "range": best, "evaluation": n_eval}]
    if callback:
        callback(history[-1])
    while n_eval < budget and max(st.values()) > min_step:
        improved = False
        for k in SEARCH_KEYS:
            for sgn in (1.0, -1.0):
                if n_eval >= budget:
                    break
                cand = dict(x)
                cand[k] = x[k] + sgn * st[k]
                r = bird_folding_range(cand, angle_step)
                n_eval += 1
                if r > best:
                    x, best, improved = cand, r, True
                    st[k] *= grow
                    history.append({"params": dict(x), "range": r, "evaluation": n_eval})
                    if callback:
                        callback(history[-1])
                    break
        if not improved:
            st = {k: v * shrink for k, v in st.items()}
    return history


def shipped_search_log():
    """Recorded bird parameter search: ``{"start", "shipped", "log"}`` with a non-decreasing range."""
    return json.loads(resources.files("flexpoly").joinpath("data/bird_search.json").read_text())
