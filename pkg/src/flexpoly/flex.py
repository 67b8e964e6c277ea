"""Isometric-deformation constraint manifold and flex continuation.

A configuration ``q`` is the flattened ``(3V,)`` vertex array.  The flex
space of a surface is the solution set of squared-distance constraints over
every surface edge and every intra-face vertex pair (face rigidity), modulo
rigid motions which are removed either by six affine gauge constraints or by
clamping the fixed vertices of a base.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import mesh as mc
from .errors import (
    NotOnManifold,
    RigidConfiguration,
    SolverError,
    StepFailed,
    UnresolvedLabel,
)

log = logging.getLogger(__name__)

RANK_RTOL = 1e-8
CORRECTOR_TOL = 1e-12


def _pair(i, j):
    return (i, j) if i < j else (j, i)


class ConstraintSystem:
    """Squared-distance constraints plus linear gauge/clamp rows.

    Distance rows are ``|q_i - q_j|^2 - L^2``; for rank decisions each row
    is divided by ``2L`` so that all rows have unit scale.
    """

    def __init__(self, n_vertices, pairs, sq_lengths, clamped=(), clamp_positions=None,
                 gauge=None, q_ref=None):
        self.n_vertices = int(n_vertices)
        order = {}
        for (i, j), L2 in zip(pairs, sq_lengths):
            if L2 <= 0:
                raise ValueError(f"target length of pair {(i, j)} must be positive")
            order.setdefault(_pair(int(i), int(j)), float(L2))
        clamped = tuple(sorted(set(int(c) for c in clamped)))
        cset = set(clamped)
        kept = [(p, L2) for p, L2 in order.items() if not (p[0] in cset and p[1] in cset)]
        self.pairs = np.array([p for p, _ in kept], dtype=int).reshape(-1, 2)
        self.sq_lengths = np.array([L2 for _, L2 in kept], dtype=float)
        self.clamped = clamped
        self.clamp_positions = (np.zeros((0, 3)) if not clamped
                                else np.asarray(clamp_positions, dtype=float).reshape(-1, 3))
        self.gauge = tuple(gauge) if gauge is not None else None
        self._lin_rows, self._lin_rhs = self._linear_rows(q_ref)

    @property
    def n_constraints(self):
        return len(self.pairs)

    @property
    def dim(self):
        return 3 * self.n_vertices

    def _linear_rows(self, q_ref):
        rows, rhs = [], []
        n = self.dim
        for c, p in zip(self.clamped, self.clamp_positions):
            for k in range(3):
                r = np.zeros(n)
                r[3 * c + k] = 1.0
                rows.append(r)
                rhs.append(p[k])
        if self.gauge is not None:
            v0, v1, v2 = self.gauge
            x = np.reshape(q_ref, (-1, 3))
            e = x[v1] - x[v0]
            e /= np.linalg.norm(e)
            nrm = np.cross(e, x[v2] - x[v0])
            nrm /= np.linalg.norm(nrm)
            a2 = np.cross(nrm, e)
            for k in range(3):
                r = np.zeros(n)
                r[3 * v0 + k] = 1.0
                rows.append(r)
                rhs.append(x[v0, k])
            for a in (nrm, a2):
                r = np.zeros(n)
                r[3 * v1:3 * v1 + 3] = a
                rows.append(r)
                rhs.append(np.dot(a, x[v0]))
            r = np.zeros(n)
            r[3 * v2:3 * v2 + 3] = nrm
            rows.append(r)
            rhs.append(np.dot(nrm, x[v0]))
        return np.array(rows).reshape(-1, n), np.array(rhs, dtype=float)

    @property
    def n_linear(self):
        return len(self._lin_rhs)

    # -- evaluation -------------------------------------------------------
    def distance_residual(self, q):
        x = np.reshape(q, (-1, 3))
        d = x[self.pairs[:, 0]] - x[self.pairs[:, 1]]
        return np.einsum("ij,ij->i", d, d) - self.sq_lengths

    def residual(self, q):
        return np.concatenate([self.distance_residual(q), self._lin_rows @ np.ravel(q) - self._lin_rhs])

    def distance_jacobian(self, q):
        x = np.reshape(q, (-1, 3))
        m = len(self.pairs)
        J = np.zeros((m, self.dim))
        d = 2.0 * (x[self.pairs[:, 0]] - x[self.pairs[:, 1]])
        rows = np.arange(m)
        for k in range(3):
            J[rows, 3 * self.pairs[:, 0] + k] = d[:, k]
            J[rows, 3 * self.pairs[:, 1] + k] = -d[:, k]
        return J

    def jacobian(self, q):
        return np.vstack([self.distance_jacobian(q), self._lin_rows])

    def scaled_jacobian(self, q):
        Jd = self.distance_jacobian(q) / (2.0 * np.sqrt(self.sq_lengths))[:, None]
        return np.vstack([Jd, self._lin_rows])

    def violation(self, q):
        """Max relative squared-length violation and max linear-row violation."""
        rd = np.abs(self.distance_residual(q)) / self.sq_lengths
        rl = np.abs(self._lin_rows @ np.ravel(q) - self._lin_rhs)
        scale = max(1.0, float(np.sqrt(self.sq_lengths.max()))) if len(self.sq_lengths) else 1.0
        return float(max(rd.max(initial=0.0), rl.max(initial=0.0) / scale))

    def trivial_motions(self, q):
        """Orthonormal basis (3V, 6) of infinitesimal rigid motions at ``q``."""
        x = np.reshape(q, (-1, 3))
        c = x - x.mean(axis=0)
        cols = []
        for k in range(3):
            t = np.zeros_like(x)
            t[:, k] = 1.0
            cols.append(t.ravel())
        for k in range(3):
            w = np.zeros(3)
            w[k] = 1.0
            cols.append(np.cross(w, c).ravel())
        T = np.array(cols).T
        u, s, _ = np.linalg.svd(T, full_matrices=False)
        return u[:, s > 1e-12 * s.max()]

    def pinned_gauge_dofs(self, q):
        if self.n_linear == 0:
            return 0
        T = self.trivial_motions(q)
        s = np.linalg.svd(self._lin_rows @ T, compute_uv=False)
        return int(np.sum(s > 1e-9 * max(1.0, s.max())))


def build_constraints(m, base=None, clamp=None, bars=(), gauge=True, q=None):
    """Constraint system of surface ``m`` (a Mesh/OpenMesh).

    ``base`` may be any object exposing ``fixed_labels`` and ``bars`` (label
    pairs) resolved against ``m.labels``; ``clamp`` is an explicit list of
    vertex indices to pin at their current coordinates.
    """
    x = m.vertices if q is None else np.reshape(q, (-1, 3))
    pairs = set(mc.intra_face_pairs(m))
    clamped = set(clamp or ())
    bar_pairs = list(bars)
    if base is not None:
        def res(lbl):
            try:
                return m.index(lbl)
            except KeyError:
                raise UnresolvedLabel(f"base label {lbl!r} is not a vertex of the mesh") from None
        clamped |= {res(lbl) for lbl in base.fixed_labels}
        bar_pairs += [(res(a), res(b)) for a, b in base.bars]
    for i, j in bar_pairs:
        pairs.add(_pair(i, j))
    pairs = sorted(pairs)
    L2 = [float(np.sum((x[i] - x[j]) ** 2)) for i, j in pairs]
    clamped = sorted(clamped)
    g = None
    if not clamped and gauge:
        g = _choose_gauge(m, x)
    return ConstraintSystem(len(x), pairs, L2, clamped=clamped,
                            clamp_positions=x[clamped] if clamped else None,
                            gauge=g, q_ref=x.ravel())


def _choose_gauge(m, x):
    best, best_area = None, 0.0
    for f in m.faces:
        for k in range(1, len(f) - 1):
            a, b, c = f[0], f[k], f[k + 1]
            area = np.linalg.norm(np.cross(x[b] - x[a], x[c] - x[a]))
            if area > best_area:
                best, best_area = (a, b, c), area
    if best is None:
        raise SolverError("no non-degenerate face available for gauge fixing")
    return best


# -- DOF ----------------------------------------------------------------------
@dataclass
class DofReport:
    n_constraints: int
    rank: int
    flex_dof: int
    singular_values: np.ndarray
    pinned_gauge_dofs: int
    n_rows: int = 0

    def __str__(self):
        return f"DOF={self.flex_dof} (rank {self.rank} of {self.n_rows} rows)"


def dof(cs, q, rtol=RANK_RTOL, check=True):
    """Infinitesimal flex count at ``q``."""
    q = np.ravel(q)
    if check and cs.violation(q) > 1e-8:
        raise NotOnManifold(f"configuration violates constraints by {cs.violation(q):.2e}")
    J = cs.scaled_jacobian(q)
    s = np.linalg.svd(J, compute_uv=False)
    rank = int(np.sum(s > rtol * s.max()))
    pinned = cs.pinned_gauge_dofs(q)
    flex = cs.dim - rank - (6 - pinned)
    return DofReport(cs.n_constraints, rank, max(flex, 0), s, pinned, J.shape[0])


def _null_space(cs, q, extra=None, rtol=RANK_RTOL):
    J = cs.scaled_jacobian(q)
    if extra is not None and len(extra):
        J = np.vstack([J, extra])
    _, s, vt = np.linalg.svd(J)
    rank = int(np.sum(s > rtol * s.max()))
    N = vt[rank:].T
    if cs.pinned_gauge_dofs(q) < 6:
        # remove rigid motions that no linear row pins
        T = cs.trivial_motions(q)
        N = N - T @ (T.T @ N)
        u, sv, _ = np.linalg.svd(N, full_matrices=False)
        N = u[:, sv > 1e-6]
    return N


def flex_tangent(cs, q, selector=None, rtol=RANK_RTOL):
    """Orthonormal null-space basis, or a single unit tangent when ``selector`` is given.

    ``selector`` is a gradient vector (e.g. of a driving dihedral); the
    returned tangent is the unit null-space direction along which that
    coordinate increases fastest.
    """
    N = _null_space(cs, np.ravel(q), rtol=rtol)
    if N.shape[1] == 0:
        raise RigidConfiguration("constraint Jacobian has trivial null space")
    if selector is None:
        return N
    t = N @ (N.T @ selector)
    nt = np.linalg.norm(t)
    if nt < 1e-12 * max(1.0, np.linalg.norm(selector)):
        raise RigidConfiguration("driving coordinate is stationary on the flex space")
    return t / nt


# -- driving coordinates ------------------------------------------------------
class Driver:
    """Monitored coordinate: dihedral of half-plane (a,b,d) about a->b from (a,b,c)."""

    def __init__(self, a, b, c, d):
        self.idx = (int(a), int(b), int(c), int(d))

    @classmethod
    def for_edge(cls, m, edge):
        """Driver equal to the interior dihedral angle at a surface edge (up to orientation)."""
        u, v = edge
        f1, f2 = mc.oriented_edge_faces(m, (u, v))
        fa, fb = m.faces[f1], m.faces[f2]
        c = next(w for w in fa if w not in (u, v))
        d = next(w for w in fb if w not in (u, v))
        return cls(u, v, c, d)

    @property
    def edge(self):
        return self.idx[:2]

    def value(self, q):
        return mc.quad_dihedral(q, *self.idx)

    def gradient(self, q):
        """Analytic gradient (degrees per unit length) of the torsion angle."""
        x = np.reshape(q, (-1, 3))
        a, b, c, d = self.idx
        e = x[b] - x[a]
        L = np.linalg.norm(e)
        e = e / L
        u, v = x[c] - x[a], x[d] - x[a]
        sc, sd = u @ e, v @ e
        u, v = u - sc * e, v - sd * e
        uu, vv = u @ u, v @ v
        if uu < 1e-300 or vv < 1e-300:
            raise SolverError("driving half-plane is degenerate")
        gc = -np.cross(e, u) / uu
        gd = np.cross(e, v) / vv
        sc, sd = sc / L, sd / L
        ga = -(1.0 - sc) * gc - (1.0 - sd) * gd
        gb = -sc * gc - sd * gd
        g = np.zeros(np.size(q))
        for vi, gv in ((a, ga), (b, gb), (c, gc), (d, gd)):
            g[3 * vi:3 * vi + 3] += gv
        return np.degrees(g)

    def __repr__(self):
        return f"Driver{self.idx}"


# -- states and paths ---------------------------------------------------------
@dataclass
class FlexState:
    q: np.ndarray
    t: float
    residual: float


@dataclass
class TraceOptions:
    angle_step: float = 0.5
    h_max_rel: float = 0.02
    h_min_rel: float = 1e-10
    max_states: int = 4000
    angle_resolution: float = 1e-3
    bound: float | None = None
    check_intersections: bool = True
    stop_on_contact: bool = True
    corrector_tol: float = CORRECTOR_TOL
    max_newton: int = 25
    directions: tuple = (1, -1)


@dataclass
class FlexPath:
    mesh: mc.Mesh
    driving: Driver
    states: list
    volumes: np.ndarray | None = None
    dihedrals: np.ndarray | None = None
    intersects: np.ndarray | None = None
    dihedral_edges: list = field(default_factory=list)
    termination: dict = field(default_factory=dict)
    constraints: ConstraintSystem | None = None

    def __len__(self):
        return len(self.states)

    @property
    def angles(self):
        """Unwrapped driving-coordinate values along the path."""
        return np.degrees(np.unwrap(np.radians([s.t for s in self.states])))

    def configurations(self):
        return np.array([s.q for s in self.states])

    def mesh_at(self, k):
        return self.mesh.with_vertices(self.states[k].q)


def folding_range(path):
    if len(path.states) == 0:
        raise ValueError("empty path")
    a = path.angles
    return float(a.max() - a.min())


def unfolded_edges(path, tol_deg=1e-4):
    """Surface edges whose dihedral angle stays within ``tol_deg`` over the path."""
    if len(path.states) < 3:
        raise ValueError("unfolded_edges needs a path with at least 3 states")
    dih = path.dihedrals if path.dihedrals is not None else _dihedral_table(path.mesh, path.states)[1]
    edges = path.dihedral_edges or path.mesh.interior_edges()
    unwrapped = np.degrees(np.unwrap(np.radians(dih), axis=0))
    var = unwrapped.max(axis=0) - unwrapped.min(axis=0)
    return {tuple(e) for e, v in zip(edges, var) if v < tol_deg}


def _dihedral_table(m, states):
    edges = m.interior_edges()
    tab = np.array([mc.dihedral_angles(m, s.q, edges) for s in states]).reshape(len(states), len(edges))
    return edges, tab


# -- predictor-corrector ------------------------------------------------------
def _newton(cs, q, extra_fn=None, tol=CORRECTOR_TOL, max_iter=25):
    """Gauss-Newton with minimum-norm steps; returns (q, violation) or raises SolverError."""
    q = np.array(q, dtype=float).ravel()
    for _ in range(max_iter):
        r = cs.residual(q)
        J = cs.jacobian(q)
        if extra_fn is not None:
            er, eJ = extra_fn(q)
            r = np.concatenate([r, er])
            J = np.vstack([J, eJ])
        viol = cs.violation(q)
        if viol < tol and (extra_fn is None or np.max(np.abs(extra_fn(q)[0]), initial=0) < 1e-9):
            return q, viol
        dq = np.linalg.lstsq(J, -r, rcond=None)[0]
        if not np.all(np.isfinite(dq)):
            break
        q = q + dq
        if np.linalg.norm(dq) > 1e6 * (1 + np.linalg.norm(q)):
            break
    viol = cs.violation(q)
    if viol < tol:
        return q, viol
    raise SolverError(f"Newton corrector did not converge (violation {viol:.2e})")


def correct(cs, q, tol=CORRECTOR_TOL, max_iter=50):
    """Project a nearby configuration onto the constraint manifold."""
    return _newton(cs, q, tol=tol, max_iter=max_iter)[0]


def _hold_rows(holds, q0):
    if not holds:
        return None
    targets = [h.value(q0) for h in holds]

    def fn(q):
        r = np.array([((h.value(q) - t + 180.0) % 360.0 - 180.0) for h, t in zip(holds, targets)])
        J = np.array([h.gradient(q) for h in holds])
        return r, J
    return fn


def flex_step(cs, state, direction, h, holds=None, h_min=None, tol=CORRECTOR_TOL, driver=None,
              max_iter=25):
    """Predictor ``q + h*direction`` then Newton projection in the hyperplane normal to ``direction``.

    On corrector failure the step is halved down to ``h_min``; a
    :class:`StepFailed` is raised after that.  Returns the new state and the
    step length actually used.
    """
    q0 = np.ravel(state.q)
    d = np.ravel(direction)
    if h == 0:
        return FlexState(q0.copy(), state.t, state.residual), 0.0
    if h_min is None:
        h_min = 1e-10 * abs(h)
    hold_fn = _hold_rows(holds, q0)
    while abs(h) >= h_min:
        qp = q0 + h * d

        def extra(q, qp=qp):
            r = np.array([np.dot(d, q - qp)])
            J = d[None, :]
            if hold_fn is not None:
                hr, hJ = hold_fn(q)
                r = np.concatenate([r, hr])
                J = np.vstack([J, hJ])
            return r, J
        try:
            q1, viol = _newton(cs, qp, extra, tol=tol, max_iter=max_iter)
            # reject corrector jumps to another sheet of the manifold
            if np.linalg.norm(q1 - qp) < 0.5 * abs(h) + 1e-9:
                t = driver.value(q1) if driver is not None else state.t
                return FlexState(q1, t, viol), h
        except SolverError:
            pass
        h *= 0.5
    raise StepFailed("corrector failed down to the minimum step")


def _oriented_tangent(cs, q, driver, holds, prev):
    extra = None
    if holds:
        extra = np.array([hd.gradient(q) for hd in holds])
        extra = extra / np.linalg.norm(extra, axis=1, keepdims=True)
    N = _null_space(cs, q, extra=extra)
    if N.shape[1] == 0:
        raise RigidConfiguration("no flex tangent at this configuration")
    if prev is not None and N.shape[1] == 1:
        t = N[:, 0]
    else:
        g = driver.gradient(q)
        t = N @ (N.T @ g)
        if np.linalg.norm(t) < 1e-12:
            if prev is None:
                raise RigidConfiguration("driving coordinate does not move along the flex")
            t = N @ (N.T @ prev)
    t = t / np.linalg.norm(t)
    if prev is not None and np.dot(t, prev) < 0:
        t = -t
    return t


def _is_embedded(m, q):
    from .validation import self_intersects
    w = self_intersects(m.with_vertices(q))
    return w is None or w.kind != "crossing"


def _trace_one(cs, m, q0, driver, sign, opts, holds, diam):
    embedded = (lambda q: _is_embedded(m, q)) if opts.check_intersections and opts.stop_on_contact \
        else (lambda q: True)
    h_max = opts.h_max_rel * diam
    h_min = opts.h_min_rel * diam
    t0 = driver.value(q0)
    state = FlexState(np.ravel(q0).copy(), t0, cs.violation(q0))
    tau = sign * _oriented_tangent(cs, state.q, driver, holds, None)
    out = []
    unwrapped = t0
    reason = "max_states"
    while len(out) < opts.max_states:
        g = driver.gradient(state.q)
        rate = abs(np.dot(g, tau))
        h = min(h_max, opts.angle_step / rate) if rate > 1e-12 else h_max
        try:
            new, h_used = flex_step(cs, state, tau, h, holds=holds, h_min=h_min,
                                    tol=opts.corrector_tol, driver=driver, max_iter=opts.max_newton)
        except StepFailed:
            reason = "fold_limit"
            break
        try:
            new_tau = _oriented_tangent(cs, new.q, driver, holds, tau)
        except RigidConfiguration:
            reason = "singular"
            break
        dt = (new.t - state.t + 180.0) % 360.0 - 180.0
        rate_old = np.dot(driver.gradient(state.q), tau)
        rate_new = np.dot(driver.gradient(new.q), new_tau)
        if not embedded(new.q):
            new = _bisect(cs, state, tau, h_used, holds, h_min, opts, driver,
                          lambda s: embedded(s.q))
            if new is not None:
                out.append(new)
            reason = "self_contact"
            break
        if np.sign(rate_old) != np.sign(rate_new) and abs(rate_old) > 0 and abs(rate_new) > 0:
            # driving coordinate passes an extremum inside this step
            ext = _bisect(cs, state, tau, h_used, holds, h_min, opts, driver,
                          lambda s: np.sign(np.dot(driver.gradient(s.q),
                                                   _oriented_tangent(cs, s.q, driver, holds, tau)))
                          == np.sign(rate_old))
            if ext is not None:
                out.append(ext)
            reason = "fold_limit"
            break
        unwrapped += dt
        out.append(new)
        state, tau = new, new_tau
        if opts.bound is not None and abs(unwrapped - t0) >= opts.bound:
            reason = "bound"
            break
    return out, reason


def _bisect(cs, state, tau, h_hi, holds, h_min, opts, driver, ok):
    """Largest step in [0, h_hi] whose state still satisfies ``ok``, to angle resolution."""
    lo, hi = 0.0, h_hi
    best = None
    t_lo = state.t
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        try:
            s, _ = flex_step(cs, state, tau, mid, holds=holds, h_min=mid * (1 - 1e-12),
                             tol=opts.corrector_tol, driver=driver)
        except StepFailed:
            hi = mid
            continue
        if ok(s):
            lo, best, t_lo = mid, s, s.t
        else:
            hi = mid
            try:
                s_hi, _ = flex_step(cs, state, tau, hi, holds=holds, h_min=hi * (1 - 1e-12),
                                    tol=opts.corrector_tol, driver=driver)
                t_hi = s_hi.t
            except StepFailed:
                continue
            if abs(((t_hi - t_lo) + 180.0) % 360.0 - 180.0) < opts.angle_resolution:
                break
        if hi - lo < h_min:
            break
    return best


def trace_flex(cs, m, q0, driver, options=None, holds=None):
    """Continuation of the flex through ``q0`` in both directions.

    Terminates each direction at a fold limit of the driving coordinate,
    at self-contact onset, at ``options.bound`` degrees of driving travel, or
    after ``options.max_states`` steps.  Per-state diagnostics (volume,
    dihedral angles, self-intersection flag) are recorded on the path.
    """
    opts = options or TraceOptions()
    if isinstance(driver, (tuple, list)):
        driver = Driver.for_edge(m, driver) if len(driver) == 2 else Driver(*driver)
    q0 = np.ravel(q0).astype(float)
    if cs.violation(q0) > 1e-8:
        q0 = correct(cs, q0)
    rep = dof(cs, q0)
    n_hold = len(holds or ())
    if rep.flex_dof - n_hold < 1:
        raise RigidConfiguration(f"flex_dof={rep.flex_dof} at the start configuration")
    diam = max(m.diameter(), 1e-12)
    legs = {}
    for sign in opts.directions:
        legs[sign] = _trace_one(cs, m, q0, driver, sign, opts, holds, diam)
    start = FlexState(q0, driver.value(q0), cs.violation(q0))
    back = legs.get(-1, ([], "not_traced"))
    fwd = legs.get(1, ([], "not_traced"))
    states = list(reversed(back[0])) + [start] + fwd[0]
    path = FlexPath(m, driver, states, constraints=cs,
                    termination={"backward": back[1], "forward": fwd[1]})
    annotate(path, intersections=opts.check_intersections)
    return path


def annotate(path, intersections=True):
    """Fill per-state volume, dihedral and intersection diagnostics."""
    m = path.mesh
    if m.closed:
        path.volumes = np.array([mc.enclosed_volume(m, s.q) for s in path.states])
    edges, tab = _dihedral_table(m, path.states)
    path.dihedral_edges = edges
    path.dihedrals = tab
    if intersections:
        path.intersects = np.array([not _is_embedded(m, s.q) for s in path.states])
    return path


def flex_to(cs, m, q0, driver, target, holds=None, angle_step=1.0):
    """Follow the flex from ``q0`` until ``driver`` reaches ``target`` degrees, then lock it there."""
    q = np.ravel(q0).astype(float)
    diam = max(m.diameter(), 1e-12)

    def gap(q):
        return (target - driver.value(q) + 180.0) % 360.0 - 180.0

    if abs(gap(q)) < 1e-9:
        return q
    state = FlexState(q, driver.value(q), cs.violation(q))
    tau = _oriented_tangent(cs, q, driver, holds, None)
    for _ in range(20000):
        gp = gap(state.q)
        if abs(gp) < 1e-9:
            return state.q
        g = driver.gradient(state.q)
        rate = np.dot(g, tau)
        if abs(gp) <= angle_step and abs(rate) > 1e-9:
            hold_fn = _hold_rows(holds, state.q)

            def extra(q):
                r = np.array([-gap(q)])
                J = driver.gradient(q)[None, :]
                if hold_fn is not None:
                    hr, hJ = hold_fn(q)
                    r = np.concatenate([r, hr])
                    J = np.vstack([J, hJ])
                return r, J
            try:
                qn, _ = _newton(cs, state.q + tau * gp / rate, extra)
                if abs(gap(qn)) < 1e-8:
                    return qn
            except SolverError:
                pass
        direction = tau if rate * gp > 0 else -tau
        h = min(0.02 * diam, min(angle_step, abs(gp)) / max(abs(rate), 1e-12))
        new, _ = flex_step(cs, state, direction, h, holds=holds, driver=driver)
        tau = _oriented_tangent(cs, new.q, driver, holds, direction)
        state = new
    raise SolverError("flex_to did not reach the target")
