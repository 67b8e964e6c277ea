import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flexpoly import assembly as asm
from flexpoly import flex as fx
from flexpoly import generators as gen
from flexpoly import mesh as mc
from flexpoly import validation as va
from flexpoly.errors import (
    FacesNotAdjacent,
    InfeasibleLengths,
    SymmetryViolation,
)

TYPE_II = {"AB": 11.0, "BC": 11.0, "AD": 11.0, "CD": 11.0, "AC": 11.0, "AF": 1.3}


def kabsch_residual(x, y):
    """RMS-free max deviation after the best proper rigid motion taking ``x`` onto ``y``."""
    R, t = asm.rigid_align(x, y)
    return float(np.abs(x @ R.T + t - y).max())


def test_type_i_octahedron(steffen_crinkle):
    o = gen.bricard_octahedron("I", gen.steffen_crinkle_lengths(), seed=0)
    assert o.n_vertices == 6 and len(o.faces) == 8
    assert gen.symmetry_defect(o, "I") < 1e-9
    assert va.self_intersects(o) is not None
    rep = fx.dof(fx.build_constraints(o), o.vertices.ravel())
    assert rep.flex_dof >= 1


def test_type_ii_octahedron_mirror_symmetry():
    o = gen.bricard_octahedron("II", TYPE_II, seed=1)
    assert gen.symmetry_defect(o, "II") < 1e-9
    full = gen.complete_lengths("II", TYPE_II)
    for (a, b), L in full.items():
        assert np.linalg.norm(o.vertices[o.index(a)] - o.vertices[o.index(b)]) == pytest.approx(L, rel=1e-9)
    assert fx.dof(fx.build_constraints(o), o.vertices.ravel()).flex_dof >= 1


def test_symmetry_violation():
    bad = dict(gen.steffen_crinkle_lengths())
    bad["DE"] = 9.0
    with pytest.raises(SymmetryViolation):
        gen.bricard_octahedron("I", bad)


def test_degenerate_lengths_rejected():
    flat = {"AB": 1.0, "BC": 1.0, "CD": 1.0, "DA": 1.0, "AC": 2.0, "EC": 1.0}
    with pytest.raises(InfeasibleLengths):
        gen.bricard_octahedron("I", flat, seed=0)
    with pytest.raises(InfeasibleLengths):
        gen.bricard_octahedron("I", {**gen.steffen_crinkle_lengths(), "AB": -1.0})


def test_crinkle_from_octahedron(steffen_crinkle):
    c = steffen_crinkle
    s = c.surface
    assert len(s.faces) == 6 and all(len(f) == 3 for f in s.faces)
    assert {s.labels[i] for i in s.boundary[0]} == set("ABCD")
    assert c.diagonal_ac == pytest.approx(11.0, rel=1e-12)
    keys = {frozenset(s.labels[i] for i in f) for f in s.faces}
    assert frozenset("ABC") not in keys and frozenset("ACD") not in keys


def test_faces_not_adjacent():
    o = gen.bricard_octahedron("I", gen.steffen_crinkle_lengths(), seed=0)
    with pytest.raises(FacesNotAdjacent):
        gen.crinkle_from_octahedron(o, removed=(("A", "B", "C"), ("E", "D", "F")))


def test_pop_orientation_involution(steffen_crinkle):
    c = steffen_crinkle
    other = gen.POP_OUT if c.orientation == gen.POP_IN else gen.POP_IN
    m = gen.set_pop_orientation(c, other)
    assert m.orientation == other
    e = c.idx("E")
    assert gen.pop_side(c.surface.vertices, c.boundary_idx, e) == \
        -gen.pop_side(m.surface.vertices, m.boundary_idx, e)
    back = gen.set_pop_orientation(m, c.orientation)
    assert kabsch_residual(back.surface.vertices, c.surface.vertices) < 1e-10
    for k, L in c.boundary_lengths().items():
        assert m.boundary_lengths()[k] == pytest.approx(L, abs=1e-12)
    d0 = np.linalg.norm(c.surface.vertices[:, None] - c.surface.vertices[None], axis=2)
    d1 = np.linalg.norm(m.surface.vertices[:, None] - m.surface.vertices[None], axis=2)
    assert np.abs(d0 - d1).max() < 1e-12 * d0.max()


def tetra_net():
    s = np.sqrt(3) / 2
    coords = {"A": (0, 0), "B": (1, 0), "C": (0.5, s), "D1": (1.5, s), "D2": (-0.5, s), "D3": (0.5, -s)}
    polys = [("A", "B", "C"), ("B", "D1", "C"), ("C", "D2", "A"), ("A", "D3", "B")]
    return gen.Net(polys, coords, identify={"D1": "D", "D2": "D", "D3": "D"})


def test_fold_tetrahedron_net():
    m = gen.fold_net(tetra_net(), seed=3)
    assert m.closed and m.n_vertices == 4
    d = np.linalg.norm(m.vertices[:, None] - m.vertices[None], axis=2)
    off = d[~np.eye(4, dtype=bool)]
    assert np.abs(off - 1.0).max() < 1e-10


def test_fold_crinkle_net_and_mirror(steffen_crinkle):
    net = gen.unfold(steffen_crinkle.surface, boundary="ABCD")
    net.validate()
    hints = {"E": gen.POP_IN, "F": gen.POP_OUT}
    a = gen.fold_net(net, hints=hints, seed=0)
    assert [len(lp) for lp in a.boundary] == [4]
    cons = net.distance_constraints()
    for (u, v), L in cons.items():
        assert abs(np.linalg.norm(a.vertices[a.index(u)] - a.vertices[a.index(v)]) - L) < 1e-10 * L
    flipped = {k: (gen.POP_OUT if v == gen.POP_IN else gen.POP_IN) for k, v in hints.items()}
    b = gen.fold_net(net, hints=flipped, seed=0)
    order = [b.index(lb) for lb in a.labels]
    xb = b.vertices[order]
    mirrored = gen.reflect_through_plane(a.vertices, a.vertices)
    assert kabsch_residual(mirrored, xb) < 1e-8
    for (u, v), L in cons.items():
        assert abs(np.linalg.norm(b.vertices[b.index(u)] - b.vertices[b.index(v)]) - L) < 1e-10 * L


def test_net_overlap_detected():
    net = tetra_net()
    coords = dict(net.coords)
    coords["D2"] = (0.6, 0.2)
    bad = gen.Net(net.polygons, coords, identify=net.identify)
    with pytest.raises(InfeasibleLengths):
        bad.validate()


def test_crinkle_zero_volume_along_flex(crinkle_paths):
    c, path = crinkle_paths["steffen_crinkle"]
    assert len(path.states) >= 20
    d = path.mesh.diameter()
    assert np.abs(path.volumes).max() < 1e-9 * d ** 3


def test_collar_crinkle(collar):
    cc = collar
    s = cc.surface
    assert mc.face_types(s) == {3: 6, 4: 3}
    assert len(s.boundary) == 1 and len(s.boundary[0]) == 6
    x = s.vertices
    for f in s.faces:
        if len(f) == 4:
            p = x[list(f)]
            for k in range(4):
                u = p[(k + 1) % 4] - p[k]
                w = p[k - 1] - p[k]
                ang = np.arccos(np.dot(u, w) / np.linalg.norm(u) / np.linalg.norm(w))
                assert abs(ang - np.pi / 2) < 1e-8
    assert cc.pop_pattern() == {"G": gen.POP_IN, "J": gen.POP_IN, "H": gen.POP_OUT, "I": gen.POP_OUT}
    assert cc.planarity_residual() < 1e-12 * s.diameter()


def test_collar_net_identifications(collar):
    net = gen.collar_net(collar)
    cl = net.classes
    split = {lb for lb, names in cl.items() if len(names) > 1}
    assert split and split <= set("ABCDEFGHIJ")
    m = gen.fold_net(net, x0={lb: collar.surface.vertices[collar.idx(lb)] for lb in net.labels})
    assert kabsch_residual(m.vertices[[m.index(lb) for lb in collar.surface.labels]],
                           collar.surface.vertices) < 1e-8


def test_collar_flex_planarity_and_volume(crinkle_paths):
    cc, path = crinkle_paths["collar"]
    assert len(path.states) >= 20
    d = path.mesh.diameter()
    assert np.abs(path.volumes).max() < 1e-9 * d ** 3
    assert max(cc.planarity_residual(s.q) for s in path.states) < 1e-8 * d


def test_collar_height_zero():
    with pytest.raises(InfeasibleLengths):
        gen.collar_crinkle(11.0, 11.0, 1.3, 0.0)


def test_collar_infeasible_chord():
    with pytest.raises(InfeasibleLengths):
        gen.collar_crinkle(11.0, 11.0, 30.0, 5.0)


@settings(max_examples=15, deadline=None)
@given(st.floats(-4.0, 4.0), st.floats(2.0, 15.0))
def test_collar_family_zero_volume(center, height):
    x = gen.collar_geometry(11.0, 11.0, 1.3, height, center=center)
    cc = gen.collar_crinkle(11.0, 11.0, 1.3, height, center=center, check=False)
    assert cc.surface.vertices.shape == x.shape
    m = cc.closed()
    assert abs(mc.enclosed_volume(m)) < 1e-9 * m.diameter() ** 3
    assert cc.planarity_residual() < 1e-9 * m.diameter()


@settings(max_examples=10, deadline=None)
@given(st.floats(9.0, 13.0), st.floats(3.0, 7.0))
def test_type_i_family_zero_volume(w, z):
    try:
        c = gen.bricard_crinkle("I", gen.steffen_crinkle_lengths(w=w, z=z), seed=0)
    except InfeasibleLengths:
        return
    m = c.closed()
    assert abs(mc.enclosed_volume(m)) < 1e-9 * m.diameter() ** 3
    assert gen.symmetry_defect(gen.bricard_octahedron("I", gen.steffen_crinkle_lengths(w=w, z=z), seed=0),
                               "I") < 1e-9
