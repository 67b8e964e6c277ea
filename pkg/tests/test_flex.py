import numpy as np
import pytest

from conftest import cube, octahedron, tetrahedron
from flexpoly import assembly as asm
from flexpoly import flex as fx
from flexpoly import mesh as mc
from flexpoly import validation as va
from flexpoly.errors import NotOnManifold, RigidConfiguration, UnresolvedLabel
from test_mesh import random_rotation

EXPECTED_DOF = {"steffen": 1, "flappy_bird": 1, "torus": 2, "bipedal": 2}


def test_tetrahedron_constraint_count():
    cs = fx.build_constraints(tetrahedron())
    assert cs.n_constraints == 6
    assert cs.n_linear == 6


def test_cube_constraint_count():
    cs = fx.build_constraints(cube())
    assert cs.n_constraints == 24


def test_steffen_base_constraints():
    base = asm.make_steffen_base()
    cs = base.constraint_system()
    clamped = {base.labels[i] for i in cs.clamped}
    assert clamped == {"1", "2", "3", "4"}
    pairs = {frozenset((base.labels[i], base.labels[j])) for i, j in cs.pairs}
    assert frozenset(("2", "5")) in pairs and frozenset(("4", "5")) in pairs
    assert base.dof().flex_dof == 1


def test_unresolved_base_label():
    class Fake:
        fixed_labels = ("nope",)
        bars = ()
    m = octahedron()
    m = mc.build_mesh(m.vertices, m.faces, labels=list("abcdef"))
    with pytest.raises(UnresolvedLabel):
        fx.build_constraints(m, base=Fake())


@pytest.mark.parametrize("make", [cube, tetrahedron, octahedron])
def test_convex_rigid(make):
    m = make()
    cs = fx.build_constraints(m)
    for rtol in (fx.RANK_RTOL, fx.RANK_RTOL * 10, fx.RANK_RTOL / 10):
        assert fx.dof(cs, m.vertices.ravel(), rtol=rtol).flex_dof == 0
    with pytest.raises(RigidConfiguration):
        fx.flex_tangent(cs, m.vertices.ravel())


def test_not_on_manifold():
    m = cube()
    cs = fx.build_constraints(m)
    with pytest.raises(NotOnManifold):
        fx.dof(cs, m.vertices.ravel() * 1.01)


def test_named_dof_table(named):
    for name, f in named.items():
        for rtol in (fx.RANK_RTOL, fx.RANK_RTOL * 10, fx.RANK_RTOL / 10):
            assert fx.dof(f.cs, f.q0, rtol=rtol).flex_dof == EXPECTED_DOF[name], name


def test_steffen_gauged_dof(steffen):
    cs = fx.build_constraints(steffen.mesh)
    assert cs.n_linear == 6
    assert fx.dof(cs, steffen.q0).flex_dof == 1


@pytest.mark.parametrize("seed", range(3))
def test_dof_rigid_motion_invariance(steffen, seed):
    rng = np.random.default_rng(seed)
    R = random_rotation(rng)
    x = steffen.mesh.vertices @ R.T + rng.normal(scale=5, size=3)
    m = steffen.mesh.with_vertices(x)
    a = fx.dof(fx.build_constraints(steffen.mesh), steffen.q0).flex_dof
    b = fx.dof(fx.build_constraints(m), x.ravel()).flex_dof
    assert a == b == 1


def test_tangents(steffen, torus):
    t = fx.flex_tangent(steffen.cs, steffen.q0)
    assert t.shape[1] == 1
    N = fx.flex_tangent(torus.cs, torus.q0)
    assert N.shape[1] == 2
    assert abs(N[:, 0] @ N[:, 1]) < 1e-12
    assert np.allclose(np.linalg.norm(N, axis=0), 1.0)


def _supports(f, prefixes):
    rows = {}
    for p in prefixes:
        idx = [i for i, lb in enumerate(f.mesh.labels) if str(lb).startswith(p)]
        rows[p] = np.concatenate([[3 * i, 3 * i + 1, 3 * i + 2] for i in idx])
    return rows


def _complementary(f, a_rows, b_rows):
    """Null space splits into one direction moving only ``a_rows`` and one moving only ``b_rows``."""
    N = fx.flex_tangent(f.cs, f.q0)
    sa = np.linalg.svd(N[a_rows], compute_uv=False)
    sb = np.linalg.svd(N[b_rows], compute_uv=False)
    assert np.sum(sa > 1e-9) == 1 and np.sum(sb > 1e-9) == 1
    # the direction moving A leaves B still: combine columns to cancel the B block
    v = np.linalg.svd(N[b_rows])[2][-1]
    t = N @ v
    assert np.abs(t[b_rows]).max() < 1e-9
    assert np.abs(t[a_rows]).max() > 1e-3


def test_torus_tangent_supports(torus):
    labels = [str(lb) for lb in torus.mesh.labels]
    inner = [i for i, lb in enumerate(labels) if lb.startswith("i")]
    outer = [i for i, lb in enumerate(labels) if not lb.startswith(("i", "t"))]
    rows = lambda idx: np.concatenate([[3 * i, 3 * i + 1, 3 * i + 2] for i in idx])
    _complementary(torus, rows(outer), rows(inner))
    _complementary(torus, rows(inner), rows(outer))


def test_bipedal_tangent_supports(bipedal):
    r = _supports(bipedal, ("a", "b"))
    _complementary(bipedal, r["a"], r["b"])
    _complementary(bipedal, r["b"], r["a"])


def test_flex_step_reversible(steffen):
    cs = steffen.cs
    s0 = fx.FlexState(steffen.q0, 0.0, cs.violation(steffen.q0))
    t = fx.flex_tangent(cs, steffen.q0)[:, 0]
    s1, h = fx.flex_step(cs, s0, t, 0.05)
    assert cs.violation(s1.q) < 1e-10
    s2, _ = fx.flex_step(cs, s1, -t, h)
    assert np.abs(s2.q - steffen.q0).max() < 1e-8
    same, h0 = fx.flex_step(cs, s0, t, 0.0)
    assert h0 == 0.0 and np.array_equal(same.q, s0.q)


def test_steffen_driving_monotone(steffen):
    a = steffen.path.angles
    d = np.diff(a)
    assert np.all(d > 0) or np.all(d < 0)


def test_trace_rigid_cube():
    m = cube()
    cs = fx.build_constraints(m)
    with pytest.raises(RigidConfiguration):
        fx.trace_flex(cs, m, m.vertices.ravel(), (0, 1))


def test_folding_range_brute_force(named):
    for f in named.values():
        for p in f.paths:
            vals = [mc.quad_dihedral(s.q, *p.driving.idx) for s in p.states]
            unwrapped = np.degrees(np.unwrap(np.radians(vals)))
            assert fx.folding_range(p) == pytest.approx(unwrapped.max() - unwrapped.min(), abs=1e-9)


def test_constant_path_range(steffen):
    p = fx.FlexPath(steffen.mesh, steffen.path.driving, [steffen.path.states[0]] * 3,
                    constraints=steffen.cs)
    assert fx.folding_range(p) == 0.0


def test_unfolded_edges(steffen, bird):
    e = fx.unfolded_edges(steffen.path)
    assert len(e) == 1
    labels = {frozenset(steffen.mesh.labels[i] for i in edge) for edge in e}
    assert labels == {frozenset(("1", "3"))}
    assert fx.unfolded_edges(bird.path) == set() or len(fx.unfolded_edges(bird.path)) == 0


def test_unfolded_edges_needs_three_states(steffen):
    p = fx.FlexPath(steffen.mesh, steffen.path.driving, steffen.path.states[:1], constraints=steffen.cs)
    with pytest.raises(ValueError):
        fx.unfolded_edges(p)


def test_path_invariants(named):
    for f in named.values():
        for p in f.paths:
            assert va.check_isometry(p) < 1e-8
            assert va.check_bellows(p) < 1e-8
            assert max(s.residual for s in p.states) < 1e-8


def _fd_jacobian(cs, q, h):
    J = np.zeros((len(cs.residual(q)), len(q)))
    for k in range(len(q)):
        e = np.zeros_like(q)
        e[k] = h
        J[:, k] = (cs.residual(q + e) - cs.residual(q - e)) / (2 * h)
    return J


def test_jacobian_finite_differences(named):
    rng = np.random.default_rng(7)
    for name, f in named.items():
        qs = f.configurations()
        pick = rng.choice(len(qs), size=10, replace=len(qs) < 10)
        h = 1e-6 * f.mesh.diameter()
        for i in pick:
            q = qs[i]
            J = f.cs.jacobian(q)
            Jfd = _fd_jacobian(f.cs, q, h)
            assert np.linalg.norm(J - Jfd) <= 1e-5 * np.linalg.norm(J), name
