import numpy as np
import pytest

from flexpoly import assembly as asm
from flexpoly import flex as fx
from flexpoly import generators as gen
from flexpoly import mesh as mc
from flexpoly import validation as va
from flexpoly.errors import (
    InfeasibleLengths,
    LengthMismatch,
    NestingViolation,
    TunnelCollision,
    UnresolvedLabel,
)


def test_steffen_base():
    base = asm.make_steffen_base()
    assert base.hinges == [("2", "4")]
    assert base.open_boundaries == {"a": ("4", "5", "2", "3"), "b": ("2", "5", "4", "1")}
    assert base.validate().flex_dof == 1


def test_steffen_base_infeasible():
    with pytest.raises(InfeasibleLengths):
        asm.make_steffen_base({"l13": 0.0})
    with pytest.raises(InfeasibleLengths):
        asm.make_steffen_base({"l13": 40.0})


def test_steffen_wing_clears_chamber(steffen):
    """Triangle 2-4-5 never crosses the chamber faces over the traced motion."""
    m = steffen.mesh
    i = {lb: m.index(lb) for lb in "12345"}
    chamber = [("1", "2", "3"), ("1", "3", "4"), ("1", "2", "4"), ("2", "3", "4")]
    for s in steffen.path.states:
        x = np.reshape(s.q, (-1, 3))
        wing = x[[i["2"], i["4"], i["5"]]]
        for f in chamber:
            P = x[[i[v] for v in f]]
            shared = [(a, b) for a, u in enumerate(f) for b, v in enumerate("245") if u == v]
            hit = va.pair_test(P, wing, shared, 1e-9 * m.diameter())
            assert hit is None or hit[0] != "crossing"


def test_bird_base():
    base = asm.make_flappy_bird_base()
    assert set(base.hinges) == {("3", "5"), ("2", "6")}
    assert base.open_boundaries["hex"] == ("2", "1", "6", "5", "4", "3")
    assert base.validate().flex_dof == 2


def test_bird_base_infeasible():
    with pytest.raises(InfeasibleLengths):
        asm.make_flappy_bird_base({"apex_height": 0.0})
    with pytest.raises(InfeasibleLengths):
        asm.make_flappy_bird_base({"wing": 5.0})


def test_steffen_attachment(steffen):
    m = steffen.mesh
    assert m.closed and m.n_vertices == 9 and len(m.faces) == 14
    assert m.euler_characteristic() == 2
    ors = [o for _, _, o in steffen.sa.attachments]
    assert ors == ["pop_out", "pop_in"]


def test_attach_mismatched_diagonal():
    base = asm.make_steffen_base()
    spec = asm.AssemblySpec.start(base)
    cr = gen.bricard_crinkle("I", gen.steffen_crinkle_lengths(w=10.5), seed=0)
    with pytest.raises(LengthMismatch) as exc:
        asm.attach_crinkle(spec, "a", cr, "pop_out")
    assert exc.value.edge is not None


def test_attach_unknown_boundary():
    spec = asm.AssemblySpec.start(asm.make_steffen_base())
    cr = gen.bricard_crinkle("I", gen.steffen_crinkle_lengths(), seed=0)
    with pytest.raises(UnresolvedLabel):
        asm.attach_crinkle(spec, "zz", cr)


def test_bird_collar_stage():
    p = asm._params(asm.BIRD_DEFAULTS, None)
    base = asm.make_flappy_bird_base({k: v for k, v in p.items() if k not in ("orientations", "seed")})
    cc, _ = asm.bird_components(p)
    spec = asm.attach_collar_crinkle(asm.AssemblySpec.start(base), "hex", cc)
    assert set(spec.open) == {"side_a", "side_b"}
    # every hexagon edge is covered; only the side quadrilaterals stay open
    count = {}
    for f in spec.faces:
        for k in range(len(f)):
            e = frozenset((f[k], f[(k + 1) % len(f)]))
            count[e] = count.get(e, 0) + 1
    hexa = base.open_boundaries["hex"]
    assert all(count[frozenset((hexa[k], hexa[(k + 1) % 6]))] >= 1 for k in range(6))
    assert max(count.values()) == 2
    loose = {e for e, n in count.items() if n == 1}
    sides = {frozenset((c[k], c[(k + 1) % 4])) for c in (base.open_boundaries["side_a"],
                                                          base.open_boundaries["side_b"]) for k in range(4)}
    assert loose == sides


def test_collar_wrong_df():
    p = asm._params(asm.BIRD_DEFAULTS, None)
    base = asm.make_flappy_bird_base({k: v for k, v in p.items() if k not in ("orientations", "seed")})
    cc = gen.collar_crinkle(p["wing"], p["width"], p["collar_chord"], p["depth"] * 1.05,
                            center=asm.bird_components(p)[0].params["center"])
    with pytest.raises(LengthMismatch):
        asm.attach_collar_crinkle(asm.AssemblySpec.start(base), "hex", cc)


def test_bird(bird):
    m = bird.mesh
    assert m.closed and mc.genus(m) == 0
    assert mc.face_types(m).get(4, 0) >= 1
    ors = [o for b, _, o in bird.sa.attachments if b != "hex"]
    assert ors == ["pop_in", "pop_in"]
    assert fx.dof(bird.cs, bird.q0).flex_dof == 1


def test_gluing_preserves_base_lengths(steffen, bird):
    for f in (steffen, bird):
        base = f.sa.base
        m = f.mesh
        for i, j in base.constraint_pairs():
            a, b = base.labels[i], base.labels[j]
            if a in m.labels and b in m.labels:
                L0 = base.length(a, b)
                L1 = np.linalg.norm(m.vertices[m.index(a)] - m.vertices[m.index(b)])
                assert abs(L1 - L0) < 1e-10 * L0


def test_volume_equals_base_closure(steffen, bird):
    for f in (steffen, bird):
        base = f.sa.base
        x = np.array([f.mesh.vertices[f.mesh.index(lb)] for lb in base.labels])
        v = mc.enclosed_volume(f.mesh)
        assert v == pytest.approx(base.closure_volume(x), rel=1e-8)
        for s in f.path.states[:: max(1, len(f.path.states) // 5)]:
            y = np.reshape(s.q, (-1, 3))
            xb = np.array([y[f.mesh.index(lb)] for lb in base.labels])
            assert mc.enclosed_volume(f.mesh, s.q) == pytest.approx(base.closure_volume(xb), rel=1e-8)


def test_torus(torus):
    m = torus.mesh
    assert mc.genus(m) == 1
    assert fx.dof(torus.cs, torus.q0).flex_dof == 2


def test_torus_nesting_violation():
    with pytest.raises(NestingViolation):
        asm.torus_assembly({"inner_scale": 1.2})
    with pytest.raises(NestingViolation):
        asm.torus_assembly({"inner_lift": 30.0})


def test_torus_tunnel_collision():
    with pytest.raises(TunnelCollision):
        asm.torus_assembly({"taper": 1.0, "clearance": 5.0})


def test_bipedal(bipedal):
    m = bipedal.mesh
    assert mc.genus(m) == 0
    assert fx.dof(bipedal.cs, bipedal.q0).flex_dof == 2


def test_bipedal_collision():
    with pytest.raises(TunnelCollision):
        asm.bipedal_assembly({"spacing": 10.0})


def test_bipedal_grid_volume(bipedal):
    v0 = mc.enclosed_volume(bipedal.mesh)
    vols = [mc.enclosed_volume(bipedal.mesh, q) for row in bipedal.grid for q in row]
    assert max(abs(v - v0) for v in vols) < 1e-8 * (1 + abs(v0))


def test_grid_configurations_on_manifold(torus, bipedal):
    for f in (torus, bipedal):
        for row in f.grid:
            for q in row:
                assert f.cs.violation(q) < 1e-10


def test_unknown_parameter():
    with pytest.raises(KeyError):
        asm.steffen_assembly({"l99": 3.0})
