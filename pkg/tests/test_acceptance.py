"""End-to-end acceptance criteria; each test records one PASS/FAIL line."""
import time
from importlib import resources

import numpy as np

import conftest
from conftest import cube, octahedron, tetrahedron
from flexpoly import assembly as asm
from flexpoly import cli_io as cio
from flexpoly import flex as fx
from flexpoly import generators as gen
from flexpoly import mesh as mc
from flexpoly import validation as va
from test_flex import _fd_jacobian
from test_validation import symmetric_steffen

SUITE_BUDGET = 300.0


def verdict(number, title, ok, detail):
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    print(line)
    conftest.VERDICTS.append(line)
    assert ok, line


def isometry_drift(f):
    pairs = f.cs.pairs
    x0 = f.q0.reshape(-1, 3)
    ref = np.linalg.norm(x0[pairs[:, 0]] - x0[pairs[:, 1]], axis=1)
    worst = 0.0
    for q in f.configurations():
        x = q.reshape(-1, 3)
        L = np.linalg.norm(x[pairs[:, 0]] - x[pairs[:, 1]], axis=1)
        worst = max(worst, float(np.max(np.abs(L - ref) / ref)))
    return worst


def volume_drift(f):
    v0 = mc.enclosed_volume(f.mesh)
    vols = np.array([mc.enclosed_volume(f.mesh, q) for q in f.configurations()])
    return float(np.max(np.abs(vols - v0)) / abs(v0))


def test_criterion_01_steffen(capsys):
    scene = str(resources.files("flexpoly").joinpath("data/steffen.scene"))
    t0 = time.perf_counter()
    code_b = cio.main(["build", scene])
    code_f = cio.main(["flex", scene, "--edge", "2,4"])
    seconds = time.perf_counter() - t0
    out = capsys.readouterr().out
    line = next(ln for ln in out.splitlines() if ln.startswith("folding range"))
    deg = float(line.split()[2].rstrip("°"))
    sa = asm.steffen_assembly()
    m = sa.mesh()
    cs = cio.assembly_constraints(sa, m)
    path = fx.trace_flex(cs, m, m.vertices.ravel(), sa.driver(m), fx.TraceOptions(angle_step=0.5))
    unf = fx.unfolded_edges(path)
    ok = (code_b == 0 and code_f == 0 and "genus 0, V=9, DOF=1" in out and m.n_vertices == 9
          and mc.genus(m) == 0 and fx.dof(cs, m.vertices.ravel()).flex_dof == 1
          and len(unf) == 1 and abs(deg - 27.0) <= 2.0 and seconds < 10.0)
    verdict(1, "Steffen reconstruction", ok,
            f"V={m.n_vertices} genus={mc.genus(m)} unfolded={len(unf)} range={deg:.2f} deg "
            f"(27 +- 2) runtime={seconds:.1f}s (<10)")


def test_criterion_02_bellows(named):
    parts, ok = [], True
    for name, f in named.items():
        d = volume_drift(f)
        ok &= d < 1e-8 and f.seconds < 30.0
        parts.append(f"{name} {d:.1e} in {f.seconds:.1f}s")
    verdict(2, "bellows invariance (<1e-8, <30 s)", ok, "; ".join(parts))


def test_criterion_03_isometry(named):
    parts, ok = [], True
    for name, f in named.items():
        d = isometry_drift(f)
        ok &= d < 1e-8
        parts.append(f"{name} {d:.1e}")
    verdict(3, "isometry (<1e-8)", ok, "; ".join(parts))


def test_criterion_04_zero_volume_crinkles(crinkle_paths):
    _, side = asm.bird_components(dict(asm.BIRD_DEFAULTS))
    m = side.closed()
    cs = fx.build_constraints(m)
    drv = fx.Driver.for_edge(m, (side.idx("A"), side.idx("B")))
    side_path = fx.trace_flex(cs, m, m.vertices.ravel(), drv,
                              fx.TraceOptions(angle_step=1.0, check_intersections=False,
                                              bound=40.0, max_states=60))
    items = dict(crinkle_paths)
    items["bird_side_crinkle"] = (side, side_path)
    parts, ok = [], True
    for name, (c, path) in items.items():
        closed = c.closed()
        diam = closed.diameter()
        worst = max(abs(mc.enclosed_volume(closed, s.q)) for s in path.states) / diam ** 3
        n = len(path.states)
        ok &= worst < 1e-9 and n >= 20
        parts.append(f"{name} {worst:.1e} over {n} samples")
    verdict(4, "zero-volume crinkles (|V|/diam^3 < 1e-9, >=20 samples)", ok, "; ".join(parts))


def test_criterion_05_dof_table(named):
    expected = {"steffen": 1, "flappy_bird": 1, "torus": 2, "bipedal": 2}
    found, ok = {}, True
    for m, name in ((cube(), "cube"), (tetrahedron(), "tetrahedron"), (octahedron(), "octahedron")):
        cs = fx.build_constraints(m)
        ds = {fx.dof(cs, m.vertices.ravel(), rtol=fx.RANK_RTOL * k).flex_dof for k in (1.0, 10.0, 0.1)}
        found[name] = ds
        ok &= ds == {0}
    for name, f in named.items():
        ds = {fx.dof(f.cs, f.q0, rtol=fx.RANK_RTOL * k).flex_dof for k in (1.0, 10.0, 0.1)}
        found[name] = ds
        ok &= ds == {expected[name]}
    verdict(5, "DOF table stable under x10 / /10 cutoff", ok,
            ", ".join(f"{k}={sorted(v)}" for k, v in found.items()))


def test_criterion_06_topology(named):
    genera = {name: mc.genus(f.mesh) for name, f in named.items()}
    ok = genera == {"steffen": 0, "flappy_bird": 0, "torus": 1, "bipedal": 0}
    verdict(6, "topology", ok, str(genera))


def test_criterion_07_embeddedness(named):
    ok, parts = True, []
    for name, f in named.items():
        qs = f.configurations()
        bad = sum(not va.is_embedded(f.mesh.with_vertices(q)) for q in qs)
        ok &= bad == 0
        parts.append(f"{name} {bad}/{len(qs)} bad")
    bricard = gen.bricard_octahedron("I", gen.steffen_crinkle_lengths(), seed=0)
    sym = symmetric_steffen(232.0)
    wb, ws = va.self_intersects(bricard), va.self_intersects(sym)
    ok &= wb is not None and wb.kind == "crossing" and ws is not None and ws.kind == "crossing"
    parts.append(f"Bricard witness={wb is not None}, symmetric-10 witness={ws is not None}")
    same = True
    for m in [bricard, sym] + [f.mesh.with_vertices(f.configurations()[-1]) for f in named.values()]:
        a = sorted(w.faces for w in va.intersection_witnesses(m))
        b = sorted(w.faces for w in va.intersection_witnesses(m, brute_force=True))
        same &= a == b
    ok &= same
    parts.append(f"BVH == brute force: {same}")
    verdict(7, "embeddedness", ok, "; ".join(parts))


def test_criterion_08_bird_faces(bird):
    quads = sum(len(f) == 4 for f in bird.mesh.faces)
    unf = fx.unfolded_edges(bird.path)
    ok = quads >= 1 and not unf
    verdict(8, "non-triangulated, no unfolded edges", ok, f"quads={quads} unfolded={sorted(unf)}")


def test_criterion_09_bird_range_and_search(bird):
    rng_shipped = fx.folding_range(bird.path)
    log = asm.shipped_search_log()
    ranges = [e["range"] for e in log["log"]]
    logged_ok = len(ranges) >= 3 and all(b >= a for a, b in zip(ranges, ranges[1:]))
    hist = asm.search_bird_parameters(start=log["start"], budget=13)
    live = [h["range"] for h in hist]
    live_ok = len(live) >= 3 and all(b > a for a, b in zip(live, live[1:]))
    invariants = (isometry_drift(bird) < 1e-8 and volume_drift(bird) < 1e-8
                  and fx.dof(bird.cs, bird.q0).flex_dof == 1)
    ok = rng_shipped > 0 and invariants and logged_ok and live_ok
    verdict(9, "substitute: positive bird range and monotone search", ok,
            f"shipped range={rng_shipped:.2f} deg; live search "
            f"{' -> '.join(f'{r:.2f}' for r in live)}; shipped log {ranges[0]:.2f} -> {ranges[-1]:.2f} "
            f"over {len(ranges)} entries")


def test_criterion_10_numerical_hygiene(named):
    rng = np.random.default_rng(11)
    worst = 0.0
    for f in named.values():
        qs = f.configurations()
        for i in rng.choice(len(qs), size=10, replace=len(qs) < 10):
            J = f.cs.jacobian(qs[i])
            Jfd = _fd_jacobian(f.cs, qs[i], 1e-6 * f.mesh.diameter())
            worst = max(worst, float(np.linalg.norm(J - Jfd) / np.linalg.norm(J)))
    elapsed = time.perf_counter() - conftest.SESSION_START
    ok = worst < 1e-5 and elapsed < SUITE_BUDGET
    verdict(10, "numerical hygiene", ok,
            f"Jacobian vs FD rel err {worst:.1e} (<1e-5); suite time so far {elapsed:.0f}s (<{SUITE_BUDGET:.0f})")
