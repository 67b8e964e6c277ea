"""Scene files, mesh/path export and the ``flexpoly`` command line.

Scene files are plain ``key = value`` text with ``[section]`` headers::

    construction = steffen
    seed = 0

    [params]
    l13 = 17
    crinkle.w = 11

    [attach]
    a = pop_out
    b = pop_in

    [trace]
    edge = 2,4
    step = 0.5

Sections: ``params`` (construction parameters, dotted keys for nested
groups), ``attach`` (boundary -> orientation, or ``<net> <orientation>`` for
custom constructions), ``trace`` (flex options) and ``net.<name>`` (custom
crinkle nets).  Errors carry line and column numbers.
"""
from __future__ import annotations

import argparse
import base64
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import assembly as asm
from . import flex as fx
from . import generators as gen
from . import mesh as mc
from . import validation as va
from .errors import (
    FlexPolyError,
    GeometryError,
    AssemblyError,
    MeshError,
    MissingParameter,
    SceneError,
    SceneSyntaxError,
    SolverError,
    UnknownKey,
    ValueOutOfRange,
)

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3

ANGLE_KEYS = {"hinge", "beta_a", "beta_b"}
SIGNED_KEYS = {"inner_lift", "inner_shift"}
INT_KEYS = {"seed"}
TRACE_KEYS = {"edge": "edge", "step": "pos", "max_states": "int", "h_max_rel": "pos",
              "angle_resolution": "pos", "check_intersections": "bool", "bound": "pos",
              "hold": "edge"}
NET_KEYS = ("polygons", "boundary", "coords", "identify", "hints")
ORIENTATIONS = (gen.POP_IN, gen.POP_OUT)


def _constructions():
    return {
        "steffen": (asm.STEFFEN_DEFAULTS, asm.steffen_assembly),
        "flappy_bird": (asm.BIRD_DEFAULTS, asm.flappy_bird_assembly),
        "torus": (asm.TORUS_DEFAULTS, asm.torus_assembly),
        "bipedal": (asm.BIPEDAL_DEFAULTS, asm.bipedal_assembly),
    }


BOUNDARIES = {"steffen": ("a", "b"), "flappy_bird": ("side_a", "side_b")}


@dataclass
class SceneSpec:
    name: str
    params: dict = field(default_factory=dict)
    nets: dict = field(default_factory=dict)
    attachments: list = field(default_factory=list)
    trace: dict = field(default_factory=dict)
    seed: int | None = None
    base: str | None = None


# -- parsing ------------------------------------------------------------------------------
@dataclass
class _Entry:
    key: str
    value: str
    line: int
    kcol: int
    vcol: int


def _tokenize(text):
    sections = {None: []}
    order = [None]
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.lstrip()
        col = len(line) - len(stripped) + 1
        if stripped.startswith("["):
            if not stripped.endswith("]") or len(stripped) < 3:
                raise SceneSyntaxError("malformed section header", n, col)
            current = stripped[1:-1].strip()
            if current in sections:
                raise SceneSyntaxError(f"duplicate section [{current}]", n, col)
            sections[current] = []
            order.append(current)
            continue
        if "=" not in stripped:
            raise SceneSyntaxError("expected 'key = value'", n, col)
        k, v = stripped.split("=", 1)
        key = k.strip()
        if not key:
            raise SceneSyntaxError("empty key", n, col)
        vcol = col + len(k) + 1 + (len(v) - len(v.lstrip()))
        if any(e.key == key for e in sections[current]):
            raise SceneSyntaxError(f"duplicate key {key!r}", n, col)
        sections[current].append(_Entry(key, v.strip(), n, col, vcol))
    return sections, order


def _number(e, kind="pos"):
    try:
        x = int(e.value) if kind == "int" else float(e.value)
    except ValueError:
        raise SceneSyntaxError(f"{e.key}: expected a number, got {e.value!r}", e.line, e.vcol) from None
    if kind == "int":
        if x < 0:
            raise ValueOutOfRange(f"{e.key} must be non-negative, got {x}", e.line, e.vcol)
        return x
    if not math.isfinite(x):
        raise ValueOutOfRange(f"{e.key} must be finite", e.line, e.vcol)
    if kind == "pos" and not x > 0:
        raise ValueOutOfRange(f"{e.key} must be positive, got {x}", e.line, e.vcol)
    return x


def _edge(e):
    parts = [p.strip() for p in e.value.split(",")]
    if len(parts) not in (2, 4) or not all(parts):
        raise SceneSyntaxError(f"{e.key}: expected 'a,b' or 'a,b,c,d'", e.line, e.vcol)
    return tuple(parts)


def _parse_params(entries, defaults, name):
    out = {}
    for e in entries:
        head, _, sub = e.key.partition(".")
        if head not in defaults or head in ("orientations", "seed"):
            raise UnknownKey(f"unknown parameter {e.key!r} for construction {name!r}", e.line, e.kcol)
        if isinstance(defaults[head], dict):
            if sub not in defaults[head]:
                raise UnknownKey(f"unknown parameter {e.key!r}", e.line, e.kcol)
            out.setdefault(head, {})[sub] = _number(e, "pos")
        elif sub:
            raise UnknownKey(f"unknown parameter {e.key!r}", e.line, e.kcol)
        else:
            kind = "any" if head in ANGLE_KEYS | SIGNED_KEYS else ("int" if head in INT_KEYS else "pos")
            out[head] = _number(e, kind)
    return out


def _parse_net(entries, sec_line):
    net = {"polygons": None, "boundary": None, "coords": {}, "identify": {}, "hints": {}}
    for e in entries:
        head, _, sub = e.key.partition(".")
        if head not in NET_KEYS or (head in ("polygons", "boundary")) == bool(sub):
            raise UnknownKey(f"unknown net key {e.key!r}", e.line, e.kcol)
        if head == "polygons":
            polys = [tuple(p.split()) for p in e.value.split(";") if p.strip()]
            if not polys or any(len(p) < 3 for p in polys):
                raise SceneSyntaxError("polygons need at least three labels each", e.line, e.vcol)
            net["polygons"] = polys
        elif head == "boundary":
            net["boundary"] = tuple(e.value.split())
        elif head == "coords":
            try:
                xy = [float(t) for t in e.value.split(",")]
            except ValueError:
                raise SceneSyntaxError("coordinates must be 'x, y'", e.line, e.vcol) from None
            if len(xy) != 2:
                raise SceneSyntaxError("coordinates must be 'x, y'", e.line, e.vcol)
            net["coords"][sub] = xy
        elif head == "identify":
            net["identify"][sub] = e.value
        else:
            if e.value not in ORIENTATIONS:
                raise ValueOutOfRange(f"hint must be one of {ORIENTATIONS}", e.line, e.vcol)
            net["hints"][sub] = e.value
    if net["polygons"] is None:
        raise MissingParameter("net is missing 'polygons'", sec_line, 1)
    for poly in net["polygons"]:
        for lb in poly:
            if lb not in net["coords"]:
                raise MissingParameter(f"net label {lb!r} has no coordinates", sec_line, 1)
    return net


def parse_scene(text):
    """Parse and validate scene text; raises :class:`SceneError` subclasses with line/column."""
    sections, order = _tokenize(text)
    top = {e.key: e for e in sections[None]}
    for e in sections[None]:
        if e.key not in ("construction", "seed", "base"):
            raise UnknownKey(f"unknown key {e.key!r}", e.line, e.kcol)
    if "construction" not in top:
        raise MissingParameter("missing 'construction'", 1, 1)
    name = top["construction"].value
    cons = _constructions()
    if name not in cons and name != "custom":
        e = top["construction"]
        raise ValueOutOfRange(f"unknown construction {name!r}", e.line, e.vcol)
    base = None
    if name == "custom":
        if "base" not in top:
            raise MissingParameter("custom construction needs 'base'", top["construction"].line, 1)
        base = top["base"].value
        if base not in BOUNDARIES or base == "flappy_bird":
            raise ValueOutOfRange(f"custom constructions support base = steffen, got {base!r}",
                                  top["base"].line, top["base"].vcol)
    elif "base" in top:
        raise UnknownKey("'base' is only valid for custom constructions", top["base"].line,
                         top["base"].kcol)
    spec = SceneSpec(name=name, base=base)
    if "seed" in top:
        spec.seed = _number(top["seed"], "int")
    defaults = cons[base or name][0]
    sec_lines = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if s.startswith("[") and s.endswith("]"):
            sec_lines[s[1:-1].strip()] = n
    for sec in order[1:]:
        entries = sections[sec]
        if sec == "params":
            spec.params = _parse_params(entries, defaults, base or name)
        elif sec == "trace":
            for e in entries:
                if e.key not in TRACE_KEYS:
                    raise UnknownKey(f"unknown trace option {e.key!r}", e.line, e.kcol)
                kind = TRACE_KEYS[e.key]
                if kind == "edge":
                    spec.trace[e.key] = _edge(e)
                elif kind == "bool":
                    if e.value not in ("true", "false"):
                        raise ValueOutOfRange(f"{e.key} must be true or false", e.line, e.vcol)
                    spec.trace[e.key] = e.value == "true"
                else:
                    spec.trace[e.key] = _number(e, kind)
        elif sec.startswith("net."):
            spec.nets[sec[4:]] = _parse_net(entries, sec_lines.get(sec, 1))
        elif sec == "attach":
            continue
        else:
            raise UnknownKey(f"unknown section [{sec}]", sec_lines.get(sec, 1), 1)
    known = BOUNDARIES.get(base or name)
    for e in sections.get("attach", []):
        if known is None:
            raise UnknownKey(f"construction {name!r} has no configurable attachments", e.line, e.kcol)
        if e.key not in known:
            raise MissingParameter(f"undefined boundary label {e.key!r}", e.line, e.kcol)
        parts = e.value.split()
        if name == "custom":
            if len(parts) != 2:
                raise SceneSyntaxError("custom attachments read '<net> <orientation>'", e.line, e.vcol)
            net, o = parts
            if net not in spec.nets:
                raise MissingParameter(f"undefined net {net!r}", e.line, e.vcol)
        else:
            if len(parts) != 1:
                raise SceneSyntaxError("attachment value is an orientation", e.line, e.vcol)
            net, o = None, parts[0]
        if o not in ORIENTATIONS:
            raise ValueOutOfRange(f"orientation must be one of {ORIENTATIONS}", e.line, e.vcol)
        spec.attachments.append((e.key, net, o))
    if name == "custom":
        missing = [b for b in known if b not in {a[0] for a in spec.attachments}]
        if missing:
            raise MissingParameter(f"no attachment for boundary {missing[0]!r}", 1, 1)
    return spec


def load_scene(path):
    return parse_scene(Path(path).read_text(encoding="utf-8"))


def format_scene(spec):
    """Inverse of :func:`parse_scene` (up to comments and key order)."""
    out = []
    out.append(f"construction = {spec.name}")
    if spec.base:
        out.append(f"base = {spec.base}")
    if spec.seed is not None:
        out.append(f"seed = {spec.seed}")
    if spec.params:
        out.append("\n[params]")
        for k, v in spec.params.items():
            if isinstance(v, dict):
                out += [f"{k}.{s} = {x!r}" for s, x in v.items()]
            else:
                out.append(f"{k} = {v!r}")
    for name, net in spec.nets.items():
        out.append(f"\n[net.{name}]")
        out.append("polygons = " + "; ".join(" ".join(p) for p in net["polygons"]))
        if net.get("boundary"):
            out.append("boundary = " + " ".join(net["boundary"]))
        out += [f"coords.{k} = {x!r}, {y!r}" for k, (x, y) in net["coords"].items()]
        out += [f"identify.{k} = {v}" for k, v in net["identify"].items()]
        out += [f"hints.{k} = {v}" for k, v in net["hints"].items()]
    if spec.attachments:
        out.append("\n[attach]")
        out += [f"{b} = {o}" if n is None else f"{b} = {n} {o}" for b, n, o in spec.attachments]
    if spec.trace:
        out.append("\n[trace]")
        for k, v in spec.trace.items():
            if isinstance(v, tuple):
                v = ",".join(v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            out.append(f"{k} = {v}")
    return "\n".join(out) + "\n"


# -- building ----------------------------------------------------------------------------
def net_from_scene(net):
    polys = net["polygons"]
    coords = {k: np.array(v, float) for k, v in net["coords"].items()}
    return gen.Net(polys, coords, identify=dict(net["identify"]),
                   boundary=tuple(net["boundary"] or ("A", "B", "C", "D")))


def _attach_net(sa, bnd, n, hints, o, seed):
    # a net leaves both boundary diagonals free; pin them to the base quadrilateral
    x = np.array([sa.points[lb] for lb in sa.open[bnd]])
    extra = {(n.boundary[0], n.boundary[2]): float(np.linalg.norm(x[0] - x[2])),
             (n.boundary[1], n.boundary[3]): float(np.linalg.norm(x[1] - x[3]))}
    if hints:
        options = [hints]
    else:
        probe = next(lb for lb in n.labels if lb not in n.boundary)
        options = [{probe: gen.POP_IN}, {probe: gen.POP_OUT}]
    err = None
    for h in options:
        try:
            cr = gen.crinkle_from_net(n, hints=h, seed=seed, extra=extra)
            return asm.attach_crinkle(sa, bnd, cr, o, prefix=f"{bnd}.")
        except (AssemblyError, SolverError) as exc:
            err = exc
    raise err


def build_scene(spec, seed=None):
    """Realise a scene as an :class:`AssemblySpec`."""
    seed = seed if seed is not None else spec.seed
    if spec.name == "custom":
        base = asm.make_steffen_base({k: v for k, v in spec.params.items() if k != "crinkle"})
        base.validate()
        sa = asm.AssemblySpec.start(base)
        for k, (bnd, net, o) in enumerate(spec.attachments):
            n = net_from_scene(spec.nets[net])
            sa = _attach_net(sa, bnd, n, spec.nets[net]["hints"], o, seed)
        return sa
    defaults, fn = _constructions()[spec.name]
    params = dict(spec.params)
    if spec.attachments:
        known = BOUNDARIES[spec.name]
        ors = list(defaults["orientations"])
        for bnd, _, o in spec.attachments:
            ors[known.index(bnd)] = o
        params["orientations"] = ors
    if seed is not None and "seed" in defaults:
        params["seed"] = int(seed)
    return fn(params)


def scene_driver(sa, m, edge=None):
    """Driver for a ``a,b`` hinge/edge spec (base hinges first, then surface edges)."""
    if edge is None:
        return sa.driver(m)
    if len(edge) == 4:
        return fx.Driver(*(m.index(lb) for lb in edge))
    a, b = edge
    for quad in sa.drivers.values():
        if {quad[0], quad[1]} == {a, b}:
            return fx.Driver(*(m.index(lb) for lb in quad))
    return fx.Driver.for_edge(m, (m.index(a), m.index(b)))


def assembly_constraints(sa, m):
    fixed = [m.index(lb) for lb in sa.fixed_labels if lb in m.labels]
    return fx.build_constraints(m, clamp=fixed)


# -- OBJ / glTF / path files ----------------------------------------------------------------
def export_obj(m, path, vertices=None):
    x = m.vertices if vertices is None else np.reshape(vertices, (-1, 3))
    lines = ["# flexpoly mesh"]
    if m.labels is not None:
        lines.append("# labels " + " ".join(str(lb) for lb in m.labels))
    lines += [f"v {a:.17g} {b:.17g} {c:.17g}" for a, b, c in x]
    lines += ["f " + " ".join(str(i + 1) for i in f) for f in m.faces]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def import_obj(path, allow_boundary=False):
    verts, faces, labels = [], [], None
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        parts = raw.split()
        if not parts:
            continue
        if parts[:2] == ["#", "labels"]:
            labels = parts[2:]
        elif parts[0] == "v":
            verts.append([float(t) for t in parts[1:4]])
        elif parts[0] == "f":
            faces.append(tuple(int(t.split("/")[0]) - 1 for t in parts[1:]))
    return mc.build_mesh(np.array(verts), faces, allow_boundary=allow_boundary, labels=labels)


def _gltf_document(m, frames):
    tris = np.array(mc.triangle_list(m), dtype=np.uint32)
    idx_bytes = tris.astype("<u4").tobytes()
    blobs = [idx_bytes]
    views = [{"buffer": 0, "byteOffset": 0, "byteLength": len(idx_bytes), "target": 34963}]
    accessors = [{"bufferView": 0, "componentType": 5125, "count": int(tris.size), "type": "SCALAR"}]
    meshes, nodes = [], []
    offset = len(idx_bytes)
    for k, q in enumerate(frames):
        x = np.reshape(q, (-1, 3)).astype("<f4")
        b = x.tobytes()
        blobs.append(b)
        views.append({"buffer": 0, "byteOffset": offset, "byteLength": len(b), "target": 34962})
        offset += len(b)
        accessors.append({"bufferView": len(views) - 1, "componentType": 5126, "count": len(x),
                          "type": "VEC3", "min": x.min(axis=0).tolist(), "max": x.max(axis=0).tolist()})
        meshes.append({"primitives": [{"attributes": {"POSITION": len(accessors) - 1},
                                       "indices": 0, "mode": 4}]})
        nodes.append({"mesh": k, "name": f"frame_{k}"})
    data = b"".join(blobs)
    return {
        "asset": {"version": "2.0", "generator": "flexpoly"},
        "scene": 0,
        "scenes": [{"nodes": list(range(len(nodes)))}],
        "nodes": nodes,
        "meshes": meshes,
        "accessors": accessors,
        "bufferViews": views,
        "buffers": [{"byteLength": len(data),
                     "uri": "data:application/octet-stream;base64," + base64.b64encode(data).decode()}],
    }


def export_gltf(m, path, frames=None):
    """glTF 2.0 (embedded buffer); one triangulated node per frame."""
    frames = [m.vertices] if frames is None else frames
    Path(path).write_text(json.dumps(_gltf_document(m, frames)), encoding="utf-8")


def export_mesh(m, path, format="obj"):
    if format == "obj":
        export_obj(m, path)
    elif format == "gltf":
        export_gltf(m, path)
    else:
        raise ValueError(f"unknown mesh format {format!r}")


def save_path(path, filename, fixed=()):
    m = path.mesh
    doc = {
        "format": "flexpoly-path/1",
        "labels": None if m.labels is None else [str(lb) for lb in m.labels],
        "faces": [list(map(int, f)) for f in m.faces],
        "fixed": [int(i) for i in fixed],
        "driving": list(path.driving.idx),
        "termination": path.termination,
        "states": [{"t": s.t, "q": np.ravel(s.q).tolist()} for s in path.states],
    }
    Path(filename).write_text(json.dumps(doc), encoding="utf-8")


def load_path(filename, annotate=True):
    doc = json.loads(Path(filename).read_text(encoding="utf-8"))
    if doc.get("format") != "flexpoly-path/1":
        raise ValueError(f"{filename}: not a flexpoly path file")
    q0 = np.array(doc["states"][0]["q"])
    m = mc.build_mesh(q0.reshape(-1, 3), [tuple(f) for f in doc["faces"]], labels=doc["labels"])
    cs = fx.build_constraints(m, clamp=doc["fixed"])
    states = [fx.FlexState(np.array(s["q"]), s["t"], cs.violation(np.array(s["q"]))) for s in doc["states"]]
    p = fx.FlexPath(m, fx.Driver(*doc["driving"]), states, termination=doc["termination"],
                    constraints=cs)
    return fx.annotate(p) if annotate else p


# -- reports -------------------------------------------------------------------------------
def summary_line(name, value, threshold, ok):
    return f"CHECK {name} value={value} threshold={threshold} {'PASS' if ok else 'FAIL'}"


def mesh_report(m, cs=None):
    """Structured checks of a single closed mesh; returns ``(lines, ok)``."""
    cs = cs or fx.build_constraints(m)
    rep = fx.dof(cs, m.vertices.ravel())
    w = va.self_intersects(m)
    emb = w is None or w.kind != "crossing"
    g = mc.genus(m) if m.closed else None
    lines = [f"genus {g}, V={m.n_vertices}, DOF={rep.flex_dof}",
             f"faces: {mc.face_types(m)}",
             f"volume: {mc.enclosed_volume(m) if m.closed else float('nan'):.17g}"]
    if not emb:
        lines.append(f"witness: {w}")
    lines.append(summary_line("embedded", emb, True, emb))
    lines.append(summary_line("closed", m.closed, True, m.closed))
    return lines, emb and m.closed


def path_report(path):
    rep = va.report_path(path)
    s = rep.summary
    lines = [f"folding range {s['folding_range_deg']:.1f}°",
             f"unfolded edges: {_edge_names(path.mesh, s.get('unfolded_edges', []))}",
             f"states: {s['states']}"]
    iso, bel = s["isometry_drift"], s["volume_drift"]
    emb = all(c["embedded"] for c in rep.configurations)
    lines += [summary_line("isometry_drift", f"{iso:.3e}", "1e-08", iso < 1e-8),
              summary_line("volume_drift", f"{bel:.3e}", "1e-08", bel < 1e-8),
              summary_line("embedded_along_path", emb, True, emb)]
    return lines, iso < 1e-8 and bel < 1e-8 and emb


def _edge_names(m, edges):
    if m.labels is None:
        return [tuple(e) for e in edges]
    return [f"{m.labels[a]}-{m.labels[b]}" for a, b in edges]


# -- CLI -------------------------------------------------------------------------------------
def _cmd_build(args):
    spec = load_scene(args.scene)
    sa = build_scene(spec, seed=args.seed)
    m = sa.mesh()
    lines, ok = mesh_report(m, assembly_constraints(sa, m))
    print("\n".join(lines))
    if args.output:
        export_mesh(m, args.output, "gltf" if str(args.output).endswith(".gltf") else "obj")
    return EXIT_OK if ok else EXIT_INVALID


def _cmd_flex(args):
    spec = load_scene(args.scene)
    sa = build_scene(spec, seed=args.seed)
    m = sa.mesh()
    edge = tuple(args.edge.split(",")) if args.edge else spec.trace.get("edge")
    drv = scene_driver(sa, m, edge)
    cs = assembly_constraints(sa, m)
    opts = fx.TraceOptions(angle_step=args.step or spec.trace.get("step", 0.5),
                           max_states=args.steps or int(spec.trace.get("max_states", 4000)))
    if "h_max_rel" in spec.trace:
        opts.h_max_rel = spec.trace["h_max_rel"]
    if "check_intersections" in spec.trace:
        opts.check_intersections = spec.trace["check_intersections"]
    if "bound" in spec.trace:
        opts.bound = spec.trace["bound"]
    holds = None
    if "hold" in spec.trace:
        holds = [scene_driver(sa, m, spec.trace["hold"])]
    elif fx.dof(cs, m.vertices.ravel()).flex_dof > 1:
        others = [q for q in sa.drivers.values() if {q[0], q[1]} != set(drv_edge(m, drv))]
        holds = [fx.Driver(*(m.index(lb) for lb in others[0]))] if others else None
    path = fx.trace_flex(cs, m, m.vertices.ravel(), drv, opts, holds=holds)
    rep = fx.dof(cs, m.vertices.ravel())
    lines, ok = path_report(path)
    lines.insert(2, f"DOF={rep.flex_dof}")
    print("\n".join(lines))
    if args.output:
        save_path(path, args.output, fixed=cs.clamped)
    return EXIT_OK if ok else EXIT_INVALID


def drv_edge(m, drv):
    a, b = drv.edge
    return (m.labels[a], m.labels[b]) if m.labels is not None else (a, b)


def _cmd_check(args):
    p = str(args.file)
    if p.endswith(".json"):
        path = load_path(p)
        lines, ok = path_report(path)
        m = path.mesh
        rep = fx.dof(path.constraints, m.vertices.ravel())
        lines.insert(0, f"genus {mc.genus(m)}, V={m.n_vertices}, DOF={rep.flex_dof}")
    else:
        m = import_obj(p)
        lines, ok = mesh_report(m)
    print("\n".join(lines))
    return EXIT_OK if ok else EXIT_INVALID


def _cmd_export(args):
    path = load_path(args.file, annotate=False)
    if args.format == "gltf":
        export_gltf(path.mesh, args.output, frames=[s.q for s in path.states])
    else:
        export_obj(path.mesh, args.output, vertices=path.states[0].q)
    print(f"wrote {len(path.states) if args.format == 'gltf' else 1} frame(s) to {args.output}")
    return EXIT_OK


def make_parser():
    ap = argparse.ArgumentParser(prog="flexpoly", description="Flexible polyhedra construction kit")
    sub = ap.add_subparsers(dest="command", required=True)
    b = sub.add_parser("build", help="construct and validate a scene")
    b.add_argument("scene")
    b.add_argument("-o", "--output")
    b.add_argument("--seed", type=int)
    f = sub.add_parser("flex", help="trace the flex of a scene")
    f.add_argument("scene")
    f.add_argument("--edge")
    f.add_argument("--steps", type=int)
    f.add_argument("--step", type=float)
    f.add_argument("-o", "--output")
    f.add_argument("--seed", type=int)
    c = sub.add_parser("check", help="validate a mesh (.obj) or path file (.json)")
    c.add_argument("file")
    c.add_argument("--seed", type=int)
    e = sub.add_parser("export", help="export a path file")
    e.add_argument("file")
    e.add_argument("--format", choices=("gltf", "obj"), default="gltf")
    e.add_argument("-o", "--output", required=True)
    e.add_argument("--seed", type=int)
    return ap


def main(argv=None):
    args = make_parser().parse_args(argv)
    handler = {"build": _cmd_build, "flex": _cmd_flex, "check": _cmd_check, "export": _cmd_export}
    try:
        return handler[args.command](args)
    except (SceneError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (GeometryError, AssemblyError, MeshError, FlexPolyError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
