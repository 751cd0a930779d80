"""Analysis data model, JSON model-file format, validation, DoF numbering.

The model file is a single JSON document with the frozen top-level keys
``nodes``, ``materials``, ``elements``, ``constraints``, ``loads`` and
``analysis``; unknown keys are rejected.  The library is unit agnostic:
consistent units are assumed throughout.

Every node carries the DoF triple (ux, uy, rz).  The drilling rotation is an
independent field, so beam and membrane elements share all three DoFs at a
common node, which is what makes mixed membrane/beam joints work without
ad hoc coupling.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import BEAM_KIND, ELEMENT_KINDS, MEMBRANE_KINDS, NODE_COUNTS, quadrature
from .errors import ModelError, SingularJacobianError

DOF_NAMES = ("ux", "uy", "rz")
MATERIAL_KINDS = ("elastic", "j2")
ASSUMPTIONS = ("plane_stress", "plane_strain")


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class MaterialDef:
    id: int
    kind: str
    E: float
    nu: float
    assumption: str
    sigma_y: float | None = None
    b: float | None = None


@dataclass(frozen=True)
class ElementDef:
    id: int
    kind: str
    nodes: tuple
    material: int
    l: float | None = None
    t: float | None = None
    A: float | None = None
    I: float | None = None


@dataclass(frozen=True)
class Constraint:
    node: int
    dof: str
    value: float


@dataclass(frozen=True)
class NodalLoad:
    node: int
    dof: str
    value: float


@dataclass(frozen=True)
class AnalysisConfig:
    steps: int = 1
    max_iters: int = 25
    residual_tol: float = 1e-8
    displacement_tol: float = 1e-10
    form: str = "k_form"


@dataclass(frozen=True)
class Model:
    nodes: tuple
    materials: tuple
    elements: tuple
    constraints: tuple
    loads: tuple
    analysis: AnalysisConfig

    def node(self, node_id):
        return self._node_index[node_id]

    def material(self, material_id):
        return self._material_index[material_id]

    def __post_init__(self):
        object.__setattr__(self, "_node_index", {n.id: n for n in self.nodes})
        object.__setattr__(
            self, "_material_index", {m.id: m for m in self.materials})

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        return (self.nodes, self.materials, self.elements, self.constraints,
                self.loads, self.analysis) == (
                    other.nodes, other.materials, other.elements,
                    other.constraints, other.loads, other.analysis)


@dataclass(frozen=True)
class DofMap:
    """Deterministic node-major, dof-minor global numbering.

    ``index[(node_id, dof)]`` is the full index; ``free`` lists the
    unconstrained full indices in ascending order, and ``free_pos`` maps a
    full index to its contiguous position in the free set (-1 when
    constrained).  ``values`` holds the prescribed target per full index.
    """

    node_ids: tuple
    index: dict
    free: np.ndarray
    constrained: np.ndarray
    values: np.ndarray
    free_pos: np.ndarray

    @property
    def n_total(self):
        return 3 * len(self.node_ids)

    @property
    def n_free(self):
        return len(self.free)

    def gidx(self, node_id, dof):
        return self.index[(node_id, dof)]


def _require(cond, message):
    if not cond:
        raise ModelError(message)


def _check_keys(obj, allowed, context):
    unknown = set(obj) - set(allowed)
    _require(not unknown,
             f"{context}: unknown key(s) {sorted(unknown)}")


def _number(obj, key, context, optional=False):
    if key not in obj:
        if optional:
            return None
        raise ModelError(f"{context}: missing key {key!r}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelError(f"{context}: {key!r} must be a number")
    value = float(value)
    if not np.isfinite(value):
        raise ModelError(f"{context}: {key!r} must be finite")
    return value


def _integer(obj, key, context):
    if key not in obj:
        raise ModelError(f"{context}: missing key {key!r}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ModelError(f"{context}: {key!r} must be an integer")
    return value


def parse_model(text):
    """Parse and cross-check a model file; returns a validated Model.

    Syntax errors report line and column; schema errors name the offending
    entry.  Dangling node/material references, unknown element kinds and
    wrong per-kind node counts are rejected here, while solvability issues
    (Jacobians, constraint counts) are left to :func:`validate_model`.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"syntax error: {exc.msg}",
                         line=exc.lineno, column=exc.colno) from None
    _require(isinstance(doc, dict), "top level must be an object")
    _check_keys(doc, ("nodes", "materials", "elements", "constraints",
                      "loads", "analysis"), "top level")

    raw_nodes = doc.get("nodes", [])
    _require(isinstance(raw_nodes, list) and raw_nodes, "no nodes")
    nodes = []
    for k, item in enumerate(raw_nodes):
        ctx = f"nodes[{k}]"
        _require(isinstance(item, dict), f"{ctx}: must be an object")
        _check_keys(item, ("id", "x", "y"), ctx)
        nodes.append(Node(id=_integer(item, "id", ctx),
                          x=_number(item, "x", ctx),
                          y=_number(item, "y", ctx)))
    node_ids = {n.id for n in nodes}
    for n in nodes:
        _require(n.id > 0, f"node id {n.id} must be positive")

    raw_mats = doc.get("materials", [])
    _require(isinstance(raw_mats, list), "materials must be a list")
    materials = []
    for k, item in enumerate(raw_mats):
        ctx = f"materials[{k}]"
        _require(isinstance(item, dict), f"{ctx}: must be an object")
        _check_keys(item, ("id", "kind", "E", "nu", "assumption",
                           "sigma_y", "b"), ctx)
        kind = item.get("kind")
        _require(kind in MATERIAL_KINDS,
                 f"{ctx}: unknown material kind {kind!r}")
        assumption = item.get("assumption")
        _require(assumption in ASSUMPTIONS,
                 f"{ctx}: unknown assumption {assumption!r}")
        E = _number(item, "E", ctx)
        nu = _number(item, "nu", ctx)
        _require(E > 0.0, f"{ctx}: E must be positive")
        _require(-1.0 < nu < 0.5, f"{ctx}: nu must lie in (-1, 0.5)")
        sigma_y = _number(item, "sigma_y", ctx, optional=True)
        b = _number(item, "b", ctx, optional=True)
        if kind == "j2":
            _require(sigma_y is not None and sigma_y > 0.0,
                     f"{ctx}: j2 requires sigma_y > 0")
            _require(b is not None and b < 1.0,
                     f"{ctx}: j2 requires hardening ratio b < 1")
        materials.append(MaterialDef(
            id=_integer(item, "id", ctx), kind=kind, E=E, nu=nu,
            assumption=assumption, sigma_y=sigma_y, b=b))
    material_ids = {m.id for m in materials}

    raw_els = doc.get("elements", [])
    _require(isinstance(raw_els, list), "elements must be a list")
    elements = []
    for k, item in enumerate(raw_els):
        ctx = f"elements[{k}]"
        _require(isinstance(item, dict), f"{ctx}: must be an object")
        _check_keys(item, ("id", "kind", "nodes", "material",
                           "l", "t", "A", "I"), ctx)
        kind = item.get("kind")
        _require(kind in ELEMENT_KINDS,
                 f"{ctx}: unknown element kind {kind!r}")
        conn = item.get("nodes")
        _require(isinstance(conn, list) and all(
            isinstance(v, int) and not isinstance(v, bool) for v in conn),
            f"{ctx}: nodes must be a list of integers")
        expected = NODE_COUNTS[kind]
        _require(len(conn) == expected,
                 f"{ctx}: node count mismatch, {kind} takes {expected} "
                 f"nodes, got {len(conn)}")
        for nid in conn:
            _require(nid in node_ids,
                     f"{ctx}: dangling node reference {nid}")
        mat_id = _integer(item, "material", ctx)
        _require(mat_id in material_ids,
                 f"{ctx}: dangling material reference {mat_id}")
        l = _number(item, "l", ctx, optional=True)
        t = _number(item, "t", ctx, optional=True)
        A = _number(item, "A", ctx, optional=True)
        I = _number(item, "I", ctx, optional=True)
        if kind in MEMBRANE_KINDS:
            _require(l is not None and l > 0.0,
                     f"{ctx}: membrane elements require l > 0")
            _require(t is None or t > 0.0, f"{ctx}: t must be positive")
        else:
            _require(A is not None and A > 0.0,
                     f"{ctx}: beams require section area A > 0")
            _require(I is not None and I > 0.0,
                     f"{ctx}: beams require second moment I > 0")
        elements.append(ElementDef(
            id=_integer(item, "id", ctx), kind=kind, nodes=tuple(conn),
            material=mat_id, l=l, t=t, A=A, I=I))

    def _point_list(key, cls):
        raw = doc.get(key, [])
        _require(isinstance(raw, list), f"{key} must be a list")
        out = []
        for k, item in enumerate(raw):
            ctx = f"{key}[{k}]"
            _require(isinstance(item, dict), f"{ctx}: must be an object")
            _check_keys(item, ("node", "dof", "value"), ctx)
            nid = _integer(item, "node", ctx)
            _require(nid in node_ids, f"{ctx}: dangling node reference {nid}")
            dof = item.get("dof")
            _require(dof in DOF_NAMES, f"{ctx}: unknown dof {dof!r}")
            out.append(cls(node=nid, dof=dof,
                           value=_number(item, "value", ctx)))
        return tuple(out)

    constraints = _point_list("constraints", Constraint)
    loads = _point_list("loads", NodalLoad)

    raw_an = doc.get("analysis", {})
    _require(isinstance(raw_an, dict), "analysis must be an object")
    _check_keys(raw_an, ("steps", "max_iters", "residual_tol",
                         "displacement_tol", "form"), "analysis")
    analysis = AnalysisConfig()
    if "steps" in raw_an:
        steps = _integer(raw_an, "steps", "analysis")
        _require(steps >= 1, "analysis: steps must be >= 1")
        analysis = replace(analysis, steps=steps)
    if "max_iters" in raw_an:
        max_iters = _integer(raw_an, "max_iters", "analysis")
        _require(max_iters >= 1, "analysis: max_iters must be >= 1")
        analysis = replace(analysis, max_iters=max_iters)
    for key in ("residual_tol", "displacement_tol"):
        if key in raw_an:
            tol = _number(raw_an, key, "analysis")
            _require(0.0 < tol < 1.0, f"analysis: {key} must lie in (0, 1)")
            analysis = replace(analysis, **{key: tol})
    if "form" in raw_an:
        form = raw_an["form"]
        _require(form in ("k_form", "kappa_form"),
                 f"analysis: unknown form {form!r}")
        analysis = replace(analysis, form=form)

    return Model(nodes=tuple(nodes), materials=tuple(materials),
                 elements=tuple(elements), constraints=constraints,
                 loads=loads, analysis=analysis)


def serialize_model(model):
    """Serialize a Model to the JSON model format (round-trip exact)."""
    def strip(d):
        return {k: v for k, v in d.items() if v is not None}

    doc = {
        "nodes": [{"id": n.id, "x": n.x, "y": n.y} for n in model.nodes],
        "materials": [strip({
            "id": m.id, "kind": m.kind, "E": m.E, "nu": m.nu,
            "assumption": m.assumption, "sigma_y": m.sigma_y, "b": m.b,
        }) for m in model.materials],
        "elements": [strip({
            "id": e.id, "kind": e.kind, "nodes": list(e.nodes),
            "material": e.material, "l": e.l, "t": e.t, "A": e.A, "I": e.I,
        }) for e in model.elements],
        "constraints": [{"node": c.node, "dof": c.dof, "value": c.value}
                        for c in model.constraints],
        "loads": [{"node": c.node, "dof": c.dof, "value": c.value}
                  for c in model.loads],
        "analysis": {
            "steps": model.analysis.steps,
            "max_iters": model.analysis.max_iters,
            "residual_tol": model.analysis.residual_tol,
            "displacement_tol": model.analysis.displacement_tol,
            "form": model.analysis.form,
        },
    }
    return json.dumps(doc, indent=2)


def element_thickness(edef):
    """Element thickness; defaults to 1 (also assumed for plane strain)."""
    return 1.0 if edef.t is None else edef.t


def validate_model(model):
    """Solvability diagnostics; returns an empty list iff the model runs.

    Never raises: each problem is reported as one human-readable string.
    """
    diagnostics = []

    seen = set()
    for n in model.nodes:
        if n.id in seen:
            diagnostics.append(f"duplicate node id {n.id}")
        seen.add(n.id)
    seen = set()
    for m in model.materials:
        if m.id in seen:
            diagnostics.append(f"duplicate material id {m.id}")
        seen.add(m.id)
    seen = set()
    for e in model.elements:
        if e.id in seen:
            diagnostics.append(f"duplicate element id {e.id}")
        seen.add(e.id)

    for e in model.elements:
        if e.kind in MEMBRANE_KINDS:
            coords = np.array([(model.node(n).x, model.node(n).y)
                               for n in e.nodes])
            rule = quadrature(e.kind)
            from .basis import eval_basis
            try:
                for pt in rule.points:
                    eval_basis(e.kind, "geometry", pt, coords)
            except SingularJacobianError:
                diagnostics.append(
                    f"element {e.id}: non-positive Jacobian (check node "
                    "ordering is counter-clockwise)")
        else:
            n1 = model.node(e.nodes[0])
            n2 = model.node(e.nodes[1])
            if np.hypot(n2.x - n1.x, n2.y - n1.y) == 0.0:
                diagnostics.append(f"element {e.id}: zero-length beam")

        mat = model.material(e.material)
        if mat.kind == "j2" and mat.assumption != "plane_stress":
            diagnostics.append(
                f"element {e.id}: J2 material {mat.id} requires plane stress")

    n_constrained = len({(c.node, c.dof) for c in model.constraints})
    if n_constrained < 3:
        diagnostics.append(
            f"insufficient constraints: {n_constrained} constrained DoF(s) "
            "cannot remove 3 rigid-body modes")

    return diagnostics


def number_dofs(model):
    """Assign global DoF indices (node-major, dof-minor; ids ascending).

    Constrained DoFs are flagged with their prescribed values.  Nodes not
    referenced by any element get all DoFs auto-constrained to zero with a
    warning.  Duplicate constraints on one (node, dof) are rejected.
    """
    node_ids = tuple(sorted(n.id for n in model.nodes))
    index = {}
    for k, nid in enumerate(node_ids):
        for d, dof in enumerate(DOF_NAMES):
            index[(nid, dof)] = 3 * k + d
    n_total = 3 * len(node_ids)

    values = np.zeros(n_total)
    constrained_mask = np.zeros(n_total, dtype=bool)
    seen = {}
    for c in model.constraints:
        key = (c.node, c.dof)
        if key in seen:
            raise ModelError(
                f"conflicting constraint: node {c.node} dof {c.dof} "
                "is constrained more than once")
        seen[key] = c.value
        gi = index[key]
        constrained_mask[gi] = True
        values[gi] = c.value

    attached = set()
    for e in model.elements:
        attached.update(e.nodes)
    for nid in node_ids:
        if nid not in attached:
            warnings.warn(
                f"node {nid} is not attached to any element; all its DoFs "
                "are constrained to zero", stacklevel=2)
            for dof in DOF_NAMES:
                gi = index[(nid, dof)]
                if not constrained_mask[gi]:
                    constrained_mask[gi] = True
                    values[gi] = 0.0

    free = np.flatnonzero(~constrained_mask)
    constrained = np.flatnonzero(constrained_mask)
    free_pos = np.full(n_total, -1, dtype=int)
    free_pos[free] = np.arange(len(free))
    return DofMap(node_ids=node_ids, index=index, free=free,
                  constrained=constrained, values=values, free_pos=free_pos)
