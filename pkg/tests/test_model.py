"""Model format, validation and DoF numbering tests."""

import numpy as np
import pytest

from csfem import (
    AnalysisConfig,
    Constraint,
    ElementDef,
    MaterialDef,
    Model,
    ModelError,
    NodalLoad,
    Node,
    number_dofs,
    parse_model,
    serialize_model,
    validate_model,
)

PATCH_JSON = """
{
  "nodes": [
    {"id": 1, "x": 0.0, "y": 0.0}, {"id": 2, "x": 1.0, "y": 0.0},
    {"id": 3, "x": 2.0, "y": 0.0}, {"id": 4, "x": 0.0, "y": 1.0},
    {"id": 5, "x": 0.8, "y": 1.1}, {"id": 6, "x": 2.0, "y": 1.0},
    {"id": 7, "x": 0.0, "y": 2.0}, {"id": 8, "x": 1.0, "y": 2.0},
    {"id": 9, "x": 2.0, "y": 2.0}
  ],
  "materials": [
    {"id": 1, "kind": "elastic", "E": 10.0, "nu": 0.25,
     "assumption": "plane_stress"}
  ],
  "elements": [
    {"id": 1, "kind": "CSMQ4", "nodes": [1, 2, 5, 4], "material": 1,
     "l": 1.0, "t": 1.0},
    {"id": 2, "kind": "CSMQ4", "nodes": [2, 3, 6, 5], "material": 1,
     "l": 1.0, "t": 1.0},
    {"id": 3, "kind": "CSMQ4", "nodes": [4, 5, 8, 7], "material": 1,
     "l": 1.0, "t": 1.0},
    {"id": 4, "kind": "CSMQ4", "nodes": [5, 6, 9, 8], "material": 1,
     "l": 1.0, "t": 1.0}
  ],
  "constraints": [
    {"node": 1, "dof": "ux", "value": 0.0},
    {"node": 1, "dof": "uy", "value": 0.0},
    {"node": 4, "dof": "ux", "value": 0.0},
    {"node": 7, "dof": "ux", "value": 0.0}
  ],
  "loads": [
    {"node": 3, "dof": "ux", "value": 1.0},
    {"node": 6, "dof": "ux", "value": 2.0},
    {"node": 9, "dof": "ux", "value": 1.0}
  ],
  "analysis": {"steps": 1}
}
"""


@pytest.fixture
def patch_model():
    return parse_model(PATCH_JSON)


# =====================================================================
# Parsing
# =====================================================================


def test_parse_patch(patch_model):
    m = patch_model
    assert len(m.nodes) == 9
    assert len(m.elements) == 4
    assert all(e.kind == "CSMQ4" for e in m.elements)
    assert m.material(1).E == 10.0
    assert m.material(1).nu == 0.25
    assert m.node(5).x == 0.8 and m.node(5).y == 1.1
    assert m.analysis.steps == 1
    assert m.analysis.max_iters == 25
    assert m.analysis.residual_tol == 1e-8
    assert m.analysis.displacement_tol == 1e-10


def test_roundtrip_identical(patch_model):
    again = parse_model(serialize_model(patch_model))
    assert again == patch_model
    # and a second serialization is byte-identical
    assert serialize_model(again) == serialize_model(patch_model)


def test_empty_node_list_rejected():
    with pytest.raises(ModelError, match="no nodes"):
        parse_model('{"nodes": []}')


def test_wrong_node_count_rejected():
    text = PATCH_JSON.replace('"nodes": [1, 2, 5, 4]', '"nodes": [1, 2, 5]')
    with pytest.raises(ModelError, match="node count mismatch"):
        parse_model(text)


def test_unknown_kind_rejected():
    text = PATCH_JSON.replace('"kind": "CSMQ4"', '"kind": "CSMQ9"')
    with pytest.raises(ModelError, match="unknown element kind"):
        parse_model(text)


def test_dangling_node_reference():
    text = PATCH_JSON.replace('"nodes": [1, 2, 5, 4]', '"nodes": [1, 2, 5, 44]')
    with pytest.raises(ModelError, match="dangling node reference 44"):
        parse_model(text)


def test_dangling_material_reference():
    text = PATCH_JSON.replace('"material": 1,', '"material": 3,')
    with pytest.raises(ModelError, match="dangling material"):
        parse_model(text)


def test_unknown_keys_rejected():
    text = PATCH_JSON.replace('"analysis": {"steps": 1}',
                              '"analysis": {"steps": 1}, "extra": 1')
    with pytest.raises(ModelError, match="unknown key"):
        parse_model(text)
    text = PATCH_JSON.replace('{"id": 1, "x": 0.0, "y": 0.0}',
                              '{"id": 1, "x": 0.0, "y": 0.0, "z": 0.0}')
    with pytest.raises(ModelError, match="unknown key"):
        parse_model(text)


def test_syntax_error_carries_position():
    with pytest.raises(ModelError) as exc:
        parse_model('{"nodes": [\n  {"id": 1 "x": 0}\n]}')
    assert exc.value.line == 2
    assert exc.value.column is not None
    assert "line 2" in str(exc.value)


def test_membrane_requires_positive_l():
    text = PATCH_JSON.replace('"l": 1.0', '"l": -1.0')
    with pytest.raises(ModelError, match="l > 0"):
        parse_model(text)


def test_bad_tolerance_rejected():
    text = PATCH_JSON.replace('"analysis": {"steps": 1}',
                              '"analysis": {"steps": 1, "residual_tol": 0.0}')
    with pytest.raises(ModelError, match="residual_tol"):
        parse_model(text)


def test_j2_requires_parameters():
    text = PATCH_JSON.replace(
        '"kind": "elastic", "E": 10.0, "nu": 0.25',
        '"kind": "j2", "E": 10.0, "nu": 0.25')
    with pytest.raises(ModelError, match="sigma_y"):
        parse_model(text)


# =====================================================================
# Validation
# =====================================================================


def test_patch_model_valid(patch_model):
    assert validate_model(patch_model) == []


def test_clockwise_quad_flagged(patch_model):
    els = list(patch_model.elements)
    els[0] = ElementDef(id=1, kind="CSMQ4", nodes=(4, 5, 2, 1),
                        material=1, l=1.0, t=1.0)
    bad = Model(nodes=patch_model.nodes, materials=patch_model.materials,
                elements=tuple(els), constraints=patch_model.constraints,
                loads=patch_model.loads, analysis=patch_model.analysis)
    diags = validate_model(bad)
    assert any("non-positive Jacobian" in d for d in diags)


def test_insufficient_constraints_flagged(patch_model):
    bad = Model(nodes=patch_model.nodes, materials=patch_model.materials,
                elements=patch_model.elements, constraints=(),
                loads=patch_model.loads, analysis=patch_model.analysis)
    diags = validate_model(bad)
    assert any("insufficient constraints" in d and "3 rigid-body modes" in d
               for d in diags)


def test_unconstrained_model_has_three_rigid_modes(patch_model):
    """The rigid-mode count behind the diagnostic, confirmed by a dense
    eigen-solve of a one-element assembled stiffness."""
    from csfem import Analysis

    one = parse_model(serialize_model(patch_model))
    sub = Model(nodes=tuple(n for n in one.nodes if n.id in (1, 2, 5, 4)),
                materials=one.materials, elements=one.elements[:1],
                constraints=(), loads=(), analysis=one.analysis)
    analysis = Analysis(sub)
    K, _ = analysis.assemble_full(np.zeros(12))
    eig = np.abs(np.linalg.eigvalsh(K.toarray()))
    assert int(np.sum(eig < 1e-8 * eig.max())) == 3


def test_duplicate_ids_flagged(patch_model):
    nodes = patch_model.nodes + (Node(id=9, x=5.0, y=5.0),)
    bad = Model(nodes=nodes, materials=patch_model.materials,
                elements=patch_model.elements,
                constraints=patch_model.constraints,
                loads=patch_model.loads, analysis=patch_model.analysis)
    assert any("duplicate node id 9" in d for d in validate_model(bad))


# =====================================================================
# DoF numbering
# =====================================================================


def test_single_node_three_free_dofs():
    m = Model(nodes=(Node(1, 0.0, 0.0),), materials=(), elements=(),
              constraints=(), loads=(), analysis=AnalysisConfig())
    with pytest.warns(UserWarning, match="not attached"):
        dm = number_dofs(m)
    # the orphan node is auto-constrained, so nothing is free
    assert dm.n_total == 3
    assert dm.n_free == 0


def test_patch_numbering(patch_model):
    dm = number_dofs(patch_model)
    assert dm.n_total == 27
    assert len(dm.constrained) == 4
    assert dm.n_free == 23
    # node-major, dof-minor over ascending ids
    assert dm.gidx(1, "ux") == 0
    assert dm.gidx(1, "rz") == 2
    assert dm.gidx(9, "rz") == 26
    # free positions are contiguous
    assert np.array_equal(np.sort(dm.free_pos[dm.free]),
                          np.arange(dm.n_free))


def test_numbering_is_deterministic(patch_model):
    a = number_dofs(patch_model)
    b = number_dofs(patch_model)
    assert a.index == b.index
    assert np.array_equal(a.free, b.free)
    assert np.array_equal(a.values, b.values)


def test_conflicting_constraint_rejected(patch_model):
    cons = patch_model.constraints + (Constraint(node=1, dof="ux", value=0.5),)
    bad = Model(nodes=patch_model.nodes, materials=patch_model.materials,
                elements=patch_model.elements, constraints=cons,
                loads=patch_model.loads, analysis=patch_model.analysis)
    with pytest.raises(ModelError, match="conflicting constraint"):
        number_dofs(bad)


def test_prescribed_values_recorded(patch_model):
    cons = patch_model.constraints + (Constraint(node=9, dof="ux", value=0.4),)
    m = Model(nodes=patch_model.nodes, materials=patch_model.materials,
              elements=patch_model.elements, constraints=cons,
              loads=(), analysis=patch_model.analysis)
    dm = number_dofs(m)
    assert dm.values[dm.gidx(9, "ux")] == 0.4
    assert dm.free_pos[dm.gidx(9, "ux")] == -1


def test_beam_model_parses():
    text = """
    {
      "nodes": [{"id": 1, "x": 0, "y": 0}, {"id": 2, "x": 4, "y": 0}],
      "materials": [{"id": 1, "kind": "elastic", "E": 1000.0, "nu": 0.3,
                     "assumption": "plane_stress"}],
      "elements": [{"id": 1, "kind": "BEAM2D", "nodes": [1, 2],
                    "material": 1, "A": 1.0, "I": 0.0833333333}],
      "constraints": [{"node": 1, "dof": "ux", "value": 0.0},
                      {"node": 1, "dof": "uy", "value": 0.0},
                      {"node": 1, "dof": "rz", "value": 0.0}],
      "loads": [],
      "analysis": {}
    }
    """
    m = parse_model(text)
    assert m.elements[0].kind == "BEAM2D"
    assert m.elements[0].A == 1.0
    assert validate_model(m) == []
