"""Result writers: CSV tables and legacy-VTK unstructured grids.

All numeric output uses ``repr`` formatting (shortest round-trip), so files
are byte-stable across runs of the same model.
"""

from __future__ import annotations

import os

import numpy as np

from .model import DOF_NAMES

# legacy VTK cell ids; five- to seven-node quads have no legacy cell type
# and are written through their corner nodes
_VTK_CELLS = {
    "CSMT3": (5, 3),
    "CSMT6": (22, 6),
    "CSMQ4": (9, 4),
    "CSMQ5": (9, 4),
    "CSMQ6": (9, 4),
    "CSMQ7": (9, 4),
    "CSMQ8": (23, 8),
    "BEAM2D": (3, 2),
}


def _fmt(x):
    return repr(float(x))


def write_nodal_csv(path, model, dofmap, displacements):
    """Nodal results: id,x,y,ux,uy,rz."""
    with open(path, "w") as f:
        f.write("id,x,y,ux,uy,rz\n")
        for n in model.nodes:
            vals = [displacements[dofmap.gidx(n.id, dof)]
                    for dof in DOF_NAMES]
            f.write(",".join([str(n.id), _fmt(n.x), _fmt(n.y)]
                             + [_fmt(v) for v in vals]) + "\n")


def write_fields_csv(path, analysis):
    """Per-quadrature-point recovered fields of every membrane element."""
    with open(path, "w") as f:
        f.write("element,point,x,y,sigma_x,sigma_y,tau_xy,mu_x,mu_y,peeq\n")
        for edef, fields, points in analysis.element_fields():
            for g, pf in enumerate(fields):
                row = [str(edef.id), str(g),
                       _fmt(pf.xy[0]), _fmt(pf.xy[1]),
                       _fmt(pf.sigma[0]), _fmt(pf.sigma[1]),
                       _fmt(pf.sigma[2]),
                       _fmt(pf.mu[0]), _fmt(pf.mu[1]),
                       _fmt(points[g].peeq)]
                f.write(",".join(row) + "\n")


def write_history_csv(path, history):
    """Per-step summary: load factor, iterations, reaction sums."""
    with open(path, "w") as f:
        f.write("step,load_factor,iterations,"
                "reaction_ux,reaction_uy,reaction_rz\n")
        for k, rec in enumerate(history.steps, start=1):
            sums = [rec.reactions[i::3].sum() for i in range(3)]
            f.write(",".join([str(k), _fmt(rec.load_factor),
                              str(rec.iterations)]
                             + [_fmt(s) for s in sums]) + "\n")


def write_vtk(path, model, dofmap, displacements, peeq_by_element=None):
    """Legacy-VTK ASCII unstructured grid with nodal point data.

    Point data: ux, uy, rz; cell data: equivalent plastic strain averaged
    per element when provided.
    """
    order = {nid: k for k, nid in enumerate(dofmap.node_ids)}
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 2.0\n")
        f.write("csfem results\n")
        f.write("ASCII\n")
        f.write("DATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {len(model.nodes)} double\n")
        for nid in dofmap.node_ids:
            n = model.node(nid)
            f.write(f"{_fmt(n.x)} {_fmt(n.y)} 0.0\n")

        n_cells = len(model.elements)
        size = sum(_VTK_CELLS[e.kind][1] + 1 for e in model.elements)
        f.write(f"CELLS {n_cells} {size}\n")
        for e in model.elements:
            n_pts = _VTK_CELLS[e.kind][1]
            conn = [order[nid] for nid in e.nodes[:n_pts]]
            f.write(" ".join([str(n_pts)] + [str(c) for c in conn]) + "\n")
        f.write(f"CELL_TYPES {n_cells}\n")
        for e in model.elements:
            f.write(f"{_VTK_CELLS[e.kind][0]}\n")

        f.write(f"POINT_DATA {len(model.nodes)}\n")
        for dof in DOF_NAMES:
            f.write(f"SCALARS {dof} double\nLOOKUP_TABLE default\n")
            for nid in dofmap.node_ids:
                f.write(_fmt(displacements[dofmap.gidx(nid, dof)]) + "\n")

        f.write(f"CELL_DATA {n_cells}\n")
        f.write("SCALARS peeq double\nLOOKUP_TABLE default\n")
        peeq_by_element = peeq_by_element or {}
        for e in model.elements:
            f.write(_fmt(peeq_by_element.get(e.id, 0.0)) + "\n")


def write_bench_csv(path, results):
    """Benchmark verdict table: benchmark,metric,value,tolerance,verdict."""
    with open(path, "w") as f:
        f.write("benchmark,metric,value,tolerance,verdict\n")
        for res in results:
            for m in res.metrics:
                verdict = "PASS" if m.passed else "FAIL"
                f.write(",".join([res.name, f'"{m.name}"', _fmt(m.value),
                                  _fmt(m.tolerance), verdict]) + "\n")


def write_profile_csv(path, profile, header=("x", "value")):
    """Two-column profile curve."""
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in np.asarray(profile):
            f.write(",".join(_fmt(v) for v in row) + "\n")


def element_peeq(analysis):
    """Average committed equivalent plastic strain per element id."""
    out = {}
    for edef, _, points in analysis.element_fields():
        out[edef.id] = float(np.mean([pt.peeq for pt in points]))
    return out


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
