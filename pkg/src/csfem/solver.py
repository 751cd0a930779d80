"""Global assembly and displacement-controlled incremental Newton solution.

Prescribed displacements and nodal loads ramp proportionally over the
configured number of equal steps.  Each step iterates full-tangent Newton
until the free residual drops below ``residual_tol`` times the step's first
residual (with an absolute floor) or the correction norm falls below
``displacement_tol`` relative to the free displacement.  Material states
commit only on convergence; a failed step leaves the committed states of the
previous step untouched.

Element updates are embarrassingly parallel; set ``CSFEM_THREADS`` to enable
a thread pool.  Contributions merge in fixed element order, so results do
not depend on the thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elements import (
    beam_stiffness,
    build_arrays,
    elastic_stiffness,
    recover_fields,
    update_and_resist,
)
from .errors import MaterialFailureError, StepFailureError
from .materials import ElasticLaw, MaterialPoint, make_material, shear_modulus
from .model import DOF_NAMES, element_thickness, number_dofs

_RESIDUAL_FLOOR = 1e-14


@dataclass
class StepRecord:
    """Converged state of one load step."""

    load_factor: float
    displacements: np.ndarray   # full vector, node-major over sorted ids
    reactions: np.ndarray       # full vector, zero at free DoFs
    iterations: int


class SolutionHistory:
    """Append-only record of converged steps."""

    def __init__(self):
        self.steps = []

    def append(self, record):
        self.steps.append(record)

    def __len__(self):
        return len(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    def reaction_sum(self, dofmap, dof, step=-1):
        """Sum of reactions in one DoF direction at a step."""
        rec = self.steps[step]
        offset = DOF_NAMES.index(dof)
        return float(rec.reactions[offset::3].sum())


class _MembraneRuntime:
    __slots__ = ("edef", "arrays", "material", "eta", "points", "gdofs",
                 "_K_const")

    def __init__(self, edef, arrays, material, eta, gdofs):
        self.edef = edef
        self.arrays = arrays
        self.material = material
        self.eta = eta
        self.points = [MaterialPoint() for _ in range(arrays.n_ip)]
        self.gdofs = gdofs
        # elastic elements have a constant stiffness; cache it
        self._K_const = None
        if isinstance(material, ElasticLaw):
            self._K_const = elastic_stiffness(arrays, material.C, eta)

    def update(self, d):
        if self._K_const is not None:
            d_e = d[self.gdofs]
            return self._K_const @ d_e, self._K_const
        return update_and_resist(self.arrays, d[self.gdofs], self.points,
                                 self.material, self.eta)

    def commit(self):
        for pt in self.points:
            pt.commit()

    def rollback(self):
        for pt in self.points:
            pt.rollback()

    def fields(self, d):
        return recover_fields(self.arrays, d[self.gdofs], self.material,
                              self.eta, points=self.points)


class _BeamRuntime:
    __slots__ = ("edef", "K", "gdofs")

    def __init__(self, edef, K, gdofs):
        self.edef = edef
        self.K = K
        self.gdofs = gdofs

    def update(self, d):
        return self.K @ d[self.gdofs], self.K

    def commit(self):
        pass

    def rollback(self):
        pass


class Analysis:
    """One model instance prepared for solution.

    Building an Analysis numbers the DoFs, integrates all constant element
    matrices and allocates material points.  ``run`` executes the configured
    load steps and returns the history; the instance then holds the final
    committed state for field recovery.
    """

    def __init__(self, model, threads=None):
        self.model = model
        self.dofmap = number_dofs(model)
        form = model.analysis.form
        if threads is None:
            threads = int(os.environ.get("CSFEM_THREADS", "1"))
        self.threads = max(1, threads)

        self.elements = []
        for edef in sorted(model.elements, key=lambda e: e.id):
            gdofs = np.array([self.dofmap.gidx(nid, dof)
                              for nid in edef.nodes for dof in DOF_NAMES])
            mat = model.material(edef.material)
            coords = np.array([(model.node(n).x, model.node(n).y)
                               for n in edef.nodes])
            if edef.kind == "BEAM2D":
                K = beam_stiffness(mat.E, edef.A, edef.I, coords)
                self.elements.append(_BeamRuntime(edef, K, gdofs))
            else:
                arrays = build_arrays(edef.kind, coords, form=form,
                                      thickness=element_thickness(edef))
                law = make_material(mat)
                eta = edef.l ** 2 * shear_modulus(mat.E, mat.nu)
                self.elements.append(
                    _MembraneRuntime(edef, arrays, law, eta, gdofs))

        rows = []
        cols = []
        for el in self.elements:
            nd = len(el.gdofs)
            rows.append(np.repeat(el.gdofs, nd))
            cols.append(np.tile(el.gdofs, nd))
        self._rows = np.concatenate(rows)
        self._cols = np.concatenate(cols)
        free_pos = self.dofmap.free_pos
        cons_pos = np.full(self.dofmap.n_total, -1, dtype=int)
        cons_pos[self.dofmap.constrained] = np.arange(
            len(self.dofmap.constrained))
        row_free = free_pos[self._rows] >= 0
        col_free = free_pos[self._cols] >= 0
        self._keep = row_free & col_free
        self._rows_f = free_pos[self._rows[self._keep]]
        self._cols_f = free_pos[self._cols[self._keep]]
        # free-row/constrained-column block, for moving prescribed
        # displacement increments to the right-hand side
        self._keep_fc = row_free & ~col_free
        self._rows_fc = free_pos[self._rows[self._keep_fc]]
        self._cols_fc = cons_pos[self._cols[self._keep_fc]]

        self.f_ext = np.zeros(self.dofmap.n_total)
        for load in model.loads:
            self.f_ext[self.dofmap.gidx(load.node, load.dof)] += load.value

        self.d = np.zeros(self.dofmap.n_total)
        self.history = SolutionHistory()

    def _update_elements(self, d):
        if self.threads > 1 and len(self.elements) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(lambda el: el.update(d),
                                        self.elements))
        else:
            results = [el.update(d) for el in self.elements]
        r_int = np.zeros(self.dofmap.n_total)
        data = []
        for el, (r_e, k_e) in zip(self.elements, results):
            r_int[el.gdofs] += r_e
            data.append(k_e.ravel())
        return r_int, np.concatenate(data)

    def assemble_full(self, d=None):
        """Full stiffness (CSR over all DoFs) and internal force at ``d``."""
        if d is None:
            d = self.d
        r_int, data = self._update_elements(d)
        n = self.dofmap.n_total
        K = sp.coo_matrix((data, (self._rows, self._cols)),
                          shape=(n, n)).tocsr()
        return K, r_int

    def _solve_free(self, data, rhs_f):
        nf = self.dofmap.n_free
        K_ff = sp.coo_matrix((data[self._keep], (self._rows_f, self._cols_f)),
                             shape=(nf, nf)).tocsc()
        return spla.splu(K_ff).solve(rhs_f)

    def _coupling_force(self, data, delta_c):
        """K_fc @ delta_c: effect of prescribed increments on free rows."""
        nf = self.dofmap.n_free
        K_fc = sp.coo_matrix(
            (data[self._keep_fc], (self._rows_fc, self._cols_fc)),
            shape=(nf, len(self.dofmap.constrained))).tocsr()
        return K_fc @ delta_c

    def solve_step(self, step_index, load_factor, callback=None):
        """Newton-iterate one step at the given load factor.

        The first solve is a predictor with the tangent of the committed
        state and the prescribed-displacement columns moved to the
        right-hand side; correctors then iterate the full tangent at the
        trial state.  Raises :class:`StepFailureError` without committing
        when the iteration budget is exhausted; otherwise commits material
        state and appends a step record.
        """
        cfg = self.model.analysis
        free = self.dofmap.free
        cons = self.dofmap.constrained
        d_backup = self.d.copy()
        f_step = load_factor * self.f_ext

        # predictor at the committed state
        r_int, data = self._update_elements(self.d)
        delta_c = load_factor * self.dofmap.values[cons] - self.d[cons]
        rhs = (f_step - r_int)[free] - self._coupling_force(data, delta_c)
        ref = max(float(np.linalg.norm(rhs)), _RESIDUAL_FLOOR)
        self.d[free] += self._solve_free(data, rhs)
        self.d[cons] = load_factor * self.dofmap.values[cons]
        iterations = 1

        converged = False
        material_failure = None
        r_int, data = self._update_elements(self.d)
        residual = f_step - r_int
        residual_norm = float(np.linalg.norm(residual[free]))
        while True:
            if residual_norm <= cfg.residual_tol * ref:
                converged = True
                break
            if iterations >= cfg.max_iters:
                break
            delta = self._solve_free(data, residual[free])
            # backtrack on residual growth or constitutive failure; plain
            # Newton wanders once softening localizes
            best = None
            scale = 1.0
            for _ in range(6):
                d_try = self.d.copy()
                d_try[free] += scale * delta
                try:
                    r_try, data_try = self._update_elements(d_try)
                except MaterialFailureError as exc:
                    material_failure = exc
                    scale *= 0.5
                    continue
                res_try = f_step - r_try
                rn_try = float(np.linalg.norm(res_try[free]))
                if best is None or rn_try < best[0]:
                    best = (rn_try, scale, d_try, r_try, data_try, res_try)
                if rn_try <= residual_norm or rn_try <= cfg.residual_tol * ref:
                    break
                scale *= 0.5
            if best is None:
                break
            residual_norm, scale, self.d, r_int, data, residual = best
            iterations += 1
            d_norm = float(np.linalg.norm(self.d[free]))
            if scale == 1.0 and np.linalg.norm(delta) <= (
                    cfg.displacement_tol * max(d_norm, 1e-30)):
                converged = True
                break

        if not converged:
            self.d = d_backup
            for el in self.elements:
                el.rollback()
            detail = ""
            if material_failure is not None:
                detail = f"; last constitutive failure: {material_failure}"
            raise StepFailureError(
                step_index, residual_norm,
                f"step {step_index}: tolerance unreachable within "
                f"{cfg.max_iters} iterations "
                f"(last residual norm {residual_norm:.6e}){detail}")

        for el in self.elements:
            el.commit()
        reactions = np.zeros(self.dofmap.n_total)
        cons = self.dofmap.constrained
        reactions[cons] = r_int[cons] - f_step[cons]
        self.history.append(StepRecord(
            load_factor=load_factor,
            displacements=self.d.copy(),
            reactions=reactions,
            iterations=iterations,
        ))
        if callback is not None:
            callback(step_index, self)

    def run(self, callback=None):
        """Apply the prescribed program in equal increments.

        ``callback(step_index, analysis)`` fires after each committed step
        (used for state snapshots).  Step failures propagate with the step
        index attached.
        """
        n = self.model.analysis.steps
        for k in range(1, n + 1):
            self.solve_step(k, k / n, callback=callback)
        return self.history

    def displacement(self, node_id, dof, step=-1):
        rec = self.history[step]
        return float(rec.displacements[self.dofmap.gidx(node_id, dof)])

    def element_fields(self):
        """Recovered per-point fields of every membrane element at the
        current displacement state."""
        out = []
        for el in self.elements:
            if isinstance(el, _MembraneRuntime):
                out.append((el.edef, el.fields(self.d), el.points))
        return out


def run_analysis(model, threads=None):
    """Build and run an analysis; returns (analysis, history)."""
    analysis = Analysis(model, threads=threads)
    history = analysis.run()
    return analysis, history
