"""Electrostatic force on the plate from the solved potential.

Away from contact the force density at a plate node combines the vertical
trace derivative of the gap potential on the deformed plate with the
boundary-data partials there; on the contact set the layer-side trace at the
interface takes over.  For constant-potential data the correction terms
vanish identically and the force is the nonnegative square term alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasiblePerturbation, MissingTrace, NonCanonicalFamily
from .fields import FieldSolver, PotentialField
from .hermite import PlateState, assemble_mass
from .params import BoundaryDataFamily, PhysicalParams

__all__ = [
    "ForceProfile",
    "compute_force",
    "force_analytic_flat",
    "force_load_vector",
    "directional_derivative_check",
]


@dataclass
class ForceProfile:
    """Nodal force density with per-node branch bookkeeping."""

    x: np.ndarray
    values: np.ndarray          # g at plate nodes
    frak_g: np.ndarray          # square term alone
    contact: np.ndarray         # branch tag per node (True = contact)
    switch_diagnostics: dict = field(default_factory=dict)

    @property
    def branch(self) -> np.ndarray:
        return np.where(self.contact, "contact", "non-contact")


def compute_force(
    u: PlateState,
    pf: PotentialField,
    family: BoundaryDataFamily,
    p: PhysicalParams,
) -> ForceProfile:
    """Evaluate the force density at the plate nodes of u's grid."""
    n_x = len(pf.x) - 1
    if n_x % u.grid.n_elems != 0:
        raise MissingTrace("field columns do not contain the plate nodes")
    stride = n_x // u.grid.n_elems
    cols = stride * np.arange(u.grid.n_nodes)

    xs = pf.x[cols]
    contact = pf.gap.contact[cols]
    vals = u.values
    slopes = u.slopes
    s2 = p.sigma2

    g = np.empty_like(xs)
    frak = np.empty_like(xs)

    non = ~contact
    if np.any(non):
        tr = pf.top_trace_dz[cols[non]]
        if np.any(~np.isfinite(tr)):
            raise MissingTrace("plate-side trace missing at a non-contact node")
        w = vals[non]
        hz = family.dz_h2(xs[non], w, w)
        hw = family.dw_h2(xs[non], w, w)
        hx = family.dx_h2(xs[non], w, w)
        frak[non] = 0.5 * s2 * (1.0 + slopes[non] ** 2) * (tr - hz - hw) ** 2
        g[non] = frak[non] - 0.5 * s2 * (hx**2 + (hz + hw) ** 2)
    if np.any(contact):
        tr1 = pf.bottom_trace_dz1[cols[contact]]
        if np.any(~np.isfinite(tr1)):
            raise MissingTrace("layer-side trace missing at a contact node")
        xc = xs[contact]
        s1 = p.sigma1_at(xc, np.full_like(xc, -p.H))
        hz = family.dz_h2(xc, -p.H, -p.H)
        hw = family.dw_h2(xc, -p.H, -p.H)
        hx = family.dx_h2(xc, -p.H, -p.H)
        frak[contact] = 0.5 * s2 * ((s1 / s2) * tr1 - hz - hw) ** 2
        g[contact] = frak[contact] - 0.5 * s2 * (hx**2 + (hz + hw) ** 2)

    diagnostics = _switch_diagnostics(u, pf, family, p, cols, contact)
    return ForceProfile(xs, g, frak, contact, diagnostics)


def _switch_diagnostics(u, pf, family, p, cols, contact) -> dict:
    """Both-branch values at nodes within two elements of a branch switch."""
    switches = np.nonzero(contact[:-1] != contact[1:])[0]
    if len(switches) == 0:
        return {}
    near = np.zeros(len(cols), bool)
    for s in switches:
        near[max(0, s - 1): s + 3] = True
    out = {"nodes": np.nonzero(near)[0].tolist(), "contact_value": [], "noncontact_value": []}
    for i in np.nonzero(near)[0]:
        c = cols[i]
        x = pf.x[c]
        s1 = float(p.sigma1_at(x, -p.H))
        hzw = float(family.dz_h2(x, -p.H, -p.H) + family.dw_h2(x, -p.H, -p.H))
        out["contact_value"].append(
            0.5 * p.sigma2 * ((s1 / p.sigma2) * pf.bottom_trace_dz1[c] - hzw) ** 2
        )
        w = u.values[i]
        hzw2 = float(family.dz_h2(x, w, w) + family.dw_h2(x, w, w))
        tr = pf.top_trace_dz[c]
        out["noncontact_value"].append(
            0.5 * p.sigma2 * (1.0 + u.slopes[i] ** 2) * (tr - hzw2) ** 2
            if np.isfinite(tr) else float("nan")
        )
    return out


def force_analytic_flat(c: float, family: BoundaryDataFamily, p: PhysicalParams) -> float:
    """Closed-form force density for a flat plate at height c with the builtin family."""
    if not family.is_canonical:
        raise NonCanonicalFamily("closed-form force applies to the builtin family only")
    if c < -p.H:
        raise ValueError("flat height below the layer")
    s1 = float(p.sigma1)  # type: ignore[arg-type]
    return 0.5 * p.sigma2 * s1**2 * p.V**2 / (p.sigma2 * p.d + s1 * (c + p.H)) ** 2


def force_load_vector(gprof: ForceProfile, u: PlateState, M=None) -> np.ndarray:
    """Pair the nodal force with the plate space: load_i = int g_h phi_i.

    g is carried as the value-interpolant (zero slope coefficients) and
    integrated against the Hermite basis through the consistent mass matrix,
    the same pairing the energies use.
    """
    if M is None:
        M = assemble_mass(u.grid)
    ghat = np.zeros(u.grid.n_dofs)
    ghat[0::2] = gprof.values
    return M @ ghat


def directional_derivative_check(
    u: PlateState,
    w: PlateState,
    eps_list,
    solver: FieldSolver,
    family: BoundaryDataFamily,
    p: PhysicalParams,
) -> dict:
    """Compare difference quotients of the field energy with the force pairing.

    Requires a strict gap along the whole tested segment so that no branch
    switch pollutes the quotient.
    """
    eps_list = sorted(float(e) for e in eps_list)
    M = assemble_mass(u.grid)

    def strict_gap(state):
        gm = solver.gap_map(state)
        return not np.any(gm.contact)

    if not strict_gap(u):
        raise InfeasiblePerturbation("base state has contact columns")
    pf = solver.solve(u)
    Ee0 = solver.electrostatic_energy(pf, u)
    gprof = compute_force(u, pf, family, p)
    inner = float(force_load_vector(gprof, u, M) @ w.dofs)

    quotients, mismatches = [], []
    for eps in eps_list:
        up = PlateState(u.grid, u.dofs + eps * w.dofs)
        if up.values.min() <= -p.H or not strict_gap(up):
            raise InfeasiblePerturbation(f"perturbed state at eps={eps} loses its strict gap")
        pfe = solver.solve(up)
        Ee = solver.electrostatic_energy(pfe, up)
        q = (Ee - Ee0) / eps
        quotients.append(q)
        mismatches.append(abs(q - inner))

    # slope of log-mismatch vs log-eps between consecutive eps (ascending list);
    # first-order decay of the quotient error shows up as slopes near 1
    orders = [
        float(np.log(mismatches[i + 1] / mismatches[i]) / np.log(eps_list[i + 1] / eps_list[i]))
        if mismatches[i] > 0 and mismatches[i + 1] > 0 else float("inf")
        for i in range(len(eps_list) - 1)
    ]
    return {
        "eps": eps_list,
        "quotients": quotients,
        "inner_product": inner,
        "mismatch": mismatches,
        "observed_orders": orders,
        "final_relative_mismatch": (
            mismatches[0] / abs(inner) if inner != 0.0 else mismatches[0]
        ),
    }
