"""Transmission solve for the electrostatic potential on layer + gap.

The layer occupies the fixed rectangle D x (-H-d, -H); the gap between the
layer top and the plate is pulled back column-by-column to the reference
rectangle D x (0, 1) through eta = (z + H) / gamma(x) with gap height
gamma = u + H.  On the reference rectangle the (constant-permittivity)
Laplacian becomes a divergence-form operator with coefficient matrix

    [[gamma,        -eta gamma'          ],
     [-eta gamma',  (1 + (eta gamma')^2) / gamma]]

whose determinant is 1, so ellipticity is uniform while the geometry moves
with the plate.  Both subdomains are discretized with bilinear elements on
tensor grids (a second-order nine-point stencil); sharing the interface row
makes the discrete operator symmetric and balances the normal flux
sigma dz(psi) across the interface to the order of the scheme.

Columns whose gap falls below the contact threshold are removed from the
gap domain: their nodes take the pinch Dirichlet value h(x, -H, -H), and gap
elements touching them are dropped, so disconnected gap components decouple
naturally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DegenerateGap, LinearSolveFailed
from .hermite import PlateState, shape_functions
from .params import BoundaryDataFamily, PhysicalParams

__all__ = [
    "FieldGrid",
    "GapMap",
    "PotentialField",
    "FieldSolver",
    "solve_potential",
    "electrostatic_energy",
    "boundary_data_energy",
    "check_max_principle",
    "contact_threshold",
]

# 2x2 Gauss rule on the unit square: points along each axis and weights.
_GP = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
_GW = np.array([0.5, 0.5])


def contact_threshold(plate_h: float, H: float) -> float:
    """Gap height below which a column counts as touching the layer."""
    return max(1e-9, plate_h**2) * H


def _q1_tables():
    """Q1 shape values/derivatives at the 4 Gauss points of the unit square.

    Returns (N, Nxi, Nze, W) with shape (4, 4): basis index x point index;
    point q = 2*qz + qx pairs the x-point qx with the vertical point qz.
    """
    xi = np.tile(_GP, 2)
    ze = np.repeat(_GP, 2)
    N = np.stack([(1 - xi) * (1 - ze), xi * (1 - ze), (1 - xi) * ze, xi * ze])
    Nxi = np.stack([-(1 - ze), (1 - ze), -ze, ze])
    Nze = np.stack([-(1 - xi), -xi, (1 - xi), xi])
    W = np.tile(_GW, 2) * np.repeat(_GW, 2)
    return N, Nxi, Nze, W


_N, _NXI, _NZE, _W = _q1_tables()


@dataclass(frozen=True)
class FieldGrid:
    """Tensor resolutions: n_x cells across D, n_z1 in the layer, n_z2 in the gap."""

    n_x: int = 128
    n_z1: int = 64
    n_z2: int = 64

    def __post_init__(self):
        for name in ("n_x", "n_z1", "n_z2"):
            if getattr(self, name) < 4:
                raise ValueError(f"{name} must be >= 4")


@dataclass
class GapMap:
    """Per-column gap geometry for one plate state."""

    x: np.ndarray            # field column coordinates
    gamma: np.ndarray        # gap height u + H per column
    dgamma: np.ndarray       # slope u' per column
    contact: np.ndarray      # boolean mask, True where gamma <= eps_contact
    eps_contact: float


@dataclass
class PotentialField:
    """Discrete potential on the layer grid and the mapped gap grid."""

    x: np.ndarray
    z1: np.ndarray           # physical layer levels, bottom to interface
    eta: np.ndarray          # reference gap levels, interface (0) to plate (1)
    psi1: np.ndarray         # (n_z1+1, n_x+1)
    psi2: np.ndarray         # (n_z2+1, n_x+1); contact columns hold the pinch value
    gap: GapMap
    interface_flux: np.ndarray       # sigma1 * dz(psi1) at z = -H, per column
    interface_flux_gap: np.ndarray   # sigma2 * dz(psi2) at z = -H (NaN at contact)
    top_trace_dz: np.ndarray         # dz(psi2) at the plate (NaN at contact)
    bottom_trace_dz1: np.ndarray     # dz(psi1) at z = -H, per column
    boundary_inf: float
    boundary_sup: float
    residual: float
    iterations: int
    method: str

    @property
    def contact_mask(self) -> np.ndarray:
        return self.gap.contact

    def z2_physical(self, H: float) -> np.ndarray:
        """Physical heights of the gap nodes, columnwise (n_z2+1, n_x+1)."""
        return -H + self.eta[:, None] * self.gap.gamma[None, :]


class FieldSolver:
    """Assembles and solves the transmission problem for plate states.

    The layer block does not depend on the plate, so its element
    contributions are built once per (params, grid) and reused; only the gap
    block is reassembled per state.

    Solves are pure functions of (state, params, data), but one instance
    holds scratch state between calls: share results across threads, not a
    solver; concurrent solves need one instance each (they are cheap to
    build, the layer assembly dominates and is recomputed in milliseconds).
    """

    def __init__(
        self,
        p: PhysicalParams,
        family: BoundaryDataFamily,
        grid: FieldGrid = FieldGrid(),
        plate_h: float = None,
        tol_lin: float = 1e-10,
        method: str = "direct",
        maxiter_factor: int = 50,
    ):
        if method not in ("direct", "cg"):
            raise ValueError("method must be 'direct' or 'cg'")
        self.p = p
        self.family = family
        self.grid = grid
        self.tol_lin = tol_lin
        self.method = method
        self.maxiter_factor = maxiter_factor
        self._default_plate_h = plate_h

        nx, nz1, nz2 = grid.n_x, grid.n_z1, grid.n_z2
        self.x = np.linspace(-p.L, p.L, nx + 1)
        self.z1 = np.linspace(-p.H - p.d, -p.H, nz1 + 1)
        self.eta = np.linspace(0.0, 1.0, nz2 + 1)
        self.hx = 2.0 * p.L / nx
        self.hz1 = p.d / nz1
        self.heta = 1.0 / nz2

        self.n1 = (nx + 1) * (nz1 + 1)
        self.idx1 = np.arange(self.n1).reshape(nz1 + 1, nx + 1)
        idx2 = np.empty((nz2 + 1, nx + 1), dtype=int)
        idx2[0] = self.idx1[-1]
        idx2[1:] = self.n1 + np.arange(nz2 * (nx + 1)).reshape(nz2, nx + 1)
        self.idx2 = idx2
        self.n_nodes = self.n1 + nz2 * (nx + 1)

        self._layer = self._assemble_layer()
        self._gap_conn = self._gap_connectivity()

    # -- assembly ---------------------------------------------------------

    def _elem_nodes(self, idx: np.ndarray) -> np.ndarray:
        """Node quadruples for all elements of a tensor grid, basis-ordered."""
        c00 = idx[:-1, :-1].ravel()
        c10 = idx[:-1, 1:].ravel()
        c01 = idx[1:, :-1].ravel()
        c11 = idx[1:, 1:].ravel()
        return np.stack([c00, c10, c01, c11], axis=1)

    def _assemble_layer(self):
        """COO triplets of the (state-independent) layer block."""
        p, hx, hz = self.p, self.hx, self.hz1
        nodes = self._elem_nodes(self.idx1)  # (ne, 4)
        kxx = np.einsum("aq,bq,q->ab", _NXI, _NXI, _W) / hx**2 * (hx * hz)
        kzz = np.einsum("aq,bq,q->ab", _NZE, _NZE, _W) / hz**2 * (hx * hz)
        if self.p.sigma1_is_constant:
            elem = float(self.p.sigma1) * (kxx + kzz)  # type: ignore[arg-type]
            vals = np.broadcast_to(elem, (nodes.shape[0], 4, 4)).ravel()
        else:
            # sigma1 at the Gauss points of each element; axes [jz, ix, qz, qx]
            # flatten to q = 2*qz + qx, matching the shape-table ordering
            xq = self.x[:-1, None] + _GP[None, :] * hx           # (nx, 2)
            zq = self.z1[:-1, None] + _GP[None, :] * hz          # (nz1, 2)
            sq = p.sigma1_at(xq[None, :, None, :], zq[:, None, :, None]).reshape(-1, 4)
            kxx_q = np.einsum("aq,bq->abq", _NXI, _NXI) / hx**2
            kzz_q = np.einsum("aq,bq->abq", _NZE, _NZE) / hz**2
            vals = np.einsum("eq,abq,q->eab", sq, kxx_q + kzz_q, _W) * (hx * hz)
            vals = vals.ravel()
        rows = np.repeat(nodes, 4, axis=1).ravel()
        cols = np.tile(nodes, (1, 4)).ravel()
        return rows, cols, vals

    def _gap_connectivity(self):
        return self._elem_nodes(self.idx2)

    def _assemble_gap(self, gm: GapMap):
        """COO triplets of the gap block for one state (contact elements dropped)."""
        p, hx, he = self.p, self.hx, self.heta
        nx, nz2 = self.grid.n_x, self.grid.n_z2
        if np.any(~gm.contact & (gm.gamma < gm.eps_contact / 2.0)):
            raise DegenerateGap("non-contact column with gap below eps_contact/2")
        keep_col = ~gm.contact
        keep_elem_x = keep_col[:-1] & keep_col[1:]               # (nx,)
        if not np.any(keep_elem_x):
            return np.array([], int), np.array([], int), np.array([], float)

        xq = self.x[:-1, None] + _GP[None, :] * hx               # (nx, 2)
        # interpolate the gap honestly from the plate state at Gauss abscissae
        gq = self._u(xq.ravel()) + p.H
        dgq = self._du(xq.ravel())
        gq = gq.reshape(nx, 2)
        dgq = dgq.reshape(nx, 2)
        etaq = self.eta[:-1, None] + _GP[None, :] * he           # (nz2, 2)

        ix = np.nonzero(keep_elem_x)[0]
        g_e = gq[ix]                                             # (nkx, 2)
        dg_e = dgq[ix]
        # coefficient arrays per element (jz, kx) and Gauss point q = 2*qz + qx
        g4 = np.broadcast_to(g_e[None, :, None, :], (nz2, len(ix), 2, 2)).reshape(-1, 4)
        b4 = (-etaq[:, None, :, None] * dg_e[None, :, None, :]).reshape(-1, 4)
        c11 = g4
        c12 = b4
        c22 = (1.0 + b4**2) / g4

        jac = hx * he * p.sigma2
        kxx = np.einsum("aq,bq->abq", _NXI, _NXI) / hx**2
        kee = np.einsum("aq,bq->abq", _NZE, _NZE) / he**2
        kxe = (np.einsum("aq,bq->abq", _NXI, _NZE) + np.einsum("aq,bq->abq", _NZE, _NXI)) / (hx * he)
        vals = (
            np.einsum("eq,abq,q->eab", c11, kxx, _W)
            + np.einsum("eq,abq,q->eab", c12, kxe, _W)
            + np.einsum("eq,abq,q->eab", c22, kee, _W)
        ) * jac

        nodes = self._gap_conn.reshape(nz2, nx, 4)[:, ix, :].reshape(-1, 4)
        rows = np.repeat(nodes, 4, axis=1).ravel()
        cols = np.tile(nodes, (1, 4)).ravel()
        return rows, cols, vals.ravel()

    # -- per-state geometry -------------------------------------------------

    def _bind(self, u: PlateState):
        self._u = lambda x: u(x)
        self._du = lambda x: u(x, deriv=1)

    def gap_map(self, u: PlateState) -> GapMap:
        p = self.p
        if u.values.min() < -p.H - 1e-12 * max(1.0, p.H):
            raise ValueError("plate state is infeasible: u < -H at a node")
        plate_h = self._default_plate_h if self._default_plate_h is not None else u.grid.h
        eps = contact_threshold(plate_h, p.H)
        gamma = u(self.x) + p.H
        dgamma = u(self.x, deriv=1)
        if not np.all(np.isfinite(gamma)):
            raise ValueError("non-finite gap heights")
        contact = gamma <= eps
        gamma = np.maximum(gamma, 0.0)
        # a gap component must span at least one full element: columns whose
        # both neighbors are excluded would leave orphaned unknowns, so they
        # are folded into the excluded set (iterate: folding can cascade)
        while True:
            keep = ~contact
            elem_kept = keep[:-1] & keep[1:]
            left = np.concatenate(([False], elem_kept))
            right = np.concatenate((elem_kept, [False]))
            orphan = keep & ~(left | right)
            if not np.any(orphan):
                break
            contact = contact | orphan
        return GapMap(self.x.copy(), gamma, dgamma, contact, eps)

    def _dirichlet(self, u: PlateState, gm: GapMap):
        """Boolean mask and values of all pinned nodes."""
        p, f = self.p, self.family
        nx = self.grid.n_x
        mask = np.zeros(self.n_nodes, bool)
        vals = np.zeros(self.n_nodes)
        ux = self._u(self.x)

        def pin(ids, v):
            mask[ids] = True
            vals[ids] = v

        # grounded electrode
        pin(self.idx1[0], f.h1(self.x, -p.H - p.d, ux))
        # side walls, both regions
        for i in (0, nx):
            pin(self.idx1[:, i], f.h1(self.x[i], self.z1, ux[i]))
            if not gm.contact[i]:
                z2 = -p.H + self.eta * gm.gamma[i]
                pin(self.idx2[:, i], f.h2(self.x[i], z2, ux[i]))
        # plate row
        noncontact = ~gm.contact
        pin(self.idx2[-1, noncontact], f.h2(self.x[noncontact], ux[noncontact], ux[noncontact]))
        # contact columns: the whole mapped column collapses to the pinch point
        if np.any(gm.contact):
            pv = f.h1(self.x[gm.contact], -p.H, -p.H)
            for j in range(self.idx2.shape[0]):
                pin(self.idx2[j, gm.contact], pv)
        return mask, vals

    # -- solve ---------------------------------------------------------------

    def solve(self, u: PlateState) -> PotentialField:
        """Solve the transmission problem for one plate state."""
        p = self.p
        if self.grid.n_x % u.grid.n_elems != 0:
            raise ValueError("field n_x must be a multiple of the plate element count")
        self._bind(u)
        gm = self.gap_map(u)

        r1, c1, v1 = self._layer
        r2, c2, v2 = self._assemble_gap(gm)
        A = sp.coo_matrix(
            (np.concatenate([v1, v2]), (np.concatenate([r1, r2]), np.concatenate([c1, c2]))),
            shape=(self.n_nodes, self.n_nodes),
        ).tocsr()

        mask, gvals = self._dirichlet(u, gm)
        self._dir_cache = (mask, gvals)
        free = ~mask
        full = gvals.copy()

        rhs = -(A[:, mask] @ gvals[mask])[free]
        Aff = A[free][:, free].tocsc()
        nfree = int(free.sum())
        rhs_norm = float(np.linalg.norm(rhs))
        if rhs_norm == 0.0:
            x = np.zeros(nfree)
            res, iters = 0.0, 0
        elif self.method == "direct":
            x = spla.splu(
                Aff, permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True}
            ).solve(rhs)
            res = float(np.linalg.norm(Aff @ x - rhs))
            iters = 1
            if not np.isfinite(res) or res > max(10.0 * self.tol_lin, 1e-8) * rhs_norm:
                raise LinearSolveFailed(f"direct solve residual {res:.3e} vs rhs {rhs_norm:.3e}")
        else:
            it_count = [0]

            def _cb(_):
                it_count[0] += 1

            M = sp.diags(1.0 / Aff.diagonal())
            x, info = spla.cg(
                Aff, rhs, rtol=self.tol_lin, atol=0.0,
                maxiter=self.maxiter_factor * nfree, M=M, callback=_cb,
            )
            res = float(np.linalg.norm(Aff @ x - rhs))
            iters = it_count[0]
            if info != 0 or res > 10.0 * self.tol_lin * rhs_norm:
                raise LinearSolveFailed(
                    f"cg stopped (info={info}) at residual {res:.3e} after {iters} iterations"
                )
        full[free] = x

        psi1 = full[self.idx1]
        psi2 = full[self.idx2]
        return self._package(gm, psi1, psi2, res, iters)

    def _package(self, gm, psi1, psi2, res, iters) -> PotentialField:
        p = self.p
        hz1, he = self.hz1, self.heta
        d1 = (3.0 * psi1[-1] - 4.0 * psi1[-2] + psi1[-3]) / (2.0 * hz1)
        s1_if = self.p.sigma1_at(self.x, np.full_like(self.x, -p.H))
        with np.errstate(divide="ignore", invalid="ignore"):
            dtop = (3.0 * psi2[-1] - 4.0 * psi2[-2] + psi2[-3]) / (2.0 * he * gm.gamma)
            dbot2 = (-3.0 * psi2[0] + 4.0 * psi2[1] - psi2[2]) / (2.0 * he * gm.gamma)
        dtop[gm.contact] = np.nan
        dbot2[gm.contact] = np.nan
        binf, bsup = self._boundary_range()
        return PotentialField(
            x=self.x.copy(), z1=self.z1.copy(), eta=self.eta.copy(),
            psi1=psi1, psi2=psi2, gap=gm,
            interface_flux=s1_if * d1,
            interface_flux_gap=p.sigma2 * dbot2,
            top_trace_dz=dtop,
            bottom_trace_dz1=d1,
            boundary_inf=binf, boundary_sup=bsup,
            residual=res, iterations=iters, method=self.method,
        )

    def _boundary_range(self) -> tuple[float, float]:
        mask, vals = self._dir_cache
        b = vals[mask]
        return float(b.min()), float(b.max())

    # -- energies --------------------------------------------------------------

    def form_value(self, psi1: np.ndarray, psi2: np.ndarray, gm: GapMap) -> float:
        """Dirichlet form  int sigma |grad psi|^2  with the assembly quadrature."""
        p, hx, hz, he = self.p, self.hx, self.hz1, self.heta
        nx, nz2 = self.grid.n_x, self.grid.n_z2

        def elem_vals(arr):
            return np.stack(
                [arr[:-1, :-1].ravel(), arr[:-1, 1:].ravel(), arr[1:, :-1].ravel(), arr[1:, 1:].ravel()],
                axis=1,
            )

        # layer
        e1 = elem_vals(psi1)                                   # (ne, 4)
        gx = e1 @ _NXI / hx                                    # (ne, 4 gauss)
        gz = e1 @ _NZE / hz
        xq = self.x[:-1, None] + _GP[None, :] * hx
        zq = self.z1[:-1, None] + _GP[None, :] * hz
        s = p.sigma1_at(xq[None, :, None, :], zq[:, None, :, None]).reshape(-1, 4)
        total = float(np.sum(s * (gx**2 + gz**2) * _W) * hx * hz)

        # gap
        keep_col = ~gm.contact
        keep = keep_col[:-1] & keep_col[1:]
        if np.any(keep):
            ix = np.nonzero(keep)[0]
            xq = (self.x[:-1, None] + _GP[None, :] * hx)[ix]
            gq = (self._u(xq.ravel()) + p.H).reshape(-1, 2)
            dgq = self._du(xq.ravel()).reshape(-1, 2)
            etaq = self.eta[:-1, None] + _GP[None, :] * he
            g4 = np.broadcast_to(gq[None, :, None, :], (nz2, len(ix), 2, 2)).reshape(-1, 4)
            b4 = (-etaq[:, None, :, None] * dgq[None, :, None, :]).reshape(-1, 4)
            e2 = elem_vals(psi2).reshape(nz2, nx, 4)[:, ix, :].reshape(-1, 4)
            gx = e2 @ _NXI / hx
            ge = e2 @ _NZE / he
            dens = g4 * gx**2 + 2.0 * b4 * gx * ge + (1.0 + b4**2) / g4 * ge**2
            total += float(p.sigma2 * np.sum(dens * _W) * hx * he)
        return total

    def electrostatic_energy(self, pf: PotentialField, u: PlateState) -> float:
        """E_e = -(1/2) int sigma |grad psi|^2 over the actual device domain."""
        self._bind(u)
        return -0.5 * self.form_value(pf.psi1, pf.psi2, pf.gap)

    def shape_gradient_load(self, pf: PotentialField, u: PlateState) -> np.ndarray:
        """Exact gradient of the discrete field energy w.r.t. the plate DOFs.

        Differentiates the mapped-gap quadratic form through its geometry
        coefficients (gamma, gamma') at the quadrature points; for
        constant-potential data the Dirichlet values carry no u-dependence,
        so the geometric term is the whole gradient (away from contact-mask
        switches, which are handled by the caller's line search).  Gives the
        descent a direction consistent with the energy to machine precision,
        where the trace-formula force is consistent only to the order of the
        scheme.
        """
        if not self.family.constant_potential:
            raise NotImplementedError(
                "discrete shape gradient assumes u-independent Dirichlet data"
            )
        p, hx, he = self.p, self.hx, self.heta
        nz2 = self.grid.n_z2
        grad = np.zeros(u.grid.n_dofs)
        gm = pf.gap
        keep_col = ~gm.contact
        keep = keep_col[:-1] & keep_col[1:]
        if not np.any(keep):
            return grad
        ix = np.nonzero(keep)[0]
        xq = (self.x[:-1, None] + _GP[None, :] * hx)[ix]          # (nkx, 2)
        self._bind(u)
        gq = (self._u(xq.ravel()) + p.H).reshape(-1, 2)
        dgq = self._du(xq.ravel()).reshape(-1, 2)
        etaq = self.eta[:-1, None] + _GP[None, :] * he            # (nz2, 2)
        g4 = np.broadcast_to(gq[None, :, None, :], (nz2, len(ix), 2, 2))
        eta4 = np.broadcast_to(etaq[:, None, :, None], (nz2, len(ix), 2, 2))
        b4 = -eta4 * dgq[None, :, None, :]

        def elem_vals(arr):
            return np.stack(
                [arr[:-1, :-1].ravel(), arr[:-1, 1:].ravel(), arr[1:, :-1].ravel(), arr[1:, 1:].ravel()],
                axis=1,
            )

        e2 = elem_vals(pf.psi2).reshape(nz2, len(gm.x) - 1, 4)[:, ix, :].reshape(-1, 4)
        px = (e2 @ _NXI / hx).reshape(nz2, len(ix), 2, 2)         # [jz, kx, qz, qx]
        pe = (e2 @ _NZE / he).reshape(nz2, len(ix), 2, 2)
        dI_dg = px**2 - (1.0 + b4**2) / g4**2 * pe**2
        dI_db = 2.0 * px * pe + 2.0 * b4 / g4 * pe**2
        W4 = _W.reshape(2, 2)[None, None, :, :]
        fac = -0.5 * p.sigma2 * hx * he
        # accumulate the vertical direction; leaves weights per x Gauss point
        Wg = fac * np.sum(dI_dg * W4, axis=(0, 2))                # (nkx, 2)
        Wb = fac * np.sum(dI_db * (-eta4) * W4, axis=(0, 2))      # (nkx, 2)

        # scatter onto the Hermite plate basis at the x Gauss points
        e_p, xi = u.grid.locate(xq.ravel())
        N0 = shape_functions(xi, u.grid.h, 0)
        N1 = shape_functions(xi, u.grid.h, 1)
        wflat_g = Wg.ravel()
        wflat_b = Wb.ravel()
        for a in range(4):
            np.add.at(grad, 2 * e_p + a, N0[a] * wflat_g + N1[a] * wflat_b)
        return grad

    def boundary_data_energy(self, u: PlateState) -> float:
        """Dirichlet form of the interpolated boundary data h_u (an upper bound witness)."""
        p, f = self.p, self.family
        self._bind(u)
        gm = self.gap_map(u)
        ux = self._u(self.x)
        h1 = f.h1(self.x[None, :], self.z1[:, None], ux[None, :])
        z2 = -p.H + self.eta[:, None] * gm.gamma[None, :]
        h2 = f.h2(self.x[None, :], z2, ux[None, :])
        if np.any(gm.contact):
            h2[:, gm.contact] = f.h1(self.x[gm.contact], -p.H, -p.H)[None, :]
        return 0.5 * self.form_value(h1, h2, gm)


def solve_potential(
    u: PlateState,
    family: BoundaryDataFamily,
    p: PhysicalParams,
    grid: FieldGrid = FieldGrid(),
    **kw,
) -> PotentialField:
    """One-shot transmission solve (builds a solver; prefer FieldSolver for loops)."""
    return FieldSolver(p, family, grid, **kw).solve(u)


def electrostatic_energy(
    pf: PotentialField, u: PlateState, p: PhysicalParams, family: BoundaryDataFamily,
    grid: FieldGrid = None, **kw,
) -> float:
    if grid is None:
        grid = FieldGrid(len(pf.x) - 1, len(pf.z1) - 1, len(pf.eta) - 1)
    return FieldSolver(p, family, grid, **kw).electrostatic_energy(pf, u)


def boundary_data_energy(
    u: PlateState, p: PhysicalParams, family: BoundaryDataFamily,
    grid: FieldGrid = FieldGrid(), **kw,
) -> float:
    return FieldSolver(p, family, grid, **kw).boundary_data_energy(u)


def check_max_principle(pf: PotentialField, tol: float = None, tol_lin: float = 1e-10) -> dict:
    """Interior potential must stay between the boundary data extremes."""
    if tol is None:
        tol = 1e-8 + tol_lin
    vals = [pf.psi1.min(), pf.psi1.max()]
    keep = ~pf.gap.contact
    if np.any(keep):
        vals += [pf.psi2[:, keep].min(), pf.psi2[:, keep].max()]
    lo, hi = float(min(vals)), float(max(vals))
    ok = (lo >= pf.boundary_inf - tol) and (hi <= pf.boundary_sup + tol)
    return {
        "psi_min": lo,
        "psi_max": hi,
        "boundary_inf": pf.boundary_inf,
        "boundary_sup": pf.boundary_sup,
        "tolerance": tol,
        "pass": bool(ok),
    }
