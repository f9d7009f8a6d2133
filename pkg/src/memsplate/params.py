"""Device parameters, boundary-data families, and derived constants.

The builtin boundary family is the one-dimensional transmission profile
(the potential that is linear-in-z within each dielectric for a flat plate):

    h1(x, z, w) = V s2 (z + H + d) / (s2 d + s1 (w + H))        in the layer,
    h2(x, z, w) = V (s1 (z + H) + s2 d) / (s2 d + s1 (w + H))   in the gap,

which satisfies the interface matching and flux-matching identities exactly,
grounds the bottom electrode, and holds the plate at potential V.  Growth
and trace constants used by the energy regularization are certified by grid
maximization over the working deflection range and inflated by a small
safety factor.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Union

import numpy as np

from .bounds import kappa0_bound
from .errors import AssumptionViolated, NonConstantPermittivity, UnboundedGrowth

__all__ = [
    "PhysicalParams",
    "BoundaryDataFamily",
    "DerivedConstants",
    "build_canonical_boundary_data",
    "build_varying_potential_family",
    "family_invariant_report",
    "validate_family",
    "compute_m_constants",
    "compute_K_and_G0",
    "compute_A",
    "sigma_bar",
    "derive_constants",
    "EPS_M",
]

EPS_M = 1e-12  # floor for certified constants that are structurally zero

SAFETY = 1.05  # inflation factor on grid-maximized constants

Sigma1 = Union[float, Callable[[np.ndarray, np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class PhysicalParams:
    """Physical device parameters.

    The super-quadratic stretching coefficient is fixed to zero throughout;
    tension enters only through the quadratic term tau.
    """

    beta: float = 1.0
    tau: float = 0.0
    L: float = 1.0
    H: float = 1.0
    d: float = 1.0
    sigma2: float = 1.0
    V: float = 1.0
    sigma1: Sigma1 = 1.0

    def __post_init__(self):
        checks = [
            (self.beta > 0.0, "beta must be > 0"),
            (self.tau >= 0.0, "tau must be >= 0"),
            (self.L > 0.0, "L must be > 0"),
            (self.H > 0.0, "H must be > 0"),
            (self.d > 0.0, "d must be > 0"),
            (self.sigma2 > 0.0, "sigma2 must be > 0"),
            (self.V >= 0.0, "V must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)
        if self.sigma1_is_constant:
            if not float(self.sigma1) > 0.0:  # type: ignore[arg-type]
                raise ValueError("sigma1 must be > 0")
        else:
            if self.sigma1_min() <= 0.0:
                raise ValueError("sigma1 must be positive throughout the layer")

    @property
    def sigma1_is_constant(self) -> bool:
        return not callable(self.sigma1)

    def sigma1_at(self, x, z) -> np.ndarray:
        if self.sigma1_is_constant:
            return np.broadcast_to(float(self.sigma1), np.broadcast(x, z).shape).copy()  # type: ignore[arg-type]
        return np.asarray(self.sigma1(np.asarray(x, float), np.asarray(z, float)), dtype=float)

    def _sigma1_samples(self, n: int = 64) -> np.ndarray:
        x = np.linspace(-self.L, self.L, n)
        z = np.linspace(-self.H - self.d, -self.H, n)
        return self.sigma1_at(x[:, None], z[None, :])

    def sigma1_min(self) -> float:
        if self.sigma1_is_constant:
            return float(self.sigma1)  # type: ignore[arg-type]
        return float(self._sigma1_samples().min())

    def sigma1_max(self) -> float:
        if self.sigma1_is_constant:
            return float(self.sigma1)  # type: ignore[arg-type]
        return float(self._sigma1_samples().max())

    def with_V(self, V: float) -> "PhysicalParams":
        return replace(self, V=float(V))


def sigma_bar(p: PhysicalParams) -> float:
    """max of the layer permittivity sup and the gap permittivity."""
    return max(p.sigma1_max(), p.sigma2)


@dataclass(frozen=True)
class BoundaryDataFamily:
    """Dirichlet data h1 (layer) / h2 (gap) with closed-form first partials.

    All callables take (x, z, w) and broadcast; w is the plate deflection at
    the column being evaluated.  ``constant_potential`` records whether the
    bottom electrode is grounded and the plate held at the fixed value V.
    """

    h1: Callable
    h2: Callable
    dx_h1: Callable
    dz_h1: Callable
    dw_h1: Callable
    dx_h2: Callable
    dz_h2: Callable
    dw_h2: Callable
    tag: str
    V: float
    constant_potential: bool = True

    @property
    def is_canonical(self) -> bool:
        return self.tag == "builtin-canonical"


def _bcast(x, z, w):
    return np.broadcast_arrays(np.asarray(x, float), np.asarray(z, float), np.asarray(w, float))


def build_canonical_boundary_data(p: PhysicalParams) -> BoundaryDataFamily:
    """Builtin transmission-profile family; requires a spatially uniform layer."""
    if not p.sigma1_is_constant:
        raise NonConstantPermittivity(
            "builtin boundary family needs constant sigma1; supply a family explicitly"
        )
    s1 = float(p.sigma1)  # type: ignore[arg-type]
    s2, d, H, V = p.sigma2, p.d, p.H, p.V

    def denom(w):
        return s2 * d + s1 * (w + H)

    def h1(x, z, w):
        x, z, w = _bcast(x, z, w)
        return V * s2 * (z + H + d) / denom(w)

    def h2(x, z, w):
        x, z, w = _bcast(x, z, w)
        return V * (s1 * (z + H) + s2 * d) / denom(w)

    def zero(x, z, w):
        x, z, w = _bcast(x, z, w)
        return np.zeros_like(z)

    def dz_h1(x, z, w):
        x, z, w = _bcast(x, z, w)
        return V * s2 / denom(w) + 0.0 * z

    def dw_h1(x, z, w):
        x, z, w = _bcast(x, z, w)
        return -V * s2 * s1 * (z + H + d) / denom(w) ** 2

    def dz_h2(x, z, w):
        x, z, w = _bcast(x, z, w)
        return V * s1 / denom(w) + 0.0 * z

    def dw_h2(x, z, w):
        x, z, w = _bcast(x, z, w)
        return -V * s1 * (s1 * (z + H) + s2 * d) / denom(w) ** 2

    return BoundaryDataFamily(
        h1=h1, h2=h2,
        dx_h1=zero, dz_h1=dz_h1, dw_h1=dw_h1,
        dx_h2=zero, dz_h2=dz_h2, dw_h2=dw_h2,
        tag="builtin-canonical", V=V, constant_potential=True,
    )


def build_varying_potential_family(p: PhysicalParams, v_of_x: Callable, dv_of_x: Callable) -> BoundaryDataFamily:
    """Transmission profile driven by an x-dependent plate potential v(x).

    Keeps interface matching, flux matching, and grounding exactly, but the
    plate is no longer at a constant potential, so the trace constant K is
    genuinely positive.  Useful as a nontrivial admissible family in tests.
    """
    if not p.sigma1_is_constant:
        raise NonConstantPermittivity("varying-potential family needs constant sigma1")
    s1 = float(p.sigma1)  # type: ignore[arg-type]
    s2, d, H = p.sigma2, p.d, p.H

    def denom(w):
        return s2 * d + s1 * (w + H)

    def h1(x, z, w):
        x, z, w = _bcast(x, z, w)
        return v_of_x(x) * s2 * (z + H + d) / denom(w)

    def h2(x, z, w):
        x, z, w = _bcast(x, z, w)
        return v_of_x(x) * (s1 * (z + H) + s2 * d) / denom(w)

    def dx_h1(x, z, w):
        x, z, w = _bcast(x, z, w)
        return dv_of_x(x) * s2 * (z + H + d) / denom(w)

    def dz_h1(x, z, w):
        x, z, w = _bcast(x, z, w)
        return v_of_x(x) * s2 / denom(w) + 0.0 * z

    def dw_h1(x, z, w):
        x, z, w = _bcast(x, z, w)
        return -v_of_x(x) * s2 * s1 * (z + H + d) / denom(w) ** 2

    def dx_h2(x, z, w):
        x, z, w = _bcast(x, z, w)
        return dv_of_x(x) * (s1 * (z + H) + s2 * d) / denom(w)

    def dz_h2(x, z, w):
        x, z, w = _bcast(x, z, w)
        return v_of_x(x) * s1 / denom(w) + 0.0 * z

    def dw_h2(x, z, w):
        x, z, w = _bcast(x, z, w)
        return -v_of_x(x) * s1 * (s1 * (z + H) + s2 * d) / denom(w) ** 2

    return BoundaryDataFamily(
        h1=h1, h2=h2,
        dx_h1=dx_h1, dz_h1=dz_h1, dw_h1=dw_h1,
        dx_h2=dx_h2, dz_h2=dz_h2, dw_h2=dw_h2,
        tag="user-supplied", V=p.V, constant_potential=False,
    )


def family_invariant_report(f: BoundaryDataFamily, p: PhysicalParams, w_max: float = None, n: int = 41) -> dict:
    """Max violation of the structural identities on a sample grid.

    'matching' and 'flux' are required of every family; 'grounding' and
    'plate_value' additionally hold for constant-potential families.
    """
    w_hi = 2.0 * p.H if w_max is None else w_max
    x = np.linspace(-p.L, p.L, n)[:, None]
    w = np.linspace(-p.H, w_hi, n)[None, :]
    zi = -p.H
    s1_iface = p.sigma1_at(x, np.full_like(x, zi))
    matching = np.max(np.abs(f.h1(x, zi, w) - f.h2(x, zi, w)))
    flux = np.max(np.abs(s1_iface * f.dz_h1(x, zi, w) - p.sigma2 * f.dz_h2(x, zi, w)))
    grounding = np.max(np.abs(f.h1(x, -p.H - p.d, w)))
    plate = np.max(np.abs(f.h2(x, w, w) - f.V))
    return {
        "matching": float(matching),
        "flux": float(flux),
        "grounding": float(grounding),
        "plate_value": float(plate),
    }


def validate_family(f: BoundaryDataFamily, p: PhysicalParams, tol: float = 1e-10) -> dict:
    """Raise AssumptionViolated when a required identity fails beyond tol."""
    rep = family_invariant_report(f, p)
    scale = max(1.0, abs(f.V))
    for key in ("matching", "flux"):
        if rep[key] > tol * scale:
            raise AssumptionViolated(f"boundary family violates {key} identity: {rep[key]:.3e}")
    if f.constant_potential:
        for key in ("grounding", "plate_value"):
            if rep[key] > tol * scale:
                raise AssumptionViolated(
                    f"family tagged constant-potential but violates {key}: {rep[key]:.3e}"
                )
    return rep


def _refined_max(eval_on_w, w_lo: float, w_hi: float, n_w: int = 601, passes: int = 3) -> float:
    """Max over w of eval_on_w(w_array) with local grid refinement around the argmax."""
    lo, hi = w_lo, w_hi
    best = -np.inf
    for _ in range(passes):
        w = np.linspace(lo, hi, n_w)
        vals = eval_on_w(w)
        i = int(np.argmax(vals))
        best = max(best, float(vals[i]))
        dw = (hi - lo) / (n_w - 1)
        lo = max(w_lo, w[i] - 2.0 * dw)
        hi = min(w_hi, w[i] + 2.0 * dw)
        n_w = 101
        if hi <= lo:
            break
    return best


def _check_bounded(eval_on_w, w_lo: float, w_hi: float, label: str):
    coarse = _refined_max(eval_on_w, w_lo, w_hi, n_w=301, passes=1)
    fine = _refined_max(eval_on_w, w_lo, w_hi, n_w=601, passes=1)
    if not np.isfinite(fine) or fine > 1.25 * max(coarse, EPS_M):
        raise UnboundedGrowth(
            f"{label} keeps growing under grid refinement ({coarse:.3e} -> {fine:.3e})"
        )


def compute_m_constants(
    f: BoundaryDataFamily, p: PhysicalParams, w_max: float, n_x: int = 33, n_zt: int = 41
) -> tuple[float, float, float]:
    """Growth constants (m1, m2, m3) certified on deflections in [-H, w_max].

    m2 is pinned to the floor and m1 absorbs the whole (x, z, w) dependence on
    the certified range; the gap-side ratios weight the squared gradient by
    the local gap height.  Gap evaluations use z between the interface and the
    plate, the only region where the gap data is ever sampled.
    """
    if w_max < p.H:
        raise ValueError("w_max must cover at least the gap height")
    x = np.linspace(-p.L, p.L, n_x)[:, None, None]
    z1 = np.linspace(-p.H - p.d, -p.H, n_zt)[None, :, None]
    t = np.linspace(0.0, 1.0, n_zt)[None, :, None]

    def layer_ratio(w):
        w = w[None, None, :]
        return np.max((np.abs(f.dx_h1(x, z1, w)) + np.abs(f.dz_h1(x, z1, w))) ** 2, axis=(0, 1))

    def gap_ratio(w):
        w = w[None, None, :]
        z = -p.H + t * (w + p.H)
        r = (np.abs(f.dx_h2(x, z, w)) + np.abs(f.dz_h2(x, z, w))) ** 2 * (p.H + w)
        return np.max(r, axis=(0, 1))

    def layer_w_ratio(w):
        w = w[None, None, :]
        return np.max(f.dw_h1(x, z1, w) ** 2, axis=(0, 1))

    def gap_w_ratio(w):
        w = w[None, None, :]
        z = -p.H + t * (w + p.H)
        return np.max(f.dw_h2(x, z, w) ** 2 * (p.H + w), axis=(0, 1))

    for fn, label in [(layer_ratio, "m1 (layer)"), (gap_ratio, "m1 (gap)"),
                      (layer_w_ratio, "m3 (layer)"), (gap_w_ratio, "m3 (gap)")]:
        _check_bounded(fn, -p.H, w_max, label)

    m2 = EPS_M
    m1_raw = max(_refined_max(layer_ratio, -p.H, w_max), _refined_max(gap_ratio, -p.H, w_max))
    m3_raw = max(_refined_max(layer_w_ratio, -p.H, w_max), _refined_max(gap_w_ratio, -p.H, w_max))
    m1 = max(EPS_M, SAFETY * m1_raw)
    m3 = max(EPS_M, SAFETY * m3_raw)
    return m1, m2, m3


def compute_K_and_G0(
    f: BoundaryDataFamily, p: PhysicalParams, w_max: float, n_x: int = 101
) -> tuple[float, float]:
    """Plate-trace gradient bound K and the force floor magnitude G0 = sigma2 K^2."""
    x = np.linspace(-p.L, p.L, n_x)[:, None]
    wchk = np.linspace(-p.H, w_max, 101)[None, :]
    kb0 = np.max(np.abs(f.dw_h1(x, -p.H - p.d, wchk)))
    if kb0 > 1e-10 * max(1.0, abs(f.V)):
        raise AssumptionViolated(
            f"dw_h1 at the grounded electrode must vanish; measured {kb0:.3e}"
        )

    def trace(w):
        w = w[None, :]
        return np.max(
            np.abs(f.dx_h2(x, w, w)) + np.abs(f.dz_h2(x, w, w) + f.dw_h2(x, w, w)), axis=0
        )

    _check_bounded(trace, -p.H, w_max, "K")
    K = max(EPS_M, SAFETY * _refined_max(trace, -p.H, w_max))
    return K, p.sigma2 * K**2


def compute_A(m2: float, m3: float, sbar: float, d: float, beta: float) -> float:
    """Regularization strength: 8 (d+1) sbar (3 m2 / 2 + m3^2 (d+1) sbar / beta)."""
    if m2 < 0 or m3 < 0 or sbar < 0:
        raise ValueError("m2, m3, sigma_bar must be nonnegative")
    return 8.0 * (d + 1.0) * sbar * (1.5 * m2 + m3**2 * (d + 1.0) * sbar / beta)


@dataclass(frozen=True)
class DerivedConstants:
    """Constants derived from (params, family) on the working range [-H, w_max]."""

    sigma_bar: float
    m1: float
    m2: float
    m3: float
    K: float
    G0: float
    A: float
    kappa0: float
    w_max: float
    eps_m: float = EPS_M

    def as_dict(self) -> dict:
        return {
            "sigma_bar": self.sigma_bar, "m1": self.m1, "m2": self.m2, "m3": self.m3,
            "K": self.K, "G0": self.G0, "A": self.A, "kappa0": self.kappa0,
            "w_max": self.w_max, "eps_m": self.eps_m,
        }


def derive_constants(p: PhysicalParams, f: BoundaryDataFamily, w_max: float = None) -> DerivedConstants:
    """All derived constants, with the working range fixed by a short fixed point.

    The trace bound K is certified on [-H, w_max] while w_max itself is set
    from the sup bound kappa0(G0(K)); iterating the pair settles in a few
    rounds because K is nondecreasing in the range.
    """
    sbar = sigma_bar(p)
    w0 = w_max if w_max is not None else 2.0 * max(p.H, kappa0_bound(p.beta, p.tau, p.L, p.H, 0.0))
    K = G0 = kappa0 = None
    for _ in range(8):
        K, G0 = compute_K_and_G0(f, p, w0)
        kappa0 = kappa0_bound(p.beta, p.tau, p.L, p.H, G0)
        w_new = 2.0 * max(kappa0, p.H)
        if w_max is not None or w_new <= w0 * (1.0 + 1e-9):
            w0 = max(w0, w_new) if w_max is None else w0
            break
        w0 = w_new
    else:
        raise UnboundedGrowth("working range for the trace bound did not settle")
    m1, m2, m3 = compute_m_constants(f, p, w0)
    A = compute_A(m2, m3, sbar, p.d, p.beta)
    return DerivedConstants(
        sigma_bar=sbar, m1=m1, m2=m2, m3=m3, K=K, G0=G0, A=A, kappa0=kappa0, w_max=w0
    )
