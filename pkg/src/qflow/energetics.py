"""Landau-de Gennes free energy, molecular field, total energy and dissipation.

The discrete energy and dissipation functionals here are the exact
counterparts of the spatial operators in :mod:`qflow.dynamics`: elastic and
viscous gradients are measured on cell faces, the Q-relaxation term on nodes
that carry Q unknowns, and the artificial-viscosity term through the
difference quotient of the enthalpy. With those choices the semi-discrete
system satisfies ``dE/dt = -D`` identically, and the only residual left in a
time-stepped run is the integrator's own truncation error.
"""

import logging
from dataclasses import dataclass, fields, asdict

import numpy as np

from . import tensor
from .errors import ConfigInvalid, NonpositiveDensity
from .grid import face_energy, face_energy_q, face_diff, divergence, integrate, laplacian

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Params:
    """Material and regularization constants of the nondimensional system.

    ``lam`` is the bulk viscosity (``"lambda"`` in config files). The
    constructor accepts any values so degenerate cases (``b = 0``, ``L = 0``)
    can be used in unit checks; :meth:`validate` enforces the admissible
    ranges for simulations.
    """

    nu: float = 0.1
    lam: float = 0.0
    a: float = -0.2
    b: float = 1.0
    c: float = 1.0
    L: float = 1.0
    Gamma: float = 1.0
    gamma: float = 2.0
    eps: float = 0.0
    delta: float = 0.0
    beta: float = 4.0

    def validate(self):
        """Raise :class:`ConfigInvalid` on inadmissible constants."""
        bad = []
        if not self.nu > 0:
            bad.append("nu must be > 0")
        if not 2 * self.nu + 3 * self.lam >= 0:
            bad.append("need 2 nu + 3 lambda >= 0")
        for name in ("b", "c", "L", "Gamma"):
            if not getattr(self, name) > 0:
                bad.append(f"{name} must be > 0")
        if not self.gamma > 1:
            bad.append("gamma must be > 1")
        if self.eps < 0 or self.delta < 0:
            bad.append("eps and delta must be >= 0")
        if self.delta > 0 and self.beta < 4:
            bad.append("beta must be >= 4 when delta > 0")
        for f in fields(self):
            if not np.isfinite(getattr(self, f.name)):
                bad.append(f"{f.name} is not finite")
        if bad:
            raise ConfigInvalid("; ".join(bad))
        if self.gamma <= 1.5:
            log.warning("gamma = %g <= 3/2: outside the range covered by the existence theory",
                        self.gamma)
        return self

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigInvalid(f"unknown params: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def replace(self, **kw):
        d = asdict(self)
        d.update(kw)
        return type(self)(**d)


@dataclass(frozen=True)
class EnergyReport:
    e_total: float
    e_kinetic: float
    e_pressure: float
    e_pressure_delta: float
    e_elastic_gradient: float
    e_elastic_bulk: float
    dissipation_viscous: float
    dissipation_relax: float
    dissipation_eps: float
    mass: float

    @property
    def e_elastic(self):
        return self.e_elastic_gradient + self.e_elastic_bulk

    @property
    def dissipation(self):
        return self.dissipation_viscous + self.dissipation_relax + self.dissipation_eps


@dataclass(frozen=True)
class Dissipation:
    viscous: float
    relax: float
    eps: float

    @property
    def total(self):
        return self.viscous + self.relax + self.eps


# ---------------------------------------------------------------------------
# pointwise


def bulk_potential(q, p):
    """(a/2) tr Q^2 - (b/3) tr Q^3 + (c/4) (tr Q^2)^2."""
    t2 = tensor.tr2(q)
    return 0.5 * p.a * t2 - p.b / 3.0 * tensor.tr3(q) + 0.25 * p.c * t2 * t2


def free_energy_density(q, gradq, p):
    """Bulk potential plus (L/2)|grad Q|^2; ``gradq[d]`` is the packed d-derivative."""
    g2 = sum(tensor.qdot(gradq[d], gradq[d]) for d in range(len(gradq)))
    return 0.5 * p.L * g2 + bulk_potential(q, p)


def bulk_field(q, p):
    """Molecular field without the elastic Laplacian, packed."""
    m = tensor.to_matrix(q)
    t2 = tensor.tr2(q)
    q2 = tensor.project_st(tensor.matmul(m, m))  # Q^2 - (I/3) tr Q^2
    return -p.a * q + p.b * q2 - p.c * t2 * q


def molecular_field(q, lap_q, p):
    """H = L lap Q - a Q + b (Q^2 - (I/3) tr Q^2) - c Q tr Q^2, packed."""
    return p.L * np.asarray(lap_q) + bulk_field(q, p)


def molecular_field_on_grid(q, grid, p, mask_boundary=True):
    """H with the compact Dirichlet Laplacian; zeroed on fixed wall nodes."""
    h = molecular_field(q, laplacian(q, grid, kind="dirichlet"), p)
    if mask_boundary and not grid.periodic:
        h = np.where(grid.interior, h, 0.0)
    return h


def energy_lower_bound(p, volume):
    """-(b^2 - c a)^2 / (2 c^3) |U|, the floor of the total energy."""
    return -((p.b ** 2 - p.c * p.a) ** 2) / (2.0 * p.c ** 3) * volume


def check_trace_cubic_bound(q, eps_param):
    """Whether tr Q^3 <= (3e/8) tr(Q^2)^2 + (3/2e) tr Q^2 (elementwise for fields)."""
    if not eps_param > 0:
        raise ValueError("eps_param must be positive")
    lhs = tensor.tr3(q)
    rhs = tensor.trace_cubic_bound(q, eps_param)
    # the bound is tight along uniaxial rays; allow relative roundoff
    return lhs <= rhs + 1e-12 * np.maximum(1.0, np.abs(rhs))


def pressure(rho, p):
    out = rho ** p.gamma
    if p.delta > 0:
        out = out + p.delta * rho ** p.beta
    return out


def internal_energy_density(rho, p):
    """rho^gamma/(gamma-1) and the artificial part delta rho^beta/(beta-1)."""
    main = rho ** p.gamma / (p.gamma - 1.0)
    art = p.delta * rho ** p.beta / (p.beta - 1.0) if p.delta > 0 else np.zeros_like(rho)
    return main, art


def enthalpy(rho, p):
    """Derivative of the internal energy density with respect to rho."""
    out = p.gamma / (p.gamma - 1.0) * rho ** (p.gamma - 1.0)
    if p.delta > 0:
        out = out + p.delta * p.beta / (p.beta - 1.0) * rho ** (p.beta - 1.0)
    return out


# ---------------------------------------------------------------------------
# functionals over a state


def _require_positive(rho):
    m = float(np.min(rho))
    if not m > 0:
        raise NonpositiveDensity(f"min density {m:g} <= 0")


def dissipation(state, p, h_field=None):
    """Viscous, relaxational and artificial-viscosity dissipation rates."""
    grid = state.grid
    rho, u = state.rho, state.u
    _require_positive(rho)
    div_u = divergence(u, grid, closure="sbp")
    viscous = p.nu * face_energy(u, grid) + (p.nu + p.lam) * float(integrate(div_u * div_u, grid))
    if h_field is None:
        h_field = molecular_field_on_grid(state.q, grid, p)
    relax = p.Gamma * float(integrate(tensor.qdot(h_field, h_field), grid))
    eps = 0.0
    if p.eps > 0:
        # difference quotient of the enthalpy ~ gamma rho^(gamma-2) + delta beta rho^(beta-2)
        hr = enthalpy(rho, p)
        for d in grid.active:
            eps += float(np.sum(grid.face_weights(d) * face_diff(hr, grid, d) * face_diff(rho, grid, d)))
        eps *= p.eps
    return Dissipation(viscous, relax, eps)


def total_energy(state, p, h_field=None):
    """Decomposed total energy and dissipation of ``state``."""
    grid = state.grid
    rho, u, q = state.rho, state.u, state.q
    _require_positive(rho)
    kin = 0.5 * float(integrate(rho * np.sum(u * u, axis=0), grid))
    main, art = internal_energy_density(rho, p)
    e_p = float(integrate(main, grid))
    e_pd = float(integrate(art, grid))
    e_grad = 0.5 * p.L * face_energy_q(q, grid)
    e_bulk = float(integrate(bulk_potential(q, p), grid))
    diss = dissipation(state, p, h_field)
    return EnergyReport(
        e_total=kin + e_p + e_pd + e_grad + e_bulk,
        e_kinetic=kin,
        e_pressure=e_p,
        e_pressure_delta=e_pd,
        e_elastic_gradient=e_grad,
        e_elastic_bulk=e_bulk,
        dissipation_viscous=diss.viscous,
        dissipation_relax=diss.relax,
        dissipation_eps=diss.eps,
        mass=float(integrate(rho, grid)),
    )


def uniaxial_equilibrium_order(p):
    """Largest scalar order s with H(s (n n - I/3)) = 0 for the bulk terms.

    Solves 2 c s^2 - b s + 3 a = 0; returns 0 when no nematic root exists.
    """
    disc = p.b ** 2 - 24.0 * p.a * p.c
    if disc < 0 or p.c <= 0:
        return 0.0
    return (p.b + np.sqrt(disc)) / (4.0 * p.c)
