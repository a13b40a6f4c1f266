"""State container and right-hand sides of the (regularized) coupled system.

Unknowns are the density ``rho``, velocity ``u`` and packed Q-tensor ``q``.
The momentum equation is advanced in conservative form (``m = rho u``).

Spatial choices that keep the discrete energy balance exact:

* all first derivatives use the summation-by-parts closure of
  :func:`qflow.grid.ddx`;
* convection uses the split form
  ``(div(m u) + m . grad u + u div m) / 2``, identical to ``div(rho u u)`` in
  the continuum but kinetic-energy neutral on the grid;
* the pressure force is ``rho grad h(rho)`` with ``h`` the enthalpy, the
  discrete adjoint of the mass flux;
* the elastic (Ericksen) force is taken as ``-(grad Q):H``, which equals
  ``-div(L gradQ.gradQ - F I)`` for smooth fields; the divergence form is kept
  as an option (``ericksen="divergence"``);
* the molecular field entering both stresses is zero on fixed wall nodes.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import tensor
from .energetics import (enthalpy, molecular_field_on_grid, pressure,
                         free_energy_density)
from .errors import NonpositiveDensity
from .grid import (ddx, divergence, divergence_tensor, face_diff, face_to_node_mean,
                   gradient, gradq_odot_gradq, laplacian, velocity_gradient, advect)

SBP = "sbp"


@dataclass(frozen=True)
class State:
    """Snapshot of the fields on ``grid`` at time ``t`` after ``step`` steps.

    ``q_bc`` holds the Dirichlet data for Q on box walls; only its wall
    values matter. It defaults to ``q`` itself.
    """

    grid: object
    rho: np.ndarray
    u: np.ndarray
    q: np.ndarray
    t: float = 0.0
    step: int = 0
    q_bc: np.ndarray = None

    def __post_init__(self):
        shape = self.grid.shape
        for name, lead in (("rho", ()), ("u", (3,)), ("q", (5,))):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != lead + shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {lead + shape}")
            object.__setattr__(self, name, arr)
        if self.q_bc is None:
            object.__setattr__(self, "q_bc", self.q)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "step", int(self.step))

    @property
    def momentum(self):
        return self.rho * self.u

    def replace(self, **kw):
        return replace(self, **kw)

    def freeze(self):
        """Mark the arrays read-only (handed to hooks)."""
        for arr in (self.rho, self.u, self.q):
            arr.flags.writeable = False
        return self


@dataclass(frozen=True)
class Discretization:
    """Spatial scheme options.

    ``rho_advection``: ``"upwind"`` (first-order donor-cell mass flux, robust
    for positivity) or ``"central"`` (energy-consistent). ``ericksen``:
    ``"force"`` or ``"divergence"``.
    """

    rho_advection: str = "upwind"
    ericksen: str = "force"

    def __post_init__(self):
        if self.rho_advection not in ("upwind", "central"):
            raise ValueError(f"rho_advection must be upwind|central, got {self.rho_advection!r}")
        if self.ericksen not in ("force", "divergence"):
            raise ValueError(f"ericksen must be force|divergence, got {self.ericksen!r}")


ENERGY_CONSISTENT = Discretization(rho_advection="central", ericksen="force")


@dataclass(frozen=True)
class Rhs:
    d_rho: np.ndarray
    d_momentum: np.ndarray
    d_q: np.ndarray
    drift: float = 0.0  # max |M - project_st(M)| of the assembled Q-rate matrix


def apply_bc(state):
    """Impose u = 0 and Q = Q_bc on box walls; rho keeps its free (Neumann) walls."""
    grid = state.grid
    if grid.periodic:
        return state
    wall = grid.boundary
    u = np.where(wall, 0.0, state.u)
    q = np.where(wall, state.q_bc, state.q)
    return state.replace(u=u, q=q)


def _check_rho(rho):
    m = float(np.min(rho))
    if not m > 0:
        raise NonpositiveDensity(f"min density {m:g} <= 0")


def vorticity(u, grid, closure="second_order"):
    """Skew part of the velocity gradient, (grad u - grad u^T)/2 with G_ij = d_j u_i."""
    g = velocity_gradient(u, grid, closure)
    return 0.5 * (g - tensor.transpose(g))


def mass_flux_divergence(rho, u, grid, scheme="central"):
    """div(rho u) in flux form; zero flux through box walls.

    ``"upwind"`` uses donor-cell face fluxes ``u_f * rho_upwind`` with
    ``u_f`` the face average of the normal velocity; wall nodes own half
    cells.
    """
    if scheme == "central":
        return divergence(rho * u, grid, closure=SBP)
    out = np.zeros_like(rho)
    for d in grid.active:
        h = grid.spacing[d]
        if grid.periodic:
            ul, rl = u[d], rho
            ur, rr = np.roll(u[d], -1, d), np.roll(rho, -1, d)
        else:
            n = grid.shape[d]
            ul, rl = u[d].take(range(n - 1), d), rho.take(range(n - 1), d)
            ur, rr = u[d].take(range(1, n), d), rho.take(range(1, n), d)
        uf = 0.5 * (ul + ur)
        flux = np.where(uf > 0, uf * rl, uf * rr)
        if grid.periodic:
            out += (flux - np.roll(flux, 1, d)) / h
            continue
        pad = [(0, 0)] * 3
        pad[d] = (1, 1)
        fp = np.pad(flux, pad)
        vol = grid.axis_weights(d).reshape([-1 if e == d else 1 for e in range(3)])
        out += np.diff(fp, axis=d) / vol
    return out


def continuity_rhs(state, p, disc=None):
    """-div(rho u) + eps lap rho."""
    disc = disc or Discretization()
    rho, grid = state.rho, state.grid
    out = -mass_flux_divergence(rho, state.u, grid, disc.rho_advection)
    if p.eps > 0:
        out += p.eps * laplacian(rho, grid, kind="neumann")
    return out


def ericksen_stress(q, grid, p, closure="second_order"):
    """Symmetric elastic stress L gradQ.gradQ - F(Q) I as a matrix field."""
    s = p.L * gradq_odot_gradq(q, grid, closure)
    f = free_energy_density(q, [ddx(q, grid, d, closure) for d in range(3)], p)
    for i in range(3):
        s[i, i] -= f
    return s


def skew_stress(q, h):
    """Q H - H Q for packed fields; skew-symmetric nodewise."""
    return tensor.commutator(tensor.to_matrix(q), tensor.to_matrix(h))


def _momentum(state, p, disc, h_field, g):
    grid = state.grid
    rho, u, q = state.rho, state.u, state.q
    m = rho * u
    # split convection
    flux = np.einsum("j...,i...->ji...", m, u)
    conv = divergence_tensor(flux, grid, SBP)
    conv += np.einsum("ji...,i...->j...", g, m)
    conv += u * divergence(m, grid, SBP)
    out = -0.5 * conv
    out -= rho * gradient(enthalpy(rho, p), grid, SBP)
    if p.eps > 0:
        for d in grid.active:
            fr = face_diff(rho, grid, d)
            out -= p.eps * face_to_node_mean(fr * face_diff(u, grid, d), grid, d)
    out += p.nu * laplacian(u, grid, kind="dirichlet")
    out += (p.nu + p.lam) * gradient(divergence(u, grid, SBP), grid, SBP)
    if disc.ericksen == "force":
        for i in grid.active:
            out[i] -= tensor.qdot(ddx(q, grid, i, SBP), h_field)
    else:
        out -= divergence_tensor(ericksen_stress(q, grid, p, SBP), grid, SBP)
    out += divergence_tensor(skew_stress(q, h_field), grid, SBP)
    if not grid.periodic:
        out = np.where(grid.interior, out, 0.0)
    return out


def _q_rate_matrix(state, p, h_field, g):
    grid = state.grid
    u, q = state.u, state.q
    qm = tensor.to_matrix(q)
    omega = 0.5 * (g - tensor.transpose(g))
    adv = tensor.to_matrix(advect(q, u, grid, "central", SBP))
    return -adv + tensor.commutator(omega, qm) + p.Gamma * tensor.to_matrix(h_field)


def momentum_rhs(state, p, disc=None):
    """Rate of change of rho u; zero on box walls."""
    disc = disc or Discretization()
    _check_rho(state.rho)
    h_field = molecular_field_on_grid(state.q, state.grid, p)
    g = velocity_gradient(state.u, state.grid, SBP)
    return _momentum(state, p, disc, h_field, g)


def q_rhs(state, p, disc=None):
    """-u.grad Q + Omega Q - Q Omega + Gamma H, projected and zero on walls."""
    h_field = molecular_field_on_grid(state.q, state.grid, p)
    g = velocity_gradient(state.u, state.grid, SBP)
    dq = tensor.project_st(_q_rate_matrix(state, p, h_field, g))
    if not state.grid.periodic:
        dq = np.where(state.grid.interior, dq, 0.0)
    return dq


def assemble(state, p, disc=None):
    """All three right-hand sides with shared intermediates."""
    disc = disc or Discretization()
    _check_rho(state.rho)
    grid = state.grid
    h_field = molecular_field_on_grid(state.q, grid, p)
    g = velocity_gradient(state.u, grid, SBP)
    d_rho = continuity_rhs(state, p, disc)
    d_m = _momentum(state, p, disc, h_field, g)
    mq = _q_rate_matrix(state, p, h_field, g)
    d_q = tensor.project_st(mq)
    if not grid.periodic:
        d_q = np.where(grid.interior, d_q, 0.0)
        mq = np.where(grid.interior, mq, 0.0)
    drift = float(np.max(np.abs(mq - tensor.to_matrix(d_q)))) if mq.size else 0.0
    return Rhs(d_rho, d_m, d_q, drift)


def effective_viscous_flux(state, p):
    """rho^gamma + delta rho^beta - (lambda + 2 nu) div u."""
    _check_rho(state.rho)
    div_u = divergence(state.u, state.grid, SBP)
    return pressure(state.rho, p) - (p.lam + 2.0 * p.nu) * div_u


def energy_exchange_terms(state, p):
    """Work of the skew stress on the flow and the matching corotational term.

    Returns ``(momentum_side, q_side)`` where ``momentum_side`` is
    ``sum w u . div(QH - HQ)`` and ``q_side`` is ``-sum w H:(Omega Q - Q Omega)``,
    the contribution of corotation to dG/dt. They cancel in the energy budget.
    """
    from .grid import integrate

    grid = state.grid
    h_field = molecular_field_on_grid(state.q, grid, p)
    force = divergence_tensor(skew_stress(state.q, h_field), grid, SBP)
    if not grid.periodic:
        force = np.where(grid.interior, force, 0.0)
    mom = float(integrate(np.sum(state.u * force, axis=0), grid))
    g = velocity_gradient(state.u, grid, SBP)
    omega = 0.5 * (g - tensor.transpose(g))
    rot = tensor.commutator(omega, tensor.to_matrix(state.q))
    if not grid.periodic:
        rot = np.where(grid.interior, rot, 0.0)
    qs = -float(integrate(tensor.contract(tensor.to_matrix(h_field), rot), grid))
    return mom, qs


__all__ = [
    "State", "Discretization", "ENERGY_CONSISTENT", "Rhs", "apply_bc", "vorticity",
    "continuity_rhs", "momentum_rhs", "q_rhs", "assemble", "effective_viscous_flux",
    "ericksen_stress", "skew_stress", "energy_exchange_terms",
]
