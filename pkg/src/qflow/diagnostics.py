"""Per-step diagnostics: energy budget, norms, steady-state and a-priori checks."""

import math
from dataclasses import dataclass, fields, astuple

import numpy as np

from . import tensor
from .dynamics import effective_viscous_flux
from .energetics import energy_lower_bound, molecular_field_on_grid, total_energy
from .grid import integrate, velocity_gradient


def theta_exponent(gamma):
    """Half of the admissible supremum min{1, gamma/3, 2 gamma/3 - 1}."""
    return 0.5 * min(1.0, gamma / 3.0, 2.0 * gamma / 3.0 - 1.0)


@dataclass(frozen=True)
class DiagnosticsRecord:
    step: int
    time: float
    mass: float
    e_total: float
    e_kinetic: float
    e_pressure: float
    e_pressure_delta: float
    e_elastic: float
    dissipation: float
    energy_residual: float
    min_rho: float
    max_abs_trQ: float
    l2_u: float
    h1_u: float
    l2_H: float
    l2_rho_dev: float
    lgamma_theta_rho: float
    evf_mean: float
    evf_var: float

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def row(self):
        return astuple(self)


def record(state, p, prev=None):
    """Diagnostics of ``state``.

    ``energy_residual`` is ``(E - prev.e_total)/(t - prev.time) + prev.dissipation``,
    the one-sided discrete form of the energy law; it is NaN without ``prev``.
    """
    grid = state.grid
    h_field = molecular_field_on_grid(state.q, grid, p)
    rep = total_energy(state, p, h_field)
    diss = rep.dissipation
    span = state.t - prev.time if prev is not None else 0.0
    if prev is not None and span > 0:
        resid = (rep.e_total - prev.e_total) / span + prev.dissipation
    elif prev is not None:
        resid = 0.0
    else:
        resid = math.nan

    rho, u = state.rho, state.u
    mean_rho = rep.mass / grid.volume
    trq = tensor.to_matrix(state.q)
    tr = np.abs(trq[0, 0] + trq[1, 1] + trq[2, 2])
    g = velocity_gradient(u, grid, "sbp")
    evf = effective_viscous_flux(state, p)
    evf_mean = float(integrate(evf, grid)) / grid.volume
    evf_var = float(integrate((evf - evf_mean) ** 2, grid)) / grid.volume
    theta = theta_exponent(p.gamma)
    return DiagnosticsRecord(
        step=state.step,
        time=state.t,
        mass=rep.mass,
        e_total=rep.e_total,
        e_kinetic=rep.e_kinetic,
        e_pressure=rep.e_pressure,
        e_pressure_delta=rep.e_pressure_delta,
        e_elastic=rep.e_elastic,
        dissipation=diss,
        energy_residual=resid,
        min_rho=float(np.min(rho)),
        max_abs_trQ=float(np.max(tr)),
        l2_u=math.sqrt(float(integrate(np.sum(u * u, axis=0), grid))),
        h1_u=math.sqrt(float(integrate(np.sum(g * g, axis=(0, 1)), grid))),
        l2_H=math.sqrt(float(integrate(tensor.qdot(h_field, h_field), grid))),
        l2_rho_dev=math.sqrt(float(integrate((rho - mean_rho) ** 2, grid))),
        lgamma_theta_rho=float(integrate(rho ** (p.gamma + theta), grid)),
        evf_mean=evf_mean,
        evf_var=evf_var,
    )


def steady_state_check(rec, tol, volume=1.0):
    """True when velocity, molecular field and density deviation are below ``tol``.

    The density deviation is compared with ``tol * mass / volume``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    return bool(rec.l2_u < tol and rec.l2_H < tol
                and rec.l2_rho_dev < tol * rec.mass / volume)


@dataclass
class BoundsReport:
    passed: bool
    first_violation: int = None  # index into the series
    kind: str = ""
    message: str = ""
    lower_bound: float = 0.0
    dissipated: float = 0.0
    energy_drop: float = 0.0

    def to_dict(self):
        return dict(self.__dict__)


def apriori_bounds_check(records, p, e0=None, volume=1.0, atol=1e-9, rtol=0.05):
    """Check monotone decay, the energy floor and the dissipation budget.

    The budget test compares the trapezoidal time integral of the recorded
    dissipation with ``e0 - E(t)``; explicit stepping and the sampling of D
    make them differ slightly, which ``atol + rtol * integral`` absorbs.
    """
    records = list(records)
    if not records:
        raise ValueError("empty series")
    if e0 is None:
        e0 = records[0].e_total
    floor = energy_lower_bound(p, volume)
    rep = BoundsReport(passed=True, lower_bound=floor)
    integral = 0.0
    for i, rec in enumerate(records):
        if i > 0:
            prev = records[i - 1]
            integral += 0.5 * (prev.dissipation + rec.dissipation) * (rec.time - prev.time)
        if rec.e_total > e0 + atol:
            return _fail(rep, i, "increase", f"E={rec.e_total!r} exceeds E0={e0!r}")
        if i > 0 and rec.e_total > records[i - 1].e_total + atol:
            return _fail(rep, i, "increase",
                         f"E rose from {records[i - 1].e_total!r} to {rec.e_total!r}")
        if rec.e_total < floor - 1e-10:
            return _fail(rep, i, "lower_bound", f"E={rec.e_total!r} below floor {floor!r}")
        drop = e0 - rec.e_total
        if integral > drop + atol + rtol * integral:
            return _fail(rep, i, "budget",
                         f"dissipated {integral!r} exceeds energy drop {drop!r}")
    rep.dissipated = integral
    rep.energy_drop = e0 - records[-1].e_total
    return rep


def _fail(rep, i, kind, msg):
    rep.passed = False
    rep.first_violation = i
    rep.kind = kind
    rep.message = msg
    return rep
