"""Explicit time stepping (forward Euler, Heun) with stability control."""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import Discretization, apply_bc, assemble
from .errors import NonFinite, NonpositiveDensity

SCHEMES = ("euler", "heun")


@dataclass(frozen=True)
class StepControl:
    """Time step limits and scheme selection.

    ``cfl_adv`` scales the acoustic/advective bound ``h / (|u|max + c_s)``,
    ``cfl_diff`` the diffusive bound ``h^2 / (2 d D_max)``. Energy decay of
    forward Euler on the reference states needs ``cfl_diff`` below 1
    (0.8 is used by the shipped configs).
    """

    cfl_adv: float = 0.5
    cfl_diff: float = 0.8
    dt_max: float = 1e-2
    rho_floor: float = 1e-10
    scheme: str = "euler"
    spatial: Discretization = field(default_factory=Discretization)

    def __post_init__(self):
        for name in ("cfl_adv", "cfl_diff"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if not self.rho_floor > 0:
            raise ValueError("rho_floor must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")


@dataclass(frozen=True)
class StepInfo:
    dt: float
    drift: float


def sound_speed_bound(rho, p):
    rmax = float(np.max(rho))
    c2 = p.gamma * rmax ** (p.gamma - 1.0)
    if p.delta > 0:
        c2 += p.delta * p.beta * rmax ** (p.beta - 1.0)
    return np.sqrt(c2)


def stable_dt(state, p, ctl):
    """min(dt_max, advective/acoustic bound, diffusive bound)."""
    rho = state.rho
    if not float(np.min(rho)) > 0:
        raise NonpositiveDensity("stable_dt needs positive density")
    grid = state.grid
    h = grid.hmin
    umax = float(np.max(np.sqrt(np.sum(state.u ** 2, axis=0))))
    dt_adv = ctl.cfl_adv * h / (umax + sound_speed_bound(rho, p))
    dmax = max(p.nu + abs(p.nu + p.lam), p.Gamma * p.L, p.eps)
    dt_diff = ctl.cfl_diff * h * h / (2.0 * grid.dim * dmax)
    return min(ctl.dt_max, dt_adv, dt_diff)


def _check(rho, u, q, floor):
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(u)) and np.all(np.isfinite(q))):
        raise NonFinite("non-finite value in fields")
    m = float(np.min(rho))
    if not m > floor:
        raise NonpositiveDensity(f"min density {m:g} fell to the floor {floor:g}")


def _stage(state, rho, m, q, floor):
    with np.errstate(all="ignore"):
        u = m / rho
    _check(rho, u, q, floor)
    return apply_bc(state.replace(rho=rho, u=u, q=q))


def advance(state, p, ctl, dt):
    """One step of size ``dt``; returns the new state and a :class:`StepInfo`."""
    _check(state.rho, state.u, state.q, ctl.rho_floor)
    disc = ctl.spatial
    m0 = state.rho * state.u
    r0 = assemble(state, p, disc)
    rho1 = state.rho + dt * r0.d_rho
    m1 = m0 + dt * r0.d_momentum
    q1 = state.q + dt * r0.d_q
    s1 = _stage(state, rho1, m1, q1, ctl.rho_floor)
    drift = r0.drift * dt
    if ctl.scheme == "heun":
        r1 = assemble(s1, p, disc)
        half = 0.5 * dt
        rho2 = state.rho + half * (r0.d_rho + r1.d_rho)
        m2 = m0 + half * (r0.d_momentum + r1.d_momentum)
        q2 = state.q + half * (r0.d_q + r1.d_q)
        s1 = _stage(state, rho2, m2, q2, ctl.rho_floor)
        drift = max(drift, r1.drift * dt)
    return s1.replace(t=state.t + dt, step=state.step + 1), StepInfo(dt, drift)


def step(state, p, ctl, dt=None):
    """Advance one stable step (or ``dt`` if given)."""
    if dt is None:
        dt = stable_dt(state, p, ctl)
    return advance(state, p, ctl, dt)[0]


def run(state, p, ctl, t_end, hooks=(), every=1, on_step=None, stop_when=None):
    """Step until ``t_end``; the last step is adjusted to land on it exactly.

    A step that would stop within ``1e-6 dt`` of ``t_end`` is stretched to
    reach it, so roundoff in the accumulated time never leaves a sliver step.

    Each hook is called as ``hook(state)`` after every ``every``-th step
    (counted by ``state.step``) with a read-only snapshot. ``on_step`` gets
    ``(state, info)`` after every step. The loop also ends early once
    ``stop_when(state)`` is true.
    """
    t_end = float(t_end)
    while state.t < t_end:
        dt = stable_dt(state, p, ctl)
        t_next = state.t + dt
        landing = False
        # absorb a roundoff-sized remainder instead of taking a sliver step
        if t_next >= t_end - 1e-6 * dt:
            landing = True
            if t_next != t_end:
                dt = t_end - state.t
        state, info = advance(state, p, ctl, dt)
        if landing:
            state = state.replace(t=t_end)
        state.freeze()
        if on_step is not None:
            on_step(state, info)
        if hooks and state.step % every == 0:
            for hook in hooks:
                hook(state)
        if stop_when is not None and stop_when(state):
            break
    return state
