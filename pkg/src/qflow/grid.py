"""Structured collocated grid, boundary handling and discrete operators.

Fields are plain float64 arrays whose last three axes are the spatial node
indices ``(x, y, z)``; leading axes hold components (3 for vectors, 5 for
packed Q-tensors, ``(3, 3)`` for matrix fields). An axis with a single node is
inactive: derivatives along it vanish, which is how 2D runs are expressed.

Two first-derivative closures exist for box grids. ``"second_order"`` uses the
one-sided three-point formula at walls. ``"sbp"`` uses the two-point one-sided
difference, which together with the trapezoidal node weights of
:meth:`Grid.weights` satisfies summation by parts::

    sum(w * f * D g) = -sum(w * g * D f) + [f g]_walls

The solver relies on the ``"sbp"`` form so that the discrete energy balance
closes without spatial defect.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .tensor import qdot

BC_MODES = ("box", "periodic")


def _sl(ndim, ax, s):
    idx = [slice(None)] * ndim
    idx[ax] = s
    return tuple(idx)


@dataclass(frozen=True)
class Grid:
    """Rectangular lattice of ``shape`` nodes with uniform ``spacing``.

    In box mode the nodes include both walls, so the domain length along an
    active axis is ``(n - 1) * h``; in periodic mode it is ``n * h``. Inactive
    axes (``n == 1``) contribute a slab thickness ``h`` to volumes.
    """

    shape: tuple
    spacing: tuple
    bc: str = "box"

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        spacing = tuple(float(h) for h in self.spacing)
        if len(shape) != 3 or len(spacing) != 3:
            raise ValueError("shape and spacing need three entries (use 1 for inactive axes)")
        if self.bc not in BC_MODES:
            raise ValueError(f"bc must be one of {BC_MODES}, got {self.bc!r}")
        if any(h <= 0 or not np.isfinite(h) for h in spacing):
            raise ValueError(f"spacings must be positive, got {spacing}")
        if any(n < 1 for n in shape) or any(1 < n < 3 for n in shape):
            raise ValueError(f"active axes need at least 3 nodes, got {shape}")
        if all(n == 1 for n in shape):
            raise ValueError("grid has no active axis")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)

    @classmethod
    def from_lengths(cls, shape, lengths, bc="box"):
        """Build a grid covering ``lengths`` (slab thickness for inactive axes)."""
        spacing = []
        for n, length in zip(shape, lengths):
            if n == 1:
                spacing.append(float(length))
            elif bc == "box":
                spacing.append(float(length) / (n - 1))
            else:
                spacing.append(float(length) / n)
        return cls(tuple(shape), tuple(spacing), bc)

    @property
    def periodic(self):
        return self.bc == "periodic"

    @cached_property
    def active(self):
        return tuple(d for d in range(3) if self.shape[d] > 1)

    @property
    def dim(self):
        return len(self.active)

    @cached_property
    def lengths(self):
        out = []
        for n, h in zip(self.shape, self.spacing):
            if n == 1 or self.periodic:
                out.append(n * h)
            else:
                out.append((n - 1) * h)
        return tuple(out)

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    @property
    def hmin(self):
        return min(self.spacing[d] for d in self.active)

    def axis_weights(self, d):
        n, h = self.shape[d], self.spacing[d]
        w = np.full(n, h)
        if n > 1 and not self.periodic:
            w[0] = w[-1] = 0.5 * h
        return w

    @cached_property
    def weights(self):
        """Quadrature weight of every node (trapezoidal at box walls)."""
        wx, wy, wz = (self.axis_weights(d) for d in range(3))
        w = wx[:, None, None] * wy[None, :, None] * wz[None, None, :]
        w.flags.writeable = False
        return w

    def face_weights(self, d):
        """Weights of the faces between neighbours along axis ``d``."""
        parts = []
        for e in range(3):
            if e == d:
                nf = self.shape[d] if self.periodic else self.shape[d] - 1
                parts.append(np.full(nf, self.spacing[d]))
            else:
                parts.append(self.axis_weights(e))
        return parts[0][:, None, None] * parts[1][None, :, None] * parts[2][None, None, :]

    @cached_property
    def interior(self):
        """Mask of nodes that carry unknowns for Dirichlet fields."""
        mask = np.ones(self.shape, dtype=bool)
        if not self.periodic:
            for d in self.active:
                mask[_sl(3, d, 0)] = False
                mask[_sl(3, d, -1)] = False
        mask.flags.writeable = False
        return mask

    @cached_property
    def boundary(self):
        b = ~self.interior
        b.flags.writeable = False
        return b

    def coords(self):
        """Node coordinates as an array of shape ``(3, nx, ny, nz)``."""
        axes = [np.arange(n) * h for n, h in zip(self.shape, self.spacing)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    def zeros(self, *components):
        return np.zeros(tuple(components) + self.shape)

    def describe(self):
        return {"shape": list(self.shape), "spacing": list(self.spacing), "bc": self.bc}


# ---------------------------------------------------------------------------
# first derivatives


def ddx(f, grid, d, closure="sbp"):
    """Derivative of ``f`` along spatial axis ``d`` (central in the interior)."""
    f = np.asarray(f, dtype=np.float64)
    if grid.shape[d] == 1:
        return np.zeros_like(f)
    h = grid.spacing[d]
    nd = f.ndim
    ax = nd - 3 + d
    if grid.periodic:
        return (np.roll(f, -1, ax) - np.roll(f, 1, ax)) / (2.0 * h)
    out = np.empty_like(f)
    out[_sl(nd, ax, slice(1, -1))] = (f[_sl(nd, ax, slice(2, None))]
                                      - f[_sl(nd, ax, slice(None, -2))]) / (2.0 * h)
    f0, f1, f2 = (f[_sl(nd, ax, i)] for i in (0, 1, 2))
    g0, g1, g2 = (f[_sl(nd, ax, i)] for i in (-1, -2, -3))
    if closure == "sbp":
        out[_sl(nd, ax, 0)] = (f1 - f0) / h
        out[_sl(nd, ax, -1)] = (g0 - g1) / h
    elif closure == "second_order":
        out[_sl(nd, ax, 0)] = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
        out[_sl(nd, ax, -1)] = (3.0 * g0 - 4.0 * g1 + g2) / (2.0 * h)
    else:
        raise ValueError(f"unknown closure {closure!r}")
    return out


def gradient(f, grid, closure="second_order"):
    """Gradient; a new leading axis of length 3 indexes the direction."""
    return np.stack([ddx(f, grid, d, closure) for d in range(3)])


def divergence(v, grid, closure="second_order"):
    out = ddx(v[0], grid, 0, closure)
    out += ddx(v[1], grid, 1, closure)
    out += ddx(v[2], grid, 2, closure)
    return out


def divergence_tensor(t, grid, closure="second_order"):
    """Row divergence of a matrix field: ``(div T)_i = sum_j d_j T_ij``."""
    return np.stack([divergence(t[i], grid, closure) for i in range(3)])


def velocity_gradient(u, grid, closure="second_order"):
    """Matrix field ``G_ij = d_j u_i``."""
    return np.stack([gradient(u[i], grid, closure) for i in range(3)])


# ---------------------------------------------------------------------------
# second differences and faces


def pad_ghost(f, grid, kind="neumann"):
    """Add one ghost layer on every active axis.

    ``kind="neumann"`` mirrors the first interior node (zero normal
    derivative at the wall node); ``kind="dirichlet"`` reflects about the wall
    value, ``ghost = 2 f_wall - f_inner``. Periodic grids wrap.
    """
    f = np.asarray(f, dtype=np.float64)
    nd = f.ndim
    for d in grid.active:
        ax = nd - 3 + d
        if grid.periodic:
            lo = f[_sl(nd, ax, slice(-1, None))]
            hi = f[_sl(nd, ax, slice(0, 1))]
        elif kind == "neumann":
            lo = f[_sl(nd, ax, slice(1, 2))]
            hi = f[_sl(nd, ax, slice(-2, -1))]
        elif kind == "dirichlet":
            lo = 2.0 * f[_sl(nd, ax, slice(0, 1))] - f[_sl(nd, ax, slice(1, 2))]
            hi = 2.0 * f[_sl(nd, ax, slice(-1, None))] - f[_sl(nd, ax, slice(-2, -1))]
        else:
            raise ValueError(f"unknown ghost kind {kind!r}")
        f = np.concatenate([lo, f, hi], axis=ax)
    return f


def laplacian(f, grid, kind="neumann"):
    """Compact ``2d+1``-point Laplacian with ghosts from :func:`pad_ghost`."""
    p = pad_ghost(f, grid, kind)
    nd = p.ndim
    core = [slice(None)] * nd
    for d in grid.active:
        core[nd - 3 + d] = slice(1, -1)
    centre = p[tuple(core)]
    out = np.zeros_like(centre)
    for d in grid.active:
        ax = nd - 3 + d
        lo = list(core)
        hi = list(core)
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        out += (p[tuple(hi)] - 2.0 * centre + p[tuple(lo)]) / grid.spacing[d] ** 2
    return out


def face_diff(f, grid, d):
    """Forward difference onto the faces along axis ``d``."""
    nd = f.ndim
    ax = nd - 3 + d
    h = grid.spacing[d]
    if grid.periodic:
        return (np.roll(f, -1, ax) - f) / h
    return np.diff(f, axis=ax) / h


def face_to_node_mean(g, grid, d):
    """Average of the two faces adjacent to every node; walls get zero."""
    nd = g.ndim
    ax = nd - 3 + d
    if grid.periodic:
        return 0.5 * (g + np.roll(g, 1, ax))
    shape = list(g.shape)
    shape[ax] += 1
    out = np.zeros(shape)
    out[_sl(nd, ax, slice(1, -1))] = 0.5 * (g[_sl(nd, ax, slice(1, None))]
                                            + g[_sl(nd, ax, slice(None, -1))])
    return out


def face_energy(f, grid):
    """sum over faces of ``w_face * |forward difference|^2`` (components summed).

    Packed Q-tensors must go through :func:`face_energy_q` instead so the
    off-diagonal entries are counted twice.
    """
    total = 0.0
    for d in grid.active:
        g = face_diff(f, grid, d)
        total += float(np.sum(grid.face_weights(d) * np.sum(g * g, axis=tuple(range(g.ndim - 3)))))
    return total


def face_energy_q(q, grid):
    total = 0.0
    for d in grid.active:
        g = face_diff(q, grid, d)
        total += float(np.sum(grid.face_weights(d) * qdot(g, g)))
    return total


# ---------------------------------------------------------------------------
# transport and quadrature


def advect(f, u, grid, scheme="central", closure="second_order"):
    """Directional derivative ``u . grad f`` nodewise.

    ``scheme="upwind"`` takes the first-order one-sided difference from the
    side the flow comes from (and the only available side at box walls).
    """
    f = np.asarray(f, dtype=np.float64)
    out = np.zeros_like(f)
    for d in grid.active:
        if scheme == "central":
            out += u[d] * ddx(f, grid, d, closure)
            continue
        if scheme != "upwind":
            raise ValueError(f"unknown advection scheme {scheme!r}")
        g = face_diff(f, grid, d)
        nd = f.ndim
        ax = nd - 3 + d
        if grid.periodic:
            back, fwd = np.roll(g, 1, ax), g
        else:
            back = np.concatenate([g[_sl(nd, ax, slice(0, 1))], g], axis=ax)
            fwd = np.concatenate([g, g[_sl(nd, ax, slice(-1, None))]], axis=ax)
        ud = u[d]
        out += np.where(ud > 0, ud * back, ud * fwd)
    return out


def gradq_odot_gradq(q, grid, closure="second_order"):
    """Matrix field ``M_ij = sum_kl d_i Q_kl d_j Q_kl`` for a packed Q field."""
    dq = [ddx(q, grid, d, closure) for d in range(3)]
    m = np.empty((3, 3) + q.shape[1:])
    for i in range(3):
        for j in range(i, 3):
            m[i, j] = qdot(dq[i], dq[j])
            m[j, i] = m[i, j]
    return m


def integrate(f, grid):
    """Quadrature sum ``sum_nodes w f`` over the last three axes.

    numpy's pairwise summation on a fixed shape makes the result
    reproducible run to run.
    """
    f = np.asarray(f, dtype=np.float64)
    return np.sum(f * grid.weights, axis=(-3, -2, -1))
