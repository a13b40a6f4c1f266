"""Pointwise algebra of symmetric traceless 3x3 tensors.

A Q-tensor is stored as five packed components ``(q11, q12, q13, q22, q23)``
along the leading axis of an array; ``q33 = -q11 - q22`` and symmetry are
implied, so membership in the space of Q-tensors is structural. General
matrices (velocity gradients, vorticity, products) are stored as ``(3, 3, ...)``
arrays. Every function broadcasts over trailing axes, so the same code handles
a single node and a whole grid.
"""

import numpy as np

NPACK = 5

# packed index -> (row, col) of the upper triangle
_PACKED = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2))


def as_qtensor(values):
    """Return a float64 array of packed components from a length-5 sequence."""
    q = np.asarray(values, dtype=np.float64)
    if q.shape[:1] != (NPACK,):
        raise ValueError(f"packed Q-tensor needs leading axis of length 5, got {q.shape}")
    return q


def to_matrix(q):
    """Reconstruct the full symmetric traceless matrix, shape ``(3, 3, ...)``."""
    q = np.asarray(q, dtype=np.float64)
    m = np.empty((3, 3) + q.shape[1:], dtype=np.float64)
    m[0, 0] = q[0]
    m[1, 1] = q[3]
    m[2, 2] = -(q[0] + q[3])
    m[0, 1] = m[1, 0] = q[1]
    m[0, 2] = m[2, 0] = q[2]
    m[1, 2] = m[2, 1] = q[4]
    return m


def project_st(m):
    """Symmetric traceless part ``(m + m^T)/2 - tr(m)/3 I``, returned packed."""
    m = np.asarray(m, dtype=np.float64)
    third = (m[0, 0] + m[1, 1] + m[2, 2]) / 3.0
    q = np.empty((NPACK,) + m.shape[2:], dtype=np.float64)
    q[0] = m[0, 0] - third
    q[1] = 0.5 * (m[0, 1] + m[1, 0])
    q[2] = 0.5 * (m[0, 2] + m[2, 0])
    q[3] = m[1, 1] - third
    q[4] = 0.5 * (m[1, 2] + m[2, 1])
    return q


def from_matrix(m):
    """Pack a matrix that is already symmetric traceless (no projection)."""
    m = np.asarray(m, dtype=np.float64)
    return np.stack([m[i, j] for i, j in _PACKED])


def qdot(a, b):
    """Frobenius contraction ``A:B`` of two packed Q-tensors."""
    return (a[0] * b[0] + a[3] * b[3] + (a[0] + a[3]) * (b[0] + b[3])
            + 2.0 * (a[1] * b[1] + a[2] * b[2] + a[4] * b[4]))


def tr2(q):
    """tr(Q^2), the squared Frobenius norm."""
    return qdot(q, q)


def matmul(a, b):
    """Nodewise matrix product of two ``(3, 3, ...)`` arrays."""
    return np.einsum("ik...,kj...->ij...", a, b)


def tr3(q):
    """tr(Q^3) by explicit cubic contraction of the reconstructed matrix."""
    m = to_matrix(q)
    return np.einsum("ij...,jk...,ki...->...", m, m, m)


def commutator(a, b):
    """ab - ba for ``(3, 3, ...)`` arrays."""
    return matmul(a, b) - matmul(b, a)


def contract(a, b):
    """A:B = sum_ij a_ij b_ij for ``(3, 3, ...)`` arrays."""
    return np.einsum("ij...,ij...->...", a, b)


def transpose(a):
    return np.swapaxes(a, 0, 1)


def uniaxial(s, director):
    """Packed ``s (n n - I/3)`` for a (not necessarily normalized) director.

    ``director`` may be a length-3 vector or a ``(3, ...)`` field.
    """
    n = np.asarray(director, dtype=np.float64)
    n = n / np.sqrt(np.sum(n * n, axis=0))
    s = np.asarray(s, dtype=np.float64)
    outer = np.einsum("i...,j...->ij...", n, n)
    return s * project_st(outer)


def trace_cubic_bound(q, eps):
    """Right-hand side (3 eps/8) tr(Q^2)^2 + 3/(2 eps) tr(Q^2) of the cubic bound."""
    t2 = tr2(q)
    return 3.0 * eps / 8.0 * t2 * t2 + 1.5 / eps * t2
