import numpy as np
import pytest
from hypothesis import given, strategies as st

from qflow import tensor
from qflow.grid import (Grid, advect, ddx, divergence, divergence_tensor, face_energy,
                        gradient, gradq_odot_gradq, integrate, laplacian, pad_ghost,
                        velocity_gradient)
from conftest import random_q


def box2d(n=11, length=1.0):
    return Grid.from_lengths((n, n, 1), (length, length, 1.0), "box")


def box3d(n=9):
    return Grid.from_lengths((n, n, n), (1.0, 1.0, 1.0), "box")


def periodic1d(n):
    return Grid.from_lengths((n, 1, 1), (1.0, 1.0, 1.0), "periodic")


def inner(f):
    return f[..., 1:-1, 1:-1, :]


@pytest.mark.parametrize("shape, spacing, bc", [
    ((2, 5, 1), (0.1, 0.1, 1.0), "box"),
    ((5, 5, 1), (0.1, -0.1, 1.0), "box"),
    ((5, 5, 1), (0.1, 0.1, 1.0), "wall"),
    ((1, 1, 1), (1.0, 1.0, 1.0), "box"),
    ((5, 5), (0.1, 0.1), "box"),
])
def test_grid_rejects_bad_input(shape, spacing, bc):
    with pytest.raises(ValueError):
        Grid(shape, spacing, bc)


def test_spacing_conventions():
    g = Grid.from_lengths((11, 21, 1), (1.0, 2.0, 0.5), "box")
    assert g.spacing == pytest.approx((0.1, 0.1, 0.5))
    assert g.volume == pytest.approx(1.0)
    p = Grid.from_lengths((10, 20, 1), (1.0, 2.0, 0.5), "periodic")
    assert p.spacing == pytest.approx((0.1, 0.1, 0.5))
    assert p.active == (0, 1) and p.dim == 2


@pytest.mark.parametrize("bc", ["box", "periodic"])
def test_weights_sum_to_volume(bc):
    g = Grid.from_lengths((7, 9, 5), (1.0, 2.0, 3.0), bc)
    assert integrate(np.ones(g.shape), g) == pytest.approx(6.0, abs=1e-12)
    assert integrate(np.zeros(g.shape), g) == 0.0


def test_integrate_linear_is_exact_in_box():
    g = box2d(17)
    x = g.coords()[0]
    assert integrate(x, g) == pytest.approx(0.5, abs=1e-14)


def test_masks_partition_nodes():
    g = box2d(6)
    assert g.interior.sum() == 16
    assert np.array_equal(g.interior, ~g.boundary)
    assert Grid.from_lengths((6, 6, 1), (1, 1, 1), "periodic").interior.all()


def test_gradient_of_constant_and_linear():
    g = box3d()
    x, y, z = g.coords()
    assert np.allclose(gradient(np.full(g.shape, 4.2), g), 0.0)
    grad = gradient(3 * x, g)
    assert np.allclose(grad[0], 3.0) and np.allclose(grad[1:], 0.0)


def test_gradient_of_quadratic_exact_in_interior():
    g = box2d()
    x = g.coords()[0]
    assert np.allclose(inner(gradient(x ** 2, g)[0]), inner(2 * x), atol=1e-13)


@pytest.mark.parametrize("closure", ["sbp", "second_order"])
def test_wall_closures_exact_for_linear(closure):
    g = box2d()
    x = g.coords()[0]
    assert np.allclose(ddx(5 * x - 1, g, 0, closure), 5.0)


def test_second_order_closure_exact_for_quadratic():
    g = box2d()
    x = g.coords()[0]
    assert np.allclose(ddx(x ** 2, g, 0, "second_order"), 2 * x, atol=1e-12)


def test_unknown_closure_rejected():
    with pytest.raises(ValueError):
        ddx(np.zeros((5, 5, 1)), box2d(5), 0, "fourth")


def test_divergence_examples():
    g = box3d()
    v = g.coords()
    assert np.allclose(divergence(v, g), 3.0)
    assert np.allclose(divergence(np.ones((3,) + g.shape), g), 0.0)
    t = np.einsum("ij,...->ij...", np.eye(3), v[0])
    out = divergence_tensor(t, g)
    assert np.allclose(out[0], 1.0) and np.allclose(out[1:], 0.0)
    diag = np.zeros((3, 3) + g.shape)
    for i in range(3):
        diag[i, i] = v[i]
    assert np.allclose(divergence_tensor(diag, g), 1.0)


def test_divergence_tensor_contracts_second_index():
    g = box3d()
    x = g.coords()[0]
    t = np.zeros((3, 3) + g.shape)
    t[1, 0] = x
    out = divergence_tensor(t, g)
    assert np.allclose(out[1], 1.0) and np.allclose(out[0], 0.0)


def test_velocity_gradient_layout():
    g = box3d()
    x, y, z = g.coords()
    gu = velocity_gradient(np.stack([2 * y, 0 * x, 3 * x]), g)
    assert np.allclose(gu[0, 1], 2.0) and np.allclose(gu[2, 0], 3.0)
    assert np.allclose(gu[1], 0.0)


def test_laplacian_examples():
    g = box2d()
    x, y, _ = g.coords()
    assert np.allclose(inner(laplacian(2 * x - y, g)), 0.0, atol=1e-12)
    assert np.allclose(inner(laplacian(x ** 2, g)), 2.0, atol=1e-10)
    # Dirichlet reflection keeps linear fields harmonic up to the wall
    assert np.allclose(laplacian(2 * x - y, g, kind="dirichlet"), 0.0, atol=1e-10)


def test_neumann_ghost_mirrors():
    g = box2d(5)
    f = np.random.default_rng(1).normal(size=g.shape)
    p = pad_ghost(f, g, "neumann")
    assert np.array_equal(p[0, 1:-1], f[1])
    assert np.array_equal(p[-1, 1:-1], f[-2])
    with pytest.raises(ValueError):
        pad_ghost(f, g, "robin")


def _periodic_errors(op, exact, levels=(16, 32, 64)):
    errs = []
    for n in levels:
        g = periodic1d(n)
        x = g.coords()[0]
        errs.append(np.max(np.abs(op(x, g) - exact(x))))
    return np.array(errs)


@pytest.mark.parametrize("name", ["gradient", "divergence", "laplacian"])
def test_periodic_refinement_ratio_second_order(name):
    k = 2 * np.pi
    ops = {
        "gradient": (lambda x, g: gradient(np.sin(k * x), g)[0], lambda x: k * np.cos(k * x)),
        "divergence": (lambda x, g: divergence(np.stack([np.sin(k * x), 0 * x, 0 * x]), g),
                       lambda x: k * np.cos(k * x)),
        "laplacian": (lambda x, g: laplacian(np.sin(k * x), g), lambda x: -k * k * np.sin(k * x)),
    }
    errs = _periodic_errors(*ops[name])
    ratios = errs[:-1] / errs[1:]
    assert np.all((ratios > 3.5) & (ratios < 4.5)), ratios


def test_summation_by_parts_periodic(rng):
    g = Grid.from_lengths((12, 10, 1), (1.0, 1.0, 1.0), "periodic")
    f = rng.normal(size=g.shape)
    v = rng.normal(size=(3,) + g.shape)
    lhs = integrate(f * divergence(v, g), g) + integrate(np.sum(gradient(f, g) * v, axis=0), g)
    scale = np.sqrt(integrate(f * f, g) * integrate(np.sum(v * v, axis=0), g))
    assert abs(lhs) <= 1e-10 * scale


def test_summation_by_parts_box_boundary_term(rng):
    g = box2d(9)
    f = rng.normal(size=g.shape)
    w = rng.normal(size=g.shape)
    lhs = integrate(f * ddx(w, g, 0, "sbp"), g) + integrate(w * ddx(f, g, 0, "sbp"), g)
    wy = g.axis_weights(1)
    bnd = np.sum(wy * (f[-1, :, 0] * w[-1, :, 0] - f[0, :, 0] * w[0, :, 0]))
    assert lhs == pytest.approx(bnd, abs=1e-12)


def test_advect_examples():
    g = box2d()
    x = g.coords()[0]
    u = np.zeros((3,) + g.shape)
    assert np.array_equal(advect(x, u, g), np.zeros(g.shape))
    u[0] = 1.0
    assert np.allclose(advect(np.full(g.shape, 3.0), u, g), 0.0)
    for scheme in ("central", "upwind"):
        assert np.allclose(inner(advect(x, u, g, scheme)), 1.0)
    with pytest.raises(ValueError):
        advect(x, u, g, "weno")


def test_upwind_picks_inflow_side():
    g = periodic1d(8)
    f = np.arange(8.0).reshape(8, 1, 1)
    u = np.zeros((3,) + g.shape)
    u[0] = -1.0
    out = advect(f, u, g, "upwind")
    # flow from the right: forward difference, which wraps at the last node
    assert out[0, 0, 0] == pytest.approx(-1.0 / g.spacing[0])
    assert out[-1, 0, 0] == pytest.approx(7.0 / g.spacing[0])


def test_gradq_odot_gradq_examples(rng):
    g = box2d(9)
    q = np.broadcast_to(random_q(rng)[:, None, None, None], (5,) + g.shape).copy()
    assert np.allclose(gradq_odot_gradq(q, g), 0.0)
    x = g.coords()[0]
    q1 = random_q(rng)[:, None, None, None] * x
    m = gradq_odot_gradq(q1, g)
    dq = ddx(q1, g, 0)
    assert np.allclose(m[0, 0], tensor.qdot(dq, dq))
    mask = np.ones((3, 3), bool)
    mask[0, 0] = False
    assert np.allclose(m[mask], 0.0)


def test_gradq_odot_gradq_symmetric_psd(rng):
    g = box3d(6)
    m = gradq_odot_gradq(random_q(rng, *g.shape), g)
    assert np.array_equal(m, tensor.transpose(m))
    lam = np.linalg.eigvalsh(np.moveaxis(m, (0, 1), (-2, -1)))
    assert lam.min() > -1e-10 * np.abs(lam).max()


def test_face_energy_periodic_mode():
    n = 64
    g = periodic1d(n)
    x = g.coords()[0]
    u = np.stack([np.sin(2 * np.pi * x), 0 * x, 0 * x])
    # forward differences of sin: |D+ u|^2 summed = 2 pi^2 (sinc correction O(h^2))
    assert face_energy(u, g) == pytest.approx(2 * np.pi ** 2, rel=1e-2)


@given(st.integers(3, 12), st.integers(3, 12))
def test_coords_span_lengths(nx, ny):
    g = Grid.from_lengths((nx, ny, 1), (2.0, 3.0, 1.0), "box")
    c = g.coords()
    assert c[0].max() == pytest.approx(2.0) and c[1].max() == pytest.approx(3.0)
