import numpy as np
import pytest
from scipy import integrate

from coneradon.forward import (ConeQuadratureSpec, RayQuadratureSpec, axis_vector, conical_forward,
                               conical_forward_multi, radon_2d, radon_3d, radon_3d_many,
                               vline_forward, weighted_xray, xray_2d, xray_forward)
from coneradon.grids import Image2D, Volume3D, open_grid
from coneradon.phantoms import phantom_ball3d, phantom_disc, phantom_gaussian2d


def test_axis_vector():
    np.testing.assert_allclose(axis_vector(0.0, np.pi / 2), [-1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(axis_vector(np.pi / 2, np.pi / 2), [0, -1, 0], atol=1e-15)
    np.testing.assert_allclose(axis_vector(1.3, 1e-12), [0, 0, 1], atol=1e-11)
    a = axis_vector(np.linspace(0, 6, 7), np.linspace(0.1, 3, 7))
    np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-15)


def _unit_disc(n=401):
    x = np.linspace(-1, 1, n)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    return Image2D((np.hypot(xx, yy) <= 1).astype(float))


def test_xray_2d_basic():
    q = RayQuadratureSpec()
    assert abs(xray_2d(_unit_disc(), (1, 0), (-1, 0), q) - 2.0) <= 2 * q.step + 2 / 400
    disc = phantom_disc(201, 0.5)
    assert xray_2d(disc, (1, 0), (0, 1), q) == 0.0
    with pytest.raises(ValueError):
        xray_2d(disc, (1, 0), (-1, 0.1), q)


def test_xray_2d_gaussian_vs_adaptive_quadrature():
    img = phantom_gaussian2d(801, np.sqrt(0.05))
    val = xray_2d(img, (np.cos(0.3), np.sin(0.3)), (-np.cos(0.3), -np.sin(0.3)))
    # ray through the centre, the image is a sampled Gaussian exp(-|x|^2/0.1)
    ref, _ = integrate.quad(lambda r: np.exp(-(1 - r) ** 2 / 0.1) * (abs(1 - r) < 1), 0, 2,
                            points=[1.0], epsabs=1e-12)
    assert abs(val - ref) <= 1e-4


def test_vline_chords():
    img = phantom_disc(801, 0.5, supersample=4)
    # just beyond the tangent ray the edge pixels of the sampled disc are no longer hit
    psi = np.arcsin([0.3, 0.5 + 4 / 800, 0.7])
    s = vline_forward(img, 8, psi)
    assert np.all(np.abs(s.data[:, 0] - 1.6) <= 4e-3 + 4 / 800)
    assert np.all(s.data[:, 1] == 0)
    assert np.all(s.data[:, 2] == 0)


def test_radon_2d_basic():
    q = RayQuadratureSpec()
    assert abs(radon_2d(_unit_disc(), 0.4, 0.0, q) - 2.0) <= 2 * q.step + 2 / 400
    assert radon_2d(_unit_disc(), 0.4, 1.0, q) == 0.0


def test_vline_radon_relation_small():
    img = phantom_gaussian2d(201, 0.2, center=(0.15, -0.1))
    psi = np.arcsin(np.linspace(0.05, 0.9, 8))
    s = vline_forward(img, 8, psi)
    for k, phi in enumerate(s.phi):
        for j, p in enumerate(psi):
            r = radon_2d(img, phi - p + np.pi / 2, np.sin(p)) + radon_2d(img, phi + p - np.pi / 2, np.sin(p))
            assert abs(s.data[k, j] - r) <= 1e-2 * np.max(s.data)


def test_vline_is_sum_of_two_xrays():
    img = phantom_gaussian2d(101, 0.2, center=(0.15, -0.1))
    psi = np.arcsin(np.linspace(0.05, 0.9, 5))
    q = RayQuadratureSpec(step=2e-3)
    v = vline_forward(img, 8, psi, q)
    x = xray_forward(img, 8, psi, q)
    for k, phi in enumerate(v.phi):
        vert = (np.cos(phi), np.sin(phi))
        for j, p in enumerate(psi):
            a = xray_2d(img, vert, (-np.cos(phi - p), -np.sin(phi - p)), q)
            b = xray_2d(img, vert, (-np.cos(phi + p), -np.sin(phi + p)), q)
            assert x.data[k, j] == pytest.approx(a, abs=1e-13)
            assert v.data[k, j] == pytest.approx(a + b, abs=1e-13)


def test_linearity_positivity_2d():
    rng = np.random.default_rng(0)
    a = Image2D(rng.uniform(size=(51, 51)))
    b = Image2D(rng.uniform(size=(51, 51)))
    psi = np.arcsin(np.linspace(0.1, 0.8, 4))
    q = RayQuadratureSpec(step=1e-2)
    va, vb = vline_forward(a, 8, psi, q), vline_forward(b, 8, psi, q)
    vab = vline_forward(Image2D(2 * a.values - 3 * b.values), 8, psi, q)
    np.testing.assert_allclose(vab.data, 2 * va.data - 3 * vb.data, atol=1e-12)
    assert np.all(va.data >= 0)


def test_vline_rotation_equivariance():
    img = phantom_gaussian2d(201, 0.15, center=(0.3, 0.1))
    rot = Image2D(np.rot90(img.values))  # rotation of the function by +90 degrees
    psi = np.arcsin(np.linspace(0.1, 0.8, 6))
    n_phi = 16
    s = vline_forward(img, n_phi, psi, RayQuadratureSpec(step=2e-3))
    sr = vline_forward(rot, n_phi, psi, RayQuadratureSpec(step=2e-3))
    shifted = np.roll(s.data, n_phi // 4, axis=0)
    assert np.max(np.abs(sr.data - shifted)) <= 1e-2 * np.max(s.data)


def test_cone_forward_ball_oracle():
    vol = phantom_ball3d((121, 121, 121), radius=0.5, supersample=4)
    psi = np.arcsin(0.3)
    c0, c1 = conical_forward_multi(vol, [0, 1], 4, [0.0], [np.pi / 2], [psi])
    np.testing.assert_allclose(c0.data.ravel(), 0.3 * 2 * np.pi * 0.8, rtol=1e-3)
    np.testing.assert_allclose(c1.data.ravel(), 2 * np.pi * 0.3 * np.sqrt(0.91) * 0.8, rtol=1e-3)
    single = conical_forward(vol, 1, 4, [0.0], [np.pi / 2], [psi])
    np.testing.assert_array_equal(single.data, c1.data)


def test_cone_forward_zero_and_errors():
    vol = Volume3D(np.zeros((8, 8, 8)))
    c = conical_forward(vol, 1, 4, [0.0, 0.5], open_grid(4), open_grid(4), ConeQuadratureSpec(n_eta=16, step_r=0.05))
    assert np.all(c.data == 0)
    with pytest.raises(ValueError):
        conical_forward(vol, -1, 4, [0.0], open_grid(4), open_grid(4))
    with pytest.raises(ValueError):
        conical_forward(vol, 0, 4, [0.0], open_grid(4), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        ConeQuadratureSpec(n_eta=8)


def test_cone_linearity_positivity():
    rng = np.random.default_rng(3)
    a = Volume3D(rng.uniform(size=(12, 12, 12)))
    b = Volume3D(rng.uniform(size=(12, 12, 12)))
    args = (4, np.linspace(-0.5, 0.5, 3), open_grid(4), open_grid(5), ConeQuadratureSpec(n_eta=16, step_r=0.05))
    ca = conical_forward(a, 1, *args)
    cb = conical_forward(b, 1, *args)
    cab = conical_forward(Volume3D(a.values + 2 * b.values), 1, *args)
    np.testing.assert_allclose(cab.data, ca.data + 2 * cb.data, rtol=1e-12, atol=1e-12)
    assert np.all(ca.data >= 0)


def test_weighted_xray_homogeneity():
    vol = phantom_ball3d((41, 41, 41), radius=0.4, kind="gaussian")
    v = (1.0, 0.0, 0.1)
    u = np.array([-0.8, 0.3, -0.1])
    for k in (0, 1, 2):
        base = weighted_xray(vol, v, u, k, RayQuadratureSpec(step=1e-3))
        for lam in (0.5, 2.0, 3.0):
            val = weighted_xray(vol, v, lam * u, k, RayQuadratureSpec(step=1e-3))
            assert val == pytest.approx(lam ** (-k - 1) * base, rel=1e-3)


def test_radon_3d_ball_and_far_offset():
    vol = phantom_ball3d((121, 121, 121), radius=0.5, supersample=4)
    w = axis_vector(0.7, 1.1)
    for s in (0.0, 0.2, 0.4):
        assert radon_3d(vol, w, s, RayQuadratureSpec(step=5e-3)) == pytest.approx(np.pi * (0.25 - s**2), abs=1e-3)
    assert radon_3d(vol, w, 2.0) == 0.0
    with pytest.raises(ValueError):
        radon_3d(vol, [1.0, 1.0, 0.0], 0.0)


def test_radon_3d_gaussian_closed_form():
    sigma = 0.15
    vol = phantom_ball3d((161, 161, 161), center=(0.1, 0, 0), radius=2 * sigma, kind="gaussian")
    w = axis_vector(0.3, 0.9)
    s = np.array([-0.2, 0.0, 0.1, 0.3])
    vals = radon_3d_many(vol, [w], s, step=5e-3)[0]
    ref = 2 * np.pi * sigma**2 * np.exp(-(s - 0.1 * w[0]) ** 2 / (2 * sigma**2))
    assert np.max(np.abs(vals - ref)) <= 1e-4
