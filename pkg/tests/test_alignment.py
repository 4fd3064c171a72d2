import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import CONSTANT, RATIONAL, random_ensemble
from csstokes.alignment import (
    alignment_dissipation,
    alignment_force,
    compute_fields,
    compute_fields_celllist,
)
from csstokes.state import ParticleEnsemble


def oracle(ens, kernel):
    """Plain numpy double sum with minimum-image distances."""
    L = ens.box_length
    d = ens.positions[None, :, :] - ens.positions[:, None, :]
    d -= L * np.round(d / L)
    phi = kernel(np.sqrt(np.sum(d ** 2, axis=2)))
    w = phi * ens.weights[None, :]
    a = w.sum(axis=1)
    b = w @ ens.velocities
    force = np.einsum("ij,ijk->ik", w, ens.velocities[None, :, :] - ens.velocities[:, None, :])
    return a, b, force, phi


def test_two_coincident_particles():
    v = np.array([[1.0, 2.0, 3.0], [-1.0, 0.0, 5.0]])
    ens = ParticleEnsemble(np.ones((2, 3)), v, np.array([0.5, 0.5]), 4.0)
    f = compute_fields(ens, RATIONAL)
    assert np.array_equal(f.a, [1.0, 1.0])
    assert np.allclose(f.b, [(v[0] + v[1]) / 2] * 2, rtol=0, atol=1e-15)


def test_single_particle():
    ens = ParticleEnsemble(np.zeros((1, 3)), np.array([[0.3, -0.4, 1.2]]), np.ones(1), 4.0)
    f = compute_fields(ens, RATIONAL)
    assert f.a[0] == 1.0
    assert np.array_equal(f.b[0], ens.velocities[0])


def test_three_on_a_line_middle_particle():
    pos = np.array([[1.0, 5.0, 5.0], [2.0, 5.0, 5.0], [3.0, 5.0, 5.0]])
    ens = ParticleEnsemble(pos, np.zeros((3, 3)), np.full(3, 1 / 3), 10.0)
    f = compute_fields(ens, RATIONAL)
    assert f.a[1] == pytest.approx(2 / 3, rel=1e-15)
    assert f.a[0] == pytest.approx((1 + 0.5 + 0.2) / 3, rel=1e-15)


def test_consensus_has_no_force(rng):
    ens = random_ensemble(rng, 50)
    ens = ens.evolve(ens.positions, np.tile([0.2, -1.0, 0.7], (50, 1)))
    f = compute_fields(ens, RATIONAL)
    assert np.max(np.abs(alignment_force(f, ens.velocities))) <= 1e-15


def test_two_body_constant_kernel():
    v = np.array([[1.0, 0, 0], [-1.0, 0, 0]])
    ens = ParticleEnsemble(np.array([[0.0, 0, 0], [1.0, 2, 3]]), v, np.array([0.5, 0.5]), 8.0)
    force = alignment_force(compute_fields(ens, CONSTANT), v)
    assert np.array_equal(force, [[-1.0, 0, 0], [1.0, 0, 0]])


def test_force_length_mismatch():
    ens = ParticleEnsemble(np.zeros((2, 3)), np.zeros((2, 3)), np.full(2, 0.5), 1.0)
    with pytest.raises(ValueError):
        alignment_force(compute_fields(ens, RATIONAL), np.zeros((3, 3)))


@pytest.mark.parametrize("seed", range(100))
def test_matches_double_sum_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 65))
    ens = random_ensemble(rng, n, box_length=float(rng.uniform(1, 20)), speed=2.0)
    kernel = RATIONAL if seed % 4 else CONSTANT
    f = compute_fields(ens, kernel)
    a, b, force, _ = oracle(ens, kernel)
    assert np.max(np.abs(f.a - a)) <= 1e-13 * np.max(np.abs(a))
    assert np.max(np.abs(f.b - b)) <= 1e-13 * max(np.max(np.abs(b)), 1e-300) + 1e-16
    scale = np.max(f.a) * np.max(np.abs(ens.velocities))
    assert np.max(np.abs(alignment_force(f, ens.velocities) - force)) <= 1e-13 * scale


def test_min_image_uses_shortest_distance():
    pos = np.array([[0.1, 0.1, 0.1], [9.9, 0.1, 0.1]])
    ens = ParticleEnsemble(pos, np.zeros((2, 3)), np.full(2, 0.5), 10.0)
    # periodic distance 0.2, not 9.8
    assert compute_fields(ens, RATIONAL).a[0] == pytest.approx(0.5 + 0.5 / 1.04, rel=1e-14)


@given(st.integers(1, 40), st.integers(0, 2 ** 32 - 1), st.floats(0.5, 50.0))
def test_momentum_neutral(n, seed, L):
    rng = np.random.default_rng(seed)
    ens = random_ensemble(rng, n, box_length=L, speed=3.0, mass=float(rng.uniform(0.1, 10)))
    force = alignment_force(compute_fields(ens, RATIONAL), ens.velocities)
    scale = ens.total_mass * np.max(np.abs(ens.velocities))
    assert np.max(np.abs(ens.weights @ force)) <= 1e-12 * scale


@given(st.integers(1, 40), st.integers(0, 2 ** 32 - 1))
def test_dissipativity_identity(n, seed):
    rng = np.random.default_rng(seed)
    ens = random_ensemble(rng, n, speed=2.0)
    f = compute_fields(ens, RATIONAL)
    power = float(np.sum(ens.weights[:, None] * ens.velocities * alignment_force(f, ens.velocities)))
    _, _, _, phi = oracle(ens, RATIONAL)
    dv2 = np.sum((ens.velocities[:, None] - ens.velocities[None]) ** 2, axis=2)
    d = 0.5 * float(ens.weights @ (phi * dv2) @ ens.weights)
    assert power <= 1e-15
    assert d >= 0
    assert alignment_dissipation(f, ens.weights) == pytest.approx(d, rel=1e-12, abs=1e-15)
    assert -power == pytest.approx(d, rel=1e-11, abs=1e-14)


@given(st.integers(1, 40), st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100.0))
def test_field_bounds(n, seed, mass):
    rng = np.random.default_rng(seed)
    ens = random_ensemble(rng, n, speed=2.0, mass=mass)
    f = compute_fields(ens, RATIONAL)
    vmax = np.max(np.linalg.norm(ens.velocities, axis=1))
    assert np.all(f.a > 0)
    assert np.all(f.a <= mass * (1 + 1e-14))
    assert f.b_max <= mass * vmax * (1 + 1e-14)


def test_celllist_full_coverage_constant_kernel(rng):
    ens = random_ensemble(rng, 200, box_length=5.0)
    full = compute_fields(ens, CONSTANT)
    cl = compute_fields_celllist(ens, CONSTANT, np.inf)
    assert np.allclose(cl.a, full.a, rtol=1e-14, atol=0)
    assert np.allclose(cl.b, full.b, rtol=1e-13, atol=1e-15)


def test_celllist_single_cell_matches_naive(rng):
    ens = random_ensemble(rng, 100, box_length=3.0)
    full = compute_fields(ens, RATIONAL)
    cl = compute_fields_celllist(ens, RATIONAL, np.inf)
    assert np.allclose(cl.a, full.a, rtol=1e-14, atol=0)
    assert np.allclose(cl.spread, full.spread, rtol=1e-12, atol=1e-15)


def test_celllist_truncation_error_bound():
    rng = np.random.default_rng(11)
    cutoff = RATIONAL.inverse(1e-6)
    L = 4.0 * cutoff
    ens = random_ensemble(rng, 1000, box_length=L)
    full = compute_fields(ens, RATIONAL)
    cl = compute_fields_celllist(ens, RATIONAL, cutoff)
    err = np.max(np.abs(cl.a - full.a))
    assert 0 < err <= 1e-6 * ens.total_mass


def test_celllist_small_cutoff_matches_oracle(rng):
    ens = random_ensemble(rng, 300, box_length=10.0)
    cl = compute_fields_celllist(ens, RATIONAL, 2.0)
    L = ens.box_length
    d = ens.positions[None] - ens.positions[:, None]
    d -= L * np.round(d / L)
    r = np.sqrt(np.sum(d ** 2, axis=2))
    phi = np.where(r < 2.0, RATIONAL(r), 0.0)
    assert np.allclose(cl.a, phi @ ens.weights, rtol=1e-13, atol=0)


def test_celllist_rejects_large_cutoff(rng):
    ens = random_ensemble(rng, 10, box_length=4.0)
    with pytest.raises(ValueError, match="L/2"):
        compute_fields_celllist(ens, RATIONAL, 2.5)


def test_deterministic(rng):
    ens = random_ensemble(rng, 500)
    f1, f2 = compute_fields(ens, RATIONAL), compute_fields(ens, RATIONAL)
    assert np.array_equal(f1.a, f2.a) and np.array_equal(f1.b, f2.b)
