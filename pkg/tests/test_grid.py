import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfrobin.grid import (
    BoundaryOperator,
    CoefficientSpec,
    FourierMultiplier,
    GridFunction,
    apply_multiplier,
    dft,
    idft,
    make_grid,
    operator_matrix,
    plane_wave,
    pointwise_multiply,
    sample_coefficient,
)

rng = np.random.default_rng(1234)


def _rand(grid, complex_=True):
    v = rng.standard_normal(grid.size)
    if complex_:
        v = v + 1j * rng.standard_normal(grid.size)
    return GridFunction(grid, v)


def test_make_grid_unit_frequencies():
    g = make_grid(1, 8, 2 * np.pi)
    assert np.allclose(np.sort(g.freqs[:, 0]), np.arange(-4, 4))
    assert np.count_nonzero(g.xi2 == 0) == 1


def test_make_grid_2d():
    g = make_grid(2, 4, 1.0)
    assert g.size == 16 and g.points.shape == (16, 2)
    comps = np.unique(np.round(g.freqs, 12))
    assert np.allclose(comps, [-4 * np.pi, -2 * np.pi, 0, 2 * np.pi])


@pytest.mark.parametrize("args", [(1, 4, 0.0), (4, 8, 1.0), (1, 3, 1.0), (0, 8, 1.0), (1, 8, -2.0)])
def test_make_grid_rejects(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_gridfunction_validation():
    g = make_grid(1, 8, 1.0)
    with pytest.raises(ValueError):
        GridFunction(g, np.ones(7))
    with pytest.raises(ValueError):
        GridFunction(g, np.r_[np.ones(7), np.nan])
    f = GridFunction(g, np.ones(8))
    with pytest.raises(ValueError):
        f.values[0] = 3.0  # read-only copy


def test_sample_constant_and_gaussian():
    g = make_grid(2, 16, 4.0)
    c = sample_coefficient(CoefficientSpec("constant", a=2.0), g)
    assert np.all(c.values == 2.0) and c.is_real
    gs = sample_coefficient(CoefficientSpec("gaussian", a=1.0, sigma=0.5), g)
    j = np.argmin(np.sum((g.points - 2.0) ** 2, axis=1))
    assert gs.values[j] == pytest.approx(1.0)


@pytest.mark.parametrize("w", [0.5, 1.3, 3.0])
def test_box_riemann_sum(w):
    g = make_grid(1, 200, 10.0)
    b = sample_coefficient(CoefficientSpec("box", a=1.0, halfwidth=w), g)
    assert abs(np.sum(b.values) * g.spacing - 2 * w) <= g.spacing + 1e-12


def test_box_too_wide():
    g = make_grid(1, 16, 4.0)
    with pytest.raises(ValueError):
        sample_coefficient(CoefficientSpec("box", a=1.0, halfwidth=2.0), g)


def test_powertail_uses_min_image():
    g = make_grid(1, 64, 8.0)
    p = sample_coefficient(CoefficientSpec("powertail", a=1.0, s=2.0), g)
    # symmetric about the origin on the torus
    assert np.allclose(p.values[1:], p.values[1:][::-1])
    assert p.values[0] == 1.0


@pytest.mark.parametrize("s,p", [(2.0, 1.0), (1.0, 2.0), (3.0, 1.0)])
def test_powertail_lp_norm_stable_under_box_doubling(s, p):
    # s * p > n: the tail is p-integrable, so growing the box barely moves the norm
    h = 0.25
    norms = []
    for L in (400.0, 800.0):
        g = make_grid(1, int(L / h), L)
        norms.append(sample_coefficient(CoefficientSpec("powertail", a=1.0, s=s), g).lp_norm(p))
    assert abs(norms[1] - norms[0]) / norms[0] < 0.01


def test_coefficient_spec_dict_forms():
    s = CoefficientSpec.from_dict({"family": "box", "a": [2.0, 1.0], "halfwidth": 1.0})
    assert s.a == 2 + 1j
    assert CoefficientSpec.from_dict(s.to_dict()) == s
    assert CoefficientSpec.from_dict({"family": "constant", "c": 3.0}).a == 3.0
    with pytest.raises(ValueError):
        CoefficientSpec.from_dict({"family": "gaussian", "width": 1.0})
    with pytest.raises(ValueError):
        CoefficientSpec("gaussian", sigma=-1.0)


@pytest.mark.parametrize("n,N", [(1, 16), (2, 8), (3, 4)])
def test_dft_round_trip(n, N):
    g = make_grid(n, N, 3.0)
    f = _rand(g)
    back = idft(g, dft(f))
    assert np.linalg.norm(back - f.values) <= 1e-12 * np.linalg.norm(f.values)


def test_identity_symbol():
    g = make_grid(2, 8, 1.0)
    f = _rand(g)
    out = apply_multiplier(FourierMultiplier(g, np.ones(g.size)), f)
    assert np.allclose(out.values, f.values, atol=1e-13)


@pytest.mark.parametrize("n", [1, 2])
def test_plane_wave_is_eigenfunction(n):
    g = make_grid(n, 8, 5.0)
    m = FourierMultiplier(g, 1.0 / (1.0 + g.xi2))
    for k in (0, 3, g.size - 1):
        xi = g.freqs[k]
        f = plane_wave(g, xi)
        out = apply_multiplier(m, f)
        assert np.allclose(out.values, m.symbol[k] * f.values, atol=1e-12)


def test_unimodular_preserves_norm():
    g = make_grid(1, 64, 2.0)
    m = FourierMultiplier(g, np.exp(1j * rng.uniform(0, 2 * np.pi, g.size)))
    f = _rand(g)
    # Parseval by direct summation
    assert np.sqrt(np.sum(np.abs(apply_multiplier(m, f).values) ** 2)) == pytest.approx(
        np.sqrt(np.sum(np.abs(f.values) ** 2)), rel=1e-12)


def test_apply_multiplier_linear():
    g = make_grid(2, 8, 1.0)
    m = FourierMultiplier(g, rng.standard_normal(g.size) + 1j)
    f, h = _rand(g), _rand(g)
    a, b = 0.3 - 2j, 1.7
    lhs = apply_multiplier(m, f.scaled(a) + h.scaled(b)).values
    rhs = a * apply_multiplier(m, f).values + b * apply_multiplier(m, h).values
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)


def test_grid_mismatch():
    g1, g2 = make_grid(1, 8, 1.0), make_grid(1, 8, 2.0)
    with pytest.raises(ValueError):
        apply_multiplier(FourierMultiplier(g1, np.ones(8)), _rand(g2))
    with pytest.raises(ValueError):
        pointwise_multiply(_rand(g1), _rand(g2))
    with pytest.raises(ValueError):
        operator_matrix([FourierMultiplier(g1, np.ones(8)), _rand(g2)])


def test_operator_matrix_trivial():
    g = make_grid(1, 8, 1.0)
    assert np.allclose(operator_matrix([FourierMultiplier(g, np.ones(8))]).entries, np.eye(8))
    a = _rand(g)
    assert np.allclose(operator_matrix([a]).entries, np.diag(a.values))
    with pytest.raises(ValueError):
        operator_matrix([])


def test_operator_matrix_matches_matrix_free():
    g = make_grid(1, 8, 3.0)
    m = FourierMultiplier(g, 1.0 / np.sqrt(g.xi2 + 2.0))
    a = _rand(g)
    B = operator_matrix([m, a])
    for _ in range(10):
        f = _rand(g)
        ref = apply_multiplier(m, pointwise_multiply(a, f)).values
        assert np.allclose(B.apply(f).values, ref, atol=1e-12)


@pytest.mark.parametrize("n,N", [(1, 32), (2, 8)])
def test_multiplier_matrix_eigenvalues(n, N):
    g = make_grid(n, N, 2.0)
    sym = rng.standard_normal(g.size) + 1j * rng.standard_normal(g.size)
    M = FourierMultiplier(g, sym).matrix()
    ev = np.linalg.eigvals(M)
    # multiset equality: greedy matching after sorting by (re, im)
    a = np.sort_complex(ev)
    b = np.sort_complex(sym)
    assert np.max(np.abs(a - b)) < 1e-10


def test_multiplier_matrix_via_chain():
    g = make_grid(2, 8, 1.5)
    m = FourierMultiplier(g, np.exp(-g.xi2))
    assert np.allclose(m.matrix(), operator_matrix([m]).entries, atol=1e-13)


def test_pointwise_loop_oracle():
    g = make_grid(1, 16, 1.0)
    a, f = _rand(g), _rand(g)
    out = pointwise_multiply(a, f).values
    loop = np.empty(g.size, dtype=complex)
    for j in range(g.size):
        loop[j] = a.values[j] * f.values[j]
    # vectorized complex products may fuse multiply-adds, so allow last-bit differences
    assert np.allclose(out, loop, rtol=1e-15, atol=0)
    zero = GridFunction(g, np.zeros(g.size))
    assert not np.any(pointwise_multiply(zero, f).values)
    one = GridFunction(g, np.ones(g.size))
    assert np.array_equal(pointwise_multiply(one, f).values, f.values)


def test_boundary_operator_validation():
    g = make_grid(1, 4, 1.0)
    with pytest.raises(ValueError):
        BoundaryOperator(g, np.ones((4, 3)))
    with pytest.raises(ValueError):
        BoundaryOperator(g, np.full((4, 4), np.inf))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([1, 2]), st.sampled_from([4, 8, 16]), st.floats(0.5, 50.0))
def test_frequency_lattice_properties(n, N, L):
    g = make_grid(n, N, L)
    assert g.size == N**n
    assert np.count_nonzero(np.all(g.freqs == 0, axis=1)) == 1
    ks = g.frequency_indices()
    assert ks.min() == -(N // 2) and ks.max() == (N + 1) // 2 - 1
    assert np.allclose(np.sort(np.unique(g.freqs)), 2 * np.pi * ks / L)
