import numpy as np
import pytest
import scipy.sparse.linalg as spla

from halfrobin import oracle
from halfrobin.grid import CoefficientSpec, GridFunction, make_grid, sample_coefficient
from halfrobin.halfspace import boundary_reduced_difference
from halfrobin.schatten import singular_values


def _gauss(strip, a=1.0, sigma=1.0):
    return sample_coefficient(CoefficientSpec("gaussian", a=a, sigma=sigma), strip.boundary)


def _const(strip, c):
    return GridFunction(strip.boundary, np.full(strip.Nx, c))


@pytest.fixture
def strip():
    return oracle.StripGrid(32, 32, 12.0, 4.0)


def test_strip_grid_basics(strip):
    assert strip.size == 32 * 32 and strip.hx == pytest.approx(12 / 32) and strip.ht == pytest.approx(4 / 32)
    assert strip.t[0] == 0 and strip.t[-1] == pytest.approx(4 - 4 / 32)
    assert strip.weights.sum() == pytest.approx(12.0 * (strip.t[-1]), rel=1e-12)
    assert strip.depth_ok(-4.0) and not strip.depth_ok(-1.0)
    r = strip.refined()
    assert (r.Nx, r.Nt, r.L, r.T) == (64, 64, 12.0, 4.0)
    with pytest.raises(ValueError):
        oracle.StripGrid(4, 32, 1.0, 1.0)


# --- matrices ---------------------------------------------------------------------

def test_robin_zero_is_neumann(strip):
    A = oracle.fd_robin_matrix(_const(strip, 0.0), strip).matrix
    B = oracle.fd_neumann_matrix(strip).matrix
    assert (A != B).nnz == 0


def test_stencil_nnz(strip):
    A = oracle.fd_robin_matrix(_gauss(strip), strip).matrix
    assert A.nnz == 5 * strip.Nx * strip.Nt - 2 * strip.Nx


def test_real_alpha_symmetric(strip):
    S = oracle.fd_robin_matrix(_gauss(strip, a=-1.3), strip).symmetric()
    assert abs(S - S.T).max() < 1e-12 * abs(S).max()


def test_complex_alpha_adjoint(strip):
    a = sample_coefficient(CoefficientSpec("gaussian", a=1 + 2j, sigma=1.0), strip.boundary)
    abar = GridFunction(strip.boundary, np.conj(a.values))
    S = oracle.fd_robin_matrix(a, strip).symmetric()
    Sbar = oracle.fd_robin_matrix(abar, strip).symmetric()
    assert abs(S.conj().T - Sbar).max() < 1e-12 * abs(S).max()
    assert abs(S - S.conj().T).max() > 1e-3  # not selfadjoint


def test_robin_matrix_rejects_mismatch(strip):
    other = oracle.StripGrid(16, 32, 12.0, 4.0)
    with pytest.raises(ValueError):
        oracle.fd_robin_matrix(_gauss(other), strip)


def test_constant_alpha_bottom_converges():
    # ground state of the strip with constant alpha = 2 approaches -4
    errs = []
    for Nt in (128, 256, 512):
        st = oracle.StripGrid(8, Nt, 4.0, 10.0)
        S = oracle.fd_robin_matrix(_const(st, 2.0), st).symmetric()
        mu = spla.eigsh(S, k=1, sigma=-10.0, return_eigenvectors=False)[0]
        errs.append(abs(mu + 4.0))
    assert errs[-1] < 0.01 * 4
    assert errs[0] > errs[1] > errs[2]


# --- resolvent solves -----------------------------------------------------------------

def test_resolvent_zero_rhs(strip):
    A = oracle.fd_robin_matrix(_gauss(strip), strip)
    assert not np.any(oracle.fd_resolvent_apply(A, -5.0, np.zeros(strip.size)))


def test_resolvent_on_eigenvector(strip):
    A = oracle.fd_robin_matrix(_gauss(strip), strip)
    mu, v = spla.eigs(A.matrix, k=1, sigma=-3.0)
    out = oracle.fd_resolvent_apply(A, -5.0, v[:, 0])
    assert np.allclose(out, v[:, 0] / (mu[0] + 5.0), atol=1e-10)


def test_resolvent_random_residual(strip):
    rng = np.random.default_rng(5)
    A = oracle.fd_robin_matrix(_gauss(strip, a=0.5 + 0.5j), strip)
    u = rng.standard_normal(strip.size) + 1j * rng.standard_normal(strip.size)
    v = oracle.fd_resolvent_apply(A, -2.0 + 1j, u)
    r = A.matrix @ v - (-2.0 + 1j) * v - u
    assert np.linalg.norm(r) / np.linalg.norm(u) < 1e-10


def test_resolvent_near_singular_reported(strip):
    A = oracle.fd_neumann_matrix(strip)
    # zero is an exact eigenvalue of the discrete Neumann operator (constants)
    with pytest.raises((np.linalg.LinAlgError, RuntimeError)):
        oracle.fd_resolvent_apply(A, 0.0, np.ones(strip.size))


# --- dense difference ----------------------------------------------------------------

def test_difference_equal_inputs(strip):
    a = _gauss(strip)
    s = oracle.fd_difference_singulars(a, a, -5.0, strip, 10)
    assert s.values.shape == (10,) and not np.any(s.values)


def test_difference_swap_invariant():
    st = oracle.StripGrid(16, 24, 10.0, 4.0)
    a1, a2 = _gauss(st, a=0.5), _const(st, -0.8)
    s12 = oracle.fd_difference_singulars(a1, a2, -3.0, st, 12).values
    s21 = oracle.fd_difference_singulars(a2, a1, -3.0, st, 12).values
    assert np.allclose(s12, s21, rtol=1e-10, atol=1e-14)


def test_difference_size_limit():
    st = oracle.StripGrid(128, 64, 10.0, 4.0)
    with pytest.raises(ValueError):
        oracle.fd_difference_singulars(_const(st, 0.0), _gauss(st), -5.0, st, 5)


def test_difference_close_to_boundary_reduction():
    # small-size sanity version of the cross-check run in the acceptance suite
    st = oracle.StripGrid(32, 48, 24.0, 4.0)
    a2 = sample_coefficient(CoefficientSpec("gaussian", a=1.0, sigma=6.0), st.boundary)
    fd = oracle.fd_difference_singulars(_const(st, 0.0), a2, -5.0, st, 5).values
    g = make_grid(1, 256, 24.0)
    ref = singular_values(boundary_reduced_difference(
        GridFunction(g, np.zeros(g.size)),
        sample_coefficient(CoefficientSpec("gaussian", a=1.0, sigma=6.0), g), -5.0)).values[:5]
    assert np.max(np.abs(fd - ref) / ref) < 0.2


# --- Krein formula --------------------------------------------------------------------

def _source(st):
    return st.sample(lambda x, t: np.exp(-((x - st.L / 2) ** 2 + (t - 1.0) ** 2) / 2))


def test_krein_zero_alpha_is_neumann(strip):
    u = _source(strip)
    vk = oracle.krein_resolvent_apply(_const(strip, 0.0), -5.0, u, strip)
    vn = oracle.fd_resolvent_apply(oracle.fd_neumann_matrix(strip), -5.0, u)
    assert np.allclose(vk, vn, atol=1e-14)


def test_krein_constant_alpha_fiber_formula():
    st = oracle.StripGrid(16, 64, 8.0, 5.0)
    c, lam = 1.5, -5.0
    xi = st.boundary.axis_freq[2]
    g_t = np.exp(-st.t) * st.t
    u = np.exp(1j * xi * st.boundary.axis)[:, None] * g_t[None, :]
    v = oracle.krein_resolvent_apply(_const(st, c), lam, u.ravel(), st)
    v -= oracle.fd_resolvent_apply(oracle.fd_neumann_matrix(st), lam, u.ravel())
    w = np.sqrt(xi**2 - lam)
    phi = np.sum(st.depth_weights * np.exp(-w * st.t) * g_t) / w
    corr = (c / (1 - c / w)) * phi * np.exp(-w * st.t) / w
    expect = np.exp(1j * xi * st.boundary.axis)[:, None] * corr[None, :]
    assert np.allclose(v.reshape(st.Nx, st.Nt), expect, atol=1e-12)


def test_krein_converges_to_fd():
    errs = []
    st = oracle.StripGrid(32, 32, 16.0, 4.0)
    for _ in range(3):
        a = _gauss(st)
        u = _source(st)
        vk = oracle.krein_resolvent_apply(a, -5.0, u, st)
        vf = oracle.fd_resolvent_apply(oracle.fd_robin_matrix(a, st), -5.0, u)
        errs.append(st.norm(vk - vf) / st.norm(vf))
        st = st.refined()
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[2] >= 1.8


def test_krein_simpson_rule_runs(strip):
    u = _source(strip)
    a = _gauss(strip)
    vt = oracle.krein_resolvent_apply(a, -5.0, u, strip)
    vs = oracle.krein_resolvent_apply(a, -5.0, u, strip, rule="simpson")
    assert np.linalg.norm(vt - vs) < 0.05 * np.linalg.norm(vt)
    with pytest.raises(ValueError):
        oracle.gamma_adjoint(u, -5.0, strip, rule="gauss")


def test_krein_depth_warning():
    st = oracle.StripGrid(16, 16, 8.0, 1.0)
    with pytest.warns(oracle.QuadratureDepthWarning):
        oracle.krein_resolvent_apply(_gauss(st, a=0.5), -2.0, _source(st), st)


def test_krein_precondition(strip):
    with pytest.raises(ValueError):
        oracle.krein_resolvent_apply(_gauss(strip, a=3.0), -4.0, _source(strip), strip)


def test_simpson_weights_integrate_cubic():
    for Nt in (9, 10):
        h = 0.1
        t = np.arange(Nt) * h
        w = oracle._simpson_weights(Nt, h)
        assert np.sum(w) == pytest.approx(t[-1])
        if Nt % 2:
            assert np.sum(w * t**3) == pytest.approx(t[-1] ** 4 / 4, rel=1e-12)


# --- Green identity, fiber bound state ------------------------------------------------

def test_green_examples():
    assert oracle.green_identity_residual((0.0, 1.0), (0.0, 1.0)) == 0.0
    assert oracle.green_identity_residual((0.0, 1.0), (0.0, 2.0)) == pytest.approx(0.0, abs=1e-15)
    assert oracle.green_identity_residual((1.0, 1.0), (2.0, 3.0)) == 0.0
    with pytest.raises(ValueError):
        oracle.green_identity_residual((0.0, -1.0), (0.0, 1.0))


def test_green_random_suite():
    rng = np.random.default_rng(0)
    for _ in range(20):
        xi = rng.uniform(-5, 5, size=2)
        r = oracle.green_identity_residual((xi, rng.uniform(0.1, 5)), (xi.copy(), rng.uniform(0.1, 5)))
        assert r < 1e-10


def test_fiber_bound_state():
    fb = oracle.fiber_bound_state(2.0, 0.0)
    assert fb.analytic == -4.0 and fb.rel_error < 0.02
    assert oracle.fiber_bound_state(1.0, 1.0).analytic == 0.0
    assert abs(oracle.fiber_bound_state(1.0, 1.0).fd) < 0.05
    assert oracle.fiber_bound_state(-1.0, 0.0) is None
    assert oracle.fiber_bound_state(0.0, 0.0) is None


def test_fiber_matches_strip_ground_state():
    st = oracle.StripGrid(8, 512, 4.0, 40.0)
    S = oracle.fd_robin_matrix(_const(st, 2.0), st).symmetric()
    mu = spla.eigsh(S, k=1, sigma=-10.0, return_eigenvectors=False)[0]
    assert mu == pytest.approx(oracle.fiber_bound_state(2.0, 0.0, 512, 40.0).fd, rel=1e-10)


def test_strip_eigenvalues_sorted_below():
    st = oracle.StripGrid(64, 64, 20.0, 6.0)
    a = sample_coefficient(CoefficientSpec("box", a=2.0, halfwidth=1.0), st.boundary)
    vals = oracle.fd_strip_eigenvalues(a, st, k=4, below=-0.1)
    assert vals.size >= 1 and np.all(vals.real < -0.1)
    assert np.all(np.diff(vals.real) >= 0) and np.allclose(vals.imag, 0)


def test_dump_csv_gated(tmp_path, monkeypatch):
    p = tmp_path / "a.csv"
    monkeypatch.delenv("HALFROBIN_DUMP", raising=False)
    oracle.dump_csv(str(p), np.ones(3))
    assert not p.exists()
    monkeypatch.setenv("HALFROBIN_DUMP", "1")
    oracle.dump_csv(str(p), np.array([1 + 2j, 3.0]))
    assert p.read_text().splitlines()[0] == "re,im"
