import numpy as np
import pytest

from ckn.errors import NormalizationError
from ckn.eigensolver import (
    CylinderOperator,
    SolverCache,
    assemble_operator,
    embed,
    lowest_eigenpair,
    q_norm,
    restrict,
)
from ckn.fixedpoint import self_potential
from ckn.model import Field, ProblemParams, build_grid, dirichlet_energy
from ckn.symmetric import mu_FS, soliton

P, D = 2.8, 5


def normalized_constant_potential(g):
    c = (1.0 / g.integrate(np.ones(g.shape))) ** ((g.p - 2.0) / g.p)
    return Field(g, np.full(g.shape, c))


@pytest.fixture(scope="module")
def grid400():
    params = ProblemParams(D, P, 1.0, "probability")
    return build_grid(10.0, 400, 48, params)


@pytest.fixture(scope="module")
def cache():
    return SolverCache()


def soliton_problem(g, mu):
    u = soliton(mu, g.p).sample(g)
    V = self_potential(u)
    kappa = float(g.integrate(np.abs(u.values) ** g.p) ** ((g.p - 2.0) / g.p))
    return kappa, V, u


def test_kappa_zero_dirichlet_mode(grid400):
    g = grid400
    res = lowest_eigenpair(0.0, normalized_constant_potential(g), g, tol=1e-9)
    assert res.lam == pytest.approx((np.pi / 20.0) ** 2, rel=0.02)
    assert res.residual <= 1e-9
    # lowest mode is angular-constant
    var = np.ptp(res.u.values[g.n_s // 2, 1:-1])
    assert var < 1e-8


@pytest.mark.parametrize("mu", [2.0, mu_FS(P, D), 8.0])
def test_soliton_potential_eigenvalue(grid400, cache, mu):
    g = grid400
    kappa, V, u = soliton_problem(g, mu)
    res = lowest_eigenpair(kappa, V, g, tol=1e-9, cache=cache)
    assert res.lam == pytest.approx(-mu, rel=1e-3)
    assert res.u.norm_sq() == pytest.approx(1.0, rel=1e-12)
    assert res.u.values.min() >= -1e-8 * res.u.values.max()


def test_monotone_in_kappa(grid400, cache):
    g = grid400
    kappa, V, u = soliton_problem(g, 2.0)
    r1 = lowest_eigenpair(kappa, V, g, cache=cache)
    r2 = lowest_eigenpair(1.5 * kappa, V, g, warm_start=r1.u, cache=cache)
    assert r2.lam <= r1.lam


def test_rayleigh_quotient_optimality(grid400, cache):
    g = grid400
    kappa, V, _ = soliton_problem(g, mu_FS(P, D))
    res = lowest_eigenpair(kappa, V, g, cache=cache)
    op = CylinderOperator(kappa, V, g)
    rng = np.random.RandomState(0)
    for _ in range(20):
        v = rng.randn(op.n)
        assert op.rayleigh(v) >= res.lam - 1e-9


def test_grid_convergence_order(cache):
    params = ProblemParams(D, P, 1.0, "probability")
    mu = mu_FS(P, D)
    errs = []
    for ns, nphi in [(101, 13), (201, 25), (401, 49)]:
        g = build_grid(8.0, ns, nphi, params)
        kappa, V, _ = soliton_problem(g, mu)
        res = lowest_eigenpair(kappa, V, g, tol=1e-10)
        errs.append(abs(res.lam + mu))
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 1.8


def test_eigenfunction_symmetric_for_symmetric_potential(grid400, cache):
    g = grid400
    kappa, V, _ = soliton_problem(g, 2.0)
    res = lowest_eigenpair(kappa, V, g, cache=cache)
    from ckn.continuation import asymmetry

    assert asymmetry(res.u) <= 1e-8


def test_operator_self_adjoint(grid400):
    g = grid400
    kappa, V, _ = soliton_problem(g, 2.0)
    op = assemble_operator(kappa, V, g)
    rng = np.random.RandomState(1)
    worst = 0.0
    for _ in range(10):
        a, b = rng.randn(op.n), rng.randn(op.n)
        lhs = float(op.matvec(a) @ b)
        rhs = float(a @ op.matvec(b))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-30))
    assert worst <= 1e-10


def test_action_on_angular_constant_matches_1d():
    params = ProblemParams(D, P, 1.0, "probability")
    g = build_grid(8.0, 120, 16, params)
    op = assemble_operator(0.0, normalized_constant_potential(g), g)
    gfun = np.sin(np.pi * (g.s + g.L) / (2 * g.L))
    u = Field(g, np.repeat(gfun[:, None], g.n_phi, axis=1))
    act = op.apply(u).values
    # interior rows act exactly as the 1D second difference
    one_d = np.zeros_like(gfun)
    one_d[1:-1] = (-gfun[2:] + 2 * gfun[1:-1] - gfun[:-2]) / g.h_s**2
    for j in range(1, g.n_phi - 1):
        np.testing.assert_allclose(act[1:-1, j], one_d[1:-1], rtol=1e-10, atol=1e-13)


def test_first_harmonic_adds_d_minus_1():
    # Rayleigh quotient of g(s) cos(phi) equals t[g] + (d-1) with O(h^2) error
    params = ProblemParams(D, P, 1.0, "probability")
    errs = []
    for ns, nphi in [(101, 17), (201, 33), (401, 65)]:
        g = build_grid(8.0, ns, nphi, params)
        gfun = np.exp(-g.s**2)
        u = Field(g, gfun[:, None] * np.cos(g.phi)[None, :])
        X = dirichlet_energy(u)
        Y = g.integrate(u.values**2)
        # exact transverse quotient: (int g'^2 + (d-1) int g^2) / int g^2
        from scipy.integrate import quad

        num = quad(lambda s: 4 * s**2 * np.exp(-2 * s**2), -8, 8)[0]
        den = quad(lambda s: np.exp(-2 * s**2), -8, 8)[0]
        exact = num / den + (D - 1)
        errs.append(abs(X / Y - exact))
    assert errs[-1] <= errs[0] / 6.0
    assert errs[-1] < 5e-3


def test_potential_normalization_checked(grid400):
    g = grid400
    V = Field(g, np.full(g.shape, 1.0))
    assert abs(q_norm(V) - 1.0) > 1e-3
    with pytest.raises(NormalizationError):
        lowest_eigenpair(1.0, V, g)


def test_restrict_embed_roundtrip():
    params = ProblemParams(D, P, 1.0, "probability")
    g = build_grid(8.0, 32, 8, params)
    rng = np.random.RandomState(2)
    vec = rng.randn((g.n_s - 2) * (g.n_phi - 2))
    full = embed(g, vec)
    np.testing.assert_array_equal(restrict(g, full), vec)
    assert np.all(full[0] == 0) and np.all(full[-1] == 0)
    np.testing.assert_array_equal(full[:, 0], full[:, 1])
