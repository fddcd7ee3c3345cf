import numpy as np
import pytest
from scipy.integrate import quad

from ckn.continuation import (
    Branch,
    BranchPoint,
    asymmetry,
    continue_branch,
    initialize,
    merge_branches,
    symmetric_discrete_branch,
)
from ckn.eigensolver import SolverCache
from ckn.errors import SymmetricFallbackError
from ckn.io import FieldStore
from ckn.model import Field, ProblemParams, build_grid
from ckn.symmetric import critical_value_sym, mu_FS, soliton, soliton_norms

P, D = 2.8, 5


@pytest.fixture(scope="module")
def coarse():
    params = ProblemParams(D, P, 1.0, "surface")
    grid = build_grid(8.0, 120, 16, params)
    return grid, params, SolverCache()


def test_asymmetry_symmetric_field(coarse):
    g, params, _ = coarse
    u = soliton(2.0, P).sample(g)
    assert asymmetry(u) < 1e-14


def test_asymmetry_pure_harmonic(coarse):
    g, params, _ = coarse
    gs = np.exp(-g.s**2)
    u = Field(g, gs[:, None] * np.cos(g.phi)[None, :])
    assert asymmetry(u) == pytest.approx(1.0, rel=1e-10)


def test_asymmetry_small_perturbation(coarse):
    g, params, _ = coarse
    gs = np.exp(-g.s**2)
    u = Field(g, gs[:, None] * (1.0 + 0.1 * np.cos(g.phi)[None, :]))
    # oracle: <cos^2> under the sin^3 density is 1/5
    num = quad(lambda t: np.cos(t) ** 2 * np.sin(t) ** 3, 0, np.pi)[0]
    den = quad(lambda t: np.sin(t) ** 3, 0, np.pi)[0]
    m2 = num / den
    expected = 0.1 * np.sqrt(m2) / np.sqrt(1.0 + 0.01 * m2)
    assert expected == pytest.approx(0.04468, abs=2e-5)
    assert asymmetry(u) == pytest.approx(expected, rel=1e-6)


@pytest.fixture(scope="module")
def mini_branch(coarse, tmp_path_factory):
    g, params, cache = coarse
    store = FieldStore(tmp_path_factory.mktemp("mini"))
    start, fp = initialize(1.2 * mu_FS(P, D), 0.05, g, params, store, cache)
    eta = start.kappa / 60.0
    down = continue_branch(start, eta, "down", 0.0, g, params, store,
                           start_result=fp, cache=cache)
    up = continue_branch(start, eta, "up", start.kappa * 1.1, g, params, store,
                         start_result=fp, cache=cache)
    return store, start, fp, down, up


def test_initialize_breaks_symmetry(mini_branch):
    _, start, fp, _, _ = mini_branch
    assert start.asymmetry > 1e-3
    params = ProblemParams(D, P, 1.0, "surface")
    assert start.kappa < critical_value_sym(start.mu, params)
    assert start.mu > mu_FS(P, D)


def test_initialize_falls_back_below_threshold(coarse, tmp_path_factory):
    g, params, cache = coarse
    store = FieldStore(tmp_path_factory.mktemp("fallback"))
    with pytest.raises(SymmetricFallbackError):
        initialize(0.9 * mu_FS(P, D), 0.05, g, params, store, cache)


def test_initialize_zero_eps_returns_symmetric(coarse, tmp_path_factory):
    g, params, cache = coarse
    store = FieldStore(tmp_path_factory.mktemp("zeroeps"))
    pt, fp = initialize(1.2 * mu_FS(P, D), 0.0, g, params, store, cache)
    assert pt.asymmetry <= 1e-6
    assert pt.mu == pytest.approx(1.2 * mu_FS(P, D), rel=5e-3)


def test_branch_kappa_monotone(mini_branch):
    _, _, _, down, up = mini_branch
    for br in (down, up):
        assert np.all(np.diff(br.kappas()) > 0)


def test_branch_point_invariants(mini_branch):
    _, _, _, down, up = mini_branch
    for br in (down, up):
        for pt in br.points:
            assert pt.mu > 0 and pt.Z > 0
            assert 0.0 <= pt.asymmetry <= 1.0
            assert pt.X + pt.mu * pt.Y == pytest.approx(pt.Z, rel=1e-5)
            assert pt.kappa == pytest.approx(pt.Z ** ((P - 2) / P), rel=1e-6)
            assert pt.t == pytest.approx(pt.X / pt.Y, rel=1e-12)


def test_down_branch_reaches_bifurcation(mini_branch):
    _, _, _, down, _ = mini_branch
    mufs = mu_FS(P, D)
    nonsym = [pt for pt in down.points if pt.asymmetry > 1e-4]
    assert min(pt.mu for pt in nonsym) <= 1.1 * mufs
    # convention: points below the bifurcation are symmetric
    below = [pt for pt in down.points if pt.mu <= mufs]
    assert below, "branch should extend below the bifurcation"
    assert all(pt.asymmetry <= 1e-4 for pt in below)
    assert min(pt.mu for pt in below) <= 0.11 * mufs


def test_energy_ordering_along_branch(mini_branch):
    _, _, _, down, up = mini_branch
    params = ProblemParams(D, P, 1.0, "surface")
    mufs = mu_FS(P, D)
    for br in (down, up):
        for pt in br.points:
            if pt.mu > 1.01 * mufs and pt.asymmetry > 1e-3:
                assert pt.kappa < critical_value_sym(pt.mu, params)


def test_checkpoints_stored_and_loadable(mini_branch, coarse):
    store, _, _, down, _ = mini_branch
    g, _, _ = coarse
    pt = down.points[-1]
    u = store.load(pt.field_ref, g)
    assert u.values.shape == g.shape


def test_merge_branches(mini_branch):
    _, _, _, down, up = mini_branch
    merged = merge_branches(down, up)
    ks = merged.kappas()
    assert np.all(np.diff(ks) > 0)
    assert len(merged.points) <= len(down.points) + len(up.points)


def test_branch_validation():
    params = ProblemParams(D, P, 1.0, "surface")
    pts = [BranchPoint(kappa=2.0, mu=1.0, X=1, Y=1, Z=2, t=1, asymmetry=0.0),
           BranchPoint(kappa=1.0, mu=0.5, X=1, Y=1, Z=2, t=1, asymmetry=0.0)]
    with pytest.raises(ValueError):
        Branch(params=params, points=pts)


def test_symmetric_discrete_branch_matches_closed_form(coarse, tmp_path_factory):
    g, params, cache = coarse
    store = FieldStore(tmp_path_factory.mktemp("symb"))
    kfs = critical_value_sym(mu_FS(P, D), params)
    br = symmetric_discrete_branch([0.8 * kfs, kfs], g, params, store, cache)
    assert len(br.points) == 2
    for pt in br.points:
        from ckn.symmetric import mu_from_kappa_sym

        mu_cf = mu_from_kappa_sym(pt.kappa, params)
        assert pt.mu == pytest.approx(mu_cf, rel=2e-3)
        assert pt.asymmetry <= 1e-8
        _, _, Zc = soliton_norms(mu_cf, P, D, "surface")
        assert pt.Z == pytest.approx(Zc, rel=5e-3)


def test_continue_branch_rejects_bad_args(mini_branch, coarse):
    store, start, fp, _, _ = mini_branch
    g, params, cache = coarse
    with pytest.raises(ValueError):
        continue_branch(start, -0.1, "down", 0.0, g, params, store)
    with pytest.raises(ValueError):
        continue_branch(start, 0.1, "sideways", 0.0, g, params, store)
