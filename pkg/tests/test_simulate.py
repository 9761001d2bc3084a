import numpy as np
import pytest

from regime_split.dataio import build_design
from regime_split.errors import ContractError
from regime_split.simulate import DgpSpec, derive_seed, generate, monte_carlo


def test_noiseless_dgp_obeys_two_regime_model():
    spec = DgpSpec(T=120, noise_sd=0.0, seed=3, delta_star=0.7)
    d = build_design(generate(spec), spec.lag_order)
    X = d.regressors
    theta_b = spec.base_coefficients()
    theta_a = theta_b + spec.gap()
    hi = d.threshold_var > spec.tau_star
    assert 10 < hi.sum() < len(d) - 10
    np.testing.assert_allclose(d.response[hi], X[hi] @ theta_a, atol=1e-10)
    np.testing.assert_allclose(d.response[~hi], X[~hi] @ theta_b, atol=1e-10)


def test_dummy_shifted_dgp():
    spec = DgpSpec(T=120, noise_sd=0.0, seed=1, tau1_star=-2.0)
    ds = generate(spec)
    d = build_design(ds, spec.lag_order)
    shift = np.array([q > spec.break_quarter() for q in d.index]) * spec.tau1_star
    hi = d.threshold_var + shift > spec.tau_star
    theta = np.where(hi[:, None], spec.base_coefficients() + spec.gap(),
                     spec.base_coefficients())
    np.testing.assert_allclose(d.response, np.einsum("ij,ij->i", d.regressors, theta),
                               atol=1e-10)


def test_generate_reproducible():
    a = generate(DgpSpec(T=60, seed=5))
    b = generate(DgpSpec(T=60, seed=5))
    np.testing.assert_array_equal(a.gdp, b.gdp)
    assert not np.array_equal(a.gdp, generate(DgpSpec(T=60, seed=6)).gdp)


def test_derive_seed():
    assert derive_seed(1, 2) == derive_seed(1, 2)
    assert len({derive_seed(1, r) for r in range(200)}) == 200
    assert derive_seed(1, 2, 0) != derive_seed(1, 2, 1)


def test_spec_contracts():
    with pytest.raises(ContractError):
        DgpSpec(T=10)
    with pytest.raises(ContractError):
        DgpSpec(rho=1.0)
    with pytest.raises(ContractError):
        DgpSpec(law="empirical")
    with pytest.raises(ContractError):
        DgpSpec(delta_star=[1.0, 2.0]).gap()
    with pytest.raises(ContractError):
        monte_carlo(DgpSpec(T=60), 0)
    with pytest.raises(ContractError):
        monte_carlo(DgpSpec(T=60), 2, estimator="gmm")


def test_empirical_law():
    spec = DgpSpec(T=60, law="empirical", empirical=(3.0, 5.0, 9.0), seed=2)
    assert set(np.unique(generate(spec).unemp)) <= {3.0, 5.0, 9.0}


def test_threshold_study_fields_and_threads():
    spec = DgpSpec(T=150, seed=4, delta_star=1.5)
    a = monte_carlo(spec, 12, threads=1)
    b = monte_carlo(spec, 12, threads=6)
    assert a.to_dict(traces=True) == b.to_dict(traces=True)
    assert a.failures == 0
    for key in ("bias", "rmse", "coverage", "median_abs_error", "mean_ci_width",
                "median_step_error"):
        assert getattr(a, key) is not None
    err = np.array([t["tau_hat"] for t in a.traces]) - 7.0
    assert a.bias == pytest.approx(err.mean())
    assert 0.0 <= a.coverage <= 1.0


def test_supwald_study():
    spec = DgpSpec(T=80, seed=1, tau_star=None, lag_order=1)
    res = monte_carlo(spec, 3, estimator="supwald", B=19, threads=2)
    assert res.size in (0.0, 1 / 3, 2 / 3, 1.0)
    assert all("p_value" in t for t in res.traces)


def test_failures_are_counted():
    # 31 design rows cannot hold two regimes of 16 rows each
    spec = DgpSpec(T=35, seed=0, lag_order=4)
    res = monte_carlo(spec, 4)
    assert res.failures == 4
    assert res.bias is None
    assert all("error" in t for t in res.traces)
