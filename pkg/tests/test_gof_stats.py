import json
import math

import numpy as np
import pytest
from scipy.special import kolmogorov as scipy_kolmogorov
from scipy.special import ndtri

import gammaclutter.fpm_mc as fp
import gammaclutter.gof_stats as gs
import gammaclutter.mgf_core as mc
from gammaclutter.errors import InvalidScenario, NonMonotoneSF


def test_ks_single_sample_at_median():
    dist = fp.EmpiricalDistribution(np.array([math.log(2.0)]), 1)
    d = gs.ks_statistic(dist, lambda v: np.exp(-np.asarray(v)))
    assert d == pytest.approx(0.5, abs=1e-12)


def test_ks_nonmonotone_sf_rejected():
    # cos^2 rises again between v=2 and v=3
    dist = fp.EmpiricalDistribution(np.array([0.5, 2.0, 3.0]), 3)
    with pytest.raises(NonMonotoneSF):
        gs.ks_statistic(dist, lambda v: np.cos(np.asarray(v)) ** 2)


def test_ks_null_median_matches_kolmogorov():
    # samples drawn from the model itself: median of sqrt(n) D over
    # replicates approaches the Kolmogorov median 0.8276
    rng = np.random.default_rng(77)
    n, reps = 10000, 120
    stats = []
    for _ in range(reps):
        x = np.sort(rng.exponential(size=n))
        dist = fp.EmpiricalDistribution(x, n)
        stats.append(gs.ks_statistic(dist, lambda v: np.exp(-np.asarray(v))))
    med = np.median(np.array(stats)) * math.sqrt(n)
    want = gs.kolmogorov_critical(0.5)
    assert want == pytest.approx(0.82757, abs=1e-4)
    assert abs(med - want) < 0.06


def test_ks_invariant_under_monotone_transform():
    rng = np.random.default_rng(5)
    x = np.sort(rng.exponential(size=500))
    d1 = gs.ks_statistic(fp.EmpiricalDistribution(x, 500),
                         lambda v: np.exp(-np.asarray(v)))
    y = x ** 3
    d2 = gs.ks_statistic(fp.EmpiricalDistribution(np.sort(y), 500),
                         lambda v: np.exp(-np.asarray(v) ** (1.0 / 3.0)))
    assert d1 == pytest.approx(d2, abs=1e-15)


def test_kolmogorov_sf_values_and_monotonicity():
    assert gs.kolmogorov_sf(0.0) == 1.0
    assert gs.kolmogorov_sf(1e-9) == pytest.approx(1.0, abs=1e-15)
    assert gs.kolmogorov_sf(3.0) == pytest.approx(2.0 * math.exp(-18.0),
                                                  rel=1e-6)
    xs = np.linspace(0.01, 3.0, 120)
    vals = gs.kolmogorov_sf(xs)
    assert np.all(np.diff(vals) <= 0)
    assert np.max(np.abs(vals - scipy_kolmogorov(xs))) < 1e-12


def test_kolmogorov_critical_alpha001():
    x = gs.kolmogorov_critical(0.01)
    assert x == pytest.approx(1.6276, abs=2e-4)
    assert gs.kolmogorov_sf(x) == pytest.approx(0.01, abs=1e-9)


def test_dkw_epsilon_values():
    assert gs.dkw_epsilon(10 ** 4, 0.01) == pytest.approx(
        math.sqrt(math.log(200.0) / 2e4), rel=1e-15)
    # closed-form endpoint: alpha = 2 e^{-2n}  =>  epsilon = 1
    n = 3
    assert gs.dkw_epsilon(n, 2.0 * math.exp(-2.0 * n)) == pytest.approx(1.0)
    assert gs.dkw_epsilon(4 * 100, 0.05) == pytest.approx(
        0.5 * gs.dkw_epsilon(100, 0.05))
    with pytest.raises(InvalidScenario):
        gs.dkw_epsilon(0, 0.01)


def test_z_quantile_matches_scipy():
    for p in (1e-9, 1e-4, 0.025, 0.3, 0.5, 0.77, 0.995, 1 - 1e-7):
        assert gs.z_quantile(p) == pytest.approx(float(ndtri(p)), abs=1e-9)
    with pytest.raises(InvalidScenario):
        gs.z_quantile(0.0)


def test_perturbation_identities():
    assert gs.delta_max(0.0) == 0.0
    eps = gs.epsilon_from_delta(0.003)
    assert abs(eps - math.e * 0.003) < 3e-4          # seed is e*delta
    assert gs.delta_max(eps) == pytest.approx(0.003, rel=1e-12)

    # extremum of sf - sf^(1+eps) sits where sf = (1/(1+eps))^(1/eps)
    sf = lambda x: np.exp(-np.asarray(x, dtype=float))
    g = gs.perturb_sf(sf, eps)
    xs = np.linspace(0.0, 12.0, 200001)
    diff = sf(xs) - g(xs)
    x_star = xs[np.argmax(diff)]
    sf_star = (1.0 / (1.0 + eps)) ** (1.0 / eps)
    assert sf(x_star) == pytest.approx(sf_star, abs=1e-4)
    assert diff.max() == pytest.approx(0.003, rel=1e-6)

    # survival axioms preserved
    assert g(0.0) == pytest.approx(1.0)
    out = g(xs)
    assert np.all(np.diff(out) <= 0) and out[-1] < 1e-5


def test_ks_report_fields():
    rng = np.random.default_rng(3)
    x = np.sort(rng.exponential(size=2000))
    rep = gs.ks_report(fp.EmpiricalDistribution(x, 2000),
                       lambda v: np.exp(-np.asarray(v)))
    assert 0.0 <= rep.statistic <= 1.0
    assert 0.0 <= rep.p_value <= 1.0
    assert rep.reject_at[0.01] == (
        rep.statistic * math.sqrt(2000) > gs.kolmogorov_critical(0.01))


def test_ensemble_null_coverage_and_json():
    # null-true synthetic: pure-noise scenario against its exact survival
    from scipy.special import gammaincc
    M = 4
    p = mc.scenario(M=M, kappa=1, S=0.0, q=0.0, nu=np.inf)
    sf = lambda v: gammaincc(M, M * np.clip(np.asarray(v, float), 0, None))
    ens = gs.ks_ensemble(p, sf, K=120, n=2000, seed=11, alpha=0.01)
    assert not ens.rejected
    # theoretical curve inside the Greenwood band except a small fraction
    inside = (ens.kolmogorov_curve >= ens.green_lo - 1e-12) & \
             (ens.kolmogorov_curve <= ens.green_hi + 1e-12)
    interior = (ens.ensemble_sf > 0) & (ens.ensemble_sf < 1)
    frac_out = 1.0 - inside[interior].mean()
    assert frac_out <= 0.15
    # band ordering and serialization round trip
    assert np.all(ens.boot_lo <= ens.boot_hi)
    assert np.all(ens.green_lo <= ens.green_hi)
    payload = json.loads(ens.to_json())
    assert payload["K"] == 120 and payload["n"] == 2000
    assert len(payload["statistics"]) == 120
    assert len(payload["greenwood"]["lower"]) == len(payload["grid"])
    assert payload["rejected"] is False


class ErlangSF:
    """Picklable null survival for the pure-noise scenario."""

    def __init__(self, M):
        self.M = M

    def __call__(self, v):
        from scipy.special import gammaincc
        return gammaincc(self.M,
                         self.M * np.clip(np.asarray(v, float), 0, None))


def test_ensemble_threaded_matches_serial():
    M = 3
    p = mc.scenario(M=M, kappa=1, S=0.0, q=0.0, nu=np.inf)
    sf = ErlangSF(M)
    a = gs.ks_ensemble(p, sf, K=24, n=500, seed=2, alpha=0.01)
    b = gs.ks_ensemble(p, sf, K=24, n=500, seed=2, alpha=0.01, threads=2)
    assert np.array_equal(a.statistics, b.statistics)
    assert a.rejected == b.rejected


def test_rejection_scan_consecutive_rule():
    need = gs.CONSECUTIVE_EXITS
    dkw = np.full(12, 0.5)
    below = np.full(12, 0.4)
    # one short of the calibrated run length: not enough
    lo = below.copy()
    lo[2:2 + need - 1] = 0.6
    assert not gs.rejection_scan(dkw, lo)
    # exactly the calibrated run length triggers
    lo = below.copy()
    lo[2:2 + need] = 0.6
    assert gs.rejection_scan(dkw, lo)
