import json
import math

import numpy as np
import pytest

from uavrisk.errors import InputError
from uavrisk.risk import (RiskProfile, RiskSamples, cvar, risk_histogram,
                          risk_transform, var, write_risk_report)

from oracles import cvar_oracle, var_oracle

FIG_PROFILE = RiskProfile(gamma=6.93, lambda_floor=10.0, battery_capacity=40.0)


class TestTransform:
    def test_cap_region_value(self):
        # reserve below the floor: r = exp(gamma/lambda) - 1 everywhere
        expected = math.exp(6.93 / 10.0) - 1.0
        for e in (30.0, 35.0, 39.0, 400.0):
            r = FIG_PROFILE.transform(e)
            assert float(r) == expected

    def test_zero_energy_value(self):
        r = float(FIG_PROFILE.transform(0.0))
        assert r == math.exp(6.93 / 40.0) - 1.0
        assert r == pytest.approx(0.1892, abs=5e-4)

    def test_cap_continuity_at_floor_boundary(self):
        at_floor = float(FIG_PROFILE.transform(40.0 - 10.0))
        beyond = float(FIG_PROFILE.transform(40.0 - 10.0 + 3.0))
        assert at_floor == beyond == FIG_PROFILE.cap

    def test_monotone_in_energy(self):
        rng = np.random.default_rng(0)
        e = np.sort(rng.uniform(0.0, 60.0, 1000))
        r = FIG_PROFILE.transform(e)
        assert np.all(np.diff(r) >= 0.0)

    def test_bounds(self):
        rng = np.random.default_rng(1)
        e = rng.uniform(0.0, 100.0, 1000)
        r = FIG_PROFILE.transform(e)
        assert np.all(r > 0.0)
        assert np.all(r <= FIG_PROFILE.cap)

    def test_transform_preserves_metadata_and_order(self):
        samples = risk_transform([5.0, 15.0, 25.0], FIG_PROFILE)
        assert samples.risks == tuple(sorted(samples.risks))
        assert samples.metadata["risk_profile"]["gamma"] == 6.93

    def test_invalid_profile_rejected(self):
        with pytest.raises(InputError):
            RiskProfile(gamma=0.0, lambda_floor=1.0, battery_capacity=1.0)


class TestQuantiles:
    def test_hand_case_1_to_100(self):
        risks = np.arange(1.0, 101.0)
        assert var(risks, 0.95) == 95.0
        assert cvar(risks, 0.95) == 98.0

    def test_all_equal(self):
        risks = np.full(37, 0.4)
        for nu in (0.1, 0.5, 0.95):
            assert var(risks, nu) == 0.4
            assert cvar(risks, nu) == 0.4

    def test_single_sample(self):
        assert var([0.7], 0.5) == 0.7
        assert cvar([0.7], 0.5) == 0.7

    def test_nu_domain_checked(self):
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(InputError):
                var([1.0, 2.0], bad)
            with pytest.raises(InputError):
                cvar([1.0, 2.0], bad)

    def test_against_brute_force_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            n = int(rng.integers(1, 2000))
            x = rng.gamma(2.0, 1.5, n)
            nu = float(rng.uniform(0.01, 0.99))
            assert var(x, nu) == var_oracle(x.tolist(), nu)
            assert cvar(x, nu) == pytest.approx(cvar_oracle(x.tolist(), nu),
                                                rel=1e-12)

    def test_cvar_sandwiched_between_var_and_max(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            x = rng.gamma(2.0, 1.5, int(rng.integers(2, 500)))
            nu = float(rng.uniform(0.05, 0.99))
            v, c = var(x, nu), cvar(x, nu)
            assert v <= c <= float(np.max(x)) + 1e-12

    def test_positive_homogeneity_exact(self):
        # scaling by a power of two keeps every float op exact
        rng = np.random.default_rng(4)
        x = rng.gamma(2.0, 1.5, 500)
        assert cvar(2.0 * x, 0.9) == 2.0 * cvar(x, 0.9)
        assert cvar(0.5 * x, 0.9) == 0.5 * cvar(x, 0.9)

    def test_monotonicity_in_samples(self):
        rng = np.random.default_rng(5)
        x = rng.gamma(2.0, 1.5, 400)
        y = x + rng.uniform(0.0, 0.5, 400)
        for nu in (0.5, 0.9, 0.99):
            assert cvar(y, nu) >= cvar(x, nu)

    def test_limit_toward_zero_gives_sample_mean(self):
        rng = np.random.default_rng(6)
        x = rng.gamma(2.0, 1.5, 1000)
        assert cvar(x, 1e-12) == pytest.approx(float(x.mean()), rel=1e-9)

    def test_tail_discrimination(self):
        # fixed order statistic at nu: VaR frozen, mean barely moves,
        # CVaR strictly tracks the growing tail
        bulk = np.linspace(5.0, 16.0, 950)
        stats = []
        for shift in (0.0, 1.0, 2.0):
            tail = np.linspace(16.2, 22.0, 50) + shift
            risks = risk_transform(np.concatenate([bulk, tail]), FIG_PROFILE)
            r = np.asarray(risks.risks)
            stats.append((float(r.mean()), var(risks, 0.95), cvar(risks, 0.95)))
        assert stats[0][1] == stats[1][1] == stats[2][1]
        assert stats[0][2] < stats[1][2] < stats[2][2]
        m0 = stats[0][0]
        assert all(abs(m - m0) / m0 < 0.01 for m, _, _ in stats)


class TestHistogram:
    def test_all_mass_at_cap_lands_in_last_bin(self):
        cap = FIG_PROFILE.cap
        samples = RiskSamples(risks=(cap,) * 20, profile=FIG_PROFILE)
        hist = risk_histogram(samples, 10)
        assert hist["counts"][-1] == 20
        assert np.sum(hist["counts"][:-1]) == 0

    def test_uniform_density_approximates_inverse_cap(self):
        rng = np.random.default_rng(7)
        cap = FIG_PROFILE.cap
        samples = RiskSamples(risks=tuple(rng.uniform(0, cap, 20000)),
                              profile=FIG_PROFILE)
        hist = risk_histogram(samples, 10)
        assert hist["density"] == pytest.approx(np.full(10, 1.0 / cap),
                                                rel=0.1)

    def test_two_symmetric_samples(self):
        cap = FIG_PROFILE.cap
        samples = RiskSamples(risks=(0.1 * cap, 0.9 * cap),
                              profile=FIG_PROFILE)
        hist = risk_histogram(samples, 2)
        assert hist["density"][0] == hist["density"][1]

    def test_density_integrates_to_one(self):
        rng = np.random.default_rng(8)
        samples = risk_transform(rng.uniform(0, 50, 500), FIG_PROFILE)
        hist = risk_histogram(samples, 13)
        assert float(np.sum(hist["density"] * hist["bin_width"])) == \
            pytest.approx(1.0, abs=1e-12)

    def test_raw_scaled_is_a_density_only_for_unit_cap(self):
        # counts * bins / N normalizes correctly only when the risk
        # domain has unit length; both variants are reported
        profile = RiskProfile(gamma=10.0 * math.log(2.0), lambda_floor=10.0,
                              battery_capacity=40.0)
        assert profile.cap == pytest.approx(1.0, rel=1e-12)
        samples = risk_transform(np.linspace(0.0, 39.0, 100), profile)
        hist = risk_histogram(samples, 10)
        assert hist["raw_scaled"] == pytest.approx(hist["density"], rel=1e-9)
        assert hist["raw_scaled"] == pytest.approx(
            hist["density"] * profile.cap, rel=1e-9)


def test_report_written_with_provenance(tmp_path):
    samples = risk_transform(np.linspace(1000.0, 40000.0, 200),
                             RiskProfile(64000.0, 92340.0, 369360.0))
    samples.metadata["histogram_bins"] = 12
    path = tmp_path / "report.json"
    write_risk_report(samples, 0.95, path, extra={"config_hash": "abc"})
    doc = json.loads(path.read_text())
    assert doc["nu"] == 0.95
    assert doc["profile"]["battery_capacity"] == 369360.0
    assert 0.0 < doc["cvar"] <= doc["cap"]
    assert doc["var"] <= doc["cvar"]
    assert len(doc["histogram"]["counts"]) == 12
    assert doc["config_hash"] == "abc"
