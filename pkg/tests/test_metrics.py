"""
test_metrics.py : précision, moments, composition mensuelle, CAPM, ratios, drawdown, exposition.
Les séries mensuelles publiées (2018-2023) servent d'oracle.
Run: pytest tests/test_metrics.py -v
"""

import math

import numpy as np
import pandas as pd
import pytest

from common import metrics
from common.errors import DataError
from common.metrics import MonthlyReturns


def months(values, start=(2020, 1)) -> MonthlyReturns:
    y, m = start
    periods = []
    for _ in values:
        periods.append((y, m))
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return MonthlyReturns(periods, values)


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

class TestClassification:

    def test_enumeration(self):
        c = metrics.confusion_counts([1, 1, -1], [1, -1, -1])
        assert (c.tp, c.fp, c.tn, c.fn) == (1, 1, 1, 0)
        rates = metrics.classification_rates(c)
        assert rates.accuracy == pytest.approx(2 / 3)
        assert rates.ppv == pytest.approx(0.5)
        assert rates.npv == 1.0

    def test_perfect_predictions(self):
        labels = np.array([1, -1, -1, 1, 1])
        c = metrics.confusion_counts(labels, labels)
        assert c.fp == c.fn == 0
        assert metrics.classification_rates(c).accuracy == 1.0

    def test_all_long_has_no_npv(self):
        labels = np.array([1, -1, 1, 1, -1])
        rates = metrics.classification_rates(metrics.confusion_counts(np.ones(5, dtype=int), labels))
        assert rates.accuracy == pytest.approx(0.6)
        assert rates.npv is None

    def test_no_positive_calls(self):
        rates = metrics.classification_rates(metrics.ConfusionCounts(tp=0, fp=0, tn=5, fn=5))
        assert rates.ppv is None
        assert rates.npv == 0.5
        assert rates.accuracy == 0.5

    def test_abstentions_are_not_counted(self):
        c = metrics.confusion_counts([1, -1, 1], [1, 1, -1], scales=[1.0, 0.0, 0.0])
        assert c.total == 1

    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = int(rng.integers(1, 30))
            pred, lab = rng.choice([-1, 1], n), rng.choice([-1, 1], n)
            c = metrics.confusion_counts(pred, lab)
            brute = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
            for p, l in zip(pred, lab):
                brute[("t" if p == l else "f") + ("p" if p == 1 else "n")] += 1
            assert (c.tp, c.fp, c.tn, c.fn) == (brute["tp"], brute["fp"], brute["tn"], brute["fn"])
            assert metrics.classification_rates(c).accuracy == pytest.approx(float(np.mean(pred == lab)))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            metrics.confusion_counts([1, 1], [1])


# ---------------------------------------------------------------------------
# Statistiques journalières
# ---------------------------------------------------------------------------

class TestSummaryStats:

    def test_hand_moments(self):
        s = metrics.summary_stats([-1.0, 0.0, 1.0])
        assert s.mean == 0.0
        assert s.std == pytest.approx(math.sqrt(2 / 3))
        assert s.skew == pytest.approx(0.0)
        assert s.kurtosis == pytest.approx(1.5)

    def test_constant_series(self):
        s = metrics.summary_stats([0.01] * 10)
        assert (s.mean, s.std) == (0.01, 0.0)
        assert s.skew is None and s.kurtosis is None

    def test_normal_sample(self):
        s = metrics.summary_stats(np.random.default_rng(0).standard_normal(1_000_000))
        assert s.skew == pytest.approx(0.0, abs=0.02)
        assert s.kurtosis == pytest.approx(3.0, abs=0.02)

    def test_negation(self):
        x = np.random.default_rng(7).lognormal(0.0, 0.5, 400) - 1.0
        s, flipped = metrics.summary_stats(x), metrics.summary_stats(-x)
        assert s.skew > 0
        assert flipped.skew == pytest.approx(-s.skew, rel=1e-12)
        assert flipped.kurtosis == pytest.approx(s.kurtosis, rel=1e-12)
        assert (flipped.min, flipped.max) == (-s.max, -s.min)

    def test_too_short(self):
        with pytest.raises(ValueError):
            metrics.summary_stats([0.01])


class TestHistogram:

    def test_bin_centred_on_zero(self):
        assert metrics.histogram([0.0, 0.001], 0.0033) == [(pytest.approx(-0.00165), 2)]

    def test_next_bin_up(self):
        assert metrics.histogram([0.004], 0.0033) == [(pytest.approx(0.00165), 1)]

    def test_half_percent_lands_two_bins_up(self):
        # 0.005 ≥ 1.5 × 0.0033 : la classe suivante commence à 0.00495
        assert metrics.histogram([0.005], 0.0033) == [(pytest.approx(0.00495), 1)]

    def test_empty_bins_between_extremes(self):
        bins = metrics.histogram([-0.007, 0.007], 0.0033)
        assert [c for _, c in bins] == [1, 0, 0, 0, 1]
        assert sum(c for _, c in bins) == 2

    def test_counts_sum(self):
        x = np.random.default_rng(1).normal(0, 0.01, 500)
        assert sum(c for _, c in metrics.histogram(x, 0.0033)) == 500

    def test_width_must_be_positive(self):
        with pytest.raises(ValueError):
            metrics.histogram([0.01], 0.0)


class TestExposure:

    def test_passive(self):
        e = metrics.exposure_stats([1, 1, 1], [1.0, 1.0, 1.0], [0.01, -0.005, 0.002])
        assert e.pct_long_days == 1.0 and e.pct_short_days == 0.0
        assert e.long_contribution == pytest.approx(1.0)

    def test_all_closed(self):
        e = metrics.exposure_stats([1, -1], [0.0, 0.0], [0.0, 0.0])
        assert e.pct_long_days == e.pct_short_days == 0.0
        assert e.long_contribution is None and e.short_contribution is None

    def test_identities_on_random_decisions(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = int(rng.integers(2, 60))
            d = rng.choice([-1, 1], n)
            s = rng.choice([0.0, 1.0], n)
            r = d * s * rng.normal(0, 0.01, n)
            e = metrics.exposure_stats(d, s, r)
            assert e.pct_long_days + e.pct_short_days == pytest.approx(float(np.mean(s > 0)))
            if e.long_contribution is not None:
                assert e.long_contribution + e.short_contribution == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# Passage au mensuel
# ---------------------------------------------------------------------------

class TestCompoundMonthly:

    def _series(self, values, dates):
        return pd.Series(values, index=pd.to_datetime(dates))

    def test_two_days(self):
        m = metrics.compound_monthly(self._series([0.01, 0.01], ["2024-01-02", "2024-01-03"]))
        assert m.periods == ((2024, 1),)
        assert m.values[0] == pytest.approx(0.0201)

    def test_compounding_not_averaging(self):
        m = metrics.compound_monthly(self._series([0.1, -0.1], ["2024-03-01", "2024-03-04"]))
        assert m.values[0] == pytest.approx(-0.01)

    def test_months_split(self):
        m = metrics.compound_monthly(self._series([-0.05, 0.02], ["2024-01-31", "2024-02-01"]))
        assert m.periods == ((2024, 1), (2024, 2))
        assert m.values.tolist() == pytest.approx([-0.05, 0.02])

    def test_empty(self):
        assert len(metrics.compound_monthly(pd.Series([], dtype=float))) == 0


class TestRiskFree:

    def test_monthly_mean_over_twelve(self, tbill_rf):
        assert len(tbill_rf) == 72
        assert tbill_rf[0] == pytest.approx(0.0141 / 12)
        assert float(np.mean(tbill_rf)) == pytest.approx(0.001597, abs=2e-6)

    def test_forward_fill(self):
        from datetime import date
        rf = metrics.monthly_risk_free([date(2024, 1, 5), date(2024, 1, 20)], [0.05, 0.06], [(2024, 1), (2024, 2)])
        assert rf.tolist() == pytest.approx([0.055 / 12, 0.055 / 12])

    def test_no_earlier_rate(self):
        from datetime import date
        with pytest.raises(DataError):
            metrics.monthly_risk_free([date(2024, 3, 1)], [0.05], [(2024, 2)])


# ---------------------------------------------------------------------------
# Indicateurs mensuels
# ---------------------------------------------------------------------------

class TestAnnualize:

    def test_twelve_percent_months(self):
        assert metrics.annualized_return([0.01] * 12) == pytest.approx(0.126825, abs=1e-6)

    def test_all_zero(self):
        a = metrics.annualize([0.0] * 12)
        assert (a.annualized_return, a.annualized_vol) == (0.0, 0.0)

    def test_replication_invariant(self):
        r = np.random.default_rng(8).normal(0.006, 0.035, 37)
        once = metrics.annualize(r)
        for k in (2, 3, 10):
            tiled = metrics.annualize(np.tile(r, k))
            assert tiled.annualized_return == pytest.approx(once.annualized_return, rel=1e-10)
            # seul le dénominateur n - 1 de l'écart-type d'échantillon change
            n = len(r)
            assert tiled.annualized_vol == pytest.approx(once.annualized_vol * math.sqrt(k * (n - 1) / (k * n - 1)), rel=1e-10)

    def test_passive_published(self, published):
        a = metrics.annualize(published["passive"])
        assert a.annualized_return == pytest.approx(0.0309, abs=5e-4)
        assert a.annualized_vol == pytest.approx(0.1310, abs=1e-3)

    def test_model_a_published(self, published):
        a = metrics.annualize(published["model_a"])
        # 14.92% annoncé, non reproductible depuis les mois publiés
        assert a.annualized_return == pytest.approx(0.1420, abs=5e-4)
        assert a.annualized_vol == pytest.approx(0.1026, abs=1e-3)


class TestCapm:

    def test_identity(self, published, tbill_rf):
        c = metrics.capm(published["passive"], published["passive"], tbill_rf)
        assert c.beta == pytest.approx(1.0)
        assert c.alpha_annualized == pytest.approx(0.0, abs=1e-12)

    def test_constructed_beta(self):
        rf = np.full(6, 0.001)
        bench = np.array([0.01, -0.02, 0.03, 0.0, 0.015, -0.005])
        c = metrics.capm(2 * (bench - rf) + rf, bench, rf)
        assert c.beta == pytest.approx(2.0)
        assert c.alpha_annualized == pytest.approx(0.0, abs=1e-12)

    def test_constructed_alpha(self):
        rf = np.full(6, 0.002)
        bench = np.array([0.01, -0.02, 0.03, 0.0, 0.015, -0.005])
        c = metrics.capm(bench - rf + 0.01 + rf, bench, rf)
        assert c.beta == pytest.approx(1.0)
        assert c.alpha_annualized == pytest.approx(0.12)

    def test_model_a_against_passive(self, published, tbill_rf):
        c = metrics.capm(published["model_a"], published["passive"], tbill_rf)
        assert c.beta == pytest.approx(0.18, abs=0.03)
        assert c.alpha_annualized == pytest.approx(0.1160, abs=0.005)

    def test_flat_benchmark(self):
        with pytest.raises(ValueError):
            metrics.capm([0.01, 0.02, 0.03], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0])


class TestRiskRatios:

    def test_model_a_published(self, published, tbill_rf):
        r = metrics.risk_ratios(published["model_a"], tbill_rf, published["passive"])
        assert r.sharpe == pytest.approx(1.195, abs=0.005)
        assert r.sharpe == pytest.approx(1.16, abs=0.05)
        assert r.sortino == pytest.approx(3.04, abs=0.02)
        assert r.sortino == pytest.approx(2.97, abs=0.15)

    def test_passive_published(self, published, tbill_rf):
        r = metrics.risk_ratios(published["passive"], tbill_rf, published["passive"])
        assert r.sharpe == pytest.approx(0.0885, abs=0.005)
        assert r.sortino == pytest.approx(0.124, abs=0.005)
        assert r.information_ratio is None

    def test_geometric_numerator(self, published, tbill_rf):
        r = metrics.risk_ratios(published["model_a"], tbill_rf, published["passive"])
        numerator = metrics.annualized_return(published["model_a"]) - metrics.annualized_return(tbill_rf)
        assert r.sharpe == pytest.approx(numerator / metrics.annualize(published["model_a"]).annualized_vol)

    def test_information_ratio_formula(self, published, tbill_rf):
        # 2.80 annoncé : écart annuel divisé par l'écart de suivi mensuel, non annualisé
        r = metrics.risk_ratios(published["model_a"], tbill_rf, published["passive"])
        assert r.information_ratio == pytest.approx(0.679, abs=0.005)

    def test_arithmetic_numerator(self, published, tbill_rf):
        r = metrics.risk_ratios(published["model_a"], tbill_rf, published["passive"], excess_mode="arithmetic")
        assert r.sharpe == pytest.approx(1.162, abs=0.005)
        assert r.sortino == pytest.approx(2.957, abs=0.005)
        passive = metrics.risk_ratios(published["passive"], tbill_rf, published["passive"], excess_mode="arithmetic")
        assert passive.sharpe == pytest.approx(0.151, abs=0.005)
        assert passive.sortino == pytest.approx(0.212, abs=0.005)

    def test_degenerate_denominators(self):
        r = metrics.risk_ratios([0.01] * 12, [0.0] * 12, [0.02] * 12)
        assert r.sharpe is None and r.sortino is None

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            metrics.risk_ratios([0.01, 0.02], [0.0, 0.0], [0.0, 0.01], excess_mode="log")


class TestDrawdown:

    def test_two_losses(self):
        assert metrics.drawdown_calmar([-0.10, -0.10]).max_drawdown == pytest.approx(-0.19)

    def test_peak_to_trough(self):
        assert metrics.drawdown_calmar([0.10, -0.05, 0.10]).max_drawdown == pytest.approx(-0.05)

    def test_never_under_water(self):
        dd = metrics.drawdown_calmar([0.01, 0.02])
        assert dd.max_drawdown == 0.0 and dd.calmar is None

    def test_published_series(self, published):
        passive, model_a = metrics.drawdown_calmar(published["passive"]), metrics.drawdown_calmar(published["model_a"])
        assert passive.max_drawdown == pytest.approx(-0.1956, abs=1e-3)
        assert model_a.max_drawdown == pytest.approx(-0.0787, abs=1e-3)
        # Calmar = rendement annualisé / |drawdown| (0.70 et 1.88 annoncés)
        assert passive.calmar == pytest.approx(0.158, abs=0.005)
        assert model_a.calmar == pytest.approx(1.80, abs=0.01)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            r = rng.normal(0.005, 0.05, int(rng.integers(1, 201)))
            equity = np.concatenate([[1.0], np.cumprod(1.0 + r)])
            pairs = equity[None, :] / equity[:, None] - 1.0  # [i, j] : du mois i au mois j
            worst = float(np.min(pairs[np.triu_indices(len(equity))]))
            assert metrics.drawdown_calmar(r).max_drawdown == pytest.approx(worst, abs=1e-12)

    def test_daily_curve(self):
        assert metrics.max_drawdown_daily([0.02, -0.01, -0.01, 0.05]) == pytest.approx(0.99 * 0.99 - 1)


class TestWinLoss:

    @pytest.mark.parametrize("name,winning", [("passive", 42), ("lstm", 42), ("gbt", 37), ("rf", 35), ("model_a", 48)])
    def test_published_counts(self, published, name, winning):
        assert metrics.month_win_loss(published[name]).pct_winning == pytest.approx(winning / 72)

    def test_symmetric(self):
        wl = metrics.month_win_loss([0.01, -0.01])
        assert (wl.avg_gain, wl.avg_loss) == (0.01, -0.01)
        assert wl.pct_winning == wl.pct_losing == 0.5

    def test_all_zero(self):
        wl = metrics.month_win_loss([0.0, 0.0])
        assert wl.pct_winning == 0.0 and wl.avg_gain is None


# ---------------------------------------------------------------------------
# Rapport complet et CSV mensuels
# ---------------------------------------------------------------------------

class TestPerformanceReport:

    def test_passive_against_itself(self, published, tbill_rf):
        report = metrics.performance_report(published["passive"], published["passive"], tbill_rf)
        assert report.beta == pytest.approx(1.0)
        assert report.alpha_annualized == pytest.approx(0.0, abs=1e-12)
        assert report.information_ratio is None
        assert report.pct_winning_months == pytest.approx(42 / 72)

    def test_misaligned_months(self, published, tbill_rf):
        shorter = MonthlyReturns(published["passive"].periods[1:], published["passive"].values[1:])
        with pytest.raises(DataError):
            metrics.performance_report(published["model_a"], shorter, tbill_rf)

    def test_flat_benchmark_gives_absent_capm(self):
        report = metrics.performance_report(months([0.01, 0.02, -0.01]), months([0.0, 0.0, 0.0]), [0.0, 0.0, 0.0])
        assert report.beta is None and report.alpha_annualized is None


class TestMonthlyCsv:

    def test_reads_percent(self, published):
        assert published["passive"].periods[0] == (2018, 1)
        assert published["passive"].values[0] == pytest.approx(0.031)
        assert len(published["passive"]) == 72

    def test_written_csv_reparses(self, published):
        again = metrics.read_monthly_csv(metrics.write_monthly_csv(published["lstm"]))
        assert again.periods == published["lstm"].periods
        np.testing.assert_allclose(again.values, published["lstm"].values, rtol=1e-12)

    def test_bad_row_names_line(self):
        with pytest.raises(DataError) as err:
            metrics.read_monthly_csv("year,month,percent\n2020,1,1.5\n2020,x,2.0\n", source="m.csv")
        assert err.value.line == 3

    def test_bad_month(self):
        with pytest.raises(DataError):
            metrics.read_monthly_csv("year,month,percent\n2020,13,1.5\n")

    def test_by_year(self, published):
        grid = published["model_a"].by_year()
        assert sorted(grid) == [2018, 2019, 2020, 2021, 2022, 2023]
        assert grid[2020][3] == pytest.approx(0.1642)
