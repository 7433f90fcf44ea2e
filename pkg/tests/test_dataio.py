"""
test_dataio.py : ingestion des CSV, alignement des séances, vue d'ouverture, forme canonique.
Run: pytest tests/test_dataio.py -v
"""

from datetime import date

import numpy as np
import pytest

from common.dataio import (Bar, RatePoint, RunFolder, align_sessions, daytime_return, dataset_to_csv, direction_label,
                           load_dataset, parse_bar_csv, parse_rates_csv, read_dataset_csv)
from common.errors import DataError

ES_CSV = """date,open,high,low,close,volume
2024-01-02,4700.00,4720.00,4690.00,4710.00,1500000
2024-01-03,4710.00,4715.00,4680.00,4690.00,1700000
2024-01-04,4690.00,4705.00,4685.00,4700.50,1600000
2024-01-05,4700.00,4730.00,4695.00,4725.00,1400000
"""
VIX_CSV = """date,open,high,low,close
2024-01-02,13.10,13.50,12.90,13.20
2024-01-03,13.20,14.10,13.10,14.00
2024-01-04,14.00,14.20,13.60,13.70
2024-01-05,13.70,13.90,13.00,13.10
"""
RATES_CSV = """date,annual_yield_percent
2023-12-01,5.27
2024-01-01,5.24
"""


# ---------------------------------------------------------------------------
# Rendements et labels
# ---------------------------------------------------------------------------

class TestDaytimeReturn:

    def test_up_day(self):
        assert daytime_return(Bar(date(2024, 1, 2), 100.0, 102.0, 99.0, 101.0)) == pytest.approx(0.01)

    def test_down_day(self):
        r = daytime_return(Bar(date(2024, 1, 2), 4000.0, 4010.0, 3950.0, 3960.0))
        assert r == pytest.approx(-0.01)
        assert direction_label(r) == -1

    def test_flat_day_is_labelled_down(self):
        r = daytime_return(Bar(date(2024, 1, 2), 100.0, 101.0, 99.0, 100.0))
        assert r == 0.0
        assert direction_label(r) == -1

    def test_label_matches_sign(self, synth_dataset):
        cols = synth_dataset.columns
        assert np.all((cols.label == 1) == (cols.daytime_return > 0))


# ---------------------------------------------------------------------------
# Lecture
# ---------------------------------------------------------------------------

class TestParseBars:

    def test_parses_and_sorts(self):
        shuffled = ES_CSV.splitlines()
        text = "\n".join([shuffled[0], shuffled[3], shuffled[1], shuffled[4], shuffled[2]])
        bars = parse_bar_csv(text, True)
        assert [b.date for b in bars] == [date(2024, 1, 2), date(2024, 1, 3), date(2024, 1, 4), date(2024, 1, 5)]
        assert bars[0].volume == 1500000

    def test_vix_has_no_volume(self):
        bars = parse_bar_csv(VIX_CSV, False)
        assert all(b.volume is None for b in bars)

    def test_ohlc_violation_names_line(self):
        text = ES_CSV.replace("2024-01-04,4690.00,4705.00", "2024-01-04,4690.00,4600.00")
        with pytest.raises(DataError) as err:
            parse_bar_csv(text, True, source="es.csv")
        assert err.value.line == 4
        assert "es.csv:4" in str(err.value)

    def test_duplicate_date_rejected(self):
        text = ES_CSV + "2024-01-03,4710.00,4715.00,4680.00,4690.00,1700000\n"
        with pytest.raises(DataError, match="double"):
            parse_bar_csv(text, True)

    def test_bad_number_rejected(self):
        with pytest.raises(DataError) as err:
            parse_bar_csv(ES_CSV.replace("4725.00", "abc"), True)
        assert err.value.line == 5

    def test_negative_volume_rejected(self):
        with pytest.raises(DataError):
            parse_bar_csv(ES_CSV.replace("1400000", "-5"), True)

    def test_wrong_header(self):
        with pytest.raises(DataError, match="en-tête"):
            parse_bar_csv(VIX_CSV, True)

    def test_empty_file(self):
        with pytest.raises(DataError):
            parse_bar_csv("", False)


class TestParseRates:

    def test_percent_to_fraction(self):
        rates = parse_rates_csv(RATES_CSV)
        assert [r.date for r in rates] == [date(2023, 12, 1), date(2024, 1, 1)]
        assert rates[-1].annual_yield == pytest.approx(0.0524)

    def test_rate_point_rejects_absurd_yield(self):
        with pytest.raises(ValueError):
            RatePoint(date(2024, 1, 1), -0.5)

    def test_duplicate_rejected(self):
        with pytest.raises(DataError):
            parse_rates_csv(RATES_CSV + "2024-01-01,5.30\n")


# ---------------------------------------------------------------------------
# Alignement
# ---------------------------------------------------------------------------

class TestAlign:

    def test_first_session_dropped(self):
        dataset = align_sessions(parse_bar_csv(ES_CSV, True), parse_bar_csv(VIX_CSV, False), parse_rates_csv(RATES_CSV))
        assert len(dataset) == 3
        assert dataset.start == date(2024, 1, 3)
        assert dataset[0].prev_volume == 1500000
        assert dataset[1].prev_volume == 1700000

    def test_rate_is_last_known(self):
        dataset = align_sessions(parse_bar_csv(ES_CSV, True), parse_bar_csv(VIX_CSV, False), parse_rates_csv(RATES_CSV))
        assert dataset[0].rf_annual == pytest.approx(0.0524)

    def test_missing_vix_lists_dates(self):
        vix = VIX_CSV.replace("2024-01-04,14.00,14.20,13.60,13.70\n", "")
        with pytest.raises(DataError, match="2024-01-04"):
            align_sessions(parse_bar_csv(ES_CSV, True), parse_bar_csv(vix, False), parse_rates_csv(RATES_CSV))

    def test_no_rate_before_first_day(self):
        rates = parse_rates_csv("date,annual_yield_percent\n2024-02-01,5.0\n")
        with pytest.raises(DataError, match="aucun taux"):
            align_sessions(parse_bar_csv(ES_CSV, True), parse_bar_csv(VIX_CSV, False), rates)

    def test_extra_vix_days_ignored(self):
        vix = VIX_CSV + "2024-01-08,13.10,13.30,12.80,13.00\n"
        dataset = align_sessions(parse_bar_csv(ES_CSV, True), parse_bar_csv(vix, False), parse_rates_csv(RATES_CSV))
        assert dataset.end == date(2024, 1, 5)

    def test_load_missing_file(self, tmp_csv, tmp_path):
        es, vix = tmp_csv("es.csv", ES_CSV), tmp_csv("vix.csv", VIX_CSV)
        with pytest.raises(DataError) as err:
            load_dataset(es, vix, tmp_path / "absent.csv")
        assert "absent.csv" in str(err.value)
        assert err.value.exit_code == 2

    def test_load_date_range(self, synth_dir):
        full = load_dataset(synth_dir / "es.csv", synth_dir / "vix.csv", synth_dir / "rates.csv")
        part = load_dataset(synth_dir / "es.csv", synth_dir / "vix.csv", synth_dir / "rates.csv",
                            start=full[10].date, end=full[19].date)
        assert len(part) == 10
        assert part[0] == full[10]


# ---------------------------------------------------------------------------
# Vue d'ouverture
# ---------------------------------------------------------------------------

class TestView:

    def test_view_holds_only_past_and_opening(self, small_dataset):
        view = small_dataset.view_at(3)
        assert view.t == 3
        assert len(view.past) == 3
        assert view.es_open == small_dataset[3].es.open
        assert view.vix_open == small_dataset[3].vix.open
        assert view.prev_volume == small_dataset[2].es.volume
        assert not hasattr(view, "es_close")

    def test_view_columns_read_only(self, small_dataset):
        view = small_dataset.view_at(2)
        with pytest.raises(ValueError):
            view.past.es_close[0] = 0.0

    def test_view_out_of_range(self, small_dataset):
        with pytest.raises(IndexError):
            small_dataset.view_at(len(small_dataset))

    def test_prev_volume_chain(self, small_dataset):
        for prev, cur in zip(small_dataset.days, small_dataset.days[1:]):
            assert cur.prev_volume == prev.es.volume


# ---------------------------------------------------------------------------
# Forme canonique et dossiers
# ---------------------------------------------------------------------------

class TestCanonicalCsv:

    def test_round_trip(self, synth_dataset):
        again = read_dataset_csv(dataset_to_csv(synth_dataset))
        assert again == synth_dataset
        assert again.fingerprint() == synth_dataset.fingerprint()

    def test_fingerprint_changes_with_data(self, synth_dataset):
        assert synth_dataset.head(100).fingerprint() != synth_dataset.fingerprint()

    def test_header(self, small_dataset):
        assert dataset_to_csv(small_dataset).splitlines()[0] == \
            "date,es_open,es_high,es_low,es_close,es_volume,prev_volume,vix_open,vix_high,vix_low,vix_close,rf_annual"


class TestRunFolder:

    def test_yaml_and_text(self, tmp_path):
        folder = RunFolder(tmp_path / "run", create=True)
        folder.write_yaml("manifest.yaml", {"model": "passive", "n": 3})
        folder.write_text("notes.md", "# ok\n")
        again = RunFolder(tmp_path / "run")
        assert again.read_yaml("manifest.yaml") == {"model": "passive", "n": 3}
        assert again.read_text("notes.md") == "# ok\n"

    def test_missing_folder(self, tmp_path):
        with pytest.raises(DataError):
            RunFolder(tmp_path / "nope")
