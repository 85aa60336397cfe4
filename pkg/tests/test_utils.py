import math

import numpy as np
import pandas as pd
import pytest

from utils.csv_utils import format_float, read_json, read_table, write_json, write_rows
from utils.errors import (
    AnalysisError, ClusteringError, ConfigurationError, DataError, PipelineError, RegressionError,
    SignatureError, exit_code_for,
)
from utils.seed_utils import derive_seed, rng_for, splitmix64
from utils.text_processing import is_ascii_series, normalize_zone_id, normalize_zone_series


# --- seed_utils ---
def test_derive_seed_is_stable_and_distinct_per_part():
    assert derive_seed(42, 0) == derive_seed(42, 0)
    seeds = {derive_seed(42, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert derive_seed(42, 1, 2) != derive_seed(42, 2, 1)
    assert derive_seed(42) != derive_seed(43)


def test_derive_seed_stays_in_64_bits():
    for base in (0, 1, 2**63, 2**64 - 1, -1):
        assert 0 <= derive_seed(base, 7) < 2**64
    assert 0 <= splitmix64(2**64 - 1) < 2**64


def test_rng_for_reproduces_the_same_stream():
    a = rng_for(7, 3).random(5)
    b = rng_for(7, 3).random(5)
    c = rng_for(7, 4).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


# --- text_processing ---
@pytest.mark.parametrize("raw, expected", [
    ("10001", "10001"),
    (" 10002 ", "10002"),
    ("11201-1234", "11201"),
    ("112011234", "11201"),
    ("ABCDE", None),
    ("1000", None),
    ("100011", None),
    ("", None),
    (None, None),
])
def test_normalize_zone_id(raw, expected):
    assert normalize_zone_id(raw) == expected


def test_normalize_zone_series_matches_scalar_version():
    raw = pd.Series(["10001", " 10002 ", "11201-1234", "ABCDE", "1000", ""])
    result = normalize_zone_series(raw)
    expected = [normalize_zone_id(value) for value in raw]
    for got, want in zip(result, expected):
        if want is None:
            assert pd.isna(got)
        else:
            assert got == want


def test_is_ascii_series():
    assert is_ascii_series(pd.Series(["10001", "1045é", ""])).tolist() == [True, False, True]


# --- csv_utils ---
def test_format_float_round_trips_exactly():
    for value in (0.1, 1 / 3, 312.0, 1e-12, 2.0**0.5, 0.0):
        assert float(format_float(value)) == value
    assert format_float(None) == ""
    assert format_float(np.float64(0.5)) == "0.5"


def test_write_rows_is_byte_stable_and_keeps_leading_zeros(tmp_path):
    rows = [("01234", "1.5"), ("10001", "")]
    first = write_rows(tmp_path / "a.csv", ("zone_id", "value"), rows).read_bytes()
    second = write_rows(tmp_path / "b.csv", ("zone_id", "value"), rows).read_bytes()
    assert first == second
    assert first == b"zone_id,value\n01234,1.5\n10001,\n"
    table = read_table(tmp_path / "a.csv")
    assert table["zone_id"].tolist() == ["01234", "10001"]
    assert table["value"].tolist() == ["1.5", ""]


def test_write_rows_with_no_rows_writes_header_only(tmp_path):
    path = write_rows(tmp_path / "sub" / "empty.csv", ("a", "b"), [])
    assert path.read_text() == "a,b\n"


def test_write_json_sorts_keys_and_rejects_nan(tmp_path):
    path = write_json(tmp_path / "x.json", {"b": 1, "a": [1.5, None]})
    assert path.read_text().startswith('{\n  "a"')
    assert path.read_text().endswith("\n")
    assert read_json(path) == {"a": [1.5, None], "b": 1}
    with pytest.raises(ValueError):
        write_json(tmp_path / "nan.json", {"a": math.nan})


# --- errors ---
@pytest.mark.parametrize("error, code", [
    (ConfigurationError("invalid_config"), 1),
    (DataError("io_error"), 2),
    (SignatureError("empty_zone"), 2),
    (ClusteringError("empty_sweep"), 2),
    (RegressionError("singular_design"), 2),
    (PipelineError("no_incidents"), 2),
    (AnalysisError("internal"), 3),
    (RuntimeError("boom"), 3),
])
def test_exit_code_for(error, code):
    assert exit_code_for(error) == code


def test_with_stage_keeps_the_innermost_stage():
    error = DataError("no_incidents", "沒有事故").with_stage("aggregate")
    error.with_stage("run")
    assert error.stage == "aggregate"
    assert str(error).startswith("[aggregate] no_incidents")
    assert error.code == "no_incidents"
