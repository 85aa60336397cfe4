from collections import Counter
from datetime import date

import numpy as np
import pytest

from ingestion.records import DateWindow, PermitRecord
from ingestion.record_parser import parse_permits
from ingestion.work_types import WORK_TYPE_COLUMNS, WORK_TYPE_ORDER, WorkType
from pipeline.reports import format_percent
from signature.signature_builder import (
    SignatureMatrix, ZoneCounts, ZoneSignature, build_matrix, exterior_share, signature_of,
    signatures_from_permits, tally,
)
from signature.signature_io import read_signatures, write_signatures
from synth.city_generator import SyntheticSpec, generate
from utils.errors import DataError, SignatureError

WIDE_WINDOW = DateWindow(date(2000, 1, 1), date(2030, 12, 31))

# 以簡單的一次走訪獨立統計的結果
HAND_TALLY = {
    "10001": (3, 2, 0, 0, 5, 0, 2, 0),
    "10002": (0, 0, 0, 1, 4, 6, 3, 1),
    "10003": (5, 0, 2, 0, 3, 0, 0, 0),
    "10004": (0, 1, 1, 0, 2, 4, 4, 1),
}


def _permits(zone_id: str, counts) -> list[PermitRecord]:
    return [
        PermitRecord(zone_id, work_type, date(2015, 1, 1))
        for work_type, n in zip(WORK_TYPE_ORDER, counts) for _ in range(n)
    ]


def test_published_signature_is_reproduced_at_report_precision():
    signature = signature_of(ZoneCounts("10002", (23, 17, 161, 9, 53, 505, 216, 16)))
    assert signature.total_permits == 1000
    np.testing.assert_allclose(signature.proportions, (0.023, 0.017, 0.161, 0.009, 0.053, 0.505, 0.216, 0.016),
                               atol=1e-15)
    assert [format_percent(p) for p in signature.proportions] == [
        "2.3%", "1.7%", "16.1%", "0.9%", "5.3%", "50.5%", "21.6%", "1.6%",
    ]


def test_single_type_zone_is_one_hot():
    signature = signature_of(ZoneCounts("10001", (0, 0, 0, 0, 0, 0, 40, 0)))
    assert signature.proportions == (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0)


def test_empty_zone_raises():
    with pytest.raises(SignatureError) as excinfo:
        signature_of(ZoneCounts("10001", (0,) * 8))
    assert excinfo.value.code == "empty_zone"
    assert isinstance(excinfo.value, DataError)


def test_zone_counts_validates_total():
    with pytest.raises(ValueError):
        ZoneCounts("10001", (1, 2, 3, 4, 5, 6, 7, 8), total=35)
    with pytest.raises(ValueError):
        ZoneCounts("10001", (1, 2, 3))
    with pytest.raises(ValueError):
        ZoneCounts("10001", (-1, 0, 0, 0, 0, 0, 0, 0))


def test_signature_is_scale_invariant():
    rng = np.random.default_rng(5)
    for _ in range(20):
        counts = tuple(int(c) for c in rng.integers(0, 50, size=8))
        if sum(counts) == 0:
            continue
        base = signature_of(ZoneCounts("10001", counts)).as_array()
        scaled = signature_of(ZoneCounts("10001", tuple(7 * c for c in counts))).as_array()
        np.testing.assert_allclose(base, scaled, atol=1e-12)


def test_tally_fixture_matches_hand_tally(fixtures_dir, canonical_mapping):
    permits, report = parse_permits(fixtures_dir / "permits_tally_50.csv", canonical_mapping.permits, WIDE_WINDOW)
    assert report.rows_accepted == 50
    counts = tally(permits)
    assert [c.zone_id for c in counts] == sorted(HAND_TALLY)
    assert {c.zone_id: c.counts for c in counts} == HAND_TALLY
    assert sum(c.total for c in counts) == 50


def test_tally_is_mergeable_over_partitions(fixtures_dir, canonical_mapping):
    permits, _ = parse_permits(fixtures_dir / "permits_tally_50.csv", canonical_mapping.permits, WIDE_WINDOW)
    first, second = tally(permits[:17]), tally(permits[17:])
    merged = {c.zone_id: c for c in first}
    for c in second:
        merged[c.zone_id] = merged[c.zone_id] + c if c.zone_id in merged else c
    assert {z: c.counts for z, c in merged.items()} == {c.zone_id: c.counts for c in tally(permits)}


def test_tally_of_no_permits_is_empty():
    assert tally([]) == []


def test_build_matrix_stacks_signatures_in_zone_order(fixtures_dir, canonical_mapping):
    permits, _ = parse_permits(fixtures_dir / "permits_tally_50.csv", canonical_mapping.permits, WIDE_WINDOW)
    matrix = signatures_from_permits(permits)
    assert matrix.zone_ids == ("10001", "10002", "10003", "10004")
    expected = np.array([np.array(HAND_TALLY[z]) / sum(HAND_TALLY[z]) for z in matrix.zone_ids])
    np.testing.assert_allclose(matrix.rows, expected, atol=1e-15)
    np.testing.assert_allclose(matrix.rows.sum(axis=1), 1.0, atol=1e-12)
    assert matrix.total_permits == (12, 15, 10, 13)
    assert not matrix.rows.flags.writeable


def test_build_matrix_rejects_duplicates_and_unknown_zones():
    a = signature_of(ZoneCounts("10001", (1, 0, 0, 0, 0, 0, 0, 0)))
    with pytest.raises(SignatureError) as excinfo:
        build_matrix([a, a])
    assert excinfo.value.code == "duplicate_zone"
    matrix = build_matrix([a])
    with pytest.raises(SignatureError):
        matrix.index_of("99999")


def test_zone_signature_rejects_bad_proportions():
    with pytest.raises(ValueError):
        ZoneSignature("10001", (0.5, 0.6, 0, 0, 0, 0, 0, 0), 10)
    with pytest.raises(ValueError):
        ZoneSignature("10001", (1.0, 0, 0, 0, 0, 0, 0, 0), 0)


def test_subset_and_signatures_iteration():
    matrix = signatures_from_permits(_permits("10002", (1, 1, 0, 0, 0, 0, 0, 0)) + _permits("10001", (0, 0, 3, 1, 0, 0, 0, 0)))
    subset = matrix.subset(["10002"])
    assert subset.zone_ids == ("10002",)
    assert [s.zone_id for s in matrix.signatures()] == ["10001", "10002"]


def test_exterior_share():
    rows = np.array([[0.1, 0.1, 0.1, 0.1, 0.2, 0.2, 0.1, 0.1], [0, 0, 0, 0, 0.5, 0.5, 0, 0]])
    np.testing.assert_allclose(exterior_share(rows), [0.4, 0.0])


def test_signatures_file_round_trip(tmp_path, fixtures_dir, canonical_mapping):
    permits, _ = parse_permits(fixtures_dir / "permits_tally_50.csv", canonical_mapping.permits, WIDE_WINDOW)
    matrix = signatures_from_permits(permits)
    path = write_signatures(tmp_path / "signatures.csv", matrix)
    header = path.read_text().splitlines()[0].split(",")
    assert header[0] == "zone_id"
    assert tuple(header[1:9]) == WORK_TYPE_COLUMNS
    again = read_signatures(path)
    assert again.zone_ids == matrix.zone_ids
    assert again.total_permits == matrix.total_permits
    np.testing.assert_array_equal(again.rows, matrix.rows)


def test_read_signatures_rejects_wrong_header(tmp_path):
    path = tmp_path / "signatures.csv"
    path.write_text("zone,a,b\n10001,1,0\n")
    with pytest.raises(DataError):
        read_signatures(path)


def test_observed_signature_converges_to_the_latent_one():
    city = generate(SyntheticSpec(n_zones=10, n_clusters=2, permits_per_zone=(10_000, 10_000),
                                  incidents_per_zone=(1, 1), seed=3))
    matrix = signatures_from_permits(city.permits)
    for truth in city.truth:
        observed = matrix.rows[matrix.index_of(truth.zone_id)]
        assert np.abs(observed - np.asarray(truth.true_signature)).sum() < 0.05, truth.zone_id
