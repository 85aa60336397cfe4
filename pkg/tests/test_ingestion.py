from datetime import date, datetime

import pandas as pd
import pytest

from ingestion.canonical_io import write_canonical_incidents, write_canonical_permits
from ingestion.column_mapping import load_column_mapping
from ingestion.record_parser import parse_incidents, parse_permits
from ingestion.records import DateWindow, IncidentRecord, IngestReport, PermitRecord
from ingestion.work_types import N_WORK_TYPES, WORK_TYPE_COLUMNS, WORK_TYPE_ORDER, WorkType
from utils.errors import ConfigurationError, DataError

STUDY_WINDOW = DateWindow(date(2013, 1, 1), date(2017, 12, 31))


def _expected(fixtures_dir, name):
    return pd.read_csv(fixtures_dir / name, dtype=str, keep_default_na=False).to_dict(orient="records")


# --- work types ---
def test_work_type_order_is_fixed():
    assert N_WORK_TYPES == 8
    assert WORK_TYPE_COLUMNS == (
        "new_building", "foundation", "construction_equipment", "demolition",
        "alteration", "equipment_work", "plumbing", "signage",
    )
    assert [work_type.index for work_type in WORK_TYPE_ORDER] == list(range(8))


@pytest.mark.parametrize("label", ["demolition", "DEMOLITION", "Demolition", " demolition "])
def test_work_type_from_label(label):
    assert WorkType.from_label(label) is WorkType.DEMOLITION


def test_work_type_from_label_rejects_unknown():
    with pytest.raises(ValueError):
        WorkType.from_label("landscaping")


# --- records ---
def test_records_validate_their_invariants():
    with pytest.raises(ValueError):
        PermitRecord("1000", WorkType.PLUMBING, date(2015, 1, 1))
    with pytest.raises(ValueError):
        PermitRecord("10001", WorkType.PLUMBING, date(2015, 1, 2), expiration_date=date(2015, 1, 1))
    with pytest.raises(ValueError):
        IncidentRecord("10001", datetime(2015, 1, 1), -1.0)
    with pytest.raises(ValueError):
        DateWindow(date(2016, 1, 1), date(2015, 1, 1))
    with pytest.raises(ValueError):
        IngestReport(rows_read=3, rows_accepted=1, rows_rejected=1)


# --- permits ---
def test_parse_permits_matches_hand_labelled_fixture(fixtures_dir, nyc_mapping):
    records, report = parse_permits(fixtures_dir / "dob_permits_20.csv", nyc_mapping.permits, STUDY_WINDOW)
    expected = _expected(fixtures_dir, "dob_permits_20_expected.csv")
    accepted = [row for row in expected if row["outcome"] == "accepted"]

    assert [(r.zone_id, r.work_type.value, r.start_date.isoformat()) for r in records] == [
        (row["zone_id"], row["work_type"], row["start_date"]) for row in accepted
    ]
    assert [r.expiration_date.isoformat() if r.expiration_date else "" for r in records] == [
        row["expiration_date"] for row in accepted
    ]

    rejected = {}
    for row in expected:
        if row["outcome"] != "accepted":
            rejected[row["outcome"]] = rejected.get(row["outcome"], 0) + 1
    assert report.rows_read == 20
    assert report.rows_accepted == len(accepted) == 9
    assert report.rows_rejected == 11
    assert report.rejection_reasons == dict(sorted(rejected.items()))


def test_parse_permits_keeps_borough_and_subtype(fixtures_dir, nyc_mapping):
    records, _ = parse_permits(fixtures_dir / "dob_permits_20.csv", nyc_mapping.permits, STUDY_WINDOW)
    equipment = [r for r in records if r.work_type is WorkType.CONSTRUCTION_EQUIPMENT][0]
    assert equipment.borough == "BROOKLYN"
    assert equipment.work_subtype == "SH"
    assert records[0].work_subtype is None


def test_parse_permits_three_row_example(tmp_path, canonical_mapping):
    source = tmp_path / "permits.csv"
    source.write_text(
        "zone_id,borough,work_type,work_subtype,start_date,expiration_date\n"
        "10001,,plumbing,,2015-05-05,\n"
        "ABCDE,,plumbing,,2015-05-05,\n"
        "10001,,plumbing,,2019-05-05,\n",
        encoding="utf-8",
    )
    records, report = parse_permits(source, canonical_mapping.permits, STUDY_WINDOW)
    assert len(records) == 1
    assert (report.rows_read, report.rows_accepted, report.rows_rejected) == (3, 1, 2)


def test_parse_permits_header_only_file(tmp_path, canonical_mapping):
    source = tmp_path / "permits.csv"
    source.write_text("zone_id,borough,work_type,work_subtype,start_date,expiration_date\n", encoding="utf-8")
    records, report = parse_permits(source, canonical_mapping.permits, STUDY_WINDOW)
    assert records == []
    assert (report.rows_read, report.rows_accepted, report.rows_rejected) == (0, 0, 0)


def test_unknown_work_type_is_never_coerced(tmp_path, canonical_mapping):
    source = tmp_path / "permits.csv"
    source.write_text(
        "zone_id,borough,work_type,work_subtype,start_date,expiration_date\n"
        "10001,,landscaping,,2015-05-05,\n",
        encoding="utf-8",
    )
    records, report = parse_permits(source, canonical_mapping.permits, STUDY_WINDOW)
    assert records == []
    assert report.rejection_reasons == {"unknown_work_type": 1}


def test_subtype_specific_lookup_wins_over_type(tmp_path):
    mapping_path = tmp_path / "mapping.yaml"
    mapping_path.write_text(
        "permits:\n"
        "  columns: {zone_id: zip, work_type: type, work_subtype: sub, start_date: start}\n"
        "  work_types: {EQ: construction_equipment, EQ/FN: foundation}\n"
        "incidents:\n"
        "  columns: {zone_id: zip, timestamp: ts, response_time_s: secs}\n",
        encoding="utf-8",
    )
    source = tmp_path / "permits.csv"
    source.write_text("zip,type,sub,start\n10001,EQ,FN,2015-01-01\n10001,EQ,SH,2015-01-01\n", encoding="utf-8")
    records, _ = parse_permits(source, load_column_mapping(mapping_path).permits, STUDY_WINDOW)
    assert [r.work_type for r in records] == [WorkType.FOUNDATION, WorkType.CONSTRUCTION_EQUIPMENT]


def test_overlap_window_rule_accepts_permits_active_inside_window(tmp_path):
    mapping_path = tmp_path / "mapping.yaml"
    mapping_path.write_text(
        "permits:\n"
        "  window_rule: overlap\n"
        "  columns: {zone_id: zip, work_type: type, start_date: start, expiration_date: end}\n"
        "  work_types: {PL: plumbing}\n"
        "incidents:\n"
        "  columns: {zone_id: zip, timestamp: ts, response_time_s: secs}\n",
        encoding="utf-8",
    )
    source = tmp_path / "permits.csv"
    source.write_text(
        "zip,type,start,end\n"
        "10001,PL,2012-06-01,2013-06-01\n"
        "10001,PL,2012-06-01,2012-12-31\n"
        "10001,PL,2012-06-01,\n",
        encoding="utf-8",
    )
    records, report = parse_permits(source, load_column_mapping(mapping_path).permits, STUDY_WINDOW)
    assert [r.start_date for r in records] == [date(2012, 6, 1)]
    assert report.rejection_reasons == {"out_of_window": 2}


def test_quarantine_file_lists_rejected_rows(tmp_path, fixtures_dir, nyc_mapping):
    quarantine = tmp_path / "permits_quarantine.csv"
    parse_permits(fixtures_dir / "dob_permits_20.csv", nyc_mapping.permits, STUDY_WINDOW, quarantine)
    table = pd.read_csv(quarantine, dtype=str, keep_default_na=False)
    assert list(table.columns) == ["reject_reason", "raw_record"]
    assert len(table) == 11
    assert table["reject_reason"].iloc[0] == "invalid_zone"
    assert "ABCDE" in table["raw_record"].iloc[0]


def test_rows_with_too_many_fields_are_counted_not_raised(tmp_path, canonical_mapping):
    source = tmp_path / "incidents.csv"
    source.write_text(
        "zone_id,timestamp,response_time_s\n"
        "10001,2015-01-01T00:00:00,300\n"
        "10001,2015-01-01T00:00:00,300,extra,fields\n",
        encoding="utf-8",
    )
    records, report = parse_incidents(source, canonical_mapping.incidents, STUDY_WINDOW)
    assert len(records) == 1
    assert report.rejection_reasons == {"malformed_row": 1}
    assert report.rows_read == 2


def test_missing_mapped_column_is_a_configuration_error(tmp_path, canonical_mapping):
    source = tmp_path / "permits.csv"
    source.write_text("zone_id,work_type\n10001,plumbing\n", encoding="utf-8")
    with pytest.raises(ConfigurationError) as excinfo:
        parse_permits(source, canonical_mapping.permits, STUDY_WINDOW)
    assert excinfo.value.code == "missing_column"


def test_missing_file_is_a_data_error(tmp_path, canonical_mapping):
    with pytest.raises(DataError) as excinfo:
        parse_permits(tmp_path / "nope.csv", canonical_mapping.permits, STUDY_WINDOW)
    assert excinfo.value.code == "io_error"


# --- incidents ---
def test_parse_incidents_matches_hand_labelled_fixture(fixtures_dir, nyc_mapping):
    records, report = parse_incidents(fixtures_dir / "fdny_incidents_20.csv", nyc_mapping.incidents, STUDY_WINDOW)
    expected = _expected(fixtures_dir, "fdny_incidents_20_expected.csv")
    accepted = [row for row in expected if row["outcome"] == "accepted"]

    assert [(r.zone_id, r.timestamp.isoformat(), r.response_time_s) for r in records] == [
        (row["zone_id"], row["timestamp"], float(row["response_time_s"])) for row in accepted
    ]
    assert report.rows_read == 20
    assert report.rows_accepted == 9
    assert report.rejection_reasons == {
        "filtered_out": 2,
        "invalid_date": 2,
        "invalid_duration": 2,
        "invalid_zone": 2,
        "negative_duration": 1,
        "out_of_window": 2,
    }


def test_zero_response_time_is_accepted(fixtures_dir, nyc_mapping):
    records, _ = parse_incidents(fixtures_dir / "fdny_incidents_20.csv", nyc_mapping.incidents, STUDY_WINDOW)
    assert any(r.response_time_s == 0.0 for r in records)


# --- column mapping ---
def test_load_column_mapping_errors(tmp_path):
    with pytest.raises(ConfigurationError) as excinfo:
        load_column_mapping(tmp_path / "missing.yaml")
    assert excinfo.value.code == "mapping_not_found"

    bad = tmp_path / "bad.yaml"
    bad.write_text(
        "permits:\n"
        "  columns: {zone_id: zip, work_type: type, start_date: start}\n"
        "  work_types: {NB: skyscraper}\n"
        "incidents:\n"
        "  columns: {zone_id: zip, timestamp: ts, response_time_s: secs}\n",
        encoding="utf-8",
    )
    with pytest.raises(ConfigurationError) as excinfo:
        load_column_mapping(bad)
    assert excinfo.value.code == "mapping_invalid"


def test_bundled_mappings_load(nyc_mapping, canonical_mapping):
    assert nyc_mapping.permits.date_format == "us"
    assert nyc_mapping.permits.work_types["DM"] is WorkType.DEMOLITION
    assert nyc_mapping.incidents.filters == {"VALID_INCIDENT_RSPNS_TIME_INDC": ("Y",)}
    assert set(canonical_mapping.permits.work_types.values()) == set(WORK_TYPE_ORDER)


# --- canonical files ---
def test_canonical_files_reparse_to_the_same_records(tmp_path, fixtures_dir, nyc_mapping, canonical_mapping):
    permits, _ = parse_permits(fixtures_dir / "dob_permits_20.csv", nyc_mapping.permits, STUDY_WINDOW)
    incidents, _ = parse_incidents(fixtures_dir / "fdny_incidents_20.csv", nyc_mapping.incidents, STUDY_WINDOW)

    permits_again, _ = parse_permits(
        write_canonical_permits(tmp_path / "permits.csv", permits), canonical_mapping.permits, STUDY_WINDOW)
    incidents_again, _ = parse_incidents(
        write_canonical_incidents(tmp_path / "incidents.csv", incidents), canonical_mapping.incidents, STUDY_WINDOW)

    assert permits_again == permits
    assert incidents_again == incidents
