import io
import zipfile

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windtunnel import datagen
from windtunnel.catalog import ValidationError
from windtunnel.datagen import (
    DataSet,
    DataSetSpec,
    FieldSpec,
    GenerationError,
    SchemaSpec,
    build_dataset,
    estimate_record_size_mb,
    generate_record,
    pattern_regex,
)


def schema_of(*fields) -> SchemaSpec:
    return SchemaSpec.from_dict({"name": "t", "fields": list(fields)})


def dataset_spec(record_count, **kwargs) -> DataSetSpec:
    base = {"schema": {"kind": "schema", "name": "t"}, "record_count": record_count,
            "format": "csv", "compression": "zip", "seed": 42}
    base.update(kwargs)
    return DataSetSpec.from_dict(base)


class TestGenerateRecord:
    def test_degenerate_int_range(self):
        schema = schema_of({"name": "x", "kind": "int", "constraint": {"min": 7, "max": 7}})
        assert generate_record(schema, 1, 0) == [7]

    def test_latlong_inside_bounding_box(self):
        schema = schema_of({"name": "pos", "kind": "latlong",
                            "constraint": {"lat_min": 39.9, "lat_max": 40.1,
                                           "lon_min": -83.1, "lon_max": -82.9}})
        for i in range(200):
            lat, lon = map(float, generate_record(schema, 5, i)[0].split(","))
            assert 39.9 <= lat <= 40.1
            assert -83.1 <= lon <= -82.9

    def test_determinism(self, telemetry_schema):
        schema = SchemaSpec.from_dict(telemetry_schema)
        assert generate_record(schema, 99, 3) == generate_record(schema, 99, 3)

    def test_different_index_different_record(self, telemetry_schema):
        schema = SchemaSpec.from_dict(telemetry_schema)
        records = {tuple(generate_record(schema, 99, i)) for i in range(50)}
        assert len(records) > 45

    def test_unsatisfiable_constraint_raises(self):
        # bypass validation by constructing the field directly
        field = FieldSpec(name="x", kind="int", constraint={"min": 5, "max": 1})
        schema = SchemaSpec(name="t", fields=[field])
        with pytest.raises(GenerationError):
            generate_record(schema, 1, 0)

    @given(lo=st.integers(-10**6, 10**6), span=st.integers(0, 10**6),
           seed=st.integers(0, 2**63 - 1), index=st.integers(0, 10**6))
    @settings(max_examples=200)
    def test_int_always_in_range(self, lo, span, seed, index):
        schema = schema_of({"name": "x", "kind": "int",
                            "constraint": {"min": lo, "max": lo + span}})
        value = generate_record(schema, seed, index)[0]
        assert lo <= value <= lo + span

    def test_constraint_satisfaction_bulk(self, telemetry_schema):
        """Every field kind satisfies its constraint over 10^5 records."""
        schema = SchemaSpec.from_dict(telemetry_schema)
        vin_re = pattern_regex("???-####")
        for i in range(100_000):
            vin, speed, engine, odo, sent_at, pos = generate_record(schema, 7, i)
            assert vin_re.match(vin)
            assert 0 <= speed <= 120
            assert engine in ("ok", "warn", "fault")
            assert 0 <= odo <= 500000
            assert sent_at.startswith("2024-") and sent_at.endswith("Z")
            lat, lon = map(float, pos.split(","))
            assert 39.9 <= lat <= 40.1 and -83.1 <= lon <= -82.9


class TestRendering:
    def test_csv_has_header_and_lf(self):
        schema = schema_of({"name": "x", "kind": "int", "constraint": {"min": 7, "max": 7}},
                           {"name": "y", "kind": "choice", "constraint": {"choices": ["a"]}})
        blob = datagen.record_to_csv_bytes(schema, [7, "a"])
        assert blob == b"x,y\n7,a\n"

    def test_csv_quotes_embedded_commas(self):
        schema = schema_of({"name": "pos", "kind": "latlong",
                            "constraint": {"lat_min": 0, "lat_max": 0,
                                           "lon_min": 0, "lon_max": 0}})
        blob = datagen.record_to_csv_bytes(schema, ["1.5,-2.5"])
        assert blob == b'pos\n"1.5,-2.5"\n'

    def test_raw_bytes_length_prefixed(self):
        blob = datagen.record_to_raw_bytes(["ab", 7])
        assert blob == b"\x00\x00\x00\x02ab\x00\x00\x00\x017"


class TestBuildDataset:
    def test_exact_division_archive_count(self):
        schema = schema_of({"name": "x", "kind": "int", "constraint": {"min": 0, "max": 9}})
        ds = build_dataset(dataset_spec(10, files_per_archive=5), schema)
        assert ds.manifest["payload_count"] == 2
        for _, blob in ds.payloads:
            with zipfile.ZipFile(io.BytesIO(blob)) as zf:
                assert len(zf.namelist()) == 5

    def test_remainder_archive_is_short(self):
        schema = schema_of({"name": "x", "kind": "int", "constraint": {"min": 0, "max": 9}})
        ds = build_dataset(dataset_spec(11, files_per_archive=5), schema)
        assert ds.manifest["payload_count"] == 3
        sizes = []
        for _, blob in ds.payloads:
            with zipfile.ZipFile(io.BytesIO(blob)) as zf:
                sizes.append(len(zf.namelist()))
        assert sizes == [5, 5, 1]

    def test_no_compression_payload_per_record(self):
        schema = schema_of({"name": "x", "kind": "int", "constraint": {"min": 0, "max": 9}})
        ds = build_dataset(dataset_spec(4, compression="none"), schema)
        assert ds.manifest["payload_count"] == 4
        assert ds.content_type == "text/csv"

    def test_manifest_bytes_match_independent_rerun(self, telemetry_schema):
        """Same spec, fresh build: byte counts and payload bytes identical."""
        schema = SchemaSpec.from_dict(telemetry_schema)
        spec = dataset_spec(2400, files_per_archive=5)
        first = build_dataset(spec, schema)
        second = build_dataset(spec, schema)
        assert first.manifest["total_payload_bytes"] == sum(
            len(blob) for _, blob in second.payloads)
        assert first.manifest["total_uncompressed_bytes"] == \
            second.manifest["total_uncompressed_bytes"]
        assert [blob for _, blob in first.payloads] == [blob for _, blob in second.payloads]

    def test_write_and_load_round_trip(self, tmp_path, telemetry_schema):
        schema = SchemaSpec.from_dict(telemetry_schema)
        ds = build_dataset(dataset_spec(7), schema)
        out = ds.write(tmp_path / "ds")
        loaded = DataSet.load(out)
        assert loaded.payloads == ds.payloads
        assert loaded.manifest == ds.manifest


class TestRecordSizeEstimate:
    def test_one_mebibyte_record(self):
        # raw encoding adds a 4-byte length prefix per field
        value = "v" * (2**20 - 4)
        schema = schema_of({"name": "blob", "kind": "choice",
                            "constraint": {"choices": [value]}})
        ds = build_dataset(dataset_spec(1, format="raw-bytes", compression="none"), schema)
        assert estimate_record_size_mb(ds) == 1.0

    def test_mean_of_identical_records(self):
        value = "v" * 1020
        schema = schema_of({"name": "blob", "kind": "choice",
                            "constraint": {"choices": [value]}})
        one = build_dataset(dataset_spec(1, format="raw-bytes", compression="none"), schema)
        ten = build_dataset(dataset_spec(10, format="raw-bytes", compression="none"), schema)
        assert estimate_record_size_mb(one) == estimate_record_size_mb(ten)

    def test_matches_brute_force_byte_count(self):
        """Oracle: hand-rendered CSV bytes, no commas/quotes in values."""
        fields = [{"name": "x", "kind": "int", "constraint": {"min": 0, "max": 9999}},
                  {"name": "tag", "kind": "string-pattern", "constraint": {"pattern": "??##"}}]
        schema = schema_of(*fields)
        spec = dataset_spec(200, compression="none")
        ds = build_dataset(spec, schema)
        total = 0
        for i in range(200):
            x, tag = generate_record(schema, spec.seed, i)
            total += len(f"x,tag\n{x},{tag}\n".encode())
        assert estimate_record_size_mb(ds) == total / 200 / 2**20

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValidationError):
            dataset_spec(0)
        hollow = DataSet(spec=dataset_spec(1), schema=schema_of(
            {"name": "x", "kind": "int", "constraint": {"min": 0, "max": 1}}),
            payloads=[], manifest={"record_count": 0, "total_uncompressed_bytes": 0})
        with pytest.raises(GenerationError):
            estimate_record_size_mb(hollow)


class TestValidation:
    def test_duplicate_field_names(self):
        with pytest.raises(ValidationError):
            schema_of({"name": "x", "kind": "int", "constraint": {"min": 0, "max": 1}},
                      {"name": "x", "kind": "int", "constraint": {"min": 0, "max": 1}})

    def test_inverted_range(self):
        with pytest.raises(ValidationError):
            schema_of({"name": "x", "kind": "int", "constraint": {"min": 2, "max": 1}})

    def test_empty_choices(self):
        with pytest.raises(ValidationError):
            schema_of({"name": "x", "kind": "choice", "constraint": {"choices": []}})

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            schema_of({"name": "x", "kind": "uuid", "constraint": {}})

    def test_files_per_archive_positive(self):
        with pytest.raises(ValidationError):
            dataset_spec(5, files_per_archive=0)
