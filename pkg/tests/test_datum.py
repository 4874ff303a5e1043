"""Datum construction, validation, and round-trip serialization.

Claims:
    - constructors produce data that pass validation
    - validation reports (never raises) rank, shape, and sign problems
    - the named families have the documented shapes and exponents
    - save/load is a field-exact round trip; malformed files fail with
      a parse error naming the field
"""

import json
import math

import numpy as np
import pytest

import blepi
from blepi.datum import Datum, DatumParseError, Partition


class TestPartition:
    def test_totals(self):
        p = Partition((2, 1))
        assert p.k == 2 and p.n == 3
        assert p.offsets() == [(0, 2), (2, 3)]

    def test_rejects_empty_and_nonpositive(self):
        with pytest.raises(ValueError):
            Partition(())
        with pytest.raises(ValueError):
            Partition((2, 0))


class TestValidate:
    def test_epi_constructor_output_is_valid(self):
        report = blepi.validate(blepi.make_epi_datum(0.5, 1))
        assert report.ok
        assert report.issues == ()

    def test_zero_row_is_flagged_as_surjectivity(self):
        base = blepi.make_epi_datum(0.5, 1)
        bad = Datum(
            partition=base.partition,
            maps=(np.vstack([base.maps[0], np.zeros((1, 2))]),),
            c=base.c,
            d=base.d,
        )
        report = blepi.validate(bad)
        assert not report.ok
        assert any(i.code == "SURJECTIVITY" and i.location == "maps[0]" for i in report.issues)

    def test_column_count_mismatch(self):
        bad = Datum(
            partition=Partition((2, 2)),
            maps=(np.eye(3),),
            c=np.array([1.0]),
            d=np.array([1.0, 1.0]),
        )
        report = blepi.validate(bad)
        assert any(i.code == "DIMENSION_MISMATCH" for i in report.issues)

    def test_idempotent(self):
        d = blepi.make_coupled_sums_datum(1.0, 1.0, 0.5, 0.5)
        assert blepi.validate(d) == blepi.validate(d)

    def test_all_constructors_validate(self, rng):
        data = [
            blepi.make_epi_datum(0.3, 2),
            blepi.make_zamir_feder_datum(np.eye(3)),
            blepi.make_coupled_sums_datum(1.0, 1.0, 0.0, 0.0),  # infeasible but valid
            blepi.make_coupled_sums_datum(1.25, 0.5, 0.5, 0.5),
        ]
        for d in data:
            assert blepi.validate(d).ok


class TestEpiConstructor:
    def test_half_lambda_dim_one(self):
        d = blepi.make_epi_datum(0.5, 1)
        assert d.partition.blocks == (1, 1)
        np.testing.assert_allclose(d.maps[0], [[0.7071067811865476, 0.7071067811865476]])
        np.testing.assert_allclose(d.d, [0.5, 0.5])
        np.testing.assert_allclose(d.c, [1.0])

    def test_quarter_lambda_dim_two(self):
        d = blepi.make_epi_datum(0.25, 2)
        assert d.maps[0].shape == (2, 4)
        np.testing.assert_allclose(d.maps[0][:, :2], 0.5 * np.eye(2))
        np.testing.assert_allclose(d.maps[0][:, 2:], math.sqrt(0.75) * np.eye(2), atol=1e-12)

    @pytest.mark.parametrize("lam", [0.0, 1.0, -0.2, 1.7])
    def test_open_interval(self, lam):
        with pytest.raises(ValueError):
            blepi.make_epi_datum(lam, 1)


class TestZamirFederConstructor:
    def test_unit_row(self):
        d = blepi.make_zamir_feder_datum(np.array([[0.7071067811865476, 0.7071067811865476]]))
        np.testing.assert_allclose(d.d, [0.5, 0.5], atol=1e-12)
        assert d.partition.blocks == (1, 1)

    def test_identity(self):
        d = blepi.make_zamir_feder_datum(np.eye(2))
        np.testing.assert_allclose(d.d, [1.0, 1.0])

    def test_exponents_sum_to_row_count(self, rng):
        for _ in range(20):
            Q, _ = np.linalg.qr(rng.standard_normal((3, 2)))
            A = Q.T  # 2 x 3 with orthonormal rows
            d = blepi.make_zamir_feder_datum(A)
            assert abs(d.d.sum() - 2.0) <= 1e-9

    def test_rejects_nonorthonormal(self):
        with pytest.raises(ValueError):
            blepi.make_zamir_feder_datum(np.array([[1.0, 1.0]]))


class TestCoupledSumsConstructor:
    def test_balanced_parameters(self):
        d = blepi.make_coupled_sums_datum(1.0, 1.0, 0.5, 0.5)
        assert blepi.validate(d).ok
        total_blocks = float(np.dot(d.d, d.partition.blocks))
        total_images = float(np.dot(d.c, d.image_dims))
        assert total_blocks == pytest.approx(3.0) and total_images == pytest.approx(3.0)
        np.testing.assert_allclose(d.maps[0], [[1, 0, 1], [0, 1, 1]])

    def test_zero_exponent_maps_are_retained(self):
        d = blepi.make_coupled_sums_datum(1.0, 1.0, 0.0, 0.0)
        assert d.m == 3
        assert blepi.scaling_residual(d) == pytest.approx(1.0)

    def test_balance_at_larger_alpha(self):
        d = blepi.make_coupled_sums_datum(1.25, 0.5, 0.5, 0.5)
        assert blepi.scaling_residual(d) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            blepi.make_coupled_sums_datum(1.0, -0.1, 0.5, 0.5)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        d = blepi.make_epi_datum(0.5, 1)
        path = tmp_path / "epi.json"
        blepi.save(d, path)
        loaded = blepi.load(path)
        assert loaded == d
        assert loaded.partition == d.partition
        for A, B in zip(loaded.maps, d.maps):
            assert np.array_equal(A, B)  # exact float preservation

    def test_missing_field_names_it(self, tmp_path):
        path = tmp_path / "broken.json"
        doc = {"partition": [1, 1], "c": [1.0], "d": [0.5, 0.5]}
        path.write_text(json.dumps(doc))
        with pytest.raises(DatumParseError, match="maps"):
            blepi.load(path)

    def test_negative_exponent_loads_but_fails_validation(self, tmp_path):
        d = blepi.make_epi_datum(0.5, 1)
        doc = json.loads((_save_to_text(d)))
        doc["c"] = [-1.0]
        path = tmp_path / "neg.json"
        path.write_text(json.dumps(doc))
        loaded = blepi.load(path)
        report = blepi.validate(loaded)
        assert any(i.code == "NEGATIVE_EXPONENT" for i in report.issues)

    def test_garbage_is_a_parse_error(self, tmp_path):
        path = tmp_path / "garbage.json"
        path.write_text("{not json")
        with pytest.raises(DatumParseError):
            blepi.load(path)


def _save_to_text(d):
    from blepi.datum import datum_to_dict

    return json.dumps(datum_to_dict(d))
