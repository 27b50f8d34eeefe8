import json

import numpy as np
import pytest

from tenuniq.exceptions import FactorFileError
from tenuniq.factor_file import dump_factor_file, load_factor_file, read_factor_file, write_factor_file
from tenuniq.field_linalg import ScalarField
from tenuniq.tensor3 import FactorSet


def test_read_unstructured():
    f = read_factor_file(json.dumps({"A": [[1, 0], [0, 1]], "B": [[1, 2], [3, 4], [5, 6]], "C": [[1, 1]]}))
    assert f.dims == (2, 3, 1) and f.rank == 2
    assert f.field is ScalarField.REAL and not f.sfs


def test_read_complex_pairs():
    text = json.dumps({"field": "complex", "sfs": True, "A": [[[1, 1], [0, 0]], [[0, 0], [2, -1]]], "C": [[[1, 0], [1, 0]]]})
    f = read_factor_file(text)
    assert f.sfs and f.B is f.A
    assert f.A[0, 0] == 1 + 1j and f.A[1, 1] == 2 - 1j


def test_sfs_file_with_matching_b_is_accepted():
    f = read_factor_file(json.dumps({"sfs": True, "A": [[1, 0], [0, 1]], "B": [[1, 0], [0, 1]], "C": [[1, 2]]}))
    assert f.sfs


@pytest.mark.parametrize("payload", [
    "not json",
    "[1, 2]",
    json.dumps({"A": [[1]], "C": [[1]]}),
    json.dumps({"A": [[1, 2]], "B": [[1]], "C": [[1, 2]]}),
    json.dumps({"sfs": True, "A": [[1, 0], [0, 1]], "B": [[2, 0], [0, 1]], "C": [[1, 2]]}),
    json.dumps({"A": [[1]], "B": [[1]], "C": [[1]], "D": [[1]]}),
    json.dumps({"field": "complex", "A": [[1]], "B": [[1]], "C": [[1]]}),
    json.dumps({"A": [1, 2], "B": [[1]], "C": [[1]]}),
])
def test_malformed_files_raise(payload):
    with pytest.raises(FactorFileError):
        read_factor_file(payload)


def test_missing_file(tmp_path):
    with pytest.raises(FactorFileError):
        load_factor_file(tmp_path / "absent.json")


def test_write_then_load(tmp_path):
    f = FactorSet(np.array([[1.0, 2.0]]), np.array([[0.5j, 1.0]]), np.array([[1.0, -1.0], [2.0, 0.0]]))
    path = tmp_path / "factors.json"
    write_factor_file(f, path)
    loaded = load_factor_file(path)
    np.testing.assert_array_equal(loaded.B, f.B)
    assert json.loads(dump_factor_file(f))["field"] == "complex"
