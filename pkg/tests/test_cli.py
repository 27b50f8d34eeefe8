import io
import json

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from tenuniq import __version__
from tenuniq.cli import cli
from tenuniq.factor_file import write_factor_file
from tenuniq.tensor3 import FactorSet


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(cli, ["--log-level", "WARNING", *args])


@pytest.fixture
def identity_file(tmp_path):
    path = tmp_path / "identity.json"
    write_factor_file(FactorSet(np.eye(3), np.eye(3), np.eye(3)), path)
    return path


def test_bounds_table(runner):
    result = invoke(runner, "bounds", "--dims", "4x5x6")
    assert result.exit_code == 0
    assert "overall max rank 7" in result.stdout
    assert "WM_GENERIC" in result.stdout


def test_bounds_json_is_deterministic(runner):
    first = invoke(runner, "bounds", "--dims", "4x5x6", "--format", "json")
    second = invoke(runner, "bounds", "--dims", "4x5x6", "--format", "json")
    assert first.exit_code == 0
    assert first.stdout == second.stdout
    report = json.loads(first.stdout)
    assert report["command"] == "bounds"
    assert report["tool_version"] == __version__
    assert report["results"]["overall_max"] == 7


def test_bounds_csv_matches_json(runner):
    as_json = json.loads(invoke(runner, "bounds", "--dims", "8x20", "--sfs", "--format", "json").stdout)
    frame = pd.read_csv(io.StringIO(invoke(runner, "bounds", "--dims", "8x20", "--sfs", "--format", "csv").stdout))
    from_json = {e["bound_id"]: e["max_rank"] for e in as_json["results"]["entries"]}
    from_csv = dict(zip(frame["bound"], frame["max_rank"]))
    assert from_csv == from_json
    assert from_csv["SFS_UM_C"] == 21 and from_csv["KRUSKAL_SFS"] == 14


def test_bounds_max_rank_from_config(runner, tmp_path):
    config = tmp_path / "tenuniq.yaml"
    config.write_text("r_cap: 5\n")
    result = runner.invoke(cli, ["--config", str(config), "bounds", "--dims", "4x5x6", "--format", "json"])
    assert result.exit_code == 0
    assert json.loads(result.stdout)["inputs"]["max_rank"] == 5


@pytest.mark.parametrize("dims", ["4x5", "4x5x6x7", "axbxc", "0x5x6"])
def test_bad_dims_exit_1(runner, dims):
    assert invoke(runner, "bounds", "--dims", dims).exit_code == 1


def test_sfs_dims_take_two_numbers(runner):
    assert invoke(runner, "bounds", "--dims", "4x5x6", "--sfs").exit_code == 1


def test_unknown_command_exit_1(runner):
    assert invoke(runner, "frobnicate").exit_code == 1


def test_certify_identity(runner, identity_file):
    result = invoke(runner, "certify", str(identity_file), "--format", "json")
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["results"][0]["verdict"] == "UNIQUE_PROVEN"
    assert report["seed"] == 0


def test_certify_missing_file_exit_1(runner, tmp_path):
    assert invoke(runner, "certify", str(tmp_path / "absent.json")).exit_code == 1


def test_certify_non_finite_exit_2(runner, tmp_path):
    path = tmp_path / "nan.json"
    path.write_text('{"A": [[NaN, 1.0], [0.0, 1.0]], "B": [[1.0, 0.0], [0.0, 1.0]], "C": [[1.0, 0.0], [0.0, 1.0]]}')
    assert invoke(runner, "certify", str(path)).exit_code == 2


def test_certify_not_proven_keeps_exit_0(runner, tmp_path):
    path = tmp_path / "dup.json"
    dup = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    write_factor_file(FactorSet(dup, dup, np.eye(3)[:2]), path)
    result = invoke(runner, "certify", str(path), "--format", "csv")
    assert result.exit_code == 0
    frame = pd.read_csv(io.StringIO(result.stdout))
    assert set(frame["verdict"]) == {"NOT_PROVEN"}


def test_certify_bad_tolerance_exit_1(runner, identity_file):
    assert invoke(runner, "certify", str(identity_file), "--tol", "2.0").exit_code == 1


def test_generic_check(runner):
    result = invoke(runner, "generic-check", "--dims", "4x5x6", "--rank", "6", "--trials", "3", "--format", "json")
    assert result.exit_code == 0
    assert json.loads(result.stdout)["results"]["passing_trials"] == 3


def test_empirical_single_init(runner):
    result = invoke(runner, "empirical", "--dims", "3x3x3", "--rank", "2", "--inits", "1", "--format", "json")
    assert result.exit_code == 0
    assert json.loads(result.stdout)["results"]["verdict"] == "INCONCLUSIVE"


def test_tensor_entries(runner, tmp_path):
    path = tmp_path / "f.json"
    write_factor_file(FactorSet(np.array([[1.0], [2.0]]), np.array([[1.0], [3.0]]), np.array([[1.0]])), path)
    out = tmp_path / "t.json"
    result = invoke(runner, "tensor", "--input", str(path), "--output", str(out))
    assert result.exit_code == 0
    report = json.loads(out.read_text())
    # i fastest: T[0,0], T[1,0], T[0,1], T[1,1]
    assert report["results"]["entries"] == [1.0, 2.0, 3.0, 6.0]
    assert report["results"]["dims"] == [2, 2, 1]
