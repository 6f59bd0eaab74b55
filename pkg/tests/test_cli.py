import csv
import json

import numpy as np
import pytest

from promptseg import SearchConfig, load_mask, load_volume, load_weights, segment
from promptseg.cli import cli_dispatch


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Dataset plus tiny trained weights, all produced through the CLI."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    assert cli_dispatch(["phantom", "gen", "--count", "4", "--lesion-frac", "0.5",
                         "--out", str(data), "--seed", "7"]) == 0
    wsc = root / "wsc_weights.json"
    fsc = root / "fsc_weights.json"
    assert cli_dispatch(["train", "wsc", "--data", str(data), "--out", str(wsc),
                         "--epochs", "2", "--seed", "0"]) == 0
    assert cli_dispatch(["train", "fsc", "--data", str(data), "--out", str(fsc),
                         "--epochs", "2", "--crops-per-volume", "4",
                         "--seed", "0"]) == 0
    return {"root": root, "data": data, "wsc": wsc, "fsc": fsc}


class TestExitCodes:
    def test_unknown_command(self):
        assert cli_dispatch(["bogus"]) == 1

    def test_unknown_flag(self, tmp_path):
        assert cli_dispatch(["phantom", "gen", "--count", "1",
                             "--out", str(tmp_path), "--nope"]) == 1

    def test_missing_required_flag(self):
        assert cli_dispatch(["segment", "--volume", "x.json"]) == 1

    def test_malformed_prompt_triple(self, workspace, tmp_path):
        rc = cli_dispatch(["segment", "--volume", str(workspace["data"] / "vol_000.json"),
                           "--wsc", str(workspace["wsc"]), "--fsc", str(workspace["fsc"]),
                           "--prompt", "1,2", "--out", str(tmp_path / "m.json")])
        assert rc == 1

    def test_missing_labels_csv(self, tmp_path):
        assert cli_dispatch(["train", "wsc", "--data", str(tmp_path),
                             "--out", str(tmp_path / "w.json")]) == 2


class TestPhantomGen:
    def test_deterministic_bytes(self, tmp_path):
        for sub in ("a", "b"):
            assert cli_dispatch(["phantom", "gen", "--count", "2", "--out",
                                 str(tmp_path / sub), "--seed", "3"]) == 0
        for name in ("labels.csv", "vol_000.bin", "vol_001.bin", "vol_000_gt.bin"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_labels_schema_and_fraction(self, workspace):
        with (workspace["data"] / "labels.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["id", "weak_label"]
        assert len(rows) == 5
        assert sum(int(r[1]) for r in rows[1:]) == 2

    def test_custom_dims(self, tmp_path):
        assert cli_dispatch(["phantom", "gen", "--count", "1", "--lesion-frac", "1",
                             "--out", str(tmp_path), "--dims", "64,64,24,1"]) == 0
        assert load_volume(tmp_path / "vol_000.json").dims == (64, 64, 24, 1)


class TestSegment:
    def test_writes_mask_and_reports(self, workspace, tmp_path, capsys):
        out = tmp_path / "mask.json"
        rc = cli_dispatch(["segment", "--volume", str(workspace["data"] / "vol_000.json"),
                           "--wsc", str(workspace["wsc"]), "--fsc", str(workspace["fsc"]),
                           "--prompt", "32,32,12", "--out", str(out)])
        assert rc == 0
        info = json.loads(capsys.readouterr().out)
        assert info["crops_evaluated"] == 81 * 6
        mask = load_mask(out)
        assert mask.dims == (64, 64, 24)
        assert info["positive_voxels"] == mask.voxel_count()

    def test_out_of_bounds_prompt(self, workspace, tmp_path, capsys):
        rc = cli_dispatch(["segment", "--volume", str(workspace["data"] / "vol_000.json"),
                           "--wsc", str(workspace["wsc"]), "--fsc", str(workspace["fsc"]),
                           "--prompt", "200,0,0", "--out", str(tmp_path / "m.json")])
        assert rc == 2
        assert "prompt 0" in capsys.readouterr().err

    def test_matches_library_single_run(self, workspace, tmp_path):
        out = tmp_path / "mask.json"
        rc = cli_dispatch(["segment", "--volume", str(workspace["data"] / "vol_000.json"),
                           "--wsc", str(workspace["wsc"]), "--fsc", str(workspace["fsc"]),
                           "--prompt", "30,30,10", "--n", "1", "--seed", "0",
                           "--out", str(out)])
        assert rc == 0
        volume = load_volume(workspace["data"] / "vol_000.json")
        wsc = load_weights(workspace["wsc"], expect_head="global_average_pool")
        fsc = load_weights(workspace["fsc"], expect_head="flatten")
        lib_mask, _ = segment(volume, [(30, 30, 10)], SearchConfig(n_runs=1, seed=0),
                              wsc, fsc)
        assert np.array_equal(load_mask(out).data, lib_mask.data)


class TestEval:
    def test_dice_self_is_one(self, workspace, capsys):
        gt = workspace["data"] / "vol_000_gt.json"
        assert cli_dispatch(["eval", "dice", "--pred", str(gt), "--gt", str(gt)]) == 0
        assert capsys.readouterr().out.strip() == "1.000000"

    def test_dice_missing_file(self, workspace, tmp_path):
        rc = cli_dispatch(["eval", "dice", "--pred", str(tmp_path / "nope.json"),
                           "--gt", str(workspace["data"] / "vol_000_gt.json")])
        assert rc == 2
