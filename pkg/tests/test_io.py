import numpy as np
import pytest

from ccodom.errors import ConfigError, SchemaError, ValidationError
from ccodom.evaluation import accumulate
from ccodom.io import (
    RunConfig,
    config_from_mapping,
    dump_config,
    load_config,
    load_ground_truth,
    load_scans,
    load_trajectory,
    parse_config_text,
    write_poses,
    write_scans,
    write_trajectory,
)
from ccodom.simulator import CorruptionSpec, WorldConfig, random_trajectory_spec, simulate_sequence
from ccodom.solvers import Method


def test_empty_scan_file(tmp_path):
    p = tmp_path / "scans.csv"
    p.write_text("scan_index,landmark_id,range_m,bearing_rad\n")
    assert load_scans(p) == []


def test_negative_range_names_row(tmp_path):
    p = tmp_path / "scans.csv"
    p.write_text("scan_index,landmark_id,range_m,bearing_rad\n0,1,5.0,0.1\n0,2,-1,0.2\n")
    with pytest.raises(ValidationError, match="row 3"):
        load_scans(p)


def test_missing_column(tmp_path):
    p = tmp_path / "scans.csv"
    p.write_text("scan_index,range_m,bearing_rad\n0,5.0,0.1\n")
    with pytest.raises(SchemaError):
        load_scans(p)


def test_gap_in_scan_indices(tmp_path):
    p = tmp_path / "scans.csv"
    p.write_text("scan_index,landmark_id,range_m,bearing_rad\n0,1,5.0,0.1\n2,1,5.0,0.1\n")
    with pytest.raises(ValidationError):
        load_scans(p)


def test_simulated_round_trip(tmp_path):
    seq = simulate_sequence(
        WorldConfig(300, 80, 5), random_trajectory_spec(15, 5), CorruptionSpec(0.05, 0.002, rng_seed=5)
    )
    write_scans(tmp_path / "s.csv", seq.scans)
    write_poses(tmp_path / "g.csv", seq.gt_relative)
    scans = load_scans(tmp_path / "s.csv")
    assert len(scans) == len(seq.scans)
    for a, b in zip(scans, seq.scans):
        assert np.array_equal(a.ids, b.ids)
        assert np.array_equal(a.ranges, b.ranges) and np.array_equal(a.bearings, b.bearings)
    assert load_ground_truth(tmp_path / "g.csv") == seq.gt_relative
    traj = accumulate(seq.gt_relative)
    write_trajectory(tmp_path / "t.csv", traj)
    assert load_trajectory(tmp_path / "t.csv") == traj


def test_csv_text_conventions(tmp_path):
    p = write_poses(tmp_path / "g.csv", [])
    assert p.read_bytes() == b"scan_index,dx_m,dy_m,dtheta_rad\n"


def test_config_text_and_overrides(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nseed = 4\nmethod = cc_means, ransac\nq-lo = 0.3  # inline\nsegment_lengths = 5,10\n")
    cfg = load_config(p, {"q_hi": "0.7", "seed": None})
    assert cfg.seed == 4 and cfg.q_lo == 0.3 and cfg.q_hi == 0.7
    assert cfg.method == (Method.CC_QUANTILE_MEANS, Method.RANSAC)
    assert cfg.segment_lengths == (5.0, 10.0)
    assert config_from_mapping(parse_config_text(dump_config(cfg))) == cfg


def test_config_errors():
    with pytest.raises(ConfigError):
        config_from_mapping({"no_such_key": 1})
    with pytest.raises(ConfigError):
        config_from_mapping({"steps": "many"})
    with pytest.raises(ConfigError):
        parse_config_text("seed 4")
    with pytest.raises(ValueError):
        RunConfig(q_lo=0.8, q_hi=0.2)
