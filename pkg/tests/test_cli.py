import dataclasses
import math

import numpy as np
import pytest

from netsar.cli import (
    build_network,
    channel_waveform,
    load_dataset,
    main,
    reconstruct_run,
    simulate_run,
)
from netsar.config import (
    BeamConfig,
    NetworkConfig,
    ReconstructionConfig,
    RunConfig,
    SceneConfig,
    ScheduleConfig,
    save_config,
)
from netsar.errors import MissingDatasetError, UnknownAlgorithmError

SMALL = RunConfig(
    scene=SceneConfig(extent_m=200.0, resolution_m=1.0, reflector_count=12, seed=1),
    network=NetworkConfig(grid_side=2, grid_spacing_m=150.0, antenna_count=16),
    schedule=ScheduleConfig(
        transmit_probability=0.8, channel_count=3, slot_count=40, seed=7
    ),
    beam=BeamConfig(open_angle_deg=10.0, aim_radius_m=80.0),
)


def test_build_network_grid_and_orientation():
    stations = build_network(SMALL)
    assert len(stations) == 4
    ids = {s.station_id for s in stations}
    assert ids == {"bs00", "bs01", "bs10", "bs11"}
    xs = sorted({s.position.x for s in stations})
    assert xs == [-75.0, 75.0]
    # every array is broadside to its line of sight to the origin
    for s in stations:
        los = math.atan2(-s.position.y, -s.position.x)
        assert math.isclose(
            math.sin(s.array_orientation - los - math.pi / 2), 0.0, abs_tol=1e-12
        )


def test_channel_waveform_stacks_by_bandwidth():
    wf0 = channel_waveform(SMALL, 0)
    wf2 = channel_waveform(SMALL, 2)
    assert wf0.carrier_frequency == 5.0e9
    assert wf2.carrier_frequency == 5.0e9 + 2 * wf0.bandwidth
    assert wf2.bandwidth == wf0.bandwidth


def test_simulate_writes_dataset_and_manifest(tmp_path):
    out = tmp_path / "run"
    count = simulate_run(SMALL, out, seed=7)
    assert count > 0
    for name in (
        "scene.csv",
        "scene.pgm",
        "config.txt",
        "patches.csv",
        "samples.npy",
        "manifest.txt",
    ):
        assert (out / name).exists()
    stacked = np.load(out / "samples.npy")
    assert stacked.shape[0] == count
    assert stacked.shape[1] == SMALL.network.antenna_count
    manifest = (out / "manifest.txt").read_text()
    assert f"patch_count = {count}" in manifest
    assert "checksum.samples.npy" in manifest


def test_simulate_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    simulate_run(SMALL, a, seed=7)
    simulate_run(SMALL, b, seed=7)
    ma = (a / "manifest.txt").read_text()
    mb = (b / "manifest.txt").read_text()
    assert ma == mb
    assert (a / "samples.npy").read_bytes() == (b / "samples.npy").read_bytes()


def test_simulate_seed_changes_output(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    simulate_run(SMALL, a, seed=7)
    simulate_run(SMALL, b, seed=8)
    assert (a / "patches.csv").read_text() != (b / "patches.csv").read_text()


def test_simulate_zero_probability_records_nothing(tmp_path):
    quiet = dataclasses.replace(
        SMALL, schedule=dataclasses.replace(SMALL.schedule, transmit_probability=0.0)
    )
    out = tmp_path / "quiet"
    assert simulate_run(quiet, out, seed=7) == 0
    assert np.load(out / "samples.npy").shape[0] == 0


def test_receive_distance_limit(tmp_path):
    near = dataclasses.replace(
        SMALL,
        schedule=dataclasses.replace(SMALL.schedule, max_receive_distance_m=1.0),
    )
    out = tmp_path / "near"
    assert simulate_run(near, out, seed=7) == 0


def test_load_dataset_round_trip(tmp_path):
    out = tmp_path / "run"
    count = simulate_run(SMALL, out, seed=7)
    patches = load_dataset(SMALL, out)
    assert len(patches) == count
    p = patches[0]
    assert p.samples.shape == (16, SMALL.waveform.subcarrier_count)
    assert p.tx_id != p.rx_id
    with pytest.raises(MissingDatasetError):
        load_dataset(SMALL, tmp_path / "nope")


def test_reconstruct_intersect_writes_estimates(tmp_path):
    data = tmp_path / "data"
    simulate_run(SMALL, data, seed=7)
    out = tmp_path / "rec"
    reconstruct_run(SMALL, data, out, seed=7)
    assert (out / "estimates.csv").exists()
    report = (out / "report.txt").read_text()
    assert "algorithm = intersect" in report
    assert (out / "manifest.txt").exists()


def test_reconstruct_unknown_3d_without_planes(tmp_path):
    data = tmp_path / "data"
    simulate_run(SMALL, data, seed=7)
    cfg = dataclasses.replace(
        SMALL, reconstruction=ReconstructionConfig(algorithm="3d")
    )
    with pytest.raises(UnknownAlgorithmError):
        reconstruct_run(cfg, data, tmp_path / "rec", seed=7)


def test_reconstruct_3d_with_planes(tmp_path):
    data = tmp_path / "data"
    simulate_run(SMALL, data, seed=7)
    cfg = dataclasses.replace(
        SMALL,
        reconstruction=ReconstructionConfig(algorithm="3d", height_plane_count=8),
    )
    out = tmp_path / "rec3d"
    reconstruct_run(cfg, data, out, seed=7)
    assert (out / "height.csv").exists()
    assert (out / "height.pgm").exists()


def test_main_scene_and_config_round_trip(tmp_path, capsys):
    cfg_path = tmp_path / "run.cfg"
    save_config(SMALL, cfg_path)
    out = tmp_path / "scene_out"
    rc = main(["scene", "--config", str(cfg_path), "--out", str(out)])
    assert rc == 0
    assert (out / "scene.csv").exists()
    assert "wrote scene" in capsys.readouterr().out


def test_main_analyze_tradeoff(tmp_path, capsys):
    out = tmp_path / "ana"
    rc = main(["analyze", "tradeoff", "--out", str(out)])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "I(X;Y)" in printed
    assert (out / "tradeoff.csv").exists()


def test_main_analyze_slice_check(tmp_path, capsys):
    out = tmp_path / "slice"
    rc = main(
        ["analyze", "slice-check", "--out", str(out), "--angle", "0.0", "--seed", "3"]
    )
    assert rc == 0
    printed = capsys.readouterr().out
    assert "relative error" in printed
    err = float(printed.strip().split()[-1])
    assert err < 1e-9
