"""Command-line driver: simulation, reconstruction, analysis, export.

Subcommands:
  simulate     run the slotted network measurement loop, write a dataset
  reconstruct  image or localize from a dataset with the configured algorithm
  analyze      slice-check | onedim-mse | tradeoff verification paths
  scene        generate and export the ground-truth scene only

Every run writes a manifest recording the config hash, the seed, and a
sha256 checksum of every artifact, so identical (config, seed) pairs are
checkable for bit-identical outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .analysis import (
    loglog_slope,
    mse_monte_carlo,
    projection_slice_check,
    resolutions,
    statistics_to_csv,
)
from .config import RunConfig, load_config, serialize_config
from .constants import SPEED_OF_LIGHT
from .errors import (
    EmptyFootprintError,
    InvalidBeamError,
    MissingDatasetError,
    UnknownAlgorithmError,
)
from .forward import MeasurementPatch, WaveformSpec, synthesize_measurement
from .geometry import (
    BaseStation,
    BeamSpec,
    GroundPoint,
    beam_footprint,
    bistatic_direction,
    bistatic_factor,
)
from .imageio import write_pgm, write_table
from .isar import (
    VoxelGrid,
    WavenumberSample,
    build_sensing_tensor,
    invert_sensing_tensor,
    voxel_grid_slices_to_pgm,
    voxel_grid_to_csv,
)
from .patches import align_and_place, align_distance
from .reconstruct import (
    estimate_height,
    fuse_images,
    intersect_lines,
    procedure1_invert,
    procedure2_per_patch,
    range_profiles,
)
from .scene import random_reflector_scene, scene_from_csv, scene_to_csv, scene_to_pgm
from .tradeoff import (
    channel_from_csv,
    example_channel,
    gaussian_sum_bound,
    information_terms,
    terms_table,
)


# ---------------------------------------------------------------- network


def build_network(cfg: RunConfig) -> list[BaseStation]:
    """Stations on a square grid centered on the scene origin.

    Each array is mounted broadside to the station's line of sight to
    the scene center (the deployment that minimizes the orientation
    phase ramp for looks near the center).
    """
    n = cfg.network
    side = n.grid_side
    stations = []
    for i in range(side):
        for j in range(side):
            x = (i - (side - 1) / 2.0) * n.grid_spacing_m
            y = (j - (side - 1) / 2.0) * n.grid_spacing_m
            if abs(x) < 1e-9 and abs(y) < 1e-9:
                orientation = 0.0
            else:
                orientation = math.atan2(-y, -x) + math.pi / 2
            stations.append(
                BaseStation(
                    position=GroundPoint(x, y, n.station_height_m),
                    antenna_count=n.antenna_count,
                    antenna_spacing=n.antenna_spacing_m,
                    array_orientation=orientation,
                    station_id=f"bs{i}{j}",
                )
            )
    return stations


def channel_waveform(cfg: RunConfig, channel: int) -> WaveformSpec:
    """Waveform of one frequency channel: carriers stacked by bandwidth."""
    w = cfg.waveform
    bandwidth = w.subcarrier_count * w.subcarrier_spacing_hz
    return WaveformSpec(
        carrier_frequency=w.carrier_frequency_hz + channel * bandwidth,
        subcarrier_count=w.subcarrier_count,
        subcarrier_spacing=w.subcarrier_spacing_hz,
    )


# --------------------------------------------------------------- manifest


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()


def write_manifest(out: Path, cfg: RunConfig, seed: int, extra_lines: list[str]) -> None:
    """key = value manifest with artifact checksums, written last."""
    lines = [f"config_hash = {_config_hash(cfg)}", f"seed = {seed}"]
    lines.extend(extra_lines)
    for path in sorted(out.rglob("*")):
        if path.is_file() and path.name != "manifest.txt":
            lines.append(f"checksum.{path.relative_to(out)} = {_sha256(path)}")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------- simulate


def simulate_run(cfg: RunConfig, out: Path, seed: int) -> int:
    """Slotted measurement loop; returns the recorded patch count.

    Per slot every station transmits independently with the configured
    probability on a uniformly random channel, aiming at a uniformly
    random ground point within the aim radius of its own base. Every
    other station not transmitting on that channel and within the
    maximum receive distance of the footprint records a patch. Patches
    whose footprint contains no nonzero scene pixel are skipped and
    annotated rather than stored.
    """
    out.mkdir(parents=True, exist_ok=True)
    sc = cfg.scene
    scene = random_reflector_scene(
        extent=(sc.extent_m, sc.extent_m),
        count=sc.reflector_count,
        side=sc.reflector_side_m,
        seed=sc.seed,
        resolution=sc.resolution_m,
    )
    stations = build_network(cfg)
    sch = cfg.schedule
    open_angle = math.radians(cfg.beam.open_angle_deg)

    root = np.random.SeedSequence(seed)
    slot_seeds = root.spawn(sch.slot_count)

    records: list[dict] = []
    sample_blocks: list[np.ndarray] = []
    skips: list[str] = []
    for slot in range(sch.slot_count):
        rng = np.random.default_rng(slot_seeds[slot])
        transmits = rng.random(len(stations)) < sch.transmit_probability
        channels = rng.integers(0, sch.channel_count, size=len(stations))
        for ti, tx in enumerate(stations):
            if not transmits[ti]:
                continue
            # aim: uniform over the disk of the aim radius around the base
            radius = cfg.beam.aim_radius_m * math.sqrt(rng.random())
            azimuth = rng.uniform(0.0, 2.0 * math.pi)
            dx = radius * math.cos(azimuth)
            dy = radius * math.sin(azimuth)
            tilt = math.atan2(math.hypot(dx, dy), tx.height)
            try:
                beam = BeamSpec(
                    open_angle=open_angle, tilt_angle=tilt, planar_angle=azimuth
                )
                footprint = beam_footprint(tx, beam)
            except InvalidBeamError as exc:
                skips.append(f"skip.slot{slot}.{tx.station_id} = beam: {exc}")
                continue
            ch = int(channels[ti])
            wf = channel_waveform(cfg, ch)
            for ri, rx in enumerate(stations):
                if ri == ti:
                    continue
                if transmits[ri] and int(channels[ri]) == ch:
                    continue
                dist = np.linalg.norm(
                    rx.position.horizontal() - footprint.center.horizontal()
                )
                if dist > sch.max_receive_distance_m:
                    continue
                try:
                    patch = synthesize_measurement(scene, tx, beam, rx, wf)
                except EmptyFootprintError:
                    skips.append(
                        f"skip.slot{slot}.{tx.station_id}->{rx.station_id} = outside scene"
                    )
                    continue
                if not np.any(patch.samples):
                    skips.append(
                        f"skip.slot{slot}.{tx.station_id}->{rx.station_id} = dark footprint"
                    )
                    continue
                records.append(
                    {
                        "index": len(records),
                        "slot": slot,
                        "channel": ch,
                        "tx_id": tx.station_id,
                        "rx_id": rx.station_id,
                        "carrier_hz": wf.carrier_frequency,
                        "center_x": footprint.center.x,
                        "center_y": footprint.center.y,
                        "tilt": tilt,
                        "planar": azimuth,
                    }
                )
                sample_blocks.append(patch.samples)

    scene_to_csv(scene, out / "scene.csv")
    scene_to_pgm(scene, out / "scene.pgm")
    (out / "config.txt").write_text(serialize_config(cfg))
    header = list(records[0].keys()) if records else [
        "index", "slot", "channel", "tx_id", "rx_id", "carrier_hz",
        "center_x", "center_y", "tilt", "planar",
    ]
    write_table(
        out / "patches.csv", header, [[r[k] for k in header] for r in records]
    )
    stacked = (
        np.stack(sample_blocks)
        if sample_blocks
        else np.zeros((0, cfg.network.antenna_count, cfg.waveform.subcarrier_count), dtype=complex)
    )
    np.save(out / "samples.npy", stacked)

    extra = [f"patch_count = {len(records)}"]
    for r in records:
        i = r["index"]
        extra.append(
            f"patch.{i} = slot={r['slot']} channel={r['channel']} "
            f"tx={r['tx_id']} rx={r['rx_id']} carrier={r['carrier_hz']!r} "
            f"center=({r['center_x']!r},{r['center_y']!r}) "
            f"tilt={r['tilt']!r} planar={r['planar']!r}"
        )
    extra.extend(skips)
    write_manifest(out, cfg, seed, extra)
    return len(records)


# ------------------------------------------------------------ dataset I/O


def load_dataset(cfg: RunConfig, dataset: Path):
    """Rebuild MeasurementPatch objects from a simulate_run dataset."""
    index = dataset / "patches.csv"
    samples_file = dataset / "samples.npy"
    if not index.exists() or not samples_file.exists():
        raise MissingDatasetError(f"no dataset at {dataset}")
    from .imageio import read_table

    header, rows = read_table(index)
    stacked = np.load(samples_file)
    if not rows or stacked.shape[0] == 0:
        raise MissingDatasetError(f"dataset at {dataset} contains no patches")
    stations = {s.station_id: s for s in build_network(cfg)}
    col = {name: k for k, name in enumerate(header)}
    patches = []
    for row in rows:
        tx = stations[row[col["tx_id"]]]
        rx = stations[row[col["rx_id"]]]
        center = GroundPoint(
            float(row[col["center_x"]]), float(row[col["center_y"]])
        )
        wf = channel_waveform(cfg, int(row[col["channel"]]))
        tx_pos = tx.position.as_array()
        rx_pos = rx.position.as_array()
        d1 = np.linalg.norm(tx_pos - center.as_array())
        d2 = np.linalg.norm(rx_pos - center.as_array())
        patches.append(
            MeasurementPatch(
                samples=stacked[int(row[col["index"]])],
                tx_id=tx.station_id,
                rx_id=rx.station_id,
                direction=bistatic_direction(tx.position, rx.position, center),
                bistatic_scale=bistatic_factor(tx.position, rx.position, center),
                composite_distance=float(d1 + d2),
                region_center=center,
                waveform=wf,
                rx_antenna_positions=rx.antenna_positions(),
                rx_antenna_spacing=rx.antenna_spacing,
                rx_array_orientation=rx.array_orientation,
                tx_position=tx_pos,
                rx_position=rx_pos,
            )
        )
    return patches


# ------------------------------------------------------------ reconstruct


def _report_header(cfg: RunConfig, n_patches: int) -> list[str]:
    wf = channel_waveform(cfg, 0)
    aperture = cfg.network.antenna_count * cfg.network.antenna_spacing_m
    rho_y, rho_x, dx = resolutions(
        wf, aperture, cfg.network.grid_spacing_m, cfg.network.antenna_count
    )
    return [
        f"algorithm = {cfg.reconstruction.algorithm}",
        f"patches = {n_patches}",
        f"range_resolution_m = {rho_y!r}",
        f"cross_resolution_m = {rho_x!r}",
        f"array_sampling_m = {dx!r}",
    ]


def _largest_center_group(patches):
    groups: dict[tuple, list] = {}
    for p in patches:
        key = (round(p.region_center.x, 6), round(p.region_center.y, 6))
        groups.setdefault(key, []).append(p)
    return max(groups.values(), key=len)


def reconstruct_run(cfg: RunConfig, dataset: Path, out: Path, seed: int) -> None:
    """Dispatch the configured algorithm over a dataset and write artifacts."""
    out.mkdir(parents=True, exist_ok=True)
    raw = load_dataset(cfg, dataset)
    rcfg = cfg.reconstruction
    report = _report_header(cfg, len(raw))
    algorithm = rcfg.algorithm

    if algorithm == "intersect":
        aligned = [align_and_place(p) for p in raw]
        profiles = [range_profiles(a, rcfg.peak_threshold_db) for a in aligned]
        window = SPEED_OF_LIGHT / (2.0 * cfg.waveform.subcarrier_spacing_hz)
        estimates, diag = intersect_lines(
            profiles,
            cluster_radius=rcfg.cluster_radius_m,
            min_support=rcfg.min_support,
            min_crossing_sine=rcfg.min_crossing_sine,
            max_offset=0.45 * window,
            pair_max_separation=0.9 * window,
        )
        write_table(
            out / "estimates.csv",
            ["x", "y", "score", "supporting_lines"],
            [
                [e.position.x, e.position.y, e.score, e.supporting_lines]
                for e in estimates
            ],
        )
        report += [
            f"estimates = {len(estimates)}",
            f"intersections = {diag.intersections}",
            f"clusters = {diag.clusters}",
            f"skipped_parallel = {diag.skipped_parallel}",
        ]
    elif algorithm == "procedure2":
        aligned = [align_and_place(p) for p in raw]
        images = [
            procedure2_per_patch(a, pad_factor=rcfg.pad_factor) for a in aligned
        ]
        fused = fuse_images(
            images,
            extent=(cfg.scene.extent_m, cfg.scene.extent_m),
            spacing=rcfg.pixel_spacing_m,
            method=rcfg.fusion_method,
        )
        write_pgm(fused.magnitude, out / "fused.pgm")
        report.append(f"fused_pixels = {fused.magnitude.shape}")
    elif algorithm == "procedure1":
        aligned = [align_and_place(p) for p in _largest_center_group(raw)]
        wf_top = channel_waveform(cfg, cfg.schedule.channel_count - 1)
        k_max = (
            4.0 * np.pi * (wf_top.carrier_frequency + wf_top.bandwidth) / SPEED_OF_LIGHT
        )
        pixel_extent = 0.9 * rcfg.spectrum_half_size * 2.0 * np.pi / k_max
        image = procedure1_invert(aligned, rcfg.spectrum_half_size, pixel_extent)
        write_pgm(image.magnitude, out / "procedure1.pgm")
        report += [
            f"procedure1_patches = {len(aligned)}",
            f"pixel_extent_m = {pixel_extent!r}",
        ]
    elif algorithm == "3d":
        if rcfg.height_plane_count < 4:
            raise UnknownAlgorithmError(
                "3d mode needs reconstruction.height_plane_count >= 4"
            )
        truth = scene_from_csv(
            dataset / "scene.csv",
            (cfg.scene.extent_m, cfg.scene.extent_m),
            cfg.scene.resolution_m,
        )
        height = (
            truth.height if truth.height is not None else np.zeros(truth.shape)
        )
        base = np.abs(truth.reflectivity)
        planes = np.stack(
            [
                base * np.exp(-1j * i * rcfg.height_step_rad_per_m * height)
                for i in range(rcfg.height_plane_count)
            ]
        )
        est, valid = estimate_height(planes, rcfg.height_step_rad_per_m)
        rows = []
        for ix, iy in zip(*np.nonzero(valid)):
            rows.append([int(ix), int(iy), float(est[ix, iy]), float(height[ix, iy])])
        write_table(out / "height.csv", ["x_index", "y_index", "estimate", "truth"], rows)
        filled = np.where(valid, est, 0.0)
        write_pgm(filled, out / "height.pgm")
        report.append(f"height_pixels = {int(valid.sum())}")
    elif algorithm == "isar":
        group = _largest_center_group(raw)
        center = group[0].region_center.as_array()
        kvecs = []
        values = []
        for p in group:
            ap = align_distance(p)
            k = p.waveform.wavenumbers()
            u_tx = p.tx_position - center
            u_tx /= np.linalg.norm(u_tx)
            rel = p.rx_antenna_positions - center[None, :]
            u_rx = rel / np.linalg.norm(rel, axis=1)[:, None]
            ksum = u_tx[None, None, :] + u_rx[:, None, :]  # (N_a, 1, 3)
            kvecs.append((k[None, :, None] * ksum).reshape(-1, 3))
            values.append(ap.samples.reshape(-1))
        kvecs = np.concatenate(kvecs)
        values = np.concatenate(values)
        stride = max(1, kvecs.shape[0] // 1500)
        kvecs, values = kvecs[::stride], values[::stride]
        # aligned samples carry exp(+j k . p): negate k for the e^{-j} model
        samples = [WavenumberSample(k_vector=-v) for v in kvecs]
        grid = VoxelGrid(M_side=8, spacing=cfg.scene.extent_m / 16.0)
        tensor = build_sensing_tensor(samples, grid)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            voxels, rank = invert_sensing_tensor(tensor, values, grid)
        voxel_grid_to_csv(voxels, out / "voxels.csv")
        voxel_grid_slices_to_pgm(voxels, out, stem="voxels")
        report += [f"isar_samples = {values.size}", f"isar_rank = {rank}"]
    else:
        raise UnknownAlgorithmError(f"unknown algorithm {algorithm!r}")

    (out / "report.txt").write_text("\n".join(report) + "\n")
    write_manifest(out, cfg, seed, [f"dataset = {dataset}"])


# ---------------------------------------------------------------- analyze


def analyze_run(cfg: RunConfig, subcommand: str, out: Path, seed: int, args) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if subcommand == "slice-check":
        rng = np.random.default_rng(seed)
        size = args.size
        image = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
        slc, proj, err = projection_slice_check(image, args.angle)
        write_table(
            out / "slice.csv",
            ["index", "slice_re", "slice_im", "projection_re", "projection_im"],
            [
                [i, float(a.real), float(a.imag), float(b.real), float(b.imag)]
                for i, (a, b) in enumerate(zip(slc, proj))
            ],
        )
        print(f"slice-check angle={args.angle} relative error {err:.3e}")
    elif subcommand == "onedim-mse":
        rows = mse_monte_carlo(256, 128, [4, 8, 16, 32, 64], args.trials, seed)
        statistics_to_csv(rows, out / "mse.csv")
        byn: dict[int, list[float]] = {}
        for n, _, m in rows:
            byn.setdefault(n, []).append(m)
        ns = np.array(sorted(byn))
        means = np.array([np.mean(byn[n]) for n in ns])
        slope = loglog_slope(ns, means)
        print(f"onedim-mse slope {slope:.3f}")
    elif subcommand == "tradeoff":
        channel = (
            channel_from_csv(args.channel) if args.channel else example_channel()
        )
        terms = information_terms(channel)
        print(terms_table(terms))
        print(f"gaussian_sum_bound(3) = {gaussian_sum_bound(3.0)!r}")
        write_table(
            out / "tradeoff.csv", ["term", "bits"], [[k, float(v)] for k, v in terms.items()]
        )
    else:
        raise UnknownAlgorithmError(f"unknown analyze subcommand {subcommand!r}")
    write_manifest(out, cfg, seed, [f"analyze = {subcommand}"])


# ------------------------------------------------------------------- main


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None)
    parser.add_argument("--out", type=Path, default=None)
    parser.add_argument("--seed", type=int, default=None)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="netsar")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run the measurement loop")
    _add_common(p_sim)

    p_rec = sub.add_parser("reconstruct", help="image or localize from a dataset")
    _add_common(p_rec)
    p_rec.add_argument("--dataset", type=Path, required=True)

    p_ana = sub.add_parser("analyze", help="verification analyses")
    p_ana.add_argument("subcommand", choices=["slice-check", "onedim-mse", "tradeoff"])
    _add_common(p_ana)
    p_ana.add_argument("--angle", type=float, default=0.0)
    p_ana.add_argument("--size", type=int, default=32)
    p_ana.add_argument("--trials", type=int, default=200)
    p_ana.add_argument("--channel", type=Path, default=None)

    p_scn = sub.add_parser("scene", help="generate and export the scene")
    _add_common(p_scn)

    args = parser.parse_args(argv)
    cfg = load_config(args.config) if args.config else RunConfig()
    seed = args.seed if args.seed is not None else cfg.schedule.seed
    out = args.out if args.out is not None else Path(cfg.output_dir)

    if args.command == "simulate":
        count = simulate_run(cfg, out, seed)
        print(f"recorded {count} patches in {out}")
    elif args.command == "reconstruct":
        reconstruct_run(cfg, args.dataset, out, seed)
        print(f"wrote reconstruction artifacts to {out}")
    elif args.command == "analyze":
        analyze_run(cfg, args.subcommand, out, seed, args)
    elif args.command == "scene":
        out.mkdir(parents=True, exist_ok=True)
        sc = cfg.scene
        scene = random_reflector_scene(
            extent=(sc.extent_m, sc.extent_m),
            count=sc.reflector_count,
            side=sc.reflector_side_m,
            seed=sc.seed,
            resolution=sc.resolution_m,
        )
        scene_to_csv(scene, out / "scene.csv")
        scene_to_pgm(scene, out / "scene.pgm")
        write_manifest(out, cfg, seed, ["scene_only = 1"])
        print(f"wrote scene to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
