import math

import numpy as np
import pytest

from netsar.forward import WaveformSpec, synthesize_measurement
from netsar.geometry import BaseStation, BeamSpec, EllipseFootprint, GroundPoint
from netsar.patches import (
    align_and_place,
    align_distance,
    align_orientation,
    aligned_patch_to_csv,
    misalignment_angle,
    place_in_spectrum,
    recenter,
)
from netsar.scene import Scene

WF = WaveformSpec(carrier_frequency=5e9, subcarrier_count=32, subcarrier_spacing=2e6)

FOOTPRINT = EllipseFootprint(
    center=GroundPoint(0.0, 0.0),
    eccentricity=0.0,
    semi_major=20.0,
    semi_minor=20.0,
    major_axis_azimuth=0.0,
)
BEAM = BeamSpec(open_angle=0.2, tilt_angle=0.0)


def _point_scene(x, y, extent=40.0):
    n = int(extent)
    refl = np.zeros((n, n), dtype=complex)
    refl[int(x + extent / 2), int(y + extent / 2)] = 1.0
    return Scene(extent=(extent, extent), resolution=1.0, reflectivity=refl)


def _patch(point=(0.5, -0.5), rx_orientation=None, rx_pos=(0.0, 400.0, 50.0), n_ant=8):
    scene = _point_scene(*point)
    tx = BaseStation(position=GroundPoint(400.0, 0.0, 50.0), station_id="tx")
    if rx_orientation is None:
        # broadside to the receiver's line of sight from the origin
        rx_orientation = math.atan2(rx_pos[1], rx_pos[0]) - math.pi / 2
    rx = BaseStation(
        position=GroundPoint(*rx_pos),
        antenna_count=n_ant,
        antenna_spacing=0.03,
        array_orientation=rx_orientation,
        station_id="rx",
    )
    return synthesize_measurement(
        scene, tx, BEAM, rx, WF, region_center=GroundPoint(0.0, 0.0), footprint=FOOTPRINT
    )


def test_align_distance_center_scatterer_is_flattened():
    # a scatterer exactly at the region center must come out as a constant
    patch = _patch(point=(0.5, -0.5))
    center = GroundPoint(0.5, -0.5)
    patch = synthesize_measurement(
        _point_scene(0.5, -0.5),
        BaseStation(position=GroundPoint(400.0, 0.0, 50.0), station_id="tx"),
        BEAM,
        BaseStation(
            position=GroundPoint(0.0, 400.0, 50.0),
            antenna_count=1,
            station_id="rx",
        ),
        WF,
        region_center=center,
        footprint=FOOTPRINT,
    )
    flat = align_distance(patch)
    assert np.allclose(flat.samples, 1.0, atol=1e-9)


def test_misalignment_angle_zero_at_broadside():
    patch = _patch()
    assert abs(misalignment_angle(patch)) < 1e-12
    rotated = _patch(rx_orientation=math.atan2(400.0, 0.0) - math.pi / 2 + 0.3)
    assert math.isclose(misalignment_angle(rotated), 0.3, abs_tol=1e-12)


def test_align_orientation_removes_array_ramp():
    # rotating the array adds a near-linear phase ramp across antennas;
    # alignment should restore the broadside phase progression
    base = _patch(point=(2.0, 1.0))
    rotated = _patch(
        point=(2.0, 1.0), rx_orientation=math.atan2(400.0, 0.0) - math.pi / 2 + 0.25
    )
    fixed = align_orientation(rotated)
    phase_base = np.unwrap(np.angle(base.samples[:, 0]))
    phase_fixed = np.unwrap(np.angle(fixed.samples[:, 0]))
    ramp_base = np.diff(phase_base)
    ramp_fixed = np.diff(phase_fixed)
    ramp_raw = np.diff(np.unwrap(np.angle(rotated.samples[:, 0])))
    assert np.abs(ramp_fixed - ramp_base).max() < np.abs(ramp_raw - ramp_base).max() * 0.05


def test_align_orientation_identity_at_broadside():
    patch = _patch()
    aligned = align_orientation(patch)
    assert np.array_equal(aligned.samples, patch.samples)


def test_place_in_spectrum_coordinates():
    patch = _patch(n_ant=4)
    aligned = place_in_spectrum(patch)
    assert aligned.wavenumber_coords.shape == patch.samples.shape + (2,)
    # check one sample against the definition
    k = WF.wavenumbers()
    l, m = 2, 7
    u_tx = patch.tx_position / np.linalg.norm(patch.tx_position)
    a = patch.rx_antenna_positions[l]
    u_rx = a / np.linalg.norm(a)
    expected = k[m] * (u_tx + u_rx)[:2]
    assert np.allclose(aligned.wavenumber_coords[l, m], expected, rtol=1e-12)
    # radial subcarrier spacing carries the bistatic scale factor
    step = np.linalg.norm(
        aligned.wavenumber_coords[l, m + 1] - aligned.wavenumber_coords[l, m]
    )
    b = np.linalg.norm((u_tx + u_rx)[:2])
    assert math.isclose(step, 2 * math.pi * 2e6 / 299792458.0 * b, rel_tol=1e-9)
    assert 0.0 < aligned.bistatic_angle < math.pi


def test_recenter_zeroes_center_and_shifts_coords():
    aligned = place_in_spectrum(_patch(n_ant=4))
    centered = recenter(aligned)
    assert np.allclose(centered.spectrum_center, 0.0)
    assert np.allclose(
        centered.wavenumber_coords + aligned.spectrum_center[None, None, :],
        aligned.wavenumber_coords,
    )


def test_align_and_place_phase_matches_far_field_model():
    # after full conditioning, sample phase should be +K . p for an
    # off-center point scatterer at p, up to far-field curvature
    p = np.array([3.5, -1.5])  # on a pixel center of the 1 m grid
    patch = _patch(point=tuple(p), n_ant=4)
    aligned = align_and_place(patch)
    model = np.exp(1j * aligned.wavenumber_coords @ p)
    observed = aligned.samples / np.abs(aligned.samples)
    err = np.angle(observed * np.conj(model))
    # residual is bounded by the quadratic far-field curvature of each leg
    k_max = WF.wavenumbers()[-1]
    d_tx = np.linalg.norm(patch.tx_position - np.array([p[0], p[1], 0.0]))
    d_rx = np.linalg.norm(patch.rx_position - np.array([p[0], p[1], 0.0]))
    bound = k_max * (p @ p) * (0.5 / d_tx + 0.5 / d_rx)
    assert np.abs(err).max() < 1.2 * bound

    # exact model: aligned phase is k_m (D_center - d1 - d2l) per sample
    k = WF.wavenumbers()
    pt = np.array([p[0], p[1], 0.0])
    d1 = np.linalg.norm(patch.tx_position - pt)
    d_tx0 = np.linalg.norm(patch.tx_position)
    exact_err = []
    for l in range(patch.antenna_count):
        a = patch.rx_antenna_positions[l]
        d2 = np.linalg.norm(a - pt)
        d_rx0 = np.linalg.norm(patch.rx_position)
        exact = np.exp(1j * k * (d_tx0 + d_rx0 - d1 - d2))
        exact_err.append(np.angle(observed[l] * np.conj(exact)))
    assert np.abs(np.array(exact_err)).max() < 1e-9


def test_aligned_patch_csv_has_coordinates(tmp_path):
    aligned = place_in_spectrum(_patch(n_ant=2))
    path = tmp_path / "aligned.csv"
    aligned_patch_to_csv(aligned, path)
    lines = path.read_text().strip().splitlines()
    header = [ln for ln in lines if ln.startswith("antenna_index")][0]
    assert header.split(",") == ["antenna_index", "subcarrier_index", "re", "im", "k_x", "k_y"]
    data = [ln for ln in lines if not ln.startswith("#") and not ln.startswith("antenna")]
    assert len(data) == aligned.samples.size
