"""Image formation from aligned spectrum patches.

Two full inversion routes (global zero-filled spectrum grid; per-patch
IDFT followed by image-domain fusion), a range-profile route with line
intersection for geometries whose cross resolution is too coarse, and
per-pixel surface-height estimation from a stack of vertical-wavenumber
plane images.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import griddata
from scipy.ndimage import map_coordinates

from .constants import SPEED_OF_LIGHT
from .errors import DegenerateStepError, EmptyInputError, IndexOverflowError
from .geometry import GroundPoint, RotatedFrame, rotated_frame
from .patches import AlignedPatch


@dataclass(frozen=True)
class SpectrumGrid:
    """Regular global wavenumber grid with zero-filled unmeasured bins."""

    values: np.ndarray
    wavenumber_step: tuple[float, float]
    origin_index: tuple[int, int]

    def __post_init__(self):
        if any(n % 2 for n in self.values.shape):
            raise ValueError("grid dimensions must be even")
        if min(self.wavenumber_step) <= 0:
            raise ValueError("wavenumber steps must be positive")


@dataclass(frozen=True)
class ReconstructedImage:
    """Real magnitude field, either in the ground frame or a patch frame.

    ``origin`` is the ground position of the image center pixel block;
    pixel (a, b) sits at offset ((a - nx//2) * dr1, (b - ny//2) * dr2)
    in the image frame. ``frame`` rotates that offset to the ground
    frame for patch-frame images; ground-frame images leave it None.
    """

    magnitude: np.ndarray
    pixel_spacing: tuple[float, float]
    origin: GroundPoint
    contributing_patches: tuple[str, ...] = ()
    height: np.ndarray | None = None
    frame: RotatedFrame | None = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.magnitude)) or np.any(self.magnitude < 0):
            raise ValueError("magnitude must be finite and nonnegative")
        if min(self.pixel_spacing) <= 0:
            raise ValueError("pixel spacing must be positive")

    def pixel_offsets(self) -> tuple[np.ndarray, np.ndarray]:
        nx, ny = self.magnitude.shape
        a = (np.arange(nx) - nx // 2) * self.pixel_spacing[0]
        b = (np.arange(ny) - ny // 2) * self.pixel_spacing[1]
        return a, b

    def ground_position(self, a, b) -> np.ndarray:
        """Ground (x, y) of fractional pixel indices (a, b)."""
        nx, ny = self.magnitude.shape
        off = np.stack(
            [
                (np.asarray(a, dtype=float) - nx // 2) * self.pixel_spacing[0],
                (np.asarray(b, dtype=float) - ny // 2) * self.pixel_spacing[1],
            ],
            axis=-1,
        )
        if self.frame is not None:
            off = self.frame.to_ground(off)
        return self.origin.horizontal() + off


@dataclass(frozen=True)
class ReflectorEstimate:
    """A located significant reflector from range-line intersection."""

    position: GroundPoint
    score: float
    supporting_lines: int

    def __post_init__(self):
        if self.supporting_lines < 2:
            raise ValueError("an estimate needs at least two supporting lines")
        if self.score < 0:
            raise ValueError("score must be nonnegative")


def bin_spectrum(
    patches: list[AlignedPatch], S: int, pixel_extent: float
) -> SpectrumGrid:
    """Average every aligned sample into a 2S x 2S zero-filled grid.

    Samples bin by nearest-integer index of coordinate / step; colliding
    samples are averaged. A sample whose index leaves the grid raises.
    """
    if not patches:
        raise EmptyInputError("at least one aligned patch is required")
    dk = 2.0 * np.pi / pixel_extent
    n = 2 * S
    acc = np.zeros((n, n), dtype=complex)
    counts = np.zeros((n, n), dtype=np.int64)
    for patch in patches:
        coords = patch.wavenumber_coords.reshape(-1, 2)
        idx = np.rint(coords / dk).astype(np.int64)
        bad = (idx < -S) | (idx > S - 1)
        if np.any(bad):
            where = np.nonzero(bad.any(axis=1))[0][0]
            raise IndexOverflowError(
                f"sample {where} of patch {patch.tx_id}->{patch.rx_id} at "
                f"wavenumber {coords[where]} falls outside the {n}x{n} grid"
            )
        gi = idx[:, 0] + S
        gj = idx[:, 1] + S
        np.add.at(acc, (gi, gj), patch.samples.reshape(-1))
        np.add.at(counts, (gi, gj), 1)
    filled = counts > 0
    acc[filled] = acc[filled] / counts[filled]
    return SpectrumGrid(values=acc, wavenumber_step=(dk, dk), origin_index=(S, S))


def procedure1_invert(
    patches: list[AlignedPatch],
    S: int,
    pixel_extent: float,
    method: str = "idft",
    lstsq_rcond: float = 1e-10,
) -> ReconstructedImage:
    """Global zero-filled spectrum inversion.

    Bins all samples into one 2S x 2S wavenumber grid (unmeasured bins
    stay zero) and inverts by 2-D discrete Fourier transform, taking
    magnitudes. ``method="lstsq"`` instead solves a regularized least
    squares system from the irregular samples directly (small grids
    only). All patches must share one region center.
    """
    if not patches:
        raise EmptyInputError("at least one aligned patch is required")
    center = patches[0].region_center
    for p in patches[1:]:
        if not np.allclose(p.region_center.as_array(), center.as_array()):
            raise ValueError("procedure 1 requires a common region center")
    dx = pixel_extent / (2 * S)
    ids = tuple(f"{p.tx_id}->{p.rx_id}" for p in patches)
    if method == "idft":
        grid = bin_spectrum(patches, S, pixel_extent)
        image = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(grid.values)))
        magnitude = np.abs(image)
    elif method == "lstsq":
        n = 2 * S
        if n > 64:
            raise ValueError("lstsq inversion is limited to grids of 64x64 pixels")
        coords = np.concatenate(
            [p.wavenumber_coords.reshape(-1, 2) for p in patches], axis=0
        )
        values = np.concatenate([p.samples.reshape(-1) for p in patches])
        ax = (np.arange(n) - S) * dx
        px, py = np.meshgrid(ax, ax, indexing="ij")
        pts = np.stack([px.ravel(), py.ravel()], axis=1)
        A = np.exp(1j * coords @ pts.T)
        sol, *_ = np.linalg.lstsq(A, values, rcond=lstsq_rcond)
        magnitude = np.abs(sol.reshape(n, n))
    else:
        raise ValueError(f"unknown procedure-1 method {method!r}")
    return ReconstructedImage(
        magnitude=magnitude,
        pixel_spacing=(dx, dx),
        origin=center,
        contributing_patches=ids,
    )


def procedure2_steps(
    wf, theta: float, match_sample_spacing: bool = True
) -> tuple[float, float]:
    """Grid steps (cycles/m) for the per-patch regular spectrum grid.

    The base rule is dk1 = (df/c) cos(theta/2), dk2 = (df/c) sin(theta/2).
    With ``match_sample_spacing`` both steps carry the bistatic factor
    2 cos(theta/2) relationship, i.e. an extra factor 2, which makes the
    radial step equal the measured subcarrier spacing in wavenumber and
    lets the grid span the full measured band.
    """
    factor = 2.0 if match_sample_spacing else 1.0
    dk1c = factor * wf.subcarrier_spacing / SPEED_OF_LIGHT * math.cos(theta / 2.0)
    dk2c = factor * wf.subcarrier_spacing / SPEED_OF_LIGHT * math.sin(theta / 2.0)
    if dk2c < 1e-15 or dk1c < 1e-15:
        raise DegenerateStepError(
            f"grid step underflow at angle {theta}: dk1={dk1c}, dk2={dk2c}"
        )
    return dk1c, dk2c


def procedure2_per_patch(
    patch: AlignedPatch,
    beam_angle: float | None = None,
    match_sample_spacing: bool = True,
    step_mode: str = "data",
    pad_factor: int = 1,
) -> ReconstructedImage:
    """Per-patch regular-grid IDFT image in the patch (range, cross) frame.

    The patch spectrum is rotated to its look direction, shifted so the
    sample cloud's minimum corner sits at the grid origin (a pure image
    phase ramp), interpolated bilinearly onto the (dk1, dk2) grid, and
    inverted with an M x N_a IDFT. With ``step_mode`` "data" the grid
    steps are read off the measured sample cloud itself (span / count in
    each rotated axis), so the grid matches the measured lattice for any
    geometry; "angle" applies the angle-dependent step rule instead, in
    which ``beam_angle`` overrides the default angle (the patch's
    bistatic angle). ``pad_factor`` zero-pads the regular grid before the
    IDFT for sinc-interpolated sub-cell image pixels (resolution is
    unchanged).
    """
    theta = patch.bistatic_angle if beam_angle is None else beam_angle
    wf = patch.waveform
    M = wf.subcarrier_count
    n_ant = patch.samples.shape[0]
    if n_ant < 2:
        raise ValueError("procedure 2 needs at least two antennas")
    if step_mode not in ("data", "angle"):
        raise ValueError(f"unknown step_mode: {step_mode!r}")
    frame = rotated_frame(patch.direction)

    coords = frame.to_patch(patch.wavenumber_coords.reshape(-1, 2))
    corner = coords.min(axis=0)
    rel = coords - corner[None, :]

    if step_mode == "angle":
        dk1c, dk2c = procedure2_steps(wf, theta, match_sample_spacing)
    else:
        span = rel.max(axis=0)
        dk1c = span[0] / (M - 1) / (2.0 * np.pi)
        dk2c = span[1] / (n_ant - 1) / (2.0 * np.pi)
        if dk1c < 1e-15 or dk2c < 1e-15:
            raise DegenerateStepError(
                f"measured sample cloud is degenerate: spans {span}"
            )
    dr1 = 1.0 / (M * dk1c)
    dr2 = 1.0 / (n_ant * dk2c)

    dk1 = 2.0 * np.pi * dk1c
    dk2 = 2.0 * np.pi * dk2c
    gi = np.arange(M) * dk1
    gj = np.arange(n_ant) * dk2
    gx, gy = np.meshgrid(gi, gj, indexing="ij")
    values = patch.samples.reshape(-1)
    grid = griddata(rel, values, (gx, gy), method="linear", fill_value=0.0)

    if pad_factor < 1:
        raise ValueError("pad_factor must be >= 1")
    shape = (pad_factor * M, pad_factor * n_ant)
    image = np.fft.fftshift(np.fft.fft2(grid, s=shape))
    return ReconstructedImage(
        magnitude=np.abs(image),
        pixel_spacing=(dr1 / pad_factor, dr2 / pad_factor),
        origin=patch.region_center,
        contributing_patches=(f"{patch.tx_id}->{patch.rx_id}",),
        frame=frame,
    )


def fuse_images(
    images: list[ReconstructedImage],
    extent: tuple[float, float],
    spacing: float,
    center: GroundPoint = GroundPoint(0.0, 0.0),
    method: str = "mean",
) -> ReconstructedImage:
    """Resample per-patch images onto a common ground grid and combine.

    Fusion is incoherent: each image is normalized to unit peak, sampled
    bilinearly at the target pixel centers, and combined by ``method``:
    "mean" averages the normalized magnitudes, "product" multiplies them.
    The product form suppresses the single-patch cross-range ridge (each
    station's ambiguity is vetoed wherever another station is dark), so
    the fused response localizes in both axes; the mean form preserves
    relative brightness but keeps each ridge at half scale. The result is
    renormalized to unit peak. A warning (not an error) is issued when an
    input image does not overlap the target grid.
    """
    if not images:
        raise EmptyInputError("at least one image is required")
    if method not in ("mean", "product"):
        raise ValueError(f"unknown fusion method: {method!r}")
    nx = math.ceil(extent[0] / spacing)
    ny = math.ceil(extent[1] / spacing)
    xs = (np.arange(nx) - nx // 2) * spacing + center.x
    ys = (np.arange(ny) - ny // 2) * spacing + center.y
    px, py = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([px.ravel(), py.ravel()], axis=1)

    fused = np.zeros(nx * ny) if method == "mean" else np.ones(nx * ny)
    ids: list[str] = []
    for img in images:
        peak = img.magnitude.max()
        norm = img.magnitude / peak if peak > 0 else img.magnitude
        off = pts - img.origin.horizontal()[None, :]
        local = img.frame.to_patch(off) if img.frame is not None else off
        mx, my = img.magnitude.shape
        fi = local[:, 0] / img.pixel_spacing[0] + mx // 2
        fj = local[:, 1] / img.pixel_spacing[1] + my // 2
        sampled = map_coordinates(
            norm, np.stack([fi, fj]), order=1, mode="constant", cval=0.0
        )
        if not np.any(sampled > 0):
            warnings.warn(
                f"image {img.contributing_patches} does not overlap the target grid",
                stacklevel=2,
            )
        if method == "mean":
            fused += sampled
        else:
            fused *= sampled
        ids.extend(img.contributing_patches)
    if method == "mean":
        fused /= len(images)
    peak = fused.max()
    if peak > 0:
        fused /= peak
    return ReconstructedImage(
        magnitude=fused.reshape(nx, ny),
        pixel_spacing=(spacing, spacing),
        origin=center,
        contributing_patches=tuple(ids),
    )


@dataclass(frozen=True)
class RangeProfile:
    """Incoherent 1-D range response of one patch.

    ``ranges[n]`` is the look-direction offset from the region center of
    bin n; peaks are (range, magnitude) pairs sorted by magnitude.
    """

    ranges: np.ndarray
    profile: np.ndarray
    peaks: tuple[tuple[float, float], ...]
    direction: np.ndarray
    center: np.ndarray
    patch_id: str


def range_profiles(
    patch: AlignedPatch, threshold_db: float = 6.0
) -> RangeProfile:
    """Range response via a 1-D IDFT across subcarriers.

    Rows are transformed per antenna and averaged incoherently. Bin
    spacing is c / (W * b) with b the patch's horizontal bistatic scale
    (c / (2W) in the monostatic limit). Peaks are local maxima above the
    median profile level plus ``threshold_db`` (amplitude dB), refined
    to sub-bin accuracy by parabolic interpolation.
    """
    wf = patch.waveform
    M = wf.subcarrier_count
    spectra = np.fft.fft(patch.samples, axis=1)
    profile = np.fft.fftshift(np.abs(spectra).mean(axis=0))
    freq = np.fft.fftshift(np.fft.fftfreq(M))
    scale = SPEED_OF_LIGHT / (wf.subcarrier_spacing * patch.bistatic_scale)
    ranges = freq * scale

    threshold = np.median(profile) * 10.0 ** (threshold_db / 20.0)
    peaks = []
    for n in range(M):
        left = profile[n - 1] if n > 0 else -np.inf
        right = profile[n + 1] if n < M - 1 else -np.inf
        v = profile[n]
        if v > threshold and v >= left and v >= right:
            # parabolic sub-bin refinement
            shift = 0.0
            if n > 0 and n < M - 1:
                denom = profile[n - 1] - 2 * v + profile[n + 1]
                if denom < 0:
                    shift = 0.5 * (profile[n - 1] - profile[n + 1]) / denom
            r = (freq[n] + shift / M) * scale
            peaks.append((float(r), float(v)))
    peaks.sort(key=lambda p: -p[1])
    return RangeProfile(
        ranges=ranges,
        profile=profile,
        peaks=tuple(peaks),
        direction=patch.direction.copy(),
        center=patch.region_center.horizontal(),
        patch_id=f"{patch.tx_id}->{patch.rx_id}",
    )


@dataclass
class IntersectDiagnostics:
    skipped_parallel: int = 0
    intersections: int = 0
    clusters: int = 0


def intersect_lines(
    profiles: list[RangeProfile],
    cluster_radius: float,
    min_support: int = 2,
    min_crossing_sine: float = 1e-3,
    max_offset: float | None = None,
    pair_max_separation: float | None = None,
) -> tuple[list[ReflectorEstimate], IntersectDiagnostics]:
    """Locate reflectors by intersecting equal-range lines across patches.

    Each peak defines the line {q : (q - center) . direction = range}.
    Pairwise intersections between patches (skipping near-parallel
    direction pairs) are accumulated by weight onto a grid of cells of
    side ``cluster_radius``; cells that are local weight maxima over
    their 3x3 neighborhood seed clusters, strongest first, suppressing
    later seeds within two cluster radii. A cluster keeps the points of
    its seed's neighborhood and becomes an estimate when at least
    ``min_support`` distinct patch pairs support it, positioned at the
    weighted mean of those points and scored by summed peak magnitudes.
    ``max_offset`` discards intersections farther than that from either
    patch center; ``pair_max_separation`` skips patch pairs whose
    centers are farther apart than that.
    """
    diag = IntersectDiagnostics()
    if len(profiles) < 2:
        return [], diag
    points = []
    weights = []
    pair_ids = []
    for i in range(len(profiles)):
        pi = profiles[i]
        if not pi.peaks:
            continue
        dix, diy = float(pi.direction[0]), float(pi.direction[1])
        cix, ciy = float(pi.center[0]), float(pi.center[1])
        for j in range(i + 1, len(profiles)):
            pj = profiles[j]
            if not pj.peaks:
                continue
            djx, djy = float(pj.direction[0]), float(pj.direction[1])
            cjx, cjy = float(pj.center[0]), float(pj.center[1])
            if pair_max_separation is not None:
                if math.hypot(cix - cjx, ciy - cjy) > pair_max_separation:
                    continue
            cross = dix * djy - diy * djx
            if abs(cross) < min_crossing_sine:
                diag.skipped_parallel += 1
                continue
            for ri, mi in pi.peaks:
                bi = ri + dix * cix + diy * ciy
                for rj, mj in pj.peaks:
                    bj = rj + djx * cjx + djy * cjy
                    qx = (bi * djy - bj * diy) / cross
                    qy = (dix * bj - djx * bi) / cross
                    if max_offset is not None:
                        if (
                            math.hypot(qx - cix, qy - ciy) > max_offset
                            or math.hypot(qx - cjx, qy - cjy) > max_offset
                        ):
                            continue
                    points.append((qx, qy))
                    weights.append(mi + mj)
                    pair_ids.append((i, j))
    diag.intersections = len(points)
    if not points:
        return [], diag
    pts = np.array(points)
    w = np.array(weights)

    cells = np.floor(pts / cluster_radius).astype(np.int64)
    cell_points: dict[tuple[int, int], list[int]] = {}
    cell_weight: dict[tuple[int, int], float] = {}
    for idx, (cx, cy) in enumerate(map(tuple, cells)):
        cell_points.setdefault((cx, cy), []).append(idx)
        cell_weight[(cx, cy)] = cell_weight.get((cx, cy), 0.0) + float(w[idx])

    def neighborhood(cell):
        cx, cy = cell
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                yield (cx + dx, cy + dy)

    seeds = []
    for cell, weight in cell_weight.items():
        if all(
            weight >= cell_weight.get(nb, 0.0) for nb in neighborhood(cell)
        ):
            hood = sum(cell_weight.get(nb, 0.0) for nb in neighborhood(cell))
            seeds.append((hood, cell))
    seeds.sort(key=lambda s: (-s[0], s[1]))
    diag.clusters = len(seeds)

    estimates = []
    accepted: list[np.ndarray] = []
    for _, cell in seeds:
        members = [m for nb in neighborhood(cell) for m in cell_points.get(nb, [])]
        pairs = {pair_ids[m] for m in members}
        if len(pairs) < min_support:
            continue
        mw = w[members]
        pos = (pts[members] * mw[:, None]).sum(axis=0) / mw.sum()
        if any(
            np.linalg.norm(pos - prev) < 2.0 * cluster_radius for prev in accepted
        ):
            continue
        accepted.append(pos)
        patches_involved = {p for pair in pairs for p in pair}
        estimates.append(
            ReflectorEstimate(
                position=GroundPoint(float(pos[0]), float(pos[1])),
                score=float(mw.sum()),
                supporting_lines=len(patches_involved),
            )
        )
    estimates.sort(key=lambda e: -e.score)
    return estimates, diag


def estimate_height(
    plane_images: np.ndarray,
    z_step: float,
    mask_threshold: float = 0.1,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel surface height from vertical-wavenumber plane images.

    ``plane_images[i]`` is the complex image reconstructed at vertical
    wavenumber i * z_step (plane 0 is the ground plane). For each pixel
    bright enough in the ground image, the ratio sequence against the
    ground plane is a complex exponential whose frequency is the surface
    height; the height is read off the peak DFT bin. Heights wrap at the
    unambiguous limit 2*pi / z_step; quantization is one DFT bin,
    2*pi / (count * z_step). Returns (height, valid_mask); masked
    pixels hold NaN.
    """
    planes = np.asarray(plane_images)
    if planes.ndim != 3 or planes.shape[0] < 4:
        raise ValueError("need at least 4 uniformly spaced planes")
    if z_step <= 0:
        raise ValueError("z_step must be positive")
    nz = planes.shape[0]
    ground = planes[0]
    peak = np.abs(ground).max()
    valid = np.abs(ground) >= mask_threshold * peak
    height = np.full(ground.shape, np.nan)
    if not np.any(valid):
        return height, valid
    ratios = planes[:, valid] / ground[valid][None, :]
    spectra = np.fft.fft(ratios, axis=0)
    n = np.argmax(np.abs(spectra), axis=0)
    freqs = np.fft.fftfreq(nz)
    h = np.mod(-freqs[n], 1.0) * (2.0 * np.pi / z_step)
    height[valid] = h
    return height, valid


def image_peak(image: ReconstructedImage) -> np.ndarray:
    """Ground (x, y) of the image magnitude peak, parabolically refined."""
    mag = image.magnitude
    a, b = np.unravel_index(np.argmax(mag), mag.shape)
    fa, fb = float(a), float(b)
    if 0 < a < mag.shape[0] - 1:
        denom = mag[a - 1, b] - 2 * mag[a, b] + mag[a + 1, b]
        if denom < 0:
            fa += 0.5 * (mag[a - 1, b] - mag[a + 1, b]) / denom
    if 0 < b < mag.shape[1] - 1:
        denom = mag[a, b - 1] - 2 * mag[a, b] + mag[a, b + 1]
        if denom < 0:
            fb += 0.5 * (mag[a, b - 1] - mag[a, b + 1]) / denom
    return image.ground_position(fa, fb)
