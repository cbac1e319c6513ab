"""Volumetric reconstruction from wavenumber-space samples.

Each (antenna, subcarrier) measurement is a sample of the 3-D source
spectrum at one wavenumber vector. Collecting K such samples gives a
dense K x M^3 linear map onto a voxel grid, inverted with a truncated
SVD pseudo-inverse. This is a desk-scale verification path, so the grid
is capped at M_side <= 16 and everything is dense.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import SPEED_OF_LIGHT
from .errors import EmptyInputError


@dataclass(frozen=True)
class WavenumberSample:
    """One spectrum-domain sample: a k-vector (rad/m) and a complex value."""

    k_vector: np.ndarray
    value: complex = 0.0 + 0.0j

    def __post_init__(self):
        k = np.asarray(self.k_vector, dtype=float)
        if k.shape != (3,) or not np.all(np.isfinite(k)):
            raise ValueError("k_vector must be 3 finite components")
        object.__setattr__(self, "k_vector", k)


@dataclass(frozen=True)
class VoxelGrid:
    """Cubic voxel grid of side M_side, spacing delta, centered on the origin.

    Voxel (l, m, n) with 0-based indices sits at ((l - offset) * spacing, ...)
    where offset = M_side // 2, realizing the symmetric index convention.
    """

    M_side: int
    spacing: float
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.M_side < 1:
            raise ValueError("M_side must be >= 1")
        if self.M_side > 16:
            raise ValueError("M_side capped at 16: the sensing map is dense K x M^3")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if self.values is not None and self.values.shape != self.shape:
            raise ValueError(f"values shape {self.values.shape} != {self.shape}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.M_side, self.M_side, self.M_side)

    @property
    def offset(self) -> int:
        return self.M_side // 2

    def voxel_positions(self) -> np.ndarray:
        """Positions of all voxels, shape (M_side^3, 3), C index order."""
        idx = np.arange(self.M_side) - self.offset
        gx, gy, gz = np.meshgrid(idx, idx, idx, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1) * self.spacing


def build_sensing_tensor(
    samples: list[WavenumberSample], grid: VoxelGrid, amplitude: complex = 1.0
) -> np.ndarray:
    """Dense K x M^3 forward map: row s is A * exp(-j k_s . r_voxel).

    Applying the map to a flattened voxel field reproduces the forward
    sum over voxels for every sample.
    """
    if not samples:
        raise EmptyInputError("at least one wavenumber sample is required")
    kvecs = np.stack([s.k_vector for s in samples])  # (K, 3)
    pos = grid.voxel_positions()  # (M^3, 3)
    return amplitude * np.exp(-1j * kvecs @ pos.T)


def invert_sensing_tensor(
    tensor: np.ndarray,
    measurements: np.ndarray,
    grid: VoxelGrid,
    svd_tolerance: float = 1e-10,
) -> tuple[VoxelGrid, int]:
    """Minimum-norm voxel recovery through a truncated-SVD pseudo-inverse.

    Singular values below svd_tolerance * sigma_max are discarded. On a
    full-column-rank noise-free instance the recovery is exact to
    numerical precision; rank-deficient instances get the minimum-norm
    solution plus a diagnostic warning. Returns (grid copy with values,
    effective rank).
    """
    measurements = np.asarray(measurements)
    n_vox = grid.M_side ** 3
    if tensor.shape != (measurements.shape[0], n_vox):
        raise ValueError(
            f"tensor shape {tensor.shape} inconsistent with "
            f"{measurements.shape[0]} measurements and {n_vox} voxels"
        )
    u, s, vh = np.linalg.svd(tensor, full_matrices=False)
    keep = s > svd_tolerance * s[0] if s.size else np.zeros(0, dtype=bool)
    rank = int(keep.sum())
    if rank < n_vox:
        warnings.warn(
            f"sensing map rank {rank} < voxel count {n_vox}: "
            "minimum-norm solution returned",
            stacklevel=2,
        )
    inv = (vh[:rank].conj().T / s[:rank]) @ u[:, :rank].conj().T
    rho = inv @ measurements
    out = VoxelGrid(
        M_side=grid.M_side, spacing=grid.spacing, values=rho.reshape(grid.shape)
    )
    return out, rank


def pseudo_inverse(tensor: np.ndarray, svd_tolerance: float = 1e-10) -> np.ndarray:
    """Truncated-SVD Moore-Penrose pseudo-inverse of the sensing map."""
    u, s, vh = np.linalg.svd(tensor, full_matrices=False)
    keep = s > svd_tolerance * s[0] if s.size else np.zeros(0, dtype=bool)
    r = int(keep.sum())
    return (vh[:r].conj().T / s[:r]) @ u[:, :r].conj().T


def samples_from_network(
    antenna_positions: np.ndarray,
    frequencies: np.ndarray,
    region_center: np.ndarray,
) -> list[WavenumberSample]:
    """Wavenumber sample geometry of an antenna set across subcarriers.

    Each (antenna, frequency) pair contributes the k-vector
    (2 pi f / c) * u, with u the unit vector from the region center to
    the antenna. A single linear array therefore samples one plane
    through the wavenumber origin.
    """
    antenna_positions = np.atleast_2d(np.asarray(antenna_positions, dtype=float))
    region_center = np.asarray(region_center, dtype=float)
    rel = antenna_positions - region_center[None, :]
    norms = np.linalg.norm(rel, axis=1)
    if np.any(norms < 1e-12):
        raise ValueError("antenna coincides with the region center")
    units = rel / norms[:, None]
    out = []
    for u in units:
        for f in np.asarray(frequencies, dtype=float):
            out.append(WavenumberSample(k_vector=2 * np.pi * f / SPEED_OF_LIGHT * u))
    return out


def voxel_grid_to_csv(grid: VoxelGrid, path) -> None:
    """One row per voxel: l, m, n, re, im (0-based indices)."""
    if grid.values is None:
        raise ValueError("grid has no values to export")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["l", "m", "n", "re", "im"])
        for l in range(grid.M_side):
            for m in range(grid.M_side):
                for n in range(grid.M_side):
                    v = grid.values[l, m, n]
                    writer.writerow([l, m, n, repr(float(v.real)), repr(float(v.imag))])


def voxel_grid_slices_to_pgm(grid: VoxelGrid, directory, stem: str = "slice") -> list:
    """Per-z-slice magnitude images, one PGM per n index; returns the paths."""
    from pathlib import Path

    from .imageio import write_pgm

    if grid.values is None:
        raise ValueError("grid has no values to export")
    directory = Path(directory)
    paths = []
    for n in range(grid.M_side):
        p = directory / f"{stem}_{n:03d}.pgm"
        write_pgm(np.abs(grid.values[:, :, n]), p)
        paths.append(p)
    return paths
