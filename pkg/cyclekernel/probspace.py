"""
Probability spaces the rest of the package works on.

FiniteSpace  - labeled atoms with masses
GridDensity  - a density tabulated at the cell centers of a box in R^n (n <= 3)
SampleSet    - i.i.d. points drawn from either of the above with a known seed

All three are immutable; sampling takes its seed explicitly.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

from .errors import (DuplicateLabel, EmptySpace, NegativeDensity, NegativeMass,
                     SumOutOfTolerance, UnsupportedDim, ZeroTotalMass)

MASS_SUM_TOL = 1e-6 # input masses may be off by this much before we refuse to renormalize
MAX_GRID_DIM = 3
SPLINE_ORDER = 3


def _readonly(array):
    array = np.array(array, dtype=np.float64)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class FiniteSpace:
    labels: tuple
    masses: np.ndarray

    def __len__(self):
        return len(self.labels)

    @cached_property
    def _index(self):
        return {label: i for i, label in enumerate(self.labels)}

    def index_of(self, label):
        return self._index[label]

    def has_label(self, label):
        return label in self._index

    def mass(self, label):
        return float(self.masses[self._index[label]])


@dataclass(frozen=True, eq=False)
class GridDensity:
    box: tuple          # ((lo, hi), ...) per axis
    resolution: tuple   # cells per axis
    values: np.ndarray  # shape == resolution, row-major, axis 0 slowest
    raw_mass: float = 1.0 # Riemann sum of the integrand before renormalization

    @property
    def dim(self):
        return len(self.resolution)

    @property
    def lower(self):
        return np.array([lo for lo, _ in self.box])

    @property
    def upper(self):
        return np.array([hi for _, hi in self.box])

    @property
    def widths(self):
        return (self.upper - self.lower) / np.array(self.resolution)

    @property
    def cell_volume(self):
        return float(np.prod(self.widths))

    def axes(self):
        """Cell-center coordinates along each axis."""
        return [lo + (np.arange(n) + 0.5) * w
                for (lo, _), n, w in zip(self.box, self.resolution, self.widths)]

    def cell_centers(self):
        """All cell centers as an (N, dim) array in row-major cell order."""
        mesh = np.meshgrid(*self.axes(), indexing='ij')
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def total_mass(self):
        return float(self.values.sum() * self.cell_volume)

    def same_grid(self, other, atol=1e-12):
        return (self.resolution == other.resolution
                and np.allclose(self.lower, other.lower, rtol=0, atol=atol)
                and np.allclose(self.upper, other.upper, rtol=0, atol=atol))

    def contains(self, points):
        points = np.atleast_2d(points)
        return np.all((points >= self.lower) & (points <= self.upper), axis=1)

    @cached_property
    def _spline_coeffs(self):
        return ndimage.spline_filter(self.values, order=SPLINE_ORDER, mode='nearest')

    def density_at(self, points):
        """
        Evaluates the tabulated density at arbitrary points with a cubic spline
        through the cell centers. Zero outside the box; never negative.
        """
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        assert points.shape[1] == self.dim, f"expected {self.dim}-d points, got {points.shape[1]}"
        # fractional cell index; cell i has its center at index i
        coords = (points - self.lower) / self.widths - 0.5
        out = ndimage.map_coordinates(self._spline_coeffs, coords.T, order=SPLINE_ORDER,
                                      mode='nearest', prefilter=False)
        out = np.clip(out, 0.0, None)
        out[~self.contains(points)] = 0.0
        return out


@dataclass(frozen=True, eq=False)
class SampleSet:
    dim: int
    points: np.ndarray          # (n, dim)
    seed: int
    labels: tuple = field(default=None) # drawn atom labels for finite spaces

    def __len__(self):
        return len(self.points)


# -----------------------------------------------------------------------------
# construction

def make_finite(labels, masses):
    labels = tuple(labels)
    masses = np.asarray(masses, dtype=np.float64)
    if len(labels) != len(masses):
        raise ValueError(f"{len(labels)} labels but {len(masses)} masses")
    if len(set(labels)) != len(labels):
        dups = sorted({str(l) for l in labels if labels.count(l) > 1})
        raise DuplicateLabel(f"duplicate labels: {dups}")
    if np.any(masses < 0):
        raise NegativeMass(f"negative mass in {masses.tolist()}")
    total = masses.sum()
    if abs(total - 1.0) > MASS_SUM_TOL:
        raise SumOutOfTolerance(f"masses sum to {total}, expected 1 within {MASS_SUM_TOL}")
    return FiniteSpace(labels=labels, masses=_readonly(masses / total))


def _normalize_resolution(resolution, dim):
    if isinstance(resolution, (int, np.integer)):
        return (int(resolution),) * dim
    resolution = tuple(int(r) for r in resolution)
    if len(resolution) != dim:
        raise ValueError(f"resolution {resolution} does not match box of dimension {dim}")
    return resolution


def _normalize_box(box):
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    for lo, hi in box:
        if not lo < hi:
            raise ValueError(f"degenerate box axis [{lo}, {hi}]")
    return box


def grid_from_values(box, resolution, values, raw_mass=None):
    """Builds a GridDensity from tabulated values and renormalizes it."""
    box = _normalize_box(box)
    if not 1 <= len(box) <= MAX_GRID_DIM:
        raise UnsupportedDim(f"grids support dimensions 1..{MAX_GRID_DIM}, got {len(box)}")
    resolution = _normalize_resolution(resolution, len(box))
    if min(resolution) < 2:
        raise ValueError(f"resolution must be >= 2 per axis, got {resolution}")
    values = np.asarray(values, dtype=np.float64).reshape(resolution)
    if not np.all(np.isfinite(values)):
        raise ValueError("density values must be finite")
    if np.any(values < 0):
        raise NegativeDensity(f"density is negative in {int((values < 0).sum())} cells")
    cell_volume = float(np.prod([(hi - lo) / n for (lo, hi), n in zip(box, resolution)]))
    mass = float(values.sum() * cell_volume)
    if mass <= 0:
        raise ZeroTotalMass("density integrates to zero over the box")
    return GridDensity(box=box, resolution=resolution, values=_readonly(values / mass),
                       raw_mass=mass if raw_mass is None else float(raw_mass))


def make_grid_density(box, resolution, density_fn):
    """
    Tabulates density_fn at the cell centers of box and renormalizes so the
    Riemann sum is 1. density_fn takes an (N, dim) array and returns N values.
    """
    box = _normalize_box(box)
    if not 1 <= len(box) <= MAX_GRID_DIM:
        raise UnsupportedDim(f"grids support dimensions 1..{MAX_GRID_DIM}, got {len(box)}")
    resolution = _normalize_resolution(resolution, len(box))
    empty = GridDensity(box=box, resolution=resolution, values=np.zeros(resolution))
    values = np.asarray(density_fn(empty.cell_centers()), dtype=np.float64)
    return grid_from_values(box, resolution, values)


def normal_pdf(points, mean, std):
    """Axis-aligned Gaussian density evaluated at (N, dim) points."""
    points = np.atleast_2d(points)
    mean = np.broadcast_to(np.asarray(mean, dtype=np.float64), (points.shape[1],))
    std = np.broadcast_to(np.asarray(std, dtype=np.float64), (points.shape[1],))
    z = (points - mean) / std
    return np.exp(-0.5 * np.sum(z ** 2, axis=1)) / np.prod(std * math.sqrt(2 * math.pi))


def gaussian_density(mean, std, box, resolution):
    return make_grid_density(box, resolution, lambda x: normal_pdf(x, mean, std))


def gaussian_standard(dim, box_radius, resolution):
    """gamma_n truncated to [-box_radius, box_radius]^dim and renormalized."""
    if dim not in (1, 2, 3):
        raise UnsupportedDim(f"standard Gaussian grids support dim 1..3, got {dim}")
    if box_radius <= 0:
        raise ValueError(f"box_radius must be positive, got {box_radius}")
    box = [(-box_radius, box_radius)] * dim
    return gaussian_density(np.zeros(dim), np.ones(dim), box, resolution)


def bimodal_density(centers=(-2.0, 2.0), std=0.3, box=((-5.0, 5.0),), resolution=1000):
    """Equal-weight 1D Gaussian mixture."""
    def density(x):
        return sum(normal_pdf(x, c, std) for c in centers) / len(centers)
    return make_grid_density(box, resolution, density)


def uniform_interval(c=1.0, resolution=512):
    """Lebesgue measure on [0, c], normalized."""
    return make_grid_density([(0.0, c)], resolution, lambda x: np.ones(len(x)))


def histogram_masses(samples, box, resolution):
    """
    Fraction of a SampleSet in each grid cell, not renormalized, and the
    fraction outside the box. Non-finite points count as outside.
    """
    box = _normalize_box(box)
    resolution = _normalize_resolution(resolution, len(box))
    assert samples.dim == len(box), f"samples are {samples.dim}-d, box is {len(box)}-d"
    points = samples.points[np.all(np.isfinite(samples.points), axis=1)]
    counts, _ = np.histogramdd(points, bins=resolution, range=box)
    n = len(samples)
    return counts / n, float(n - counts.sum()) / n


def histogram_density(samples, box, resolution):
    """
    Histograms a SampleSet on a grid. Returns the normalized GridDensity and
    the fraction of samples that fell outside the box.
    """
    masses, outside = histogram_masses(samples, box, resolution)
    if outside >= 1.0:
        raise ZeroTotalMass("no samples fall inside the histogram box")
    return grid_from_values(box, resolution, masses, raw_mass=1.0 - outside), outside


# -----------------------------------------------------------------------------
# sampling

def sample(space, n, seed):
    """
    Draws n points. Finite spaces: categorical by mass, points are atom indices.
    Grids: cell chosen by mass, then a uniform jitter inside the cell.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    if isinstance(space, FiniteSpace):
        if len(space) == 0:
            raise EmptySpace("cannot sample from a space without atoms")
        idx = rng.choice(len(space), size=n, p=space.masses)
        return SampleSet(dim=1, points=idx[:, None].astype(np.float64), seed=seed,
                         labels=tuple(space.labels[i] for i in idx))
    if isinstance(space, GridDensity):
        probs = space.values.ravel() * space.cell_volume
        if probs.sum() <= 0:
            raise EmptySpace("grid density carries no mass")
        cells = rng.choice(probs.size, size=n, p=probs / probs.sum())
        idx = np.stack(np.unravel_index(cells, space.resolution), axis=-1)
        jitter = rng.uniform(size=(n, space.dim))
        points = space.lower + (idx + jitter) * space.widths
        return SampleSet(dim=space.dim, points=points, seed=seed)
    raise TypeError(f"cannot sample from {type(space).__name__}")


# -----------------------------------------------------------------------------
# JSON

def space_to_dict(space):
    if isinstance(space, FiniteSpace):
        return {"type": "finite", "labels": list(space.labels), "masses": space.masses.tolist()}
    if isinstance(space, GridDensity):
        return {"type": "grid", "box": [list(b) for b in space.box],
                "resolution": list(space.resolution), "values": space.values.ravel().tolist()}
    raise TypeError(f"cannot serialize {type(space).__name__}")


def space_from_dict(d):
    """Inverse of space_to_dict, plus the named constructors used by the configs."""
    kind = d.get("type")
    if kind == "finite":
        return make_finite(d["labels"], d["masses"])
    if kind == "grid":
        return grid_from_values(d["box"], d["resolution"], d["values"])
    if kind == "gaussian":
        dim = int(d.get("dim", 1))
        radius = float(d.get("radius", 6.0))
        mean = d.get("mean", [0.0] * dim)
        std = d.get("std", [1.0] * dim)
        box = d.get("box", [[-radius, radius]] * dim)
        return gaussian_density(mean, std, box, d.get("resolution", 512))
    if kind == "bimodal":
        return bimodal_density(tuple(d.get("centers", (-2.0, 2.0))), d.get("std", 0.3),
                               d.get("box", [[-5.0, 5.0]]), d.get("resolution", 1000))
    if kind == "uniform":
        return uniform_interval(d.get("c", 1.0), d.get("resolution", 512))
    raise ValueError(f"unknown space type: {kind!r}")
