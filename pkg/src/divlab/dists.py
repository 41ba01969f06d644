"""Core probability objects: discrete tables, 2-D Gaussians, grid densities.

Discrete distributions are dense numpy vectors/tables over 0-based symbol
indices.  Normalization is checked at construction: discrete objects must
sum to one within ``MASS_TOL``; grid densities must have quadrature mass one
within ``QUAD_TOL``.  All objects are value-like: arrays are copied in and
frozen, so instances can be shared freely across threads.

Randomness is always explicit.  :class:`RngSeed` wraps a 64-bit seed and
derives independent, reproducible streams through numpy's ``SeedSequence``
spawn keys; nothing in the package touches global RNG state.
"""

from __future__ import annotations

import dataclasses
import zlib
from typing import Callable

import numpy as np

from .errors import DegenerateGrid, InvalidDistribution, ZeroMarginal

#: absolute tolerance for discrete normalization and mass identities
MASS_TOL = 1e-12
#: absolute tolerance for quadrature mass of grid densities
QUAD_TOL = 1e-3
#: default half-width of auto-derived grid windows, in standard deviations
GRID_SIGMAS = 6.0
#: default grid resolution (cells per axis)
GRID_RESOLUTION = 256


def _frozen_array(values, dtype=float) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.flags.writeable = False
    return out


# ---------------------------------------------------------------------------
# randomness


@dataclasses.dataclass(frozen=True)
class RngSeed:
    """A 64-bit seed. Equal seeds yield bit-identical sample streams."""

    seed: int

    def __post_init__(self):
        if not isinstance(self.seed, (int, np.integer)):
            raise InvalidDistribution(f"seed must be an integer, got {self.seed!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidDistribution(f"seed must fit in 64 bits, got {self.seed}")

    def generator(self) -> np.random.Generator:
        """The root PCG64 generator for this seed."""
        return np.random.default_rng(int(self.seed))

    def stream(self, *key: int | str) -> np.random.Generator:
        """An independent generator derived from this seed and a key.

        String keys are mapped through CRC-32 so stream identities are
        stable across processes and platforms.
        """
        spawn = tuple(
            int(k) if isinstance(k, (int, np.integer)) else zlib.crc32(k.encode())
            for k in key
        )
        seq = np.random.SeedSequence(int(self.seed), spawn_key=spawn)
        return np.random.default_rng(seq)


# ---------------------------------------------------------------------------
# discrete objects


@dataclasses.dataclass(frozen=True, eq=False)
class DiscreteDist:
    """A probability vector over symbols ``0..K-1``."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise InvalidDistribution("probs must be a non-empty 1-d array")
        if not np.all(np.isfinite(probs)):
            raise InvalidDistribution("probs must be finite")
        if np.any(probs < 0.0):
            raise InvalidDistribution("probs must be nonnegative")
        if abs(float(probs.sum()) - 1.0) > MASS_TOL:
            raise InvalidDistribution(
                f"probs must sum to 1 within {MASS_TOL}, got {probs.sum()!r}"
            )
        object.__setattr__(self, "probs", _frozen_array(probs))

    @classmethod
    def from_weights(cls, weights) -> "DiscreteDist":
        """Normalize nonnegative weights into a distribution."""
        w = np.asarray(weights, dtype=float)
        total = float(w.sum())
        if not np.isfinite(total) or total <= 0.0:
            raise InvalidDistribution("weights must have positive finite total")
        return cls(w / total)

    @property
    def size(self) -> int:
        return int(self.probs.size)

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, idx) -> float:
        return float(self.probs[idx])


@dataclasses.dataclass(frozen=True, eq=False)
class DiscreteJoint:
    """A joint probability table over symbol pairs, shape (K, K).

    ``table[z, j]`` is the probability of first symbol ``z`` and second
    symbol ``j``.
    """

    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] == 0:
            raise InvalidDistribution("table must be a non-empty square matrix")
        if not np.all(np.isfinite(table)):
            raise InvalidDistribution("table must be finite")
        if np.any(table < 0.0):
            raise InvalidDistribution("table must be nonnegative")
        if abs(float(table.sum()) - 1.0) > MASS_TOL:
            raise InvalidDistribution(
                f"table must sum to 1 within {MASS_TOL}, got {table.sum()!r}"
            )
        object.__setattr__(self, "table", _frozen_array(table))

    @classmethod
    def from_weights(cls, weights) -> "DiscreteJoint":
        w = np.asarray(weights, dtype=float)
        total = float(w.sum())
        if not np.isfinite(total) or total <= 0.0:
            raise InvalidDistribution("weights must have positive finite total")
        return cls(w / total)

    @property
    def alphabet_size(self) -> int:
        return int(self.table.shape[0])


def marginal_first(joint: DiscreteJoint) -> DiscreteDist:
    """Marginal of the first symbol (row sums)."""
    return DiscreteDist(joint.table.sum(axis=1))


def marginal_second(joint: DiscreteJoint) -> DiscreteDist:
    """Marginal of the second symbol (column sums)."""
    return DiscreteDist(joint.table.sum(axis=0))


def conditional_second(joint: DiscreteJoint, z: int) -> DiscreteDist:
    """Conditional of the second symbol given first symbol ``z``.

    Raises:
        ZeroMarginal: if the first-symbol marginal puts no mass on ``z``.
    """
    row = joint.table[z]
    mass = float(row.sum())
    if mass <= 0.0:
        raise ZeroMarginal(f"marginal mass at first symbol {z} is zero")
    return DiscreteDist(row / mass)


def factorized(first: DiscreteDist, second: DiscreteDist) -> DiscreteJoint:
    """Independent joint with the given marginals (outer product)."""
    if first.size != second.size:
        raise InvalidDistribution("marginals must share an alphabet size")
    return DiscreteJoint(np.outer(first.probs, second.probs))


def sample(dist: DiscreteDist, rng: np.random.Generator) -> int:
    """Draw one symbol index from ``dist`` using ``rng``."""
    return int(_sample_index(dist.probs, float(rng.random())))


def _sample_index(probs: np.ndarray, u: float) -> int:
    # inverse-CDF draw; u in [0, 1)
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, u, side="right"))
    return min(idx, probs.size - 1)


def sample_many(dist: DiscreteDist, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` symbol indices at once (same inverse-CDF rule as sample)."""
    cdf = np.cumsum(dist.probs)
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    return np.minimum(idx, dist.size - 1).astype(np.int64)


def random_joint(
    alphabet_size: int, concentration: float, rng: np.random.Generator
) -> DiscreteJoint:
    """A random strictly positive joint table (symmetric Dirichlet draw)."""
    if alphabet_size < 1:
        raise InvalidDistribution("alphabet_size must be >= 1")
    if not concentration > 0.0:
        raise InvalidDistribution("concentration must be > 0")
    w = rng.gamma(concentration, 1.0, size=(alphabet_size, alphabet_size))
    w = np.maximum(w, 1e-300)  # keep entries strictly positive
    return DiscreteJoint(w / w.sum())


def random_dist(
    alphabet_size: int, concentration: float, rng: np.random.Generator
) -> DiscreteDist:
    """A random strictly positive probability vector (Dirichlet draw)."""
    if alphabet_size < 1:
        raise InvalidDistribution("alphabet_size must be >= 1")
    if not concentration > 0.0:
        raise InvalidDistribution("concentration must be > 0")
    w = rng.gamma(concentration, 1.0, size=alphabet_size)
    w = np.maximum(w, 1e-300)
    return DiscreteDist(w / w.sum())


# ---------------------------------------------------------------------------
# tabular autoregressive model


@dataclasses.dataclass(frozen=True, eq=False)
class TabularAutoregressive:
    """A fully tabular autoregressive model over length-N symbol sequences.

    One conditional row per prefix: ``conditionals[prefix]`` is the
    distribution of the next symbol after ``prefix`` (a tuple of ints).
    Every prefix of every length ``0..length-1`` must be present.
    """

    length: int
    alphabet_size: int
    conditionals: dict[tuple[int, ...], DiscreteDist]

    def __post_init__(self):
        if self.length < 1:
            raise InvalidDistribution("length must be >= 1")
        if self.alphabet_size < 1:
            raise InvalidDistribution("alphabet_size must be >= 1")
        expected = sum(self.alphabet_size**n for n in range(self.length))
        if len(self.conditionals) != expected:
            raise InvalidDistribution(
                f"expected {expected} conditional rows, got {len(self.conditionals)}"
            )
        for prefix, row in self.conditionals.items():
            if not 0 <= len(prefix) < self.length:
                raise InvalidDistribution(f"prefix {prefix} has invalid length")
            if any(not 0 <= s < self.alphabet_size for s in prefix):
                raise InvalidDistribution(f"prefix {prefix} has out-of-range symbols")
            if row.size != self.alphabet_size:
                raise InvalidDistribution(f"row for prefix {prefix} has wrong size")

    @classmethod
    def uniform(cls, length: int, alphabet_size: int) -> "TabularAutoregressive":
        """All conditional rows uniform."""
        row = DiscreteDist(np.full(alphabet_size, 1.0 / alphabet_size))
        conditionals = {}
        prefixes = [()]
        for _ in range(length):
            conditionals.update({p: row for p in prefixes})
            prefixes = [p + (s,) for p in prefixes for s in range(alphabet_size)]
        return cls(length, alphabet_size, conditionals)

    @classmethod
    def from_joint(cls, joint: DiscreteJoint) -> "TabularAutoregressive":
        """The exact length-2 model of a joint table.

        Rows conditioned on a zero-mass first symbol are unreachable; they
        are filled in as uniform to keep the row map total.
        """
        k = joint.alphabet_size
        first = marginal_first(joint)
        conditionals: dict[tuple[int, ...], DiscreteDist] = {(): first}
        uniform_row = DiscreteDist(np.full(k, 1.0 / k))
        for z in range(k):
            if first[z] > 0.0:
                conditionals[(z,)] = conditional_second(joint, z)
            else:
                conditionals[(z,)] = uniform_row
        return cls(2, k, conditionals)

    def row(self, prefix: tuple[int, ...]) -> DiscreteDist:
        return self.conditionals[prefix]

    def with_row(
        self, prefix: tuple[int, ...], dist: DiscreteDist
    ) -> "TabularAutoregressive":
        """A copy of the model with one conditional row replaced."""
        if prefix not in self.conditionals:
            raise InvalidDistribution(f"unknown prefix {prefix}")
        rows = dict(self.conditionals)
        rows[prefix] = dist
        return TabularAutoregressive(self.length, self.alphabet_size, rows)

    def log_prob(self, sequence: tuple[int, ...]) -> float:
        """Log-probability of a full sequence under the chain rule."""
        if len(sequence) != self.length:
            raise InvalidDistribution("sequence length does not match model")
        total = 0.0
        for n in range(self.length):
            p = self.conditionals[tuple(sequence[:n])][sequence[n]]
            if p <= 0.0:
                return -np.inf
            total += np.log(p)
        return float(total)

    def sample_sequence(self, rng: np.random.Generator) -> tuple[int, ...]:
        """Ancestral sampling of one full sequence."""
        prefix: tuple[int, ...] = ()
        for _ in range(self.length):
            prefix += (sample(self.conditionals[prefix], rng),)
        return prefix

    def path_probabilities(self) -> np.ndarray:
        """Exhaustive path probabilities, shape ``(K,) * length``.

        Intended for small models; the number of paths is K**length.
        """
        probs = self.conditionals[()].probs
        table = probs.copy()
        prefixes = [(s,) for s in range(self.alphabet_size)]
        for _ in range(1, self.length):
            rows = np.stack([self.conditionals[p].probs for p in prefixes])
            table = table.reshape(-1, 1) * rows
            table = table.reshape(-1)
            prefixes = [p + (s,) for p in prefixes for s in range(self.alphabet_size)]
        return table.reshape((self.alphabet_size,) * self.length)

    def implied_joint(self) -> DiscreteJoint:
        """Path probabilities as a joint table (length-2 models only)."""
        if self.length != 2:
            raise InvalidDistribution("implied_joint requires a length-2 model")
        return DiscreteJoint(self.path_probabilities())


# ---------------------------------------------------------------------------
# 2-D Gaussians


@dataclasses.dataclass(frozen=True, eq=False)
class Gaussian2D:
    """A two-dimensional Gaussian with full covariance."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        if mean.shape != (2,):
            raise InvalidDistribution("mean must have shape (2,)")
        if cov.shape != (2, 2):
            raise InvalidDistribution("covariance must have shape (2, 2)")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InvalidDistribution("mean and covariance must be finite")
        if abs(cov[0, 1] - cov[1, 0]) > 1e-12:
            raise InvalidDistribution("covariance must be symmetric within 1e-12")
        # symmetrize exactly before the definiteness check
        cov = 0.5 * (cov + cov.T)
        if np.any(np.linalg.eigvalsh(cov) <= 0.0):
            raise InvalidDistribution("covariance must be positive definite")
        object.__setattr__(self, "mean", _frozen_array(mean))
        object.__setattr__(self, "covariance", _frozen_array(cov))


@dataclasses.dataclass(frozen=True, eq=False)
class IsotropicGaussian:
    """A two-dimensional Gaussian with covariance ``variance * I``."""

    mean: np.ndarray
    variance: float

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        if mean.shape != (2,):
            raise InvalidDistribution("mean must have shape (2,)")
        if not np.all(np.isfinite(mean)):
            raise InvalidDistribution("mean must be finite")
        if not (np.isfinite(self.variance) and self.variance > 0.0):
            raise InvalidDistribution("variance must be positive and finite")
        object.__setattr__(self, "mean", _frozen_array(mean))
        object.__setattr__(self, "variance", float(self.variance))

    def to_gaussian2d(self) -> Gaussian2D:
        return Gaussian2D(self.mean, self.variance * np.eye(2))


def as_gaussian2d(g: Gaussian2D | IsotropicGaussian) -> Gaussian2D:
    return g if isinstance(g, Gaussian2D) else g.to_gaussian2d()


def gaussian_density(g: Gaussian2D | IsotropicGaussian, point) -> float:
    """Density of ``g`` at a single 2-D point."""
    point = np.asarray(point, dtype=float)
    if point.shape != (2,):
        raise InvalidDistribution("point must have shape (2,)")
    full = as_gaussian2d(g)
    return float(_density_grid(full, point[:1], point[1:])[0, 0])


def _density_grid(g: Gaussian2D, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Density on the tensor grid xs x ys; out[i, j] is at (xs[i], ys[j])."""
    cov = g.covariance
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    inv = np.array([[cov[1, 1], -cov[0, 1]], [-cov[1, 0], cov[0, 0]]]) / det
    dx = (xs - g.mean[0])[:, None]
    dy = (ys - g.mean[1])[None, :]
    quad = inv[0, 0] * dx * dx + 2.0 * inv[0, 1] * dx * dy + inv[1, 1] * dy * dy
    return np.exp(-0.5 * quad) / (2.0 * np.pi * np.sqrt(det))


# ---------------------------------------------------------------------------
# grid densities


@dataclasses.dataclass(frozen=True, eq=False)
class GridDensity:
    """A density sampled at the cell centers of a regular 2-D grid.

    ``values[i, j]`` is the density at x-index ``i``, y-index ``j``.  The
    quadrature mass ``values.sum() * cell_area`` must be 1 within QUAD_TOL.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    resolution: int
    values: np.ndarray

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise InvalidDistribution("grid bounds must be non-degenerate")
        if self.resolution < 2:
            raise InvalidDistribution("resolution must be >= 2")
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.resolution, self.resolution):
            raise InvalidDistribution("values must have shape (resolution, resolution)")
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise InvalidDistribution("values must be finite and nonnegative")
        mass = float(values.sum()) * self.cell_area
        if abs(mass - 1.0) > QUAD_TOL:
            raise InvalidDistribution(
                f"quadrature mass must be 1 within {QUAD_TOL}, got {mass!r}"
            )
        object.__setattr__(self, "values", _frozen_array(values))

    @property
    def cell_area(self) -> float:
        dx = (self.x_max - self.x_min) / self.resolution
        dy = (self.y_max - self.y_min) / self.resolution
        return dx * dy

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Center coordinates along each axis."""
        dx = (self.x_max - self.x_min) / self.resolution
        dy = (self.y_max - self.y_min) / self.resolution
        xs = self.x_min + dx * (np.arange(self.resolution) + 0.5)
        ys = self.y_min + dy * (np.arange(self.resolution) + 0.5)
        return xs, ys

    def quadrature_mass(self) -> float:
        return float(self.values.sum()) * self.cell_area

    def renormalize(self) -> "GridDensity":
        """Rescale values so the quadrature mass is exactly one."""
        mass = self.quadrature_mass()
        if mass < 1e-12:
            raise DegenerateGrid("grid mass is numerically zero")
        return GridDensity(
            self.x_min, self.x_max, self.y_min, self.y_max,
            self.resolution, self.values / mass,
        )

    def same_grid(self, other: "GridDensity") -> bool:
        return (
            self.resolution == other.resolution
            and self.x_min == other.x_min
            and self.x_max == other.x_max
            and self.y_min == other.y_min
            and self.y_max == other.y_max
        )


Bounds = tuple[float, float, float, float]


def default_bounds(
    g: Gaussian2D | IsotropicGaussian, n_sigmas: float = GRID_SIGMAS
) -> Bounds:
    """A square-ish window: mean +- n_sigmas * sqrt(largest eigenvalue)."""
    full = as_gaussian2d(g)
    sigma = float(np.sqrt(np.max(np.linalg.eigvalsh(full.covariance))))
    half = n_sigmas * sigma
    mx, my = float(full.mean[0]), float(full.mean[1])
    return (mx - half, mx + half, my - half, my + half)


def grid_from_density(
    density: Callable[[np.ndarray, np.ndarray], np.ndarray],
    bounds: Bounds,
    resolution: int = GRID_RESOLUTION,
) -> GridDensity:
    """Sample ``density`` at cell centers and renormalize to mass one.

    Args:
        density: vectorized callable mapping meshgrid arrays (X, Y), indexed
            ``[i, j] -> (xs[i], ys[j])``, to density values.
        bounds: (x_min, x_max, y_min, y_max).
        resolution: cells per axis.

    Raises:
        DegenerateGrid: if the sampled quadrature mass is below 1e-12.
    """
    x_min, x_max, y_min, y_max = (float(b) for b in bounds)
    if not (x_max > x_min and y_max > y_min):
        raise InvalidDistribution("grid bounds must be non-degenerate")
    if resolution < 2:
        raise InvalidDistribution("resolution must be >= 2")
    dx = (x_max - x_min) / resolution
    dy = (y_max - y_min) / resolution
    xs = x_min + dx * (np.arange(resolution) + 0.5)
    ys = y_min + dy * (np.arange(resolution) + 0.5)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    values = np.asarray(density(X, Y), dtype=float)
    if values.shape != (resolution, resolution):
        raise InvalidDistribution("density callable returned a wrong shape")
    if not np.all(np.isfinite(values)) or np.any(values < 0.0):
        raise InvalidDistribution("density values must be finite and nonnegative")
    mass = float(values.sum()) * dx * dy
    if mass < 1e-12:
        raise DegenerateGrid(f"sampled mass {mass!r} is numerically zero")
    return GridDensity(x_min, x_max, y_min, y_max, resolution, values / mass)


def grid_from_gaussian(
    g: Gaussian2D | IsotropicGaussian,
    bounds: Bounds | None = None,
    resolution: int = GRID_RESOLUTION,
) -> GridDensity:
    """Grid density of a Gaussian; bounds default to :func:`default_bounds`."""
    full = as_gaussian2d(g)
    if bounds is None:
        bounds = default_bounds(full)
    return grid_from_density(
        lambda X, Y: _density_grid(full, X[:, 0], Y[0, :]), bounds, resolution
    )
