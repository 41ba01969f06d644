"""Entropies and divergences, in nats, with explicit infinity handling.

All logarithms are natural.  Divergences return :class:`Nats`, which is
either a nonnegative finite float or infinite; tiny negative round-off
(within ``NEG_TOL``) is clamped to zero, anything more negative raises
:class:`~divlab.errors.NumericFault`.

The convention ``0 * log(0) = 0`` applies throughout: terms with zero
weight never contribute, so e.g. the generalized Jensen-Shannon divergence
is finite for every pair of distributions.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .dists import DiscreteDist, DiscreteJoint, Gaussian2D, GridDensity, IsotropicGaussian, as_gaussian2d
from .errors import AlphabetMismatch, GridMismatch, InvalidDistribution, NumericFault

#: tolerance for negative round-off in quantities that must be nonnegative
NEG_TOL = 1e-12


@dataclasses.dataclass(frozen=True, order=True)
class Nats:
    """A nonnegative amount of information in nats, possibly infinite."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if math.isnan(v):
            raise NumericFault("nats value is NaN")
        if v < 0.0:
            if v < -NEG_TOL:
                raise NumericFault(f"negative beyond round-off: {v!r}")
            v = 0.0
        object.__setattr__(self, "value", v)

    @classmethod
    def infinite(cls) -> "Nats":
        return cls(math.inf)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def __float__(self) -> float:
        return self.value


@dataclasses.dataclass(frozen=True)
class MixtureWeight:
    """A mixture weight strictly inside (0, 1)."""

    pi: float

    def __post_init__(self):
        pi = float(self.pi)
        if not (0.0 < pi < 1.0):
            raise InvalidDistribution(f"mixture weight must be in (0, 1), got {pi!r}")
        object.__setattr__(self, "pi", pi)


Discrete = DiscreteDist | DiscreteJoint


def _flat(p: Discrete) -> np.ndarray:
    return p.probs if isinstance(p, DiscreteDist) else p.table.reshape(-1)


def _flat_pair(p: Discrete, q: Discrete) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(p, DiscreteDist) != isinstance(q, DiscreteDist):
        raise AlphabetMismatch("cannot mix a vector with a joint table")
    a, b = _flat(p), _flat(q)
    if a.shape != b.shape:
        raise AlphabetMismatch(f"alphabet sizes differ: {a.shape} vs {b.shape}")
    return a, b


def entropy_value(p: np.ndarray) -> float:
    mask = p > 0.0
    return float(-np.sum(p[mask] * np.log(p[mask])))


def cross_entropy_value(p: np.ndarray, q: np.ndarray) -> float:
    """-sum p log q over p's support; inf if q has a zero there."""
    mask = p > 0.0
    if np.any(q[mask] == 0.0):
        return math.inf
    return float(-np.sum(p[mask] * np.log(q[mask])))


def kl_value(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0.0
    if np.any(q[mask] == 0.0):
        return math.inf
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def entropy(p: Discrete) -> Nats:
    """Shannon entropy; always finite for a finite alphabet."""
    return Nats(entropy_value(_flat(p)))


def cross_entropy(p: Discrete, q: Discrete) -> Nats:
    """Cross-entropy of ``q`` under ``p``; infinite iff q misses p's support."""
    a, b = _flat_pair(p, q)
    return Nats(cross_entropy_value(a, b))


def kl(p: Discrete, q: Discrete) -> Nats:
    """KL divergence KL[p || q]; infinite iff q misses p's support."""
    a, b = _flat_pair(p, q)
    return Nats(kl_value(a, b))


def kl_gaussian(
    p: Gaussian2D | IsotropicGaussian, q: Gaussian2D | IsotropicGaussian
) -> Nats:
    """Closed-form KL between 2-D Gaussians; always finite."""
    a, b = as_gaussian2d(p), as_gaussian2d(q)
    cov_p, cov_q = a.covariance, b.covariance
    inv_q = np.linalg.inv(cov_q)
    diff = b.mean - a.mean
    _, logdet_p = np.linalg.slogdet(cov_p)
    _, logdet_q = np.linalg.slogdet(cov_q)
    val = 0.5 * (
        float(np.trace(inv_q @ cov_p))
        + float(diff @ inv_q @ diff)
        - 2.0
        + (logdet_q - logdet_p)
    )
    return Nats(val)


def js_pi_value(p: np.ndarray, q: np.ndarray, pi: float) -> float:
    m = pi * p + (1.0 - pi) * q
    return pi * kl_value(p, m) + (1.0 - pi) * kl_value(q, m)


def js_pi(p: Discrete, q: Discrete, w: MixtureWeight) -> Nats:
    """Generalized Jensen-Shannon divergence with mixture weight ``w.pi``.

    ``pi * KL[p || m] + (1 - pi) * KL[q || m]`` with ``m = pi p + (1-pi) q``.
    Always finite: the mixture covers the support of both arguments.
    """
    a, b = _flat_pair(p, q)
    return Nats(js_pi_value(a, b, w.pi))


def jsd(p: Discrete, q: Discrete) -> Nats:
    """The symmetric Jensen-Shannon divergence (mixture weight 1/2)."""
    return js_pi(p, q, MixtureWeight(0.5))


def js_pi_grid(p: GridDensity, q: GridDensity, w: MixtureWeight) -> Nats:
    """Generalized Jensen-Shannon divergence by midpoint quadrature.

    Both grids must share bounds and resolution exactly.
    """
    if not p.same_grid(q):
        raise GridMismatch("grid densities must share bounds and resolution")
    pi = w.pi
    pv, qv = p.values, q.values
    m = pi * pv + (1.0 - pi) * qv
    with np.errstate(divide="ignore", invalid="ignore"):
        tp = np.where(pv > 0.0, pv * np.log(np.where(pv > 0.0, pv, 1.0) / np.where(m > 0.0, m, 1.0)), 0.0)
        tq = np.where(qv > 0.0, qv * np.log(np.where(qv > 0.0, qv, 1.0) / np.where(m > 0.0, m, 1.0)), 0.0)
    val = (pi * float(tp.sum()) + (1.0 - pi) * float(tq.sum())) * p.cell_area
    return Nats(val)


def kl_limit_ratio(p: Discrete, q: Discrete, pi: float) -> Nats:
    """``js_pi(p, q, pi) / pi``, which approaches KL[p || q] as pi -> 0.

    The error is first order in ``pi``.  Only small weights make sense
    here; ``pi`` must lie in (0, 0.1].
    """
    pi = float(pi)
    if not 0.0 < pi <= 0.1:
        raise InvalidDistribution(f"pi must be in (0, 0.1], got {pi!r}")
    return Nats(float(js_pi(p, q, MixtureWeight(pi))) / pi)


def total_variation(p: Discrete, q: Discrete) -> float:
    """Total variation distance, 0.5 * sum |p - q|, in [0, 1]."""
    a, b = _flat_pair(p, q)
    return 0.5 * float(np.abs(a - b).sum())
