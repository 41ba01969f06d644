"""Training objectives for two-symbol autoregressive models.

Each objective measures a candidate joint ``Q`` against a data joint ``P``
over sequences (x1, x2):

* ``d_ml``: the maximum-likelihood objective KL[P || Q], computed through
  the chain-rule decomposition (first-symbol KL plus P-weighted KL between
  conditionals).
* ``d_alternative``: what scheduled sampling optimizes when every prefix
  symbol is replaced by a model sample: the second-position target
  collapses to the marginal P_x2, and the conditioning symbol is drawn
  from Q's own first-symbol marginal.
* ``d_ss``: the epsilon-blend of the two; the coin that keeps a real
  prefix symbol with probability epsilon mixes the conditional term and
  the marginal-replacement term linearly.
* ``perceptual_kl`` / ``perplexity_term``: the exclusive direction
  KL[Q || P] and its model-entropy-free part, the cross-entropy of P
  under Q.

``d_ss`` is computed as the shared first-symbol term plus the two weighted
second-symbol terms, so ``d_ss(..., 1)`` is bit-identical to ``d_ml`` and
``d_ss(..., 0)`` to ``d_alternative``.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .dists import DiscreteDist, DiscreteJoint
from .divergences import Nats, cross_entropy_value, kl_value
from .errors import AlphabetMismatch, InvalidDistribution


@dataclasses.dataclass(frozen=True)
class SSWeight:
    """The keep-probability of the scheduled-sampling coin, in [0, 1]."""

    epsilon: float

    def __post_init__(self):
        eps = float(self.epsilon)
        if not 0.0 <= eps <= 1.0:
            raise InvalidDistribution(f"epsilon must be in [0, 1], got {eps!r}")
        object.__setattr__(self, "epsilon", eps)


@dataclasses.dataclass(frozen=True)
class ObjectiveKind:
    """A dispatch tag naming one of the supported objectives."""

    tag: str
    epsilon: float | None = None
    pi: float | None = None

    _TAGS = ("ml", "alternative", "ss", "perceptual_kl", "js_pi")

    def __post_init__(self):
        if self.tag not in self._TAGS:
            raise InvalidDistribution(f"unknown objective tag {self.tag!r}")
        if self.tag == "ss":
            if self.epsilon is None:
                raise InvalidDistribution("ss objective needs epsilon")
            SSWeight(self.epsilon)
        if self.tag == "js_pi":
            if self.pi is None or not 0.0 < float(self.pi) < 1.0:
                raise InvalidDistribution("js_pi objective needs pi in (0, 1)")

    @classmethod
    def ml(cls) -> "ObjectiveKind":
        return cls("ml")

    @classmethod
    def alternative(cls) -> "ObjectiveKind":
        return cls("alternative")

    @classmethod
    def ss(cls, epsilon: float) -> "ObjectiveKind":
        return cls("ss", epsilon=float(epsilon))

    @classmethod
    def perceptual_kl(cls) -> "ObjectiveKind":
        return cls("perceptual_kl")

    @classmethod
    def js_pi(cls, pi: float) -> "ObjectiveKind":
        return cls("js_pi", pi=float(pi))

    def describe(self) -> str:
        if self.tag == "ss":
            return f"ss(epsilon={self.epsilon})"
        if self.tag == "js_pi":
            return f"js_pi(pi={self.pi})"
        return self.tag

    def value(self, p: DiscreteDist | DiscreteJoint, q) -> Nats:
        """Evaluate this objective for target ``p`` and candidate ``q``."""
        from . import divergences  # local import to keep module load light

        if self.tag == "ml":
            if isinstance(p, DiscreteJoint):
                return d_ml(p, q)
            return divergences.kl(p, q)
        if self.tag == "alternative":
            return d_alternative(p, q)
        if self.tag == "ss":
            return d_ss(p, q, SSWeight(self.epsilon))
        if self.tag == "perceptual_kl":
            return perceptual_kl(q, p)
        return divergences.js_pi(p, q, divergences.MixtureWeight(self.pi))


def _tables(p: DiscreteJoint, q: DiscreteJoint) -> tuple[np.ndarray, np.ndarray]:
    if p.alphabet_size != q.alphabet_size:
        raise AlphabetMismatch("joint tables must share an alphabet size")
    return p.table, q.table


def _first_symbol_term(p: np.ndarray, q: np.ndarray) -> float:
    return kl_value(p.sum(axis=1), q.sum(axis=1))


def _conditional_term(p: np.ndarray, q: np.ndarray) -> float:
    """sum_z P_x1(z) KL[P_x2|z || Q_x2|z]; assumes Q_x1 covers P_x1."""
    p1 = p.sum(axis=1)
    q1 = q.sum(axis=1)
    total = 0.0
    for z in range(p.shape[0]):
        if p1[z] <= 0.0:
            continue
        term = kl_value(p[z] / p1[z], q[z] / q1[z])
        if math.isinf(term):
            return math.inf
        total += p1[z] * term
    return total


def _marginal_replacement_term(p: np.ndarray, q: np.ndarray) -> float:
    """sum_z Q_x1(z) KL[P_x2 || Q_x2|z]; z with zero Q-mass contribute 0."""
    p2 = p.sum(axis=0)
    q1 = q.sum(axis=1)
    total = 0.0
    for z in range(q.shape[0]):
        if q1[z] <= 0.0:
            continue
        term = kl_value(p2, q[z] / q1[z])
        if math.isinf(term):
            return math.inf
        total += q1[z] * term
    return total


def d_ml(p: DiscreteJoint, q: DiscreteJoint) -> Nats:
    """Maximum-likelihood objective KL[P || Q] via the chain rule."""
    pt, qt = _tables(p, q)
    first = _first_symbol_term(pt, qt)
    if math.isinf(first):
        return Nats.infinite()
    cond = _conditional_term(pt, qt)
    if math.isinf(cond):
        return Nats.infinite()
    return Nats(first + cond)


def d_alternative(p: DiscreteJoint, q: DiscreteJoint) -> Nats:
    """The always-sample objective: prefix from Q, marginal target for x2."""
    pt, qt = _tables(p, q)
    first = _first_symbol_term(pt, qt)
    if math.isinf(first):
        return Nats.infinite()
    repl = _marginal_replacement_term(pt, qt)
    if math.isinf(repl):
        return Nats.infinite()
    return Nats(first + repl)


def d_ss(p: DiscreteJoint, q: DiscreteJoint, e: SSWeight) -> Nats:
    """The scheduled-sampling objective with keep-probability ``e.epsilon``.

    Equals ``epsilon * d_ml + (1 - epsilon) * d_alternative``; the weighted
    terms with zero coefficient are skipped entirely, so the endpoints
    reproduce ``d_ml`` and ``d_alternative`` exactly.
    """
    pt, qt = _tables(p, q)
    eps = e.epsilon
    first = _first_symbol_term(pt, qt)
    if math.isinf(first):
        return Nats.infinite()
    total = first
    if eps > 0.0:
        cond = _conditional_term(pt, qt)
        if math.isinf(cond):
            return Nats.infinite()
        total += eps * cond
    if eps < 1.0:
        repl = _marginal_replacement_term(pt, qt)
        if math.isinf(repl):
            return Nats.infinite()
        total += (1.0 - eps) * repl
    return Nats(total)


def perceptual_kl(q: DiscreteDist | DiscreteJoint, p) -> Nats:
    """The exclusive direction KL[Q || P]; infinite where P misses Q."""
    from . import divergences

    return divergences.kl(q, p)


def perplexity_term(q: DiscreteDist | DiscreteJoint, p) -> Nats:
    """Cross-entropy of ``p`` under samples from ``q``: -E_q[log p]."""
    from . import divergences

    return divergences.cross_entropy(q, p)
