"""Two-step training objectives and their blend.

Oracle values here come from explicit per-symbol loops over the chain
rule, written independently of the vectorized module code.  The two
frozen constants were computed from those loops:

* first-step KL plus expected conditional KL against the uniform joint
  for the correlated table equals 0.19274475702175745
* the marginal-replacement objective of the correlated table against
  itself equals ln(5/4) = 0.22314355131420976
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divlab.dists import DiscreteDist, DiscreteJoint, factorized, random_joint
from divlab.divergences import MixtureWeight, cross_entropy, entropy, js_pi, kl
from divlab.objectives import (
    ObjectiveKind,
    SSWeight,
    d_alternative,
    d_ml,
    d_ss,
    perceptual_kl,
    perplexity_term,
)
from divlab.errors import InvalidDistribution


def _kl_loop(p, q):
    total = 0.0
    for a, b in zip(p, q):
        if a > 0.0:
            if b == 0.0:
                return math.inf
            total += a * math.log(a / b)
    return total


def _ml_loop(P, Q):
    """Chain-rule KL: first-symbol term plus expected conditional term."""
    p1 = P.sum(axis=1)
    q1 = Q.sum(axis=1)
    total = _kl_loop(p1, q1)
    for z in range(P.shape[0]):
        if p1[z] > 0.0:
            total += p1[z] * _kl_loop(P[z] / p1[z], Q[z] / q1[z])
    return total


def _alt_loop(P, Q):
    """First-symbol term plus the marginal-replacement conditional term."""
    p1 = P.sum(axis=1)
    q1 = Q.sum(axis=1)
    p2 = P.sum(axis=0)
    total = _kl_loop(p1, q1)
    for z in range(P.shape[0]):
        if q1[z] > 0.0:
            total += q1[z] * _kl_loop(p2, Q[z] / q1[z])
    return total


def small_joints(k):
    return st.lists(st.floats(0.05, 10.0), min_size=k * k, max_size=k * k).map(
        lambda w: DiscreteJoint.from_weights(np.array(w).reshape(k, k))
    )


# ---------------------------------------------------------------------------
# weights


@pytest.mark.parametrize("eps", [0.0, 0.5, 1.0])
def test_ss_weight_accepts_closed_interval(eps):
    assert SSWeight(eps).epsilon == eps


@pytest.mark.parametrize("eps", [-0.01, 1.01, float("nan")])
def test_ss_weight_rejects_outside(eps):
    with pytest.raises(InvalidDistribution):
        SSWeight(eps)


# ---------------------------------------------------------------------------
# frozen values on the correlated table


def test_d_ml_frozen_value(correlated_joint, uniform_joint):
    assert float(d_ml(correlated_joint, uniform_joint)) == pytest.approx(
        0.19274475702175745, abs=1e-15
    )


def test_d_ml_equals_joint_kl(correlated_joint, uniform_joint):
    assert float(d_ml(correlated_joint, uniform_joint)) == pytest.approx(
        float(kl(correlated_joint, uniform_joint)), abs=1e-13
    )


def test_d_alternative_frozen_self_value(correlated_joint):
    assert float(d_alternative(correlated_joint, correlated_joint)) == pytest.approx(
        math.log(1.25), abs=1e-15
    )


def test_d_alternative_zero_only_when_factorized(correlated_joint):
    f = factorized(DiscreteDist([0.3, 0.7]), DiscreteDist([0.25, 0.75]))
    assert float(d_alternative(f, f)) == 0.0
    assert float(d_alternative(correlated_joint, correlated_joint)) > 0.2


def test_d_ss_midpoint_frozen(correlated_joint):
    got = float(d_ss(correlated_joint, correlated_joint, SSWeight(0.5)))
    assert got == pytest.approx(0.5 * math.log(1.25), abs=1e-15)


# ---------------------------------------------------------------------------
# structure of the blend


def test_d_ss_endpoints_are_bit_exact(correlated_joint, uniform_joint):
    p, q = correlated_joint, uniform_joint
    assert float(d_ss(p, q, SSWeight(1.0))) == float(d_ml(p, q))
    assert float(d_ss(p, q, SSWeight(0.0))) == float(d_alternative(p, q))


@given(small_joints(2), small_joints(2), st.floats(0.0, 1.0))
@settings(max_examples=80, deadline=None)
def test_d_ss_is_convex_blend(p, q, eps):
    blend = eps * float(d_ml(p, q)) + (1.0 - eps) * float(d_alternative(p, q))
    assert float(d_ss(p, q, SSWeight(eps))) == pytest.approx(blend, abs=1e-12)


@given(small_joints(3), small_joints(3))
@settings(max_examples=60, deadline=None)
def test_objectives_nonnegative(p, q):
    assert float(d_ml(p, q)) >= 0.0
    assert float(d_alternative(p, q)) >= 0.0


def test_loops_agree_with_module(rng):
    for _ in range(25):
        p = random_joint(3, 2.0, rng)
        q = random_joint(3, 2.0, rng)
        assert float(d_ml(p, q)) == pytest.approx(_ml_loop(p.table, q.table), abs=1e-13)
        assert float(d_alternative(p, q)) == pytest.approx(
            _alt_loop(p.table, q.table), abs=1e-13
        )


def test_d_ml_zero_on_self(correlated_joint):
    assert float(d_ml(correlated_joint, correlated_joint)) == 0.0


# ---------------------------------------------------------------------------
# model-side objectives


def test_perceptual_kl_direction(skew_pair):
    p, q = skew_pair
    assert float(perceptual_kl(q, p)) == pytest.approx(float(kl(q, p)), abs=1e-15)


def test_perplexity_term_is_cross_entropy(skew_pair):
    p, q = skew_pair
    assert float(perplexity_term(q, p)) == pytest.approx(
        float(cross_entropy(q, p)), abs=1e-15
    )


def test_perplexity_splits_into_entropy_plus_kl(skew_pair):
    # the additive-offset identity: the sampled-likelihood term equals
    # the model entropy plus the model-to-data KL
    p, q = skew_pair
    assert float(perplexity_term(q, p)) == pytest.approx(
        float(entropy(q)) + float(perceptual_kl(q, p)), abs=1e-14
    )


# ---------------------------------------------------------------------------
# dispatch


def test_objective_kind_dispatch(correlated_joint, uniform_joint, skew_pair):
    p, q = skew_pair
    cases = [
        (ObjectiveKind.ml(), correlated_joint, uniform_joint, d_ml(correlated_joint, uniform_joint)),
        (ObjectiveKind.alternative(), correlated_joint, uniform_joint, d_alternative(correlated_joint, uniform_joint)),
        (
            ObjectiveKind.ss(0.25),
            correlated_joint,
            uniform_joint,
            d_ss(correlated_joint, uniform_joint, SSWeight(0.25)),
        ),
        (ObjectiveKind.perceptual_kl(), p, q, perceptual_kl(q, p)),
        (ObjectiveKind.js_pi(0.3), p, q, js_pi(p, q, MixtureWeight(0.3))),
    ]
    for kind, target, model, expected in cases:
        assert float(kind.value(target, model)) == pytest.approx(float(expected), abs=1e-15)


def test_objective_kind_validation():
    with pytest.raises(InvalidDistribution):
        ObjectiveKind("nope")
    with pytest.raises(InvalidDistribution):
        ObjectiveKind.ss(1.5)
    with pytest.raises(InvalidDistribution):
        ObjectiveKind.js_pi(0.0)


def test_describe_mentions_parameters():
    assert "0.25" in ObjectiveKind.ss(0.25).describe()
    assert "ml" in ObjectiveKind.ml().describe()
