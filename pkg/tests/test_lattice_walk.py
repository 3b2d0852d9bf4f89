import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bbperc.errors import (
    DuplicateSupportVector,
    EmptySupport,
    NonPositiveProbability,
    ProbabilitySumMismatch,
    TargetOutsideHull,
)
from bbperc.lattice_walk import (
    BasisFrame,
    StepLaw,
    format_step_law,
    lattice_covolume,
    mean_decompose,
    named_law,
    parse_step_law,
    solve_tilt,
    span,
    tilt,
    tilt_exact,
)


def law(atoms):
    return StepLaw.from_atoms(atoms)


# -- construction and moments -------------------------------------------------

def test_symmetric_two_point_moments():
    pm1 = law({(1,): F(1, 2), (-1,): F(1, 2)})
    assert pm1.mean == (0,)
    assert pm1.covariance == ((1,),)
    assert span(pm1) == (2, 1)


def test_drifted_mean_is_rational():
    assert law({(1,): F(2, 3), (-1,): F(1, 3)}).mean == (F(1, 3),)


@pytest.mark.parametrize("atoms, err", [
    ({(1,): 0.5, (-1,): 0.6}, ProbabilitySumMismatch),
    ({(1,): F(1), (-1,): F(0)}, NonPositiveProbability),
    ({}, EmptySupport),
])
def test_malformed_laws_rejected(atoms, err):
    with pytest.raises(err):
        law(atoms)


def test_duplicate_vector_rejected():
    with pytest.raises(DuplicateSupportVector):
        StepLaw.from_atoms([((1,), F(1, 2)), ((1,), F(1, 2))])


@pytest.mark.parametrize("atoms, expected", [
    ({(1,): F(1, 2), (-1,): F(1, 2)}, (2, 1)),
    ({(0,): F(1, 2), (1,): F(1, 2)}, (1, 0)),
    ({(2,): F(1, 2), (-2,): F(1, 2)}, (4, 2)),
    ({(3,): F(1)}, (0, 3)),
])
def test_span(atoms, expected):
    assert span(law(atoms)) == expected


def test_covolume_of_diagonal_steps():
    # (1,1) and (1,-1) differ by (0,2): the generated lattice is rank one
    assert lattice_covolume(named_law("diag")) == 0
    assert lattice_covolume(named_law("two-speed")) == 1


def test_text_round_trip():
    original = named_law("skew")
    assert parse_step_law(format_step_law(original)) == original


# -- frames and mean decomposition ------------------------------------------

@pytest.mark.parametrize("mu, a, mu_a, mu_or", [
    ((1, 1), (1, 0), (1, 0), (0, 1)),
    ((2, 0), (1, 1), (1, 1), (1, -1)),
    ((0, 0), (3, 4), (0, 0), (0, 0)),
])
def test_mean_decompose_examples(mu, a, mu_a, mu_or):
    # a two-atom law with the requested mean: mu +- (1, 0)
    atoms = {tuple(m + 1 if j == 0 else m for j, m in enumerate(mu)): F(1, 2),
             tuple(m - 1 if j == 0 else m for j, m in enumerate(mu)): F(1, 2)}
    got_a, got_or = mean_decompose(law(atoms), BasisFrame.from_direction(a))
    assert tuple(got_a) == mu_a and tuple(got_or) == mu_or


int_vectors = st.lists(st.integers(-3, 3), min_size=2, max_size=2)


@st.composite
def random_laws(draw, dims=(1, 2, 3), max_atoms=5):
    d = draw(st.sampled_from(dims))
    vecs = draw(st.lists(st.tuples(*[st.integers(-3, 3)] * d), min_size=2, max_size=max_atoms, unique=True))
    weights = draw(st.lists(st.integers(1, 9), min_size=len(vecs), max_size=len(vecs)))
    total = sum(weights)
    return StepLaw.from_atoms([(v, F(w, total)) for v, w in zip(vecs, weights)])


@given(random_laws(dims=(2,)), int_vectors.filter(any))
def test_mean_decompose_is_orthogonal_and_complete(lw, a):
    mu_a, mu_or = mean_decompose(lw, BasisFrame.from_direction(a))
    assert sum(x * y for x, y in zip(mu_a, mu_or)) == 0
    assert tuple(x + y for x, y in zip(mu_a, mu_or)) == lw.mean


@given(st.lists(st.integers(-4, 4), min_size=3, max_size=3).filter(any))
def test_frame_is_orthonormal(a):
    f = BasisFrame.from_direction(a)
    assert np.allclose(f.vectors @ f.vectors.T, np.eye(3), atol=1e-12)
    assert np.allclose(f.to_frame(np.asarray(a, float)), [f.norm_a, 0, 0], atol=1e-12)


# -- tilts --------------------------------------------------------------------

def test_tilt_drift_to_zero_closed_form():
    # root of (2/3) e^r = (1/3) e^{-r}
    param, tilted = solve_tilt(law({(1,): F(2, 3), (-1,): F(1, 3)}), [0.0])
    assert param.theta[0] == pytest.approx(-math.log(2) / 2, abs=1e-12)
    assert tilted.probs == pytest.approx([0.5, 0.5], abs=1e-12)


def test_symmetric_law_needs_no_tilt():
    pm1 = named_law("pm1")
    param, tilted = solve_tilt(pm1, [0.0])
    assert np.all(param.theta == 0) and tilted == pm1


def test_target_outside_hull():
    with pytest.raises(TargetOutsideHull):
        solve_tilt(law({(1,): F(1)}), [-1.0])
    with pytest.raises(TargetOutsideHull):
        solve_tilt(named_law("pm1"), [1.0])


@given(random_laws(), st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_tilt_then_untilt_recovers_law(lw, theta):
    th = np.asarray(theta[: lw.dim])
    _, there = tilt(lw, th)
    _, back = tilt(there, -th)
    assert np.max(np.abs(back.probs - lw.probs)) < 1e-12


@given(random_laws(), st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_tilted_atoms_proportional_to_exponential_weight(lw, theta):
    th = np.asarray(theta[: lw.dim])
    _, tl = tilt(lw, th)
    expected = lw.probs * np.exp(lw.vectors @ th)
    assert math.isclose(tl.probs.sum(), 1.0, abs_tol=1e-12)
    assert np.allclose(tl.probs, expected / expected.sum(), rtol=1e-12, atol=0)


@settings(max_examples=100, deadline=None)
@given(random_laws(), st.data())
def test_solve_tilt_hits_random_interior_targets(lw, data):
    # a strictly positive mixture of the atoms lies in the relative interior of the hull
    w = np.asarray(data.draw(st.lists(st.integers(1, 9), min_size=len(lw.support), max_size=len(lw.support))), float)
    target = (w / w.sum()) @ lw.vectors
    _, tl = solve_tilt(lw, target)
    assert np.max(np.abs(tl.mean_array - target)) < 1e-10


def test_exact_tilt_matches_float_tilt():
    skew = named_law("skew")
    exact = tilt_exact(skew, [F(3, 2)])
    _, approx = tilt(skew, [math.log(1.5)])
    assert exact.exact
    assert np.allclose(exact.probs, approx.probs, atol=1e-15)
