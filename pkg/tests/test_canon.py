"""test functions in canon.py"""

import numpy as np
import pytest

from src.canon import (
    EnergyFunction,
    argmin_set_enumerate,
    argmin_ties,
    descending_ranks,
    energy_canonicalize,
    orbit_representative,
    random_linear_energy,
    randomized_canonical_forward,
    sample_inversion_kernel,
    sort_canonicalize,
)
from src.groups import (
    make_cyclic,
    make_p4m,
    make_signed_perm,
    make_symmetric,
    stabilizer,
)
from src.utils import make_rng


@pytest.mark.parametrize(
    "action, point",
    [
        (make_cyclic(6), [1.0, 2.0, 1.0, 2.0, 1.0, 2.0]),
        (make_symmetric(4), [1.0, 1.0, 2.0, 3.0]),
        (make_signed_perm(2), [1.0, 1.0]),
        (make_p4m(4), np.tile([[1.0, -1.0], [-1.0, 1.0]], (2, 2))),
    ],
)
def test_argmin_set_is_stabilizer_coset(action, point):
    """argmin set has |G_x| elements and gamma is the same for all its members"""
    point = np.asarray(point)
    energy = random_linear_energy(point.shape, 0)
    result = energy_canonicalize(energy, action, point)
    stab = stabilizer(action, point)
    assert len(result.argmin_set) == stab.order
    assert result.tau == result.argmin_set[0]
    group = action.group
    for elem in result.argmin_set:
        gamma = action.apply(group.inverse(elem), point)
        assert np.array_equal(gamma, orbit_representative(result))
    assert energy(result.gamma) == result.energy_value


def test_argmin_set_equivariance():
    """argmin_set(g x) = g argmin_set(x) on a corpus of tied points"""
    action = make_symmetric(4)
    group = action.group
    energy = random_linear_energy((4,), 5)
    rng = make_rng(4)
    for _ in range(50):
        point = rng.integers(0, 3, size=4).astype(np.float64)
        argmin_set = energy_canonicalize(energy, action, point).argmin_set
        for elem in group.elements:
            moved = energy_canonicalize(energy, action, action.apply(elem, point))
            expected = sorted(group.compose(elem, tau) for tau in argmin_set)
            assert list(moved.argmin_set) == expected


def test_inversion_kernel_uniform():
    """inversion kernel samples are uniform on the argmin set within 5 sigma"""
    action = make_cyclic(6)
    point = np.array([1.0, 2.0, 1.0, 2.0, 1.0, 2.0])
    result = energy_canonicalize(random_linear_energy((6,), 1), action, point)
    rng = make_rng(5)
    sample_cnt = 10000
    counts = np.zeros(6)
    for _ in range(sample_cnt):
        counts[sample_inversion_kernel(result, rng)] += 1
    size = len(result.argmin_set)
    assert size == 3
    assert counts.sum() == counts[list(result.argmin_set)].sum()
    sigma = np.sqrt(sample_cnt * (1.0 / size) * (1.0 - 1.0 / size))
    hits = counts[list(result.argmin_set)]
    assert np.all(np.abs(hits - sample_cnt / size) <= 5 * sigma)


def test_energy_shape_mismatch():
    """energy of a point with the wrong shape is an error"""
    energy = EnergyFunction(np.ones(3))
    with pytest.raises(ValueError):
        energy(np.ones(4))


def test_argmin_ties():
    """ties are detected relative to the magnitude of the minimum"""
    vals = np.array([1.0e6, 1.0e6 * (1.0 + 1.0e-13), 1.0e6 * (1.0 + 1.0e-9)])
    assert list(argmin_ties(vals)) == [0, 1]


def test_descending_ranks():
    """ranks are n, n-1, ..., 1"""
    assert np.array_equal(descending_ranks(4), [4.0, 3.0, 2.0, 1.0])


def test_sort_canonicalize_distinct():
    """distinct scores give the unique ascending sort and singleton argmin set"""
    scores = np.array([0.3, 0.1, 0.2])
    action = make_symmetric(3)
    result = sort_canonicalize(scores, make_rng(6), action)
    assert np.array_equal(result.gamma, [0.1, 0.2, 0.3])
    assert result.argmin_set == (result.tau,)
    assert np.array_equal(action.apply(result.tau, result.gamma), scores)


def test_sort_canonicalize_perm():
    """without an action, tau is the index permutation with tau gamma = x"""
    scores = np.array([2.0, 1.0, 2.0, 0.0])
    result = sort_canonicalize(scores, make_rng(7))
    assert result.argmin_set is None
    reconstructed = np.empty_like(scores)
    reconstructed[result.tau] = result.gamma
    assert np.array_equal(reconstructed, scores)
    assert sample_inversion_kernel(result, make_rng(0)) is result.tau


def test_sort_kernel_law():
    """sampled permutations are uniform on the tie coset"""
    scores = np.array([1.0, 1.0, 2.0, 2.0, 3.0])
    action = make_symmetric(5)
    argmin_set = argmin_set_enumerate(action, scores)
    assert len(argmin_set) == 4
    rng = make_rng(8)
    sample_cnt = 10000
    counts = {}
    for _ in range(sample_cnt):
        tau = sort_canonicalize(scores, rng, action).tau
        counts[tau] = counts.get(tau, 0) + 1
    assert sorted(counts) == list(argmin_set)
    tv_dist = 0.5 * sum(abs(cnt / sample_cnt - 0.25) for cnt in counts.values())
    assert tv_dist <= np.sqrt(2.0 * np.log(2.0 / 0.01) / sample_cnt)


def test_argmin_set_enumerate_default_action():
    """argmin set of the sorting energy is computed without a given action"""
    scores = np.array([0.5, 0.5, 0.5])
    assert len(argmin_set_enumerate(None, scores)) == 6


def test_argmin_set_enumerate_8():
    """eight tied scores give the 2! 3! 3! sorting permutations"""
    scores = np.array([3.0, 1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 2.0])
    action = make_symmetric(8)
    argmin_set = argmin_set_enumerate(action, scores)
    assert len(argmin_set) == 72
    for elem in argmin_set:
        gamma = action.apply(action.group.inverse(elem), scores)
        assert np.all(np.diff(gamma) >= 0.0)
    result = sort_canonicalize(scores, make_rng(10), action)
    assert result.tau in argmin_set


def test_randomized_canonical_forward_equivariant():
    """g phi(g^-1 x) lands in the orbit of phi outputs consistently"""
    action = make_cyclic(4)
    energy = random_linear_energy((4,), 2)
    weights = np.array([1.0, 2.0, 3.0, 4.0])

    def phi(x_val):
        return x_val * weights

    rng = make_rng(9)
    point = np.array([0.3, 0.1, 0.4, 0.2])
    base = randomized_canonical_forward(phi, point, energy, action, action, rng)
    for elem in action.group.elements:
        moved = randomized_canonical_forward(
            phi, action.apply(elem, point), energy, action, action, rng
        )
        # trivial stabilizer, so the output is deterministic and equivariant
        assert np.array_equal(moved, action.apply(elem, base))
