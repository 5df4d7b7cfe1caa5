"""test functions in sympe.py"""

import numpy as np
import pytest

from src import equicheck
from src.canon import random_linear_energy
from src.groups import (
    LeftRegularAction,
    make_cyclic,
    make_p4m,
    make_signed_perm,
    make_symmetric,
    stabilizer,
)
from src.sympe import (
    MAX_REDRAWS,
    EncodedInput,
    encode,
    energy_canonicalizer,
    expressivity_witness,
    is_free,
    make_breaking_vector,
    noise_inject,
    relaxed_forward,
    sympe_forward,
    uniform_kernel_forward,
    vector_shape,
)
from src.utils import make_rng


@pytest.mark.parametrize(
    "action",
    [make_cyclic(6), make_symmetric(4), make_signed_perm(2), make_p4m(4)],
)
def test_breaking_vectors_free(action):
    """random breaking vectors are free without redraws"""
    rng = make_rng(10)
    for _ in range(200):
        v = make_breaking_vector(action, rng)
        assert v.redraws == 0
        assert v.v.shape == vector_shape(action)
        assert is_free(action, v.v)


def test_breaking_vector_redraw_limit():
    """a draw that is never free exhausts the redraw limit"""
    calls = []

    def constant_draw(rng, shape):  # pylint: disable=unused-argument
        calls.append(1)
        return np.ones(shape)

    with pytest.raises(RuntimeError):
        make_breaking_vector(make_cyclic(4), make_rng(0), draw=constant_draw)
    assert len(calls) == MAX_REDRAWS + 1


def test_breaking_vector_redraw():
    """a non-free first draw is redrawn"""
    draws = [np.ones(4), np.array([0.1, 0.2, 0.3, 0.4])]

    def scripted_draw(rng, shape):  # pylint: disable=unused-argument
        return draws.pop(0)

    v = make_breaking_vector(make_cyclic(4), make_rng(0), draw=scripted_draw)
    assert v.redraws == 1


def test_breaking_vector_unsupported_action():
    """breaking vectors need a permutation or linear action"""
    with pytest.raises(ValueError):
        make_breaking_vector(LeftRegularAction(make_cyclic(3).group), make_rng(0))


def test_encode_layouts():
    """channel layout for permutations, columns for linear actions"""
    rng = make_rng(11)
    action = make_cyclic(4)
    v = make_breaking_vector(action, rng)
    encoded = encode(np.arange(4.0), 1, v, action)
    assert encoded.stacked().shape == (2, 4)
    assert np.array_equal(encoded.encoding, action.apply(1, v.v))
    base, encoding = EncodedInput.from_stacked(encoded.stacked()).decompose()
    assert np.array_equal(base, np.arange(4.0))
    assert np.array_equal(encoding, encoded.encoding)

    linear = make_signed_perm(2)
    v_lin = make_breaking_vector(linear, rng)
    stacked = encode(np.array([1.0, 2.0]), 3, v_lin, linear).stacked()
    assert stacked.shape == (2, 3)
    assert np.array_equal(stacked[:, 1:], linear.matrices[3] @ v_lin.v)
    with pytest.raises(ValueError):
        encode(np.ones(3), 0, v_lin, linear)
    with pytest.raises(ValueError):
        encode(np.ones(5), 0, v, action)


@pytest.mark.parametrize(
    "action, point",
    [
        (make_cyclic(6), [1.0, 2.0, 1.0, 2.0, 1.0, 2.0]),
        (make_symmetric(4), [1.0, 1.0, 2.0, 2.0]),
        (make_signed_perm(2), [1.0, 0.0]),
    ],
)
def test_sympe_breaks_symmetry(action, point):
    """every SymPE sample has a trivial stabilizer on a self-symmetric input"""
    point = np.asarray(point)
    rng = make_rng(12)
    assert stabilizer(action, point).order > 1
    v = make_breaking_vector(action, rng)
    canonicalizer = energy_canonicalizer(random_linear_energy(point.shape, 3), action)
    for _ in range(20):
        sample = sympe_forward(lambda y: y, point, canonicalizer, v, action, rng)
        assert stabilizer(action, sample).order == 1


def test_sympe_distributional_equivariance():
    """law of SymPE encodings is equivariant at alpha = 0.01"""
    action = make_symmetric(4)
    point = np.array([1.0, 1.0, 2.0, 2.0])
    rng = make_rng(13)
    v = make_breaking_vector(action, rng)
    canonicalizer = energy_canonicalizer(random_linear_energy((4,), 4), action)

    def sampler(x_val, rng):
        return sympe_forward(lambda y: y, x_val, canonicalizer, v, action, rng)

    report = equicheck.test_distributional_equivariance(
        sampler, action, action, point, 5000, 0.01, rng
    )
    assert report.passed


def test_fixed_element_fails_equivariance():
    """a fixed encoding element is detected as non-equivariant"""
    action = make_symmetric(4)
    point = np.array([1.0, 1.0, 2.0, 2.0])
    rng = make_rng(14)
    v = make_breaking_vector(action, rng)

    def sampler(x_val, rng):  # pylint: disable=unused-argument
        return encode(x_val, action.group.identity, v, action).stacked()

    report = equicheck.test_distributional_equivariance(
        sampler, action, action, point, 1000, 0.01, rng
    )
    assert not report.passed


def test_uniform_kernel_forward():
    """uniform kernel encodings cover the whole orbit of v"""
    action = make_cyclic(3)
    rng = make_rng(15)
    v = make_breaking_vector(action, rng)
    seen = set()
    for _ in range(200):
        stacked = uniform_kernel_forward(lambda y: y, np.zeros(3), v, action, rng)
        seen.add(tuple(stacked[1]))
    assert len(seen) == 3


def test_noise_inject():
    """noise channel is independent of x and has the site shape"""
    action = make_cyclic(5)
    encoded = noise_inject(np.ones(5), make_rng(16), action)
    assert encoded.stacked().shape == (2, 5)
    with pytest.raises(ValueError):
        noise_inject(np.ones(4), make_rng(16), action)
    with pytest.raises(ValueError):
        noise_inject(np.ones(2), make_rng(16), make_signed_perm(2))


def test_relaxed_forward_stabilizer():
    """relaxed outputs at a symmetric input are uniform over stabilizer images"""
    action = make_cyclic(4)
    point = np.array([1.0, 2.0, 1.0, 2.0])
    energy = random_linear_energy((4,), 6)
    weights = np.array([1.0, 2.0, 3.0, 4.0])
    rng = make_rng(17)
    samples = set(
        tuple(
            relaxed_forward(lambda y: y * weights, point, energy, action, action, rng)
        )
        for _ in range(200)
    )
    assert len(samples) == 2


def test_expressivity_witness():
    """f0(x + g v) = f(x, g) for a jointly equivariant f"""
    action = make_cyclic(4)
    rng = make_rng(18)
    v = make_breaking_vector(action, rng)
    group = action.group

    def fcn(x_val, elem):
        # jointly equivariant: f(h x, h g) = h f(x, g)
        return action.apply(elem, np.cumsum(action.apply(group.inverse(elem), x_val)))

    points = [np.array([1.0, 0.0, 0.0, 1.0]), np.array([2.0, 2.0, 2.0, 2.0])]
    f0 = expressivity_witness(fcn, points, action, v)
    for point in points:
        for elem in group.elements:
            stacked = encode(point, elem, v, action).stacked()
            assert np.array_equal(f0(stacked), fcn(point, elem))

    with pytest.raises(ValueError):
        expressivity_witness(fcn, points, action, type(v)(np.ones(4), "permutation"))
