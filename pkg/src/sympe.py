"""symmetry-breaking positional encodings, the SymPE pipeline, and noise injection"""

import logging

import numpy as np

from .canon import energy_canonicalize, sample_inversion_kernel
from .groups import (
    LinearAction,
    PermutationAction,
    point_key,
    points_equal,
    stabilizer,
)

# redraws of a breaking vector before the action is declared not faithful
MAX_REDRAWS = 8


class SymPEVector:
    """
    vector on which the acting group acts freely

    v is site-shaped for permutation actions and an n×n matrix of column vectors for
    linear actions
    """

    def __init__(self, v, representation, seed=None, redraws=0):
        self.v = np.asarray(v, dtype=np.float64)
        self.representation = representation
        self.seed = seed
        self.redraws = redraws

    def __repr__(self):
        return "SymPEVector(representation=%s, shape=%s, redraws=%d)" % (
            self.representation,
            self.v.shape,
            self.redraws,
        )


def _representation(action):
    """representation tag of action, rejecting unsupported action types"""
    if isinstance(action, PermutationAction):
        return "permutation"
    if isinstance(action, LinearAction):
        return "linear"
    msg = "breaking vectors need a permutation or linear action, got %s" % type(
        action
    )
    raise ValueError(msg)


def vector_shape(action):
    """shape of breaking vectors for action"""
    if _representation(action) == "permutation":
        return action.site_shape
    return (action.dim, action.dim)


def is_free(action, v):
    """true if only the identity fixes v"""
    return stabilizer(action, v).order == 1


def make_breaking_vector(action, rng, draw=None, seed=None):
    """
    draw a vector with Unif(0,1) entries on which action acts freely

    draw(rng, shape) overrides the default uniform draw; candidates that some
    non-identity element fixes are redrawn, at most MAX_REDRAWS times
    """
    logger = logging.getLogger(__name__)

    representation = _representation(action)
    shape = vector_shape(action)
    if draw is None:
        draw = _draw_uniform
    for redraws in range(MAX_REDRAWS + 1):
        candidate = draw(rng, shape)
        if is_free(action, candidate):
            if redraws > 0:
                logger.debug("breaking vector accepted after %d redraws", redraws)
            return SymPEVector(candidate, representation, seed, redraws)
        logger.debug("breaking vector candidate %d has non-trivial stabilizer", redraws)
    msg = "no free breaking vector for %s after %d redraws, action not faithful?" % (
        action.group.name,
        MAX_REDRAWS,
    )
    raise RuntimeError(msg)


def _draw_uniform(rng, shape):
    """Unif(0,1) entries"""
    return rng.random(shape)


class EncodedInput:
    """
    x with the encoding g v appended as an extra channel

    layout "channel": for permutation actions the encoding is stacked along a new
    leading axis of x; for linear actions its columns are appended to those of x
    """

    def __init__(self, base, encoding, layout="channel"):
        self.base = np.asarray(base)
        self.encoding = np.asarray(encoding)
        self.layout = layout

    def stacked(self):
        """single array holding base and encoding"""
        if self.layout == "channel":
            return np.concatenate([self.base[None], self.encoding[None]])
        return np.column_stack([self.base, self.encoding])

    def decompose(self):
        """base and encoding"""
        return self.base, self.encoding

    @classmethod
    def from_stacked(cls, stacked, layout="channel"):
        """inverse of stacked"""
        stacked = np.asarray(stacked)
        if layout == "channel":
            return cls(stacked[0], stacked[1], layout)
        return cls(stacked[:, 0], stacked[:, 1:], layout)


def encode(point, g_tilde, v, action):
    """x concatenated with g_tilde v"""
    point = np.asarray(point)
    if v.representation == "permutation":
        if point.shape != action.site_shape:
            msg = "point shape %s != site shape %s" % (point.shape, action.site_shape)
            raise ValueError(msg)
        return EncodedInput(point, action.apply(g_tilde, v.v), layout="channel")
    if point.shape != (action.dim,):
        msg = "point shape %s != representation dim (%d,)" % (point.shape, action.dim)
        raise ValueError(msg)
    return EncodedInput(point, action.apply(g_tilde, v.v), layout="columns")


def sympe_forward(f0, point, canonicalizer, v, action, rng):
    """
    one sample of f0(x + g v) with g from the inversion kernel of canonicalizer

    canonicalizer(x, rng) returns a CanonResult
    """
    result = canonicalizer(point, rng)
    g_tilde = sample_inversion_kernel(result, rng)
    return f0(encode(point, g_tilde, v, action).stacked())


def energy_canonicalizer(energy, action):
    """canonicalizer for sympe_forward based on energy_canonicalize"""

    def canonicalizer(point, rng):  # pylint: disable=unused-argument
        return energy_canonicalize(energy, action, point)

    return canonicalizer


def uniform_kernel_forward(f0, point, v, action, rng):
    """one sample of f0(x + g v) with g uniform over the whole group"""
    g_tilde = int(rng.integers(action.group.order))
    return f0(encode(point, g_tilde, v, action).stacked())


def noise_inject(point, rng, action):
    """x with an iid standard normal channel appended, independent of x"""
    if not isinstance(action, PermutationAction):
        msg = "noise injection needs a permutation action, got %s" % type(action)
        raise ValueError(msg)
    point = np.asarray(point)
    if point.shape != action.site_shape:
        msg = "point shape %s != site shape %s" % (point.shape, action.site_shape)
        raise ValueError(msg)
    return EncodedInput(point, rng.standard_normal(action.site_shape))


def relaxed_forward(phi, point, energy, action_in, action_out, rng):
    """
    sample g_x f(x) with g_x uniform over the stabilizer of x

    f(x) = tau(x) phi(gamma(x)) extends phi from orbit representatives
    """
    result = energy_canonicalize(energy, action_in, point)
    f_point = action_out.apply(result.tau, phi(result.gamma))
    stab = stabilizer(action_in, point)
    g_x = stab.members[rng.integers(stab.order)]
    return action_out.apply(g_x, f_point)


def expressivity_witness(f, points, action, v):
    """
    lookup table f0 with f0(x + g v) = f(x, g) for a jointly equivariant f

    raises ValueError if g -> g v is not injective or the table would not be well
    defined on the given points
    """
    group = action.group
    encodings = [point_key(action.apply(elem, v.v)) for elem in group.elements]
    if len(set(encodings)) != group.order:
        msg = "g -> g v is not injective on %s" % group.name
        raise ValueError(msg)

    table = {}
    for point in points:
        for elem in group.elements:
            key = point_key(encode(point, elem, v, action).stacked())
            val = np.asarray(f(point, elem))
            if key in table and not points_equal(table[key], val):
                msg = "f0 not well defined at element %d of %s" % (elem, group.name)
                raise ValueError(msg)
            table[key] = val

    def f0(stacked):
        return table[point_key(stacked)]

    return f0
