"""canonicalization functions, orbit representatives, and inversion-kernel samplers"""

import logging

import numpy as np

from .groups import PermutationAction, make_symmetric
from .utils import make_rng

# two energies tie iff |E1 - E2| <= TIE_RTOL * max(1, |E1|)
TIE_RTOL = 1.0e-12


class EnergyFunction:
    """
    linear energy E(x) = <weights, x> on points of a fixed shape

    descriptor records how weights were generated
    """

    def __init__(self, weights, descriptor="explicit"):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.weights.setflags(write=False)
        self.descriptor = descriptor

    def evaluate(self, point):
        """energy of a single point"""
        point = np.asarray(point, dtype=np.float64)
        if point.shape != self.weights.shape:
            msg = "point shape %s != energy shape %s" % (
                point.shape,
                self.weights.shape,
            )
            raise ValueError(msg)
        return float(np.dot(point.reshape(-1), self.weights.reshape(-1)))

    def __call__(self, point):
        return self.evaluate(point)

    def orbit_values(self, action, point):
        """array of E(g^-1 x) over all elements g of action.group"""
        if isinstance(action, PermutationAction):
            images = np.asarray(action.apply_inverse_all(point), dtype=np.float64)
            flat = images.reshape(action.group.order, -1)
            # per-row dot products so that equal rows give bit-identical energies
            return np.array([np.dot(row, self.weights.reshape(-1)) for row in flat])
        return np.array(
            [self.evaluate(image) for image in action.apply_inverse_all(point)]
        )


def random_linear_energy(shape, seed):
    """EnergyFunction with Unif(0,1) weights drawn from a generator seeded with seed"""
    weights = make_rng(seed).random(shape)
    return EnergyFunction(weights, descriptor="random_linear(seed=%d)" % seed)


class CanonResult:
    """
    output of a canonicalizer

    tau: chosen element (smallest id in argmin_set for energy canonicalization,
        a sample for sort canonicalization)
    gamma: orbit representative, tau^-1 x
    argmin_set: sorted tuple of element ids minimizing E(g^-1 x), the coset G_x tau,
        or None when it was not enumerated
    energy_value: minimum attained energy
    """

    def __init__(self, tau, gamma, argmin_set, energy_value):
        self.tau = tau
        self.gamma = gamma
        self.argmin_set = argmin_set
        self.energy_value = energy_value

    def __repr__(self):
        argmin_cnt = None if self.argmin_set is None else len(self.argmin_set)
        return "CanonResult(tau=%s, |argmin_set|=%s, energy_value=%r)" % (
            self.tau,
            argmin_cnt,
            self.energy_value,
        )


def argmin_ties(values):
    """indices of values tied with the minimum"""
    values = np.asarray(values)
    emin = values.min()
    tol = TIE_RTOL * max(1.0, abs(float(emin)))
    return np.nonzero(np.abs(values - emin) <= tol)[0]


def energy_canonicalize(energy, action, point):
    """canonicalize point by exhaustive minimization of E(g^-1 x) over the group"""
    logger = logging.getLogger(__name__)

    values = energy.orbit_values(action, point)
    argmin_set = tuple(int(elem) for elem in argmin_ties(values))
    tau = argmin_set[0]
    gamma = action.apply(action.group.inverse(tau), point)
    logger.debug("%s: |argmin_set|=%d", action.group.name, len(argmin_set))
    return CanonResult(tau, gamma, argmin_set, float(values[tau]))


def sample_inversion_kernel(result, rng):
    """uniform sample from result.argmin_set, or tau when the set was not enumerated"""
    if result.argmin_set is None:
        return result.tau
    return result.argmin_set[rng.integers(len(result.argmin_set))]


def descending_ranks(n):
    """rho = [n, n-1, ..., 1], the weights of the sorting energy"""
    return np.arange(n, 0, -1, dtype=np.float64)


def sort_canonicalize(scores, rng, action=None):
    """
    canonicalize scores by sorting, breaking ties by per-index uniform keys

    With action from make_symmetric(n), tau is the id of the sampled permutation and
    argmin_set is the full coset of tie-compatible permutations. Without it, tau is
    the sampled permutation as an index array and argmin_set is None.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1:
        msg = "scores must be a vector, shape=%s" % (scores.shape,)
        raise ValueError(msg)
    tie_keys = rng.random(scores.shape[0])
    # perm[j] is the index of x holding the j-th smallest score, so moving site j
    # of gamma to perm[j] reconstructs x
    perm = np.lexsort((tie_keys, scores))
    gamma = scores[perm]
    energy_value = float(np.dot(gamma, descending_ranks(scores.shape[0])))
    if action is None:
        return CanonResult(perm, gamma, None, energy_value)
    argmin_set = argmin_set_enumerate(action, scores)
    return CanonResult(action.elem_of_perm(perm), gamma, argmin_set, energy_value)


def argmin_set_enumerate(action, scores):
    """
    exact set of permutations g with g^-1 x sorted ascending, for S_n with n <= 8

    these are the minimizers of (g^-1 x) . rho
    """
    scores = np.asarray(scores, dtype=np.float64)
    if action is None:
        action = make_symmetric(scores.shape[0])
    images = action.apply_inverse_all(scores)
    ascending = np.all(images[:, 1:] >= images[:, :-1], axis=1)
    return tuple(int(elem) for elem in np.nonzero(ascending)[0])


def orbit_representative(result):
    """gamma of a CanonResult"""
    return result.gamma


def randomized_canonical_forward(phi, point, energy, action_in, action_out, rng):
    """sample Y = g phi(g^-1 x) with g drawn from the inversion kernel at x"""
    result = energy_canonicalize(energy, action_in, point)
    elem = sample_inversion_kernel(result, rng)
    group = action_in.group
    return action_out.apply(elem, phi(action_in.apply(group.inverse(elem), point)))
