"""
anisotropic Ising model on an L×L torus

Hamiltonian, bond-variable form, ground states, order parameters, lattice symmetry
actions, image encoding, and phase diagrams.
"""

import functools
import logging
from collections import namedtuple
from enum import Enum

import numpy as np

from .groups import PermutationAction, lattice_perms, p4m_point_matrix
from .utils import parallel_map

# energies within TIE_TOL * max(1, |E|) of each other are treated as tied
TIE_TOL = 1.0e-12

# bond states (sigma_i, sigma_j), in one-hot index order
BOND_STATES = ((1, 1), (1, -1), (-1, 1), (-1, -1))


class PhaseLabel(Enum):
    """ground-state phases; STRIPES_Y alternates rows, STRIPES_X alternates columns"""

    FM = "FM"
    AFM = "AFM"
    STRIPES_X = "STRIPES_X"
    STRIPES_Y = "STRIPES_Y"
    BOUNDARY = "BOUNDARY"


# ordered phases, BOUNDARY excluded
PHASES = (PhaseLabel.FM, PhaseLabel.AFM, PhaseLabel.STRIPES_X, PhaseLabel.STRIPES_Y)

# phase codes used in gridded output
PHASE_CODES = {label: code for code, label in enumerate(PhaseLabel)}

OrderParams = namedtuple("OrderParams", ["o_fm", "o_afm", "o_sx", "o_sy"])


class IsingInstance:
    """constant couplings jx, jy and field h on an L×L torus, L even"""

    def __init__(self, side, jx, jy, h):
        if side < 2 or side % 2 != 0:
            msg = "lattice side must be even and >= 2, side=%d" % side
            raise ValueError(msg)
        vals = np.array([jx, jy, h], dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            msg = "non-finite Ising parameters jx=%r, jy=%r, h=%r" % (jx, jy, h)
            raise ValueError(msg)
        self.side = side
        self.jx = float(jx)
        self.jy = float(jy)
        self.h = float(h)

    @property
    def site_cnt(self):
        """number of sites"""
        return self.side * self.side

    def params(self):
        """(jx, jy, h)"""
        return self.jx, self.jy, self.h

    def __eq__(self, other):
        return (self.side, *self.params()) == (other.side, *other.params())

    def __hash__(self):
        return hash((self.side, *self.params()))

    def __repr__(self):
        return "IsingInstance(side=%d, jx=%r, jy=%r, h=%r)" % (
            self.side,
            self.jx,
            self.jy,
            self.h,
        )


def check_spins(sigma, side=None):
    """return sigma as an int8 array, verifying entries are +-1 and shape"""
    sigma = np.asarray(sigma)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        msg = "spin configuration must be square, shape=%s" % (sigma.shape,)
        raise ValueError(msg)
    if side is not None and sigma.shape != (side, side):
        msg = "spin configuration shape %s != (%d, %d)" % (sigma.shape, side, side)
        raise ValueError(msg)
    if not np.all(np.abs(sigma) == 1):
        msg = "spin configuration entries must be +-1"
        raise ValueError(msg)
    return sigma.astype(np.int8)


################################################################################
# energies


def _energy_from_sums(instance, bond_sum_x, bond_sum_y, spin_sum):
    """energy per site from bond and spin sums, scalar or array"""
    return (
        -(instance.jx * bond_sum_x + instance.jy * bond_sum_y + instance.h * spin_sum)
        / instance.site_cnt
    )


def spin_sums(sigma):
    """sum of horizontal bonds, vertical bonds, and spins, as ints"""
    sigma = np.asarray(sigma, dtype=np.int64)
    bond_sum_x = int(np.sum(sigma * np.roll(sigma, -1, axis=-1)))
    bond_sum_y = int(np.sum(sigma * np.roll(sigma, -1, axis=-2)))
    return bond_sum_x, bond_sum_y, int(np.sum(sigma))


def energy_per_site(instance, sigma):
    """H(sigma) / N with each nearest-neighbor bond counted once"""
    sigma = check_spins(sigma, instance.side)
    return float(_energy_from_sums(instance, *spin_sums(sigma)))


def spins_to_bonds(sigma):
    """
    one-hot bond variables b[axis, y, x, state]

    axis 0 holds the bond from (x, y) to (x+1, y), axis 1 the bond to (x, y+1);
    state indexes BOND_STATES
    """
    sigma = check_spins(sigma).astype(np.int64)
    bonds = np.zeros((2,) + sigma.shape + (4,), dtype=np.int8)
    for axis, roll_axis in enumerate([1, 0]):
        neighbor = np.roll(sigma, -1, axis=roll_axis)
        state = (1 - sigma) + (1 - neighbor) // 2
        np.put_along_axis(bonds[axis], state[..., None], 1, axis=-1)
    return bonds


def bonds_to_spins(bonds):
    """spin configuration of feasible bond variables, ValueError if infeasible"""
    bonds = np.asarray(bonds)
    if bonds.ndim != 4 or bonds.shape[0] != 2 or bonds.shape[-1] != 4:
        msg = "bond variables must have shape (2, L, L, 4), shape=%s" % (bonds.shape,)
        raise ValueError(msg)
    if not np.all((bonds == 0) | (bonds == 1)) or not np.all(bonds.sum(axis=-1) == 1):
        msg = "bond variables are not one-hot"
        raise ValueError(msg)
    states = np.asarray(BOND_STATES)[bonds.argmax(axis=-1)]
    sigma = states[0, ..., 0]
    # first spin of both bonds leaving a site, and second spin of both bonds
    # entering it, must agree
    consistent = (
        np.array_equal(states[1, ..., 0], sigma)
        and np.array_equal(np.roll(states[0, ..., 1], 1, axis=1), sigma)
        and np.array_equal(np.roll(states[1, ..., 1], 1, axis=0), sigma)
    )
    if not consistent:
        msg = "bond variables are infeasible, shared spins disagree"
        raise ValueError(msg)
    return sigma.astype(np.int8)


def bond_energy(instance, bonds):
    """total energy in bond-variable form, the field split evenly over both bonds"""
    bonds_to_spins(bonds)
    counts = bonds.sum(axis=(1, 2)).astype(np.float64)
    coupling = np.array([1.0, -1.0, -1.0, 1.0])
    field = 0.5 * np.array([1.0, 0.0, 0.0, -1.0])
    res = -instance.jx * np.dot(coupling, counts[0])
    res -= instance.jy * np.dot(coupling, counts[1])
    res -= instance.h * np.dot(field, counts[0] + counts[1])
    return float(res)


################################################################################
# order parameters and reference configurations


def _parities(side):
    """(-1)^x and (-1)^y on a side×side grid, indexed [y, x]"""
    coords = np.arange(side)
    par_x = np.broadcast_to((-1) ** coords, (side, side))
    par_y = par_x.T
    return par_x, par_y


def order_parameters(sigma):
    """O_FM, O_AFM, O_Sx, O_Sy from integer sums"""
    sigma = check_spins(sigma).astype(np.int64)
    site_cnt = sigma.size
    par_x, par_y = _parities(sigma.shape[0])
    return OrderParams(
        o_fm=int(np.sum(sigma)) / site_cnt,
        o_afm=int(np.sum(par_x * par_y * sigma)) / site_cnt,
        o_sx=int(np.sum(par_x * sigma)) / site_cnt,
        o_sy=int(np.sum(par_y * sigma)) / site_cnt,
    )


def phase_configs(side, label, sign=1):
    """reference configuration of a phase, sign selecting the sublattice"""
    par_x, par_y = _parities(side)
    patterns = {
        PhaseLabel.FM: np.ones((side, side), dtype=np.int64),
        PhaseLabel.AFM: par_x * par_y,
        PhaseLabel.STRIPES_X: par_x,
        PhaseLabel.STRIPES_Y: par_y,
    }
    return (sign * patterns[label]).astype(np.int8)


def phase_energy(instance, label):
    """energy per site of the sign=+1 reference configuration of a phase"""
    return energy_per_site(instance, phase_configs(instance.side, label))


def order_parameter_of(label, params):
    """order parameter associated with a phase"""
    return {
        PhaseLabel.FM: params.o_fm,
        PhaseLabel.AFM: params.o_afm,
        PhaseLabel.STRIPES_X: params.o_sx,
        PhaseLabel.STRIPES_Y: params.o_sy,
    }[label]


################################################################################
# ground states


class GroundState:
    """phase label, representative configurations, and energy per site"""

    def __init__(self, phase, configs, energy, tied_phases):
        self.phase = phase
        self.configs = configs
        self.energy = energy
        self.tied_phases = tied_phases

    def __repr__(self):
        return "GroundState(phase=%s, config_cnt=%d, energy=%r)" % (
            self.phase.value,
            len(self.configs),
            self.energy,
        )


def _is_tied(energy_a, energy_b):
    """tie test for energies per site"""
    return abs(energy_a - energy_b) <= TIE_TOL * max(1.0, abs(energy_a))


def analytic_ground_state(instance):
    """
    ground state as the lowest of the four periodic phases

    Splitting the energy into plaquette terms shows that for even L no
    configuration beats the best of FM, AFM, and the two stripe phases, so this
    competition is exact. Phases tied within TIE_TOL give BOUNDARY, with the
    representatives of every tied phase.
    """
    logger = logging.getLogger(__name__)

    # h < 0 maps to h > 0 under the global flip
    flip = -1 if instance.h < 0.0 else 1
    candidates = []
    for label in PHASES:
        if label == PhaseLabel.FM:
            signs = [flip] if instance.h != 0.0 else [1, -1]
        else:
            signs = [1, -1]
        configs = [phase_configs(instance.side, label, sign) for sign in signs]
        candidates.append((label, configs, energy_per_site(instance, configs[0])))

    energy = min(candidate[2] for candidate in candidates)
    tied = [candidate for candidate in candidates if _is_tied(energy, candidate[2])]
    phase = tied[0][0] if len(tied) == 1 else PhaseLabel.BOUNDARY
    configs = [config for candidate in tied for config in candidate[1]]
    logger.debug("%s: phase=%s, energy=%r", instance, phase.value, energy)
    return GroundState(phase, configs, energy, [candidate[0] for candidate in tied])


@functools.lru_cache(maxsize=4)
def _enumerated_sums(side):
    """bond and spin sums of all 2^(side^2) configurations, config bits little-endian"""
    site_cnt = side * side
    codes = np.arange(2 ** site_cnt, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(site_cnt)) & 1
    sigma = (2 * bits - 1).astype(np.int8).reshape(-1, side, side)
    sums = []
    for axis in [-1, -2]:
        sums.append(
            np.sum(sigma * np.roll(sigma, -1, axis=axis), axis=(1, 2), dtype=np.int64)
        )
    sums.append(np.sum(sigma, axis=(1, 2), dtype=np.int64))
    for vals in sums:
        vals.setflags(write=False)
    return tuple(sums)


def config_of_code(code, side):
    """spin configuration enumerated with index code"""
    bits = (int(code) >> np.arange(side * side)) & 1
    return (2 * bits - 1).astype(np.int8).reshape(side, side)


def brute_force_ground_state(instance, max_sites=20):
    """minimum energy per site and all minimizing configurations, by enumeration"""
    if instance.site_cnt > max_sites:
        msg = "brute force over %d sites exceeds max_sites=%d" % (
            instance.site_cnt,
            max_sites,
        )
        raise ValueError(msg)
    bond_sum_x, bond_sum_y, spin_sum = _enumerated_sums(instance.side)
    energies = _energy_from_sums(instance, bond_sum_x, bond_sum_y, spin_sum)
    energy = float(energies.min())
    tol = TIE_TOL * max(1.0, abs(energy))
    codes = np.nonzero(np.abs(energies - energy) <= tol)[0]
    configs = np.array([config_of_code(code, instance.side) for code in codes])
    return energy, configs


################################################################################
# symmetry actions


def apply_p4m(action, elem, obj):
    """
    transform an IsingInstance or spin configuration by a p4m element

    instances are unchanged by translations and reflections, and swap jx and jy
    under elements whose point-group part exchanges the axes
    """
    if isinstance(obj, IsingInstance):
        matrix = p4m_point_matrix(action, elem)
        if matrix[0, 1] != 0:
            return IsingInstance(obj.side, obj.jy, obj.jx, obj.h)
        return IsingInstance(obj.side, obj.jx, obj.jy, obj.h)
    return action.apply(elem, check_spins(obj, action.site_shape[0]))


def image_encode(instance):
    """
    2-channel (2L)×(2L) image of an instance, indexed [channel, py, px]

    channel 0 holds jx at (2i+1, 2j) and jy at (2i, 2j+1), channel 1 holds h at
    site pixels (2i, 2j); hole pixels (2i+1, 2j+1) are 0
    """
    pix = 2 * instance.side
    image = np.zeros((2, pix, pix))
    image[0, 0::2, 1::2] = instance.jx
    image[0, 1::2, 0::2] = instance.jy
    image[1, 0::2, 0::2] = instance.h
    return image


def image_action(action):
    """
    action of p4m(L) on (2L)×(2L) pixel grids, pixel p -> M p + 2 t mod 2L

    requires L >= 4, where distinct group elements act distinctly on pixels
    """
    side = action.site_shape[0]
    if side < 4:
        msg = "image action needs lattice side >= 4, side=%d" % side
        raise ValueError(msg)
    pix = 2 * side
    perms = np.empty((action.group.order, pix * pix), dtype=np.int64)
    pair_perms = {}
    for elem in action.group.elements:
        tx, ty, mat_ind = action.group.labels[elem]
        if mat_ind not in pair_perms:
            matrix = p4m_point_matrix(action, elem)
            pair_perms[mat_ind], _ = lattice_perms(pix, [matrix], step=2)
        perms[elem] = pair_perms[mat_ind][ty * side + tx]
    return PermutationAction(action.group, perms, site_shape=(pix, pix))


def site_pixels(image):
    """values of an image at lattice-site pixels (2i, 2j)"""
    return np.asarray(image)[..., 0::2, 0::2]


################################################################################
# corpora and phase diagrams


def random_corpus(
    rng, size, side, jx=-1.0, jy_range=(-3.0, 3.0), h_range=(0.0, 2.0)
):
    """instances with fixed jx and uniformly drawn jy, h"""
    jy_vals = rng.uniform(jy_range[0], jy_range[1], size=size)
    h_vals = rng.uniform(h_range[0], h_range[1], size=size)
    return [IsingInstance(side, jx, jy, h) for jy, h in zip(jy_vals, h_vals)]


def dyadic_corpus(rng, size, side, denom=8, bound=3.0):
    """
    instances with jx, jy, h on a 1/denom grid in [-bound, bound]

    half of the instances are placed exactly on a phase boundary, so that energies
    are exact binary fractions and ties are detected exactly
    """
    grid = np.arange(-bound * denom, bound * denom + 1) / denom
    res = []
    for ind in range(size):
        jx, jy, h = rng.choice(grid, size=3)
        if ind % 2 == 1:
            # solve for the parameter putting two phase energies level
            kind = rng.integers(3)
            if kind == 0:
                # AFM vs STRIPES_X: jx + jy = jx - jy
                jy = 0.0
            elif kind == 1:
                # FM vs AFM: -jx - jy - h = jx + jy
                jy = -jx - h / 2.0
            else:
                # FM vs STRIPES_Y: -jx - jy - h = -jx + jy
                jy = -h / 2.0
        res.append(IsingInstance(side, jx, jy, h))
    return res


def phase_diagram_point(args):
    """record for one (jy, h) grid point"""
    side, jx, jy, h = args
    instance = IsingInstance(side, jx, jy, h)
    ground_state = analytic_ground_state(instance)
    params = order_parameters(ground_state.configs[0])
    return {
        "jy": float(jy),
        "h": float(h),
        "phase": ground_state.phase.value,
        "o_fm": abs(params.o_fm),
        "o_afm": abs(params.o_afm),
        "o_sx": abs(params.o_sx),
        "o_sy": abs(params.o_sy),
        "energy_per_site": ground_state.energy,
    }


def phase_diagram(
    jx=-1.0,
    jy_range=(-3.0, 3.0),
    h_range=(0.0, 2.0),
    resolution=(61, 41),
    side=4,
    thread_cnt=1,
):
    """
    analytic ground-state records on a jy × h grid, h varying fastest

    BOUNDARY rows carry the order parameters of the first tied phase in
    (FM, AFM, STRIPES_X, STRIPES_Y) order
    """
    logger = logging.getLogger(__name__)

    jy_res, h_res = resolution
    if jy_res < 2 or h_res < 2:
        msg = "phase diagram resolution must be >= 2, resolution=%s" % (resolution,)
        raise ValueError(msg)
    if not jy_range[0] < jy_range[1] or not h_range[0] < h_range[1]:
        msg = "phase diagram ranges must be increasing, jy=%s, h=%s" % (
            jy_range,
            h_range,
        )
        raise ValueError(msg)
    jy_vals = np.linspace(jy_range[0], jy_range[1], jy_res)
    h_vals = np.linspace(h_range[0], h_range[1], h_res)
    args_list = [(side, jx, jy, h) for jy in jy_vals for h in h_vals]
    records = parallel_map(phase_diagram_point, args_list, thread_cnt)
    logger.info("phase diagram with %d points", len(records))
    return jy_vals, h_vals, records
