"""battery of invariant checks run by the verify command"""

import logging

import numpy as np
import yaml

from . import graphdemo, ising
from .canon import (
    argmin_set_enumerate,
    energy_canonicalize,
    random_linear_energy,
    randomized_canonical_forward,
    sample_inversion_kernel,
    sort_canonicalize,
)
from .equicheck import (
    EmpiricalConditional,
    check_curie,
    equivariant_kernels_single_orbit,
    generalization_gap,
    kernel_entropy,
    test_distributional_equivariance,
    tv_distance,
    tv_threshold,
)
from .groups import (
    DiagonalAction,
    LeftRegularAction,
    LinearAction,
    PermutationAction,
    check_group_axioms,
    conjugate,
    make_cyclic,
    make_p4m,
    make_signed_perm,
    make_symmetric,
    orbit,
    stabilizer,
)
from .sympe import (
    encode,
    energy_canonicalizer,
    make_breaking_vector,
    sympe_forward,
)
from .utils import spawn_rngs

# keys of every verify record
RECORD_KEYS = ("name", "statistic", "threshold", "passed")

# z-score bound for inversion-kernel frequencies
FREQ_Z_MAX = 5.0

# samples per fixture when checking that SymPE breaks a stabilizer
BREAK_SAMPLES = 20

# largest number of candidate kernels enumerated with two non-zero weights
MAX_KERNEL_ENUM = 10000


def load_fixtures(fname):
    """fixture definitions from a YAML file"""
    with open(fname, mode="r") as fptr:
        return yaml.safe_load(fptr)


def build_action(entry):
    """group action from a fixture group definition"""
    kind = entry["kind"]
    if kind == "cyclic":
        return make_cyclic(entry["n"])
    if kind == "symmetric":
        return make_symmetric(entry["n"])
    if kind == "signed_perm":
        return make_signed_perm(entry["n"])
    if kind == "p4m":
        return make_p4m(entry["side"])
    msg = "unknown group kind %s" % kind
    raise ValueError(msg)


def point_shape(action):
    """shape of points acted on by action"""
    if isinstance(action, PermutationAction):
        return action.site_shape
    if isinstance(action, LinearAction):
        return (action.dim,)
    msg = "no point shape for %s" % type(action)
    raise ValueError(msg)


def fixture_point(action, entry):
    """point of a self_symmetric_points entry"""
    if isinstance(entry, str):
        return ising.phase_configs(
            action.site_shape[0], ising.PhaseLabel[entry]
        ).astype(np.float64)
    point = np.asarray(entry, dtype=np.float64)
    if point.shape != point_shape(action):
        msg = "fixture point shape %s != %s" % (point.shape, point_shape(action))
        raise ValueError(msg)
    return point


def equivariant_fixture(action):
    """exactly equivariant map on points of action, for Curie checks"""
    if isinstance(action, LinearAction):
        return lambda x: x * np.dot(x, x)
    if len(action.site_shape) == 2:
        return lambda x: x + sum(
            np.roll(x, shift, axis=axis) for shift in (-1, 1) for axis in (0, 1)
        )
    return lambda x: x ** 2 + x.mean()


def _record(name, statistic, threshold, passed):
    """verify record with plain python types"""
    return {
        "name": name,
        "statistic": float(statistic),
        "threshold": float(threshold),
        "passed": bool(passed),
    }


class VerifySuite:
    """
    invariant checks over fixture groups

    break_kernel replaces the sampled SymPE element by the identity, a negative
    control that must fail the distributional check
    """

    def __init__(
        self, fixtures, seed, sample_cnt, alpha, break_kernel=False, thread_cnt=1
    ):
        if sample_cnt < 100:
            msg = "verify sample count %d must be >= 100" % sample_cnt
            raise ValueError(msg)
        if not 0.0 < alpha < 1.0:
            msg = "verify alpha=%r must be in (0, 1)" % alpha
            raise ValueError(msg)
        self.fixtures = fixtures
        self.seed = seed
        self.sample_cnt = sample_cnt
        self.alpha = alpha
        self.break_kernel = break_kernel
        self.thread_cnt = thread_cnt
        self.actions = {
            name: build_action(entry) for name, entry in fixtures["groups"].items()
        }
        self.points = {
            name: [
                fixture_point(self.actions[name], entry)
                for entry in fixtures["self_symmetric_points"].get(name, [])
            ]
            for name in self.actions
        }

    def checks(self):
        """check methods in the order they are run"""
        return [
            self.check_groups,
            self.check_argmin_sets,
            self.check_sort_kernel,
            self.check_curie,
            self.check_sympe_distribution,
            self.check_canonical_forward,
            self.check_graph_embedding,
            self.check_breaking_vectors,
            self.check_kernel_entropy,
            self.check_generalization_gap,
            self.check_ising,
        ]

    def run(self, rng):
        """generator of verify records, each check with its own rng stream"""
        logger = logging.getLogger(__name__)

        checks = self.checks()
        for check, check_rng in zip(checks, spawn_rngs(rng, len(checks))):
            logger.info("running %s", check.__name__)
            for record in check(check_rng):
                level = logging.DEBUG if record["passed"] else logging.WARNING
                logger.log(level, "%s", record)
                yield record

    ############################################################################
    # groups

    def check_groups(self, rng):
        """axioms, orbit-stabilizer, and stabilizer conjugation"""
        records = []
        for name, action in self.actions.items():
            passed = check_group_axioms(action.group)
            records.append(_record("group_axioms[%s]" % name, 1 - passed, 0, passed))
            random_point = rng.integers(0, 2, size=point_shape(action)).astype(float)
            for ind, point in enumerate(self.points[name] + [random_point]):
                stab = stabilizer(action, point)
                product = len(orbit(action, point)) * stab.order
                records.append(
                    _record(
                        "orbit_stabilizer[%s,%d]" % (name, ind),
                        abs(product - action.group.order),
                        0,
                        product == action.group.order,
                    )
                )
                mismatches = sum(
                    stabilizer(action, action.apply(elem, point))
                    != conjugate(stab, elem)
                    for elem in action.group.elements
                )
                records.append(
                    _record(
                        "stabilizer_conjugation[%s,%d]" % (name, ind),
                        mismatches,
                        0,
                        mismatches == 0,
                    )
                )
        return records

    ############################################################################
    # canonicalization

    def check_argmin_sets(self, rng):
        """argmin_set(g x) = g argmin_set(x), and uniform inversion-kernel samples"""
        corpus = self.fixtures["argmin_corpus"]
        records = []
        for name, action in self.actions.items():
            group = action.group
            energy = random_linear_energy(point_shape(action), self.seed)
            mismatches = 0
            for _ in range(corpus["size"]):
                point = rng.integers(0, corpus["levels"], size=point_shape(action))
                point = point.astype(np.float64)
                argmin_set = energy_canonicalize(energy, action, point).argmin_set
                for elem in group.elements:
                    moved = energy_canonicalize(
                        energy, action, action.apply(elem, point)
                    )
                    expected = sorted(group.compose(elem, tau) for tau in argmin_set)
                    mismatches += list(moved.argmin_set) != expected
            records.append(
                _record(
                    "argmin_set_equivariance[%s]" % name,
                    mismatches,
                    0,
                    mismatches == 0,
                )
            )

            if not self.points[name]:
                continue
            result = energy_canonicalize(energy, action, self.points[name][0])
            size = len(result.argmin_set)
            counts = np.zeros(group.order)
            members = list(result.argmin_set)
            for _ in range(self.sample_cnt):
                counts[sample_inversion_kernel(result, rng)] += 1
            expected = self.sample_cnt / size
            if size > 1:
                sigma = np.sqrt(self.sample_cnt * (1.0 / size) * (1.0 - 1.0 / size))
                z_max = np.max(np.abs(counts[members] - expected)) / sigma
            else:
                z_max = 0.0
            outside = counts.sum() - counts[members].sum()
            records.append(
                _record(
                    "inversion_kernel_uniform[%s]" % name,
                    z_max,
                    FREQ_Z_MAX,
                    z_max <= FREQ_Z_MAX and outside == 0,
                )
            )
        return records

    def check_sort_kernel(self, rng):
        """sorted gamma, and uniform law of sampled permutations on the tie coset"""
        records = []
        for ind, scores in enumerate(self.fixtures["sort_scores"]):
            scores = np.asarray(scores, dtype=np.float64)
            action = make_symmetric(len(scores))
            argmin_set = argmin_set_enumerate(action, scores)
            hist = EmpiricalConditional(scores)
            unsorted = 0
            for _ in range(self.sample_cnt):
                result = sort_canonicalize(scores, rng, action)
                unsorted += not np.all(np.diff(result.gamma) >= 0.0)
                hist.add(result.tau)
            records.append(_record("sort_gamma[%d]" % ind, unsorted, 0, unsorted == 0))
            statistic = tv_distance(hist, EmpiricalConditional(scores, argmin_set))
            threshold = tv_threshold(self.sample_cnt, self.alpha, 1)
            records.append(
                _record(
                    "sort_kernel_law[%d]" % ind,
                    statistic,
                    threshold,
                    statistic <= threshold,
                )
            )
        return records

    ############################################################################
    # Curie's principle and SymPE

    def check_curie(self, rng):
        """Curie holds for equivariant maps, SymPE samples break the stabilizer"""
        records = []
        for name, action in self.actions.items():
            fcn = equivariant_fixture(action)
            energy = random_linear_energy(point_shape(action), self.seed)
            v = make_breaking_vector(action, rng)
            for ind, point in enumerate(self.points[name]):
                holds, _ = check_curie(fcn, action, action, point)
                records.append(
                    _record("curie[%s,%d]" % (name, ind), 1 - holds, 0, holds)
                )
                stab_order = stabilizer(action, point).order
                canonicalizer = energy_canonicalizer(energy, action)
                samples = [
                    sympe_forward(lambda y: y, point, canonicalizer, v, action, rng)
                    for _ in range(BREAK_SAMPLES)
                ]
                smallest = min(stabilizer(action, y).order for y in samples)
                records.append(
                    _record(
                        "sympe_breaks_symmetry[%s,%d]" % (name, ind),
                        smallest,
                        stab_order,
                        smallest < stab_order,
                    )
                )
        return records

    def check_sympe_distribution(self, rng):
        """law of SymPE encodings is equivariant"""
        entry = self.fixtures["sympe_fixture"]
        action = self.actions[entry["group"]]
        point = fixture_point(action, entry["point"])
        energy = random_linear_energy(point_shape(action), self.seed)
        canonicalizer = energy_canonicalizer(energy, action)
        v = make_breaking_vector(action, rng)

        if self.break_kernel:

            def sampler(x_val, rng):  # pylint: disable=unused-argument
                return encode(x_val, action.group.identity, v, action).stacked()

        else:

            def sampler(x_val, rng):
                return sympe_forward(lambda y: y, x_val, canonicalizer, v, action, rng)

        report = test_distributional_equivariance(
            sampler,
            action,
            action,
            point,
            self.sample_cnt,
            self.alpha,
            rng,
            name="sympe_equivariance[%s]" % entry["group"],
            thread_cnt=self.thread_cnt,
        )
        return [report.summary()]

    def check_canonical_forward(self, rng):
        """law of randomized canonicalization outputs is equivariant"""
        entry = self.fixtures["canonical_forward_fixture"]
        action = self.actions[entry["group"]]
        point = fixture_point(action, entry["point"])
        energy = random_linear_energy(point_shape(action), self.seed)
        weights = np.arange(1.0, point.size + 1.0).reshape(point.shape)

        def sampler(x_val, rng):
            return randomized_canonical_forward(
                lambda y: y * weights, x_val, energy, action, action, rng
            )

        report = test_distributional_equivariance(
            sampler,
            action,
            action,
            point,
            self.sample_cnt,
            self.alpha,
            rng,
            name="canonical_forward_equivariance[%s]" % entry["group"],
            thread_cnt=self.thread_cnt,
        )
        return [report.summary()]

    def check_graph_embedding(self, rng):
        """law of sympe_embed is equivariant under node relabeling"""
        graph = graphdemo.named_graph(self.fixtures["graph_fixture"])
        node_action = make_symmetric(graph.n)
        v = graphdemo.node_breaking_vector(graph.n, rng)

        def sampler(adjacency, rng):
            return graphdemo.sympe_embed(graphdemo.SmallGraph(adjacency), v, rng).T

        report = test_distributional_equivariance(
            sampler,
            graphdemo.adjacency_action(node_action),
            node_action,
            graph.adjacency,
            self.sample_cnt,
            self.alpha,
            rng,
            name="sympe_embed_equivariance[%s]" % graph.name,
            thread_cnt=self.thread_cnt,
        )
        return [report.summary()]

    def check_breaking_vectors(self, rng):
        """random breaking vectors are free without redraws"""
        draws = self.fixtures["breaking_vectors"]["draws"]
        records = []
        for name, action in self.actions.items():
            redraws = sum(
                make_breaking_vector(action, rng).redraws for _ in range(draws)
            )
            records.append(
                _record("breaking_vector_redraws[%s]" % name, redraws, 0, redraws == 0)
            )
        return records

    def check_kernel_entropy(self, rng):  # pylint: disable=unused-argument
        """inversion kernel entropy is log|G_x| and minimal among equivariant kernels"""
        records = []
        for name, action in self.actions.items():
            energy = random_linear_energy(point_shape(action), self.seed)
            for ind, point in enumerate(self.points[name]):
                stab_order = stabilizer(action, point).order
                log_stab = np.log(stab_order)
                result = energy_canonicalize(energy, action, point)
                diff = abs(kernel_entropy(result) - log_stab)
                records.append(
                    _record(
                        "kernel_entropy[%s,%d]" % (name, ind), diff, 0.0, diff == 0.0
                    )
                )
                coset_cnt = action.group.order // stab_order
                weight_vals = (1, 2) if 3 ** coset_cnt <= MAX_KERNEL_ENUM else (1,)
                min_entropy = min(
                    kernel_entropy(pmf)
                    for pmf in equivariant_kernels_single_orbit(
                        action, point, weight_vals
                    )
                )
                records.append(
                    _record(
                        "kernel_entropy_minimal[%s,%d]" % (name, ind),
                        log_stab - min_entropy,
                        1.0e-12,
                        log_stab - min_entropy <= 1.0e-12,
                    )
                )
        return records

    ############################################################################
    # generalization gap

    def check_generalization_gap(self, rng):
        """R(f) - R(fbar) = ||f - fbar||^2 for three fixtures of C_n"""
        entry = self.fixtures["generalization_gap"]
        side = entry["side"]
        action_x = make_cyclic(side)
        action_xz = DiagonalAction([action_x, LeftRegularAction(action_x.group)])
        bit_weights = 2 ** np.arange(side)

        def mean_map(x_val):
            return x_val + 0.5 * np.roll(x_val, 1)

        def x_sampler(rng):
            return rng.integers(0, 2, size=side).astype(np.float64)

        def z_sampler(x_val, rng):  # pylint: disable=unused-argument
            return int(rng.integers(action_x.group.order))

        def y_sampler(x_val, rng):
            return mean_map(x_val) + 0.3 * rng.standard_normal(side)

        const = np.linspace(-1.0, 2.0, side)
        table = rng.standard_normal((2 ** side, action_x.group.order, side))
        fixtures = {
            "equivariant": lambda x_val, z_val: mean_map(x_val),
            "constant": lambda x_val, z_val: const,
            "tabulated": lambda x_val, z_val: table[int(bit_weights @ x_val), z_val],
        }
        records = []
        for name, fcn in fixtures.items():
            report = generalization_gap(
                fcn,
                y_sampler,
                x_sampler,
                z_sampler,
                action_xz,
                action_x,
                entry["sample_cnt"],
                rng,
            )
            threshold = 4.0 * report.monte_carlo_stderr + 1.0e-12
            records.append(
                _record(
                    "generalization_gap[%s]" % name,
                    report.discrepancy,
                    threshold,
                    report.passed,
                )
            )
            if name == "constant":
                closed_form = float(np.sum((const - const.mean()) ** 2))
                diff = abs(report.orth_norm_sq - closed_form)
                records.append(
                    _record("orthogonal_norm[constant]", diff, 1.0e-12, diff <= 1.0e-12)
                )
        return records

    ############################################################################
    # Ising

    def check_ising(self, rng):
        """oracle equivalence, bond form, and p4m invariance"""
        entry = self.fixtures["ising"]
        side = entry["side"]
        records = []

        max_diff = 0.0
        for instance in ising.dyadic_corpus(rng, entry["oracle_size"], side):
            analytic = ising.analytic_ground_state(instance).energy
            brute, _ = ising.brute_force_ground_state(instance)
            max_diff = max(max_diff, abs(analytic - brute))
        records.append(_record("ising_oracle", max_diff, 0.0, max_diff == 0.0))

        max_diff = 0.0
        instance = ising.random_corpus(rng, 1, side)[0]
        for _ in range(entry["bond_form_configs"]):
            sigma = rng.choice([-1, 1], size=(side, side))
            bond_val = ising.bond_energy(instance, ising.spins_to_bonds(sigma))
            direct = ising.energy_per_site(instance, sigma) * instance.site_cnt
            max_diff = max(max_diff, abs(bond_val - direct))
        records.append(
            _record("ising_bond_form", max_diff, 1.0e-12, max_diff <= 1.0e-12)
        )

        for label, p4m_side, elem_cnt in [
            ("p4m(%d)" % side, side, None),
            ("p4m(8)", 8, entry["p4m8_elems"]),
        ]:
            action = make_p4m(p4m_side)
            pixel_action = ising.image_action(action)
            instance = ising.random_corpus(rng, 1, p4m_side)[0]
            sigma = rng.choice([-1, 1], size=(p4m_side, p4m_side))
            energy = ising.energy_per_site(instance, sigma)
            image = ising.image_encode(instance)
            elems = action.group.elements
            if elem_cnt is not None:
                elems = rng.choice(action.group.order, size=elem_cnt, replace=False)
            energy_mismatches, encode_mismatches = 0, 0
            for elem in elems:
                moved = ising.apply_p4m(action, elem, instance)
                moved_energy = ising.energy_per_site(
                    moved, ising.apply_p4m(action, elem, sigma)
                )
                energy_mismatches += moved_energy != energy
                encode_mismatches += not np.array_equal(
                    ising.image_encode(moved), pixel_action.apply(elem, image)
                )
            records.append(
                _record(
                    "ising_p4m_invariance[%s]" % label,
                    energy_mismatches,
                    0,
                    energy_mismatches == 0,
                )
            )
            records.append(
                _record(
                    "ising_encode_commutation[%s]" % label,
                    encode_mismatches,
                    0,
                    encode_mismatches == 0,
                )
            )
        return records
