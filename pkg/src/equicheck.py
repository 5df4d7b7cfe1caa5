"""
verification engines for symmetry properties

Curie's principle, distributional equivariance tests, inversion-kernel entropy,
Reynolds projections, and the generalization-gap identity.
"""

import logging
from fractions import Fraction

import numpy as np
from scipy.stats import entropy

from .canon import CanonResult
from .groups import point_key, points_equal, stabilizer
from .utils import parallel_map, spawn_rngs

# smallest sample count accepted by test_distributional_equivariance
MIN_SAMPLES = 100


################################################################################
# Curie's principle


def check_curie(f, action_in, action_out, point):
    """
    check that every element fixing x also fixes f(x)

    returns (True, None) or (False, witness element)
    """
    f_point = f(point)
    for elem in stabilizer(action_in, point):
        if not points_equal(action_out.apply(elem, f_point), f_point):
            return False, elem
    return True, None


################################################################################
# empirical conditionals and distributional equivariance


class EmpiricalConditional:
    """histogram of samples of Y given X = x, keyed by point_key"""

    def __init__(self, condition, samples=()):
        self.condition = condition
        self.counts = {}
        self.points = {}
        for sample in samples:
            self.add(sample)

    @property
    def sample_cnt(self):
        """number of samples"""
        return sum(self.counts.values())

    def add(self, sample, cnt=1):
        """add cnt copies of sample"""
        key = point_key(sample)
        self.counts[key] = self.counts.get(key, 0) + cnt
        self.points.setdefault(key, sample)

    def merge(self, other):
        """histogram of the samples of self and other"""
        res = EmpiricalConditional(self.condition)
        for hist in [self, other]:
            for key, cnt in hist.counts.items():
                res.add(hist.points[key], cnt)
        return res

    def pushforward(self, elem, action_out, action_in=None):
        """histogram of g y for samples y, conditioned on g x if action_in is given"""
        condition = self.condition
        if action_in is not None and condition is not None:
            condition = action_in.apply(elem, condition)
        res = EmpiricalConditional(condition)
        for key, cnt in self.counts.items():
            res.add(action_out.apply(elem, self.points[key]), cnt)
        return res

    def pmf(self):
        """dict of key to relative frequency"""
        sample_cnt = self.sample_cnt
        return {key: cnt / sample_cnt for key, cnt in self.counts.items()}

    def same_counts(self, other):
        """true if both histograms hold identical counts"""
        return self.counts == other.counts


def tv_distance(hist_a, hist_b):
    """total variation distance between the empirical laws of two histograms"""
    pmf_a, pmf_b = hist_a.pmf(), hist_b.pmf()
    keys = set(pmf_a).union(pmf_b)
    return 0.5 * sum(abs(pmf_a.get(key, 0.0) - pmf_b.get(key, 0.0)) for key in keys)


def tv_threshold(sample_cnt, alpha, test_cnt):
    """two-sample TV threshold sqrt(2 log(2K/alpha) / N) with a union bound over K"""
    return float(np.sqrt(2.0 * np.log(2.0 * test_cnt / alpha) / sample_cnt))


class EquivarianceReport:
    """per-element records of a distributional equivariance test"""

    def __init__(self, name, records, threshold):
        self.name = name
        self.records = records
        self.threshold = threshold

    @property
    def passed(self):
        """true if every tested element passed"""
        return all(record["passed"] for record in self.records)

    @property
    def max_statistic(self):
        """largest TV distance over tested elements"""
        return max(record["statistic"] for record in self.records)

    def summary(self):
        """single record summarizing the test"""
        return {
            "name": self.name,
            "statistic": self.max_statistic,
            "threshold": self.threshold,
            "passed": self.passed,
        }


def _sample_hist(args):
    """histogram of sample_cnt draws of sampler at point"""
    sampler, point, sample_cnt, rng, batched = args
    if batched:
        return EmpiricalConditional(point, sampler(point, rng, sample_cnt))
    return EmpiricalConditional(
        point, [sampler(point, rng) for _ in range(sample_cnt)]
    )


def test_distributional_equivariance(
    sampler,
    action_in,
    action_out,
    point,
    sample_cnt,
    alpha,
    rng,
    elems=None,
    name="distributional_equivariance",
    batched=False,
    thread_cnt=1,
):
    """
    compare the law of Y | g x with the g-pushforward of the law of Y | x

    sampler(x, rng) returns one sample, or sampler(x, rng, cnt) a list of cnt
    samples if batched; each element in elems (default all) is tested at the
    threshold tv_threshold(sample_cnt, alpha, len(elems))
    """
    logger = logging.getLogger(__name__)

    if sample_cnt < MIN_SAMPLES:
        msg = "sample_cnt=%d < %d is too small" % (sample_cnt, MIN_SAMPLES)
        raise ValueError(msg)
    if not 0.0 < alpha < 1.0:
        msg = "alpha=%r must be in (0, 1)" % alpha
        raise ValueError(msg)

    elems = list(action_in.group.elements) if elems is None else list(elems)
    threshold = tv_threshold(sample_cnt, alpha, len(elems))
    rngs = spawn_rngs(rng, len(elems) + 1)
    args_list = [(sampler, point, sample_cnt, rngs[0], batched)]
    args_list.extend(
        (sampler, action_in.apply(elem, point), sample_cnt, elem_rng, batched)
        for elem, elem_rng in zip(elems, rngs[1:])
    )
    hists = parallel_map(_sample_hist, args_list, thread_cnt)

    records = []
    for elem, hist_gx in zip(elems, hists[1:]):
        pushed = hists[0].pushforward(elem, action_out, action_in)
        statistic = tv_distance(hist_gx, pushed)
        records.append(
            {
                "name": "%s[g=%d]" % (name, elem),
                "statistic": statistic,
                "threshold": threshold,
                "passed": statistic <= threshold,
            }
        )
    report = EquivarianceReport(name, records, threshold)
    logger.info(
        "%s: max TV %.4g, threshold %.4g, passed=%s",
        name,
        report.max_statistic,
        threshold,
        report.passed,
    )
    return report


# not a pytest test function, even when imported into a test module
test_distributional_equivariance.__test__ = False


################################################################################
# inversion-kernel entropy


def kernel_entropy(kernel):
    """
    Shannon entropy in nats

    kernel is a CanonResult (uniform over its argmin set) or a pmf array
    """
    if isinstance(kernel, CanonResult):
        return float(np.log(len(kernel.argmin_set)))
    pmf = np.asarray(kernel, dtype=np.float64)
    if np.any(pmf < 0.0) or abs(pmf.sum() - 1.0) > 1.0e-12:
        msg = "kernel is not a normalized pmf"
        raise ValueError(msg)
    return float(entropy(pmf))


def equivariant_kernels_single_orbit(action, point, weight_vals=(1, 2)):
    """
    pmfs over G of kernels P(g | x) that are equivariant at x

    Equivariance at x requires P(h g | x) = P(g | x) for h in G_x, i.e. pmfs
    constant on right cosets G_x g. Enumerates all assignments of weights from
    {0} + weight_vals to the right cosets, normalized, excluding all zeros.
    """
    group = action.group
    stab = stabilizer(action, point)
    cosets, seen = [], set()
    for elem in group.elements:
        if elem not in seen:
            coset = sorted(group.compose(member, elem) for member in stab)
            seen.update(coset)
            cosets.append(coset)

    vals = (0,) + tuple(weight_vals)
    pmfs = []
    for code in range(1, len(vals) ** len(cosets)):
        weights = []
        for _ in cosets:
            code, ind = divmod(code, len(vals))
            weights.append(vals[ind])
        if sum(weights) == 0:
            continue
        pmf = np.zeros(group.order)
        for coset, weight in zip(cosets, weights):
            pmf[coset] = weight
        pmfs.append(pmf / pmf.sum())
    return pmfs


################################################################################
# Reynolds projections


def _exact_mean(terms):
    """componentwise mean of float arrays, exactly rounded"""
    terms = [np.asarray(term, dtype=np.float64) for term in terms]
    shape = terms[0].shape
    flat = [term.reshape(-1) for term in terms]
    res = np.empty(flat[0].shape)
    for ind in range(res.size):
        total = sum((Fraction(float(term[ind])) for term in flat), Fraction(0))
        res[ind] = float(total / len(flat))
    return res.reshape(shape)


class TabulatedFunction:
    """function defined by a table on a finite grid of points"""

    def __init__(self, grid, values):
        self.grid = list(grid)
        self.values = [np.asarray(value) for value in values]
        self._index = {point_key(point): ind for ind, point in enumerate(self.grid)}

    def __call__(self, *point):
        key = point_key(point[0] if len(point) == 1 else tuple(point))
        if key not in self._index:
            msg = "point is not on the grid of TabulatedFunction"
            raise ValueError(msg)
        return self.values[self._index[key]]

    def index(self, point):
        """grid index of point, or None"""
        return self._index.get(point_key(point))


def _check_closed(action, grid, index_fcn):
    """table of grid indices of g p, raising ValueError if the grid is not closed"""
    table = np.empty((action.group.order, len(grid)), dtype=np.int64)
    for elem in action.group.elements:
        for ind, point in enumerate(grid):
            image_ind = index_fcn(action.apply(elem, point))
            if image_ind is None:
                msg = "grid is not closed under action of %s" % action.group.name
                raise ValueError(msg)
            table[elem, ind] = image_ind
    return table


def reynolds_project(f, action_in, action_out, grid):
    """
    tabulated (R f)(p) = (1/|G|) sum_g g^-1 f(g p) on grid

    points p of grid are acted on by action_in (a DiagonalAction for (x, z) pairs);
    action_out must act exactly on outputs (permutations, signed permutations)
    """
    group = action_in.group
    grid = list(grid)
    lookup = {point_key(point): ind for ind, point in enumerate(grid)}
    image_inds = _check_closed(action_in, grid, lambda p: lookup.get(point_key(p)))
    f_vals = [
        np.asarray(f(*point) if isinstance(point, tuple) else f(point))
        for point in grid
    ]
    values = []
    for ind in range(len(grid)):
        terms = [
            action_out.apply(group.inverse(elem), f_vals[image_inds[elem, ind]])
            for elem in group.elements
        ]
        values.append(_exact_mean(terms))
    return TabulatedFunction(grid, values)


def reynolds_project_kernel(pmf_table, action_x, action_y, x_grid, y_grid):
    """
    (R p)(y | x) = (1/|G|) sum_g p(g y | g x) for a pmf table indexed [x, y]

    x_grid and y_grid must be closed under action_x and action_y
    """
    pmf_table = np.asarray(pmf_table, dtype=np.float64)
    if pmf_table.shape != (len(x_grid), len(y_grid)):
        msg = "pmf_table shape %s != (%d, %d)" % (
            pmf_table.shape,
            len(x_grid),
            len(y_grid),
        )
        raise ValueError(msg)
    row_sums = pmf_table.sum(axis=1)
    if np.any(pmf_table < 0.0) or np.any(np.abs(row_sums - 1.0) > 1.0e-12):
        msg = "pmf_table rows are not normalized pmfs"
        raise ValueError(msg)

    x_lookup = {point_key(point): ind for ind, point in enumerate(x_grid)}
    y_lookup = {point_key(point): ind for ind, point in enumerate(y_grid)}
    x_inds = _check_closed(action_x, x_grid, lambda p: x_lookup.get(point_key(p)))
    y_inds = _check_closed(action_y, y_grid, lambda p: y_lookup.get(point_key(p)))

    terms = [
        pmf_table[x_inds[elem]][:, y_inds[elem]] for elem in action_x.group.elements
    ]
    return _exact_mean(terms)


################################################################################
# generalization gap


class GapReport:
    """Monte Carlo estimates for the identity R(f) - R(fbar) = ||f_perp||^2"""

    def __init__(self, risk_f, risk_fbar, orth_norm_sq, monte_carlo_stderr):
        self.risk_f = risk_f
        self.risk_fbar = risk_fbar
        self.orth_norm_sq = orth_norm_sq
        self.monte_carlo_stderr = monte_carlo_stderr

    @property
    def gap(self):
        """R(f) - R(fbar)"""
        return self.risk_f - self.risk_fbar

    @property
    def discrepancy(self):
        """|gap - ||f_perp||^2|"""
        return abs(self.gap - self.orth_norm_sq)

    @property
    def passed(self):
        """true if the identity holds within 4 standard errors"""
        return self.discrepancy <= 4.0 * self.monte_carlo_stderr + 1.0e-12

    def __repr__(self):
        return (
            "GapReport(risk_f=%.6g, risk_fbar=%.6g, orth_norm_sq=%.6g, stderr=%.3g)"
            % (self.risk_f, self.risk_fbar, self.orth_norm_sq, self.monte_carlo_stderr)
        )


def generalization_gap(
    f, y_sampler, x_sampler, z_sampler, action_xz, action_y, sample_cnt, rng
):
    """
    Monte Carlo estimate of R(f), R(fbar), and ||f - fbar||^2

    x is symmetrized by a uniform group element after x_sampler; z ~ z_sampler(x, rng),
    y ~ y_sampler(x, rng). fbar(x, z) = (1/|G|) sum_g g^-1 f(g x, g z), memoized by
    point key since samplers in scope have finite support.
    """
    group = action_xz.group
    action_x = action_xz.actions[0]
    fbar_memo = {}

    def fbar(x_val, z_val):
        key = point_key((x_val, z_val))
        if key not in fbar_memo:
            terms = []
            for elem in group.elements:
                gx, gz = action_xz.apply(elem, (x_val, z_val))
                f_val = np.asarray(f(gx, gz))
                terms.append(action_y.apply(group.inverse(elem), f_val))
            fbar_memo[key] = np.mean(terms, axis=0)
        return fbar_memo[key]

    diffs = np.empty(sample_cnt)
    risks_f = np.empty(sample_cnt)
    risks_fbar = np.empty(sample_cnt)
    orths = np.empty(sample_cnt)
    for ind in range(sample_cnt):
        x_val = action_x.apply(int(rng.integers(group.order)), x_sampler(rng))
        z_val = z_sampler(x_val, rng)
        y_val = np.asarray(y_sampler(x_val, rng))
        f_val = np.asarray(f(x_val, z_val))
        fbar_val = fbar(x_val, z_val)
        risks_f[ind] = np.sum((f_val - y_val) ** 2)
        risks_fbar[ind] = np.sum((fbar_val - y_val) ** 2)
        orths[ind] = np.sum((f_val - fbar_val) ** 2)
        diffs[ind] = risks_f[ind] - risks_fbar[ind] - orths[ind]

    stderr = float(np.std(diffs, ddof=1) / np.sqrt(sample_cnt))
    return GapReport(
        float(risks_f.mean()), float(risks_fbar.mean()), float(orths.mean()), stderr
    )
