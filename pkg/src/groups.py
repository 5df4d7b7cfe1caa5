"""finite groups, their actions, and derived structure (orbits, stabilizers, cosets)"""

import itertools
import logging

import numpy as np

# rounding applied to reals before points are hashed or compared by key
POINT_KEY_DECIMALS = 9

# largest order for which a SymmetricGroup materializes its compose table
DENSE_TABLE_MAX_ORDER = 720


class FiniteGroup:
    """
    finite group with dense integer element ids and precomputed tables

    Element 0 is always the identity. compose_table[a, b] is the id of a*b, where
    a*b acts as "apply b, then a".
    """

    def __init__(self, name, compose_table, labels=None):
        compose_table = np.asarray(compose_table, dtype=np.int64)
        order = compose_table.shape[0]
        if compose_table.shape != (order, order) or order == 0:
            msg = "compose_table for %s must be square and non-empty, shape=%s" % (
                name,
                compose_table.shape,
            )
            raise ValueError(msg)
        if compose_table.min() < 0 or compose_table.max() >= order:
            msg = "compose_table for %s is not closed" % name
            raise ValueError(msg)
        if not np.array_equal(compose_table[0], np.arange(order)):
            msg = "element 0 of %s is not the identity" % name
            raise ValueError(msg)

        self.name = name
        self.compose_table = compose_table
        self.compose_table.setflags(write=False)
        self.labels = list(range(order)) if labels is None else list(labels)

        inverse_rows, inverse_cols = np.nonzero(compose_table == 0)
        if len(inverse_rows) != order:
            msg = "%s does not have unique inverses" % name
            raise ValueError(msg)
        self.inverse_table = np.empty(order, dtype=np.int64)
        self.inverse_table[inverse_rows] = inverse_cols
        self.inverse_table.setflags(write=False)

    @classmethod
    def from_arrays(cls, name, arrays, product, labels=None):
        """
        build a group from distinct integer arrays closed under product

        arrays[0] must represent the identity
        """
        arrays = np.asarray(arrays)
        lookup = {array.tobytes(): ind for ind, array in enumerate(arrays)}
        if len(lookup) != len(arrays):
            msg = "arrays generating %s are not distinct" % name
            raise ValueError(msg)
        order = len(arrays)
        compose_table = np.empty((order, order), dtype=np.int64)
        for ind_a, array_a in enumerate(arrays):
            for ind_b, array_b in enumerate(arrays):
                key = np.ascontiguousarray(product(array_a, array_b)).tobytes()
                if key not in lookup:
                    msg = "arrays generating %s are not closed under product" % name
                    raise ValueError(msg)
                compose_table[ind_a, ind_b] = lookup[key]
        return cls(name, compose_table, labels)

    @classmethod
    def from_permutations(cls, name, perms, labels=None):
        """build a group from distinct permutations closed under composition"""
        perms = np.asarray(perms, dtype=np.int64)
        order = perms.shape[0]
        # integer fingerprints locate candidate ids, exact comparison confirms them
        weights = np.random.Generator(np.random.Philox(0)).integers(
            -(2 ** 62), 2 ** 62, size=perms.shape[1], dtype=np.int64
        )
        keys = perms @ weights
        sort_inds = np.argsort(keys, kind="stable")
        sorted_keys = keys[sort_inds]
        if np.any(sorted_keys[1:] == sorted_keys[:-1]):
            return cls.from_arrays(name, perms, _perm_product, labels)
        compose_table = np.empty((order, order), dtype=np.int64)
        for ind_a, perm_a in enumerate(perms):
            composed = perm_a[perms]
            locs = np.searchsorted(sorted_keys, composed @ weights)
            locs = np.minimum(locs, order - 1)
            ids = sort_inds[locs]
            if not np.array_equal(perms[ids], composed):
                msg = "permutations generating %s are not closed" % name
                raise ValueError(msg)
            compose_table[ind_a] = ids
        return cls(name, compose_table, labels)

    @property
    def order(self):
        """number of elements"""
        return self.compose_table.shape[0]

    @property
    def identity(self):
        """id of identity element"""
        return 0

    @property
    def elements(self):
        """ids of all elements"""
        return range(self.order)

    def compose(self, elem_a, elem_b):
        """id of elem_a * elem_b"""
        return int(self.compose_table[elem_a, elem_b])

    def inverse(self, elem):
        """id of inverse of elem"""
        return int(self.inverse_table[elem])

    def power(self, elem, exponent):
        """id of elem composed with itself exponent times"""
        res = self.identity
        for _ in range(exponent):
            res = self.compose(elem, res)
        return res

    def elem_order(self, elem):
        """smallest positive k with elem^k = identity"""
        res, cnt = elem, 1
        while res != self.identity:
            res, cnt = self.compose(elem, res), cnt + 1
        return cnt

    def __repr__(self):
        return "FiniteGroup(name=%s, order=%d)" % (self.name, self.order)


class SymmetricGroup(FiniteGroup):
    """
    S_n with elements numbered by lexicographic rank of their permutations

    compose and inverse work on permutations and ranks, so no order×order table is
    held; compose_table is built on first access, for orders up to
    DENSE_TABLE_MAX_ORDER
    """

    def __init__(self, n):  # pylint: disable=super-init-not-called
        self.name = "S%d" % n
        self.perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
        self.perms.setflags(write=False)
        self.labels = [tuple(int(val) for val in perm) for perm in self.perms]
        # weight of position i in the lexicographic rank is (n-1-i)!
        self._rank_weights = np.array(
            [np.prod(np.arange(1, n - ind), dtype=np.int64) for ind in range(n)],
            dtype=np.int64,
        )
        self.inverse_table = self.lex_rank(np.argsort(self.perms, axis=1))
        self.inverse_table.setflags(write=False)
        self._compose_table = None

    def lex_rank(self, perms):
        """lexicographic ranks of permutations, one per row of perms"""
        perms = np.atleast_2d(np.asarray(perms, dtype=np.int64))
        later_smaller = np.zeros(perms.shape, dtype=np.int64)
        for ind in range(perms.shape[1] - 1):
            later_smaller[:, ind] = np.sum(
                perms[:, ind + 1 :] < perms[:, ind : ind + 1], axis=1
            )
        return later_smaller @ self._rank_weights

    @property
    def order(self):
        """number of elements"""
        return self.perms.shape[0]

    @property
    def compose_table(self):
        """dense table of compose, built on first access"""
        if self._compose_table is None:
            if self.order > DENSE_TABLE_MAX_ORDER:
                msg = "compose table of %s has %d^2 entries, limit is %d^2" % (
                    self.name,
                    self.order,
                    DENSE_TABLE_MAX_ORDER,
                )
                raise ValueError(msg)
            table = np.stack([self.lex_rank(perm[self.perms]) for perm in self.perms])
            table.setflags(write=False)
            self._compose_table = table
        return self._compose_table

    def compose(self, elem_a, elem_b):
        """id of elem_a * elem_b"""
        return int(self.lex_rank(self.perms[elem_a][self.perms[elem_b]])[0])


def _perm_product(perm_a, perm_b):
    """permutation sending i to perm_a[perm_b[i]]"""
    return perm_a[perm_b]


def check_group_axioms(group):
    """exhaustively verify closure, associativity, identity, and inverse laws"""
    table = group.compose_table
    order = group.order
    elements = np.arange(order)
    if table.min() < 0 or table.max() >= order:
        return False
    if not np.array_equal(table[0], elements) or not np.array_equal(
        table[:, 0], elements
    ):
        return False
    inverse = group.inverse_table
    if np.any(table[elements, inverse] != 0) or np.any(table[inverse, elements] != 0):
        return False
    for elem_a in elements:
        # (a*b)*c == a*(b*c) for all b, c
        lhs = table[table[elem_a]]
        rhs = table[elem_a][table]
        if not np.array_equal(lhs, rhs):
            return False
    return True


################################################################################
# point keys


def point_key(point):
    """
    canonical byte form of a point, with reals rounded to POINT_KEY_DECIMALS

    points are ints, numpy arrays, or tuples of these
    """
    if isinstance(point, tuple):
        return b"(" + b",".join(point_key(item) for item in point) + b")"
    if isinstance(point, (int, np.integer)):
        return b"i" + np.asarray(point, dtype="<i8").tobytes()
    array = np.asarray(point)
    shape = np.asarray(array.shape, dtype="<i8").tobytes()
    if array.dtype.kind in "iub":
        return b"I" + shape + array.astype("<i8").tobytes()
    # adding 0.0 maps -0.0 to 0.0
    rounded = np.round(array.astype(np.float64), POINT_KEY_DECIMALS) + 0.0
    return b"F" + shape + rounded.astype("<f8").tobytes()


def points_equal(point_a, point_b):
    """exact equality of points"""
    if isinstance(point_a, tuple):
        return (
            isinstance(point_b, tuple)
            and len(point_a) == len(point_b)
            and all(points_equal(a, b) for a, b in zip(point_a, point_b))
        )
    return np.array_equal(np.asarray(point_a), np.asarray(point_b))


################################################################################
# group actions


class GroupAction:
    """base class for actions of a FiniteGroup on a space of points"""

    def __init__(self, group):
        self.group = group

    def apply(self, elem, point):
        """image of point under elem"""
        raise NotImplementedError

    def apply_all(self, point):
        """list of images of point under every element, in element order"""
        return [self.apply(elem, point) for elem in self.group.elements]

    def apply_inverse_all(self, point):
        """list of images of point under the inverse of every element"""
        return [
            self.apply(self.group.inverse(elem), point)
            for elem in self.group.elements
        ]


class PermutationAction(GroupAction):
    """
    action by permutation of sites

    perms[g][i] is the site that site i is moved to by g, so that
    apply(g, x)[..., perms[g][i]] = x[..., i]. Sites are the trailing axes of
    points, with shape site_shape, and any leading axes are carried along.
    """

    def __init__(self, group, perms, site_shape=None):
        super().__init__(group)
        perms = np.asarray(perms, dtype=np.int64)
        if perms.shape[0] != group.order:
            msg = "perms count %d != group order %d" % (perms.shape[0], group.order)
            raise ValueError(msg)
        self.perms = perms
        self.inv_perms = np.argsort(perms, axis=1)
        self.site_cnt = perms.shape[1]
        self.site_shape = (self.site_cnt,) if site_shape is None else tuple(site_shape)
        if int(np.prod(self.site_shape)) != self.site_cnt:
            msg = "site_shape %s inconsistent with %d sites" % (
                self.site_shape,
                self.site_cnt,
            )
            raise ValueError(msg)
        self._perm_lookup = {perm.tobytes(): ind for ind, perm in enumerate(perms)}

    def _flat(self, point):
        """view of point with sites flattened into the last axis"""
        point = np.asarray(point)
        site_ndim = len(self.site_shape)
        if point.shape[point.ndim - site_ndim :] != self.site_shape:
            msg = "point shape %s does not end in site_shape %s" % (
                point.shape,
                self.site_shape,
            )
            raise ValueError(msg)
        return point.reshape(point.shape[: point.ndim - site_ndim] + (-1,))

    def apply(self, elem, point):
        """image of point under elem"""
        point = np.asarray(point)
        flat = self._flat(point)
        return flat[..., self.inv_perms[elem]].reshape(point.shape)

    def apply_all(self, point):
        """array of images of point under every element, element axis leading"""
        point = np.asarray(point)
        flat = self._flat(point)
        res = np.moveaxis(flat[..., self.inv_perms], -2, 0)
        return res.reshape((self.group.order,) + point.shape)

    def apply_inverse_all(self, point):
        """array of images of point under the inverse of every element"""
        point = np.asarray(point)
        flat = self._flat(point)
        res = np.moveaxis(flat[..., self.perms], -2, 0)
        return res.reshape((self.group.order,) + point.shape)

    def elem_of_perm(self, perm):
        """id of element inducing perm"""
        key = np.asarray(perm, dtype=np.int64).tobytes()
        if key not in self._perm_lookup:
            msg = "permutation is not induced by any element of %s" % self.group.name
            raise ValueError(msg)
        return self._perm_lookup[key]


class LinearAction(GroupAction):
    """action by matrices, apply(g, x) = matrices[g] @ x"""

    def __init__(self, group, matrices):
        super().__init__(group)
        self.matrices = np.asarray(matrices)
        self.dim = self.matrices.shape[1]

    def apply(self, elem, point):
        """image of point under elem"""
        point = np.asarray(point)
        if point.shape[0] != self.dim:
            msg = "point leading dim %d != representation dim %d" % (
                point.shape[0],
                self.dim,
            )
            raise ValueError(msg)
        return self.matrices[elem] @ point


class LeftRegularAction(GroupAction):
    """action of a group on its own element ids by left multiplication"""

    def apply(self, elem, point):
        """image of point under elem"""
        return self.group.compose(elem, point)


class DiagonalAction(GroupAction):
    """product action on tuples of points, one component action per entry"""

    def __init__(self, actions):
        super().__init__(actions[0].group)
        for action in actions[1:]:
            if action.group is not self.group:
                msg = "component actions of DiagonalAction must share a group"
                raise ValueError(msg)
        self.actions = list(actions)

    def apply(self, elem, point):
        """image of point under elem"""
        if len(point) != len(self.actions):
            msg = "point has %d components, action expects %d" % (
                len(point),
                len(self.actions),
            )
            raise ValueError(msg)
        return tuple(
            action.apply(elem, item) for action, item in zip(self.actions, point)
        )


################################################################################
# subgroups and derived structure


class Subgroup:
    """subset of a FiniteGroup closed under compose and inverse"""

    def __init__(self, parent, members):
        self.parent = parent
        self.members = tuple(sorted(set(int(member) for member in members)))
        self._member_set = frozenset(self.members)

    def check(self):
        """verify that members contain the identity and are closed"""
        if self.parent.identity not in self._member_set:
            return False
        for elem_a in self.members:
            if self.parent.inverse(elem_a) not in self._member_set:
                return False
            for elem_b in self.members:
                if self.parent.compose(elem_a, elem_b) not in self._member_set:
                    return False
        return True

    @property
    def order(self):
        """number of members"""
        return len(self.members)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, elem):
        return int(elem) in self._member_set

    def __eq__(self, other):
        return self.parent is other.parent and self.members == other.members

    def __hash__(self):
        return hash((id(self.parent), self.members))

    def __repr__(self):
        return "Subgroup(parent=%s, order=%d)" % (self.parent.name, self.order)


def stabilizer(action, point):
    """subgroup of elements fixing point, by exhaustive check"""
    members = [
        elem
        for elem, image in zip(action.group.elements, action.apply_all(point))
        if points_equal(image, point)
    ]
    return Subgroup(action.group, members)


def orbit(action, point):
    """list of distinct images of point, in order of first appearance"""
    res = {}
    for image in action.apply_all(point):
        res.setdefault(point_key(image), image)
    return list(res.values())


def left_coset(subgroup, elem):
    """sorted element ids of elem * subgroup"""
    group = subgroup.parent
    return sorted(group.compose(elem, member) for member in subgroup)


def right_coset(subgroup, elem):
    """sorted element ids of subgroup * elem"""
    group = subgroup.parent
    return sorted(group.compose(member, elem) for member in subgroup)


def conjugate(subgroup, elem):
    """subgroup elem * subgroup * elem^-1"""
    group = subgroup.parent
    elem_inv = group.inverse(elem)
    return Subgroup(
        group,
        [group.compose(group.compose(elem, member), elem_inv) for member in subgroup],
    )


################################################################################
# group constructors


def make_cyclic(n):
    """
    cyclic group C_n acting on length-n vectors by index shift

    element k sends site i to (i + k) mod n, so shift-1 maps [a, b, c] to [c, a, b]
    """
    if n < 1:
        msg = "cyclic group order must be positive, n=%d" % n
        raise ValueError(msg)
    perms = [(np.arange(n) + shift) % n for shift in range(n)]
    labels = ["shift-%d" % shift for shift in range(n)]
    group = FiniteGroup.from_permutations("C%d" % n, perms, labels)
    return PermutationAction(group, perms)


def make_symmetric(n, max_n=8):
    """symmetric group S_n acting by index permutation, lexicographic element order"""
    if n < 1:
        msg = "symmetric group degree must be positive, n=%d" % n
        raise ValueError(msg)
    if n > max_n:
        msg = "symmetric group degree n=%d exceeds %d, %d! elements is too many" % (
            n,
            max_n,
            n,
        )
        raise ValueError(msg)
    group = SymmetricGroup(n)
    return PermutationAction(group, group.perms)


def signed_perm_matrices(n):
    """
    all n×n signed permutation matrices, identity first

    matrix with (M x)_i = sign_i * x_{perm_i}, ordered by perm then sign
    """
    matrices = []
    for perm in itertools.permutations(range(n)):
        for signs in itertools.product([1, -1], repeat=n):
            matrix = np.zeros((n, n), dtype=np.int64)
            matrix[np.arange(n), perm] = signs
            matrices.append(matrix)
    return np.array(matrices)


def make_signed_perm(n, max_n=3):
    """
    hyperoctahedral group of signed permutation matrices acting linearly on R^n

    n=2 is the point group D4 of the square, n=1 is C2 acting by sign
    """
    if n < 1 or n > max_n:
        msg = "signed permutation dimension n=%d must be in [1, %d]" % (n, max_n)
        raise ValueError(msg)
    matrices = signed_perm_matrices(n)
    labels = [tuple(map(tuple, matrix.tolist())) for matrix in matrices]
    name = {1: "C2", 2: "D4"}.get(n, "B%d" % n)
    group = FiniteGroup.from_arrays(name, matrices, np.matmul, labels)
    return LinearAction(group, matrices)


# counterclockwise quarter turn in (x, y) coordinates with y pointing down
ROT90 = np.array([[0, 1], [-1, 0]], dtype=np.int64)

# reflections across the vertical and horizontal axes
FLIP_X = np.array([[-1, 0], [0, 1]], dtype=np.int64)
FLIP_Y = np.array([[1, 0], [0, -1]], dtype=np.int64)


def d4_elem(matrix):
    """id in D4 = make_signed_perm(2) of a 2×2 signed permutation matrix"""
    matrices = signed_perm_matrices(2)
    for ind, candidate in enumerate(matrices):
        if np.array_equal(candidate, matrix):
            return ind
    msg = "matrix %s is not in D4" % np.asarray(matrix).tolist()
    raise ValueError(msg)


def lattice_perms(side, matrices, step=1):
    """
    site permutations of (translation, point-group matrix) pairs on a side×side torus

    site (x, y) has index y*side + x and is sent to M (x, y) + step*(tx, ty);
    returns perms and labels (tx, ty, matrix index), translations varying fastest
    """
    coords_y, coords_x = np.divmod(np.arange(side * side), side)
    coords = np.stack([coords_x, coords_y])
    perms, labels = [], []
    for mat_ind, matrix in enumerate(matrices):
        moved = matrix @ coords
        for ty in range(side // step):
            for tx in range(side // step):
                new_x = (moved[0] + step * tx) % side
                new_y = (moved[1] + step * ty) % side
                perms.append(new_y * side + new_x)
                labels.append((tx, ty, mat_ind))
    return np.array(perms, dtype=np.int64), labels


def make_p4m(side, max_side=16):
    """
    wallpaper group p4m acting on the sites of a side×side torus

    elements are (translation, D4 element) pairs deduplicated by induced site
    permutation; labels hold the first (tx, ty, D4 id) pair inducing each one
    """
    logger = logging.getLogger(__name__)

    if side < 2 or side % 2 != 0:
        msg = "p4m lattice side must be even and >= 2, side=%d" % side
        raise ValueError(msg)
    if side > max_side:
        msg = "p4m lattice side=%d exceeds %d" % (side, max_side)
        raise ValueError(msg)

    perms, labels = lattice_perms(side, signed_perm_matrices(2))
    _, first_inds = np.unique(perms, axis=0, return_index=True)
    keep = np.sort(first_inds)
    if len(keep) < len(perms):
        logger.debug(
            "p4m(%d): %d pairs induce %d distinct permutations",
            side,
            len(perms),
            len(keep),
        )
    perms = perms[keep]
    labels = [labels[ind] for ind in keep]
    group = FiniteGroup.from_permutations("p4m(%d)" % side, perms, labels)
    return PermutationAction(group, perms, site_shape=(side, side))


def p4m_elem(action, tx=0, ty=0, matrix=None):
    """id of the p4m element x -> matrix x + (tx, ty) for action from make_p4m"""
    side = action.site_shape[0]
    matrix = np.eye(2, dtype=np.int64) if matrix is None else np.asarray(matrix)
    perms, _ = lattice_perms(side, [matrix])
    return action.elem_of_perm(perms[(ty % side) * side + (tx % side)])


def p4m_point_matrix(action, elem):
    """D4 matrix of p4m element elem"""
    return signed_perm_matrices(2)[action.group.labels[elem][2]]


def pmm_subgroup(action):
    """subgroup of p4m of translations composed with axis reflections"""
    diag = [ind for ind, mat in enumerate(signed_perm_matrices(2)) if mat[0, 1] == 0]
    members = [
        elem
        for elem in action.group.elements
        if action.group.labels[elem][2] in diag
    ]
    return Subgroup(action.group, members)
