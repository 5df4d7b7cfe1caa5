"""
tiny p4m-equivariant group convolutional network for Ising ground states

Features live on (rotation, pixel) pairs of the pixel grid of an image_encode image.
Gradients are computed by a manual backward pass. Training minimizes the expected
energy of independent spins with up-probabilities read off at lattice-site pixels.
"""

import logging

import numpy as np

from . import ising
from .canon import energy_canonicalize, random_linear_energy, sample_inversion_kernel
from .groups import (
    ROT90,
    make_p4m,
    make_signed_perm,
    p4m_elem,
    p4m_point_matrix,
    point_key,
)
from .report_file import read_json, write_json
from .sympe import make_breaking_vector
from .utils import parallel_map, spawn_rngs

VARIANTS = ("vanilla", "sympe", "noise", "canon")

# filter offsets (dx, dy), dy varying slowest
OFFSETS = np.array([(dx, dy) for dy in (-1, 0, 1) for dx in (-1, 0, 1)])

# probabilities are kept this far from 0 and 1
PROB_EPS = 1.0e-12

# spin samples per instance in evaluate
SPIN_SAMPLES = 16


def _d4_tables():
    """D4 matrices, compose table, and offset index permutation per rotation"""
    d4 = make_signed_perm(2)
    offset_lookup = {tuple(offset): ind for ind, offset in enumerate(OFFSETS)}
    offset_perms = np.array(
        [
            [offset_lookup[tuple(matrix @ offset)] for offset in OFFSETS]
            for matrix in d4.matrices
        ]
    )
    return d4.matrices, np.asarray(d4.group.compose_table), offset_perms


D4_MATRICES, D4_COMPOSE, OFFSET_PERMS = _d4_tables()
D4_ORDER = len(D4_MATRICES)


def _shift(array, offset):
    """out[..., y, x] = array[..., y + dy, x + dx] with periodic wrap"""
    return np.roll(array, (-offset[1], -offset[0]), axis=(-2, -1))


def _unshift(array, offset):
    """adjoint of _shift"""
    return np.roll(array, (offset[1], offset[0]), axis=(-2, -1))


def _sigmoid(vals):
    """numerically stable logistic function"""
    res = np.empty_like(vals)
    pos = vals >= 0.0
    res[pos] = 1.0 / (1.0 + np.exp(-vals[pos]))
    exp_vals = np.exp(vals[~pos])
    res[~pos] = exp_vals / (1.0 + exp_vals)
    return res


def _expand_lifting(w1):
    """w1[c, i, k] placed per rotation r at rotated offset index"""
    res = np.empty((D4_ORDER,) + w1.shape)
    for rot in range(D4_ORDER):
        res[rot][:, :, OFFSET_PERMS[rot]] = w1
    return res


def _expand_group_conv(w2):
    """w2[c, j, s, k] placed per rotation r at (r s, rotated offset index)"""
    res = np.empty((D4_ORDER,) + w2.shape)
    for rot in range(D4_ORDER):
        rows = D4_COMPOSE[rot][:, None]
        cols = OFFSET_PERMS[rot][None, :]
        res[rot][:, :, rows, cols] = w2
    return res


class GroupConvNet:
    """
    lifting layer, one group convolution, rotation pooling, sigmoid head

    params:
        w1 (C1, Cin, 9), b1 (C1,): lifting filters over 3×3 offsets
        w2 (C2, C1, 8, 9), b2 (C2,): group filters over (D4 element, offset)
        a (C2,), u (Cin,), a0 (): head weights on pooled features and raw inputs
    """

    PARAM_NAMES = ("w1", "b1", "w2", "b2", "a", "u", "a0")

    def __init__(self, params):
        self.params = {
            name: np.asarray(params[name], dtype=np.float64)
            for name in self.PARAM_NAMES
        }

    @classmethod
    def initial(cls, in_channels, channels, rng):
        """randomly initialized network"""
        chan1, chan2 = channels
        if max(channels) > 8 or min(channels) < 1:
            msg = "channel widths %s must be in [1, 8]" % (channels,)
            raise ValueError(msg)
        offset_cnt = len(OFFSETS)
        params = {
            "w1": rng.standard_normal((chan1, in_channels, offset_cnt))
            / np.sqrt(in_channels * offset_cnt),
            "b1": np.zeros(chan1),
            "w2": rng.standard_normal((chan2, chan1, D4_ORDER, offset_cnt))
            / np.sqrt(chan1 * D4_ORDER * offset_cnt),
            "b2": np.zeros(chan2),
            "a": rng.standard_normal(chan2) / np.sqrt(chan2),
            "u": np.zeros(in_channels),
            "a0": np.zeros(()),
        }
        return cls(params)

    @property
    def in_channels(self):
        """number of input channels"""
        return self.params["w1"].shape[1]

    def forward(self, inputs):
        """
        site up-probabilities (B, L, L) of inputs (B, Cin, 2L, 2L), and a cache

        the cache holds intermediate values needed by backward
        """
        params = self.params
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.ndim != 4 or inputs.shape[1] != self.in_channels:
            msg = "inputs shape %s does not match (B, %d, P, P)" % (
                inputs.shape,
                self.in_channels,
            )
            raise ValueError(msg)

        shifted_in = np.stack([_shift(inputs, offset) for offset in OFFSETS])
        w1_all = _expand_lifting(params["w1"])
        pre1 = np.einsum("rcik,kbiyx->bcryx", w1_all, shifted_in, optimize=True)
        hidden1 = np.tanh(pre1 + params["b1"][None, :, None, None, None])

        shifted_hidden = np.stack([_shift(hidden1, offset) for offset in OFFSETS])
        w2_all = _expand_group_conv(params["w2"])
        pre2 = np.einsum("rcjtk,kbjtyx->bcryx", w2_all, shifted_hidden, optimize=True)
        hidden2 = np.tanh(pre2 + params["b2"][None, :, None, None, None])

        pooled = hidden2.mean(axis=2)
        logits = (
            np.einsum("c,bcyx->byx", params["a"], pooled)
            + np.einsum("i,biyx->byx", params["u"], inputs)
            + params["a0"]
        )
        probs_pix = np.clip(_sigmoid(logits), PROB_EPS, 1.0 - PROB_EPS)
        probs = ising.site_pixels(probs_pix)
        cache = {
            "inputs": inputs,
            "shifted_in": shifted_in,
            "w1_all": w1_all,
            "hidden1": hidden1,
            "shifted_hidden": shifted_hidden,
            "w2_all": w2_all,
            "hidden2": hidden2,
            "pooled": pooled,
            "probs": probs,
        }
        return probs, cache

    def backward(self, cache, d_probs):
        """gradients of params and of inputs, given d loss / d probs"""
        params = self.params
        inputs = cache["inputs"]
        probs = cache["probs"]

        d_logits = np.zeros(inputs.shape[:1] + inputs.shape[2:])
        d_logits[:, 0::2, 0::2] = d_probs * probs * (1.0 - probs)

        grads = {
            "a": np.einsum("byx,bcyx->c", d_logits, cache["pooled"]),
            "u": np.einsum("byx,biyx->i", d_logits, inputs),
            "a0": np.asarray(d_logits.sum()),
        }
        d_pooled = np.einsum("c,byx->bcyx", params["a"], d_logits)
        hidden2 = cache["hidden2"]
        d_pre2 = (d_pooled[:, :, None] / D4_ORDER) * (1.0 - hidden2 ** 2)
        grads["b2"] = d_pre2.sum(axis=(0, 2, 3, 4))

        d_w2_all = np.einsum(
            "bcryx,kbjtyx->rcjtk", d_pre2, cache["shifted_hidden"], optimize=True
        )
        grads["w2"] = np.zeros_like(params["w2"])
        for rot in range(D4_ORDER):
            rows = D4_COMPOSE[rot][:, None]
            cols = OFFSET_PERMS[rot][None, :]
            grads["w2"] += d_w2_all[rot][:, :, rows, cols]
        d_shifted_hidden = np.einsum(
            "rcjtk,bcryx->kbjtyx", cache["w2_all"], d_pre2, optimize=True
        )
        d_hidden1 = sum(
            _unshift(d_shifted_hidden[ind], offset)
            for ind, offset in enumerate(OFFSETS)
        )

        hidden1 = cache["hidden1"]
        d_pre1 = d_hidden1 * (1.0 - hidden1 ** 2)
        grads["b1"] = d_pre1.sum(axis=(0, 2, 3, 4))
        d_w1_all = np.einsum(
            "bcryx,kbiyx->rcik", d_pre1, cache["shifted_in"], optimize=True
        )
        grads["w1"] = np.zeros_like(params["w1"])
        for rot in range(D4_ORDER):
            grads["w1"] += d_w1_all[rot][:, :, OFFSET_PERMS[rot]]
        d_shifted_in = np.einsum(
            "rcik,bcryx->kbiyx", cache["w1_all"], d_pre1, optimize=True
        )
        d_inputs = sum(
            _unshift(d_shifted_in[ind], offset) for ind, offset in enumerate(OFFSETS)
        )
        d_inputs = d_inputs + np.einsum("i,byx->biyx", params["u"], d_logits)
        return grads, d_inputs


################################################################################
# expected energy loss


def _check_probs(instance, probs):
    """probs as a float array, verifying shape and range"""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != (instance.side, instance.side):
        msg = "probs shape %s != (%d, %d)" % (probs.shape, instance.side, instance.side)
        raise ValueError(msg)
    if not np.all((probs > 0.0) & (probs < 1.0)):
        msg = "probs must lie in the open interval (0, 1)"
        raise ValueError(msg)
    return probs


def expected_energy_loss(instance, probs):
    """expected energy per site of independent spins with means 2 p - 1"""
    probs = _check_probs(instance, probs)
    means = 2.0 * probs - 1.0
    bond_x = np.sum(means * np.roll(means, -1, axis=1))
    bond_y = np.sum(means * np.roll(means, -1, axis=0))
    total = instance.jx * bond_x + instance.jy * bond_y + instance.h * np.sum(means)
    return float(-total / instance.site_cnt)


def expected_energy_grad(instance, probs):
    """gradient of expected_energy_loss with respect to probs"""
    probs = _check_probs(instance, probs)
    means = 2.0 * probs - 1.0
    neighbors_x = np.roll(means, -1, axis=1) + np.roll(means, 1, axis=1)
    neighbors_y = np.roll(means, -1, axis=0) + np.roll(means, 1, axis=0)
    d_means = -(instance.jx * neighbors_x + instance.jy * neighbors_y + instance.h)
    return 2.0 * d_means / instance.site_cnt


def batch_loss_and_grad(instances, probs):
    """mean expected energy over a batch, and its gradient with respect to probs"""
    batch_cnt = len(instances)
    losses = [expected_energy_loss(inst, prob) for inst, prob in zip(instances, probs)]
    d_probs = np.stack(
        [expected_energy_grad(inst, prob) for inst, prob in zip(instances, probs)]
    )
    return float(np.mean(losses)), d_probs / batch_cnt


################################################################################
# inputs per variant


class InputPipeline:
    """
    builds network inputs image + extra channel for a variant

    sympe appends g v with g sampled from the inversion kernel of a fixed random
    linear energy over p4m(L) acting on images, canon appends tau(x) v, noise appends
    fresh standard normal values, vanilla appends nothing
    """

    def __init__(self, variant, side, v=None, energy_seed=0):
        if variant not in VARIANTS:
            msg = "unknown variant %s, expected one of %s" % (variant, VARIANTS)
            raise ValueError(msg)
        self.variant = variant
        self.side = side
        self.site_action = make_p4m(side)
        self.pixel_action = ising.image_action(self.site_action)
        self.energy_seed = energy_seed
        self.v = None if v is None else np.asarray(v, dtype=np.float64)
        self.energy = None
        if variant in ("sympe", "canon"):
            pix = 2 * side
            self.energy = random_linear_energy((2, pix, pix), energy_seed)
            if self.v is None:
                msg = "variant %s needs a breaking vector" % variant
                raise ValueError(msg)
        self._canon_cache = {}

    @property
    def in_channels(self):
        """number of network input channels"""
        return 2 if self.variant == "vanilla" else 3

    def canonicalize(self, image):
        """CanonResult of an image, cached"""
        key = point_key(image)
        if key not in self._canon_cache:
            self._canon_cache[key] = energy_canonicalize(
                self.energy, self.pixel_action, image
            )
        return self._canon_cache[key]

    def build(self, images, rng):
        """network inputs for images (B, 2, P, P) and the group element per image"""
        images = np.asarray(images, dtype=np.float64)
        if self.variant == "vanilla":
            return images, [None] * len(images)
        extra, elems = [], []
        for image in images:
            if self.variant == "noise":
                extra.append(rng.standard_normal(image.shape[1:]))
                elems.append(None)
                continue
            result = self.canonicalize(image)
            if self.variant == "sympe":
                elem = sample_inversion_kernel(result, rng)
            else:
                elem = result.tau
            extra.append(self.pixel_action.apply(elem, self.v))
            elems.append(elem)
        return np.concatenate([images, np.stack(extra)[:, None]], axis=1), elems

    def grad_v(self, d_inputs, elems):
        """gradient with respect to v of the loss, given input gradients"""
        res = np.zeros_like(self.v)
        group = self.pixel_action.group
        for d_input, elem in zip(d_inputs, elems):
            res += self.pixel_action.apply(group.inverse(elem), d_input[2])
        return res


################################################################################
# training


class TrainState:
    """trained network parameters, breaking vector, and loss history"""

    def __init__(
        self,
        variant,
        side,
        params,
        v,
        energy_seed,
        seed,
        step,
        loss_history,
        final_loss,
    ):
        self.variant = variant
        self.side = side
        self.params = params
        self.v = v
        self.energy_seed = energy_seed
        self.seed = seed
        self.step = step
        self.loss_history = list(loss_history)
        self.final_loss = final_loss

    def net(self):
        """GroupConvNet with the trained params"""
        return GroupConvNet(self.params)

    def pipeline(self):
        """InputPipeline matching the trained variant"""
        return InputPipeline(self.variant, self.side, self.v, self.energy_seed)

    def to_dict(self):
        """JSON-serializable contents"""
        return {
            "variant": self.variant,
            "side": self.side,
            "params": self.params,
            "v": self.v,
            "energy_seed": self.energy_seed,
            "seed": self.seed,
            "step": self.step,
            "loss_history": self.loss_history,
            "final_loss": self.final_loss,
        }

    def dump(self, fname):
        """write state to a JSON file, verified by reread"""
        write_json(fname, self.to_dict())

    @classmethod
    def load(cls, fname):
        """read state written by dump"""
        contents = read_json(fname)
        return cls(**contents)


def _check_corpus(instances):
    """common lattice side of a non-empty corpus"""
    if len(instances) == 0:
        msg = "training corpus is empty"
        raise ValueError(msg)
    sides = set(instance.side for instance in instances)
    if len(sides) != 1:
        msg = "training corpus mixes lattice sides %s" % sorted(sides)
        raise ValueError(msg)
    return sides.pop()


def train(
    variant,
    instances,
    epochs,
    step,
    rng,
    channels=(4, 4),
    energy_seed=0,
    seed=None,
    log_freq=50,
):
    """
    full-batch gradient descent with fixed step on the expected energy

    the breaking vector v of sympe and canon is learned along with the weights
    """
    logger = logging.getLogger(__name__)

    if variant not in VARIANTS:
        msg = "unknown variant %s, expected one of %s" % (variant, VARIANTS)
        raise ValueError(msg)
    if epochs < 0 or step <= 0.0:
        msg = "epochs=%d must be >= 0 and step=%r must be > 0" % (epochs, step)
        raise ValueError(msg)
    side = _check_corpus(instances)

    in_channels = 2 if variant == "vanilla" else 3
    net = GroupConvNet.initial(in_channels, channels, rng)
    v = None
    if variant in ("sympe", "canon"):
        pixel_action = ising.image_action(make_p4m(side))
        v = make_breaking_vector(pixel_action, rng, seed=seed).v
    pipeline = InputPipeline(variant, side, v, energy_seed)
    images = np.stack([ising.image_encode(instance) for instance in instances])

    def loss_and_grads():
        inputs, elems = pipeline.build(images, rng)
        probs, cache = net.forward(inputs)
        loss, d_probs = batch_loss_and_grad(instances, probs)
        if not np.isfinite(loss):
            msg = "non-finite loss %r for variant %s" % (loss, variant)
            raise RuntimeError(msg)
        grads, d_inputs = net.backward(cache, d_probs)
        if pipeline.v is not None:
            grads["v"] = pipeline.grad_v(d_inputs, elems)
        return loss, grads

    loss_history = []
    for epoch in range(epochs):
        loss, grads = loss_and_grads()
        loss_history.append(loss)
        for name in GroupConvNet.PARAM_NAMES:
            net.params[name] = net.params[name] - step * grads[name]
        if "v" in grads:
            pipeline.v = pipeline.v - step * grads["v"]
        if not all(np.all(np.isfinite(val)) for val in net.params.values()):
            msg = "non-finite weights at epoch %d for variant %s" % (epoch, variant)
            raise RuntimeError(msg)
        if epoch % log_freq == 0:
            logger.info("%s epoch %d: loss %.6f", variant, epoch, loss)
        else:
            logger.debug("%s epoch %d: loss %.6f", variant, epoch, loss)

    final_loss, _ = loss_and_grads()
    logger.info("%s after %d epochs: loss %.6f", variant, epochs, final_loss)
    return TrainState(
        variant,
        side,
        net.params,
        pipeline.v,
        energy_seed,
        seed,
        step,
        loss_history,
        final_loss,
    )


################################################################################
# evaluation


def sample_spins(probs, rng, sample_cnt=SPIN_SAMPLES):
    """sample_cnt independent spin configurations with up-probabilities probs"""
    probs = np.asarray(probs)
    draws = rng.random((sample_cnt,) + probs.shape)
    return np.where(draws < probs, 1, -1).astype(np.int8)


class EvalResult:
    """mean sampled energy per site and its standard error"""

    def __init__(self, energies):
        self.energies = np.asarray(energies)

    @property
    def mean(self):
        """mean over instances and spin samples"""
        return float(self.energies.mean())

    @property
    def stderr(self):
        """standard error of the mean over instances"""
        per_instance = self.energies.mean(axis=1)
        if len(per_instance) < 2:
            return 0.0
        return float(np.std(per_instance, ddof=1) / np.sqrt(len(per_instance)))


def rotate_instance(site_action, instance):
    """instance acted on by the 90 degree rotation"""
    return ising.apply_p4m(site_action, p4m_elem(site_action, matrix=ROT90), instance)


def _evaluate_one(args):
    """sampled energies per site of one instance"""
    net, pipeline, instance, ood, rng = args
    if ood and rng.random() < 0.5:
        instance = rotate_instance(pipeline.site_action, instance)
    image = ising.image_encode(instance)
    inputs, _ = pipeline.build(image[None], rng)
    probs, _ = net.forward(inputs)
    spins = sample_spins(probs[0], rng)
    return [ising.energy_per_site(instance, sigma) for sigma in spins]


def evaluate(state, instances, ood, rng, thread_cnt=1):
    """
    mean sampled energy per site over instances and SPIN_SAMPLES samples each

    with ood, each instance is rotated by 90 degrees with probability 0.5
    """
    net, pipeline = state.net(), state.pipeline()
    rngs = spawn_rngs(rng, len(instances))
    args_list = [
        (net, pipeline, instance, ood, inst_rng)
        for instance, inst_rng in zip(instances, rngs)
    ]
    return EvalResult(parallel_map(_evaluate_one, args_list, thread_cnt))


################################################################################
# order-parameter signs, for distributional checks of sampled spins


def order_signs(sigma):
    """signs of O_AFM, O_Sx, O_Sy sums of a spin configuration"""
    params = ising.order_parameters(sigma)
    return np.sign([params.o_afm, params.o_sx, params.o_sy]).astype(np.int64)


class OrderSignAction:
    """
    action of p4m(L) on order_signs values induced by its action on spins

    translations by (tx, ty) flip signs by parity; elements exchanging the axes
    swap the two stripe signs
    """

    def __init__(self, site_action):
        self.group = site_action.group
        self.site_action = site_action

    def apply(self, elem, signs):
        """image of signs under elem"""
        tx, ty, _ = self.group.labels[elem]
        matrix = p4m_point_matrix(self.site_action, elem)
        s_afm, s_sx, s_sy = signs
        if matrix[0, 1] != 0:
            s_sx, s_sy = s_sy, s_sx
        return np.array(
            [(-1) ** (tx + ty) * s_afm, (-1) ** tx * s_sx, (-1) ** ty * s_sy],
            dtype=np.int64,
        )


def order_sign_sampler(state, chunk=100, sample=True):
    """
    batched sampler image -> order_signs of one spin configuration per draw

    with sample False the most likely configuration, spin +1 where p >= 1/2, is used
    in place of a spin sample
    """
    net, pipeline = state.net(), state.pipeline()

    def sampler(image, rng, cnt):
        res = []
        for start in range(0, cnt, chunk):
            batch_cnt = min(chunk, cnt - start)
            images = np.repeat(np.asarray(image)[None], batch_cnt, axis=0)
            inputs, _ = pipeline.build(images, rng)
            probs, _ = net.forward(inputs)
            for prob in probs:
                if sample:
                    sigma = sample_spins(prob, rng, 1)[0]
                else:
                    sigma = np.where(prob >= 0.5, 1, -1)
                res.append(order_signs(sigma))
        return res

    return sampler
