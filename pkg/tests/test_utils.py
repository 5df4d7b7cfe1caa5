"""test functions in utils.py"""

import numpy as np
import pytest

from src.utils import class_name, make_rng, mkdir_exist_okay, parallel_map, spawn_rngs


def test_make_rng_reproducible():
    """equal seeds give equal streams"""
    assert np.array_equal(make_rng(7).random(5), make_rng(7).random(5))
    assert not np.array_equal(make_rng(7).random(5), make_rng(8).random(5))


def test_spawn_rngs():
    """spawned generators are reproducible and distinct"""
    rngs_a = spawn_rngs(make_rng(9), 3)
    rngs_b = spawn_rngs(make_rng(9), 3)
    draws_a = [rng.random() for rng in rngs_a]
    assert draws_a == [rng.random() for rng in rngs_b]
    assert len(set(draws_a)) == 3


def _draw(args):
    """mean of draws from a generator"""
    rng, cnt = args
    return rng.random(cnt).mean()


@pytest.mark.parametrize("thread_cnt", [1, 2, 4])
def test_parallel_map(thread_cnt):
    """results are in order and independent of thread count"""
    args_list = [(rng, 100) for rng in spawn_rngs(make_rng(10), 8)]
    expected = [_draw((rng, 100)) for rng in spawn_rngs(make_rng(10), 8)]
    assert parallel_map(_draw, args_list, thread_cnt) == expected


def test_mkdir_exist_okay(tmp_path):
    """creating an existing directory is not an error"""
    path = str(tmp_path / "a" / "b")
    mkdir_exist_okay(path)
    mkdir_exist_okay(path)
    assert (tmp_path / "a" / "b").is_dir()


class _Probe:
    """class defined in this module"""


def test_class_name():
    """module qualified class name"""
    assert class_name(_Probe()).endswith("test_utils._Probe")
