import random

import pytest

from hdrsafe import _kernel_py, htypes, kernels
from hdrsafe.htypes import Alt, Inst, ONE
from oracles import naive_denote, random_type

native = pytest.mark.skipif(not kernels.NATIVE_AVAILABLE, reason="extension not built")


@pytest.fixture
def backend():
    previous = kernels.BACKEND
    yield kernels.use_backend
    kernels.use_backend(previous)


def _code(t, universe):
    return htypes._compile(htypes.normalize(t), {h: i for i, h in enumerate(universe)})


def test_python_kernel_small_programs():
    K = _kernel_py
    assert K.eval_code([K.OP_ZERO], 16) == []
    assert K.eval_code([K.OP_ONE], 16) == [0]
    assert K.eval_code([K.OP_INST, 2], 16) == [4]
    # (a + 1) . b
    code = [K.OP_INST, 0, K.OP_ONE, K.OP_ALT, K.OP_INST, 1, K.OP_CAT]
    assert K.eval_code(code, 16) == [2, 3]


def test_unknown_backend(backend):
    with pytest.raises(ValueError):
        backend("gpu")


@native
def test_native_matches_python_on_random_types():
    rng = random.Random(11)
    universe = ("a", "b", "c", "d", "e")
    for _ in range(2000):
        t = random_type(rng, 6, universe)
        code = _code(t, universe)
        py = _kernel_py.eval_code(code, 1 << 16)
        assert kernels._denote_ext.eval_code(code, 1 << 16) == py


@native
def test_native_cap_and_wide_index():
    t = htypes.product(Alt(ONE, Inst(f"h{i}")) for i in range(8))
    code = _code(t, [f"h{i}" for i in range(8)])
    with pytest.raises(htypes.DenotationTooLarge):
        kernels._denote_ext.eval_code(code, 100)
    with pytest.raises(ValueError):
        kernels._denote_ext.eval_code([_kernel_py.OP_INST, 64], 10)


def test_denote_under_each_backend(backend):
    rng = random.Random(5)
    choices = ["python"] + (["native"] if kernels.NATIVE_AVAILABLE else [])
    for name in choices:
        backend(name)
        for _ in range(200):
            t = random_type(rng, 5)
            assert htypes.denote(t) == naive_denote(t)


def test_wide_universe_falls_back_to_python():
    # 70 instances do not fit a 64-bit mask
    t = htypes.product(Inst(f"h{i:02d}") for i in range(70))
    d = htypes.denote(Alt(t, ONE))
    assert len(d) == 2
    assert frozenset(f"h{i:02d}" for i in range(70)) in d.sets()


@native
@pytest.mark.parametrize("k", [1, 6, 12])
def test_native_dense_and_sparse_paths_agree(k):
    chain = htypes.product(Alt(ONE, Inst(f"h{i:02d}")) for i in range(k))
    # a wide index forces the sorting path, a narrow one the bitmap path
    for universe in ([f"h{i:02d}" for i in range(k)], [f"x{i}" for i in range(40)] + [f"h{i:02d}" for i in range(k)]):
        code = _code(chain, universe)
        assert kernels._denote_ext.eval_code(code, 1 << 16) == _kernel_py.eval_code(code, 1 << 16)
