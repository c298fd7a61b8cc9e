import random

import pytest

from reconfigsim.errors import AddressOutOfRange, DivideByZero, MuxIndexOutOfRange
from reconfigsim.operators import (
    COMPARES, MemoryModel, eval_comb, mem_cycle, reg_next, signature,
)


@pytest.mark.parametrize("kind, width, inputs, expected", [
    ("add", 8, [200, 100], 44),
    ("lts", 4, [0xF, 0x1], 1),
    ("asr", 8, [0x80, 2], 0xE0),
    ("sub", 8, [3, 5], 0xFE),
    ("neg", 4, [1], 0xF),
    ("not", 4, [0b1010], 0b0101),
    ("shl", 8, [0x81, 9], 0x02),      # amount 9 mod 8 = 1
    ("shr", 8, [0x80, 7], 1),
    ("div", 8, [7, 2], 3),
    ("rem", 8, [7, 2], 1),
    ("gtu", 4, [0xF, 0x1], 1),
    ("gts", 4, [0xF, 0x1], 0),
    ("mux", 8, [1, 10, 20], 20),
])
def test_eval_examples(kind, width, inputs, expected):
    assert eval_comb(kind, width, inputs) == expected


def test_div_by_zero():
    with pytest.raises(DivideByZero):
        eval_comb("div", 8, [7, 0])
    with pytest.raises(DivideByZero):
        eval_comb("rem", 8, [7, 0])


def test_mux_index_out_of_range():
    with pytest.raises(MuxIndexOutOfRange):
        eval_comb("mux", 8, [3, 1, 2, 3])


def test_const():
    assert eval_comb("const", 8, [], {"value": 0x5A}) == 0x5A


def test_signatures():
    assert signature("reg").output == "q"
    assert signature("mem").inputs == ("addr",)
    assert signature("mux", {"arity": 3}).inputs == ("sel", "in0", "in1", "in2")


def test_reg_next():
    assert reg_next(5, 9, 1) == 9
    assert reg_next(5, 9, 0) == 5
    assert reg_next(0, 0, 1) == 0


def test_mem_latency0_combinational_read():
    m = MemoryModel(8, 4, [0, 0, 0, 0xAB], latency=0)
    dout, image = mem_cycle(m, 3, 0, 0)
    assert dout == 0xAB
    assert image == [0, 0, 0, 0xAB]


def test_mem_latency1_read_first():
    m = MemoryModel(8, 4, [0, 0, 0, 0xAB], latency=1)
    _, image = mem_cycle(m, 3, 0xCD, 1)
    assert image[3] == 0xCD
    dout, _ = mem_cycle(m, 0, 0, 0)
    assert dout == 0xAB  # old data seen the cycle after


def test_mem_address_out_of_range():
    m = MemoryModel(8, 4, [0] * 4, latency=1)
    with pytest.raises(AddressOutOfRange):
        mem_cycle(m, 4, 0, 0)
    m0 = MemoryModel(8, 4, [0] * 4, latency=0)
    with pytest.raises(AddressOutOfRange):
        m0.dout(4)


def _to_signed(x, w):
    return x - (1 << w) if x & (1 << (w - 1)) else x


@pytest.mark.parametrize("width", range(1, 9))
def test_signed_compare_matches_flipped_unsigned_exhaustive(width):
    h = 1 << (width - 1)
    for a in range(1 << width):
        for b in range(1 << width):
            for s, u in (("lts", "ltu"), ("les", "leu"), ("gts", "gtu"), ("ges", "geu")):
                assert eval_comb(s, width, [a, b]) == eval_comb(u, width, [a ^ h, b ^ h])


@pytest.mark.parametrize("width", range(9, 17))
def test_signed_compare_matches_flipped_unsigned_sampled(width):
    rng = random.Random(width)
    h = 1 << (width - 1)
    for _ in range(2000):
        a, b = rng.randrange(1 << width), rng.randrange(1 << width)
        assert eval_comb("lts", width, [a, b]) == eval_comb("ltu", width, [a ^ h, b ^ h])
        assert eval_comb("lts", width, [a, b]) == int(_to_signed(a, width) < _to_signed(b, width))


def test_pure():
    args = ("mul", 13, [4095, 77])
    assert eval_comb(*args) == eval_comb(*args)


def test_compare_outputs_are_bits():
    rng = random.Random(3)
    for kind in COMPARES:
        for _ in range(100):
            w = rng.randint(1, 64)
            assert eval_comb(kind, w, [rng.randrange(1 << w), rng.randrange(1 << w)]) in (0, 1)
