"""Precision-context and compensated-summation behavior."""

import random

import mpmath
from mpmath import mpf, mpc
import pytest

from momentlab.hp import PrecisionContext, compensated_sum, mp_format

CTX = PrecisionContext()


def test_context_defaults():
    assert CTX.bits == 256
    assert CTX.guard_bits == 16
    with CTX.workprec():
        assert CTX.tol == mpf("1e-40")
        assert CTX.tol > mpf(2) ** (-CTX.bits + CTX.guard_bits)


def test_context_rejects_bad_parameters():
    with pytest.raises(ValueError):
        PrecisionContext(bits=32)
    with pytest.raises(ValueError):
        PrecisionContext(bits=256, guard_bits=-1)
    with pytest.raises(ValueError):
        PrecisionContext(bits=64, tol=mpf(2) ** -80)


def test_empty_sum_is_zero():
    assert compensated_sum([], CTX) == 0


def test_cancellation_is_exact():
    with CTX.workprec():
        tiny = mpf(2) ** -100
        total = compensated_sum([mpf(1), mpf(-1), tiny], CTX)
        assert total.real == tiny
        assert total.imag == 0


def test_basel_partial_sum_matches_512_bit_oracle():
    # frozen from a 512-bit left-to-right summation of 1/k^2, k <= 1e4
    with CTX.workprec():
        oracle = mpf(
            "1.644834071848059769806081833310310903537997519496841753090202417348766370654309895527347"
        )
        total = compensated_sum([1 / mpf(k) ** 2 for k in range(1, 10001)], CTX)
        assert abs(total.real - oracle) < mpf(2) ** -240
        assert total.imag == 0


def test_batched_reduction_matches_flat_reduction():
    rng = random.Random(7)
    with CTX.workprec():
        terms = [mpc(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(500)]
        flat = compensated_sum(terms, CTX)
        chunks = [compensated_sum(terms[i : i + 37], CTX) for i in range(0, 500, 37)]
        nested = compensated_sum(chunks, CTX)
        assert abs(flat - nested) < 600 * CTX.eps


def test_add_subtract_roundtrip():
    rng = random.Random(11)
    with CTX.workprec():
        for _ in range(200):
            x = mpf(rng.uniform(-1, 1)) * mpf(2) ** rng.randint(-8, 8)
            y = mpf(rng.uniform(-1, 1)) * mpf(2) ** rng.randint(-8, 8)
            back = (x + y) - y
            assert abs(back - x) <= 4 * CTX.eps * max(abs(x), abs(y))


def test_exp_log_roundtrip():
    rng = random.Random(13)
    with CTX.workprec():
        for _ in range(100):
            mag = mpf(2) ** rng.randint(-20, 20)
            ang = rng.uniform(-3.1, 3.1)
            z = mag * mpmath.expj(mpf(ang))
            back = mpmath.exp(mpmath.log(z))
            assert abs(back - z) < CTX.tol * max(1, abs(z))


def test_mp_format_deterministic_and_40_digits():
    with CTX.workprec():
        x = mpmath.pi
        s1 = mp_format(x)
        s2 = mp_format(+mpmath.pi)
        assert s1 == s2
        assert s1.startswith("3.14159265358979323846264338327950288419")
    with pytest.raises(TypeError):
        mp_format(mpc(1, 2))
