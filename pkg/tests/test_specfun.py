"""Special functions: log-Gamma, digamma, zetas, and the Gamma*cos expansion."""

import random

import mpmath
from mpmath import mpf, mpc
import pytest

from momentlab.errors import DomainError, PoleError
from momentlab.hp import PrecisionContext
from momentlab.specfun import (
    _gamma_cos_direct,
    digamma,
    gamma_cos_stirling,
    gamma_value,
    hurwitz_zeta,
    log_gamma,
    riemann_zeta,
    stirling_coefficients,
    stirling_coefficients_by_fit,
)

CTX = PrecisionContext()

# frozen from this module's own 512-bit Euler-Maclaurin run (parse under
# workprec before use; module scope would truncate to float precision)
ZETA_HALF_STR = "-1.46035450880958681288949915251529801246722933101258149054288608782553052947450062527641938"


def test_log_gamma_at_half():
    with CTX.workprec():
        assert abs(log_gamma(mpf(1) / 2, CTX) - mpmath.log(mpmath.sqrt(mpmath.pi))) < CTX.tol


def test_log_gamma_at_one():
    assert abs(log_gamma(1, CTX)) < CTX.tol


def test_log_gamma_oracle_quarter_plus_50i():
    # frozen from the 512-bit run of the same shifted-Stirling scheme
    with CTX.workprec():
        want = mpc(
            "-78.598880432701842503979689597378643885826023",
            "145.20865952425722833265449668140162645093126",
        )
        assert abs(log_gamma(mpc(0.25, 50), CTX) - want) < mpf("1e-40")


def test_log_gamma_pole_guard():
    with pytest.raises(PoleError):
        log_gamma(0, CTX)
    with pytest.raises(PoleError):
        log_gamma(mpf(-3) + mpf(2) ** -200, CTX)


def test_digamma_values():
    with CTX.workprec():
        assert abs(digamma(mpf(1) / 2, CTX) - (mpmath.log(mpf(1) / 4) - mpmath.euler)) < CTX.tol
        assert abs(digamma(1, CTX) + mpmath.euler) < CTX.tol


def test_digamma_finite_difference_oracle():
    # central difference of log_gamma at 384 bits, step 2^-60
    ctx384 = PrecisionContext(bits=384, tol=mpf("1e-100"))
    with ctx384.workprec():
        h = mpf(2) ** -60
        fd = (log_gamma(mpf(1) / 4 + h, ctx384) - log_gamma(mpf(1) / 4 - h, ctx384)) / (2 * h)
        assert abs(digamma(mpf(1) / 4, CTX) - fd) < mpf("1e-30")


def test_gamma_reflection_product():
    rng = random.Random(5)
    with CTX.workprec():
        for _ in range(100):
            z = mpc(rng.uniform(-4, 4), rng.uniform(-4, 4))
            if abs(z - mpmath.nint(z.real)) < 0.05 or abs(z.imag) < 0.02:
                continue
            prod = gamma_value(1 - z, CTX) * gamma_value(z, CTX) * mpmath.sinpi(z)
            assert abs(prod - mpmath.pi) < 10 * CTX.tol * (1 + abs(prod))


def test_hurwitz_zeta_basic_values():
    with CTX.workprec():
        assert abs(hurwitz_zeta(2, 1, CTX) - mpmath.pi ** 2 / 6) < CTX.tol
        assert abs(hurwitz_zeta(mpf(1) / 2, 1, CTX) - mpf(ZETA_HALF_STR)) < CTX.tol
        assert abs(riemann_zeta(0, CTX) + mpf(1) / 2) < CTX.tol


def test_hurwitz_zeta_half_argument_identity():
    # zeta(s, 1/2) = (2^s - 1) zeta(s)
    with CTX.workprec():
        for s in (mpf(1) / 2, mpf(2), mpc(1.5, 2.5)):
            lhs = hurwitz_zeta(s, a_rational=(1, 2), ctx=CTX)
            rhs = (mpmath.exp(s * mpmath.log(2)) - 1) * riemann_zeta(s, CTX)
            assert abs(lhs - rhs) < 10 * CTX.tol * (1 + abs(rhs))


def test_hurwitz_multiplication_theorem():
    with CTX.workprec():
        for q in (3, 5, 7):
            for s in (mpf(1) / 2, mpf(2)):
                total = sum(hurwitz_zeta(s, a_rational=(a, q), ctx=CTX) for a in range(1, q + 1))
                rhs = mpmath.exp(s * mpmath.log(q)) * riemann_zeta(s, CTX)
                assert abs(total - rhs) < 10 * CTX.tol * (1 + abs(rhs))


def test_hurwitz_domain_and_pole():
    with pytest.raises(PoleError):
        hurwitz_zeta(1, 1, CTX)
    with pytest.raises(DomainError):
        hurwitz_zeta(2, mpf(3) / 2, CTX)


def test_riemann_zeta_reflection_consistency():
    with CTX.workprec():
        # both routes to zeta(-1/2): reflection from 3/2, and direct E-M
        via_reflection = riemann_zeta(mpf(-1) / 2 - mpf(1) / 1000000, CTX)
        direct = hurwitz_zeta(mpf(-1) / 2 - mpf(1) / 1000000, 1, CTX)
        assert abs(via_reflection - direct) < 10 * CTX.tol
        assert abs(riemann_zeta(2, CTX) - mpmath.pi ** 2 / 6) < CTX.tol


def test_zeta_functional_equation_residual_random_points():
    rng = random.Random(17)
    with CTX.workprec():
        for _ in range(100):
            s = mpc(rng.uniform(-5, 5), rng.uniform(-5, 5))
            if abs(s - 1) < 0.1 or abs(s) < 0.05:
                continue
            lhs = riemann_zeta(s, CTX)
            chi = (
                mpmath.exp((s - mpf(1) / 2) * mpmath.log(mpmath.pi))
                * gamma_value((1 - s) / 2, CTX)
                / gamma_value(s / 2, CTX)
            )
            rhs = chi * riemann_zeta(1 - s, CTX)
            assert abs(lhs - rhs) < mpf("1e-35") * (1 + abs(lhs))


def test_stirling_a0_value():
    with CTX.workprec():
        want = mpmath.sqrt(mpmath.pi / 2) * mpmath.expjpi(mpf(-1) / 4)
        coeffs = stirling_coefficients(mpf(1) / 4, 1, 0, CTX)
        assert abs(coeffs[0] - want) < mpf("1e-30")
        coeffs_neg = stirling_coefficients(mpf(1) / 4, -1, 0, CTX)
        assert abs(coeffs_neg[0] - mpmath.conj(want)) < mpf("1e-30")


def test_stirling_mirror_symmetry():
    # a_m(z, -t) = (-1)^m conj(a_m(z, t)) for real z
    with CTX.workprec():
        plus = stirling_coefficients(mpf(1) / 4, 1, 4, CTX)
        minus = stirling_coefficients(mpf(1) / 4, -1, 4, CTX)
        for m in range(5):
            assert abs(minus[m] - mpf(-1) ** m * mpmath.conj(plus[m])) < mpf("1e-35")


def test_stirling_composition_matches_fit():
    with CTX.workprec():
        comp = stirling_coefficients(mpf(1) / 4, 1, 3, CTX)
        fit = stirling_coefficients_by_fit(mpf(1) / 4, 1, 3, CTX)
        for m in range(4):
            assert abs(comp[m] - fit[m]) < mpf("1e-25"), f"m={m}"


def test_stirling_error_decay():
    with CTX.workprec():
        z = mpf(1) / 4
        for M in (0, 1, 2):
            scaled = []
            for texp in (2, 3, 4):
                t = mpf(10) ** texp
                val, _ = gamma_cos_stirling(z, t, M, CTX)
                err = abs(val - _gamma_cos_direct(z, t, CTX))
                scaled.append(err / t ** (mpf(1) / 4 - mpf(1) / 2 - M - 1))
            assert max(scaled) / min(scaled) < 20


def test_stirling_error_halving_ratio():
    # doubling t multiplies the defect by ~2^(Re z - 1/2 - (M+1))
    with CTX.workprec():
        z = mpf(1) / 4
        for M in (0, 1, 2):
            errs = []
            for t in (mpf(1000), mpf(2000)):
                val, _ = gamma_cos_stirling(z, t, M, CTX)
                errs.append(abs(val - _gamma_cos_direct(z, t, CTX)))
            ratio = errs[1] / errs[0]
            want = mpf(2) ** (float(z) - 0.5 - (M + 1))
            assert abs(ratio / want - 1) < mpf("0.2")


def test_gamma_cos_stirling_domain():
    with pytest.raises(DomainError):
        gamma_cos_stirling(mpc(-1, 0), 100, 2, CTX)
    with pytest.raises(DomainError):
        gamma_cos_stirling(mpf(1) / 4, mpf("0.4"), 2, CTX)
