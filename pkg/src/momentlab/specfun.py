"""Complex log-Gamma, digamma, Hurwitz/Riemann zeta, and the large-|t|
expansion of Gamma(z+it)cos(pi(z+it)/2) with extractable coefficients.

log_gamma and digamma use the Stirling asymptotic series after shifting the
argument right until the series reaches the working tolerance; the shifts
are then removed with principal-branch logarithms, which reproduces the
continuous branch of log Gamma on the cut plane C minus (-inf, 0].

hurwitz_zeta is an adaptive Euler-Maclaurin evaluation: the truncation
point N and the Bernoulli correction order M grow until the standard
remainder bound is below the requested tolerance.  riemann_zeta reuses it
for Re(s) > -1 and reflects through the functional equation further left.

The Gamma*cos expansion follows the three-layer Taylor composition of its
proof (log expansion about it, binomial expansion of the Stirling tail,
Taylor exponential), producing coefficients a_m(z) for a fixed offset z;
an independent least-squares fit against direct evaluation is provided as
a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
from mpmath import mpf, mpc

from .errors import ConvergenceError, DomainError, PoleError
from .hp import DEFAULT_CONTEXT, PrecisionContext

__all__ = [
    "log_gamma",
    "gamma",
    "gamma_value",
    "digamma",
    "hurwitz_zeta",
    "riemann_zeta",
    "zeta_squared",
    "StirlingExpansion",
    "gamma_cos_stirling",
    "stirling_coefficients",
    "stirling_coefficients_by_fit",
    "gamma_kernel_series",
]

# ---------------------------------------------------------------------------
# small shared caches (read-only after first fill; keyed by precision)

_LOG_CACHE: dict = {}
_BERN_FACT_CACHE: dict = {}  # B_2k/(2k)!
_BERN_STIR_CACHE: dict = {}  # B_2k/(2k(2k-1))
_BERN_DIG_CACHE: dict = {}  # B_2k/(2k)
_SPF_SIEVE: list = [0, 1]  # smallest prime factor; _SPF_SIEVE[n] == n iff n prime


def _log_int(n: int) -> mpf:
    """log n at the current mpmath precision, cached per (n, prec)."""
    key = (n, mpmath.mp.prec)
    v = _LOG_CACHE.get(key)
    if v is None:
        v = mpmath.log(n)
        _LOG_CACHE[key] = v
    return v


def _bern_fact(k: int) -> mpf:
    """B_2k / (2k)! at the current precision, cached."""
    key = (k, mpmath.mp.prec)
    v = _BERN_FACT_CACHE.get(key)
    if v is None:
        v = mpmath.bernoulli(2 * k) / mpmath.factorial(2 * k)
        _BERN_FACT_CACHE[key] = v
    return v


def _bern_stirling(k: int) -> mpf:
    """B_2k / (2k (2k-1)) at the current precision, cached."""
    key = (k, mpmath.mp.prec)
    v = _BERN_STIR_CACHE.get(key)
    if v is None:
        v = mpmath.bernoulli(2 * k) / ((2 * k) * (2 * k - 1))
        _BERN_STIR_CACHE[key] = v
    return v


def _bern_digamma(k: int) -> mpf:
    """B_2k / (2k) at the current precision, cached."""
    key = (k, mpmath.mp.prec)
    v = _BERN_DIG_CACHE.get(key)
    if v is None:
        v = mpmath.bernoulli(2 * k) / (2 * k)
        _BERN_DIG_CACHE[key] = v
    return v


def _mag2(x) -> mpf:
    """|x|^2 without the hypot call; cheap magnitude test helper."""
    if isinstance(x, mpc):
        return x.real * x.real + x.imag * x.imag
    return x * x


def _spf(limit: int) -> list:
    """Smallest-prime-factor table up to limit (grows on demand)."""
    global _SPF_SIEVE
    if len(_SPF_SIEVE) <= limit:
        size = max(limit + 1, 2 * len(_SPF_SIEVE), 1 << 12)
        tab = list(range(size))
        for p in range(2, int(size**0.5) + 1):
            if tab[p] == p:
                for m in range(p * p, size, p):
                    if tab[m] == m:
                        tab[m] = p
        _SPF_SIEVE = tab
    return _SPF_SIEVE


def _pole_distance_guard(z, ctx: PrecisionContext):
    """Refuse evaluation within 2^(-bits/2) of a non-positive integer."""
    z = mpc(z)
    if z.real > 0.25:
        return
    k = mpmath.nint(z.real)
    if k <= 0 and abs(z - k) < mpf(2) ** (-ctx.bits // 2):
        raise PoleError(f"argument {z} is within 2^-{ctx.bits // 2} of the pole at {int(k)}")


# ---------------------------------------------------------------------------
# log Gamma / digamma

def _stirling_terms_needed(abs_z: float, prec: int) -> int:
    """Smallest K with |B_2K/(2K(2K-1)) z^(1-2K)| below 2^-(prec+30).

    Uses the float-level magnitude ln|B_2k/(2k(2k-1))| ~ ln 2 - 2k ln(2 pi)
    + lgamma(2k-1); cheap enough to run per call.  The 30-bit margin also
    absorbs the sec(arg(z)/2)^(2K+1) remainder inflation near the
    imaginary axis.
    """
    target = -(prec + 30) * 0.6931471805599453
    lz = math.log(abs_z)
    for k in range(1, 8 * prec):
        f = 0.69 - 2 * k * 1.8378770664093453 + math.lgamma(2 * k - 1) - (2 * k - 1) * lz
        if f < target:
            return k
        if k > 4 and f > 0 and 2 * k > 6.3 * abs_z:
            break  # series bottomed out above target; caller must shift more
    raise ConvergenceError("Stirling series cannot reach the target at this |z|")


def _stirling_log_gamma(z) -> mpc:
    """Stirling series at large |z| with Re(z) comfortably positive."""
    prec = mpmath.mp.prec
    K = _stirling_terms_needed(abs(mpc(z)), prec)
    lz = mpmath.log(z)
    total = (z - mpf(1) / 2) * lz - z + mpmath.log(2 * mpmath.pi) / 2
    zinv2 = 1 / (z * z)
    w = 1 / z
    for k in range(1, K + 1):
        total += _bern_stirling(k) * w
        w *= zinv2
    return total


def _shift_count(z, prec: int) -> int:
    """Shifts needed so the Stirling series reaches ~prec bits.

    Once |Im z| alone carries |z| past the series radius no shifting is
    required beyond keeping Re(z) off the left half-plane; for low-lying
    arguments the real part must clear r_min.
    """
    z = mpc(z)
    r_min = max(12, int(0.118 * prec) + 3)
    if abs(z.imag) >= r_min:
        return max(0, int(mpmath.ceil(mpf(1) / 2 - z.real)))
    return max(0, int(mpmath.ceil(r_min - z.real)))


def log_gamma(z, ctx: PrecisionContext = DEFAULT_CONTEXT) -> mpc:
    """Continuous branch of log Gamma on the plane cut along (-inf, 0].

    Accurate to the context tolerance; agrees with the principal branch
    wherever arg Gamma stays in (-pi, pi].  Raises PoleError near the
    poles at non-positive integers.
    """
    with ctx.workprec(10):
        z = mpc(z)
        _pole_distance_guard(z, ctx)
        n = _shift_count(z, ctx.work_prec)
        base = _stirling_log_gamma(z + n)
        if n:
            acc = mpc(0)
            for j in range(n):
                acc += mpmath.log(z + j)
            base -= acc
        return base


def gamma(z, ctx: PrecisionContext = DEFAULT_CONTEXT) -> mpc:
    """exp(log_gamma(z)); convenience used by ratio-free callers."""
    with ctx.workprec(10):
        return mpmath.exp(log_gamma(z, ctx))


def gamma_value(z, ctx: PrecisionContext = DEFAULT_CONTEXT) -> mpc:
    """Gamma(z) as a value, optimized for the quadrature hot paths.

    The recurrence shifts are applied as one product and a single log is
    avoided entirely (Gamma(z) = Gamma(z+n)/prod(z+j)); branch bookkeeping
    is moot for the value.  Left half-plane arguments reflect through
    pi / (sin(pi z) Gamma(1-z)).
    """
    with ctx.workprec(10):
        z = mpc(z)
        if z.real < mpf(1) / 2:
            _pole_distance_guard(z, ctx)
            return mpmath.pi / (mpmath.sinpi(z) * gamma_value(1 - z, ctx))
        n = _shift_count(z, ctx.work_prec)
        top = mpmath.exp(_stirling_log_gamma(z + n))
        if n:
            prod = z
            for j in range(1, n):
                prod *= z + j
            return top / prod
        return top


def digamma(z, ctx: PrecisionContext = DEFAULT_CONTEXT) -> mpc:
    """Gamma'(z)/Gamma(z) via the asymptotic series plus downward recurrence."""
    with ctx.workprec(10):
        z = mpc(z)
        _pole_distance_guard(z, ctx)
        prec = mpmath.mp.prec
        n = _shift_count(z, prec)
        zz = z + n
        total = mpmath.log(zz) - 1 / (2 * zz)
        target2 = _mag2(total + 1) * mpf(2) ** (-2 * prec + 8)
        zinv2 = 1 / (zz * zz)
        w = zinv2
        for k in range(1, 4 * prec):
            term = _bern_digamma(k) * w
            total -= term
            if _mag2(term) < target2:
                break
            w *= zinv2
        else:
            raise ConvergenceError("digamma series did not converge")
        for j in range(n):
            total -= 1 / (z + j)
        return total


# ---------------------------------------------------------------------------
# Hurwitz / Riemann zeta via Euler-Maclaurin

def _nsqrt_inv(x) -> mpf:
    return 1 / mpmath.sqrt(x)


def _em_main_sum_rational(s, num: int, den: int, N: int) -> mpc:
    """sum_{n=0}^{N-1} (n + num/den)^(-s) for exact rational a = num/den."""
    sigma_half = s == mpf(1) / 2
    total = mpc(0)
    if sigma_half:
        for n in range(N):
            total += _nsqrt_inv(mpf(den * n + num) / den)
        return total
    for n in range(N):
        a = mpf(den * n + num) / den
        total += mpmath.exp(-s * mpmath.log(a))
    return total


def _em_main_sum_integer_shift(s, N: int) -> mpc:
    """sum_{n=1}^{N} n^(-s), built multiplicatively: exp only at primes.

    The inner loop runs on raw libmp pairs; wrapper dispatch would double
    the cost of what is the hottest loop in the contour quadratures.
    """
    from mpmath.libmp import mpc_exp, mpc_mul, mpc_add, mpf_neg, mpf_mul

    prec = mpmath.mp.prec + 8
    rnd = "n"
    spf = _spf(N)
    s = mpc(s)
    sre = s.real._mpf_
    sim = s.imag._mpf_
    one = mpf(1)._mpf_
    zero = mpf(0)._mpf_
    vals = [None] * (N + 1)
    vals[1] = (one, zero)
    total = (one, zero)
    for n in range(2, N + 1):
        p = spf[n]
        if p == n:
            ln = _log_int(n)._mpf_
            arg = (mpf_neg(mpf_mul(sre, ln, prec, rnd)), mpf_neg(mpf_mul(sim, ln, prec, rnd)))
            v = mpc_exp(arg, prec, rnd)
        else:
            v = mpc_mul(vals[p], vals[n // p], prec, rnd)
        vals[n] = v
        total = mpc_add(total, v, prec, rnd)
    return mpmath.mp.make_mpc(total)


def _em_tail(s, base, eps) -> mpc:
    """Euler-Maclaurin boundary terms at the truncation point `base` = N + a.

    Returns the tail or raises ConvergenceError when the correction series
    bottoms out above eps (caller then retries with a larger N).  The stop
    test uses the standard remainder bound |R_M| <= |(s+2M+1)/(sigma+2M+1)|
    * |next term|, so it stays honest for large |Im s|.  The correction
    loop runs on raw libmp pairs: at heights in the thousands it takes a
    hundred-plus terms, which would otherwise outweigh the main sum.
    """
    from mpmath.libmp import from_int, mpc_add, mpc_mul, mpc_mul_mpf, mpf_abs, mpf_add, mpf_mul

    sigma = float(mpc(s).real)
    timag = abs(float(mpc(s).imag))
    prec = mpmath.mp.prec + 8
    rnd = "n"
    lb = mpmath.log(base)
    tail = mpmath.exp((1 - s) * lb) / (s - 1) + mpmath.exp(-s * lb) / 2
    # correction terms: B_2k/(2k)! * (s)_{2k-1} * base^(-s-2k+1)
    binv2 = mpc(mpmath.exp(-2 * lb))
    powb = mpc(mpmath.exp((-s - 1) * lb))  # base^(-s-2k+1) at k=1
    s = mpc(s)
    acc = (mpf(0)._mpf_, mpf(0)._mpf_)
    poch = (s.real._mpf_, s.imag._mpf_)
    powb = (powb.real._mpf_, powb.imag._mpf_)
    binv2 = (binv2.real._mpf_, binv2.imag._mpf_)
    sre, sim = s.real._mpf_, s.imag._mpf_
    eps_raw = mpf(eps / 5)._mpf_
    prev = None
    for k in range(1, 6000):
        bf = _bern_fact(k)._mpf_
        term = mpc_mul_mpf(mpc_mul(poch, powb, prec, rnd), bf, prec, rnd)
        acc = mpc_add(acc, term, prec, rnd)
        mag = mpf_add(mpf_abs(term[0]), mpf_abs(term[1]), 53, rnd)
        if sigma + 2 * k + 1 > 0:
            fac = (abs(sigma + timag + 2 * k + 1)) / (sigma + 2 * k + 1)
            if mpf(mag) * fac < mpf(eps_raw):
                return tail + mpmath.mp.make_mpc(acc)
        if prev is not None and mpf(mag) > 16 * mpf(prev) and 2 * k > timag:
            raise ConvergenceError("Euler-Maclaurin corrections diverging")
        prev = mag
        # poch *= (s + 2k - 1)(s + 2k)
        f1 = (mpf_add(sre, from_int(2 * k - 1), prec, rnd), sim)
        f2 = (mpf_add(sre, from_int(2 * k), prec, rnd), sim)
        poch = mpc_mul(mpc_mul(poch, f1, prec, rnd), f2, prec, rnd)
        powb = mpc_mul(powb, binv2, prec, rnd)
    raise ConvergenceError("Euler-Maclaurin correction order exhausted")


def hurwitz_zeta(
    s,
    a=1,
    ctx: PrecisionContext = DEFAULT_CONTEXT,
    target_tol=None,
    a_rational: tuple | None = None,
) -> mpc:
    """zeta(s, a) = sum_{n>=0} (n+a)^(-s), continued to all s != 1.

    ``a`` must lie in (0, 1].  Pass ``a_rational=(num, den)`` to describe a
    exactly; the character-sum code does this for a = k/q.  ``target_tol``
    (absolute) defaults to the context tolerance; the contour quadratures
    pass looser values where the integrand envelope permits.
    """
    with ctx.workprec(10):
        s = mpc(s)
        if a_rational is not None:
            num, den = a_rational
            a = mpf(num) / den
        else:
            a = mpf(a)
            num, den = None, None
        if not (0 < a <= 1):
            raise DomainError("hurwitz_zeta requires a in (0, 1]")
        if abs(s - 1) < mpf(2) ** (-ctx.bits // 2):
            raise PoleError("hurwitz_zeta pole at s = 1")
        eps = mpf(target_tol) if target_tol is not None else +ctx.tol
        eps = eps / 4
        if s.imag == 0:
            s = s.real

        timag = abs(mpc(s).imag)
        # truncation point: decay floor for the correction series sits at
        # N ~ |Im s|/2pi; the excess factor (1+beta) buys e^(-t beta^2/2)
        loge = float(-mpmath.log(eps)) if eps < 1 else 1.0
        beta = (2 * loge / max(float(timag), 1.0)) ** 0.5
        N = max(
            10,
            int(loge / 6.28) + 6,
            int((float(timag) / 6.2832) * (1.0 + beta)) + 4,
        )
        for _ in range(60):
            try:
                base = N + a
                tail = _em_tail(s, base, eps)
                break
            except ConvergenceError:
                N = int(N * 1.45) + 8
        else:
            raise ConvergenceError("hurwitz_zeta could not reach tolerance")

        if a == 1:
            main = _em_main_sum_integer_shift(s, N)
        elif num is not None:
            main = _em_main_sum_rational(s, int(num), int(den), N)
        else:
            main = mpc(0)
            for n in range(N):
                main += mpmath.exp(-s * mpmath.log(n + a))
        out = main + tail
        if mpc(out).imag == 0:
            return out
        return out if isinstance(out, mpc) else mpc(out)


_REFLECT_SWITCH = mpf(-1)


def riemann_zeta(
    s, ctx: PrecisionContext = DEFAULT_CONTEXT, target_tol=None
) -> mpc:
    """zeta(s): Euler-Maclaurin for Re(s) > -1, reflection formula below.

    The reflection uses zeta(s) = pi^(s-1/2) Gamma((1-s)/2)/Gamma(s/2)
    zeta(1-s), so both halves of the plane route through the same
    Euler-Maclaurin core.
    """
    with ctx.workprec(10):
        s = mpc(s)
        if abs(s - 1) < mpf(2) ** (-ctx.bits // 2):
            raise PoleError("zeta pole at s = 1")
        if s.real > _REFLECT_SWITCH:
            return hurwitz_zeta(s, 1, ctx, target_tol=target_tol)
        # reflect; scale the requested tolerance by the chi-factor size
        chi = _zeta_chi_factor(s, ctx)
        sub_tol = None
        if target_tol is not None:
            sub_tol = mpf(target_tol) / max(mpf(1), 2 * abs(chi))
        return chi * hurwitz_zeta(1 - s, 1, ctx, target_tol=sub_tol)


def _zeta_chi_factor(s, ctx: PrecisionContext) -> mpc:
    """pi^(s-1/2) Gamma((1-s)/2) / Gamma(s/2)."""
    lg = log_gamma((1 - s) / 2, ctx) - log_gamma(s / 2, ctx)
    return mpmath.exp((s - mpf(1) / 2) * mpmath.log(mpmath.pi) + lg)


def zeta_squared(s, ctx: PrecisionContext = DEFAULT_CONTEXT, target_tol=None) -> mpc:
    """zeta(s)^2 with the tolerance request applied before squaring."""
    with ctx.workprec(10):
        sub = None
        if target_tol is not None:
            z0 = riemann_zeta(s, ctx, target_tol=mpf("0.5"))
            sub = mpf(target_tol) / max(mpf(1), 3 * abs(z0))
        z = riemann_zeta(s, ctx, target_tol=sub)
        return z * z


# ---------------------------------------------------------------------------
# Stirling expansion of Gamma(z+it) cos(pi(z+it)/2)

#: Supported offset box for the public expansion (fixed compact region).
STIRLING_BOX_RE = (mpf(1) / 8, mpf(4))
STIRLING_BOX_IM = mpf(4)


@dataclass(frozen=True)
class StirlingExpansion:
    """Coefficients a_m(z) of the large-|t| expansion at a fixed offset z.

    The modeled quantity is
        Gamma(z+it) cos(pi(z+it)/2)
            = |t|^(z-1/2) exp(i t log|t| - i t) (sum_m a_m(z) t^-m + E_M),
    with a_0 = sqrt(pi/2) exp(-i pi/4 sign_t) and E_M = O(|t|^(-M-1)).
    """

    z: mpc
    sign_t: int
    coeffs: tuple
    M: int

    def series_value(self, t) -> mpc:
        """Horner evaluation of sum_m a_m t^-m (t keeps its sign)."""
        u = 1 / mpf(t)
        acc = mpc(self.coeffs[-1])
        for c in reversed(self.coeffs[:-1]):
            acc = acc * u + c
        return acc


def _stirling_series_coeffs(prec: int, count: int) -> list:
    """Coefficients of z^-r in the Stirling series of log Gamma (r>=1)."""
    out = []
    for r in range(1, count + 1):
        if r % 2 == 1:
            out.append(mpmath.bernoulli(r + 1) / (r * (r + 1)))
        else:
            out.append(mpf(0))
    return out


def stirling_coefficients(
    z, sign_t: int, M: int, ctx: PrecisionContext = DEFAULT_CONTEXT
) -> tuple:
    """a_m(z) for m = 0..M by composing the three Taylor layers.

    Layer 1 expands log(z+it) about log(it); layer 2 expands each Stirling
    tail term (z+it)^-r binomially; layer 3 exponentiates the resulting
    power series in 1/t.  Only the overall phase sqrt(pi/2) e^(-i pi/4 sign_t)
    depends on sign_t; the series part is sign-independent.
    """
    if sign_t not in (-1, 1):
        raise DomainError("sign_t must be +-1")
    with ctx.workprec(24):
        z = mpc(z)
        # layer 1: c_m, the u^m coefficients of log(z+it) - log(it), u = 1/t
        mi = mpc(0, -1)  # 1/i
        c = [mpc(0)]
        zp = mpc(1)
        ip = mpc(1)
        for m in range(1, M + 2):
            zp *= z
            ip *= mi
            c.append(zp * ip * (mpf(-1) ** (m + 1)) / m)
        stir = _stirling_series_coeffs(ctx.work_prec, M)
        # b_m: u^m coefficients of log Gamma(z+it) after removing the
        # non-series part (main phase, |t| power, constants)
        b = [mpc(0)] * (M + 1)
        for m in range(1, M + 1):
            acc = (z - mpf(1) / 2) * c[m] + mpc(0, 1) * c[m + 1]
            ipm = mi**m
            for r in range(1, m + 1):
                if stir[r - 1] == 0:
                    continue
                j = m - r
                acc += stir[r - 1] * mpmath.binomial(-r, j) * z**j * ipm
            b[m] = acc
        # layer 3: exp of the series, via E' = B' E recurrence
        e = [mpc(1)] + [mpc(0)] * M
        for m in range(1, M + 1):
            s = mpc(0)
            for j in range(1, m + 1):
                s += j * b[j] * e[m - j]
            e[m] = s / m
        phase = mpmath.sqrt(mpmath.pi / 2) * mpmath.expjpi(mpf(-sign_t) / 4)
        return tuple(phase * em for em in e)


def stirling_coefficients_by_fit(
    z,
    sign_t: int,
    M: int,
    ctx: PrecisionContext = DEFAULT_CONTEXT,
    t_base=None,
    ratio=2,
    pad: int = 6,
) -> tuple:
    """a_m(z) by solving a least-squares-free ladder fit against direct values.

    Evaluates Gamma(z+it)cos(pi(z+it)/2) at M+1+pad geometric heights,
    strips the known envelope and phase, and solves the Vandermonde system
    in 1/t.  The extra `pad` columns absorb truncation bias so the leading
    M+1 coefficients can be compared against the composed ones.
    """
    with ctx.workprec(40):
        z = mpc(z)
        mtot = M + pad
        if t_base is None:
            t_base = mpf(ctx.work_prec) * 4
        ts = [mpf(sign_t) * t_base * mpf(ratio) ** k for k in range(mtot + 1)]
        rows = []
        rhs = []
        for t in ts:
            direct = _gamma_cos_direct(z, t, ctx)
            envelope = mpmath.exp((z - mpf(1) / 2) * mpmath.log(abs(t)))
            phase = mpmath.expj(t * mpmath.log(abs(t)) - t)
            rhs.append(direct / (envelope * phase))
            rows.append([mpf(1) / t**m for m in range(mtot + 1)])
        sol = mpmath.lu_solve(mpmath.matrix(rows), mpmath.matrix(rhs))
        return tuple(sol[m] for m in range(M + 1))


def _gamma_cos_direct(z, t, ctx: PrecisionContext) -> mpc:
    """Gamma(z+it) cos(pi(z+it)/2) evaluated without the expansion.

    cos is split into exponentials so the exp(pi|t|/2) growth cancels
    against log Gamma analytically instead of overflowing.
    """
    w = mpc(z) + mpc(0, 1) * mpf(t)
    lg = log_gamma(w, ctx)
    # cos(pi w/2) = 0.5 e^(s pi |t|/2) e^(-i s pi z/2) (1 + e^(i s pi z - pi |t|))
    # with s = sign(t); fold the growing exponential into the Gamma log.
    sgn = 1 if mpf(t) > 0 else -1
    with ctx.workprec(16):
        big = lg + mpmath.pi * abs(mpf(t)) / 2 - mpc(0, 1) * sgn * mpmath.pi * mpc(z) / 2
        small = 1 + mpmath.expj(sgn * mpmath.pi * mpc(z) - mpc(0, -1) * mpmath.pi * abs(mpf(t)))
        # expj argument above: i*(s pi z) - pi|t| as a complex exponent
        return mpmath.exp(big) * small / 2


def gamma_cos_stirling(
    z, t, M: int, ctx: PrecisionContext = DEFAULT_CONTEXT
) -> tuple[mpc, StirlingExpansion]:
    """M-term expansion value of Gamma(z+it)cos(pi(z+it)/2) and its coefficients.

    Requires Re(z) in [1/8, 4], |Im z| <= 4 (the supported compact offset
    box) and |t| > 1/2.  The returned value is the truncated model
    |t|^(z-1/2) exp(it log|t| - it) sum_{m<=M} a_m(z) t^-m; the defect
    against the direct product decays like |t|^(Re z - 1/2 - M - 1).
    """
    with ctx.workprec(16):
        z = mpc(z)
        t = mpf(t)
        if not (STIRLING_BOX_RE[0] <= z.real <= STIRLING_BOX_RE[1]) or abs(z.imag) > STIRLING_BOX_IM:
            raise DomainError("offset z outside the supported compact box")
        if not abs(t) > mpf(1) / 2:
            raise DomainError("|t| must exceed 1/2")
        sign_t = 1 if t > 0 else -1
        coeffs = stirling_coefficients(z, sign_t, M, ctx)
        exp_obj = StirlingExpansion(z=z, sign_t=sign_t, coeffs=coeffs, M=M)
        envelope = mpmath.exp((z - mpf(1) / 2) * mpmath.log(abs(t)))
        phase = mpmath.expj(t * mpmath.log(abs(t)) - t)
        return envelope * phase * exp_obj.series_value(t), exp_obj


# ---------------------------------------------------------------------------
# accelerated contour kernels (internal; offsets outside the public box)

_KERNEL_CACHE: dict = {}


def gamma_kernel_series(sigma, kernel: str, M: int, ctx: PrecisionContext) -> tuple:
    """Expansion coefficients for Gamma(sigma+it)*kernel(pi(sigma+it)/2), t > 0.

    Same composition as stirling_coefficients but allowed at any real
    offset sigma (the contour lines sit far left of the public box).  For
    the sin kernel the series is i * (cos-kernel series); both drop a
    relative O(e^(-pi t)) factor, so callers must stay above the height
    where that matters (see `kernel_min_height`).
    """
    key = (str(sigma), kernel, M, ctx.work_prec)
    got = _KERNEL_CACHE.get(key)
    if got is not None:
        return got
    if kernel not in ("cos", "sin"):
        raise DomainError("kernel must be 'cos' or 'sin'")
    with ctx.workprec(24):
        base = stirling_coefficients(mpc(sigma), 1, M, ctx)
        if kernel == "sin":
            base = tuple(mpc(0, 1) * c for c in base)
    _KERNEL_CACHE[key] = base
    return base


def kernel_min_height(ctx: PrecisionContext) -> mpf:
    """Height above which the dropped e^(-pi t) kernel factor is below 2^-work_prec."""
    with ctx.workprec():
        return (ctx.work_prec + 12) * mpmath.log(2) / mpmath.pi
