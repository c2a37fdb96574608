"""Working-precision arithmetic context and compensated summation.

Every numeric routine in this package computes with mpmath real/complex
values at a precision carried explicitly by a :class:`PrecisionContext`.
The context fixes the mantissa size in bits, a dimensionless acceptance
tolerance ``tol`` used by all identity checks, and a number of guard bits
that pad the working precision so rounding stays far below ``tol``.

mpmath's global precision is mutated only inside ``with ctx.workprec():``
blocks, so contexts can be nested and values returned from a block keep
the precision they were computed at (mpf/mpc instances are immutable).
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field

import mpmath
from mpmath import mpf, mpc

__all__ = [
    "PrecisionContext",
    "DEFAULT_CONTEXT",
    "compensated_sum",
    "mp_format",
]


@dataclass(frozen=True)
class PrecisionContext:
    """Immutable bundle of (mantissa bits, acceptance tolerance, guard bits).

    ``bits`` is the nominal precision statements are made at; arithmetic
    actually runs at ``bits + guard_bits``.  ``tol`` is the base tolerance
    every derived check is expressed in multiples of.
    """

    bits: int = 256
    tol: mpf = "1e-40"
    guard_bits: int = 16

    def __post_init__(self):
        if self.bits < 64:
            raise ValueError("precision must be at least 64 bits")
        if self.guard_bits < 0:
            raise ValueError("guard_bits must be non-negative")
        with mpmath.workprec(self.bits + self.guard_bits):
            tol = mpf(self.tol)
            object.__setattr__(self, "tol", tol)
            if not tol > mpf(2) ** (-self.bits + self.guard_bits):
                raise ValueError("tol is below what the precision can honor")

    @property
    def work_prec(self) -> int:
        return self.bits + self.guard_bits

    @property
    def eps(self) -> mpf:
        """One ulp at nominal precision: 2^(guard_bits - bits)."""
        return mpf(2) ** (self.guard_bits - self.bits)

    def workprec(self, extra_bits: int = 0):
        """Context manager setting mpmath's precision to work_prec + extra."""
        return mpmath.workprec(self.work_prec + extra_bits)

    def mpf(self, x) -> mpf:
        with self.workprec():
            return mpf(x)

    def mpc(self, re, im=0) -> mpc:
        with self.workprec():
            return mpc(re, im)

    # Shared transcendental constants.  mpmath caches each constant at the
    # highest precision ever requested, so repeated access is a cheap copy.
    @property
    def pi(self) -> mpf:
        with self.workprec():
            return +mpmath.pi

    @property
    def euler(self) -> mpf:
        with self.workprec():
            return +mpmath.euler

    @property
    def log_2pi(self) -> mpf:
        with self.workprec():
            return mpmath.log(2 * mpmath.pi)

    def scaled_tol(self, factor) -> mpf:
        with self.workprec():
            return self.tol * mpf(factor)


DEFAULT_CONTEXT = PrecisionContext()


def _neumaier(values, ctx: PrecisionContext) -> mpf:
    total = mpf(0)
    comp = mpf(0)
    for v in values:
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
    return total + comp


def compensated_sum(terms, ctx: PrecisionContext = DEFAULT_CONTEXT) -> mpc:
    """Sum a finite sequence of complex values with compensated error flow.

    Neumaier's variant of Kahan summation, applied to the real and
    imaginary parts separately at the context working precision.  The
    result is independent of how callers might batch the sequence, which
    keeps parallel reductions deterministic: reduce each batch with this
    function and then reduce the batch totals with it again.

    An empty sequence returns 0.
    """
    terms = list(terms)
    with ctx.workprec():
        if not terms:
            return mpc(0)
        re = _neumaier((mpc(t).real for t in terms), ctx)
        im = _neumaier((mpc(t).imag for t in terms), ctx)
        return mpc(re, im)


def mp_format(x, digits: int = 40) -> str:
    """Deterministic decimal rendering at a fixed number of significant digits.

    Used by the CLI writers so identical configurations produce
    byte-identical report files.
    """
    x = mpmath.mpmathify(x)
    if isinstance(x, mpc):
        raise TypeError("mp_format renders real values; split re/im first")
    return mpmath.nstr(
        x, digits, strip_zeros=False, min_fixed=1, max_fixed=0, show_zero_exponent=True
    )
