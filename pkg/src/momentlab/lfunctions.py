"""Dirichlet L-values via the Hurwitz-zeta decomposition.

L(s, chi) = q^(-s) sum_{a=1}^{q-1} chi(a) zeta(s, a/q) holds for every s
(by continuation of both sides), so one set of q-1 Hurwitz values covers
an entire character family.  Because chi_j(g^k) = e(jk/(q-1)), the family
map is a length-(q-1) DFT of the Hurwitz values indexed by discrete log,
which Bluestein's chirp reduction evaluates in O(q log q) multiplications
for any prime q.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import mpmath
from mpmath import mpf, mpc

from .characters import CharacterTable, DirichletCharacter, gauss_sum
from .errors import DomainError, PoleError
from .hp import DEFAULT_CONTEXT, PrecisionContext, compensated_sum
from .specfun import hurwitz_zeta, log_gamma

__all__ = [
    "l_value",
    "batch_l_values",
    "LValueBatch",
    "functional_equation_residual",
    "dft_arbitrary",
    "fft_pow2",
]

# ---------------------------------------------------------------------------
# high-precision FFT / Bluestein

_TWIDDLE_CACHE: dict = {}


def _twiddles(L: int, inverse: bool) -> list:
    key = (L, inverse, mpmath.mp.prec)
    tw = _TWIDDLE_CACHE.get(key)
    if tw is None:
        sgn = 2 if inverse else -2
        tw = [mpmath.expjpi(mpf(sgn * k) / L) for k in range(L // 2)]
        _TWIDDLE_CACHE[key] = tw
    return tw


def fft_pow2(vec: list, inverse: bool = False) -> list:
    """In-order iterative radix-2 FFT; len(vec) must be a power of two.

    Forward kernel is e(-jk/L); inverse applies e(+jk/L) and the 1/L scale.
    Runs at the ambient mpmath precision.
    """
    L = len(vec)
    if L & (L - 1):
        raise DomainError("fft_pow2 length must be a power of two")
    a = list(vec)
    # bit-reversal permutation
    j = 0
    for i in range(1, L):
        bit = L >> 1
        while j & bit:
            j ^= bit
            bit >>= 1
        j |= bit
        if i < j:
            a[i], a[j] = a[j], a[i]
    tw = _twiddles(L, inverse)
    size = 2
    while size <= L:
        half = size >> 1
        step = L // size
        for start in range(0, L, size):
            k = 0
            for off in range(start, start + half):
                u = a[off]
                v = a[off + half] * tw[k]
                a[off] = u + v
                a[off + half] = u - v
                k += step
        size <<= 1
    if inverse:
        inv = mpf(1) / L
        a = [x * inv for x in a]
    return a


def dft_arbitrary(vec: list, sign: int = 1) -> list:
    """X_j = sum_k vec[k] e(sign * jk / n) for arbitrary n via Bluestein.

    jk is rewritten as (j^2 + k^2 - (j-k)^2)/2, turning the DFT into a
    linear convolution with the chirp e(-sign m^2 / 2n), zero-padded to the
    next power of two >= 2n-1.  Chirp exponents are reduced mod 2n exactly
    in integer arithmetic before evaluating any root of unity.
    """
    n = len(vec)
    if n == 1:
        return [mpc(vec[0])]
    if sign not in (-1, 1):
        raise DomainError("sign must be +-1")
    L = 1
    while L < 2 * n - 1:
        L <<= 1
    two_n = 2 * n
    chirp = [mpmath.expjpi(mpf(sign * ((k * k) % two_n)) / n) for k in range(n)]
    a = [mpc(0)] * L
    for k in range(n):
        a[k] = vec[k] * chirp[k]
    b = [mpc(0)] * L
    for m in range(-(n - 1), n):
        b[m % L] = mpmath.conj(chirp[abs(m)])
    fa = fft_pow2(a)
    fb = fft_pow2(b)
    prod = [fa[i] * fb[i] for i in range(L)]
    conv = fft_pow2(prod, inverse=True)
    return [chirp[j] * conv[j] for j in range(n)]


# ---------------------------------------------------------------------------
# single L-values

def _hurwitz_family(s, table: CharacterTable, ctx: PrecisionContext, hurwitz_tol=None) -> list:
    """h_k = zeta(s, (g^k mod q)/q) for k = 0..q-2 (discrete-log order)."""
    q = table.q
    residue = [0] * (q - 1)
    acc = 1
    for k in range(q - 1):
        residue[k] = acc
        acc = (acc * table.g) % q
    return [
        hurwitz_zeta(s, ctx=ctx, a_rational=(r, q), target_tol=hurwitz_tol)
        for r in residue
    ]


def l_value(s, chi: DirichletCharacter, ctx: PrecisionContext | None = None) -> mpc:
    """L(s, chi) by the finite Hurwitz decomposition; valid for all s.

    The principal character carries the zeta pole, so s = 1 is refused
    there; primitive characters are entire.
    """
    ctx = ctx or chi.table.ctx
    q = chi.q
    with ctx.workprec():
        s = mpc(s) if mpc(s).imag != 0 else mpf(mpc(s).real)
        if chi.is_principal and abs(s - 1) < mpf(2) ** (-ctx.bits // 2):
            raise PoleError("principal-character L has the zeta pole at s = 1")
        terms = []
        for a in range(1, q):
            ca = chi(a)
            if ca != 0:
                terms.append(ca * hurwitz_zeta(s, ctx=ctx, a_rational=(a, q)))
        total = compensated_sum(terms, ctx)
        return mpmath.exp(-s * mpmath.log(q)) * total


@dataclass
class LValueBatch:
    """All L(s, chi_j) for one modulus, indexed by character index j.

    values[0] is the principal character's (imprimitive) L-value; moment
    code over primitive families skips it.
    """

    q: int
    s: mpc
    values: list
    method: str
    hurwitz_values: list = field(repr=False, default_factory=list)
    seconds: float = 0.0

    def primitive(self, parity: str | None = None):
        """(j, L-value) pairs over primitive characters of optional parity."""
        for j in range(1, self.q - 1):
            if parity == "even" and j % 2 != 0:
                continue
            if parity == "odd" and j % 2 != 1:
                continue
            yield j, self.values[j]

    def parseval_residual(self, ctx: PrecisionContext) -> mpf:
        """|sum_j |q^s L_j|^2 - (q-1) sum_k |h_k|^2|, a DFT self-check."""
        with ctx.workprec():
            qs = mpmath.exp(mpc(self.s) * mpmath.log(self.q))
            lhs = compensated_sum(
                (abs(v * qs) ** 2 for v in self.values), ctx
            )
            rhs = (self.q - 1) * compensated_sum(
                (abs(h) ** 2 for h in self.hurwitz_values), ctx
            )
            return abs(lhs - rhs)


def batch_l_values(
    s,
    table: CharacterTable,
    method: str = "dft",
    ctx: PrecisionContext | None = None,
    hurwitz_tol=None,
) -> LValueBatch:
    """L(s, chi_j) for every character mod q at once.

    ``dft`` evaluates the q-1 Hurwitz values once and applies the
    Bluestein transform; ``direct`` performs the quadratic character-sum
    per j and exists as the independent cross-check path.  ``hurwitz_tol``
    tightens the per-term absolute tolerance when deep-strip L-values are
    about to be amplified by q^|Re s| scales downstream.
    """
    ctx = ctx or table.ctx
    if method not in ("dft", "direct"):
        raise DomainError("method must be 'dft' or 'direct'")
    q = table.q
    t0 = time.perf_counter()
    with ctx.workprec():
        s = mpc(s) if mpc(s).imag != 0 else mpf(mpc(s).real)
        h = _hurwitz_family(s, table, ctx, hurwitz_tol=hurwitz_tol)
        n = q - 1
        if method == "dft":
            transformed = dft_arbitrary(h, sign=1)
        else:
            transformed = []
            roots = table.roots
            for j in range(n):
                terms = [h[k] * roots[(j * k) % n] for k in range(n)]
                transformed.append(compensated_sum(terms, ctx))
        qpow = mpmath.exp(-mpc(s) * mpmath.log(q))
        values = [qpow * x for x in transformed]
    return LValueBatch(
        q=q,
        s=s,
        values=values,
        method=method,
        hurwitz_values=h,
        seconds=time.perf_counter() - t0,
    )


def functional_equation_residual(
    s, chi: DirichletCharacter, ctx: PrecisionContext | None = None
) -> mpf:
    """|L(s,chi) - tau(chi)/i^delta * pi^(s-1/2)/q^s * Gamma-ratio * L(1-s, conj chi)|.

    Both sides go through l_value, so this measures the whole evaluation
    stack against the completed-L symmetry.
    """
    ctx = ctx or chi.table.ctx
    if not chi.is_primitive:
        raise DomainError("functional equation stated for primitive characters")
    with ctx.workprec():
        s = mpc(s)
        delta = chi.delta
        lhs = l_value(s, chi, ctx)
        tau = gauss_sum(chi)
        lg_ratio = mpmath.exp(
            log_gamma((1 - s + delta) / 2, ctx) - log_gamma((s + delta) / 2, ctx)
        )
        pref = (
            tau
            / mpc(0, 1) ** delta
            * mpmath.exp((s - mpf(1) / 2) * mpmath.log(mpmath.pi))
            * mpmath.exp(-s * mpmath.log(chi.q))
        )
        rhs = pref * lg_ratio * l_value(1 - s, chi.conjugate(), ctx)
        return abs(lhs - rhs)
