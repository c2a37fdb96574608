"""Dirichlet characters mod an odd prime: tables, Gauss sums, orthogonality.

A character mod prime q is determined by its index j against a fixed
primitive root g: chi_j(g^k) = e(jk/(q-1)).  The table stores the discrete
log of every residue and the (q-1)-th roots of unity at working precision,
so evaluating any character anywhere is two table lookups.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

import mpmath
from mpmath import mpf, mpc
import sympy

from .errors import DomainError, NotPrimeError
from .hp import DEFAULT_CONTEXT, PrecisionContext, compensated_sum

__all__ = [
    "CharacterTable",
    "DirichletCharacter",
    "build_table",
    "smallest_primitive_root",
    "gauss_sum",
    "orthogonality_even",
    "orthogonality_odd",
    "twisted_gauss_even",
    "twisted_gauss_odd",
]


def smallest_primitive_root(q: int) -> int:
    """Smallest positive generator of (Z/qZ)^* for prime q."""
    if q == 2:
        return 1
    phi = q - 1
    prime_divs = list(sympy.factorint(phi).keys())
    g = 2
    while True:
        if all(pow(g, phi // p, q) != 1 for p in prime_divs):
            return g
        g += 1


@dataclass(frozen=True)
class CharacterTable:
    """Discrete-log table and root-of-unity cache for one odd prime modulus."""

    q: int
    g: int
    log_table: tuple  # log_table[n] = k with g^k = n (mod q); index 0 unused
    roots: tuple  # roots[r] = e(r/(q-1)) for r in [0, q-1)
    ctx: PrecisionContext = field(compare=False)

    @property
    def order(self) -> int:
        return self.q - 1

    def character(self, j: int) -> "DirichletCharacter":
        return DirichletCharacter(table=self, j=j % self.order)

    def characters(self, parity: str | None = None, primitive_only: bool = True):
        """All characters, optionally filtered to one parity class.

        Even characters have even index j (chi(-1) = (-1)^j); the principal
        character j = 0 is the only imprimitive one mod a prime.
        """
        for j in range(self.order):
            if primitive_only and j == 0:
                continue
            if parity == "even" and j % 2 != 0:
                continue
            if parity == "odd" and j % 2 != 1:
                continue
            yield self.character(j)


@dataclass(frozen=True)
class DirichletCharacter:
    """Character chi_j with chi(g^k) = e(jk/(q-1))."""

    table: CharacterTable
    j: int

    @property
    def q(self) -> int:
        return self.table.q

    @property
    def delta(self) -> int:
        """Parity bit: 0 for even (chi(-1)=1), 1 for odd."""
        return self.j % 2

    @property
    def is_principal(self) -> bool:
        return self.j == 0

    @property
    def is_primitive(self) -> bool:
        return self.j != 0

    def __call__(self, n: int) -> mpc:
        n = n % self.q
        if n == 0:
            return mpc(0)
        r = (self.j * self.table.log_table[n]) % self.table.order
        return self.table.roots[r]

    def conjugate(self) -> "DirichletCharacter":
        return DirichletCharacter(table=self.table, j=(-self.j) % self.table.order)


def build_table(q: int, ctx: PrecisionContext = DEFAULT_CONTEXT) -> CharacterTable:
    """Character table mod the odd prime q with the smallest primitive root."""
    if q % 2 == 0:
        raise NotPrimeError(f"modulus {q} is even; need an odd prime")
    if q < 3 or not sympy.isprime(q):
        raise NotPrimeError(f"modulus {q} is not an odd prime")
    g = smallest_primitive_root(q)
    log_table = [0] * q
    acc = 1
    for k in range(q - 1):
        log_table[acc] = k
        acc = (acc * g) % q
    with ctx.workprec():
        order = q - 1
        roots = [mpmath.expjpi(mpf(2 * r) / order) for r in range(order)]
    return CharacterTable(q=q, g=g, log_table=tuple(log_table), roots=tuple(roots), ctx=ctx)


def _additive_roots(table: CharacterTable) -> list:
    """e(k/q) for k in [0, q); cached on the table object."""
    cache = getattr(table, "_additive_roots", None)
    if cache is None:
        with table.ctx.workprec():
            cache = [mpmath.expjpi(mpf(2 * k) / table.q) for k in range(table.q)]
        object.__setattr__(table, "_additive_roots", cache)
    return cache


def gauss_sum(chi: DirichletCharacter) -> mpc:
    """tau(chi) = sum_k e(k/q) chi(k) by direct summation."""
    if not chi.is_primitive:
        raise DomainError("Gauss sum defined here for primitive characters only")
    table = chi.table
    e_q = _additive_roots(table)
    with table.ctx.workprec():
        terms = [e_q[k] * chi(k) for k in range(1, table.q)]
        return compensated_sum(terms, table.ctx)


def _check_coprime(q: int, *ns: int):
    for n in ns:
        if gcd(n, q) != 1:
            raise DomainError(f"{n} is not coprime to the modulus {q}")


def _rounded_int(x: mpc, ctx: PrecisionContext, scale: float) -> int:
    """Nearest integer, verifying the numeric sum is within rounding reach."""
    with ctx.workprec():
        r = mpmath.nint(x.real)
        if abs(x.real - r) > ctx.scaled_tol(scale) or abs(x.imag) > ctx.scaled_tol(scale):
            raise ArithmeticError("character sum failed to collapse to an integer")
        return int(r)


def orthogonality_even(table: CharacterTable, n: int, m: int) -> int:
    """sum over even primitive chi of chi(n) conj(chi)(m), as an exact integer."""
    q = table.q
    _check_coprime(q, n % q, m % q)
    with table.ctx.workprec():
        total = compensated_sum(
            (chi(n) * chi.conjugate()(m) for chi in table.characters(parity="even")),
            table.ctx,
        )
    return _rounded_int(total, table.ctx, scale=8 * q)


def orthogonality_odd(table: CharacterTable, n: int, m: int) -> int:
    """sum over odd primitive chi of chi(n) conj(chi)(m), as an exact integer."""
    q = table.q
    _check_coprime(q, n % q, m % q)
    with table.ctx.workprec():
        total = compensated_sum(
            (chi(n) * chi.conjugate()(m) for chi in table.characters(parity="odd")),
            table.ctx,
        )
    return _rounded_int(total, table.ctx, scale=8 * q)


def twisted_gauss_even(table: CharacterTable, n: int) -> mpc:
    """sum over even primitive chi of tau(chi) conj(chi)(n), by double summation.

    Collapses to (q-1) cos(2 pi n / q) + 1; callers compare against that
    closed form.
    """
    _check_coprime(table.q, n % table.q)
    with table.ctx.workprec():
        terms = [
            gauss_sum(chi) * chi.conjugate()(n) for chi in table.characters(parity="even")
        ]
        return compensated_sum(terms, table.ctx)


def twisted_gauss_odd(table: CharacterTable, n: int) -> mpc:
    """sum over odd primitive chi of (tau(chi)/i) conj(chi)(n).

    Collapses to (q-1) sin(2 pi n / q).
    """
    _check_coprime(table.q, n % table.q)
    with table.ctx.workprec():
        i_unit = mpc(0, 1)
        terms = [
            gauss_sum(chi) / i_unit * chi.conjugate()(n)
            for chi in table.characters(parity="odd")
        ]
        return compensated_sum(terms, table.ctx)
