"""Command-line entry point: moment reports, verification suites, prime scans.

Subcommands
-----------
moment : exact moment at s = 0 for one modulus, staged main-term
         decomposition written as CSV or JSON rows.
verify : identity suites (orthogonality/Gauss, functional equations,
         Mellin reconstructions, contour chain) with machine-readable
         pass/fail output.
scan   : prime-ladder runs: per-prime remainders, fitted constants,
         decay exponents; also the continued-integral convergence table.

Exit codes: 0 success, 1 tolerance failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass

import mpmath
from mpmath import mpf, mpc
import sympy

from .hp import PrecisionContext, mp_format
from .errors import DomainError

CSV_HEADER = "q,parity,stage,label,re,im,abs_remainder,seconds"


@dataclass
class RunConfig:
    command: str
    q: int | None = None
    ladder: tuple = ()
    parity: str = "even"
    bits: int = 256
    tol: str = "1e-40"
    c: str = "10.5"
    output: str | None = None
    fmt: str = "csv"
    suite: str = "identities"
    s: str = "9.5"
    target: str = "c1"
    jobs: int = 1

    def context(self) -> PrecisionContext:
        return PrecisionContext(bits=self.bits, tol=mpf(self.tol))


def _validate_q(q: int) -> None:
    if q is None or q < 3 or q % 2 == 0 or not sympy.isprime(q):
        raise DomainError("modulus must be an odd prime")


def _validate_c(c: str) -> mpf:
    cv = mpf(c)
    if not (cv > 10 and (2 * cv) % 2 == 1):
        raise DomainError("c must lie in 1/2 + Z and exceed 10")
    return cv


def _emit_rows(rows: list, config: RunConfig) -> None:
    """Write report rows; fixed 40-digit decimal rendering keeps identical
    configurations byte-identical."""
    if config.fmt == "csv":
        lines = [CSV_HEADER]
        for r in rows:
            lines.append(
                ",".join(
                    [
                        str(r["q"]),
                        r["parity"],
                        str(r["stage"]),
                        r["label"],
                        mp_format(r["re"]),
                        mp_format(r["im"]),
                        mp_format(r["abs_remainder"]),
                        "%.3f" % r["seconds"],
                    ]
                )
            )
        text = "\n".join(lines) + "\n"
    else:
        payload = []
        for r in rows:
            payload.append(
                {
                    "q": r["q"],
                    "parity": r["parity"],
                    "stage": r["stage"],
                    "label": r["label"],
                    "re": mp_format(r["re"]),
                    "im": mp_format(r["im"]),
                    "abs_remainder": mp_format(r["abs_remainder"]),
                    "seconds": round(r["seconds"], 3),
                }
            )
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if config.output:
        with open(config.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _moment_rows(q: int, parity: str, ctx: PrecisionContext) -> list:
    from .moments import theorem1_decomposition

    rep = theorem1_decomposition(q, parity, ctx)
    rows = []
    rows.append(
        {
            "q": q,
            "parity": parity,
            "stage": 0,
            "label": "exact moment",
            "re": mpc(rep.F_value).real,
            "im": mpc(rep.F_value).imag,
            "abs_remainder": abs(rep.remainder_after[0]),
            "seconds": rep.seconds,
        }
    )
    for k, (label, value) in enumerate(rep.main_terms, start=1):
        rows.append(
            {
                "q": q,
                "parity": parity,
                "stage": k,
                "label": label,
                "re": mpc(value).real,
                "im": mpc(value).imag,
                "abs_remainder": abs(rep.remainder_after[k]),
                "seconds": 0.0,
            }
        )
    return rows


def cmd_moment(config: RunConfig) -> int:
    from .moments import theorem1_decomposition

    _validate_q(config.q)
    ctx = config.context()
    if config.q == 3 and config.parity == "even":
        # no even primitive characters mod 3: emit the empty-family row
        rows = [
            {
                "q": 3,
                "parity": "even",
                "stage": 0,
                "label": "exact moment (empty family)",
                "re": mpf(0),
                "im": mpf(0),
                "abs_remainder": mpf(0),
                "seconds": 0.0,
            }
        ]
        _emit_rows(rows, config)
        return 0
    rows = _moment_rows(config.q, config.parity, ctx)
    _emit_rows(rows, config)
    rep_ok = True
    with ctx.workprec():
        from .moments import theorem1_decomposition as _t

        rep = _t(config.q, config.parity, ctx)
        rep_ok = rep.bookkeeping_residual(ctx) < ctx.scaled_tol(64 * config.q)
    return 0 if rep_ok else 1


def _suite_identities(q: int, ctx: PrecisionContext) -> list:
    from .characters import (
        build_table,
        gauss_sum,
        orthogonality_even,
        orthogonality_odd,
        twisted_gauss_even,
        twisted_gauss_odd,
    )
    from .lfunctions import functional_equation_residual

    failures = []
    table = build_table(q, ctx)
    with ctx.workprec():
        for n in range(1, q):
            for m in range(1, q):
                ev = orthogonality_even(table, n, m)
                expect = (q - 3) // 2 if (n - m) % q == 0 or (n + m) % q == 0 else -1
                if ev != expect:
                    failures.append(f"orthogonality_even({q},{n},{m}) = {ev} != {expect}")
                od = orthogonality_odd(table, n, m)
                if (n - m) % q == 0:
                    expect_o = (q - 1) // 2
                elif (n + m) % q == 0:
                    expect_o = -(q - 1) // 2
                else:
                    expect_o = 0
                if od != expect_o:
                    failures.append(f"orthogonality_odd({q},{n},{m}) = {od} != {expect_o}")
        for n in range(1, q):
            tw = twisted_gauss_even(table, n)
            closed = (q - 1) * mpmath.cospi(mpf(2 * n) / q) + 1
            if abs(tw - closed) > ctx.scaled_tol(32 * q):
                failures.append(f"twisted_gauss_even({q},{n}) off by {mpmath.nstr(abs(tw - closed), 3)}")
            tw = twisted_gauss_odd(table, n)
            closed = (q - 1) * mpmath.sinpi(mpf(2 * n) / q)
            if abs(tw - closed) > ctx.scaled_tol(32 * q):
                failures.append(f"twisted_gauss_odd({q},{n}) off by {mpmath.nstr(abs(tw - closed), 3)}")
        for chi in table.characters():
            tau = gauss_sum(chi)
            if abs(abs(tau) ** 2 - q) > ctx.scaled_tol(32 * q):
                failures.append(f"|tau(chi_{chi.j})|^2 != {q}")
        for chi in table.characters():
            r = functional_equation_residual(mpf(1) / 2, chi, ctx)
            if r > ctx.scaled_tol(64 * q):
                failures.append(f"functional equation residual {mpmath.nstr(r, 3)} at chi_{chi.j}")
    return failures


def _suite_contour(q: int, s: mpf, ctx: PrecisionContext) -> tuple[list, dict]:
    from .moments import h1_series, h2_vs_h3

    failures = []
    info = {}
    with ctx.workprec():
        h1 = h1_series(q, s, ctx)
        d1 = abs(h1["direct"] - h1["decomposed"])
        info["h1_direct_vs_decomposed"] = d1
        if d1 > mpf("1e-25"):
            failures.append(f"H1 direct vs decomposed differ by {mpmath.nstr(d1, 3)}")
        ser, con = h2_vs_h3(q, s, ctx=ctx)
        d2 = abs(ser - con)
        info["h2_series_vs_contour"] = d2
        if d2 > mpf("1e-25"):
            failures.append(f"H2 series vs contour differ by {mpmath.nstr(d2, 3)}")
    return failures, info


def _suite_mellin(ctx: PrecisionContext) -> list:
    from .contour import mellin_cos_check, mellin_sin_check

    failures = []
    with ctx.workprec():
        for x in (mpf("0.5"), mpf(1)):
            for d in (mpf("-0.75"), mpf("-0.6")):
                r = mellin_cos_check(x, d, ctx)
                if r > mpf("1e-18"):
                    failures.append(f"mellin cos x={x} d={d}: {mpmath.nstr(r, 3)}")
                r = mellin_sin_check(x, d, ctx)
                if r > mpf("1e-18"):
                    failures.append(f"mellin sin x={x} d={d}: {mpmath.nstr(r, 3)}")
    return failures


def _suite_stirling(ctx: PrecisionContext) -> list:
    from .specfun import gamma_cos_stirling, stirling_coefficients

    failures = []
    with ctx.workprec():
        z = mpf(1) / 4
        coeffs = stirling_coefficients(z, 1, 0, ctx)
        a0 = mpmath.sqrt(mpmath.pi / 2) * mpmath.expjpi(mpf(-1) / 4)
        if abs(coeffs[0] - a0) > mpf("1e-30"):
            failures.append("a_0 mismatch")
        from .specfun import _gamma_cos_direct

        for M in (0, 1, 2):
            errs = []
            for texp in (2, 3, 4):
                t = mpf(10) ** texp
                val, _ = gamma_cos_stirling(z, t, M, ctx)
                direct = _gamma_cos_direct(z, t, ctx)
                errs.append(abs(val - direct) / t ** (float(z) - 0.5 - M - 1))
            ratio = max(errs) / min(errs)
            if ratio > 20:
                failures.append(f"Stirling decay ratio {mpmath.nstr(ratio, 4)} at M={M}")
    return failures


def cmd_verify(config: RunConfig) -> int:
    ctx = config.context()
    _validate_c(config.c)
    failures: list = []
    info: dict = {}
    if config.suite == "identities":
        _validate_q(config.q)
        failures = _suite_identities(config.q, ctx)
    elif config.suite == "contour":
        _validate_q(config.q)
        failures, info = _suite_contour(config.q, mpf(config.s), ctx)
    elif config.suite == "mellin":
        failures = _suite_mellin(ctx)
    elif config.suite == "stirling":
        failures = _suite_stirling(ctx)
    else:
        raise DomainError(f"unknown suite '{config.suite}'")
    for key, val in info.items():
        print(f"{key} = {mpmath.nstr(val, 6)}")
    if failures:
        for f in failures[:10]:
            print("FAIL:", f)
        print(f"suite {config.suite}: {len(failures)} failure(s)")
        return 1
    print(f"suite {config.suite}: pass")
    return 0


def cmd_scan(config: RunConfig) -> int:
    from .moments import (
        extract_constants,
        i_extracted,
        theorem1_decomposition,
        zeta_half_sq,
    )

    ctx = config.context()
    ladder = config.ladder or (101, 211, 499, 1009, 2003)
    ladder = tuple(sorted(set(int(p) for p in ladder)))
    for p in ladder:
        _validate_q(p)
    if len(ladder) < 4:
        raise DomainError("scan needs a ladder of at least 4 primes")
    rows = []
    if config.target == "i0":
        with ctx.workprec():
            zh2 = zeta_half_sq(ctx)
            rems = {}
            for p in ladder:
                t0 = time.perf_counter()
                val = i_extracted(p, ctx)
                rems[p] = val - zh2
                rows.append(
                    {
                        "q": p,
                        "parity": "even",
                        "stage": 0,
                        "label": "I(0,q) - zeta(1/2)^2",
                        "re": mpc(rems[p]).real,
                        "im": mpf(0),
                        "abs_remainder": abs(rems[p]),
                        "seconds": time.perf_counter() - t0,
                    }
                )
            model = extract_constants(
                ladder[:-1], "even", 1, ctx, holdout=ladder[-1:], basis="q^-n",
                remainders=rems,
            )
            rows.append(
                {
                    "q": 0,
                    "parity": "even",
                    "stage": 1,
                    "label": "fitted r_1 (stderr %.2e)" % model.constants[0][1],
                    "re": mpf(model.constants[0][0]),
                    "im": mpf(0),
                    "abs_remainder": mpf(0),
                    "seconds": 0.0,
                }
            )
        _emit_rows(rows, config)
        return 0
    # default: c_1 extraction on the stage remainders
    with ctx.workprec():
        rems = {}
        for p in ladder:
            rep = theorem1_decomposition(p, config.parity, ctx)
            rems[p] = rep.remainder_after[-1]
            rows.append(
                {
                    "q": p,
                    "parity": config.parity,
                    "stage": len(rep.main_terms),
                    "label": "stage remainder",
                    "re": mpc(rems[p]).real,
                    "im": mpc(rems[p]).imag,
                    "abs_remainder": abs(rems[p]),
                    "seconds": rep.seconds,
                }
            )
        n_fit = max(2, len(ladder) - 2)
        model = extract_constants(
            ladder[:n_fit], config.parity, 1, ctx, holdout=ladder[n_fit:], remainders=rems
        )
        rows.append(
            {
                "q": 0,
                "parity": config.parity,
                "stage": 99,
                "label": "fitted c_1 (stderr %.2e)" % model.constants[0][1],
                "re": mpf(model.constants[0][0]),
                "im": mpf(0),
                "abs_remainder": mpf(0),
                "seconds": 0.0,
            }
        )
        decay_ok = True
        if model.holdout_decay is not None:
            rows.append(
                {
                    "q": 0,
                    "parity": config.parity,
                    "stage": 100,
                    "label": "holdout decay exponent",
                    "re": mpf(model.holdout_decay),
                    "im": mpf(0),
                    "abs_remainder": mpf(0),
                    "seconds": 0.0,
                }
            )
            decay_ok = -2.4 < model.holdout_decay < -0.6
    _emit_rows(rows, config)
    return 0 if decay_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momentlab",
        description="second moments of Dirichlet L-functions and their identity chain",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--precision-bits", type=int, default=None)
        p.add_argument("--tol", type=str, default="1e-40")
        p.add_argument("--c", type=str, default="10.5")
        p.add_argument("--output", type=str, default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("moment", help="moment decomposition at s = 0")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--parity", choices=("even", "odd"), default="even")
    common(p)

    p = sub.add_parser("verify", help="identity verification suites")
    p.add_argument("--suite", choices=("identities", "contour", "mellin", "stirling"), default="identities")
    p.add_argument("--q", type=int, default=5)
    p.add_argument("--s", type=str, default="9.5")
    common(p)

    p = sub.add_parser("scan", help="prime-ladder scans and constant extraction")
    p.add_argument("--ladder", type=int, nargs="*", default=None)
    p.add_argument("--parity", choices=("even", "odd"), default="even")
    p.add_argument("--target", choices=("c1", "i0"), default="c1")
    common(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    bits = args.precision_bits
    if bits is None:
        bits = int(os.environ.get("MOMENTLAB_PRECISION_BITS", "256"))
    config = RunConfig(
        command=args.command,
        q=getattr(args, "q", None),
        ladder=tuple(args.ladder) if getattr(args, "ladder", None) else (),
        parity=getattr(args, "parity", "even"),
        bits=bits,
        tol=args.tol,
        c=args.c,
        output=args.output,
        fmt=args.format,
        suite=getattr(args, "suite", "identities"),
        s=getattr(args, "s", "9.5"),
        target=getattr(args, "target", "c1"),
        jobs=args.jobs,
    )
    try:
        if config.command == "moment":
            return cmd_moment(config)
        if config.command == "verify":
            return cmd_verify(config)
        if config.command == "scan":
            return cmd_scan(config)
        raise DomainError(f"unknown command {config.command}")
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
