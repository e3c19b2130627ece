"""Cauchy matrices 1/(a_i + b_j) and the odd-moment matrices built from them.

Indices in the closed-form helpers are 1-based to match the usual matrix
notation (``cauchy_inverse_entry(params, j, i)`` is entry (j, i) of B^-1).

Two evaluation modes are supported throughout:

* float: closed-form products summed in log space with sign tracking, so
  products of ~n^2 factors neither overflow nor underflow;
* exact: ``fractions.Fraction`` arithmetic, the ground truth for small n.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from hamlab.errors import InvalidParameterError, SingularMatrixError

VARIANTS = ("step2", "step4")


@dataclass(frozen=True)
class CauchyParams:
    a: tuple
    b: tuple

    def __post_init__(self):
        a, b = tuple(self.a), tuple(self.b)
        if len(a) != len(b) or not a:
            raise InvalidParameterError("a and b must be non-empty and of equal length")
        if any(x <= 0 for x in a) or any(x <= 0 for x in b):
            raise InvalidParameterError("Cauchy parameters must be positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self):
        return len(self.a)

    @property
    def is_rational(self):
        return all(isinstance(x, Rational) for x in self.a + self.b)

    @property
    def distinct(self):
        return len(set(self.a)) == self.n and len(set(self.b)) == self.n


class _LogProduct:
    """Accumulates a product as (sign, sum of log|factor|)."""

    def __init__(self):
        self.sign = 1
        self.log = 0.0

    def mul(self, x):
        if x < 0:
            self.sign = -self.sign
        self.log += math.log(abs(x))

    def div(self, x):
        if x < 0:
            self.sign = -self.sign
        self.log -= math.log(abs(x))

    def value(self):
        return self.sign * math.exp(self.log)


def _as_fraction(x):
    return Fraction(x) if isinstance(x, Rational) else Fraction(x).limit_denominator(10**30)


def cauchy_matrix(params, exact=False):
    a, b = params.a, params.b
    if exact:
        a = [_as_fraction(x) for x in a]
        b = [_as_fraction(x) for x in b]
        out = np.empty((params.n, params.n), dtype=object)
        for i, ai in enumerate(a):
            for j, bj in enumerate(b):
                out[i, j] = 1 / (ai + bj)
        return out
    return 1.0 / (np.asarray(a, dtype=float)[:, None] + np.asarray(b, dtype=float)[None, :])


def cauchy_det(params, exact=False):
    """Closed-form determinant prod_{i<j}(a_i-a_j)(b_i-b_j) / prod_{i,j}(a_i+b_j).

    Repeated parameters give exactly 0.
    """
    if not params.distinct:
        return Fraction(0) if exact else 0.0
    a, b, n = params.a, params.b, params.n
    if exact:
        a = [_as_fraction(x) for x in a]
        b = [_as_fraction(x) for x in b]
        num = Fraction(1)
        for i in range(n):
            for j in range(i + 1, n):
                num *= (a[i] - a[j]) * (b[i] - b[j])
        den = Fraction(1)
        for ai in a:
            for bj in b:
                den *= ai + bj
        return num / den
    acc = _LogProduct()
    for i in range(n):
        for j in range(i + 1, n):
            acc.mul(a[i] - a[j])
            acc.mul(b[i] - b[j])
    for ai in a:
        for bj in b:
            acc.div(ai + bj)
    return acc.value()


def _inverse_entry(a, b, j, i, acc):
    # j, i are 0-based here.  The second numerator product skips s == j: the
    # cofactor removes column j, so a_i + b_j must not be counted twice.
    n = len(a)
    for s in range(n):
        acc.mul(a[s] + b[j])
    for s in range(n):
        if s != j:
            acc.mul(a[i] + b[s])
    for s in range(n):
        if s != j:
            acc.div(b[j] - b[s])
        if s != i:
            acc.div(a[i] - a[s])
    return acc


class _FractionProduct:
    def __init__(self):
        self.v = Fraction(1)

    def mul(self, x):
        self.v *= x

    def div(self, x):
        self.v /= x

    def value(self):
        return self.v


def cauchy_inverse_entry(params, j, i, exact=False):
    """Entry (j, i) of the inverse Cauchy matrix, 1-based."""
    n = params.n
    if not (1 <= i <= n and 1 <= j <= n):
        raise InvalidParameterError(f"indices ({j}, {i}) out of range 1..{n}")
    if not params.distinct:
        raise SingularMatrixError("Cauchy matrix with repeated parameters is singular")
    if exact:
        a = [_as_fraction(x) for x in params.a]
        b = [_as_fraction(x) for x in params.b]
        return _inverse_entry(a, b, j - 1, i - 1, _FractionProduct()).value()
    return _inverse_entry(params.a, params.b, j - 1, i - 1, _LogProduct()).value()


def cauchy_inverse(params, exact=False):
    n = params.n
    out = np.empty((n, n), dtype=object if exact else float)
    for j in range(1, n + 1):
        for i in range(1, n + 1):
            out[j - 1, i - 1] = cauchy_inverse_entry(params, j, i, exact=exact)
    return out


def _check_np(n, p):
    if int(n) != n or n < 1 or int(p) != p or p < 1:
        raise InvalidParameterError(f"n and p must be positive integers, got n={n!r}, p={p!r}")


def moment_matrix(n, p, exact=False):
    """A_n^(p): entry (i, j) = (1/2)^(4p+2i+2j-4) / (4p+2i+2j-3).

    This is the integral of u^(2p+2i-3) * u^(2p+2j-1) over [-1/2, 1/2].
    """
    _check_np(n, p)
    out = np.empty((n, n), dtype=object if exact else float)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            e = 2 * (2 * p + i + j) - 3
            val = Fraction(1, e * 2 ** (e - 1))
            out[i - 1, j - 1] = val if exact else float(val)
    return out


def moment_cauchy_params(n, p, variant="step2"):
    """Cauchy parameters of C_n^(p).

    ``step2``: B[4p, 4p+2, ..., 4p+2(n-1); 1, 3, ..., 2n-1], the matrix the
    row/column scalings actually produce.  ``step4``: the progressions
    B[4p, 4(p+1), ...; 1, 5, ..., 4n-3]; it agrees with ``step2`` only at n = 1
    and is kept to show that the determinant relation fails for it.
    """
    _check_np(n, p)
    if variant == "step2":
        a = tuple(4 * p + 2 * i for i in range(n))
        b = tuple(2 * j + 1 for j in range(n))
    elif variant == "step4":
        a = tuple(4 * (p + i) for i in range(n))
        b = tuple(4 * j + 1 for j in range(n))
    else:
        raise InvalidParameterError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return CauchyParams(a, b)


def moment_det_scale_log2(n, p):
    """log2 of det A_n^(p) / det C_n^(p), i.e. -2n(2p+n-1)."""
    return -2 * n * (2 * p + n - 1)


def invert_moment_matrix(n, p, exact=False):
    """Inverse of A_n^(p) through the Cauchy inverse and diagonal scalings.

    A = D_r C D_c with D_r = diag(4^-(i-1)) and D_c = diag(4^-(2p+j-1)), so
    A^-1 = D_c^-1 C^-1 D_r^-1.  The moment matrix is Hilbert-like; floating LU
    is never used.  Entries are computed as Fractions and rounded once, so each
    float entry is correctly rounded; ``exact=True`` returns the Fractions.
    """
    params = moment_cauchy_params(n, p, "step2")
    inv = cauchy_inverse(params, exact=True)
    out = np.empty((n, n), dtype=object if exact else float)
    for r in range(n):
        for c in range(n):
            val = inv[r, c] * 4 ** (2 * p + r) * 4**c
            out[r, c] = val if exact else float(val)
    return out


def invert_moment_matrix_float(n, p):
    """Same as :func:`invert_moment_matrix` using the log-space float products."""
    params = moment_cauchy_params(n, p, "step2")
    inv = cauchy_inverse(params)
    r = np.arange(n)
    return inv * (4.0 ** (2 * p + r))[:, None] * (4.0**r)[None, :]


def det_relation_check(n, p, variant="step2"):
    """Return (closed-form det A_n^(p), LU det A_n^(p)).

    The closed form is 2^(-2n(2p+n-1)) * det C_n^(p) with det C from the Cauchy
    product formula; the second value is numpy's LU determinant.
    """
    params = moment_cauchy_params(n, p, variant)
    closed = math.ldexp(cauchy_det(params), moment_det_scale_log2(n, p))
    lu = float(np.linalg.det(moment_matrix(n, p)))
    return closed, lu


def alternative_inverse_entry(n, p, j, i):
    """A product formula proposed for entry (j, i) of the inverse of A_n^(p), 1-based.

    Kept only as a cross-check: it does not reproduce the true inverse (see
    tests), so nothing else in the package uses it.
    """
    _check_np(n, p)
    num = Fraction(4) ** (2 * p + i + j - n + 1)
    for s in range(1, n + 1):
        num *= 4 * p + 2 * s + 2 * j - 3
    for s in range(1, n + 1):
        if s != j:
            num *= 4 * p + 2 * s + 2 * j - 3
    den = Fraction(1)
    for s in range(1, n + 1):
        if s != j:
            den *= j - s
        if s != i:
            den *= i - s
    return num / den
