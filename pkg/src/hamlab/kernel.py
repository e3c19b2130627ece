"""Kernels K_(n,p)(t, u; k) whose Hammerstein equation has n designed positive solutions.

With x = t - 1/2 and v = u - 1/2 the kernel is

    K(t, u) = 1 + sum_s ((1 + x^(2(p+s)-1))^(1/k) - 1) * phi_s(v),

where phi_1..phi_n are odd polynomials biorthogonal to v^(2(p+j)-1) on
[-1/2, 1/2].  Then g_j(t) = (1 + x^(2(p+j)-1))^(1/k) satisfies H_k g_j = g_j.

For k in the 1e2..1e7 range every k-th root goes through log1p/expm1; the
bracket above is O(1/k) and is never formed by subtracting 1 from a root.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from hamlab.cauchy import invert_moment_matrix
from hamlab.errors import EvaluationError, InvalidParameterError
from hamlab.quadrature import GridFunction


def _check_params(n, p, k):
    for name, value, low in (("n", n, 1), ("p", p, 1), ("k", k, 2)):
        if int(value) != value or value < low:
            raise InvalidParameterError(f"{name} must be an integer >= {low}, got {value!r}")


def kth_root_minus_one(x, k):
    """(1 + x)^(1/k) - 1 without cancellation."""
    return np.expm1(np.log1p(x) / k)


def kth_root(x, k):
    """(1 + x)^(1/k)."""
    return np.exp(np.log1p(x) / k)


def _odd_double_factorial_log(m):
    # log((2m+1)!!) = sum of logs of 1, 3, ..., 2m+1
    return sum(math.log(v) for v in range(1, 2 * m + 2, 2))


def _odd_double_factorial(m):
    out = 1
    for v in range(1, 2 * m + 2, 2):
        out *= v
    return out


def zeta0(n, exact=False):
    """Positivity threshold (64/9) (4^n-1)/(4n+1) ((4n+1)!! / ((n-1)! (2n+1)!!))^2."""
    if int(n) != n or n < 1:
        raise InvalidParameterError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    if exact or n <= 8:
        val = (
            Fraction(64, 9)
            * Fraction(4**n - 1, 4 * n + 1)
            * Fraction(_odd_double_factorial(2 * n), math.factorial(n - 1) * _odd_double_factorial(n)) ** 2
        )
        return val if exact else float(val)
    log_ratio = _odd_double_factorial_log(2 * n) - math.lgamma(n) - _odd_double_factorial_log(n)
    return math.exp(
        math.log(64 / 9) + math.log(4.0**n - 1) - math.log(4 * n + 1) + 2 * log_ratio
    )


def min_order(n):
    """Smallest integer k with k >= zeta0(n)."""
    z = zeta0(n, exact=True) if n <= 8 else zeta0(n)
    return math.ceil(z)


@dataclass(frozen=True)
class PhiPolynomial:
    """phi_s(v) = sum_i coeffs[i] * v^(2p+2i-1), i = 0..n-1 (v in [-1/2, 1/2])."""

    s: int
    n: int
    p: int
    coeffs: np.ndarray

    @property
    def exponents(self):
        return 2 * self.p - 1 + 2 * np.arange(self.n)

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        v2 = v * v
        acc = np.zeros_like(v)
        for c in self.coeffs[::-1]:
            acc = acc * v2 + c
        # v * (v^2)^(p-1) rather than v^(2p-1): numpy's power is not exactly odd.
        return acc * v2 ** (self.p - 1) * v


def build_phi(s, n, p, inverse_matrix=None):
    """Row ``s`` (1-based) of the inverse moment matrix as an odd polynomial."""
    if not 1 <= s <= n:
        raise InvalidParameterError(f"s must be in 1..{n}, got {s!r}")
    if inverse_matrix is None:
        inverse_matrix = invert_moment_matrix(n, p)
    coeffs = np.array(inverse_matrix[s - 1], dtype=float)
    if coeffs.shape != (n,):
        raise InvalidParameterError(f"inverse matrix must be {n}x{n}")
    coeffs.setflags(write=False)
    return PhiPolynomial(s, n, p, coeffs)


def designed_exponent(j, p):
    return 2 * (p + j) - 1


@dataclass(frozen=True, eq=False)
class ConstructedKernel:
    """Evaluator of K_(n,p)(t - 1/2, u - 1/2; k) on [0, 1]^2.

    Calls broadcast over numpy arrays.  :meth:`deviation` returns K - 1 with
    full relative accuracy, which the operators use to form differences of
    kernel rows without cancellation.
    """

    n: int
    p: int
    k: int
    phis: tuple

    def brackets(self, t):
        x = np.asarray(t, dtype=float) - 0.5
        return [kth_root_minus_one(x ** designed_exponent(s, self.p), self.k) for s in range(1, self.n + 1)]

    def deviation(self, t, u):
        v = np.asarray(u, dtype=float) - 0.5
        out = 0.0
        for br, phi in zip(self.brackets(t), self.phis):
            out = out + br * phi(v)
        return np.asarray(out, dtype=float)

    def __call__(self, t, u):
        return 1.0 + self.deviation(t, u)

    @property
    def zeta0(self):
        return zeta0(self.n)

    @property
    def guaranteed_positive(self):
        return self.k >= zeta0(self.n)

    def __repr__(self):
        return f"ConstructedKernel(n={self.n}, p={self.p}, k={self.k})"


def build_kernel(n, p, k):
    _check_params(n, p, k)
    inv = invert_moment_matrix(n, p)
    phis = tuple(build_phi(s, n, p, inv) for s in range(1, n + 1))
    return ConstructedKernel(int(n), int(p), int(k), phis)


def _uniform_grid(grid_m):
    if int(grid_m) != grid_m or grid_m < 2:
        raise InvalidParameterError(f"grid_m must be an integer >= 2, got {grid_m!r}")
    return np.linspace(0.0, 1.0, int(grid_m))


def evaluate_on_grid(kernel, grid_m):
    """Kernel values on the uniform grid_m x grid_m lattice (rows: t, cols: u)."""
    x = _uniform_grid(grid_m)
    vals = np.broadcast_to(np.asarray(kernel(x[:, None], x[None, :]), dtype=float), (x.size, x.size))
    if not np.all(np.isfinite(vals)):
        i = int(np.flatnonzero(~np.isfinite(vals.ravel()))[0])
        raise EvaluationError(f"non-finite kernel value at grid index {divmod(i, x.size)}", index=i)
    return x, vals


def positivity_check(kernel, grid_m=1001):
    """Minimum of the kernel over a uniform lattice and its (t, u) location."""
    x, vals = evaluate_on_grid(kernel, grid_m)
    i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
    return float(vals[i, j]), (float(x[i]), float(x[j]))


def monotonicity_report(n, p, k, grid_m=101):
    """Largest excess of K_(n,p) over K_(n,1) on the lattice (<= 0 means the bound holds)."""
    x = _uniform_grid(grid_m)
    if p == 1:
        return 0.0
    lhs = build_kernel(n, p, k).deviation(x[:, None], x[None, :])
    rhs = build_kernel(n, 1, k).deviation(x[:, None], x[None, :])
    return float(np.max(lhs - rhs))


def monotonicity_check(n, p, k, grid_m=101, slack=1e-12):
    return monotonicity_report(n, p, k, grid_m) <= slack


def analytic_fixed_point(j, p, k, rule):
    """g_j(t) = (1 + (t - 1/2)^(2(p+j)-1))^(1/k) sampled at the rule's nodes."""
    if j < 1:
        raise InvalidParameterError(f"j must be >= 1, got {j!r}")
    _check_params(1, p, k)
    x = rule.nodes - 0.5
    return GridFunction(rule, kth_root(x ** designed_exponent(j, p), k))


def designed_value(j, p, k, t):
    x = np.asarray(t, dtype=float) - 0.5
    return kth_root(x ** designed_exponent(j, p), k)


def designed_r_fixed_point(j, p, rule):
    """g_j^k / g_j(0)^k, the fixed point of R_k matching g_j; independent of k."""
    q = designed_exponent(j, p)
    x = rule.nodes - 0.5
    return GridFunction(rule, (1.0 + x**q) / (1.0 + (-0.5) ** q))
