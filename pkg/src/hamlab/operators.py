"""Hammerstein operator H, normalized operator R, and the conversions between them.

    (W f)(t)   = int K(t, u) f(u) du          omega(f) = (W f)(0)
    (H f)(t)   = (W f^theta)(t)
    (R f)(t)   = ((W f)(t) / omega(f))^alpha

Gauss nodes never include t = 0, so a :class:`Kernel` samples its t = 0 row
straight from the evaluator; omega and R are normalized at t = 0 exactly.
"""

from dataclasses import dataclass

import numpy as np

from hamlab.errors import DomainError, EvaluationError, InvalidParameterError, PreconditionError
from hamlab.quadrature import GridFunction, sup_distance, sup_norm

POSITIVE_FLOOR = 1e-300


def _evaluate(evaluator, t, u):
    out = np.asarray(evaluator(t, u), dtype=float)
    return np.broadcast_to(out, np.broadcast(np.asarray(t), np.asarray(u)).shape).copy()


class Kernel:
    """A strictly positive kernel sampled on the nodes of one quadrature rule.

    ``evaluator(t, u)`` must broadcast over numpy arrays.  If ``deviation`` is
    given it must return ``evaluator(t, u) - 1`` accurately; it is used to form
    K(t, u) - K(0, u) without cancellation (needed when K is 1 + O(1e-7)).
    """

    def __init__(self, evaluator, rule, deviation=None, name=None):
        self.evaluator = evaluator
        self.rule = rule
        self.name = name or getattr(evaluator, "__name__", repr(evaluator))
        nodes = rule.nodes
        self.samples = _evaluate(evaluator, nodes[:, None], nodes[None, :])
        self.row0 = _evaluate(evaluator, 0.0, nodes)
        for label, arr in (("node samples", self.samples), ("t = 0 row", self.row0)):
            if not np.all(np.isfinite(arr)):
                raise EvaluationError(f"kernel {self.name} has non-finite {label}")
            if not np.all(arr > 0):
                raise DomainError(
                    f"kernel {self.name} is not strictly positive on its {label} "
                    f"(min {arr.min():.6g})"
                )
        if deviation is not None:
            self.delta = _evaluate(deviation, nodes[:, None], nodes[None, :]) - _evaluate(
                deviation, 0.0, nodes
            )[None, :]
        else:
            self.delta = self.samples - self.row0[None, :]
        for arr in (self.samples, self.row0, self.delta):
            arr.setflags(write=False)

    @classmethod
    def from_constructed(cls, constructed, rule):
        return cls(constructed, rule, deviation=constructed.deviation, name=repr(constructed))

    @property
    def source(self):
        return self.evaluator

    def __call__(self, t, u):
        return _evaluate(self.evaluator, t, u)

    def __repr__(self):
        return f"Kernel({self.name}, {self.rule!r})"


def _require_positive(f, what="f"):
    if not np.all(np.isfinite(f.values)):
        raise DomainError(f"{what} has non-finite values")
    if not np.all(f.values > POSITIVE_FLOOR):
        i = int(np.argmin(f.values))
        raise DomainError(f"{what} is not positive: value {f.values[i]!r} at node {i}")


def _check_rule(kernel, f):
    if f.rule != kernel.rule:
        raise InvalidParameterError(f"function rule {f.rule!r} differs from kernel rule {kernel.rule!r}")


def apply_W(kernel, f):
    _check_rule(kernel, f)
    return GridFunction(kernel.rule, kernel.samples @ (kernel.rule.weights * f.values))


def omega(kernel, f):
    _check_rule(kernel, f)
    return float(kernel.row0 @ (kernel.rule.weights * f.values))


def apply_H(kernel, theta, f):
    _check_rule(kernel, f)
    _require_positive(f)
    with np.errstate(over="ignore"):
        powered = np.power(f.values, theta)
    if not np.all(np.isfinite(powered)):
        raise EvaluationError(f"f^theta overflows for theta={theta!r}")
    return GridFunction(kernel.rule, kernel.samples @ (kernel.rule.weights * powered))


def apply_R(kernel, alpha, f):
    """((W f)(t) / omega(f))^alpha, evaluated as exp(alpha * log1p(d)).

    d = (W f(t) - omega(f)) / omega(f) comes from the row-difference matrix, so
    it keeps full relative accuracy even when it is O(1/alpha).
    """
    if alpha <= 0:
        raise InvalidParameterError(f"alpha must be positive, got {alpha!r}")
    _check_rule(kernel, f)
    _require_positive(f)
    wf = kernel.rule.weights * f.values
    den = kernel.row0 @ wf
    d = (kernel.delta @ wf) / den
    with np.errstate(over="ignore"):
        out = np.exp(alpha * np.log1p(d))
    return GridFunction(kernel.rule, out)


def residual_R(kernel, alpha, f):
    return sup_distance(apply_R(kernel, alpha, f), f)


def residual_H(kernel, theta, f):
    return sup_distance(apply_H(kernel, theta, f), f)


@dataclass(frozen=True)
class EigenPair:
    """H_alpha h = lam * h with h normalized so that h(0) = 1."""

    h: GridFunction
    lam: float


def nystrom_value_at_zero(kernel, theta, h, lam):
    """h(0) recovered from the eigen relation: (H h)(0) / lam."""
    return omega(kernel, h**theta) / lam


def eigen_residual(kernel, alpha, pair):
    return sup_distance(apply_H(kernel, alpha, pair.h), pair.lam * pair.h)


def r_fixed_to_eigen(kernel, alpha, f0, tol=1e-6):
    """A fixed point f0 of R_alpha gives h = f0^(1/alpha), lam = omega(f0)."""
    res = residual_R(kernel, alpha, f0)
    if res > tol * max(1.0, sup_norm(f0)):
        raise PreconditionError(f"not an approximate fixed point of R: residual {res:.3e}", residual=res)
    return EigenPair(f0 ** (1.0 / alpha), omega(kernel, f0))


def eigen_to_r_fixed(pair, alpha):
    return pair.h**alpha


def eigen_rescale(f0, lambda0, lam, alpha):
    """(lam / lambda0)^(1/(alpha-1)) * f0: an eigenfunction for any other lam > 0."""
    if alpha == 1:
        raise InvalidParameterError("eigen_rescale needs alpha != 1")
    if lambda0 <= 0 or lam <= 0:
        raise InvalidParameterError("eigenvalues must be positive")
    return (lam / lambda0) ** (1.0 / (alpha - 1.0)) * f0


def r_fixed_to_h_fixed(kernel, alpha, f):
    """Map a fixed point of R_alpha to the fixed point of H_alpha (lam = 1)."""
    return eigen_rescale(f ** (1.0 / alpha), omega(kernel, f), 1.0, alpha)


def h_fixed_to_r_fixed(kernel, alpha, h):
    """Map a fixed point of H_alpha to the fixed point of R_alpha it came from.

    R(h^alpha) = (H h / (H h)(0))^alpha = (h / h(0))^alpha.  Going through R
    keeps the t = 0 normalization inside log1p; forming h(0)^alpha directly
    would amplify the rounding of h(0) by a factor alpha.
    """
    _require_positive(h, "h")
    scaled = (h * (1.0 / float(h.values.max()))) ** alpha
    return apply_R(kernel, alpha, scaled)


def kernel_extrema(kernel, grid_m=201):
    """(m, M, m0, M0): min/max over the lattice and over its t = 0 row."""
    if int(grid_m) != grid_m or grid_m < 2:
        raise InvalidParameterError(f"grid_m must be an integer >= 2, got {grid_m!r}")
    x = np.linspace(0.0, 1.0, int(grid_m))
    vals = _evaluate(kernel, x[:, None], x[None, :])
    row0 = vals[0]
    return float(vals.min()), float(vals.max()), float(row0.min()), float(row0.max())


def uniqueness_margin(kernel, alpha, grid_m=201):
    """Return (lhs, rhs) of (M/m0)^alpha - (m/M0)^alpha < 1/alpha."""
    m, big_m, m0, big_m0 = kernel_extrema(kernel, grid_m)
    return (big_m / m0) ** alpha - (m / big_m0) ** alpha, 1.0 / alpha


def uniqueness_certificate(kernel, alpha, grid_m=201):
    """True certifies a unique positive solution; False is inconclusive."""
    if alpha <= 1:
        raise InvalidParameterError(f"alpha must exceed 1, got {alpha!r}")
    lhs, rhs = uniqueness_margin(kernel, alpha, grid_m)
    return bool(lhs < rhs)
