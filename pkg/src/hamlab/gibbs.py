"""Translation-invariant boundary laws on the Cayley tree and finite-volume checks.

Spins live in [0, 1] and are discretized by a quadrature rule; the transfer
kernel is Q(t, u) = exp(J beta xi(t, u)).  Boundary fields enter only through
f(t) = exp(h_t - h_0).  A translation-invariant f gives compatible
finite-volume measures exactly when R_k f = f, with k the branching order.

Vertices of V_n are numbered breadth-first: root 0, its k + 1 children, then
k children for every other vertex.
"""

import itertools
import math
import warnings
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from hamlab.errors import DomainError, EvaluationError, InvalidParameterError
from hamlab.kernel import build_kernel, zeta0
from hamlab.operators import Kernel, _require_positive, apply_R
from hamlab.quadrature import GridFunction, constant, make_rule, sup_distance
from hamlab.solver import SolveConfig, multi_start


@dataclass(frozen=True, eq=False)
class TreeModel:
    order_k: int
    J: float
    beta: float
    xi: object
    kernel: Kernel

    @property
    def rule(self):
        return self.kernel.rule

    @property
    def Q(self):
        """Transfer matrix Q(t_i, t_j) on the spin nodes."""
        return self.kernel.samples


def _check_model_params(J, beta, order_k):
    if J == 0:
        raise InvalidParameterError("coupling J must be nonzero")
    if beta <= 0:
        raise InvalidParameterError("beta must be positive")
    if int(order_k) != order_k or order_k < 1:
        raise InvalidParameterError(f"order_k must be a positive integer, got {order_k!r}")


def model_from_xi(xi, J, beta, rule, order_k=2):
    """Model with interaction ``xi`` (broadcasting evaluator on [0, 1]^2)."""
    _check_model_params(J, beta, order_k)
    coupling = J * beta

    def transfer(t, u):
        vals = np.asarray(xi(t, u), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise EvaluationError("interaction xi returned a non-finite value")
        return np.exp(coupling * vals)

    transfer.__name__ = f"exp({coupling:g}*xi)"
    return TreeModel(int(order_k), J, beta, xi, Kernel(transfer, rule, name=transfer.__name__))


def model_from_constructed(n, p, k, beta=1.0, rule=None):
    """Model whose Hamiltonian is -(1/beta) sum ln K_(n,p), so Q = K_(n,p) and order = k."""
    if beta <= 0:
        raise InvalidParameterError("beta must be positive")
    constructed = build_kernel(n, p, k)
    if not constructed.guaranteed_positive:
        warnings.warn(
            f"k={k} < zeta0({n})={zeta0(n):.6g}: positivity of the kernel (and ln K) is not guaranteed",
            stacklevel=2,
        )
    if rule is None:
        rule = make_rule("gauss_legendre", 2 * (n + p) + 4)
    kernel = Kernel.from_constructed(constructed, rule)

    def xi(t, u):
        vals = constructed(t, u)
        if np.any(vals <= 0):
            raise DomainError("ln K undefined: kernel is not positive")
        return np.log(vals) / beta

    return TreeModel(int(k), 1.0, beta, xi, kernel)


@dataclass(frozen=True)
class FiniteVolume:
    """The ball V_depth of the Cayley tree of order k around the root."""

    depth: int
    order_k: int

    def __post_init__(self):
        if self.depth < 0:
            raise InvalidParameterError("depth must be >= 0")

    def level_size(self, m):
        if m == 0:
            return 1
        return (self.order_k + 1) * self.order_k ** (m - 1)

    @property
    def size(self):
        return sum(self.level_size(m) for m in range(self.depth + 1))

    def level_slice(self, m):
        start = sum(self.level_size(i) for i in range(m))
        return slice(start, start + self.level_size(m))

    @cached_property
    def parents(self):
        """parents[v] for v >= 1, in breadth-first numbering (parents[0] = -1)."""
        out = [-1]
        for m in range(1, self.depth + 1):
            prev = self.level_slice(m - 1)
            fan = self.order_k + 1 if m == 1 else self.order_k
            for parent in range(prev.start, prev.stop):
                out.extend([parent] * fan)
        return np.array(out, dtype=int)


def root_law(model, f):
    """Boundary law carried by the root: its k + 1 successors give R_{k+1} f.

    Translation invariance is imposed only off the root, where every vertex has
    k successors; the root law is what the compatibility equation forces there.
    """
    return apply_R(model.kernel, model.order_k + 1, f)


def _boundary(model, f, depth):
    if depth == 0:
        return root_law(model, f).values
    return f.values


def _log_edges(model, volume, sigma):
    """sum over edges of log Q(sigma(parent), sigma(child)), one value per row."""
    logq = np.log(model.Q)
    parents = volume.parents
    out = np.zeros(sigma.shape[0])
    for v in range(1, volume.size):
        out += logq[sigma[:, parents[v]], sigma[:, v]]
    return out


def _log_weights(model, volume, sigma, f):
    """log of the unnormalized density for each configuration row of ``sigma``."""
    sigma = np.atleast_2d(sigma)
    boundary = np.log(_boundary(model, f, volume.depth))
    leaves = volume.level_slice(volume.depth)
    return _log_edges(model, volume, sigma) + boundary[sigma[:, leaves]].sum(axis=1)


def _check_f(model, f):
    if f is None:
        return constant(model.rule)
    if f.rule != model.rule:
        raise InvalidParameterError("boundary law must use the model's spin rule")
    _require_positive(f, "boundary law")
    return f


def finite_volume_unnorm(model, depth, sigma, f=None):
    """prod_edges Q(sigma(x), sigma(y)) * prod_{x in W_depth} f(sigma(x)).

    ``sigma`` holds one spin-node index per vertex of V_depth (breadth-first).
    At depth 0 the root carries :func:`root_law`.
    """
    f = _check_f(model, f)
    volume = FiniteVolume(depth, model.order_k)
    sigma = np.asarray(sigma)
    if sigma.shape != (volume.size,):
        raise InvalidParameterError(f"configuration needs {volume.size} spins, got shape {sigma.shape}")
    if sigma.dtype.kind not in "iu" or sigma.min() < 0 or sigma.max() >= model.rule.m:
        raise InvalidParameterError("configuration entries must be spin-node indices")
    return float(np.exp(_log_weights(model, volume, sigma, f)[0]))


def _logsumexp(a, axis=None):
    top = np.max(a, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(a - top), axis=axis)) + np.squeeze(top, axis=axis)
    return out


def _log_transfer(model, logz):
    """log of sum_u w_u Q(t, u) exp(logz(u)) for every spin node t."""
    logw = np.log(model.rule.weights)
    return _logsumexp(np.log(model.Q) + (logw + logz)[None, :], axis=1)


def log_partition_function(model, depth, f=None):
    """log Z_depth by recursion from the leaves: O(depth * m^2), not m^|V|."""
    f = _check_f(model, f)
    logw = np.log(model.rule.weights)
    if depth == 0:
        return float(_logsumexp(logw + np.log(root_law(model, f).values)))
    logz = np.log(f.values)
    for _ in range(depth - 1):
        logz = model.order_k * _log_transfer(model, logz)
    root = (model.order_k + 1) * _log_transfer(model, logz)
    return float(_logsumexp(logw + root))


def partition_function(model, depth, f=None):
    return math.exp(log_partition_function(model, depth, f))


def brute_force_partition_function(model, depth, f=None, max_terms=20_000_000):
    """Z_depth by summing every configuration of V_depth; small volumes only."""
    f = _check_f(model, f)
    volume = FiniteVolume(depth, model.order_k)
    m = model.rule.m
    total_terms = m**volume.size
    if total_terms > max_terms:
        raise InvalidParameterError(f"{total_terms} configurations exceed max_terms={max_terms}")
    logw = np.log(model.rule.weights)
    total = 0.0
    # Enumerate the first vertices in an outer loop and the last ``inner`` in bulk.
    inner = min(volume.size, max(1, int(math.log(200_000, m))))
    tail = np.array(list(itertools.product(range(m), repeat=inner)), dtype=int)
    for head in itertools.product(range(m), repeat=volume.size - inner):
        sigma = np.hstack([np.broadcast_to(np.array(head, dtype=int), (tail.shape[0], len(head))), tail])
        lw = _log_weights(model, volume, sigma, f) + logw[sigma].sum(axis=1)
        total += float(np.exp(lw).sum())
    return total


def boundary_law_residual(model, f):
    """sup |R_k f - f|: zero iff f(t, x) = f(t) is a compatible boundary law."""
    return sup_distance(apply_R(model.kernel, model.order_k, f), f)


def _configurations(m, size, max_configs, n_samples, rng_seed):
    if m**size <= max_configs:
        return np.array(list(itertools.product(range(m), repeat=size)), dtype=int)
    rng = np.random.default_rng(rng_seed)
    return rng.integers(0, m, size=(n_samples, size))


def compatibility_residual(model, f, depth, rng_seed=0, max_configs=1_000_000, n_samples=1000):
    """max over configurations s of V_{depth-1} of |int mu_depth(s v w) dw - mu_{depth-1}(s)|.

    Both measures are normalized densities with respect to the product of the
    quadrature weights.  The integral over the outer shell factorizes over its
    vertices, one transfer integral per leaf.  Every configuration is checked
    when there are at most ``max_configs``; otherwise ``n_samples`` random ones.
    """
    if depth < 1:
        raise InvalidParameterError("compatibility needs depth >= 1")
    f = _check_f(model, f)
    k = model.order_k
    inner = FiniteVolume(depth - 1, k)
    sigma = _configurations(model.rule.m, inner.size, max_configs, n_samples, rng_seed)

    log_prev = _log_weights(model, inner, sigma, f) - log_partition_function(model, depth - 1, f)

    # Marginal of mu_depth: the edges of V_{depth-1}, then every vertex of
    # W_{depth-1} integrates each of its successors against Q f.
    fan = k + 1 if depth == 1 else k
    log_transfer = _log_transfer(model, np.log(f.values))
    shell = inner.level_slice(depth - 1)
    log_marg = _log_edges(model, inner, sigma) + fan * log_transfer[sigma[:, shell]].sum(axis=1)
    log_marg -= log_partition_function(model, depth, f)

    return float(np.max(np.abs(np.exp(log_marg) - np.exp(log_prev))))


def ti_gibbs_solutions(n, p, k, config=None, rule=None):
    """Distinct translation-invariant boundary laws for the constructed model."""
    model = model_from_constructed(n, p, k, rule=rule)
    if config is None:
        config = SolveConfig(designed_seeds=True, n_random=10)
    elif not config.designed_seeds:
        config = replace(config, designed_seeds=True)
    return model, multi_start(model.kernel, model.order_k, config)


def count_ti_gibbs(n, p, k, config=None, rule=None):
    """Lower bound on the number of translation-invariant Gibbs measures."""
    _, sols = ti_gibbs_solutions(n, p, k, config, rule)
    return len(sols)
