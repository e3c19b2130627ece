"""Fixed-point search for R_alpha and H_theta: damped Picard, multi-start, dedupe.

Direct Picard on H_theta with theta > 1 either collapses to 0 or blows up, so
every search runs on the scale-free operator R_alpha and maps the result back
to H with the eigenvalue rescaling (lam -> 1).  Counts returned here are lower
bounds: multi-start exploration cannot prove that no other solution exists.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from hamlab.errors import DivergenceError, DomainError, HamlabError, InvalidParameterError
from hamlab.kernel import ConstructedKernel, designed_r_fixed_point
from hamlab.operators import (
    _require_positive,
    apply_H,
    apply_R,
    h_fixed_to_r_fixed,
    omega,
    r_fixed_to_h_fixed,
)
from hamlab.quadrature import GridFunction, constant, sample, sup_distance, sup_norm

log = logging.getLogger(__name__)

HUGE_ALPHA = 1e6


@dataclass(frozen=True)
class SolveConfig:
    damping: float = 0.5
    tol: float = None  # None: 1e-9, or 1e-6 once alpha exceeds 1e6
    max_iter: int = 10000
    dedupe_tol: float = 1e-4
    seeds: tuple = ()
    n_random: int = 0
    designed_seeds: bool = False
    rng_seed: int = 0
    keep_trace: bool = True

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise InvalidParameterError(f"damping must lie in (0, 1], got {self.damping!r}")
        if self.tol is not None and self.tol <= 0:
            raise InvalidParameterError("tol must be positive")
        if self.tol is not None and self.dedupe_tol <= self.tol:
            raise InvalidParameterError("dedupe_tol must exceed tol")
        if self.max_iter < 1:
            raise InvalidParameterError("max_iter must be positive")
        object.__setattr__(self, "seeds", tuple(self.seeds))

    def tol_for(self, alpha):
        if self.tol is not None:
            return self.tol
        return 1e-6 if alpha > HUGE_ALPHA else 1e-9


@dataclass
class FixedPointReport:
    f: GridFunction  # fixed point of R_alpha (value 1 at t = 0)
    h: GridFunction  # matching fixed point of H_alpha
    residual_R: float
    residual_H: float
    lam: float
    iterations: int
    converged: bool
    seed_id: str
    alpha: float
    trace: list = field(default_factory=list, repr=False)
    error: str = None

    def summary(self):
        return {
            "seed_id": self.seed_id,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_R": self.residual_R,
            "residual_H": self.residual_H,
            "lambda": self.lam,
            "error": self.error,
        }


def _finish(kernel, alpha, f, res, iterations, converged, seed_id, trace):
    h = r_fixed_to_h_fixed(kernel, alpha, f)
    try:
        res_h = sup_distance(apply_H(kernel, alpha, h), h)
    except HamlabError:
        res_h = float("inf")
    return FixedPointReport(
        f=f,
        h=h,
        residual_R=res,
        residual_H=res_h,
        lam=omega(kernel, f),
        iterations=iterations,
        converged=converged,
        seed_id=seed_id,
        alpha=alpha,
        trace=trace,
    )


def picard_R(kernel, alpha, seed, config=SolveConfig(), seed_id="seed"):
    """Damped iteration f <- (1 - gamma) f + gamma R_alpha f."""
    _require_positive(seed, "seed")
    tol = config.tol_for(alpha)
    gamma = config.damping
    f = seed
    trace = []
    for it in range(config.max_iter + 1):
        rf = apply_R(kernel, alpha, f)
        if not np.all(np.isfinite(rf.values)):
            raise DivergenceError(f"R_alpha overflowed after {it} iterations", last=f)
        res = sup_distance(rf, f)
        if config.keep_trace:
            trace.append(res)
        if res <= tol:
            return _finish(kernel, alpha, f, res, it, True, seed_id, trace)
        if it == config.max_iter:
            break
        f = GridFunction(f.rule, (1.0 - gamma) * f.values + gamma * rf.values)
        if not np.all(f.values > 1e-300):
            raise DivergenceError(f"iterate left the positive cone after {it + 1} iterations", last=f)
    log.debug("seed %s: no convergence in %d iterations (residual %.3e)", seed_id, config.max_iter, res)
    return _finish(kernel, alpha, f, res, config.max_iter, False, seed_id, trace)


def picard_H(kernel, theta, seed, config=SolveConfig(), seed_id="seed"):
    """Fixed point of H_theta, searched in R-space and mapped back."""
    if theta <= 1:
        raise InvalidParameterError(f"theta must exceed 1, got {theta!r}")
    _require_positive(seed, "seed")
    # R is scale-free, so normalizing the seed before powering only avoids overflow.
    r_seed = (seed * (1.0 / float(seed.values.max()))) ** theta
    if not np.all(r_seed.values > 1e-300):
        raise DomainError("seed^theta underflows; use a flatter seed")
    return picard_R(kernel, theta, r_seed, config, seed_id)


def random_seed(rule, rng):
    """1 + 0.5 * (random combination of shifted Legendre P1..P3), clipped at 0.1."""
    coeffs = rng.uniform(-1.0, 1.0, size=4)
    coeffs[0] = 0.0
    x = 2.0 * rule.nodes - 1.0
    values = 1.0 + 0.5 * np.polynomial.legendre.legval(x, coeffs)
    return GridFunction(rule, np.maximum(values, 0.1))


def _as_seed(seed, rule):
    if isinstance(seed, GridFunction):
        return seed
    if callable(seed):
        return sample(seed, rule)
    return constant(rule, float(seed))


def build_seeds(kernel, alpha, config):
    """List of (seed_id, GridFunction) in deterministic order."""
    rule = kernel.rule
    seeds = [(f"seed[{i}]", _as_seed(s, rule)) for i, s in enumerate(config.seeds)]
    source = kernel.source
    if config.designed_seeds and isinstance(source, ConstructedKernel):
        # The R-form g_j^k / g_j(0)^k, not a rescaled g_j^k: the damped iteration
        # would otherwise spend its steps converging the scale.
        for j in range(1, source.n + 1):
            seeds.append((f"designed[{j}]", designed_r_fixed_point(j, source.p, rule)))
    rng = np.random.default_rng(config.rng_seed)
    for i in range(config.n_random):
        seeds.append((f"random[{i}]", random_seed(rule, rng)))
    return seeds


def _threads():
    try:
        return max(1, int(os.environ.get("HAMLAB_THREADS", "1")))
    except ValueError:
        return 1


def _run_one(kernel, alpha, seed_id, seed, config):
    try:
        return picard_R(kernel, alpha, seed, config, seed_id)
    except HamlabError as exc:
        last = getattr(exc, "last", None) or seed
        return FixedPointReport(
            f=last,
            h=last,
            residual_R=float("inf"),
            residual_H=float("inf"),
            lam=float("nan"),
            iterations=0,
            converged=False,
            seed_id=seed_id,
            alpha=alpha,
            error=f"{type(exc).__name__}: {exc}",
        )


def run_seeds(kernel, alpha, config):
    """picard_R from every seed; failures are recorded, never raised."""
    seeds = build_seeds(kernel, alpha, config)
    if not seeds:
        raise InvalidParameterError("no seeds: give seeds, n_random or designed_seeds")
    jobs = [(sid, s) for sid, s in seeds]
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda job: _run_one(kernel, alpha, job[0], job[1], config), jobs))
    return [_run_one(kernel, alpha, sid, s, config) for sid, s in jobs]


def dedupe(reports, dedupe_tol):
    """First-found representatives at mutual sup-distance >= dedupe_tol."""
    kept = []
    for rep in reports:
        if all(sup_distance(rep.f, other.f) >= dedupe_tol for other in kept):
            kept.append(rep)
    return kept


def multi_start(kernel, alpha, config, reports=None):
    """Distinct converged fixed points of R_alpha, sorted by lambda then seed order.

    Every kept solution has its residual re-measured from scratch.
    """
    if reports is None:
        reports = run_seeds(kernel, alpha, config)
    tol = config.tol_for(alpha)
    order = {rep.seed_id: i for i, rep in enumerate(reports)}
    good = [
        rep
        for rep in reports
        if rep.converged and sup_distance(apply_R(kernel, alpha, rep.f), rep.f) <= tol
    ]
    kept = dedupe(good, config.dedupe_tol)
    return sorted(kept, key=lambda rep: (rep.lam, order[rep.seed_id]))


def h_distance(h1, h2, alpha):
    """alpha * sup |log h1 - log h2|: H-forms compared on the scale of their R-forms.

    For large alpha every fixed point of H_alpha lies within O(1/alpha) of a
    constant, so a plain sup-distance would merge distinct solutions.
    """
    _require_positive(h1, "h1")
    _require_positive(h2, "h2")
    return alpha * sup_distance(h1.map(np.log), h2.map(np.log))


@dataclass
class CountResult:
    count_R: int
    count_H: int
    matched: bool
    solutions: list
    max_roundtrip: float


def count_fixed_points(kernel, alpha, config):
    """Lower bounds on the number of positive fixed points of R_alpha and H_alpha.

    ``matched`` is True when the H-images are pairwise distinct (by
    :func:`h_distance`) and each maps back onto its own R-solution (within
    dedupe_tol, relative to its sup-norm).
    """
    sols = multi_start(kernel, alpha, config)
    distinct_h = []
    for rep in sols:
        if all(h_distance(rep.h, other, alpha) >= config.dedupe_tol for other in distinct_h):
            distinct_h.append(rep.h)
    # Relative to the solution's scale: R-forms can reach 1e9 for large alpha.
    roundtrip = [
        sup_distance(h_fixed_to_r_fixed(kernel, alpha, rep.h), rep.f) / max(1.0, sup_norm(rep.f))
        for rep in sols
    ]
    max_rt = max(roundtrip, default=0.0)
    matched = len(distinct_h) == len(sols) and max_rt < config.dedupe_tol
    return CountResult(len(sols), len(distinct_h), matched, sols, max_rt)

