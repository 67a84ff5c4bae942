"""Two-stage PCE sensitivity analysis of the system EROI.

Stage 1 fits first-order expansions on several independent designs and keeps
every parameter whose total-order index exceeds 1/d in at least one run.
Stage 2 fits a second-order expansion on the shortlist, reports the moments,
the coefficient of variation and the critical parameters, and the surrogate
is then sampled to estimate the EROI distribution.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..accounting import account
from ..lp import ObjectiveSpec, assemble
from ..model import EnergySystemModel, ValidationError
from ..simplex import SolverError, solve
from .params import DesignMatrix, UncertainParameter, apply_parameters, sample
from .pce import PolynomialChaosRegressor, n_terms, sobol_total

log = logging.getLogger(__name__)

MAX_MISSING_FRACTION = 0.05
MIN_SAMPLES = 50


class TooManyFailures(RuntimeError):
    pass


def evaluate_point(model: EnergySystemModel, params: Sequence[UncertainParameter], values,
                   spec: ObjectiveSpec | None = None, gwp_limit: float | None = None,
                   method: str = "auto") -> tuple[float, str]:
    """EROI of one perturbed model and the status of its solve."""
    try:
        perturbed = apply_parameters(model, params, values)
    except ValidationError:
        return math.nan, "Invalid"
    try:
        sol = solve(assemble(perturbed, spec, gwp_limit), method=method)
    except SolverError as exc:
        return math.nan, type(exc).__name__
    if not sol.optimal:
        return math.nan, sol.status.value
    report = account(perturbed, sol)
    if report.eroi is None:
        return math.nan, "Degenerate"
    return report.eroi, sol.status.value


def evaluate_batch(model: EnergySystemModel, params: Sequence[UncertainParameter], inputs,
                   spec: ObjectiveSpec | None = None, gwp_limit: float | None = None,
                   method: str = "auto", n_jobs: int = 1, return_status: bool = False):
    """EROI for every row of ``inputs``; failed rows hold NaN.

    Rows are independent, so ``n_jobs > 1`` only changes wall time.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))

    def one(row):
        return evaluate_point(model, params, row, spec, gwp_limit, method)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            out = list(pool.map(one, inputs))
    else:
        out = [one(row) for row in inputs]
    responses = np.array([v for v, _ in out], dtype=float)
    if return_status:
        return responses, [s for _, s in out]
    return responses


def default_sample_count(n_params: int, order: int) -> int:
    return max(2 * n_terms(n_params, order), MIN_SAMPLES)


def fit_pce(design: DesignMatrix, order: int) -> PolynomialChaosRegressor:
    """Fit on the complete rows of ``design`` (missing responses dropped)."""
    if design.responses is None:
        raise ValueError("design has no responses")
    ok = np.isfinite(design.responses)
    missing = 1.0 - ok.mean()
    if missing > 0:
        if missing >= MAX_MISSING_FRACTION:
            raise TooManyFailures(f"{missing:.1%} of the design failed to evaluate")
        log.warning("dropping %d of %d samples that failed to evaluate", int((~ok).sum()), design.n)
    model = PolynomialChaosRegressor(order=order, bounds=design.bounds)
    return model.fit(design.samples[ok], design.responses[ok])


def _run_design(model, params, n, order, seed, spec, gwp_limit, method, n_jobs):
    design = sample(params, n, seed)
    design.responses = evaluate_batch(model, params, design.samples, spec, gwp_limit, method, n_jobs)
    return design, fit_pce(design, order)


@dataclass
class ScreeningResult:
    names: list[str]
    indices: np.ndarray  # (runs, d)
    threshold: float
    shortlist: list[UncertainParameter]
    loo_errors: list[float] = field(default_factory=list)

    @property
    def max(self) -> np.ndarray:
        return self.indices.max(axis=0)

    @property
    def mean(self) -> np.ndarray:
        return self.indices.mean(axis=0)

    @property
    def min(self) -> np.ndarray:
        return self.indices.min(axis=0)


def _seeds(seed, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(count)


def screen_first_order(model: EnergySystemModel, params: Sequence[UncertainParameter],
                       gwp_limit: float | None = None, runs: int = 5, n_samples: int | None = None,
                       seed: int = 0, spec: ObjectiveSpec | None = None, method: str = "auto",
                       n_jobs: int = 1) -> ScreeningResult:
    """Keep parameters whose total-order index exceeds 1/d in at least one run."""
    params = list(params)
    d = len(params)
    n = n_samples or default_sample_count(d, 1)
    rows, loos = [], []
    for run_seed in _seeds(seed, runs):
        _, pce = _run_design(model, params, n, 1, run_seed, spec, gwp_limit, method, n_jobs)
        rows.append(sobol_total(pce))
        loos.append(pce.loo_error_)
    indices = np.vstack(rows)
    threshold = 1.0 / d
    keep = indices.max(axis=0) > threshold
    return ScreeningResult(
        names=[p.path for p in params],
        indices=indices,
        threshold=threshold,
        shortlist=[p for p, k in zip(params, keep) if k],
        loo_errors=loos,
    )


def coefficient_of_variation(std: float, mean: float) -> float:
    return std / mean


@dataclass
class SobolReport:
    names: list[str]
    total_order: dict[str, float]
    mean: float
    variance: float
    threshold: float
    critical: list[str]
    loo_error: float
    order: int
    n_samples: int
    seed: int | None = None

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def cov(self) -> float:
        return coefficient_of_variation(self.std, self.mean)

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "total_order": dict(self.total_order),
            "mean": self.mean,
            "variance": self.variance,
            "std": self.std,
            "cov": self.cov,
            "threshold": self.threshold,
            "critical": list(self.critical),
            "loo_error": self.loo_error,
            "order": self.order,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


def sobol_report(pce: PolynomialChaosRegressor, names: Sequence[str], n_samples: int,
                 seed: int | None = None) -> SobolReport:
    st = sobol_total(pce)
    threshold = 1.0 / len(names)
    return SobolReport(
        names=list(names),
        total_order=dict(zip(names, st.tolist())),
        mean=pce.mean_,
        variance=pce.variance_,
        threshold=threshold,
        # >= so that a one-parameter shortlist keeps its only member
        critical=[nm for nm, s in zip(names, st) if s >= threshold],
        loo_error=pce.loo_error_,
        order=int(pce.order),
        n_samples=n_samples,
        seed=seed,
    )


def analyze_second_order(model: EnergySystemModel, shortlist: Sequence[UncertainParameter],
                         gwp_limit: float | None = None, n_samples: int | None = None,
                         seed: int = 0, order: int = 2, spec: ObjectiveSpec | None = None,
                         method: str = "auto", n_jobs: int = 1
                         ) -> tuple[SobolReport, PolynomialChaosRegressor]:
    shortlist = list(shortlist)
    if not shortlist:
        raise ValueError("empty shortlist")
    n = n_samples or default_sample_count(len(shortlist), order)
    run_seed = np.random.SeedSequence([seed, order])
    design, pce = _run_design(model, shortlist, n, order, run_seed, spec, gwp_limit, method, n_jobs)
    return sobol_report(pce, [p.path for p in shortlist], design.n, seed), pce


@dataclass
class PdfEstimate:
    edges: np.ndarray
    counts: np.ndarray
    mean: float
    std: float
    n: int

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.n * np.diff(self.edges))

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def pdf_estimate(surrogate: PolynomialChaosRegressor, n: int = 10**6, bins: int = 100,
                 seed: int = 0, chunk: int = 100_000) -> PdfEstimate:
    """Histogram of the surrogate under uniform inputs on its bounds."""
    rng = np.random.default_rng(seed)
    lo, hi = surrogate.bounds_[:, 0], surrogate.bounds_[:, 1]
    values = np.empty(n)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        X = lo + rng.random((stop - start, len(lo))) * (hi - lo)
        values[start:stop] = surrogate.predict(X)
    mean, std = float(values.mean()), float(values.std())
    vmin, vmax = float(values.min()), float(values.max())
    if vmax - vmin <= 1e-12 * max(1.0, abs(mean)):
        half = 0.5e-6 * max(1.0, abs(mean))
        return PdfEstimate(np.array([mean - half, mean + half]), np.array([n]), mean, 0.0, n)
    counts, edges = np.histogram(values, bins=bins, range=(vmin, vmax))
    return PdfEstimate(edges, counts, mean, std, n)
