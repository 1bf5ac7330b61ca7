"""Synthetic experiments: three 1-d regression cases, six methods, r-sweeps.

Each replication draws fresh train / validation / test sets from named random
streams, fits the requested methods, and evaluates clean and adversarial
losses over a shared nested candidate set, so that per-replication results are
identical regardless of worker count or execution order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .adversarial import (
    build_candidate_levels,
    losses_from_candidates,
    training_error,
)
from .estimators import (
    FitError,
    KernelSpec,
    LocalPolyConfig,
    default_bandwidth_grid,
    fit_knn,
    fit_local_polynomial,
    fit_zero,
    select_bandwidth,
)
from .geometry import BoxDomain, Dataset, stream_generator
from .interpolate import InterpolationConfig, wrap_interpolator

METHODS = ("LP", "IP1", "IP2", "SI", "1N", "ZERO")

#: named purposes of the per-replication random streams
_STREAM_TRAIN = 0
_STREAM_VALIDATION = 1
_STREAM_TEST = 2
_STREAM_ATTACK = 3


@dataclass(frozen=True)
class SyntheticCase:
    case_id: int
    truth: Callable[[np.ndarray], np.ndarray]
    domain: BoxDomain
    sigma: float


def _truth_1(x):
    return x**3 - x


def _truth_2(x):
    return x + np.cos(3.0 * x)


def _truth_3(x):
    return np.exp(-(x**2)) * np.sin(5.0 * x)


_TRUTHS = {1: _truth_1, 2: _truth_2, 3: _truth_3}


def make_case(
    case_id: int, noise_value: float = 0.5, noise_is_variance: bool = True
) -> SyntheticCase:
    """One of the three benchmark regression problems on [-2, 2].

    `noise_value` is a variance by default; set noise_is_variance=False to
    read it as a standard deviation.
    """
    if case_id not in _TRUTHS:
        raise ValueError(f"unknown case {case_id}; choose from {sorted(_TRUTHS)}")
    sigma = math.sqrt(noise_value) if noise_is_variance else float(noise_value)
    return SyntheticCase(
        case_id=case_id,
        truth=_TRUTHS[case_id],
        domain=BoxDomain.symmetric(2.0),
        sigma=sigma,
    )


def generate_case(case: SyntheticCase, n: int, rng: np.random.Generator) -> Dataset:
    """Draw n uniform design points with noisy responses from the case."""
    lo, hi = case.domain.lower[0], case.domain.upper[0]
    xs = rng.uniform(lo, hi, n)
    ys = case.truth(xs) + case.sigma * rng.standard_normal(n)
    return Dataset(xs, ys, case.domain)


def _default_r_values() -> tuple[float, ...]:
    return tuple(round(0.01 * i, 2) for i in range(11))


@dataclass(frozen=True)
class ExperimentPlan:
    cases: tuple = (1, 2, 3)
    n_train: tuple = (80, 150, 300)
    n_validation: int = 100
    n_test: int = 100
    r_values: tuple = field(default_factory=_default_r_values)
    methods: tuple = METHODS
    replications: int = 100
    base_seed: int = 0
    degree: int = 7
    bandwidths: tuple | None = None
    ip1_delta_coeff: float = 0.75
    ip2_delta: float = 0.3
    singular_exponent: float = 0.2
    resolution: int = 101
    ridge_eps: float = 1e-10
    noise_value: float = 0.5
    noise_is_variance: bool = True
    workers: int = 1

    def __post_init__(self):
        bad_cases = [c for c in self.cases if c not in (1, 2, 3)]
        if bad_cases:
            raise ValueError(f"unknown cases {bad_cases}; choose from (1, 2, 3)")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {METHODS}")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("duplicate method names")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if any(r < 0 for r in self.r_values) or list(self.r_values) != sorted(
            self.r_values
        ):
            raise ValueError("r_values must be nonnegative and nondecreasing")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class ReplicationRecord:
    case: int
    n: int
    r: float
    method: str
    rep: int
    adv_loss: float
    std_loss: float
    train_mse: float
    max_resid: float
    bandwidth: float
    failed: bool = False


def ip1_delta(coeff: float, n: int) -> float:
    """Slowly growing interpolation level coeff * sqrt(log log n)."""
    return coeff * math.sqrt(max(math.log(math.log(n)), 0.0)) if n > 1 else 0.0


def _fit_methods(plan: ExperimentPlan, case: SyntheticCase, train, vali, n: int):
    """Fit every requested method; returns {name: (estimator, bandwidth)}."""
    grid = (
        np.asarray(plan.bandwidths, dtype=float)
        if plan.bandwidths is not None
        else default_bandwidth_grid(case.domain)
    )
    out = {}
    lp_methods = {"LP", "IP1", "IP2"}
    if lp_methods & set(plan.methods):
        cfg = LocalPolyConfig(
            bandwidth=1.0,
            degree=plan.degree,
            kernel=KernelSpec("rectangular"),
            ridge_eps=plan.ridge_eps,
        )
        h_lp = select_bandwidth(train, vali, cfg, grid)
        lp = fit_local_polynomial(train, LocalPolyConfig(
            bandwidth=h_lp,
            degree=plan.degree,
            kernel=KernelSpec("rectangular"),
            ridge_eps=plan.ridge_eps,
        ))
        if "LP" in plan.methods:
            out["LP"] = (lp, h_lp)
        if "IP1" in plan.methods:
            delta = ip1_delta(plan.ip1_delta_coeff, n)
            out["IP1"] = (
                wrap_interpolator(lp, train, InterpolationConfig(delta=delta)),
                h_lp,
            )
        if "IP2" in plan.methods:
            out["IP2"] = (
                wrap_interpolator(lp, train, InterpolationConfig(delta=plan.ip2_delta)),
                h_lp,
            )
    if "SI" in plan.methods:
        cfg = LocalPolyConfig(
            bandwidth=1.0,
            degree=plan.degree,
            kernel=KernelSpec("singular", plan.singular_exponent),
            ridge_eps=plan.ridge_eps,
        )
        h_si = select_bandwidth(train, vali, cfg, grid)
        out["SI"] = (
            fit_local_polynomial(train, LocalPolyConfig(
                bandwidth=h_si,
                degree=plan.degree,
                kernel=KernelSpec("singular", plan.singular_exponent),
                ridge_eps=plan.ridge_eps,
            )),
            h_si,
        )
    if "1N" in plan.methods:
        out["1N"] = (fit_knn(train, 1), math.nan)
    if "ZERO" in plan.methods:
        out["ZERO"] = (fit_zero(), math.nan)
    return out


def _failure_records(plan: ExperimentPlan, case_id: int, n: int, rep: int):
    nan = math.nan
    return [
        ReplicationRecord(case_id, n, float(r), m, rep, nan, nan, nan, nan, nan, True)
        for m in plan.methods
        for r in plan.r_values
    ]


def run_replication(plan: ExperimentPlan, case_id: int, n: int, rep: int):
    """All records of one replication; failures yield NaN marker rows."""
    case = make_case(case_id, plan.noise_value, plan.noise_is_variance)
    try:
        train = generate_case(
            case, n, stream_generator(plan.base_seed, case_id, n, rep, _STREAM_TRAIN)
        )
        vali = generate_case(
            case,
            plan.n_validation,
            stream_generator(plan.base_seed, case_id, n, rep, _STREAM_VALIDATION),
        )
        test_rng = stream_generator(plan.base_seed, case_id, n, rep, _STREAM_TEST)
        lo, hi = case.domain.lower[0], case.domain.upper[0]
        test_xs = test_rng.uniform(lo, hi, plan.n_test).reshape(-1, 1)
        targets = case.truth(test_xs[:, 0])

        fitted = _fit_methods(plan, case, train, vali, n)
        cands = build_candidate_levels(
            test_xs,
            plan.r_values,
            case.domain,
            resolution=plan.resolution,
            train_xs=train.xs,
        )
        base_preds = {}
        if "LP" in fitted or "IP1" in fitted or "IP2" in fitted:
            lp_est = (fitted.get("LP") or fitted.get("IP1") or fitted.get("IP2"))[0]
            lp_base = lp_est.base if hasattr(lp_est, "base") else lp_est
            base_preds["lp"] = lp_base.predict_batch(cands.points)
            base_preds["lp_test"] = lp_base.predict_batch(test_xs)

        records = []
        for method in plan.methods:
            est, bandwidth = fitted[method]
            if method in ("IP1", "IP2"):
                cand_preds = est.apply_corrections(cands.points, base_preds["lp"])
                test_preds = est.apply_corrections(test_xs, base_preds["lp_test"])
            elif method == "LP":
                cand_preds = base_preds["lp"]
                test_preds = base_preds["lp_test"]
            else:
                cand_preds = est.predict_batch(cands.points)
                test_preds = est.predict_batch(test_xs)
            losses = losses_from_candidates(cands, cand_preds, targets)
            std_loss = float(np.mean((targets - test_preds) ** 2))
            train_mse, max_resid = training_error(est, train)
            for k, r in enumerate(plan.r_values):
                records.append(
                    ReplicationRecord(
                        case=case_id,
                        n=n,
                        r=float(r),
                        method=method,
                        rep=rep,
                        adv_loss=float(losses[k].mean()),
                        std_loss=std_loss,
                        train_mse=train_mse,
                        max_resid=max_resid,
                        bandwidth=bandwidth,
                        failed=False,
                    )
                )
        return records
    except (FitError, np.linalg.LinAlgError):
        return _failure_records(plan, case_id, n, rep)


def run_plan(plan: ExperimentPlan) -> list[ReplicationRecord]:
    """Execute every (case, n, replication) job and return sorted records."""
    jobs = [
        (case_id, n, rep)
        for case_id in plan.cases
        for n in plan.n_train
        for rep in range(plan.replications)
    ]
    if plan.workers == 1:
        results = [run_replication(plan, *job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=plan.workers) as pool:
            results = list(
                pool.map(lambda job: run_replication(plan, *job), jobs)
            )
    records = [rec for chunk in results for rec in chunk]
    method_order = {m: i for i, m in enumerate(plan.methods)}
    records.sort(key=lambda t: (t.case, t.n, method_order[t.method], t.r, t.rep))
    return records


def median_and_se(values) -> tuple[float, float]:
    """Sample median and the rank-based standard error of the median.

    The SE is half the spread between the order statistics at ranks
    floor(R/2 - sqrt(R)/2) and ceil(R/2 + sqrt(R)/2) (clamped to [1, R]);
    it is 0 for a single replication.
    """
    v = np.sort(np.asarray(values, dtype=float))
    n = v.size
    if n == 0:
        raise ValueError("cannot summarize an empty group")
    med = float(np.median(v))
    if n == 1:
        return med, 0.0
    half = math.sqrt(n) / 2.0
    lo = max(1, math.floor(n / 2.0 - half))
    hi = min(n, math.ceil(n / 2.0 + half))
    return med, float((v[hi - 1] - v[lo - 1]) / 2.0)


@dataclass(frozen=True)
class SummaryRow:
    case: int
    n: int
    r: float
    method: str
    median: float
    se: float


def aggregate(records, strict: bool = True) -> list[SummaryRow]:
    """Median adversarial loss and rank SE per (case, n, r, method) group.

    NaN failure markers are dropped before summarizing; a group with no
    successful replications raises when `strict`, and is skipped otherwise.
    """
    groups: dict[tuple, list[float]] = {}
    for rec in records:
        groups.setdefault((rec.case, rec.n, rec.r, rec.method), []).append(
            rec.adv_loss
        )
    method_order = {m: i for i, m in enumerate(METHODS)}
    rows = []
    for key in sorted(
        groups, key=lambda k: (k[0], k[1], method_order.get(k[3], 99), k[2])
    ):
        vals = np.asarray(groups[key], dtype=float)
        vals = vals[np.isfinite(vals)]
        if vals.size == 0:
            if strict:
                raise ValueError(f"no successful replications in group {key}")
            continue
        med, se = median_and_se(vals)
        rows.append(SummaryRow(key[0], key[1], key[2], key[3], med, se))
    return rows


@dataclass(frozen=True)
class CurseSummaryRow:
    n: int
    r: float
    method: str
    median: float
    se: float
    log_log_n: float


def curse_experiment(
    case_id: int = 2,
    method: str = "SI",
    n_list=(80, 150, 300),
    r_rule: str = "fixed",
    fixed_r: float = 0.1,
    replications: int = 100,
    base_seed: int = 0,
    workers: int = 1,
    **plan_overrides,
) -> list[CurseSummaryRow]:
    """Median adversarial loss of one method as n grows.

    r_rule "fixed" keeps the attack radius at `fixed_r`; "shrinking" uses
    r = log(n)/n (d=1), under which the theory still predicts log log n
    growth of the interpolation cost.
    """
    if r_rule not in ("fixed", "shrinking"):
        raise ValueError("r_rule must be 'fixed' or 'shrinking'")
    rows = []
    for n in n_list:
        n = int(n)
        r = fixed_r if r_rule == "fixed" else math.log(n) / n
        plan = ExperimentPlan(
            cases=(case_id,),
            n_train=(n,),
            r_values=(float(r),),
            methods=(method,),
            replications=replications,
            base_seed=base_seed,
            workers=workers,
            **plan_overrides,
        )
        summary = aggregate(run_plan(plan))
        assert len(summary) == 1
        rows.append(
            CurseSummaryRow(
                n, float(r), method, summary[0].median, summary[0].se,
                math.log(math.log(n)),
            )
        )
    return rows
