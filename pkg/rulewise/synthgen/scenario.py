"""Simulated cohorts with a known optimal rule.

A scenario draws covariates X, an arm A from the assignment mechanism and an
event time T whose mean is

    mu(X, A) = baseline(X) + A * contrast(X) / 2

so the optimal rule treats exactly where contrast(X) > 0. Rewards are T
restricted to the horizon; censoring, when requested, is independent
uniform with its upper bound calibrated to a target rate.
"""
import json
import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from cohort.exceptions import ArgumentError
from cohort.folds import spawn_seeds
from cohort.horizon import restrict_horizon
from cohort.models import Cohort
from forest.propensity import ConstantPropensity, KnownPropensity
from learners.rules import TreatmentRule, UniversalRule
from synthgen.api.serializers import ScenarioSpecSerializer
from synthgen.constants import (
    ASSIGNMENTS, CALIBRATION_DRAWS, COVARIATE_LAWS, EVENT_LAWS, FUNCTION_KINDS, MIN_MC_DRAWS,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScenarioFunction:
    """One function of the covariates from a closed catalogue.

    constant:     value
    linear:       intercept + sum_j coefficients[j] x_j
    threshold:    intercept + scale * (+1 if x_covariate > cutoff else -1)
    interaction:  intercept + scale * (+1 if x_i x_k > 0 else -1), (i, k) = pair
    """
    kind: str = 'constant'
    value: float = 0.0
    intercept: float = 0.0
    coefficients: tuple = ()
    covariate: int = 0
    pair: tuple = (0, 1)
    cutoff: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in FUNCTION_KINDS:
            raise ArgumentError(f"unknown function kind '{self.kind}'; expected one of {FUNCTION_KINDS}")
        object.__setattr__(self, 'coefficients', tuple(float(c) for c in self.coefficients))
        object.__setattr__(self, 'pair', tuple(int(j) for j in self.pair))
        if len(self.pair) != 2:
            raise ArgumentError('an interaction needs exactly two covariates')

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def as_dict(self):
        data = asdict(self)
        data['coefficients'] = list(self.coefficients)
        data['pair'] = list(self.pair)
        return data

    def check(self, p):
        if self.kind == 'linear' and len(self.coefficients) > p:
            raise ArgumentError(f'{len(self.coefficients)} coefficients for {p} covariates')
        if self.kind == 'threshold' and self.covariate >= p:
            raise ArgumentError(f'covariate index {self.covariate} out of range for p={p}')
        if self.kind == 'interaction' and max(self.pair) >= p:
            raise ArgumentError(f'interaction pair {self.pair} out of range for p={p}')

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = X.shape[0]
        if self.kind == 'constant':
            return np.full(n, self.value)
        if self.kind == 'linear':
            k = len(self.coefficients)
            return self.intercept + X[:, :k] @ np.asarray(self.coefficients)
        if self.kind == 'threshold':
            side = np.where(X[:, self.covariate] > self.cutoff, 1.0, -1.0)
        else:
            i, k = self.pair
            side = np.where(X[:, i] * X[:, k] > 0, 1.0, -1.0)
        return self.intercept + self.scale * side


def _default_baseline():
    return ScenarioFunction('constant', value=200.0)


@dataclass(frozen=True, eq=False)
class ContrastRule(TreatmentRule):
    """+1 where the scenario contrast is positive; ties go to ``tie_arm``."""
    contrast: ScenarioFunction
    n_features: int
    tie_arm: int = -1
    variant = 'oracle'

    def decide(self, X):
        delta = self.contrast(X)
        return np.where(delta > 0, 1, np.where(delta < 0, -1, self.tie_arm))


@dataclass(frozen=True)
class ScenarioSpec:
    p: int
    covariate_law: str = 'uniform'
    prevalence: tuple = ()
    assignment: str = 'randomized'
    p_treated: float = 0.5
    assignment_intercept: float = 0.0
    assignment_coefficients: tuple = ()
    baseline: ScenarioFunction = field(default_factory=_default_baseline)
    contrast: ScenarioFunction = field(default_factory=ScenarioFunction)
    noise: float = 0.0
    event_law: str = 'gaussian'
    censoring_rate: float = 0.0
    horizon: float = 365.0
    name: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'prevalence', tuple(float(v) for v in self.prevalence))
        object.__setattr__(self, 'assignment_coefficients', tuple(float(c) for c in self.assignment_coefficients))
        for attr in ('baseline', 'contrast'):
            value = getattr(self, attr)
            if isinstance(value, dict):
                object.__setattr__(self, attr, ScenarioFunction.from_dict(value))
        self._validate()

    def _validate(self):
        if self.p < 1:
            raise ArgumentError(f'p must be at least 1, got {self.p}')
        if self.covariate_law not in COVARIATE_LAWS:
            raise ArgumentError(f"unknown covariate law '{self.covariate_law}'")
        if self.assignment not in ASSIGNMENTS:
            raise ArgumentError(f"unknown assignment mechanism '{self.assignment}'")
        if self.event_law not in EVENT_LAWS:
            raise ArgumentError(f"unknown event-time law '{self.event_law}'")
        if self.prevalence and len(self.prevalence) != self.p:
            raise ArgumentError(f'{len(self.prevalence)} prevalences for {self.p} covariates')
        if any(not 0 < v < 1 for v in self.prevalence):
            raise ArgumentError('prevalences must lie in (0, 1)')
        if not 0 < self.p_treated < 1:
            raise ArgumentError(f'p_treated must lie in (0, 1), got {self.p_treated}')
        if len(self.assignment_coefficients) > self.p:
            raise ArgumentError('more assignment coefficients than covariates')
        if self.noise < 0:
            raise ArgumentError('noise scale must be non-negative')
        if not 0 <= self.censoring_rate < 1:
            raise ArgumentError(f'censoring rate must lie in [0, 1), got {self.censoring_rate}')
        if self.horizon <= 0:
            raise ArgumentError('horizon must be positive')
        self.baseline.check(self.p)
        self.contrast.check(self.p)

    @classmethod
    def from_dict(cls, data):
        serializer = ScenarioSpecSerializer(data=data)
        serializer.is_valid(raise_exception=True)
        values = dict(serializer.validated_data)
        for attr in ('baseline', 'contrast'):
            if attr in values:
                function = dict(values[attr])
                for key in ('coefficients', 'pair'):
                    if key in function:
                        function[key] = tuple(function[key])
                values[attr] = ScenarioFunction.from_dict(function)
        return cls(**values)

    @classmethod
    def from_file(cls, path):
        with open(path) as handle:
            return cls.from_dict(json.load(handle))

    def as_dict(self):
        data = asdict(self)
        data['baseline'] = self.baseline.as_dict()
        data['contrast'] = self.contrast.as_dict()
        data['prevalence'] = list(self.prevalence)
        data['assignment_coefficients'] = list(self.assignment_coefficients)
        return data

    def with_overrides(self, **changes):
        return replace(self, **changes)

    @property
    def schema(self):
        return tuple(f'x{j + 1}' for j in range(self.p))

    def draw_covariates(self, n, rng):
        if self.covariate_law == 'uniform':
            return rng.uniform(-1.0, 1.0, size=(n, self.p))
        if self.covariate_law == 'normal':
            return rng.standard_normal(size=(n, self.p))
        prevalence = np.asarray(self.prevalence or (0.5,) * self.p)
        return (rng.random((n, self.p)) < prevalence).astype(float)

    def prob_treated(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.assignment == 'randomized':
            return np.full(X.shape[0], self.p_treated)
        k = len(self.assignment_coefficients)
        return expit(self.assignment_intercept + X[:, :k] @ np.asarray(self.assignment_coefficients))

    def propensity(self):
        if self.assignment == 'randomized':
            return ConstantPropensity(self.p_treated)
        return KnownPropensity(self.prob_treated)

    def mean_event_time(self, X, arm):
        return self.baseline(X) + np.asarray(arm) * self.contrast(X) / 2.0

    def draw_event_times(self, X, arm, rng):
        mean = self.mean_event_time(X, arm)
        if self.event_law == 'gaussian':
            return np.maximum(mean + self.noise * rng.standard_normal(len(mean)), 0.0)
        if np.any(mean <= 0):
            raise ArgumentError('exponential event times need a positive mean everywhere')
        return mean * rng.standard_exponential(len(mean))

    def draw_reward(self, X, arm, rng):
        return np.minimum(self.draw_event_times(X, arm, rng), self.horizon)

    def optimal_rule(self, tie_arm=-1):
        return ContrastRule(self.contrast, self.p, tie_arm)


@dataclass(frozen=True)
class ScenarioTruth:
    optimal_rule: TreatmentRule
    optimal_value: float
    optimal_se: float
    universal: dict

    @property
    def best_universal(self):
        return max(value for value, _ in self.universal.values())

    @property
    def gap(self):
        return self.optimal_value - self.best_universal

    def as_dict(self):
        return {
            'optimal_value': self.optimal_value,
            'optimal_se': self.optimal_se,
            'universal': {f'{arm:+d}': {'value': v, 'se': se} for arm, (v, se) in self.universal.items()},
            'gap': self.gap,
        }


def true_value(spec, rule, mc_n=200_000, seed=0):
    """Monte Carlo value of ``rule`` with every subject forced onto rule(X).

    A fixed seed gives every rule the same covariate and noise draws.
    """
    if mc_n < MIN_MC_DRAWS:
        raise ArgumentError(f'mc_n must be at least {MIN_MC_DRAWS}, got {mc_n}')
    rng = np.random.default_rng(seed)
    X = spec.draw_covariates(mc_n, rng)
    reward = spec.draw_reward(X, rule.apply(X), rng)
    return float(reward.mean()), float(reward.std(ddof=1) / np.sqrt(mc_n))


def scenario_truth(spec, mc_n=200_000, seed=0):
    rule = spec.optimal_rule()
    value, se = true_value(spec, rule, mc_n, seed)
    universal = {arm: true_value(spec, UniversalRule(arm), mc_n, seed) for arm in (-1, 1)}
    return ScenarioTruth(optimal_rule=rule, optimal_value=value, optimal_se=se, universal=universal)


def calibrate_censoring(spec, seed=0, draws=CALIBRATION_DRAWS):
    """Upper bound c of a U(0, c) censoring law that censors ``spec.censoring_rate``
    of subjects before min(T, horizon).

    For a fixed sample of m = min(T, horizon) the censored share is
    mean(min(m, c)) / c, which decreases in c.
    """
    rate = spec.censoring_rate
    if rate <= 0:
        return None
    rng = np.random.default_rng(seed)
    X = spec.draw_covariates(draws, rng)
    arm = np.where(rng.random(draws) < spec.prob_treated(X), 1, -1)
    m = spec.draw_reward(X, arm, rng)
    attainable = float(np.mean(m > 0))
    if rate >= attainable:
        raise ArgumentError(f'censoring rate {rate} is not attainable; at most {attainable:.3f}')

    def excess(c):
        return np.mean(np.minimum(m, c)) / c - rate

    low = 1e-9 * spec.horizon
    high = m.max() / rate + m.max()
    return float(brentq(excess, low, high, xtol=1e-9 * spec.horizon))


def generate_scenario(spec, n, seed=0, mc_n=200_000):
    """Draw a cohort of ``n`` subjects restricted to the scenario horizon, and its truth."""
    if n < 1:
        raise ArgumentError(f'n must be at least 1, got {n}')
    cohort_seed, truth_seed, censor_seed = spawn_seeds(seed, 3)
    rng = np.random.default_rng(cohort_seed)
    X = spec.draw_covariates(n, rng)
    treatment = np.where(rng.random(n) < spec.prob_treated(X), 1, -1)
    event_time = spec.draw_event_times(X, treatment, rng)

    upper = calibrate_censoring(spec, censor_seed)
    if upper is None:
        time, event = event_time, np.ones(n, dtype=bool)
    else:
        censor_time = rng.uniform(0.0, upper, size=n)
        time, event = np.minimum(event_time, censor_time), event_time <= censor_time

    prefix = spec.name or 'sim'
    cohort = Cohort(
        schema=spec.schema,
        ids=[f'{prefix}-{i:06d}' for i in range(n)],
        covariates=X,
        treatment=treatment,
        time=time,
        event=event,
    )
    cohort = restrict_horizon(cohort, spec.horizon)
    truth = scenario_truth(spec, mc_n, truth_seed)
    logger.info(
        'Simulated %d subjects: %.1f%% censored before %.0f days, oracle gap %.2f',
        n, 100 * float(np.mean(cohort.needs_imputation)), spec.horizon, truth.gap,
    )
    return cohort, truth
