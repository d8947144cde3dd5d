"""
Per-weight optimizers: gradient descent, gradient descent with momentum, and QuickProp.

QuickProp treats every weight as an independent parabola whose curvature is estimated by the
secant (g_t - g_prev) / dw_prev and jumps to its vertex. The raw step is limited to mu times the
previous step; plain gradient descent seeds the state, handles vanishing gradients and revives
weights whose previous step was zero.
"""

import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateStepError, NumericError, ParameterError
from .tensor_core import real_type

logger = logging.getLogger(__name__)

DEFAULT_LEARNING_RATE = 0.01
DEFAULT_MU = 1.75
DEFAULT_MOMENTUM = 0.9
DEFAULT_GRADIENT_THRESHOLD = 1e-15


class OptimizerName(str, Enum):
    GD = "gd"
    MOMENTUM = "momentum"
    QUICKPROP = "quickprop"


class StepCase(str, Enum):
    QUADRATIC = "quadratic"
    REVERSAL = "reversal"
    CLAMPED = "clamped"


# 0 marks components that took the gradient-descent fallback
_CASE_CODES = {1: StepCase.QUADRATIC, 2: StepCase.REVERSAL, 3: StepCase.CLAMPED}


@dataclass(frozen=True)
class OptimConfig:
    learning_rate: float = DEFAULT_LEARNING_RATE
    mu: float = DEFAULT_MU
    momentum: float = DEFAULT_MOMENTUM
    gradient_threshold: float = DEFAULT_GRADIENT_THRESHOLD
    same_sign_addition: bool = True

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ParameterError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not self.mu > 0:
            raise ParameterError(f"mu must be > 0, got {self.mu}")
        if not 0 <= self.momentum < 1:
            raise ParameterError(f"momentum must be in [0, 1), got {self.momentum}")
        if not self.gradient_threshold > 0:
            raise ParameterError(f"gradient_threshold must be > 0, got {self.gradient_threshold}")


@dataclass
class QuickPropState:
    prev_gradient: np.ndarray
    prev_step: np.ndarray
    ignited: bool = False

    @classmethod
    def zeros(cls, size):
        return cls(np.zeros(size, dtype=real_type), np.zeros(size, dtype=real_type))


@dataclass(frozen=True)
class ParabolaCoeffs:
    a: float
    b: float
    c: float

    def __call__(self, offset):
        return self.a * offset * offset + self.b * offset + self.c

    def vertex_offset(self):
        if self.a == 0:
            raise DegenerateStepError("parabola with a == 0 has no vertex")
        return -self.b / (2.0 * self.a)


def gd_step(w, g, learning_rate):
    return w - learning_rate * g


def momentum_step(w, g, prev_step, learning_rate, momentum):
    step = momentum * prev_step - learning_rate * g
    return w + step, step


def second_derivative_estimate(g_t, g_prev, dw_prev):
    if dw_prev == 0:
        raise DegenerateStepError("secant estimate needs a non-zero previous step")
    return (g_t - g_prev) / dw_prev


def parabola_coefficients(loss, g_t, g_prev, dw_prev):
    return ParabolaCoeffs(0.5 * second_derivative_estimate(g_t, g_prev, dw_prev), g_t, loss)


def _raw_steps(g_t, g_prev, dw_prev, mu):
    """Vectorised case analysis; returns ``(dw, case_codes)`` with codes 1..3."""
    product = g_t * g_prev
    shrinking = (product > 0) & (np.abs(g_t) < np.abs(g_prev))
    growing = (product > 0) & ~shrinking
    denominator = g_prev - g_t
    safe = np.where(denominator == 0, 1.0, denominator)
    dw = np.where(denominator == 0, np.inf, g_t / safe * dw_prev)
    clamp = growing | ~np.isfinite(dw) | (np.abs(dw) > mu * np.abs(dw_prev))
    dw = np.where(clamp, mu * dw_prev, dw)
    cases = np.where(clamp, 3, np.where(shrinking, 1, 2))
    return dw, cases


def quickprop_raw_step(g_t, g_prev, dw_prev, mu):
    """
    One QuickProp step for a single weight, returned as ``(dw, case)``. dw is the vertex jump of
    the secant parabola, or mu·dw_prev when that jump would be infinite, point the wrong way or
    outgrow mu times the previous step.
    """
    if dw_prev == 0:
        raise DegenerateStepError("QuickProp step needs a non-zero previous step")
    dw, cases = _raw_steps(
        np.asarray([g_t], dtype=real_type),
        np.asarray([g_prev], dtype=real_type),
        np.asarray([dw_prev], dtype=real_type),
        mu,
    )
    return float(dw[0]), _CASE_CODES[int(cases[0])]


def _check_finite(gradient):
    bad = np.flatnonzero(~np.isfinite(gradient))
    if bad.size:
        index = int(bad[0])
        raise NumericError(f"non-finite gradient component at index {index}: {gradient[index]}", index)


def quickprop_update(weights, gradient, state, cfg, case_counts=None):
    """
    Returns the new weights and the new QuickPropState. When ``case_counts`` is given it is a
    Counter that receives the number of components per step kind ("fallback" plus the StepCase
    values).
    """
    weights = np.asarray(weights, dtype=real_type)
    gradient = np.asarray(gradient, dtype=real_type)
    if not (weights.shape == gradient.shape == state.prev_gradient.shape == state.prev_step.shape):
        raise ParameterError(
            f"length mismatch: weights {weights.shape}, gradient {gradient.shape}, "
            f"state {state.prev_gradient.shape}/{state.prev_step.shape}"
        )
    _check_finite(gradient)

    descent = -cfg.learning_rate * gradient
    if state.ignited:
        fallback = (np.abs(gradient) < cfg.gradient_threshold) | (state.prev_step == 0)
    else:
        fallback = np.ones(gradient.shape, dtype=bool)

    active = ~fallback
    step = descent.copy()
    cases = np.zeros(gradient.shape, dtype=np.int8)
    if active.any():
        g_prev = state.prev_gradient[active]
        g_t = gradient[active]
        raw, cases[active] = _raw_steps(g_t, g_prev, state.prev_step[active], cfg.mu)
        if cfg.same_sign_addition:
            raw = np.where(g_t * g_prev > 0, raw + descent[active], raw)
        step[active] = raw

    if case_counts is not None:
        codes, counts = np.unique(cases, return_counts=True)
        for code, count in zip(codes, counts):
            case_counts[_CASE_CODES[int(code)].value if code else "fallback"] += int(count)

    new_state = QuickPropState(gradient.copy(), step, True)
    return weights + step, new_state


class Optimizer:
    name = None

    def __init__(self, cfg, size):
        self.cfg = cfg
        self.size = size

    def step(self, weights, gradient):
        raise NotImplementedError

    def log_epoch(self, epoch):
        pass


class GradientDescent(Optimizer):
    name = OptimizerName.GD

    def step(self, weights, gradient):
        gradient = np.asarray(gradient, dtype=real_type)
        _check_finite(gradient)
        return gd_step(np.asarray(weights, dtype=real_type), gradient, self.cfg.learning_rate)


class Momentum(Optimizer):
    name = OptimizerName.MOMENTUM

    def __init__(self, cfg, size):
        super().__init__(cfg, size)
        self.prev_step = np.zeros(size, dtype=real_type)

    def step(self, weights, gradient):
        gradient = np.asarray(gradient, dtype=real_type)
        _check_finite(gradient)
        new_weights, self.prev_step = momentum_step(
            np.asarray(weights, dtype=real_type), gradient, self.prev_step,
            self.cfg.learning_rate, self.cfg.momentum,
        )
        return new_weights


class QuickProp(Optimizer):
    name = OptimizerName.QUICKPROP

    def __init__(self, cfg, size):
        super().__init__(cfg, size)
        self.state = QuickPropState.zeros(size)
        self.case_counts = Counter()

    def step(self, weights, gradient):
        new_weights, self.state = quickprop_update(weights, gradient, self.state, self.cfg, self.case_counts)
        return new_weights

    def log_epoch(self, epoch):
        total = sum(self.case_counts.values())
        if total:
            shares = ", ".join(
                f"{name}={self.case_counts[name] / total:.3f}"
                for name in ("fallback", *(case.value for case in StepCase))
            )
            logger.debug("epoch %d quickprop steps: %s", epoch, shares)
        self.case_counts.clear()


OPTIMIZERS = {cls.name: cls for cls in (GradientDescent, Momentum, QuickProp)}


def make_optimizer(name, cfg, size):
    try:
        return OPTIMIZERS[OptimizerName(name)](cfg, size)
    except ValueError:
        raise ParameterError(
            f"unknown optimizer {name!r}; choose from {', '.join(n.value for n in OptimizerName)}"
        ) from None
