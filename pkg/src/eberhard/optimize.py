"""Search for states and analyzer settings maximizing the predicted violation.

The objective is the model's J per produced pair as a function of
(r, alpha1, alpha2, beta1, beta2); it is minimized by multistart Nelder-Mead
descent seeded from a coarse grid of known-good setting shapes, then polished
from the best point found.  Critical efficiencies come from bisecting the
"any violation exists" predicate over the symmetric arm efficiency.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .counting import ReducedCounts
from .errors import ParameterError, ThresholdBracketError
from .model import (
    ArmParams,
    NoiseModel,
    SettingsQuad,
    SourceParams,
    expected_counts,
)

# J/N more negative than this counts as a genuine violation in bisection;
# anything smaller is treated as numerical noise.
EPS_VIOLATION = 1e-6

_R_MIN = 1e-9

# Setting shapes that cover the optimum across the efficiency range: the
# maximal-entanglement family at high eta, progressively flatter shapes
# (alpha near 90, beta near 0) as the state tends to a product state.
_ANGLE_PATTERNS = (
    (0.0, 45.0, 67.5, -67.5),
    (80.0, 125.0, -10.0, 35.0),
    (85.6, 118.0, -5.4, 25.9),
    (88.0, 110.0, -2.0, 20.0),
    (89.5, 103.0, -0.5, 13.0),
    (89.9, 97.0, -0.1, 7.0),
)
_R_GRID = (0.01, 0.03, 0.08, 0.15, 0.30, 0.50, 0.75, 1.0)


@dataclass(frozen=True)
class OptimizationProblem:
    """Efficiencies, noise, and search budget for one optimization run."""

    eta_a: float
    eta_b: float
    background_a: float = 0.0  # expected background counts per produced pair
    background_b: float = 0.0
    visibility: float = 1.0
    noise_model: NoiseModel = NoiseModel.COHERENCE_DAMPING
    fix_r: float | None = None
    multistart_count: int = 8
    tolerance: float = 1e-9  # convergence tolerance on J/N
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("eta_a", "eta_b"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {v}")
        if not 0.0 <= self.visibility <= 1.0:
            raise ParameterError(f"visibility must lie in [0, 1], got {self.visibility}")
        for name in ("background_a", "background_b"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")
        if self.fix_r is not None and not 0.0 < self.fix_r <= 1.0:
            raise ParameterError(f"fix_r must lie in (0, 1], got {self.fix_r}")
        if self.multistart_count < 1:
            raise ParameterError("multistart_count must be >= 1")
        if self.tolerance <= 0:
            raise ParameterError("tolerance must be > 0")
        object.__setattr__(self, "noise_model", NoiseModel(self.noise_model))


@dataclass(frozen=True)
class OptimizationResult:
    r_star: float
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    jn_star: float
    converged: bool
    evaluations: int

    def settings(self) -> SettingsQuad:
        return SettingsQuad(self.alpha1, self.alpha2, self.beta1, self.beta2)

    def to_json_dict(self) -> dict:
        return {
            "r_star": self.r_star,
            "alpha1_deg": self.alpha1,
            "alpha2_deg": self.alpha2,
            "beta1_deg": self.beta1,
            "beta2_deg": self.beta2,
            "jn_star": self.jn_star,
            "converged": self.converged,
            "evaluations": self.evaluations,
        }


def predicted_jn(problem: OptimizationProblem, r: float, settings: SettingsQuad) -> float:
    """Model J per produced pair at the given state and settings.

    Evaluated from the expected count tables with one pair per setting, so the
    value is free of N; backgrounds enter as counts per produced pair.
    """
    source = SourceParams(r, problem.visibility, problem.noise_model, 0.0)
    arm_a = ArmParams(problem.eta_a, background_rate_hz=problem.background_a)
    arm_b = ArmParams(problem.eta_b, background_rate_hz=problem.background_b)
    reduced = expected_counts(
        source, arm_a, arm_b, settings, pairs_per_setting=1.0, duration_s=1.0, window_ns=0
    ).reduced
    return _jn_of_reduced(reduced)


def _jn_of_reduced(c: ReducedCounts) -> float:
    return float(-c.c_oo_11 + c.s_a_1 - c.c_oo_12 + c.s_b_1 - c.c_oo_21 + c.c_oo_22)


def _make_objective(problem: OptimizationProblem):
    """Closed-form J/N objective over x = (r, a1, a2, b1, b2) in degrees.

    Identical to `predicted_jn` (a unit test holds the two to 1e-12); written
    out in scalars because the simplex search evaluates it millions of times.
    """
    ea, eb = problem.eta_a, problem.eta_b
    eab = ea * eb
    bg = problem.background_a + problem.background_b
    vis = problem.visibility
    white = problem.noise_model is NoiseModel.WHITE_NOISE
    evaluations = [0]

    def objective(x) -> float:
        evaluations[0] += 1
        r = min(max(float(x[0]), _R_MIN), 1.0)
        a1, a2, b1, b2 = (math.radians(float(v)) for v in x[1:5])
        norm = 1.0 + r * r

        def q(a: float, b: float) -> float:
            amp_h = math.cos(a) * math.sin(b)
            amp_v = r * math.sin(a) * math.cos(b)
            if white:
                pure = (amp_h + amp_v) ** 2 / norm
                return vis * pure + (1.0 - vis) / 4.0
            return (amp_h * amp_h + amp_v * amp_v + 2.0 * vis * amp_h * amp_v) / norm

        m_a = (math.cos(a1) ** 2 + r * r * math.sin(a1) ** 2) / norm
        m_b = (r * r * math.cos(b1) ** 2 + math.sin(b1) ** 2) / norm
        if white:
            m_a = vis * m_a + (1.0 - vis) / 2.0
            m_b = vis * m_b + (1.0 - vis) / 2.0
        return (
            -eab * q(a1, b1)
            + ea * m_a
            - eab * q(a1, b2)
            + eb * m_b
            - eab * q(a2, b1)
            + eab * q(a2, b2)
            + bg
        )

    return objective, evaluations


def _initial_simplex(x0: np.ndarray, fix_r: bool) -> np.ndarray:
    steps = [6.0] * len(x0)
    if not fix_r:
        steps[0] = 0.08 if x0[0] + 0.08 <= 1.0 else -0.08
    simplex = [x0]
    for i, step in enumerate(steps):
        vertex = x0.copy()
        vertex[i] += step
        simplex.append(vertex)
    return np.array(simplex)


def _starts(problem: OptimizationProblem, extra_starts: tuple[tuple[float, ...], ...]):
    rng = np.random.default_rng(problem.seed)
    rs = (problem.fix_r,) if problem.fix_r is not None else _R_GRID
    grid = [(r, *angles) for r in rs for angles in _ANGLE_PATTERNS]
    random_starts = [
        (
            rng.uniform(0.01, 1.0),
            rng.uniform(55.0, 95.0),
            rng.uniform(90.0, 150.0),
            rng.uniform(-35.0, 10.0),
            rng.uniform(0.0, 70.0),
        )
        for _ in range(problem.multistart_count)
    ]
    if problem.fix_r is not None:
        random_starts = [(problem.fix_r, *s[1:]) for s in random_starts]
    return grid, [tuple(map(float, s)) for s in extra_starts] + random_starts


def _optimize(
    problem: OptimizationProblem,
    extra_starts: tuple[tuple[float, ...], ...] = (),
    grid_keep: int = 6,
    maxfev: int = 2500,
) -> OptimizationResult:
    objective, evaluations = _make_objective(problem)
    fix_r = problem.fix_r is not None

    if fix_r:
        full = lambda y: objective((problem.fix_r, *y))
        to_vec = lambda s: np.array(s[1:], dtype=float)
        to_x = lambda v: (problem.fix_r, *map(float, v))
    else:
        full = objective
        to_vec = lambda s: np.array(s, dtype=float)
        to_x = lambda v: tuple(map(float, v))

    grid, starts = _starts(problem, extra_starts)
    ranked = sorted(grid, key=lambda s: (objective(s), s))
    starts = [tuple(s) for s in ranked[:grid_keep]] + starts

    candidates: list[tuple[float, tuple[float, ...]]] = []
    options = dict(xatol=1e-6, fatol=1e-12, maxfev=maxfev, maxiter=maxfev)
    for start in starts:
        vec = to_vec(start)
        res = minimize(
            full,
            vec,
            method="Nelder-Mead",
            options={**options, "initial_simplex": _initial_simplex(vec, fix_r)},
        )
        candidates.append((float(res.fun), to_x(res.x)))

    candidates.sort(key=lambda c: (c[0], c[1]))
    best_x = np.array(to_vec(candidates[0][1]), dtype=float)
    polish_simplex = [best_x]
    for i in range(len(best_x)):
        vertex = best_x.copy()
        vertex[i] += 0.05 if (fix_r or i > 0) else 0.002
        polish_simplex.append(vertex)
    polish = minimize(
        full,
        best_x,
        method="Nelder-Mead",
        options=dict(
            xatol=1e-8,
            fatol=min(problem.tolerance, 1e-13),
            maxfev=4 * maxfev,
            maxiter=4 * maxfev,
            initial_simplex=np.array(polish_simplex),
        ),
    )
    candidates.append((float(polish.fun), to_x(polish.x)))
    candidates.sort(key=lambda c: (c[0], c[1]))

    x = candidates[0][1]
    r_star = min(max(x[0], _R_MIN), 1.0)
    settings = SettingsQuad(x[1], x[2], x[3], x[4])
    jn_star = predicted_jn(problem, r_star, settings)
    return OptimizationResult(
        r_star=r_star,
        alpha1=x[1],
        alpha2=x[2],
        beta1=x[3],
        beta2=x[4],
        jn_star=jn_star,
        converged=bool(polish.success),
        evaluations=evaluations[0],
    )


def optimize(problem: OptimizationProblem) -> OptimizationResult:
    """Best violating state and settings for the given efficiencies and noise.

    Multistart derivative-free descent; deterministic for a given seed.
    Non-convergence of the final polish is reported through `converged`.
    """
    return _optimize(problem)


def critical_efficiency(
    background: float = 0.0,
    visibility: float = 1.0,
    fix_r: float | None = None,
    tolerance: float = 0.002,
    seed: int = 0,
) -> float:
    """Symmetric arm efficiency where a violation first becomes possible.

    Bisection over eta in [0, 1] on the predicate "the optimizer finds
    J/N < -EPS_VIOLATION", with `background` applied to both arms (counts per
    produced pair).  The returned value is within `tolerance` of the crossing.
    """
    if tolerance <= 0:
        raise ParameterError(f"tolerance must be > 0, got {tolerance}")

    warm: list[tuple[float, ...]] = []

    def probe(eta: float) -> bool:
        problem = OptimizationProblem(
            eta_a=eta,
            eta_b=eta,
            background_a=background,
            background_b=background,
            visibility=visibility,
            fix_r=fix_r,
            multistart_count=3,
            seed=seed,
        )
        result = _optimize(problem, extra_starts=tuple(warm), grid_keep=4, maxfev=1500)
        if result.jn_star < -EPS_VIOLATION:
            point = (result.r_star, result.alpha1, result.alpha2, result.beta1, result.beta2)
            warm.insert(0, point)
            del warm[2:]
            return True
        return False

    if probe(0.0):
        raise ThresholdBracketError("violation predicate already true at eta = 0")
    if not probe(1.0):
        raise ThresholdBracketError("violation predicate false at eta = 1")

    lo, hi = 0.0, 1.0
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
