"""Closed-form quantum model for lossy polarization measurements on photon pairs.

States live in the two-qubit product basis (HH, HV, VH, VV), first slot Alice.
Analyzer angles follow the projector convention |a> = cos(a)|H> + sin(a)|V>;
each side has an "ordinary" (o) transmitted port and an "extraordinary" (e)
reflected port, and photons missed by both detectors count as undetected (u).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .counting import FullCounts, ReducedCounts
from .errors import ParameterError

# Tolerance for algebraic identities (normalization, hermiticity, trace).
NORM_TOL = 1e-12
# Slack allowed on density-matrix eigenvalues before rejecting a state.
EIGENVALUE_TOL = -1e-10

BASIS = ("HH", "HV", "VH", "VV")
OUTCOMES = ("o", "e", "u")
_OUTCOME_INDEX = {"o": 0, "e": 1, "u": 2}


class NoiseModel(str, enum.Enum):
    """How an imperfect interference visibility is folded into the state."""

    COHERENCE_DAMPING = "coherence-damping"
    WHITE_NOISE = "white-noise"


def _as_noise_model(model: NoiseModel | str) -> NoiseModel:
    try:
        return NoiseModel(model)
    except ValueError:
        raise ParameterError(f"unknown noise model: {model!r}") from None


@dataclass(frozen=True)
class PureState:
    """Two-photon polarization state, amplitudes in the (HH, HV, VH, VV) basis."""

    a_hh: complex
    a_hv: complex
    a_vh: complex
    a_vv: complex

    def __post_init__(self) -> None:
        norm = sum(abs(a) ** 2 for a in self.vector)
        if abs(norm - 1.0) > NORM_TOL:
            raise ParameterError(f"state norm^2 = {norm!r}, expected 1 within {NORM_TOL}")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a_hh, self.a_hv, self.a_vh, self.a_vv], dtype=complex)


@dataclass(frozen=True)
class DensityMatrix:
    """Validated 4x4 density operator on the two-photon polarization space."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        rho = np.array(self.matrix, dtype=complex)
        if rho.shape != (4, 4):
            raise ParameterError(f"density matrix must be 4x4, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > NORM_TOL:
            raise ParameterError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > NORM_TOL or abs(np.trace(rho).imag) > NORM_TOL:
            raise ParameterError("density matrix trace differs from 1")
        if np.min(np.linalg.eigvalsh(rho)) < EIGENVALUE_TOL:
            raise ParameterError("density matrix has a negative eigenvalue")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)


@dataclass(frozen=True)
class SourceParams:
    """Pair source description: state asymmetry r, visibility, and brightness."""

    r: float
    visibility: float = 1.0
    noise_model: NoiseModel = NoiseModel.COHERENCE_DAMPING
    pair_rate_hz: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.r <= 1.0:
            raise ParameterError(f"r must lie in (0, 1], got {self.r}")
        if not 0.0 <= self.visibility <= 1.0:
            raise ParameterError(f"visibility must lie in [0, 1], got {self.visibility}")
        object.__setattr__(self, "noise_model", _as_noise_model(self.noise_model))
        if self.pair_rate_hz < 0:
            raise ParameterError(f"pair_rate_hz must be >= 0, got {self.pair_rate_hz}")


@dataclass(frozen=True)
class ArmParams:
    """Per-arm detection: o/e port efficiencies and dark/background rate.

    The e port defaults to 0 (beam blocked); it only moves weight between the
    e and u outcome rows, never into anything the J statistic reads.
    """

    eta_o: float
    eta_e: float = 0.0
    background_rate_hz: float = 0.0

    def __post_init__(self) -> None:
        for name in ("eta_o", "eta_e"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {v}")
        if self.background_rate_hz < 0:
            raise ParameterError(
                f"background_rate_hz must be >= 0, got {self.background_rate_hz}"
            )


@dataclass(frozen=True)
class AnalyzerAngle:
    """Polarization-analyzer setting; projects onto cos(a)|H> + sin(a)|V>."""

    angle_deg: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.angle_deg):
            raise ParameterError(f"analyzer angle must be finite, got {self.angle_deg}")

    @property
    def radians(self) -> float:
        return math.radians(self.angle_deg)

    def ket(self) -> np.ndarray:
        t = self.radians
        return np.array([math.cos(t), math.sin(t)])


def _as_angle(angle: AnalyzerAngle | float) -> AnalyzerAngle:
    if isinstance(angle, AnalyzerAngle):
        return angle
    return AnalyzerAngle(float(angle))


@dataclass(frozen=True)
class SettingsQuad:
    """The four analyzer settings of a two-setting-per-side run."""

    alpha1: AnalyzerAngle
    alpha2: AnalyzerAngle
    beta1: AnalyzerAngle
    beta2: AnalyzerAngle

    def __post_init__(self) -> None:
        for name in ("alpha1", "alpha2", "beta1", "beta2"):
            object.__setattr__(self, name, _as_angle(getattr(self, name)))

    def alice(self, i: int) -> AnalyzerAngle:
        return (self.alpha1, self.alpha2)[i - 1]

    def bob(self, j: int) -> AnalyzerAngle:
        return (self.beta1, self.beta2)[j - 1]


@dataclass(frozen=True)
class OutcomeDistribution:
    """Joint probabilities over {o, e, u} x {o, e, u} for one setting pair."""

    p: np.ndarray  # shape (3, 3), rows Alice, columns Bob

    def __post_init__(self) -> None:
        p = np.array(self.p, dtype=float)
        if p.shape != (3, 3):
            raise ParameterError(f"outcome table must be 3x3, got {p.shape}")
        if np.min(p) < -NORM_TOL:
            raise ParameterError(f"negative outcome probability: {np.min(p)}")
        # Snap float-noise negatives so downstream samplers see proper weights.
        p[p < 0] = 0.0
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise ParameterError(f"outcome probabilities sum to {p.sum()!r}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def prob(self, alice: str, bob: str) -> float:
        return float(self.p[_OUTCOME_INDEX[alice], _OUTCOME_INDEX[bob]])

    def alice_marginal(self) -> np.ndarray:
        return self.p.sum(axis=1)

    def bob_marginal(self) -> np.ndarray:
        return self.p.sum(axis=0)


def make_state(r: float) -> PureState:
    """Non-maximally entangled pair state (|HV> + r|VH>) / sqrt(1 + r^2)."""
    if not 0.0 < r <= 1.0:
        raise ParameterError(f"r must lie in (0, 1], got {r}")
    norm = math.sqrt(1.0 + r * r)
    return PureState(0.0, 1.0 / norm, r / norm, 0.0)


def apply_noise(
    state: PureState, visibility: float, model: NoiseModel | str = NoiseModel.COHERENCE_DAMPING
) -> DensityMatrix:
    """Mix a pure state down to the requested interference visibility.

    coherence-damping scales the HV<->VH coherences by the visibility (leaves
    every population untouched); white-noise blends with the fully mixed state.
    """
    if not 0.0 <= visibility <= 1.0:
        raise ParameterError(f"visibility must lie in [0, 1], got {visibility}")
    model = _as_noise_model(model)
    psi = state.vector
    rho = np.outer(psi, psi.conj())
    if model is NoiseModel.COHERENCE_DAMPING:
        rho[1, 2] *= visibility
        rho[2, 1] *= visibility
    else:
        rho = visibility * rho + (1.0 - visibility) * np.eye(4) / 4.0
    return DensityMatrix(rho)


def source_density_matrix(source: SourceParams) -> DensityMatrix:
    """State actually emitted by the source, noise already applied."""
    return apply_noise(make_state(source.r), source.visibility, source.noise_model)


def _rho_array(rho: DensityMatrix | np.ndarray) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    return np.asarray(rho, dtype=complex)


def _port_probs(
    rho: np.ndarray, alpha: AnalyzerAngle, beta: AnalyzerAngle
) -> tuple[float, float, float]:
    """(joint o-port prob, Alice o-port marginal, Bob o-port marginal)."""
    ka = alpha.ket()
    kb = beta.ket()
    kab = np.kron(ka, kb)
    q_oo = float(np.real(kab.conj() @ rho @ kab))
    rho_a = np.trace(rho.reshape(2, 2, 2, 2), axis1=1, axis2=3)
    rho_b = np.trace(rho.reshape(2, 2, 2, 2), axis1=0, axis2=2)
    m_a = float(np.real(ka.conj() @ rho_a @ ka))
    m_b = float(np.real(kb.conj() @ rho_b @ kb))
    return q_oo, m_a, m_b


def joint_outcome_distribution_from_rho(
    rho: DensityMatrix | np.ndarray,
    arm_a: ArmParams,
    arm_b: ArmParams,
    alpha: AnalyzerAngle | float,
    beta: AnalyzerAngle | float,
) -> OutcomeDistribution:
    """Outcome distribution for an explicit density matrix (pair physics only).

    Each pair is split by the polarizers jointly according to rho, then every
    port fires independently with its efficiency; missed photons land in u.
    Background counts are deliberately absent here.
    """
    rho = _rho_array(rho)
    q_oo, m_a, m_b = _port_probs(rho, _as_angle(alpha), _as_angle(beta))
    q_oe = m_a - q_oo
    q_eo = m_b - q_oo
    q_ee = 1.0 - m_a - m_b + q_oo

    ao, ae = arm_a.eta_o, arm_a.eta_e
    bo, be = arm_b.eta_o, arm_b.eta_e
    p = np.empty((3, 3))
    p[0, 0] = q_oo * ao * bo
    p[0, 1] = q_oe * ao * be
    p[0, 2] = q_oo * ao * (1 - bo) + q_oe * ao * (1 - be)
    p[1, 0] = q_eo * ae * bo
    p[1, 1] = q_ee * ae * be
    p[1, 2] = q_eo * ae * (1 - bo) + q_ee * ae * (1 - be)
    p[2, 0] = q_oo * (1 - ao) * bo + q_eo * (1 - ae) * bo
    p[2, 1] = q_oe * (1 - ao) * be + q_ee * (1 - ae) * be
    p[2, 2] = (
        q_oo * (1 - ao) * (1 - bo)
        + q_oe * (1 - ao) * (1 - be)
        + q_eo * (1 - ae) * (1 - bo)
        + q_ee * (1 - ae) * (1 - be)
    )
    return OutcomeDistribution(p)


def joint_outcome_distribution(
    source: SourceParams,
    arm_a: ArmParams,
    arm_b: ArmParams,
    alpha: AnalyzerAngle | float,
    beta: AnalyzerAngle | float,
) -> OutcomeDistribution:
    """Joint {o, e, u} outcome probabilities for one pair at one setting pair."""
    return joint_outcome_distribution_from_rho(
        source_density_matrix(source), arm_a, arm_b, alpha, beta
    )


def singles_probability(
    source: SourceParams,
    arm: ArmParams,
    angle: AnalyzerAngle | float,
    side: str,
) -> float:
    """Probability that one produced pair yields an o-port click on `side`.

    Equals the o-row (o-column) marginal of the joint distribution for any
    partner setting; the partner side never enters.
    """
    if side not in ("A", "B"):
        raise ParameterError(f"side must be 'A' or 'B', got {side!r}")
    rho = source_density_matrix(source).matrix
    axes = (1, 3) if side == "A" else (0, 2)
    rho_side = np.trace(rho.reshape(2, 2, 2, 2), axis1=axes[0], axis2=axes[1])
    k = _as_angle(angle).ket()
    return arm.eta_o * float(np.real(k.conj() @ rho_side @ k))


class ExpectedCounts(NamedTuple):
    reduced: ReducedCounts
    full: FullCounts


def expected_counts(
    source: SourceParams,
    arm_a: ArmParams,
    arm_b: ArmParams,
    settings: SettingsQuad,
    pairs_per_setting: float,
    duration_s: float,
    window_ns: int,
) -> ExpectedCounts:
    """Expectation values of the count tables for a run (reals, not integers).

    The full tables hold pair outcomes only.  The reduced table holds what a
    counter would register: singles gain `background_rate * duration` and each
    coincidence gains the first-order accidental term
    2 * window * duration * rate_A * rate_B.
    """
    if pairs_per_setting < 0:
        raise ParameterError(f"pairs_per_setting must be >= 0, got {pairs_per_setting}")
    if duration_s < 0:
        raise ParameterError(f"duration_s must be >= 0, got {duration_s}")
    if window_ns < 0:
        raise ParameterError(f"window_ns must be >= 0, got {window_ns}")

    n = float(pairs_per_setting)
    rho = source_density_matrix(source)
    dists = {
        (i, j): joint_outcome_distribution_from_rho(
            rho, arm_a, arm_b, settings.alice(i), settings.bob(j)
        )
        for i in (1, 2)
        for j in (1, 2)
    }
    tables = {
        pair: {
            (k, l): n * dist.prob(k, l)
            for k in OUTCOMES
            for l in OUTCOMES
        }
        for pair, dist in dists.items()
    }
    full = FullCounts(tables, pairs_per_setting=n if n > 0 else None)

    bg_a = arm_a.background_rate_hz * duration_s
    bg_b = arm_b.background_rate_hz * duration_s

    def singles_a(pair: tuple[int, int]) -> float:
        return n * float(dists[pair].alice_marginal()[0]) + bg_a

    def singles_b(pair: tuple[int, int]) -> float:
        return n * float(dists[pair].bob_marginal()[0]) + bg_b

    def coincidences(pair: tuple[int, int]) -> float:
        true = n * dists[pair].prob("o", "o")
        if duration_s <= 0 or window_ns == 0:
            return true
        rate_a = singles_a(pair) / duration_s
        rate_b = singles_b(pair) / duration_s
        accidental = 2.0 * (window_ns * 1e-9) * duration_s * rate_a * rate_b
        return true + accidental

    reduced = ReducedCounts(
        c_oo_11=coincidences((1, 1)),
        s_a_1=singles_a((1, 2)),
        c_oo_12=coincidences((1, 2)),
        s_b_1=singles_b((2, 1)),
        c_oo_21=coincidences((2, 1)),
        c_oo_22=coincidences((2, 2)),
        duration_s=duration_s,
    )
    return ExpectedCounts(reduced, full)
