"""Arm-efficiency feasibility checks for device-independent key distribution.

Fully device-independent QKD needs every arm above 75% efficiency; the
one-sided variant (one party trusts their own apparatus) needs 65.9% on the
checked arm.  The module also predicts the basis visibilities a model state
would show, the figure of merit such protocols consume.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import ParameterError
from .model import SourceParams, joint_outcome_distribution_from_rho, source_density_matrix, ArmParams

THRESHOLD_DI = 0.75
THRESHOLD_ONE_SIDED_DI = 0.659


class Basis(str, enum.Enum):
    """Analyzer bases used for visibility measurements."""

    Z = "z"  # 0 / 90 degrees
    X = "x"  # 45 / 135 degrees


_BASIS_ANGLES = {Basis.Z: (0.0, 90.0), Basis.X: (45.0, 135.0)}


@dataclass(frozen=True)
class FeasibilityReport:
    eta_a: float
    eta_b: float
    feasible_di: bool
    feasible_1sdi_alice_side: bool
    feasible_1sdi_bob_side: bool
    threshold_di: float = THRESHOLD_DI
    threshold_1sdi: float = THRESHOLD_ONE_SIDED_DI
    visibility_z: float | None = None
    visibility_x: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "eta_a": self.eta_a,
            "eta_b": self.eta_b,
            "threshold_di": self.threshold_di,
            "threshold_1sdi": self.threshold_1sdi,
            "feasible_di": self.feasible_di,
            "feasible_1sdi_alice_side": self.feasible_1sdi_alice_side,
            "feasible_1sdi_bob_side": self.feasible_1sdi_bob_side,
            "visibility_z": self.visibility_z,
            "visibility_x": self.visibility_x,
        }


def basis_visibility(source: SourceParams, basis: Basis | str) -> float:
    """Coincidence contrast (C_max - C_min) / (C_max + C_min) in one basis.

    Computed over the four analyzer combinations of the basis angles for the
    noisy model state.  Arm efficiencies scale every coincidence equally and
    cancel, so none are taken.
    """
    basis = Basis(basis)
    rho = source_density_matrix(source)
    arm = ArmParams(eta_o=1.0)
    angles = _BASIS_ANGLES[basis]
    probs = [
        joint_outcome_distribution_from_rho(rho, arm, arm, a, b).prob("o", "o")
        for a in angles
        for b in angles
    ]
    c_max, c_min = max(probs), min(probs)
    if c_max + c_min == 0:
        raise ParameterError(f"no coincidences in the {basis.value} basis; visibility undefined")
    return (c_max - c_min) / (c_max + c_min)


def feasibility(
    eta_a: float, eta_b: float, source: SourceParams | None = None
) -> FeasibilityReport:
    """Compare arm efficiencies against the DI-QKD feasibility thresholds.

    Comparisons are strict.  One-sided feasibility is reported per arm, since
    the protocol can be run from either side (or both).  Passing a source adds
    the model's z/x basis visibilities to the report.
    """
    for name, eta in (("eta_a", eta_a), ("eta_b", eta_b)):
        if not 0.0 <= eta <= 1.0:
            raise ParameterError(f"{name} must lie in [0, 1], got {eta}")
    return FeasibilityReport(
        eta_a=eta_a,
        eta_b=eta_b,
        feasible_di=eta_a > THRESHOLD_DI and eta_b > THRESHOLD_DI,
        feasible_1sdi_alice_side=eta_a > THRESHOLD_ONE_SIDED_DI,
        feasible_1sdi_bob_side=eta_b > THRESHOLD_ONE_SIDED_DI,
        visibility_z=None if source is None else basis_visibility(source, Basis.Z),
        visibility_x=None if source is None else basis_visibility(source, Basis.X),
    )
