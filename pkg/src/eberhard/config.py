"""Run configuration for the CLI: flat key set, documented defaults, validation.

A bare configuration reproduces the headline run shape: r = 0.297, the four
published-style analyzer angles, 300 s per setting, lossless arms with no
background, coincidence window 1000 ns, seed 42.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import ParameterError
from .events import RunConfig
from .model import ArmParams, NoiseModel, SettingsQuad, SourceParams


@dataclass(frozen=True)
class Config:
    r: float = 0.297
    visibility: float = 1.0
    noise_model: str = NoiseModel.COHERENCE_DAMPING.value
    pair_rate_hz: float = 80667.0  # ~24.2e6 pairs per 300 s setting
    eta_a: float = 1.0
    eta_b: float = 1.0
    eta_e_a: float = 0.0
    eta_e_b: float = 0.0
    background_a_hz: float = 0.0
    background_b_hz: float = 0.0
    alpha1_deg: float = 85.6
    alpha2_deg: float = 118.0
    beta1_deg: float = -5.4
    beta2_deg: float = 25.9
    duration_s: float = 300.0
    seed: int = 42
    timing_jitter_ns: int = 0
    window_ns: int = 1000
    arm_delay_ns: int = 0

    def __post_init__(self) -> None:
        self.run_config()  # every range check lives in the domain types

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Config":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ParameterError(f"unknown config keys: {unknown}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "Config":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ParameterError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def source(self) -> SourceParams:
        return SourceParams(
            r=self.r,
            visibility=self.visibility,
            noise_model=self.noise_model,
            pair_rate_hz=self.pair_rate_hz,
        )

    def arm_a(self) -> ArmParams:
        return ArmParams(self.eta_a, self.eta_e_a, self.background_a_hz)

    def arm_b(self) -> ArmParams:
        return ArmParams(self.eta_b, self.eta_e_b, self.background_b_hz)

    def settings(self) -> SettingsQuad:
        return SettingsQuad(self.alpha1_deg, self.alpha2_deg, self.beta1_deg, self.beta2_deg)

    def run_config(self) -> RunConfig:
        return RunConfig(
            source=self.source(),
            arm_a=self.arm_a(),
            arm_b=self.arm_b(),
            settings=self.settings(),
            duration_s=self.duration_s,
            seed=self.seed,
            timing_jitter_ns=self.timing_jitter_ns,
            window_ns=self.window_ns,
            arm_delay_ns=self.arm_delay_ns,
        )
