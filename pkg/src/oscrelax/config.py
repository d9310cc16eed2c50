"""Run configuration: one JSON document drives every CLI subcommand."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .algebra import NONRESONANT, ResonanceDecl
from .algebra.freq import SYSTEM_FREQS
from .effective import EPS_RES, LindbladChannel, SystemSpec


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SpecConfig(_Strict):
    omega_c: float = Field(1.0, gt=0)
    omega_r: float = Field(0.5, gt=0)
    g: float = 0.1
    gamma_c: float = 0.05
    hbar: float = Field(1.0, gt=0)
    n_wc: float = Field(0.0, ge=0)
    n_wr: float = Field(0.0, ge=0)
    n_table: Optional[list[tuple[float, float]]] = None

    def build(self) -> SystemSpec:
        table = tuple(map(tuple, self.n_table)) if self.n_table is not None else None
        return SystemSpec(self.omega_c, self.omega_r, self.g, self.gamma_c, self.hbar,
                          self.n_wc, self.n_wr, table)


class ResonanceConfig(_Strict):
    pairs: list[tuple[str, str]] = Field(default_factory=list)
    bath_rule: bool = True
    branch: Optional[Literal["resonant", "nonresonant"]] = None
    eps_res: float = Field(EPS_RES, gt=0)

    @field_validator("pairs")
    @classmethod
    def _known_symbols(cls, pairs):
        for a, b in pairs:
            if a not in SYSTEM_FREQS or b not in SYSTEM_FREQS or a == b:
                raise ValueError(f"resonant pair must name two distinct system frequencies, got {(a, b)}")
        return pairs

    def build(self) -> ResonanceDecl:
        if not self.pairs and self.bath_rule:
            return NONRESONANT
        return ResonanceDecl.resonant(*self.pairs, bath_rule=self.bath_rule)


class ChannelConfig(_Strict):
    mode: Literal["c", "r"]
    rate: float = Field(ge=0)
    occupation: float = Field(ge=0)

    def build(self) -> LindbladChannel:
        return LindbladChannel(self.mode, self.rate, self.occupation)


class SimulationConfig(_Strict):
    dims: tuple[int, int] = (15, 15)
    dt: Optional[float] = Field(None, gt=0)  # None: half the RK4 stability bound
    t_final: float = Field(200.0, ge=0)
    sample_every: int = Field(10, ge=1)
    initial: Literal["vacuum", "thermal"] = "vacuum"
    initial_occupations: tuple[float, float] = (0.0, 0.0)  # for initial == "thermal"
    channels: Optional[list[ChannelConfig]] = None  # None: rates derived from the physical block
    convention: float = Field(1.0, gt=0)
    detuning: bool = False
    steady_state: bool = False
    tol: float = Field(1e-10, gt=0)
    max_steps: int = Field(1_000_000, ge=1)
    check_positivity: bool = True

    @field_validator("dims")
    @classmethod
    def _dims(cls, dims):
        if min(dims) < 2:
            raise ValueError("Fock dimensions must be >= 2")
        return dims


class PlateauConfig(_Strict):
    g: float = 0.1
    rate_c: float = Field(0.08, gt=0)


class OracleConfig(_Strict):
    n_modes: int = Field(400, ge=1)
    dt: float = Field(0.5, gt=0)
    t_final: Optional[float] = Field(None, gt=0)  # None: the recurrence horizon
    rate_c: float = Field(0.04, ge=0)  # golden-rule target linewidth of c
    g_sweep: list[float] = Field(default_factory=lambda: [0.01, 0.02])
    rate_c_sweep: list[float] = Field(default_factory=lambda: [0.01, 0.04])
    plateau: Optional[PlateauConfig] = None  # run the two-plateau asymptote check

    @field_validator("g_sweep", "rate_c_sweep")
    @classmethod
    def _sorted_unique(cls, values):
        if len(set(values)) != len(values):
            raise ValueError("sweep values must be distinct")
        return sorted(values)


class RunConfig(_Strict):
    spec: SpecConfig = Field(default_factory=SpecConfig)
    resonance: ResonanceConfig = Field(default_factory=ResonanceConfig)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)
    oracle: OracleConfig = Field(default_factory=OracleConfig)
    out_dir: str = "out"

    @model_validator(mode="after")
    def _spec_valid(self):
        self.spec.build()
        return self

    @classmethod
    def load(cls, path: str | Path) -> RunConfig:
        return cls.model_validate_json(Path(path).read_text())

    def dumps(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2) + "\n"
