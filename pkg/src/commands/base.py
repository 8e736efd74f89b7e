"""
Run configuration and the result container shared by all subcommands
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..core.loaders import load_modes
from ..lattice import ModeSet, enumerate_ball
from ..potential import PotentialSpec, potential_cutoff_hint

CommandName = Literal["coeffs", "series", "scaling", "rs-check", "oracle-fit"]


class RunConfig(BaseModel):
    """Resolved configuration of one CLI invocation"""

    model_config = ConfigDict(extra="forbid")

    command: CommandName
    potential: Dict[str, Any] = Field(..., description="Resolved potential (PotentialSpec.to_dict)")
    dim: int = Field(default=1, ge=1, le=3)
    modes: Optional[str] = Field(default=None, description="ball:R | list:PATH | support")
    cutoffs: List[float] = Field(default_factory=list)
    lambda_scales: List[float] = Field(default_factory=lambda: [4.0, 8.0, 16.0, 32.0])
    rel_cutoff: float = Field(default=1e-8, gt=0.0, lt=1.0)
    N_list: List[int] = Field(default_factory=lambda: [16, 24, 32, 48, 64, 96, 128])
    nmax_sweep: List[int] = Field(default_factory=lambda: [4, 6, 8, 10, 12, 14])
    order: int = Field(default=2, ge=1, le=2)
    probe_taylor: bool = False
    taylor_orders: List[int] = Field(default_factory=lambda: [0, 1, 2, 3])
    taylor_N: List[int] = Field(default_factory=lambda: [64, 128, 256, 512])
    taylor_nmax: int = Field(default=4, ge=1)
    full_space: bool = False
    out: Optional[str] = None
    workers: int = Field(default=1, ge=1)
    deterministic: bool = True
    seed: Optional[int] = None
    dense_threshold: Optional[int] = Field(default=None, ge=1)
    log_level: str = "INFO"
    log_format: Literal["console", "json"] = "console"

    @field_validator("log_level")
    @classmethod
    def _check_level(cls, value: str) -> str:
        if value.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level '{value}'")
        return value.upper()

    @field_validator("N_list")
    @classmethod
    def _check_particles(cls, value: List[int]) -> List[int]:
        if any(n < 2 for n in value):
            raise ValueError("every N must be at least 2")
        return value

    @field_validator("nmax_sweep")
    @classmethod
    def _check_nmax(cls, value: List[int]) -> List[int]:
        if any(n < 0 for n in value):
            raise ValueError("n_max values must be nonnegative")
        return value

    def spec(self) -> PotentialSpec:
        return PotentialSpec.from_dict(self.potential)

    def provenance(self) -> Dict[str, Any]:
        """Config as embedded in outputs (output path excluded)"""
        return self.model_dump(exclude={"out", "log_level", "log_format"})


@dataclass
class CommandOutput:
    """Tables and JSON documents produced by one subcommand"""

    tables: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    documents: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)

    def add_table(self, name: str, columns: List[str], rows: List[Dict[str, Any]]) -> None:
        self.tables[name] = {"columns": list(columns), "rows": rows}


def resolve_modes(config: RunConfig, spec: PotentialSpec) -> ModeSet:
    """Mode set from --modes, else supp ∪ (supp+supp) or a gaussian cutoff ball"""
    if config.modes:
        return load_modes(config.modes, config.dim, spec)
    if spec.is_band_limited:
        return load_modes("support", config.dim, spec)
    return enumerate_ball(config.dim, potential_cutoff_hint(spec, config.rel_cutoff))
