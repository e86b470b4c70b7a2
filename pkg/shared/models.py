import math
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SCHEMA_VERSION = 1


class StateKind(str, Enum):
    CAT = "cat"
    SQUEEZED_VACUUM = "squeezed_vacuum"
    FOCK = "fock"


class StateSpec(BaseModel):
    """One of the three test-state families, truncated at `truncation` photons."""

    model_config = ConfigDict(frozen=True)

    kind: StateKind
    truncation: int = Field(ge=0)
    loss_transmissivity: float = Field(0.95, gt=0.0, le=1.0)
    alpha: Optional[float] = None
    variance_ratio: Optional[float] = None
    squeeze_angle: float = 0.0
    n: Optional[int] = None

    @model_validator(mode="after")
    def check_kind_parameters(self) -> "StateSpec":
        if self.kind == StateKind.CAT:
            if self.alpha is None or not self.alpha > 0:
                raise ValueError("cat state needs alpha > 0")
            if self.truncation < 2:
                raise ValueError("cat state needs truncation >= 2")
        elif self.kind == StateKind.SQUEEZED_VACUUM:
            if self.variance_ratio is None or not 0.0 < self.variance_ratio <= 1.0:
                raise ValueError("squeezed vacuum needs 0 < variance_ratio <= 1")
        elif self.kind == StateKind.FOCK:
            if self.n is None or self.n < 0:
                raise ValueError("fock state needs n >= 0")
            if self.n > self.truncation:
                raise ValueError(f"fock n={self.n} exceeds truncation {self.truncation}")
        return self

    @property
    def label(self) -> str:
        if self.kind == StateKind.CAT:
            return f"cat(alpha={self.alpha:g})"
        if self.kind == StateKind.SQUEEZED_VACUUM:
            return f"squeezed_vacuum(variance_ratio={self.variance_ratio:g})"
        return f"fock(n={self.n})"


class WidthKind(str, Enum):
    FIXED = "fixed"
    SCOTT = "scott"
    LEONHARDT = "leonhardt"


class PhotonSource(str, Enum):
    TRUNCATION = "truncation"
    ESTIMATED_MEAN = "estimated_mean"


class WidthStrategy(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: WidthKind
    width: Optional[float] = None
    n_source: PhotonSource = PhotonSource.ESTIMATED_MEAN

    @model_validator(mode="after")
    def check_width(self) -> "WidthStrategy":
        if self.kind == WidthKind.FIXED:
            if self.width is None or not self.width > 0:
                raise ValueError("fixed strategy needs width > 0")
        return self

    @classmethod
    def parse(cls, text: str) -> "WidthStrategy":
        """Parse `fixed:<h>`, `scott`, `leonhardt:t` or `leonhardt:mean`."""
        head, _, tail = text.strip().partition(":")
        head = head.lower()
        if head == WidthKind.FIXED.value:
            try:
                return cls(kind=WidthKind.FIXED, width=float(tail))
            except ValueError:
                raise ValueError(f"invalid fixed width in strategy {text!r}")
        if head == WidthKind.SCOTT.value and not tail:
            return cls(kind=WidthKind.SCOTT)
        if head == WidthKind.LEONHARDT.value:
            sources = {
                "t": PhotonSource.TRUNCATION,
                "truncation": PhotonSource.TRUNCATION,
                "mean": PhotonSource.ESTIMATED_MEAN,
                "estimated_mean": PhotonSource.ESTIMATED_MEAN,
                "": PhotonSource.ESTIMATED_MEAN,
            }
            if tail.lower() in sources:
                return cls(kind=WidthKind.LEONHARDT, n_source=sources[tail.lower()])
        raise ValueError(f"unknown width strategy {text!r}")

    @property
    def label(self) -> str:
        if self.kind == WidthKind.FIXED:
            return f"fixed:{self.width:g}"
        if self.kind == WidthKind.SCOTT:
            return "scott"
        return "leonhardt:t" if self.n_source == PhotonSource.TRUNCATION else "leonhardt:mean"


class BinMode(str, Enum):
    RAW = "raw"
    CENTER = "center"
    INTEGRAL = "integral"


class SweepPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: BinMode
    strategy: Optional[WidthStrategy] = None

    @model_validator(mode="after")
    def check_strategy(self) -> "SweepPoint":
        if self.mode != BinMode.RAW and self.strategy is None:
            raise ValueError(f"mode {self.mode.value} needs a width strategy")
        return self

    @property
    def strategy_label(self) -> str:
        # raw mode ignores the strategy
        if self.mode == BinMode.RAW or self.strategy is None:
            return "none"
        return self.strategy.label


class MLEConfig(BaseModel):
    rpr_iterations: Optional[int] = Field(None, ge=0)
    stop_gap: float = Field(0.2, gt=0.0)
    trust_radius_init: float = Field(1e-4, gt=0.0)
    trust_grow: float = Field(2.0, gt=1.0)
    trust_shrink: float = Field(0.5, gt=0.0, lt=1.0)
    trust_radius_max: float = Field(1.0, gt=0.0)
    max_iterations: int = Field(5000, ge=1)
    prob_floor: float = Field(1e-12, gt=0.0)
    max_cg_iterations: Optional[int] = Field(None, ge=1)
    cg_tolerance: float = Field(1e-6, gt=0.0)

    def rpr_iterations_for(self, dim: int) -> int:
        """Defaults to ceil((t+1)^2 / 4), where RrhoR typically slows down."""
        if self.rpr_iterations is not None:
            return self.rpr_iterations
        return math.ceil(dim * dim / 4)

    def cg_iterations_for(self, dim: int) -> int:
        if self.max_cg_iterations is not None:
            return self.max_cg_iterations
        return 2 * dim * dim


class ExperimentConfig(BaseModel):
    schema_version: int = SCHEMA_VERSION
    state: StateSpec
    phases: int = Field(20, ge=1)
    samples: int = Field(20000, ge=1)
    eta: float = Field(0.9, gt=0.0, le=1.0)
    repetitions: int = Field(100, ge=1)
    sweep: List[SweepPoint] = []
    master_seed: int = Field(0, ge=0, lt=2 ** 64)
    output_path: str = "results"
    mle: MLEConfig = MLEConfig()
    quadrature_order: Optional[int] = Field(None, ge=2)
    max_panel_width: float = Field(0.5, gt=0.0)
    bin_anchor: str = "minimum"
    workers: int = Field(1, ge=1)

    @field_validator("schema_version")
    @classmethod
    def check_schema_version(cls, value: int) -> int:
        if value != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {value}; this build reads version {SCHEMA_VERSION}")
        return value

    @field_validator("bin_anchor")
    @classmethod
    def check_anchor(cls, value: str) -> str:
        if value not in ("minimum", "zero"):
            raise ValueError("bin_anchor must be 'minimum' or 'zero'")
        return value

    @model_validator(mode="after")
    def check_schedule(self) -> "ExperimentConfig":
        if self.samples % self.phases:
            raise ValueError(f"samples ({self.samples}) must be divisible by phases ({self.phases})")
        if self.phases < self.state.truncation + 1:
            raise ValueError(
                f"{self.phases} phases cannot be informationally complete for truncation {self.state.truncation}"
            )
        return self

    @property
    def truncation(self) -> int:
        return self.state.truncation

    def order_for(self) -> int:
        if self.quadrature_order is not None:
            return self.quadrature_order
        return max(20, self.truncation + 2)


class RunRow(BaseModel):
    sweep_index: int
    strategy: str
    mode: BinMode
    repetition: int
    seed: int
    fidelity: Optional[float] = None
    converged: bool = False
    wall_time_s: Optional[float] = None
    mean_width: Optional[float] = None
    nbar_estimate: Optional[float] = None
    iterations_rpr: int = 0
    iterations_rga: int = 0
    final_gap: Optional[float] = None
    n_operators: int = 0
    leakage: float = 0.0
    error: Optional[str] = None

    @property
    def included(self) -> bool:
        return self.error is None and self.converged


class SweepSummary(BaseModel):
    sweep_index: int
    strategy: str
    mode: BinMode
    width: Optional[float] = None
    mean_fidelity: float
    std_fidelity: float
    mean_time_s: float
    mean_nbar: float
    n_runs: int
    n_converged: int
    n_failed: int


class ExperimentReport(BaseModel):
    config: ExperimentConfig
    summaries: List[SweepSummary] = []
    runs: List[RunRow] = []

    @property
    def non_converged(self) -> int:
        return sum(1 for row in self.runs if row.error is None and not row.converged)

    @property
    def failed(self) -> int:
        return sum(1 for row in self.runs if row.error is not None)


# HTTP request / response models


class DatasetRequest(BaseModel):
    state: StateSpec
    phases: int = Field(20, ge=1)
    samples: int = Field(20000, ge=1)
    eta: float = Field(0.9, gt=0.0, le=1.0)
    seed: int = Field(0, ge=0)
    repetition: int = Field(0, ge=0)


class DatasetResponse(BaseModel):
    thetas: List[float]
    xs: List[float]
    nbar_estimate: float


class StateResponse(BaseModel):
    label: str
    real: List[List[float]]
    imag: List[List[float]]
    leakage: float
    analytic_mean_photon: float
    lossy_mean_photon: float


class ReconstructRequest(BaseModel):
    thetas: List[float]
    xs: List[float]
    mode: BinMode = BinMode.RAW
    strategy: Optional[str] = None
    truncation: int = Field(ge=0)
    eta: float = Field(0.9, gt=0.0, le=1.0)
    mle: MLEConfig = MLEConfig()

    @model_validator(mode="after")
    def check_lengths(self) -> "ReconstructRequest":
        if len(self.thetas) != len(self.xs):
            raise ValueError("thetas and xs must have the same length")
        if not self.xs:
            raise ValueError("at least one sample is required")
        if self.mode != BinMode.RAW and self.strategy is None:
            raise ValueError(f"mode {self.mode.value} needs a width strategy")
        return self


class ReconstructionMetadata(BaseModel):
    iterations_rpr: int
    iterations_rga: int
    final_gap: float
    final_log_likelihood: float
    wall_time_s: float
    converged: bool
    n_operators: int = 0


class ReconstructResponse(BaseModel):
    real: List[List[float]]
    imag: List[List[float]]
    metadata: ReconstructionMetadata
    widths: List[float] = []


class NbarRequest(BaseModel):
    xs: List[float]


class NbarResponse(BaseModel):
    estimate: float
    samples: int


class WidthsRequest(BaseModel):
    thetas: List[float]
    xs: List[float]
    strategy: str
    truncation: int = Field(ge=0)


class WidthsResponse(BaseModel):
    thetas: List[float]
    widths: List[float]
    bins: List[int]


class RunRequest(BaseModel):
    config: ExperimentConfig
    sweep_index: int = Field(ge=0)
    repetition: int = Field(ge=0)


class SweepResponse(BaseModel):
    sweep_id: str
    output_path: str
    summaries: List[SweepSummary]
    failed: int
    non_converged: int
