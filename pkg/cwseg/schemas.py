from pydantic import BaseModel, ValidationError, field_validator, model_validator
from typing import Optional, List
from datetime import datetime
import enum
import math


class Label(str, enum.Enum):
    OBJECT = "OBJECT"
    BACKGROUND = "BACKGROUND"


class SampleCategory(str, enum.Enum):
    INTERIOR = "INTERIOR"
    NEAR_EDGE_INSIDE = "NEAR_EDGE_INSIDE"
    BORDER = "BORDER"
    NEAR_EDGE_OUTSIDE = "NEAR_EDGE_OUTSIDE"
    NEAR_FRAME_EDGE = "NEAR_FRAME_EDGE"


class Split(str, enum.Enum):
    TRAIN = "train"
    TEST = "test"
    IMAGE = "image"


class ClassifierKind(str, enum.Enum):
    MLP = "mlp"
    NN = "nn"
    GABOR = "gabor"


def _parse_int_list(v):
    if isinstance(v, str):
        return [int(p) for p in v.replace(" ", "").split(",") if p]
    return v


def _parse_float_list(v):
    if isinstance(v, str):
        return [float(p) for p in v.replace(" ", "").split(",") if p]
    return v


def _check_window(v: int) -> int:
    if v < 3 or v % 2 == 0:
        raise ValueError("window size must be an odd integer >= 3")
    return v


# ===== Network / training =====

class LayerSpec(BaseModel):
    """Layer sizes [n_in, h1, h2, n_out]."""
    sizes: List[int] = [81, 18, 10, 2]

    @field_validator("sizes", mode="before")
    @classmethod
    def parse_sizes(cls, v):
        return _parse_int_list(v)

    @field_validator("sizes")
    @classmethod
    def sizes_valid(cls, v: List[int]) -> List[int]:
        if len(v) != 4:
            raise ValueError("expected 4 layer sizes: n_in,h1,h2,n_out")
        if any(n < 1 for n in v):
            raise ValueError("layer sizes must be >= 1")
        if v[-1] != 2:
            raise ValueError("output layer must have 2 neurons")
        return v

    @property
    def n_in(self) -> int:
        return self.sizes[0]

    @property
    def n_params(self) -> int:
        return sum(n_out * n_in + n_out for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]))

    def __str__(self) -> str:
        return "-".join(str(n) for n in self.sizes)


class TrainConfig(BaseModel):
    max_epochs: int = 200
    mse_goal: float = 1e-3
    lambda0: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 10.0
    lambda_max: float = 1e10
    gd_step: float = 0.01
    seed: int = 0

    @field_validator("max_epochs")
    @classmethod
    def epochs_non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError("max_epochs must be >= 0")
        return v

    @field_validator("lambda0", "gd_step")
    @classmethod
    def positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("must be > 0")
        return v

    @field_validator("lambda_up", "lambda_down")
    @classmethod
    def factor_above_one(cls, v: float) -> float:
        if v <= 1:
            raise ValueError("lambda factors must be > 1")
        return v


# ===== Gabor baseline =====

class GaborSpec(BaseModel):
    orientations: List[float] = [0.0, 45.0, 90.0, 135.0]  # degrees
    radial_frequencies: List[float] = [0.125, 0.25]  # cycles/pixel
    sigma: Optional[float] = None  # None: 0.56 / frequency
    kernel_radius: Optional[int] = None  # None: ceil(3 * sigma)
    nonlinearity_alpha: float = 0.25
    smoothing_factor: float = 3.0
    max_iterations: int = 100
    seed: int = 0

    @field_validator("orientations", mode="before")
    @classmethod
    def parse_orientations(cls, v):
        return _parse_float_list(v)

    @field_validator("radial_frequencies", mode="before")
    @classmethod
    def parse_frequencies(cls, v):
        return _parse_float_list(v)

    @field_validator("orientations")
    @classmethod
    def orientations_distinct(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("at least one orientation is required")
        reduced = [round(a % 180.0, 9) for a in v]
        if len(set(reduced)) != len(reduced):
            raise ValueError("orientations must be distinct modulo 180 degrees")
        return v

    @field_validator("radial_frequencies")
    @classmethod
    def frequencies_in_range(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("at least one frequency is required")
        for f in v:
            if not 0 < f < 0.5:
                raise ValueError(f"frequency {f} outside (0, 0.5)")
        return v

    @field_validator("sigma")
    @classmethod
    def sigma_positive(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and v <= 0:
            raise ValueError("sigma must be > 0")
        return v

    @field_validator("kernel_radius")
    @classmethod
    def radius_positive(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError("kernel_radius must be >= 1")
        return v

    @field_validator("nonlinearity_alpha", "smoothing_factor")
    @classmethod
    def scale_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("must be > 0")
        return v

    @field_validator("max_iterations")
    @classmethod
    def iterations_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("max_iterations must be >= 1")
        return v

    def sigma_for(self, frequency: float) -> float:
        return self.sigma if self.sigma is not None else 0.56 / frequency

    def radius_for(self, frequency: float) -> int:
        if self.kernel_radius is not None:
            return self.kernel_radius
        return int(math.ceil(3 * self.sigma_for(frequency)))


# ===== Run configuration (CLI) =====

class RunConfig(BaseModel):
    """Merged defaults, config-file keys and command-line flags."""
    window: int = 9
    layers: Optional[LayerSpec] = None
    band: int = 4
    total: int = 1000
    train_fraction: float = 0.7
    seed: int = 0
    kind: ClassifierKind = ClassifierKind.MLP
    trainer: str = "lm"

    max_epochs: int = 200
    mse_goal: float = 1e-3
    lambda0: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 10.0
    lambda_max: float = 1e10

    gabor_orientations: Optional[List[float]] = None
    gabor_frequencies: Optional[List[float]] = None
    gabor_sigma: Optional[float] = None
    gabor_kernel_radius: Optional[int] = None
    gabor_nonlinearity_alpha: Optional[float] = None
    gabor_smoothing_factor: Optional[float] = None
    gabor_max_iterations: Optional[int] = None

    model_config = {"extra": "forbid"}

    @field_validator("layers", mode="before")
    @classmethod
    def parse_layers(cls, v):
        if v is None or isinstance(v, LayerSpec):
            return v
        return LayerSpec(sizes=_parse_int_list(v))

    @field_validator("gabor_orientations", "gabor_frequencies", mode="before")
    @classmethod
    def parse_gabor_lists(cls, v):
        return _parse_float_list(v)

    @field_validator("window")
    @classmethod
    def window_odd(cls, v: int) -> int:
        return _check_window(v)

    @field_validator("band")
    @classmethod
    def band_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("band must be >= 1")
        return v

    @field_validator("total")
    @classmethod
    def total_minimum(cls, v: int) -> int:
        if v < 10:
            raise ValueError("total must be >= 10")
        return v

    @field_validator("train_fraction")
    @classmethod
    def fraction_valid(cls, v: float) -> float:
        if not 0 < v < 1:
            raise ValueError("train_fraction must be in (0, 1)")
        return v

    @field_validator("trainer")
    @classmethod
    def trainer_known(cls, v: str) -> str:
        v = v.lower()
        if v not in ("lm", "gd"):
            raise ValueError("trainer must be 'lm' or 'gd'")
        return v

    @model_validator(mode="after")
    def gabor_overrides_valid(self):
        try:
            self.gabor_spec()
        except ValidationError as e:
            raise ValueError(f"gabor settings: {e.errors()[0]['msg']}")
        return self

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            max_epochs=self.max_epochs,
            mse_goal=self.mse_goal,
            lambda0=self.lambda0,
            lambda_up=self.lambda_up,
            lambda_down=self.lambda_down,
            lambda_max=self.lambda_max,
            seed=self.seed,
        )

    def gabor_spec(self) -> GaborSpec:
        overrides = {"seed": self.seed}
        fields = {
            "orientations": self.gabor_orientations,
            "radial_frequencies": self.gabor_frequencies,
            "sigma": self.gabor_sigma,
            "kernel_radius": self.gabor_kernel_radius,
            "nonlinearity_alpha": self.gabor_nonlinearity_alpha,
            "smoothing_factor": self.gabor_smoothing_factor,
            "max_iterations": self.gabor_max_iterations,
        }
        overrides.update({k: v for k, v in fields.items() if v is not None})
        return GaborSpec(**overrides)


# ===== Reports =====

class EfficiencyReport(BaseModel):
    split: Split
    total: int
    correct: int
    efficiency: float

    @model_validator(mode="after")
    def counts_consistent(self):
        if not 0 <= self.correct <= self.total:
            raise ValueError("correct must be within [0, total]")
        return self

    def line(self) -> str:
        return f"{self.split.value},{self.total},{self.correct},{self.efficiency:.2f}"


class SweepRow(BaseModel):
    window: int
    classifier: ClassifierKind
    layers: Optional[str] = None
    train: EfficiencyReport
    test: EfficiencyReport


class RunSummary(BaseModel):
    """Row for the recorded-runs listing."""
    id: int
    command: str
    classifier: Optional[str] = None
    window: Optional[int] = None
    seed: Optional[int] = None
    created_at: datetime
    efficiencies: dict = {}

    class Config:
        from_attributes = True
