from typing import Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

CLASSIFIERS = ("majority", "tree")
# older name of the decision tree, still accepted from flags and config files
CLASSIFIER_ALIASES = {"fig412": "tree"}


class PipelineConfig(BaseModel):
    """Every tunable of the detection pipeline, defaults are the published values."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    block_size: int = 60
    stride: int = 30
    knn_k: int = 3
    head_window: int = 200
    top_columns: int = 60
    top_rows: int = 7
    canny_sigma: float = 1.0
    canny_lo: float = 0.1
    canny_hi: float = 0.3
    skin_frac: float = 0.25
    min_skin_area: int = 100
    classifier: str = "majority"
    threads: int = 0
    scale: str = "all"
    filter_params: Optional[str] = None

    @field_validator("block_size", "stride", "head_window", "top_columns", "top_rows")
    @classmethod
    def validate_positive(cls, value):
        if value < 1:
            raise ValueError("must be at least 1")
        return value

    @field_validator("knn_k")
    @classmethod
    def validate_k(cls, value):
        if value < 1 or value % 2 == 0:
            raise ValueError("K must be a positive odd number")
        return value

    @field_validator("canny_sigma")
    @classmethod
    def validate_sigma(cls, value):
        if value < 0.5:
            raise ValueError("Canny sigma must be at least 0.5")
        return value

    @field_validator("skin_frac")
    @classmethod
    def validate_fraction(cls, value):
        if not 0 <= value <= 1:
            raise ValueError("must be between 0 and 1")
        return value

    @field_validator("min_skin_area", "threads")
    @classmethod
    def validate_non_negative(cls, value):
        if value < 0:
            raise ValueError("must not be negative")
        return value

    @field_validator("classifier")
    @classmethod
    def validate_classifier(cls, value):
        value = value.strip().lower()
        value = CLASSIFIER_ALIASES.get(value, value)
        if value not in CLASSIFIERS:
            raise ValueError(f"Classifier must be one of: {', '.join(CLASSIFIERS)}")
        return value

    @field_validator("scale")
    @classmethod
    def validate_scale(cls, value):
        value = str(value).strip().lower()
        if value != "all" and not value.isdigit():
            raise ValueError("Scale must be 'all' or a scale-group number")
        return value

    @model_validator(mode="after")
    def validate_thresholds(self):
        if not 0 < self.canny_lo < self.canny_hi <= 1:
            raise ValueError("Canny thresholds must satisfy 0 < lo < hi <= 1")
        return self

    @property
    def selection(self):
        return "all" if self.scale == "all" else int(self.scale)


def _normalize_key(key):
    return key.strip().lower().replace("-", "_")


def load_config(path=None, overrides=None):
    """Build a PipelineConfig from a key=value file and non-None overrides.

    Raises ValueError naming the offending key on unknown keys or bad values.
    """
    values = {}
    if path:
        for key, value in dotenv_values(path).items():
            if value is None or value == "":
                continue
            values[_normalize_key(key)] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            values[_normalize_key(key)] = value

    unknown = set(values) - set(PipelineConfig.model_fields)
    if unknown:
        raise ValueError(f"Unknown config keys: {', '.join(sorted(unknown))}")
    try:
        return PipelineConfig(**values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ValueError(f"Invalid configuration: {problems}") from None
