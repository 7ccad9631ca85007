"""Configuration management for busyvar."""

from __future__ import annotations

import os
from functools import lru_cache
from typing import Any, Literal

from pydantic import AliasChoices, BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

_LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}


def _default_workers() -> int:
    return max(1, min(os.cpu_count() or 1, 8))


class SettingsBase(BaseSettings):
    """Base class that applies shared Settings configuration."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


class NumericsConfig(SettingsBase):
    """Quadrature and series tolerances."""

    tolerance: float = Field(
        default=1e-10,
        gt=0.0,
        lt=1.0,
        validation_alias=AliasChoices("BUSYVAR_TOL", "tolerance"),
    )
    abs_tolerance: float = Field(
        default=1e-12,
        ge=0.0,
        validation_alias=AliasChoices("BUSYVAR_ABS_TOL", "abs_tolerance"),
    )
    max_evaluations: int = Field(
        default=2_000_000,
        ge=21,
        validation_alias=AliasChoices("BUSYVAR_MAX_EVALUATIONS", "max_evaluations"),
    )
    max_terms: int = Field(
        default=500,
        ge=1,
        validation_alias=AliasChoices("BUSYVAR_MAX_TERMS", "max_terms"),
    )
    rho_limit: float = Field(
        default=300.0,
        gt=0.0,
        le=350.0,
        validation_alias=AliasChoices("BUSYVAR_RHO_LIMIT", "rho_limit"),
    )


class SimulationConfig(SettingsBase):
    """Monte Carlo simulator configuration."""

    block_size: int = Field(
        default=8_192,
        ge=1,
        validation_alias=AliasChoices("BUSYVAR_SIM_BLOCK_SIZE", "block_size"),
    )
    max_samples: int = Field(
        default=100_000_000,
        ge=1,
        validation_alias=AliasChoices("BUSYVAR_SIM_MAX_SAMPLES", "max_samples"),
    )
    max_workers: int = Field(
        default_factory=_default_workers,
        ge=1,
        validation_alias=AliasChoices("BUSYVAR_SIM_MAX_WORKERS", "max_workers"),
    )
    min_order_samples: int = Field(
        default=10_000,
        ge=2,
        validation_alias=AliasChoices("BUSYVAR_MIN_ORDER_SAMPLES", "min_order_samples"),
    )
    executor: str = Field(
        default="process",
        validation_alias=AliasChoices("BUSYVAR_SIM_EXECUTOR", "executor"),
    )

    @field_validator("executor", mode="before")
    @classmethod
    def _normalize_executor(cls, value: object) -> str:
        text = str(value).strip().lower()
        if text not in {"process", "inline"}:
            raise ValueError(f"executor must be 'process' or 'inline', got {value!r}")
        return text


class MonitoringConfig(SettingsBase):
    """Logging configuration."""

    log_level: str = Field(
        default="WARNING",
        validation_alias=AliasChoices("BUSYVAR_LOG_LEVEL", "log_level"),
    )
    log_format: str = Field(
        default="json",
        validation_alias=AliasChoices("BUSYVAR_LOG_FORMAT", "log_format"),
    )

    @field_validator("log_level", mode="before")
    @classmethod
    def _normalize_level(cls, value: object) -> str:
        level = str(value).strip().upper()
        if level not in _LOG_LEVELS:
            raise ValueError(f"log_level must be one of {sorted(_LOG_LEVELS)}")
        return level

    @field_validator("log_format", mode="before")
    @classmethod
    def _normalize_format(cls, value: object) -> str:
        fmt = str(value).strip().lower()
        if fmt not in {"json", "console"}:
            raise ValueError("log_format must be 'json' or 'console'")
        return fmt


class BusyVarConfig(SettingsBase):
    """Main configuration combining all sub-sections."""

    numerics: NumericsConfig = Field(default_factory=NumericsConfig)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)
    monitoring: MonitoringConfig = Field(default_factory=MonitoringConfig)


class RunFileConfig(BaseModel):
    """Typed contents of a ``--config`` JSON file, keyed by argparse destination.

    Values are coerced the way the matching flag would parse them, so ``"14"`` for
    ``improved_m`` arrives as ``14``.
    """

    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    output_format: Literal["json", "csv"] | None = Field(default=None, alias="format")
    tol: float | None = Field(default=None, gt=0.0, lt=1.0)
    log_level: str | None = None
    dist: str | None = None
    dist1: str | None = None
    dist2: str | None = None
    lam: float | None = None
    method: Literal["integral", "series", "mm-exact", "md-exact", "all"] | None = None
    rho: float | None = None
    gamma_s2: float | None = None
    improved_m: int | None = None
    classes: list[Literal["nbue", "nwue", "dfr", "imrl"]] | None = None
    alpha: float | None = None
    mu2: float | None = None
    mu3: float | None = None
    rho_list: list[float] | None = None
    truncation: int | None = None
    extended: bool | None = None
    n: int | None = None
    seed: int | None = None
    streams: int | None = None
    emit_samples: str | None = None
    empirical: bool | None = None
    threshold: float | None = None
    rho_range: str | None = None
    quantities: str | None = None

    @field_validator("classes", mode="before")
    @classmethod
    def _split_classes(cls, value: object) -> object:
        if isinstance(value, str):
            return [part.strip().lower() for part in value.split(",") if part.strip()]
        return value

    @field_validator("rho_list", mode="before")
    @classmethod
    def _split_rho_list(cls, value: object) -> object:
        if isinstance(value, str):
            return [part for part in value.split(",") if part.strip()]
        if isinstance(value, int | float):
            return [value]
        return value

    def flags(self) -> dict[str, Any]:
        """Return the values present in the file, coerced to flag types."""
        return self.model_dump(by_alias=True, exclude_unset=True)


@lru_cache
def get_config() -> BusyVarConfig:
    """Return a cached configuration instance."""
    return BusyVarConfig()


def default_tolerance(tol: float | None = None) -> float:
    """Resolve an optional relative tolerance against the configured default."""
    return get_config().numerics.tolerance if tol is None else tol


__all__ = [
    "BusyVarConfig",
    "MonitoringConfig",
    "NumericsConfig",
    "RunFileConfig",
    "SettingsBase",
    "SimulationConfig",
    "default_tolerance",
    "get_config",
]
