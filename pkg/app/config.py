from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class WickSettings(BaseSettings):
    """
    Centralized numerical configuration for the Wick algebra workbench.
    Uses environment variables with the WICK_ prefix (e.g. WICK_DIM_CAP).
    """
    model_config = SettingsConfigDict(
        env_prefix='WICK_',
        env_file='.env',
        extra='ignore',
        validate_assignment=True
    )

    # Tolerances
    rank_tol: float = Field(1e-9, description="Relative tolerance for kernels and positivity verdicts")
    hermitian_tol: float = Field(1e-10, description="Relative asymmetry accepted by hermitian_eigen")
    symmetry_tol: float = Field(1e-12, description="Wick symmetry / self-adjointness tolerance for T")
    braid_tol: float = Field(1e-10, description="Relative threshold on the braid residual")
    kernel_distance_tol: float = Field(1e-8, description="Subspace distance accepted when comparing kernels")
    adjoint_tol: float = Field(1e-10, description="Adjointness residual accepted by verify_adjoint")
    relation_tol: float = Field(1e-8, description="Relation residual accepted by verify_relations")
    prune_tol: float = Field(1e-14, description="Coefficients below this modulus are dropped by the rewriter")

    # Desk-scale limits
    dim_cap: int = Field(20000, description="Largest tensor-power dimension d^n a dense operator may have")
    memory_fraction: float = Field(0.5, description="Share of available RAM a single dense matrix may use before warning")

    # Runs
    max_degree: int = Field(5, description="Default truncation degree N")
    seed: int = Field(0, description="Seed for randomized audits")
    log_level: str = Field("WARNING", description="Root log level used by the CLI and server")

    # Service
    host: str = Field("127.0.0.1", description="Interface start_server.py binds to")
    port: int = Field(8000, ge=1, le=65535, description="Port start_server.py binds to")

    @field_validator('rank_tol', 'hermitian_tol', 'symmetry_tol', 'braid_tol',
                     'kernel_distance_tol', 'adjoint_tol', 'relation_tol', 'prune_tol')
    @classmethod
    def positive_tolerance(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("tolerances must be positive")
        return v

    @field_validator('dim_cap')
    @classmethod
    def positive_cap(cls, v: int) -> int:
        if v < 1:
            raise ValueError("dim_cap must be at least 1")
        return v

    @field_validator('max_degree')
    @classmethod
    def truncation_headroom(cls, v: int) -> int:
        if v < 2:
            raise ValueError("max_degree must be at least 2")
        return v


def default_value(name: str):
    """Class-level default of a settings field, ignoring the environment."""
    return WickSettings.model_fields[name].default


def use_defaults(target: "WickSettings") -> "WickSettings":
    """Reset every field of `target` to its class-level default."""
    for name in WickSettings.model_fields:
        setattr(target, name, default_value(name))
    return target


# Global configuration instance
settings = WickSettings()
