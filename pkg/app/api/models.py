from typing import Optional

from pydantic import BaseModel, Field

from app.models import (
    AlgebraDocument,
    AuditReport,
    KernelReport,
    OrderReport,
    RepReport,
    SpectrumReport,
    ValidationResult,
)


class AlgebraRequest(BaseModel):
    algebra: AlgebraDocument = Field(..., description="Coefficient document: a preset or an explicit tensor.")
    max_degree: Optional[int] = Field(None, description="Truncation degree N; defaults to the configured value.")
    tol: Optional[float] = Field(None, gt=0, description="Relative rank tolerance.")
    seed: Optional[int] = Field(None, description="Seed for randomized checks.")
    dim_cap: Optional[int] = Field(None, ge=1, description="Largest tensor dimension.")


class OrderRequest(AlgebraRequest):
    expr: str = Field(..., description='Expression such as "a1* a2".')


class ValidateResponse(BaseModel):
    exit_code: int
    report: ValidationResult


class SpectrumResponse(BaseModel):
    exit_code: int
    report: SpectrumReport


class KernelResponse(BaseModel):
    exit_code: int
    report: KernelReport


class OrderResponse(BaseModel):
    exit_code: int
    report: OrderReport


class RepResponse(BaseModel):
    exit_code: int
    report: RepReport


class AuditResponse(BaseModel):
    exit_code: int
    report: AuditReport


class HealthResponse(BaseModel):
    status: str = "ok"
    dim_cap: int
    max_degree: int
