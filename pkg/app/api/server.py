from fastapi import FastAPI, HTTPException
from pydantic import ValidationError

from app import commands
from app.api.models import (
    AlgebraRequest,
    AuditResponse,
    HealthResponse,
    KernelResponse,
    OrderRequest,
    OrderResponse,
    RepResponse,
    SpectrumResponse,
    ValidateResponse,
)
from app.commands import RunConfig
from app.config import settings
from app.errors import (
    AlgebraDocumentError,
    DimensionCapExceeded,
    ExprSyntaxError,
    IndexRangeError,
    PresetError,
    WickError,
    WickSymmetryError,
)

app = FastAPI(title="Wick Algebra Workbench API")


def _config(req: AlgebraRequest) -> RunConfig:
    return RunConfig(
        document=req.algebra,
        max_degree=req.max_degree if req.max_degree is not None else settings.max_degree,
        tol=req.tol if req.tol is not None else settings.rank_tol,
        seed=req.seed if req.seed is not None else settings.seed,
        dim_cap=req.dim_cap if req.dim_cap is not None else settings.dim_cap,
    )


def _run(command, req: AlgebraRequest, *extra):
    """Run a subcommand and map workbench errors onto HTTP status codes."""
    try:
        return command(_config(req), *extra)
    except DimensionCapExceeded as e:
        raise HTTPException(status_code=413, detail=str(e))
    except (AlgebraDocumentError, PresetError, WickSymmetryError, ExprSyntaxError, IndexRangeError,
            ValidationError) as e:
        raise HTTPException(status_code=422, detail=str(e))
    except WickError as e:
        raise HTTPException(status_code=409, detail=str(e))


@app.get("/health", response_model=HealthResponse)
async def health():
    """
    Report service status and the desk-scale limits in force.
    """
    return HealthResponse(status="ok", dim_cap=settings.dim_cap, max_degree=settings.max_degree)


@app.post("/validate", response_model=ValidateResponse)
def validate(req: AlgebraRequest):
    report, code = _run(commands.cmd_validate, req)
    return ValidateResponse(exit_code=code, report=report)


@app.post("/spectrum", response_model=SpectrumResponse)
def spectrum(req: AlgebraRequest):
    report, code = _run(commands.cmd_spectrum, req)
    return SpectrumResponse(exit_code=code, report=report)


@app.post("/kernel", response_model=KernelResponse)
def kernel(req: AlgebraRequest):
    report, code = _run(commands.cmd_kernel, req)
    return KernelResponse(exit_code=code, report=report)


@app.post("/order", response_model=OrderResponse)
def order(req: OrderRequest):
    report, code = _run(commands.cmd_order, req, req.expr)
    return OrderResponse(exit_code=code, report=report)


@app.post("/rep", response_model=RepResponse)
def rep(req: AlgebraRequest):
    """
    Build the truncated Fock representation; an indefinite Gram operator answers 409.
    """
    report, code = _run(commands.cmd_rep, req)
    return RepResponse(exit_code=code, report=report)


@app.post("/audit", response_model=AuditResponse)
def audit(req: AlgebraRequest):
    report, code = _run(commands.cmd_audit, req)
    return AuditResponse(exit_code=code, report=report)
