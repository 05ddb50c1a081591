# app/routers/rearrange.py
from fastapi import APIRouter, File, Form, UploadFile

from app.core.errors import GridFormatError, GrushinError
from app.core.grid import parse_grid
from app.core.runs import run_rearrange
from app.routers.errors import to_http
from app.schemas.report import RunReport

router = APIRouter()


@router.post("", response_model=RunReport)
async def rearrange(
    alpha: float = Form(...),
    levels: int = Form(256),
    resolution: int = Form(64),
    file: UploadFile = File(...),
):
    """
    Rearrange an uploaded grid function (grushin-grid v1 text format).

    - **alpha**: The degeneracy exponent, alpha > 0.
    - **levels**: Number of level bands for the distribution function.
    - **resolution**: Grid used to resample u* for the equimeasurability check.
    - **file**: The grid function file.

    Returns the run report; the radial profile is summarized by its maximum
    and support radius.
    """
    content = await file.read()
    try:
        try:
            text = content.decode("utf-8")
        except UnicodeDecodeError:
            raise GridFormatError("file is not UTF-8 text")
        report, _ = run_rearrange(parse_grid(text), alpha, levels, resolution, timing=False)
        return report
    except GrushinError as e:
        raise to_http(e)
