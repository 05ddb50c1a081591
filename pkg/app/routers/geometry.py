# app/routers/geometry.py
from fastapi import APIRouter, HTTPException

from app.core.errors import GrushinError
from app.core.runs import run_geometry
from app.routers.errors import to_http
from app.schemas.report import RunReport
from app.schemas.requests import GeometryRequest

router = APIRouter()


@router.post("", response_model=RunReport)
def geometry(request: GeometryRequest):
    """
    Weighted volume, perimeter, sector perimeters, isoperimetric quotient and
    deficit of one corpus shape, or of the whole built-in corpus.

    - **alpha**: The degeneracy exponent, alpha > 0.
    - **shape**: The shape by name and parameters; required unless **sweep** is set.
    - **sweep**: Run every shape of the built-in corpus.
    - **quadrature**: Volume and surface resolutions, refinement depth, threads.
    """
    if request.shape is None and not request.sweep:
        raise HTTPException(status_code=400, detail="Either a shape or sweep=true is required.")
    try:
        return run_geometry(request.shape, request.alpha, request.quadrature, request.sweep)
    except GrushinError as e:
        raise to_http(e)
