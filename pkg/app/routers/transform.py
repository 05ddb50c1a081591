# app/routers/transform.py
from fastapi import APIRouter

from app.core.errors import GrushinError
from app.core.runs import run_transform_check
from app.routers.errors import to_http
from app.schemas.report import RunReport
from app.schemas.requests import TransformRequest

router = APIRouter()


@router.post("", response_model=RunReport)
def transform_check(request: TransformRequest):
    """
    Pushforward checks of the flattening map on a shape inside the first
    sector (ball sectors of other sectors are rotated there first).
    """
    try:
        return run_transform_check(request.shape, request.alpha, request.quadrature, timing=False)
    except GrushinError as e:
        raise to_http(e)
