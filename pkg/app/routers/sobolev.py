# app/routers/sobolev.py
from fastapi import APIRouter

from app.core.errors import GrushinError
from app.core.runs import run_sobolev
from app.routers.errors import to_http
from app.schemas.report import RunReport
from app.schemas.requests import SobolevRequest

router = APIRouter()


@router.post("", response_model=RunReport)
def sobolev(request: SobolevRequest):
    """
    The radial extremal constant and the Sobolev lower bound for each alpha.
    With **family** set, the grid Rayleigh minimum is computed as well
    (slow: one 3D grid per function evaluation).
    """
    try:
        report, _ = run_sobolev(request.alphas, request.family, timing=False)
        return report
    except GrushinError as e:
        raise to_http(e)
