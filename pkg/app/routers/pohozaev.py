# app/routers/pohozaev.py
from fastapi import APIRouter

from app.core.errors import GrushinError
from app.core.runs import run_pohozaev
from app.routers.errors import to_http
from app.schemas.report import RunReport
from app.schemas.requests import PohozaevRequest

router = APIRouter()


@router.post("", response_model=RunReport)
def pohozaev(request: PohozaevRequest):
    """
    Pohozaev coefficient and exponent regime for p; with **grid** and
    1 < p < 5, also the identity residual of a computed solution.
    """
    try:
        return run_pohozaev(request.p, request.alpha, request.grid, request.half_width, request.solver, timing=False)
    except GrushinError as e:
        raise to_http(e)
