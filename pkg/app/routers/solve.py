# app/routers/solve.py
from fastapi import APIRouter

from app.core.errors import GrushinError
from app.core.runs import run_solve
from app.routers.errors import to_http
from app.schemas.report import RunReport
from app.schemas.requests import SolveRequest

router = APIRouter()


@router.post("", response_model=RunReport)
def solve(request: SolveRequest):
    """
    Ground state of -Delta_G u = |x|^{2a} |u|^{q-2} u on the cube
    (-half_width, half_width)^3 with grid^3 unknowns.

    - **q**: Power exponent, 2 < q < 6.
    - **grid**: Unknowns per axis; must be even.
    - **solver**: Tolerances and iteration limits.
    """
    try:
        report, _ = run_solve(request.alpha, request.q, request.grid, request.half_width, request.solver, timing=False)
        return report
    except GrushinError as e:
        raise to_http(e)
