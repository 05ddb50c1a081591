# app/routers/errors.py
from fastapi import HTTPException

from app.core.errors import DomainError, GridFormatError, GrushinError


def to_http(exc: GrushinError) -> HTTPException:
    """
    Bad inputs map to 400, numerical failures (quadrature, convergence,
    degeneracy) to 422.
    """
    if isinstance(exc, (DomainError, GridFormatError)):
        return HTTPException(status_code=400, detail=str(exc))
    return HTTPException(status_code=422, detail=str(exc))
