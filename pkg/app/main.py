# app/main.py
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.core.config import VERSION
from app.routers import geometry, pohozaev, rearrange, sobolev, solve, transform

app = FastAPI(title="grushin-toolkit", version=VERSION)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(geometry.router, prefix="/geometry", tags=["Geometry"])
app.include_router(rearrange.router, prefix="/rearrange", tags=["Rearrangement"])
app.include_router(sobolev.router, prefix="/sobolev", tags=["Sobolev"])
app.include_router(solve.router, prefix="/solve", tags=["Solver"])
app.include_router(pohozaev.router, prefix="/pohozaev", tags=["Pohozaev"])
app.include_router(transform.router, prefix="/transform-check", tags=["Transform"])


@app.get("/")
def read_root():
    return {"message": "grushin-toolkit", "version": VERSION}
