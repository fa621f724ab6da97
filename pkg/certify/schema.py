from ninja import Schema
from typing import List, Optional

from core.schemas import ProblemFile


class CertOut(Schema):
    support: List[int]
    is_critical_jpsi: Optional[bool] = None
    is_localmin_jpsi: Optional[bool] = None
    is_localmin_j0: bool
    is_strict: bool
    max_residual: Optional[float] = None
    interval_violations: List[int] = []
    boundary_hits: List[int] = []
    preserved: Optional[bool] = None


class CheckIn(Schema):
    problem: ProblemFile
    x: List[float]
    psi: Optional[str] = 'power:2'
    gamma: str = 'thr'


class EnumerateIn(Schema):
    problem: ProblemFile
    max_support: Optional[int] = None
    psi: Optional[str] = None
    gamma: str = 'thr'


class MinimizerOut(Schema):
    rank: int
    support: List[int]
    J0: float
    strict: bool
    preserved: Optional[bool] = None
    x: List[float]
    cert: CertOut


class EnumerateOut(Schema):
    count: int
    global_J0: Optional[float] = None
    minimizers: List[MinimizerOut]
