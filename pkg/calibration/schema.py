from ninja import Schema
from typing import List, Optional

from core.schemas import ProblemFile


class CalibrationIn(Schema):
    problem: ProblemFile
    psi: str = 'power:2'
    gamma: str = 'thr'


class CalibrationOut(Schema):
    generator: str
    mode: str
    margin: float
    gamma_thr: List[Optional[float]]
    gamma: List[float]
    exact: List[bool]
    boundary: List[bool]
    is_exact: bool
    column_norms: List[float]
    # null onde o limite é infinito
    alpha_minus: List[Optional[float]]
    alpha_plus: List[Optional[float]]
    ell_minus: List[Optional[float]]
    ell_plus: List[Optional[float]]
