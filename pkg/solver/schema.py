from ninja import Schema
from typing import List, Optional

from calibration.schema import CalibrationOut
from certify.schema import CertOut
from core.schemas import ProblemFile


class SolveIn(Schema):
    problem: ProblemFile
    penalty: str = 'brex'
    psi: str = 'power:2'
    gamma: str = 'thr'
    step: str = 'backtracking'
    x0: Optional[List[float]] = None
    max_iter: Optional[int] = None
    with_trace: bool = False


class TraceRowOut(Schema):
    iter: int
    J_Psi: Optional[float] = None
    J_0: float
    step: float
    delta: float


class SolveOut(Schema):
    penalty: str
    x: List[float]
    J0: float
    JPsi: Optional[float] = None
    x_thresholded: Optional[List[float]] = None
    J0_thresholded: Optional[float] = None
    iterations: int
    stop_reason: str
    cert: CertOut
    calibration: Optional[CalibrationOut] = None
    trace: List[TraceRowOut] = []
