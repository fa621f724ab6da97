from ninja import Schema
from typing import Optional

from core.schemas import ProblemFile
from fidelity.services import FidelityKind


class InstanceIn(Schema):
    kind: FidelityKind = FidelityKind.LS
    M: int
    N: int
    k: int
    eta: float = 0.0
    tau: float = 8.0
    s: float = 1.0
    gain: float = 50.0
    b: float = 0.1
    seed: int = 0
    lambda0_scale: float = 1.0
    lambda2: float = 0.0


class InstanceOut(Schema):
    problem: ProblemFile
    snr_db: Optional[float] = None
