from ninja_extra import api_controller, route

from calibration.schema import CalibrationIn, CalibrationOut
from core.exceptions import BrexError
from core.schemas import ErrorOut
from core.services import build_relaxation, calibration_payload


@api_controller('/calibration', tags=['Calibration'])
class CalibrationController:

    @route.post('/', response={200: CalibrationOut, 400: ErrorOut})
    def calibrate(self, payload: CalibrationIn):
        try:
            problem = payload.problem.to_problem()
            relaxation, report = build_relaxation(problem, payload.psi, payload.gamma)
        except BrexError as exc:
            return 400, {"detail": str(exc)}
        return 200, calibration_payload(relaxation, report)
