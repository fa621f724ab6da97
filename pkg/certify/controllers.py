from ninja_extra import api_controller, route

from certify.schema import CertOut, CheckIn, EnumerateIn, EnumerateOut
from certify.services import certify_J0, check_localmin_JPsi
from core.exceptions import BrexError
from core.schemas import ErrorOut
from core.services import build_relaxation, cert_payload, enumerate_payload, parse_vector, run_enumerate


@api_controller('/certify', tags=['Certify'])
class CertifyController:

    @route.post('/check', response={200: CertOut, 400: ErrorOut})
    def check(self, payload: CheckIn):
        try:
            problem = payload.problem.to_problem()
            x = problem.check_feasible(parse_vector(payload.x, problem.N))
            if payload.psi:
                relaxation, _ = build_relaxation(problem, payload.psi, payload.gamma)
                record = check_localmin_JPsi(problem, relaxation, x)
            else:
                record = certify_J0(problem, x)
        except BrexError as exc:
            return 400, {"detail": str(exc)}
        return 200, cert_payload(record)

    @route.post('/enumerate', response={200: EnumerateOut, 400: ErrorOut})
    def enumerate_minimizers(self, payload: EnumerateIn):
        try:
            problem = payload.problem.to_problem()
            minimizers = run_enumerate(problem, payload.max_support, payload.psi, payload.gamma)
        except BrexError as exc:
            return 400, {"detail": str(exc)}
        return 200, enumerate_payload(minimizers)
