from ninja_extra import api_controller, route

from core.exceptions import BrexError
from core.schemas import ErrorOut
from core.services import run_solve
from solver.schema import SolveIn, SolveOut


@api_controller('/solver', tags=['Solver'])
class SolverController:

    @route.post('/', response={200: SolveOut, 400: ErrorOut})
    def solve(self, payload: SolveIn):
        try:
            problem = payload.problem.to_problem()
            solved = run_solve(
                problem, payload.penalty, payload.psi, payload.gamma, payload.step,
                payload.x0, payload.max_iter,
            )
        except BrexError as exc:
            return 400, {"detail": str(exc)}
        return 200, solved.payload(with_trace=payload.with_trace)
