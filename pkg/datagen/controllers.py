import numpy as np
from ninja_extra import api_controller, route

from core.exceptions import BrexError
from core.schemas import ErrorOut, ProblemFile
from datagen.schema import InstanceIn, InstanceOut
from datagen.services import DataGenConfig, generate
from fidelity.services import FidelityKind


@api_controller('/instances', tags=['Instances'])
class InstanceController:

    @route.post('/', response={201: InstanceOut, 400: ErrorOut}, by_alias=True)
    def create_instance(self, payload: InstanceIn):
        try:
            config = DataGenConfig(**payload.model_dump(exclude={'lambda0_scale', 'lambda2'}))
            instance = generate(config)
            problem = instance.to_problem(payload.lambda0_scale, payload.lambda2)
        except BrexError as exc:
            return 400, {"detail": str(exc)}
        snr_db = None
        if instance.kind is FidelityKind.LS:
            clean = instance.A @ instance.x_true
            noise = instance.y - clean
            if np.any(noise) and np.any(clean):
                snr_db = float(10.0 * np.log10((clean @ clean) / (noise @ noise)))
        return 201, {'problem': ProblemFile.from_problem(problem), 'snr_db': snr_db}
