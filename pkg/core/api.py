from ninja_extra import NinjaExtraAPI
from ninja.openapi.docs import Swagger

from calibration.controllers import CalibrationController
from certify.controllers import CertifyController
from datagen.controllers import InstanceController
from solver.controllers import SolverController

docs = Swagger(settings={'docExpansion': 'none'})
api = NinjaExtraAPI(title="API B-rex", version="1.0.0", docs=docs, urls_namespace="api-1.0.0")

# Registrando os controllers
api.register_controllers(
    CalibrationController,
    SolverController,
    CertifyController,
    InstanceController,
)
