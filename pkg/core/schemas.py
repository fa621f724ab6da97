import json
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from ninja import Schema
from pydantic import ConfigDict, Field, ValidationError

from core.exceptions import DomainError, ProblemFormatError
from fidelity.services import Constraint, FidelityKind, FidelitySpec, ProblemSpec

SCHEMA_VERSION = 1


class ErrorOut(Schema):
    detail: str


class FidelityIn(Schema):
    kind: FidelityKind
    y: List[float]
    b: float = 0.0


class MatrixIn(Schema):
    """Matriz densa em ordem de linhas: `data` tem rows * cols entradas."""
    rows: int
    cols: int
    data: List[float]


class ProblemFile(Schema):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(SCHEMA_VERSION, alias='schema')
    fidelity: FidelityIn
    A: Union[List[List[float]], MatrixIn]
    lambda0: float
    lambda2: float = 0.0
    constraint: Constraint = Constraint.REALS
    x_true: Optional[List[float]] = None

    def matrix(self):
        if isinstance(self.A, MatrixIn):
            if len(self.A.data) != self.A.rows * self.A.cols:
                raise ProblemFormatError('matrix data does not match rows * cols')
            return np.array(self.A.data, dtype=float).reshape(self.A.rows, self.A.cols)
        if not self.A or len({len(row) for row in self.A}) != 1:
            raise ProblemFormatError('A must be a non-empty rectangular array')
        return np.array(self.A, dtype=float)

    def to_problem(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ProblemFormatError(f'unsupported problem schema {self.schema_version}')
        try:
            fidelity = FidelitySpec(self.fidelity.kind, self.fidelity.y, self.fidelity.b)
            x_true = None if self.x_true is None else np.array(self.x_true, dtype=float)
            return ProblemSpec(
                fidelity, self.matrix(), self.lambda0, self.lambda2, self.constraint, x_true,
            )
        except DomainError as exc:
            raise ProblemFormatError(f'invalid problem: {exc}') from exc

    @classmethod
    def from_problem(cls, problem):
        fid = problem.fidelity
        return cls(
            schema=SCHEMA_VERSION,
            fidelity=FidelityIn(kind=fid.kind, y=fid.y.tolist(), b=fid.b),
            A=problem.A.tolist(),
            lambda0=problem.lambda0,
            lambda2=problem.lambda2,
            constraint=problem.constraint,
            x_true=None if problem.x_true is None else np.asarray(problem.x_true).tolist(),
        )

    def dumps(self):
        return self.model_dump_json(by_alias=True, exclude_none=True, indent=2)


def load_problem(path):
    """Lê e valida um arquivo de problema; qualquer falha vira ProblemFormatError."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ProblemFormatError(f'cannot read {path}: {exc}') from exc
    try:
        return ProblemFile.model_validate_json(text).to_problem()
    except ValidationError as exc:
        raise ProblemFormatError(f'malformed problem file {path}: {exc.errors()[0]["msg"]}') from exc


def dump_json(data, path=None):
    """JSON com repr de float (ida e volta sem perda); sem `path` devolve o texto."""
    text = json.dumps(data, indent=2)
    if path is not None:
        Path(path).write_text(text + '\n')
    return text
