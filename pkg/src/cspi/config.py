"""Run configurations for the command line, validated with pydantic.

Configs are JSON documents with a ``version`` field; unknown keys are
rejected. Operators are written as expressions in a, ad, Q, P, N and I
(e.g. ``"0.5*(P**2 + Q**2 - 1) + Q**4"``), symbols as expressions in p and q.
"""

from __future__ import annotations

import ast
import json
import math
import operator
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .suites import CROSSCHECK_CASES, ENDPOINT_PAIRS
from .symbols import NormalForm, SymbolPoly

Point = tuple[float, float]
Pair = tuple[Point, Point]

# ---------------------------------------------------------------------------
# expressions

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub}


def _evaluate(expr: str, names: dict, product):
    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
            return node.value
        if isinstance(node, ast.Name) and node.id in names:
            return names[node.id]()
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = walk(node.operand)
            return -1.0 * v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            left, right = walk(node.left), walk(node.right)
            if type(node.op) in _BINOPS:
                return _BINOPS[type(node.op)](left, right)
            if isinstance(node.op, ast.Mult):
                return product(left, right)
            if isinstance(node.op, ast.Div) and isinstance(right, (int, float, complex)):
                return left * (1.0 / right)
            if isinstance(node.op, ast.Pow) and isinstance(right, int) and right >= 0:
                return left**right
        raise ConfigError(f"unsupported expression element {ast.dump(node)[:60]!r} in {expr!r}")

    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {expr!r}: {exc.msg}") from None
    return walk(tree)


def _op_product(x, y):
    if isinstance(x, NormalForm) and isinstance(y, NormalForm):
        return x @ y
    return x * y


def parse_operator(expr: str) -> NormalForm:
    names = {"a": NormalForm.a, "ad": NormalForm.a_dag, "Q": NormalForm.Q, "P": NormalForm.P,
             "N": lambda: NormalForm.monomial(1, 1), "I": NormalForm.identity}
    out = _evaluate(expr, names, _op_product)
    return out if isinstance(out, NormalForm) else NormalForm.identity() * out


def parse_symbol(expr: str) -> SymbolPoly:
    names = {"p": SymbolPoly.p, "q": SymbolPoly.q}
    out = _evaluate(expr, names, operator.mul)
    return out if isinstance(out, SymbolPoly) else SymbolPoly.constant(out)


# ---------------------------------------------------------------------------
# schemas


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class _Base(_Strict):
    version: Literal[1]
    seed: int = Field(0, ge=0, lt=2**64)
    threads: PositiveInt = 1


class LatticeBlock(_Strict):
    nu: PositiveFloat
    T: PositiveFloat
    N: PositiveInt


class PointGrid(_Strict):
    lo: float = -2.0
    hi: float = 2.0
    n: PositiveInt = 10


class OverlapConfig(_Base):
    dim: int = Field(128, ge=2)
    points: Optional[list[tuple[float, float, float, float]]] = None
    grid: PointGrid = PointGrid()
    tolerance: PositiveFloat = 1e-9


class NuSweepConfig(_Base):
    nus: list[PositiveFloat] = Field(default_factory=lambda: [2.0, 4.0, 8.0, 16.0], min_length=3)
    T: PositiveFloat = 2.0
    N: PositiveInt = 4096
    endpoints: list[Pair] = Field(default_factory=lambda: list(ENDPOINT_PAIRS), min_length=1)
    limit_tolerance: PositiveFloat = 1e-6
    gap_expected: PositiveFloat = 2.0
    gap_rtol: PositiveFloat = 0.1

    @field_validator("nus")
    @classmethod
    def _distinct(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("nu values must be distinct")
        return v


class CrosscheckConfig(_Base):
    lattice: LatticeBlock = LatticeBlock(nu=4.0, T=1.0, N=32)
    backends: dict[Literal["gauss", "grid", "mc"], LatticeBlock] = Field(default_factory=dict)
    cases: list[Pair] = Field(default_factory=lambda: list(CROSSCHECK_CASES))
    samples: int = Field(10**6, ge=1000)
    chunk: PositiveInt = 8192
    grid_L: PositiveFloat = 10.0
    grid_spacing: PositiveFloat = 0.05
    tolerance: PositiveFloat = 1e-3

    @model_validator(mode="after")
    def _shared_lattice(self):
        for name, block in self.backends.items():
            if block != self.lattice:
                raise ValueError(f"backend {name!r} lattice {block} differs from the shared lattice {self.lattice}")
        return self


class ConstrainConfig(_Base):
    dim: int = Field(96, ge=2)
    constraints: list[str] = Field(min_length=1)
    metric: Optional[list[list[float]]] = None
    delta: Optional[PositiveFloat] = None
    hamiltonian: str = "ad*a"
    T: float = 1.0
    endpoints: list[Pair] = Field(default_factory=lambda: list(ENDPOINT_PAIRS))
    tolerance: PositiveFloat = 1e-12
    factorization_tolerance: PositiveFloat = 1e-9


class CovarianceConfig(_Base):
    mode: Literal["rotation", "scale", "point"] = "rotation"
    thetas: list[float] = Field(default_factory=lambda: [k * math.pi / 4 for k in range(8)])
    lam: PositiveFloat = 1.5
    kappa: float = Field(0.1, ge=0)
    lattice: LatticeBlock = LatticeBlock(nu=8.0, T=1.0, N=4096)
    point_Ns: list[PositiveInt] = Field(default_factory=lambda: [16, 64, 256, 1024])
    samples: int = Field(4096, ge=1000)
    endpoints: list[Pair] = Field(default_factory=lambda: [((1.0, 0.0), (0.0, 1.0))])
    hamiltonian: Optional[str] = None
    tolerance: PositiveFloat = 1e-8


SCHEMAS = {
    "overlap": OverlapConfig,
    "nu-sweep": NuSweepConfig,
    "crosscheck": CrosscheckConfig,
    "constrain": ConstrainConfig,
    "covariance": CovarianceConfig,
}


def load_config(command: str, path) -> tuple[_Base, bytes]:
    """Parse and validate; returns the model and the raw bytes (for hashing)."""
    raw = Path(path).read_bytes()
    try:
        data = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    try:
        return SCHEMAS[command].model_validate(data), raw
    except ValidationError as exc:
        raise ConfigError(f"{path}: {exc}") from None
