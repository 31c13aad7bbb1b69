"""
JSON wire formats. Inputs are validated with pydantic models; a ValidationError is turned into
MalformedInput naming the first offending field.
"""
import logging
from typing import TYPE_CHECKING, Any, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, ValidationError, model_validator

from src.core.matrixcore import GeneratorSpec, as_vector
from src.series.lcu_series import LcuSeries
from src.utils.errors import CbmdLabError, MalformedInput

if TYPE_CHECKING:
    from src.series.polydecomp import Polynomial
    from src.solver.solver import SolveReport

logger = logging.getLogger(__name__)

ComplexPair = Tuple[FiniteFloat, FiniteFloat]


class MatrixModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dim: int = Field(..., gt=0, description="Matrix dimension")
    entries: List[List[ComplexPair]] = Field(..., description="Row-major [re, im] pairs")

    @model_validator(mode="after")
    def check_shape(self):
        if len(self.entries) != self.dim or any(len(row) != self.dim for row in self.entries):
            raise ValueError(f"entries must be {self.dim}x{self.dim}")
        return self

    def to_array(self) -> np.ndarray:
        raw = np.array(self.entries, dtype=float)
        return raw[..., 0] + 1j * raw[..., 1]


class GeneratorModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant", "time_sampled"]
    T: FiniteFloat = Field(..., gt=0, description="Final time")
    times: Optional[List[FiniteFloat]] = Field(default=None, description="Sample grid, time_sampled only")
    samples: List[MatrixModel] = Field(..., min_length=1)

    @model_validator(mode="after")
    def check_kind(self):
        if self.kind == "constant" and len(self.samples) != 1:
            raise ValueError("constant generators carry exactly one sample")
        if self.kind == "time_sampled":
            if self.times is None or len(self.times) != len(self.samples) or len(self.samples) < 2:
                raise ValueError("time_sampled generators need matching times and >= 2 samples")
        dims = {s.dim for s in self.samples}
        if len(dims) != 1:
            raise ValueError("all samples must share one dimension")
        return self


class ShiftModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["none", "exact_min", "user_bound"] = "none"
    alpha_shift_t: Optional[List[FiniteFloat]] = None


class ProblemModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "problem"
    generator: GeneratorModel
    u0: List[ComplexPair] = Field(..., min_length=1)
    shift: Optional[ShiftModel] = None


class PolynomialModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    coeffs: List[ComplexPair] = Field(..., min_length=1)


class SeriesTermModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    c: ComplexPair
    k: Union[FiniteFloat, ComplexPair]
    kind: Literal["main", "aux_line", "aux_2i", "aux_i"] = "main"


class SeriesModel(BaseModel):
    model_config = ConfigDict(extra="ignore")

    kernel: str = ""
    terms: List[SeriesTermModel]


def _validate(model: type[BaseModel], payload: Any) -> BaseModel:
    try:
        return model.model_validate(payload)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or model.__name__
        raise MalformedInput(field, first["msg"]) from e


def encode_complex(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def encode_vector(v) -> list[list[float]]:
    return [encode_complex(z) for z in np.asarray(v).reshape(-1)]


def decode_vector(payload, dim: Optional[int] = None, field: str = "u0") -> np.ndarray:
    try:
        raw = np.array(payload, dtype=float)
    except (TypeError, ValueError) as e:
        raise MalformedInput(field, f"not numeric ({e})") from e
    if raw.ndim != 2 or raw.shape[1] != 2:
        raise MalformedInput(field, "expected a list of [re, im] pairs")
    try:
        return as_vector(raw[:, 0] + 1j * raw[:, 1], dim, field)
    except CbmdLabError as e:
        raise MalformedInput(field, str(e)) from e


def encode_matrix(M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"dim": int(M.shape[0]), "entries": [[encode_complex(z) for z in row] for row in M]}


def decode_matrix(payload) -> np.ndarray:
    return _validate(MatrixModel, payload).to_array()


def encode_generator(gen: GeneratorSpec) -> dict:
    return {
        "kind": gen.kind,
        "T": gen.T,
        "times": [float(t) for t in gen.times],
        "samples": [encode_matrix(A) for A in gen.samples],
    }


def _generator_from_model(model: GeneratorModel, field: str) -> GeneratorSpec:
    try:
        if model.kind == "constant":
            return GeneratorSpec.constant(model.samples[0].to_array(), model.T)
        return GeneratorSpec(
            kind="time_sampled",
            T=model.T,
            times=np.array(model.times, dtype=float),
            samples=np.stack([s.to_array() for s in model.samples]),
        )
    except CbmdLabError as e:
        raise MalformedInput(field, str(e)) from e


def decode_generator(payload) -> GeneratorSpec:
    return _generator_from_model(_validate(GeneratorModel, payload), "generator")


def decode_shift(payload) -> ShiftModel:
    return _validate(ShiftModel, payload)


def decode_problem(payload) -> tuple[str, GeneratorSpec, np.ndarray, Optional[ShiftModel]]:
    model = _validate(ProblemModel, payload)
    gen = _generator_from_model(model.generator, "generator")
    u0 = decode_vector([list(p) for p in model.u0], gen.dim, "u0")
    return model.name, gen, u0, model.shift


def encode_problem(name: str, gen: GeneratorSpec, u0) -> dict:
    return {"name": name, "generator": encode_generator(gen), "u0": encode_vector(u0)}


def encode_series(series: LcuSeries) -> dict:
    terms = []
    for term in series.terms:
        k = term.node.real if term.kind == "main" else encode_complex(term.node)
        terms.append({"c": encode_complex(term.coefficient), "k": k, "kind": term.kind})
    return {
        "kernel": series.kernel,
        "terms": terms,
        "total_weight": series.total_weight,
        "max_abs_k": series.max_abs_k,
        "term_count": series.term_count,
    }


def decode_series(payload) -> LcuSeries:
    model = _validate(SeriesModel, payload)
    coefficients = [complex(*t.c) for t in model.terms]
    nodes = [complex(t.k, 0.0) if isinstance(t.k, float) else complex(*t.k) for t in model.terms]
    kinds = [t.kind for t in model.terms]
    try:
        return LcuSeries(np.array(coefficients, complex), np.array(nodes, complex), np.array(kinds, "<U8"), model.kernel)
    except CbmdLabError as e:
        raise MalformedInput("terms", str(e)) from e


def encode_polynomial(p: "Polynomial") -> dict:
    return {"coeffs": encode_vector(p.coeffs)}


def decode_polynomial(payload) -> "Polynomial":
    from src.series.polydecomp import Polynomial

    model = _validate(PolynomialModel, payload)
    try:
        return Polynomial(np.array([complex(*c) for c in model.coeffs]))
    except CbmdLabError as e:
        raise MalformedInput("coeffs", str(e)) from e


def encode_report(report: "SolveReport", emit_lcu: bool = False) -> dict:
    payload = {
        "kernel": report.kernel.model_dump(),
        "epsilon": report.epsilon,
        "approx_uT": encode_vector(report.approx_uT),
        "reference_uT": encode_vector(report.reference_uT),
        "abs_error": report.abs_error,
        "rel_error": report.rel_error,
        "tolerance_met": report.tolerance_met,
        "term_count": report.term_count,
        "max_abs_k": report.max_abs_k,
        "total_weight": report.total_weight,
        "success_prob": report.success_prob,
        "rounds_overhead": report.rounds_overhead,
        "shift_mode": report.shift_mode,
        "shift_integral": report.shift_integral,
    }
    if emit_lcu and report.outcome is not None:
        payload["lcu"] = {
            "post_state": encode_vector(report.outcome.post_state),
            "normalized_state": encode_vector(report.outcome.normalized_state),
            "success_prob": report.outcome.success_prob,
            "amplification_rounds": report.outcome.amplification_rounds,
        }
    return payload
