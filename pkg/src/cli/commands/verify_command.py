import argparse
import logging
from typing import Any, Dict, List, Optional

import numpy as np

from src.cli.cli_manager import CliManager, split_list
from src.core.contour import RESIDUE_CATALOG, verify_residue_theorem
from src.core.matrixcore import GeneratorSpec, MidpointPropagator, evolution_norm_bound, spectral_profile
from src.series import cbmd
from src.series.cbmd import CbmdParams
from src.series.polydecomp import (
    PolyDecomp,
    Polynomial,
    chebyshev_points,
    decomposition_residual,
    exactness_witness,
    lagrange_weights,
)
from src.utils.codecs import decode_polynomial, encode_polynomial
from src.utils.errors import DegeneratePoints, MalformedInput
from src.utils.utils import dump_json, read_json, seeded_rng, write_output

logger = logging.getLogger(__name__)

SUITES = ("identity", "residue", "poly", "bounds")

RESIDUE_TOLERANCE = 1e-8
INTEGRAND_TOLERANCE = 1e-6
POLY_TOLERANCE = 1e-9
NORM_DRAWS = 100


def _check(name: str, value: float, limit: float, passed: Optional[bool] = None, **extra) -> Dict[str, Any]:
    passed = value <= limit if passed is None else passed
    return {"name": name, "value": value, "limit": limit, "passed": bool(passed), **extra}


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    C = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    H = 0.5 * (C + C.conj().T)
    return H / np.linalg.norm(H, 2)


def random_psd(rng: np.random.Generator, dim: int) -> np.ndarray:
    B = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    L = B @ B.conj().T
    return L / np.linalg.norm(L, 2)


def identity_suite(args: argparse.Namespace) -> List[Dict[str, Any]]:
    """Full three-group residual of random generators with ||L||, ||H|| <= 1 on [0, 1]."""
    checks = []
    for i in range(args.count):
        rng = seeded_rng(args.seed, f"identity:{i}")
        dim = int(rng.integers(1, args.dim + 1))
        gen = GeneratorSpec.constant(random_psd(rng, dim) + 1j * random_hermitian(rng, dim), 1.0)
        eta_max = spectral_profile(gen).eta_max
        params = cbmd.select_parameters(eta_max, args.eps)
        residual = cbmd.verify_identity(gen, params)
        limit = cbmd.error_bounds(params, eta_max).trunc + 1e-9
        checks.append(_check(f"identity[{i}] dim={dim}", residual, limit, m=params.m, a=params.a, K=params.K))
    return checks


def residue_suite(args: argparse.Namespace) -> List[Dict[str, Any]]:
    names = [args.name] if args.name else list(RESIDUE_CATALOG) + ["cbmd-integrand"]
    checks = []
    for name in names:
        if name == "cbmd-integrand":
            params = CbmdParams(m=2, a=1.0, K=4, epsilon1=1e-2)
            problem = cbmd.residue_integrand(GeneratorSpec.constant([[1.0]], 1.0), params, N=8)
            tolerance = INTEGRAND_TOLERANCE
        elif name in RESIDUE_CATALOG:
            problem = RESIDUE_CATALOG[name]
            tolerance = RESIDUE_TOLERANCE
        else:
            raise MalformedInput("name", f"unknown residue problem {name!r}")
        result = verify_residue_theorem(problem.f, problem.contour, problem.poles, vectorized=True)
        checks.append(_check(name, result.residual, tolerance, description=problem.description))
    return checks


def _explicit_points(text: str, D: int) -> Optional[PolyDecomp]:
    if text == "auto":
        return None
    try:
        points = split_list(text, float)
    except ValueError as e:
        raise MalformedInput("points", f"expected 'auto' or a comma-separated list of reals: {e}") from e
    if len(points) < D + 1:
        raise MalformedInput("points", f"degree {D} needs at least {D + 1} points, got {len(points)}")
    try:
        return lagrange_weights(points)
    except DegeneratePoints as e:
        raise MalformedInput("points", str(e)) from e


def poly_suite(args: argparse.Namespace) -> List[Dict[str, Any]]:
    p = decode_polynomial(read_json(args.polynomial)) if args.polynomial else None
    D = p.degree if p is not None else args.degree
    if D < 0:
        raise MalformedInput("degree", "must be nonnegative")
    rng = seeded_rng(args.seed, f"poly:{D}")
    H = random_hermitian(rng, args.dim)
    L = random_hermitian(rng, args.dim)
    target = p if p is not None else Polynomial.exp_taylor(D)

    explicit = _explicit_points(args.points, D)
    if explicit is None:
        decomp = lagrange_weights(chebyshev_points(D + 1))
        exact = _check("exact m=D+1", exactness_witness(H, L, target, D + 1), POLY_TOLERANCE)
    else:
        decomp = explicit
        residual = decomposition_residual(H, L, target, decomp)
        exact = _check(f"exact explicit m={decomp.points.size}", residual, POLY_TOLERANCE)
    if p is not None:
        exact["polynomial"] = encode_polynomial(p)
    checks = [exact, _check("weight sum", abs(decomp.weight_sum - 1), 1e-10)]
    if D >= 1:
        # interpolation error of z^D at D points is at least ||L^D|| / ||(iH + L)^D|| >= 2^-D
        floor = min(1e-3, 0.5 ** (D + 1))
        residual = exactness_witness(H, L, Polynomial.monomial(D), D)
        checks.append(_check("negative control m=D", residual, floor, passed=residual > floor))
    return checks


def bounds_suite(args: argparse.Namespace) -> List[Dict[str, Any]]:
    checks = []
    bad = [(m, c) for m in range(1, 31) for c in np.linspace(0.0, 5.0, 21)
           if not cbmd.product_inequality_check(m, float(c)).lower_ok]
    bad += [(m, c) for m in range(1, 31) for c in np.linspace(0.0, 1.0, 11)
            if not cbmd.product_inequality_check(m, float(c)).upper_ok]
    checks.append(_check("product inequalities", float(len(bad)), 0.0))

    for eps in (1e-2, 1e-4, 1e-6):
        params = cbmd.select_parameters(1.0, eps)
        weight = cbmd.weight_bound_check(cbmd.build_series(params), params)
        checks.append(_check(f"weight eps={eps:g}", weight.weight, weight.proof_bound))

    rng = seeded_rng(args.seed, "bounds:norm")
    worst = 0.0
    for _ in range(NORM_DRAWS):
        gen = GeneratorSpec.constant(random_psd(rng, 4) + 1j * random_hermitian(rng, 4), 1.0)
        z = complex(*rng.uniform(-2.0, 2.0, size=2))
        measured = np.linalg.norm(MidpointPropagator(gen)(-z), 2)
        worst = max(worst, measured / evolution_norm_bound(z, spectral_profile(gen)))
    checks.append(_check("evolution norm ratio", worst, 1 + 1e-10))
    return checks


SUITE_RUNNERS = {
    "identity": identity_suite,
    "residue": residue_suite,
    "poly": poly_suite,
    "bounds": bounds_suite,
}


def run_verify(args: argparse.Namespace) -> int:
    checks = SUITE_RUNNERS[args.suite](args)
    passed = all(check["passed"] for check in checks)
    for check in checks:
        if not check["passed"]:
            logger.warning(f"verify {args.suite}: {check['name']} = {check['value']:.3e} (limit {check['limit']:.1e})")
    write_output(dump_json({"suite": args.suite, "passed": passed, "checks": checks}), args.out)
    return 0 if passed else 1


def create_verify_command(cli_manager: CliManager, subparsers) -> None:
    """
    Creates the verify subcommand running one assertion suite.
    """
    parser = subparsers.add_parser("verify", help="Run an identity / residue / polynomial / bounds suite")
    parser.add_argument("suite", choices=SUITES)
    parser.add_argument("--name", default=None, help="Residue problem (default: all)")
    parser.add_argument("--degree", type=int, default=4, help="Polynomial degree for the poly suite")
    parser.add_argument("--points", default="auto", help="Poly suite points: auto (Chebyshev) or a comma-separated list")
    parser.add_argument("--polynomial", default=None, help="Polynomial JSON file for the poly suite; sets the degree")
    parser.add_argument("--dim", type=int, default=4, help="Matrix dimension (largest dimension for identity)")
    parser.add_argument("--count", type=int, default=20, help="Random generators for the identity suite")
    parser.add_argument("--eps", type=float, default=1e-5, help="Series precision for the identity suite")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None)
    cli_manager.register_command("verify", parser, run_verify)
