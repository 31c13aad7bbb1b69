import csv
import io
import math
import sys
import time

sys.path.append(".")

import numpy as np
import pytest
from dotenv import load_dotenv

load_dotenv()

from src.core.matrixcore import GeneratorSpec, spectral_profile
from src.series.lchs import OriginalKernel
from src.solver.catalog import TAGS, build_catalog, get_entry
from src.solver.solver import (
    ShiftPlan,
    compare_row,
    execute,
    prepare,
    reference_solution,
    rows_to_csv,
    run_compare,
    shift_generator,
    solve,
)
from src.utils import config
from src.utils.errors import HypothesisViolation, InvalidShift, NumericalFailure, ParamTooLarge, ToleranceNotMet

DIAG_5_6 = GeneratorSpec.constant(np.diag([5.0, 6.0]), 1.0)
SCALAR = GeneratorSpec.constant([[1.0]], 1.0)


@pytest.fixture(autouse=True)
def default_budget(monkeypatch):
    monkeypatch.delenv("CBMD_LAB_MAX_TERMS", raising=False)


def test_no_shift_leaves_generator():
    assert shift_generator(DIAG_5_6, ShiftPlan.none(DIAG_5_6)) is DIAG_5_6


def test_exact_min_shift_of_diagonal():
    plan = ShiftPlan.exact_min(DIAG_5_6)
    shifted = shift_generator(DIAG_5_6, plan)
    assert np.allclose(shifted.samples[0], np.diag([0.0, 1.0]))
    assert plan.integral == pytest.approx(5.0)
    assert spectral_profile(shifted).alpha_d == pytest.approx(spectral_profile(DIAG_5_6).alpha_d, abs=1e-12)


def test_shift_undone_by_rescale():
    entry = get_entry("time-commuting-diag")
    plan = ShiftPlan.exact_min(entry.gen)
    assert np.allclose(plan.alpha_shift_t, [1.0, 1.5, 1.0])
    shifted = reference_solution(shift_generator(entry.gen, plan), entry.u0)
    direct = reference_solution(entry.gen, entry.u0)
    assert np.linalg.norm(math.exp(-plan.integral) * shifted - direct) <= 1e-10


def test_shift_above_minimum_rejected():
    with pytest.raises(InvalidShift):
        shift_generator(DIAG_5_6, ShiftPlan.user_bound(DIAG_5_6, [6.0]))
    with pytest.raises(InvalidShift):
        ShiftPlan.user_bound(DIAG_5_6, [-1.0])
    with pytest.raises(InvalidShift):
        ShiftPlan.from_mode("user_bound", DIAG_5_6)
    with pytest.raises(InvalidShift):
        ShiftPlan.from_mode("halfway", DIAG_5_6)


def test_user_bound_below_minimum():
    plan = ShiftPlan.from_mode("user_bound", DIAG_5_6, [4.0])
    shifted = shift_generator(DIAG_5_6, plan)
    assert np.allclose(shifted.samples[0], np.diag([1.0, 2.0]))
    assert plan.integral == pytest.approx(4.0)


def test_reference_of_diagonal():
    u = reference_solution(GeneratorSpec.constant(np.diag([1.0, 2.0]), 1.0), [1.0, 1.0])
    assert np.allclose(u, [math.exp(-1), math.exp(-2)], atol=1e-14)


def test_reference_keeps_norm_for_anti_hermitian():
    gen = GeneratorSpec.constant(1j * np.array([[0.0, -1j], [1j, 0.0]]), 3.0)
    u = reference_solution(gen, [0.6, 0.8])
    assert np.linalg.norm(u) == pytest.approx(1.0, abs=1e-13)


def test_reference_time_linear_scalar():
    u = reference_solution(get_entry("time-linear-scalar").gen, [1.0])
    assert u[0] == pytest.approx(math.exp(-1.5), abs=1e-13)


def test_reference_refuses_unconverged_stepping():
    entry = get_entry("time-noncommuting")
    with pytest.raises(NumericalFailure):
        reference_solution(entry.gen, entry.u0, steps=4, tolerance=1e-14)


def test_scalar_cbmd_solve():
    report = solve(SCALAR, [1.0], "cbmd", 1e-4)
    assert report.tolerance_met
    assert report.rel_error <= 1e-4
    assert report.reference_uT[0] == pytest.approx(math.exp(-1))
    assert report.rel_error == pytest.approx(report.abs_error / np.linalg.norm(report.reference_uT))
    assert report.term_count == 2 * report.kernel.K + 1


def test_shifting_shrinks_the_series():
    shifted = solve(DIAG_5_6, np.ones(2) / math.sqrt(2), "cbmd", 1e-3, shift="exact_min", strict=False)
    plain = solve(DIAG_5_6, np.ones(2) / math.sqrt(2), "cbmd", 1e-3, shift="none", strict=False)
    assert shifted.tolerance_met and plain.tolerance_met
    assert shifted.term_count < plain.term_count
    assert shifted.shift_integral == pytest.approx(5.0)
    assert shifted.rounds_overhead < plain.rounds_overhead


def test_non_normal_generator():
    entry = get_entry("jordan")
    report = solve(entry.gen, entry.u0, "cbmd", 1e-4, shift="exact_min")
    assert report.rel_error <= 1e-4


def test_indefinite_dissipation_needs_a_shift():
    entry = get_entry("jordan")
    with pytest.raises(HypothesisViolation):
        solve(entry.gen, entry.u0, "cbmd", 1e-4, shift="none")


def test_short_series_misses_tolerance():
    kernel = OriginalKernel(a=2.0, K=5)
    with pytest.raises(ToleranceNotMet) as info:
        solve(SCALAR, [1.0], kernel, 1e-6)
    assert info.value.report.rel_error > 1e-6
    report = solve(SCALAR, [1.0], kernel, 1e-6, strict=False)
    assert not report.tolerance_met


def test_term_budget(monkeypatch):
    monkeypatch.setenv("CBMD_LAB_MAX_TERMS", "11")
    with pytest.raises(ParamTooLarge):
        solve(SCALAR, [1.0], "cbmd", 1e-4)


def test_step_budget_for_sampled_generators(monkeypatch):
    entry = get_entry("time-linear-scalar")
    context = prepare(entry.gen, entry.u0, "cbmd", 1e-3)
    monkeypatch.setenv("CBMD_LAB_MAX_TERMS", str(2 * context.kernel.K + 1))
    with pytest.raises(ParamTooLarge, match="steps"):
        execute(context)
    assert execute(prepare(SCALAR, [1.0], "cbmd", 1e-3)).tolerance_met


def test_time_dependent_lchs_row_is_bounded():
    entry = get_entry("time-linear-scalar")
    started = time.perf_counter()
    row = compare_row(entry.gen, entry.u0, "original", 1e-2)
    assert time.perf_counter() - started < 60
    assert row["K"] > 0
    if row["status"] == "failed":
        assert row["error"].startswith("ParamTooLarge")
    else:
        assert row["rel_error"] <= 1e-2


def test_time_dependent_cbmd_row():
    entry = get_entry("time-noncommuting")
    row = compare_row(entry.gen, entry.u0, "cbmd", 1e-3, steps=entry.steps)
    assert row["status"] == "completed"
    assert row["rel_error"] <= 1e-3


@pytest.mark.parametrize("kernel", ["cbmd", "original", "improved", "optimal"])
def test_error_shrinks_with_epsilon(kernel):
    gen = GeneratorSpec.constant(np.diag([1.0, 2.0]) + 0.3j * np.array([[0.0, 1.0], [1.0, 0.0]]), 1.0)
    rows = run_compare(gen, [1.0, 0.0], [1e-2, 1e-3, 1e-4], [kernel])
    errors = [row["rel_error"] for row in rows]
    assert all(row["status"] == "completed" for row in rows)
    for looser, tighter in zip(errors, errors[1:]):
        assert tighter <= 1.1 * looser


@pytest.mark.parametrize("name", sorted(build_catalog()))
@pytest.mark.parametrize("epsilon", [1e-2, 1e-3, 1e-4])
def test_catalog_meets_tolerance(name, epsilon):
    entry = get_entry(name)
    plan = ShiftPlan.from_mode(entry.shift, entry.gen, entry.alpha_shift_t)
    report = solve(entry.gen, entry.u0, "cbmd", epsilon, shift=plan, steps=entry.steps)
    assert report.rel_error <= epsilon


def test_compare_scalings():
    rows = run_compare(SCALAR, [1.0], [1e-2, 1e-4, 1e-6], ["cbmd", "original"])
    assert len(rows) == 6
    K = {(row["kernel"], row["eps"]): row["K"] for row in rows}
    assert K[("lchs_original", 1e-6)] / K[("lchs_original", 1e-4)] >= 50
    assert K[("cbmd", 1e-6)] / K[("cbmd", 1e-4)] <= 4
    assert all(row["status"] == "completed" for row in rows if row["kernel"] == "cbmd")
    # the 1e-6 original series is far above the default term budget
    largest = next(row for row in rows if row["kernel"] == "lchs_original" and row["eps"] == 1e-6)
    assert largest["status"] == "failed"
    assert largest["error"].startswith("ParamTooLarge")


def test_compare_every_kernel_at_1e3():
    rows = run_compare(SCALAR, [1.0], [1e-3], ["cbmd", "original", "improved", "optimal"])
    assert [row["kernel"] for row in rows] == ["cbmd", "lchs_original", "lchs_improved", "lchs_optimal"]
    for row in rows:
        assert row["status"] == "completed"
        assert row["rel_error"] <= 1e-3


def test_compare_shift_column():
    u0 = np.ones(2) / math.sqrt(2)
    rows = run_compare(DIAG_5_6, u0, [1e-3], ["cbmd"], shifts=["none", "exact-min"])
    off, on = rows
    assert (off["shift"], on["shift"]) == ("off", "on")
    assert on["rounds_overhead"] <= off["rounds_overhead"]


def test_compare_marks_failed_rows():
    entry = get_entry("jordan")
    rows = run_compare(entry.gen, entry.u0, [1e-3], ["cbmd"], shifts=["none", "exact_min"])
    assert rows[0]["status"] == "failed"
    assert rows[0]["error"].startswith("HypothesisViolation")
    assert rows[1]["status"] == "completed"


def test_csv_is_deterministic():
    first = rows_to_csv(run_compare(SCALAR, [1.0], [1e-2, 1e-3], ["cbmd", "optimal"], max_parallel=1))
    second = rows_to_csv(run_compare(SCALAR, [1.0], [1e-2, 1e-3], ["cbmd", "optimal"], max_parallel=3))
    assert first == second
    lines = first.splitlines()
    assert lines[0] == ",".join(config.CSV_HEADER)
    parsed = list(csv.DictReader(io.StringIO(first)))
    assert len(parsed) == 4
    assert {row["shift"] for row in parsed} == {"off"}
    assert float(parsed[0]["eps"]) == 1e-2


def test_catalog_contents():
    catalog = build_catalog()
    assert len(catalog) >= 8
    assert set(TAGS) <= {tag for entry in catalog.values() for tag in entry.tags}
    for entry in catalog.values():
        assert entry.u0.shape == (entry.gen.dim,)


def test_catalog_seeding():
    same = [build_catalog(7)["random-dissipative"] for _ in range(2)]
    other = build_catalog(8)["random-dissipative"]
    assert np.array_equal(same[0].u0, same[1].u0)
    assert np.array_equal(same[0].gen.samples, same[1].gen.samples)
    assert not np.array_equal(same[0].gen.samples, other.gen.samples)


def test_unknown_catalog_entry():
    with pytest.raises(KeyError):
        get_entry("does-not-exist")
