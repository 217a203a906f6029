import csv
import json

import numpy as np
import pytest

from qcsc.bench import (BenchPlan, BenchReport, PlanError, bench_kernels, check_slopes, emit_plot_data, fit_slope,
                        make_instance, parse_grid, run_bench, table1_rows, write_table1)


def test_parse_grid():
    assert parse_grid("4:512:x2") == (4, 8, 16, 32, 64, 128, 256, 512)
    assert parse_grid("4:16:+4") == (4, 8, 12, 16)
    assert parse_grid("3,5,9,20") == (3, 5, 9, 20)
    for bad in ("4:512:x1", "a:b:x2", "4:16:+0", "4,x"):
        with pytest.raises(PlanError):
            parse_grid(bad)


@pytest.mark.parametrize("kw", [
    dict(sweep="Q", grid=(1, 2, 3, 4)),
    dict(sweep="M", grid=(1, 2, 3)),
    dict(sweep="M", grid=(1, 2, 2, 4)),
    dict(sweep="M", grid=(0, 2, 3, 4)),
    dict(sweep="M", grid=(1, 2, 3, 4), backends=("grover",)),
    dict(sweep="d", grid=(8, 16, 32, 128), N=64),
    dict(sweep="M", grid=(1, 2, 3, 4), seeds=0),
    dict(sweep="M", grid=(1, 2, 3, 4), kind="cube"),
])
def test_plan_validation(kw):
    with pytest.raises(PlanError):
        BenchPlan(**kw)


def test_fit_slope_recovers_power_law():
    x = np.array([4, 8, 16, 32, 64])
    fit = fit_slope(x, 3 * x ** 0.5)
    assert fit.slope == pytest.approx(0.5) and fit.r_squared == pytest.approx(1.0)
    assert fit.ci_low <= fit.slope <= fit.ci_high


def test_direct_sweep_has_unit_slope():
    rep = run_bench(BenchPlan("M", (4, 8, 16, 32), backends=("direct",), seeds=3))
    assert rep.slopes["direct"].slope == pytest.approx(1.0)
    assert [p.mean_queries for p in rep.points] == [2 * m * 8 for m in (4, 8, 16, 32)]
    assert check_slopes(rep) == []


def test_reports_reproducible_across_workers():
    plan = BenchPlan("M", (4, 8, 16, 32), backends=("direct", "mc", "quantum"), seeds=4)
    a, b = run_bench(plan).to_json(), run_bench(plan, workers=2).to_json()
    assert a == b
    assert a["plan"]["grid"] == [4, 8, 16, 32]


def test_n_sweep_with_flat_vectors_keeps_per_round_factor():
    plan = BenchPlan("N", (16, 32, 64, 128), backends=("quantum",), seeds=3, kind="flat", r_max=None, d=4, M=16)
    rep = run_bench(plan)
    bounds = {p.bound for p in rep.points}
    assert len(bounds) == 1
    assert all(p.mean_r_max == pytest.approx(0.25) for p in rep.points)


def test_svo_instances_expose_deferred_sparsity():
    plan = BenchPlan("M", (2, 4, 8, 16), backends=("direct",), seeds=2, kind="svo", N=8, d=2)
    inst = make_instance(plan, 4, 0)
    assert inst.M == 4 and inst.D == 8 ** 3
    rep = run_bench(plan)
    assert all(p.mean_d == 8 for p in rep.points)


def test_check_slopes_flags_problems():
    rep = run_bench(BenchPlan("N", (16, 32, 64, 128), backends=("direct",), seeds=2))
    problems = check_slopes(rep)
    assert len(problems) == 1 and "direct" in problems[0]


def test_plot_csv(tmp_path):
    rep = run_bench(BenchPlan("M", (4, 8, 16, 32), backends=("direct",), seeds=2))
    emit_plot_data(rep, tmp_path / "p.csv")
    rows = list(csv.reader(open(tmp_path / "p.csv")))
    assert rows[0] == ["backend", "sweep_value", "mean_queries", "std", "bound"]
    assert rows[1][:3] == ["direct", "4", "64.0"]
    emit_plot_data(BenchReport(None), tmp_path / "empty.csv", tmp_path / "t1.csv")
    assert open(tmp_path / "empty.csv").read() == "backend,sweep_value,mean_queries,std,bound\n"
    assert open(tmp_path / "t1.csv").read() == "N,num_verbs,classical_bits,qubits\n"


def test_table1_csv(tmp_path):
    write_table1(table1_rows(2000, [1, 10000]), tmp_path / "t.csv")
    assert open(tmp_path / "t.csv").read().splitlines() == [
        "N,num_verbs,classical_bits,qubits", "2000,1,8000000000,33", "2000,10000,80000000000000,47"]


def test_report_json(tmp_path):
    rep = run_bench(BenchPlan("M", (4, 8, 16, 32), backends=("direct",), seeds=2))
    rep.table1 = table1_rows(2000, [1])
    rep.write_json(tmp_path / "r.json")
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["slopes"]["direct"]["slope"] == pytest.approx(1.0)
    assert data["table1"] == [{"N": 2000, "num_verbs": 1, "classical_bits": 8000000000, "qubits": 33}]


def test_bench_kernels_rows():
    rows = bench_kernels(sizes=(200,), repeats=1)
    assert {r["kernel"] for r in rows} == {"sum_duplicates", "sparse_dot", "gather", "join_contract",
                                           "median_estimates"}
    assert all(r["python"] > 0 for r in rows)
