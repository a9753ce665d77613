"""CLI surface: flags, CSV shape, exit codes, determinism."""

import numpy as np
import pytest

import grnnd
from grnnd import read_graph, write_ivecs
from grnnd.cli import main
from grnnd.search import brute_force_knn_batch


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    base = root / "base.fvecs"
    queries = root / "q.fvecs"
    assert main(["gen", "--n", "2000", "--dim", "8", "--seed", "1", "--output", str(base)]) == 0
    assert main(["gen", "--n", "30", "--dim", "8", "--seed", "2", "--output", str(queries)]) == 0
    return root, base, queries


def _rows(captured):
    lines = [ln for ln in captured.strip().splitlines() if ln]
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


def test_build_smoke_csv(corpus, capsys, tmp_path):
    root, base, _ = corpus
    out = tmp_path / "g.grnnd"
    code = main([
        "build", "--input", str(base), "--output", str(out),
        "--algo", "grnnd", "--T1", "2", "--T2", "2", "--seed", "3",
    ])
    assert code == 0
    header, rows = _rows(capsys.readouterr().out)
    assert header == [
        "algo", "n", "dim", "build_seconds", "mean_degree",
        "max_degree", "rejected_inserts", "seed",
    ]
    assert len(rows) == 1
    assert rows[0][0] == "grnnd" and rows[0][1] == "2000"
    assert float(rows[0][3]) > 0
    read_graph(out).validate()


def test_build_param_error_exit_code(corpus, capsys, tmp_path):
    root, base, _ = corpus
    code = main([
        "build", "--input", str(base), "--output", str(tmp_path / "x"),
        "--S", "40", "--R", "32",
    ])
    assert code == 1
    err = capsys.readouterr().err
    assert "S <= R" in err


def test_build_missing_file_exit_code(capsys, tmp_path):
    code = main([
        "build", "--input", str(tmp_path / "nope.fvecs"),
        "--output", str(tmp_path / "x"),
    ])
    assert code == 2


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as e:
        main(["build", "--no-such-flag"])
    assert e.value.code == 1


def test_both_algos_produce_valid_graphs(corpus, capsys, tmp_path):
    root, base, _ = corpus
    for algo in ("grnnd", "seq"):
        out = tmp_path / f"{algo}.grnnd"
        assert main([
            "build", "--input", str(base), "--output", str(out),
            "--algo", algo, "--T1", "2", "--T2", "2", "--seed", "5",
        ]) == 0
        g = read_graph(out)
        g.validate()
        assert g.num_vertices == 2000
    capsys.readouterr()


def test_search_sweep_rows(corpus, capsys, tmp_path):
    root, base, queries = corpus
    out = tmp_path / "g.grnnd"
    main(["build", "--input", str(base), "--output", str(out), "--seed", "3"])
    capsys.readouterr()
    code = main([
        "search", "--graph", str(out), "--base", str(base),
        "--queries", str(queries), "--k", "10",
        "--L", "16", "--L", "32", "--L", "64",
    ])
    assert code == 0
    header, rows = _rows(capsys.readouterr().out)
    assert header == ["L", "recall@k", "QPS"]
    assert [r[0] for r in rows] == ["16", "32", "64"]
    recalls = [float(r[1]) for r in rows]
    assert all(0.0 <= r <= 1.0 for r in recalls)
    for a, b in zip(recalls, recalls[1:]):
        assert b >= a - 0.01
    assert all(float(r[2]) > 0 for r in rows)


def test_search_gt_file_matches_bruteforce(corpus, capsys, tmp_path):
    root, base, queries = corpus
    out = tmp_path / "g.grnnd"
    main(["build", "--input", str(base), "--output", str(out), "--seed", "3"])
    capsys.readouterr()

    ds = grnnd.read_fvecs(base)
    qs = grnnd.read_fvecs(queries)
    gt = brute_force_knn_batch(ds, qs.data, 10)
    gt_path = tmp_path / "gt.ivecs"
    write_ivecs(gt, gt_path)

    args = ["search", "--graph", str(out), "--base", str(base),
            "--queries", str(queries), "--k", "10", "--L", "32"]
    assert main(args + ["--gt", str(gt_path)]) == 0
    with_gt = _rows(capsys.readouterr().out)[1]
    assert main(args) == 0
    without_gt = _rows(capsys.readouterr().out)[1]
    assert with_gt[0][1] == without_gt[0][1]  # identical recall column


def test_search_dimension_mismatch_exit(corpus, capsys, tmp_path):
    root, base, _ = corpus
    out = tmp_path / "g.grnnd"
    main(["build", "--input", str(base), "--output", str(out), "--seed", "3"])
    badq = tmp_path / "badq.fvecs"
    main(["gen", "--n", "5", "--dim", "4", "--seed", "1", "--output", str(badq)])
    capsys.readouterr()
    code = main([
        "search", "--graph", str(out), "--base", str(base), "--queries", str(badq),
    ])
    assert code == 1


def test_bench_single_cell(corpus, capsys):
    code = main([
        "bench", "--n", "500", "--dim", "4", "--queries", "20",
        "--T1", "2", "--T2", "2", "--rho", "0.6", "--seed", "4", "--L", "32",
    ])
    assert code == 0
    header, rows = _rows(capsys.readouterr().out)
    assert header == ["T1", "T2", "rho", "build_seconds", "recall@10", "QPS"]
    assert len(rows) == 1
    assert rows[0][:3] == ["2", "2", "0.6"]


def test_bench_grid_rows(corpus, capsys):
    code = main([
        "bench", "--n", "400", "--dim", "4", "--queries", "10",
        "--T1", "1", "2", "--T2", "2", "3", "--rho", "0.6", "--seed", "4",
    ])
    assert code == 0
    _, rows = _rows(capsys.readouterr().out)
    assert len(rows) == 4
    assert [r[:2] for r in rows] == [["1", "2"], ["1", "3"], ["2", "2"], ["2", "3"]]


def test_deterministic_csv_modulo_timing(corpus, capsys, tmp_path):
    root, base, queries = corpus
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / f"{name}.grnnd"
        assert main([
            "build", "--input", str(base), "--output", str(out),
            "--seed", "11", "--workers", "1", "--T1", "2", "--T2", "2",
        ]) == 0
        header, rows = _rows(capsys.readouterr().out)
        row = rows[0]
        del row[3]  # build_seconds is the only nondeterministic column
        outs.append((row, out.read_bytes()))
    assert outs[0][0] == outs[1][0]
    assert outs[0][1] == outs[1][1]


def test_workers_env_default(corpus, capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("GRNND_WORKERS", "2")
    from grnnd.cli import _default_workers

    assert _default_workers() == 2
    monkeypatch.setenv("GRNND_WORKERS", "junk")
    assert _default_workers() == 1


def test_gen_writes_file_and_reports_seed(capsys, tmp_path):
    out = tmp_path / "c.fvecs"
    assert main(["gen", "--n", "10", "--dim", "3", "--seed", "9", "--output", str(out)]) == 0
    err = capsys.readouterr().err
    assert "seed=9" in err
    ds = grnnd.read_fvecs(out)
    assert ds.num_points == 10 and ds.dim == 3
