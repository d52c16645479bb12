import json
from pathlib import Path

import pytest

from vtspline.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(path: Path, doc: dict) -> str:
    path.write_text(json.dumps(doc))
    return str(path)


def _problem(**over):
    doc = {
        "schema_version": 1,
        "operators": {"alpha1": 0.0, "N1": 1, "alpha2": 0.0, "N2": 1},
        "random_functionals": {"type": "box", "count": 6},
        "random_truth": {"n_tensor": 2, "n_poly_green": 1, "n_green_poly": 1, "n_poly_poly": 1},
        "lambda_rel": 0.02,
        "grid": {"n2d": 9, "n1d": 17, "levels": 1},
        "seed": 5,
    }
    doc.update(over)
    return doc


def test_simulate_solve_render(tmp_path, capsys):
    cfg = _write(tmp_path / "cfg.json", _problem())
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    problem = tmp_path / "a" / "problem.json"
    assert main(["solve", "--config", str(problem), "--out", str(tmp_path / "a")]) == 0
    for name in ("result.json", "atoms.csv", "certification.txt"):
        assert (tmp_path / "a" / name).exists()
    text = (tmp_path / "a" / "certification.txt").read_text()
    assert "sparsity: PASS" in text and "duality_gap: PASS" in text
    result = json.loads((tmp_path / "a" / "result.json").read_text())
    assert result["kind"] == "result" and result["certification"]["sparsity_count"] <= 5
    assert main(["render", "--config", str(tmp_path / "a" / "result.json"), "--out", str(tmp_path / "a"), "--resolution", "32"]) == 0
    assert (tmp_path / "a" / "decomposition.svg").read_text().count('class="panel"') == 4


def test_simulate_and_solve_are_deterministic(tmp_path):
    cfg = _write(tmp_path / "cfg.json", _problem())
    for run in ("a", "b"):
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / run)]) == 0
        assert main(["solve", "--config", str(tmp_path / run / "problem.json"), "--out", str(tmp_path / run)]) == 0
    for name in ("problem.json", "result.json", "atoms.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_flag_overrides(tmp_path):
    cfg = _write(tmp_path / "cfg.json", _problem())
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["simulate", "--config", cfg, "--seed", "6", "--out", str(tmp_path / "b")])
    a = json.loads((tmp_path / "a" / "problem.json").read_text())
    b = json.loads((tmp_path / "b" / "problem.json").read_text())
    assert a["y"] != b["y"] and b["seed"] == 6


def test_dirac_with_first_order_exits_2(tmp_path, capsys):
    cfg = _write(tmp_path / "cfg.json", _problem(random_functionals={"type": "dirac", "count": 6}))
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "DiracNeedsOrderTwo" in capsys.readouterr().err


@pytest.mark.parametrize(
    "doc",
    [
        {"schema_version": 2},
        {"schema_version": 1, "operators": {"alpha1": 0.0, "N1": 1, "alpha2": 0.0, "N2": 1}, "system": "universal"},
    ],
)
def test_bad_documents_exit_2(tmp_path, doc):
    cfg = _write(tmp_path / "cfg.json", doc)
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_missing_file_exits_2(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


def test_assumption_failure_exits_2(tmp_path):
    doc = _problem(random_functionals={"type": "box", "count": 1}, operators={"alpha1": 0.0, "N1": 2, "alpha2": 0.0, "N2": 2})
    cfg = _write(tmp_path / "cfg.json", doc)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert main(["solve", "--config", str(tmp_path / "problem.json"), "--out", str(tmp_path)]) == 2


def test_multidim_problem(tmp_path):
    doc = {
        "schema_version": 1,
        "operators": {"dimension": 3, "N": 1},
        "random_functionals": {"type": "box", "count": 6},
        "random_truth": {"n_atoms": 2},
        "lambda_rel": 0.02,
        "seed": 1,
    }
    cfg = _write(tmp_path / "cfg.json", doc)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert main(["solve", "--config", str(tmp_path / "problem.json"), "--out", str(tmp_path)]) == 0
    assert "containment: PASS" in (tmp_path / "certification.txt").read_text()
    assert main(["render", "--config", str(tmp_path / "result.json"), "--out", str(tmp_path)]) == 2


def test_render_rejects_bad_window(tmp_path):
    cfg = _write(tmp_path / "cfg.json", _problem())
    main(["simulate", "--config", cfg, "--out", str(tmp_path)])
    main(["solve", "--config", str(tmp_path / "problem.json"), "--out", str(tmp_path)])
    res = str(tmp_path / "result.json")
    assert main(["render", "--config", res, "--out", str(tmp_path), "--extended-window", "1,0,0,1"]) == 2
    assert main(["render", "--config", str(tmp_path / "problem.json"), "--out", str(tmp_path)]) == 2


def test_verify_suite(capsys):
    assert main(["verify", "--suite", "admissibility,seminorm"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out and all(line.startswith("PASS ") for line in out)
    assert main(["verify", "--suite", "nope"]) == 2


def test_shipped_configs_parse():
    from vtspline.docio import ProblemDocument, loads

    names = sorted(p.name for p in CONFIGS.glob("*.json"))
    assert names
    for p in CONFIGS.glob("*.json"):
        ProblemDocument.parse(loads(p.read_text()))


def test_shipped_explicit_config_exits_2(tmp_path):
    assert main(["solve", "--config", str(CONFIGS / "dirac_first_order_rejected.json"), "--out", str(tmp_path)]) == 2
