import json
import subprocess
import sys

import pytest

from reflectwalk.cli import EXPERIMENTS, list_builtins, main, validate_config

BASE = {
    "domain": {"name": "rectangle"},
    "levels": [1, 3],
    "seed": 5,
    "experiments": ["buildGrid", "energy", "spectrumCheck", "occupation", "crevice"],
    "walk": {"horizon": 0.5, "replicas": 20},
}


def write(tmp_path, cfg, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_validate_reports_every_error():
    cfg, errors = validate_config({"domain": {"name": "rectangle"}, "levels": [2],
                                   "experiments": ["nope"], "c1": 1.5})
    assert cfg is None
    assert "seed: missing required field" in errors
    assert "c1: c1 must lie in (0,1)" in errors
    assert any(e.startswith("experiments[0]") for e in errors)


def test_validate_nested_paths():
    _, errors = validate_config({**BASE, "walk": {"replicas": 0, "discipline": "x", "extra": 1},
                                 "levels": [2, -1], "testFunctions": ["x1", "cube"]})
    for path in ("walk.replicas", "walk.discipline", "walk.extra", "levels[1]", "testFunctions[1]"):
        assert any(e.startswith(path + ":") for e in errors), path


def test_validate_domain_params():
    _, errors = validate_config({**BASE, "domain": {"name": "comb", "params": {}}})
    assert any(e.startswith("domain.params") for e in errors)
    _, errors = validate_config({**BASE, "domain": {"name": "torus"}})
    assert any(e.startswith("domain.name") for e in errors)


def test_validate_exit_time_needs_box():
    _, errors = validate_config({**BASE, "experiments": ["exitTime"]})
    assert any(e.startswith("exitTime.lo") for e in errors)


def test_invalid_json_text():
    _, errors = validate_config("{not json")
    assert errors and errors[0].startswith("<root>")


def test_exit_codes(tmp_path, capsys):
    assert main(["validate", write(tmp_path, BASE)]) == 0
    assert main(["validate", write(tmp_path, {**BASE, "experiments": ["bogus"]}, "b.json")]) == 2
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    assert main(["builtins"]) == 0
    err = capsys.readouterr().err
    assert "experiments[0]" in err


def test_runtime_failure_exit_code(tmp_path):
    # a marginal comparison on a disk has no reference kernel
    cfg = {**BASE, "domain": {"name": "disk"}, "levels": [3], "experiments": ["marginal"]}
    assert main(["run", write(tmp_path, cfg), "-o", str(tmp_path / "o")]) == 1


def test_run_is_byte_identical(tmp_path):
    path = write(tmp_path, BASE)
    assert main(["run", path, "-o", str(tmp_path / "a")]) == 0
    cfg = dict(BASE, workers=3)
    assert main(["run", write(tmp_path, cfg, "w.json"), "-o", str(tmp_path / "b")]) == 0
    a = sorted(p.name for p in (tmp_path / "a").iterdir())
    b = sorted(p.name for p in (tmp_path / "b").iterdir())
    assert a == b
    for name in a:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_manifest_contents(tmp_path):
    assert main(["run", write(tmp_path, BASE), "-o", str(tmp_path / "o")]) == 0
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert m["levels"]["1"]["status"] == "emptyGrid"
    assert m["levels"]["3"]["status"] == "ok"
    files = {f["file"] for f in m["outputs"]}
    assert {"grid-cubeBased-k3.json", "report-energy-k3.csv", "report-spectrum-k3.json",
            "report-occupation-k3.json", "report-crevice-k1.json"} <= files
    assert len(m["configHash"]) == 64
    spectrum = json.loads((tmp_path / "o" / "report-spectrum-k3.json").read_text())
    assert spectrum["maxIdentityResidual"] < 1e-10
    assert spectrum["minContractionSlack"] >= -1e-9


def test_all_experiments_run(tmp_path):
    cfg = {
        "domain": {"name": "rectangle", "params": {"lo": [0], "hi": [1]}},
        "levels": [4], "seed": 1, "experiments": list(EXPERIMENTS),
        "walk": {"horizon": 0.1, "replicas": 200},
        "marginal": {"time": 0.05, "bins": 5},
        "exitTime": {"lo": [0.25], "hi": [0.75]},
    }
    assert main(["run", write(tmp_path, cfg), "-o", str(tmp_path / "o")]) == 0
    names = {p.name for p in (tmp_path / "o").iterdir()}
    assert {"report-marginal-k4.json", "report-exitTime-k4.json"} <= names


def test_builtins_json():
    cat = json.loads(list_builtins(as_json=True))
    assert {"rectangle", "disk", "slitDisk", "kochPrefractal", "comb", "polygon"} <= set(cat["domains"])
    assert "sinCos" in cat["testFunctions"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "reflectwalk", "builtins", "--json"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "comb" in json.loads(res.stdout)["domains"]
