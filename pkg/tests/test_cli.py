import json
import shutil
import subprocess

import pytest

from detomo import analyze_povm, ideal_povm, load_povm, make_noisy_povm, NoiseSpec, save_povm, validate_povm
from detomo.cli import main


def run_cli(*argv: str) -> int:
    return main(list(argv))


# ----------------------------------------------------------------- simulate


def test_simulate_writes_counts_and_truth(tmp_path, capsys):
    out = tmp_path / "counts.json"
    code = run_cli(
        "simulate", "--n", "2", "--noise", "local_flip", "--p", "0.1",
        "--shots", "64", "--seed", "5", "--out", str(out),
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert len(doc["preparations"]) == 36
    truth = tmp_path / "counts.truth.json"
    assert truth.exists()
    assert validate_povm(load_povm(truth)).ok
    assert "36 preparations x 64 shots" in capsys.readouterr().out


def test_simulate_three_qubits(tmp_path):
    out = tmp_path / "c3.json"
    code = run_cli(
        "simulate", "--n", "3", "--noise", "entangled", "--p", "0.4",
        "--pair", "0,2", "--shots", "16", "--out", str(out),
    )
    assert code == 0
    assert len(json.loads(out.read_text())["preparations"]) == 216


def test_simulate_rejects_out_of_range_probability(tmp_path, capsys):
    code = run_cli(
        "simulate", "--n", "2", "--noise", "local_flip", "--p", "1.5",
        "--out", str(tmp_path / "x.json"),
    )
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_simulate_rejects_bad_pair(tmp_path):
    code = run_cli(
        "simulate", "--n", "2", "--noise", "entangled", "--p", "0.2",
        "--pair", "0,1,2", "--out", str(tmp_path / "x.json"),
    )
    assert code == 2


def test_simulate_missing_out_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        run_cli("simulate", "--n", "2", "--noise", "local_flip")
    assert exc.value.code == 2


def test_unknown_noise_kind_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run_cli("simulate", "--n", "2", "--noise", "cosmic", "--out", str(tmp_path / "x.json"))
    assert exc.value.code == 2


def test_unwritable_output_path_is_io_error(tmp_path, capsys):
    code = run_cli(
        "simulate", "--n", "1", "--noise", "local_flip", "--shots", "8",
        "--out", str(tmp_path / "missing_dir" / "x.json"),
    )
    assert code == 1
    assert "i/o error" in capsys.readouterr().err


# -------------------------------------------------------------- reconstruct


def test_reconstruct_round_trip(tmp_path, capsys):
    counts = tmp_path / "counts.json"
    run_cli(
        "simulate", "--n", "1", "--noise", "local_flip", "--p", "0.1",
        "--shots", "4096", "--seed", "1", "--out", str(counts),
    )
    out = tmp_path / "povm.json"
    code = run_cli("reconstruct", "--counts", str(counts), "--out", str(out))
    assert code == 0
    assert "reconstructed 1-qubit POVM" in capsys.readouterr().out
    povm = load_povm(out)
    assert validate_povm(povm).ok
    diag = json.loads((tmp_path / "povm.diag.json").read_text())
    assert diag["converged"] is True
    assert set(diag["metadata"]) == {"created_at", "config", "config_hash", "inputs"}


def test_reconstruct_truncated_counts_is_schema_error(tmp_path, capsys):
    counts = tmp_path / "counts.json"
    run_cli(
        "simulate", "--n", "1", "--noise", "local_flip", "--shots", "32",
        "--out", str(counts),
    )
    counts.write_text(counts.read_text()[:-25])
    code = run_cli("reconstruct", "--counts", str(counts), "--out", str(tmp_path / "p.json"))
    assert code == 3
    assert "schema error" in capsys.readouterr().err


def test_reconstruct_rejects_inconsistent_counts(tmp_path):
    doc = {
        "version": 1,
        "qubits": [0],
        "preparations": [{"labels": ["0"], "shots": 9, "counts": {"0": 5, "1": 5}}],
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert run_cli("reconstruct", "--counts", str(path), "--out", str(tmp_path / "p.json")) == 3


# ------------------------------------------------------------------ analyze


def test_analyze_ideal_povm(tmp_path, capsys):
    povm_path = tmp_path / "ideal.json"
    save_povm(ideal_povm(2), povm_path)
    prefix = tmp_path / "ideal"
    code = run_cli("analyze", "--povm", str(povm_path), "--out", str(prefix))
    assert code == 0
    out = capsys.readouterr().out
    assert "max D_C = 0.0000" in out
    assert "no NPPT entanglement detected" in out
    for suffix in (".crosstalk.json", ".crosstalk.csv", ".ppt.json", ".ppt.csv"):
        assert (tmp_path / f"ideal{suffix}").exists()
    csv_text = (tmp_path / "ideal.crosstalk.csv").read_text()
    assert csv_text.splitlines()[0] == "qubits,outcome,partition,D_N,D_C,D_L_star,converged,restarts_used"
    ppt = json.loads((tmp_path / "ideal.ppt.json").read_text())
    assert all(r["verdict"] == "P" for r in ppt["rows"])


def test_analyze_accepts_explicit_partitions(tmp_path):
    povm_path = tmp_path / "ideal.json"
    save_povm(ideal_povm(2), povm_path)
    prefix = tmp_path / "r"
    code = run_cli(
        "analyze", "--povm", str(povm_path), "--out", str(prefix),
        "--partitions", "0:1", "--format", "json",
    )
    assert code == 0
    doc = json.loads((tmp_path / "r.crosstalk.json").read_text())
    assert {row["partition"] for row in doc["rows"]} == {"0:1"}
    assert not (tmp_path / "r.crosstalk.csv").exists()


def test_analyze_rejects_malformed_partition(tmp_path, capsys):
    povm_path = tmp_path / "ideal.json"
    save_povm(ideal_povm(2), povm_path)
    code = run_cli(
        "analyze", "--povm", str(povm_path), "--out", str(tmp_path / "r"),
        "--partitions", "0::1",
    )
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_analyze_reruns_are_identical_up_to_timestamp(tmp_path):
    povm_path = tmp_path / "noisy.json"
    save_povm(make_noisy_povm(2, NoiseSpec(kind="classical_corr", w=0.6)), povm_path)
    for prefix in ("a", "b"):
        assert run_cli("analyze", "--povm", str(povm_path), "--out", str(tmp_path / prefix)) == 0
    docs = []
    for prefix in ("a", "b"):
        doc = json.loads((tmp_path / f"{prefix}.crosstalk.json").read_text())
        doc["metadata"].pop("created_at")
        docs.append(doc)
    assert docs[0] == docs[1]
    assert (tmp_path / "a.crosstalk.csv").read_bytes() == (tmp_path / "b.crosstalk.csv").read_bytes()
    assert (tmp_path / "a.ppt.csv").read_bytes() == (tmp_path / "b.ppt.csv").read_bytes()


def test_analyze_thread_env_var_does_not_change_results(monkeypatch):
    povm = make_noisy_povm(2, NoiseSpec(kind="entangled", p=0.3))
    serial = analyze_povm(povm, workers=1)
    monkeypatch.setenv("QDT_THREADS", "2")
    threaded = analyze_povm(povm)
    assert serial.rows == threaded.rows


# ------------------------------------------------------------------- report


CROSSTALK_DOC = {
    "qubits": [0, 1],
    "resolution": 1e-3,
    "rows": [
        {
            "qubits": "0,1",
            "outcome": "00",
            "partition": "0:1",
            "D_N": 0.11584,
            "D_C": 0.02191,
            "D_L_star": 0.11592,
            "converged": True,
            "restarts_used": 16,
            "triangle_residual": -0.022,
            "resolved": True,
        },
        {
            "qubits": "0,1",
            "outcome": "01",
            "partition": "0:1",
            "D_N": 0.1,
            "D_C": 0.0004,
            "D_L_star": 0.1,
            "converged": True,
            "restarts_used": 16,
            "triangle_residual": -0.0004,
            "resolved": False,
        },
    ],
    "skipped_outcomes": ["10"],
    "metadata": {},
}

PPT_DOC = {
    "qubits": [0, 1],
    "ppt_tol": 1e-7,
    "rows": [
        {
            "outcome": "00",
            "bipartition": "0:1",
            "min_eigenvalue": -0.5,
            "negativity": 0.5,
            "verdict": "N",
            "borderline": False,
        },
        {
            "outcome": "01",
            "bipartition": "0:1",
            "min_eigenvalue": 0.02,
            "negativity": 0.0,
            "verdict": "P",
            "borderline": False,
        },
    ],
    "skipped_outcomes": [],
    "metadata": {},
}


def test_report_renders_four_decimal_tables(tmp_path, capsys):
    xpath = tmp_path / "x.json"
    ppath = tmp_path / "p.json"
    xpath.write_text(json.dumps(CROSSTALK_DOC))
    ppath.write_text(json.dumps(PPT_DOC))
    code = run_cli("report", "--crosstalk", str(xpath), "--ppt", str(ppath))
    assert code == 0
    out = capsys.readouterr().out
    row = next(line for line in out.splitlines() if line.strip().startswith("00") and "0.1158" in line)
    assert "0.1158" in row and "0.0219" in row and "0.1159" in row
    assert "(below resolution)" in out
    assert "skipped near-zero elements: 10" in out
    assert "N  -0.5000" in out
    assert "NPPT entanglement detected in outcomes: 00" in out


def test_report_writes_file_when_asked(tmp_path, capsys):
    xpath = tmp_path / "x.json"
    xpath.write_text(json.dumps(CROSSTALK_DOC))
    out = tmp_path / "rendered.txt"
    assert run_cli("report", "--crosstalk", str(xpath), "--out", str(out)) == 0
    assert "partition 0:1" in out.read_text()
    assert f"wrote {out}" in capsys.readouterr().out


def test_report_without_inputs_is_usage_error(capsys):
    assert run_cli("report") == 2
    assert "error:" in capsys.readouterr().err


# -------------------------------------------------------------- entry point


def test_console_script_is_installed(tmp_path):
    exe = shutil.which("detomo")
    assert exe, "console script 'detomo' not on PATH"
    out = tmp_path / "c.json"
    proc = subprocess.run(
        [exe, "simulate", "--n", "1", "--noise", "local_flip", "--shots", "8",
         "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert out.exists()
