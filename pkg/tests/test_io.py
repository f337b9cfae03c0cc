import json

import numpy as np
import pytest

from conftest import random_element, random_povm
from detomo import (
    CROSSTALK_CSV_COLUMNS,
    PPT_CSV_COLUMNS,
    NoiseSpec,
    SchemaError,
    analyze_povm,
    classify_povm,
    config_hash,
    counts_to_tables,
    crosstalk_report_to_csv,
    ideal_povm,
    load_counts,
    load_povm,
    make_noisy_povm,
    mub_preparations,
    operator_from_dict,
    operator_to_dict,
    povm_from_dict,
    povm_to_dict,
    ppt_report_to_csv,
    sample_counts,
    save_counts,
    save_povm,
    validate_counts,
    write_crosstalk_csv,
    write_crosstalk_json,
    write_ppt_csv,
    write_ppt_json,
)


# ---------------------------------------------------------------- operators


def test_operator_dict_round_trip_is_exact():
    op = random_element(2, np.random.default_rng(1)).op
    back = operator_from_dict(json.loads(json.dumps(operator_to_dict(op))))
    np.testing.assert_array_equal(back.matrix, op.matrix)
    assert back.qubit_labels == op.qubit_labels


def test_operator_from_dict_schema_errors():
    good = operator_to_dict(random_element(1, np.random.default_rng(2)).op)
    for key in ("dim", "labels", "re", "im"):
        bad = dict(good)
        del bad[key]
        with pytest.raises(SchemaError):
            operator_from_dict(bad)
    bad = dict(good)
    bad["dim"] = 3
    with pytest.raises(SchemaError):
        operator_from_dict(bad)
    bad = dict(good)
    bad["re"] = [[1.0]]
    with pytest.raises(SchemaError):
        operator_from_dict(bad)
    bad = dict(good)
    bad["labels"] = [0, 1]
    with pytest.raises(SchemaError):
        operator_from_dict(bad)
    bad = dict(good)
    bad["re"] = [["x", 0.0], [0.0, 0.0]]
    with pytest.raises(SchemaError):
        operator_from_dict(bad)


def test_povm_file_round_trip(tmp_path):
    povm = random_povm(2, np.random.default_rng(3))
    path = tmp_path / "povm.json"
    save_povm(povm, path)
    back = load_povm(path)
    for outcome in povm.outcomes:
        np.testing.assert_array_equal(back.element(outcome).matrix, povm.element(outcome).matrix)


def test_povm_from_dict_missing_element():
    doc = povm_to_dict(ideal_povm(2))
    del doc["elements"]["01"]
    with pytest.raises(SchemaError, match="'01'"):
        povm_from_dict(doc)


def test_povm_load_rejects_truncated_json(tmp_path):
    path = tmp_path / "broken.json"
    save_povm(ideal_povm(1), path)
    path.write_text(path.read_text()[:-30])
    with pytest.raises(SchemaError, match="not valid JSON"):
        load_povm(path)


# ------------------------------------------------------------------- counts


def counts_fixture() -> dict:
    povm = make_noisy_povm(2, NoiseSpec(kind="local_flip", p=0.05))
    preps = mub_preparations(2, shots_per_state=400)
    return sample_counts(povm, preps, seed=8)


def test_counts_file_round_trip(tmp_path):
    doc = counts_fixture()
    path = tmp_path / "counts.json"
    save_counts(doc, path)
    assert load_counts(path) == doc


def test_counts_to_tables_fills_missing_outcomes_with_zeros():
    doc = {
        "version": 1,
        "qubits": [0, 1],
        "preparations": [
            {"labels": ["0", "0"], "shots": 10, "counts": {"00": 7, "11": 3}},
            {"labels": ["+", "1"], "shots": 10, "counts": {"01": 10}},
        ],
    }
    preps, table = counts_to_tables(doc)
    assert preps.num_states == 2
    np.testing.assert_allclose(table.frequencies[:, 0], [0.7, 0.0, 0.0, 0.3])
    np.testing.assert_allclose(table.frequencies[:, 1], [0.0, 1.0, 0.0, 0.0])


def test_validate_counts_names_offending_record():
    doc = counts_fixture()
    doc["preparations"][5]["shots"] += 1
    with pytest.raises(SchemaError, match="preparation 5"):
        validate_counts(doc)


def test_validate_counts_rejects_bad_outcome_key():
    doc = counts_fixture()
    doc["preparations"][0]["counts"]["012"] = 0
    with pytest.raises(SchemaError, match="'012'"):
        validate_counts(doc)


def test_validate_counts_rejects_bad_headers():
    with pytest.raises(SchemaError):
        validate_counts({"version": 2, "qubits": [0], "preparations": []})
    with pytest.raises(SchemaError):
        validate_counts({"version": 1, "qubits": [0, 0], "preparations": []})
    with pytest.raises(SchemaError):
        validate_counts({"version": 1, "qubits": [0], "preparations": []})


def test_counts_to_tables_rejects_unknown_state_label():
    doc = {
        "version": 1,
        "qubits": [0],
        "preparations": [{"labels": ["up"], "shots": 5, "counts": {"0": 5}}],
    }
    with pytest.raises(SchemaError, match="up"):
        counts_to_tables(doc)


def test_load_counts_rejects_truncated_file(tmp_path):
    path = tmp_path / "counts.json"
    save_counts(counts_fixture(), path)
    path.write_text(path.read_text()[:-40])
    with pytest.raises(SchemaError):
        load_counts(path)


# ------------------------------------------------------------------ reports


def test_crosstalk_csv_header_is_pinned():
    report = analyze_povm(ideal_povm(2))
    text = crosstalk_report_to_csv(report)
    assert text.splitlines()[0] == ",".join(CROSSTALK_CSV_COLUMNS)
    assert len(text.splitlines()) == 1 + len(report.rows)


def test_ppt_csv_header_is_pinned():
    report = classify_povm(ideal_povm(2))
    text = ppt_report_to_csv(report)
    assert text.splitlines()[0] == ",".join(PPT_CSV_COLUMNS)
    assert len(text.splitlines()) == 1 + len(report.rows)


def test_report_writers_are_deterministic(tmp_path):
    povm = make_noisy_povm(2, NoiseSpec(kind="classical_corr", w=0.5))
    xreport = analyze_povm(povm)
    preport = classify_povm(povm)
    meta = {"config": {"seed": 7}}
    paths = [tmp_path / name for name in ("x1.json", "x2.json", "x1.csv", "x2.csv")]
    write_crosstalk_json(xreport, paths[0], meta)
    write_crosstalk_json(xreport, paths[1], meta)
    write_crosstalk_csv(xreport, paths[2])
    write_crosstalk_csv(xreport, paths[3])
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert paths[2].read_bytes() == paths[3].read_bytes()

    p1, p2 = tmp_path / "p1.json", tmp_path / "p2.json"
    write_ppt_json(preport, p1)
    write_ppt_json(preport, p2)
    assert p1.read_bytes() == p2.read_bytes()
    c1, c2 = tmp_path / "p1.csv", tmp_path / "p2.csv"
    write_ppt_csv(preport, c1)
    write_ppt_csv(preport, c2)
    assert c1.read_bytes() == c2.read_bytes()


def test_crosstalk_json_rows_carry_diagnostics(tmp_path):
    report = analyze_povm(ideal_povm(2))
    path = tmp_path / "x.json"
    write_crosstalk_json(report, path, {"created_at": "now"})
    doc = json.loads(path.read_text())
    row = doc["rows"][0]
    for key in ("triangle_residual", "resolved", "converged", "restarts_used"):
        assert key in row
    assert doc["metadata"] == {"created_at": "now"}
    assert doc["resolution"] == report.resolution


def test_config_hash_ignores_key_order():
    a = config_hash({"p": 0.1, "kind": "local_flip"})
    b = config_hash({"kind": "local_flip", "p": 0.1})
    assert a == b
    assert a != config_hash({"kind": "local_flip", "p": 0.2})
