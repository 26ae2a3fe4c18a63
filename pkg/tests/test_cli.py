import json

import numpy as np
import pytest

from conftest import REFERENCE, fixture_path
from vqecost import __version__
from vqecost.cli import main
from vqecost.encode import QubitHamiltonian
from vqecost.oracle import expectation

H2 = str(fixture_path("h2_sto3g"))
# H2 fixture, QWC plan, unit variances, zero covariance (same value as the estimator regression)
H2_QWC_UPPER_K = 0.5325237149837808


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if code == 0 and out.strip() else None), err


@pytest.fixture
def h2_json(tmp_path, capsys):
    path = tmp_path / "h2.json"
    assert main(["encode", H2, "-o", str(path)]) == 0
    capsys.readouterr()
    return path


class TestEncode:
    def test_h2(self, capsys):
        code, doc, _ = run(capsys, "encode", H2)
        assert code == 0
        assert doc["n_qubits"] == 4
        # 14 non-identity strings plus the constant
        assert len(doc["terms"]) == 14
        assert doc["config"]["subcommand"] == "encode"

    def test_output_is_loadable(self, h2_json, h2_hamiltonian):
        h = QubitHamiltonian.load(h2_json)
        assert h.n_qubits == 4
        assert h.identity_offset == pytest.approx(h2_hamiltonian.identity_offset)

    def test_active(self, capsys):
        code, doc, _ = run(capsys, "encode", H2, "--active", 1)
        assert code == 0 and doc["n_qubits"] == 2

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "encode", tmp_path / "nope.fcidump")
        assert code == 2
        assert "error" in err

    def test_malformed(self, capsys, tmp_path):
        bad = tmp_path / "bad.fcidump"
        bad.write_text("&FCI NORB=2\n&END\n1.0 x 1 1 1\n")
        assert run(capsys, "encode", bad)[0] == 2

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0
        assert __version__ in capsys.readouterr().out


class TestK:
    def test_qwc_regression(self, capsys, h2_json):
        code, doc, _ = run(capsys, "k", h2_json, "--method", "qwc")
        assert code == 0
        assert doc["K"] == pytest.approx(H2_QWC_UPPER_K, rel=1e-12)
        assert doc["n_groups"] == 5
        assert doc["M"] == pytest.approx(doc["K"] / 5e-4**2)

    def test_singleton_is_l1_squared(self, capsys, h2_json, h2_hamiltonian):
        code, doc, _ = run(capsys, "k", h2_json, "--method", "none")
        l1 = sum(abs(t.coefficient) for t in h2_hamiltonian.terms)
        assert code == 0 and doc["K"] == pytest.approx(l1**2, rel=1e-12)

    def test_state_models(self, capsys, h2_json):
        code, doc, _ = run(
            capsys, "k", h2_json, "--method", "qwc", "--variance", "state", "--covariance", "state", "--ground-state"
        )
        assert code == 0
        assert doc["config"]["state_source"] == "ground_state"
        assert doc["K"] < H2_QWC_UPPER_K

    def test_rdmc_report(self, capsys, h2_json):
        code, doc, _ = run(
            capsys,
            "k", h2_json, "--method", "qwc", "--variance", "state", "--covariance", "state",
            "--ground-state", "--rdmc",
        )
        assert code == 0
        assert doc["rdmc"]["k_after"] <= doc["rdmc"]["k_before"] + 1e-12
        assert doc["config"]["rdmc"] is True

    def test_state_model_needs_state(self, capsys, h2_json):
        assert run(capsys, "k", h2_json, "--variance", "state")[0] == 2

    def test_state_file(self, capsys, tmp_path, h2_json, h2_ground):
        path = tmp_path / "psi.npy"
        np.save(path, h2_ground[1].amplitudes)
        code, doc, _ = run(capsys, "k", h2_json, "--variance", "state", "--state-file", path)
        code2, doc2, _ = run(capsys, "k", h2_json, "--variance", "state", "--ground-state")
        assert code == code2 == 0
        assert doc["K"] == pytest.approx(doc2["K"], rel=1e-9)

    def test_basis_rotation_needs_integrals(self, capsys, h2_json):
        assert run(capsys, "k", h2_json, "--method", "basis-rotation")[0] == 2

    def test_basis_rotation(self, capsys, h2_json):
        code, doc, _ = run(capsys, "k", h2_json, "--method", "basis-rotation", "--fcidump", H2)
        assert code == 0 and doc["method"] == "basis_rotation"
        assert doc["K"] > 0

    def test_rdmc_basis_rotation_unsupported(self, capsys, h2_json):
        code, _, _ = run(capsys, "k", h2_json, "--method", "basis-rotation", "--fcidump", H2, "--rdmc")
        assert code == 3

    def test_output_file(self, capsys, tmp_path, h2_json):
        out = tmp_path / "k.json"
        assert run(capsys, "k", h2_json, "-o", out)[0] == 0
        assert json.loads(out.read_text())["config"]["output"] == str(out)


class TestRdmc:
    def test_save_shifted(self, capsys, tmp_path, h2_json, h2_ground):
        out = tmp_path / "shifted.json"
        code, doc, _ = run(capsys, "rdmc", h2_json, "--method", "qwc", "--save-shifted", out)
        assert code == 0
        assert doc["k_after"] <= doc["k_before"]
        shifted = QubitHamiltonian.load(out)
        assert expectation(shifted, h2_ground[1]) == pytest.approx(REFERENCE["h2_sto3g"]["fci_energy"], abs=1e-8)

    def test_tiny_budget_warns(self, capsys, h2_json):
        code, doc, err = run(capsys, "rdmc", h2_json, "--method", "qwc", "--budget", 2)
        assert code == 0
        assert doc["status"] == "partial"
        assert "warning" in err


class TestSimulate:
    def test_deterministic(self, capsys, h2_json):
        a = run(capsys, "simulate", h2_json, "--method", "qwc", "--shots", 20000, "--seed", 7)[1]
        b = run(capsys, "simulate", h2_json, "--method", "qwc", "--shots", 20000, "--seed", 7)[1]
        assert a == b
        c = run(capsys, "simulate", h2_json, "--method", "qwc", "--shots", 20000, "--seed", 8)[1]
        assert c["energy_estimate"] != a["energy_estimate"]

    def test_variance_law(self, capsys, h2_json):
        shots = 10**6
        code, doc, _ = run(capsys, "simulate", h2_json, "--method", "qwc", "--shots", shots, "--seed", 7)
        assert code == 0
        assert sum(doc["per_group_shots"]) == shots
        assert 0.85 <= doc["empirical_variance"] * shots / doc["K"] <= 1.15
        sigma = np.sqrt(doc["K"] / shots)
        assert abs(doc["energy_estimate"] - REFERENCE["h2_sto3g"]["fci_energy"]) < 5 * sigma

    def test_too_few_shots(self, capsys, h2_json):
        assert run(capsys, "simulate", h2_json, "--method", "qwc", "--shots", 3)[0] == 3

    def test_basis_rotation_unsupported(self, capsys, h2_json):
        code = run(capsys, "simulate", h2_json, "--method", "basis-rotation", "--fcidump", H2, "--shots", 100)[0]
        assert code == 3


class TestFitAndTable:
    def test_fit(self, capsys, tmp_path):
        p = tmp_path / "pts.csv"
        p.write_text("n_qubits,k\n" + "".join(f"{n},{2 * n**3}\n" for n in (10, 20, 40, 80)))
        code, doc, _ = run(capsys, "fit", p)
        assert code == 0
        assert doc["a"] == pytest.approx(2.0, abs=1e-10)
        assert doc["b"] == pytest.approx(3.0, abs=1e-10)

    def test_empty_csv(self, capsys, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        assert run(capsys, "fit", p)[0] == 2

    def test_single_point(self, capsys, tmp_path):
        p = tmp_path / "one.csv"
        p.write_text("n_qubits,k\n10,5\n")
        assert run(capsys, "fit", p)[0] == 3

    def test_table2(self, capsys):
        code, doc, _ = run(capsys, "table2")
        assert code == 0
        rows = {r["molecule"]: r for r in doc["rows"]}
        assert len(rows) == 11
        assert rows["Methane"]["n_qubits"] == 104
        assert rows["Methane"]["t_days"] == pytest.approx(1.9, rel=0.05)
        assert doc["config"]["rdmc_factor"] == 2.0

    def test_table2_custom(self, capsys, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("molecule,n_el,a,b\nfoo,1,1,0\n")
        code, doc, _ = run(capsys, "table2", p, "--rdmc-factor", 1, "--epsilon", 1e-3)
        assert code == 0
        assert doc["rows"][0]["m"] == pytest.approx(1e6)
