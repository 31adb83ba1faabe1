import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from speceig import cli
from speceig import config as cfgmod
from speceig.errors import ConfigError

BUNDLED = {
    "landau-zener.cfg": "sweep",
    "noisy-landau-zener.cfg": "sweep",
    "landau-zener-a-scan.cfg": "scan",
    "kitaev-c-scan.cfg": "scan",
    "kitaev-y-scan.cfg": "scan",
    "three-site.cfg": "scan",
    "phase-map-exact.cfg": "phase-map",
    "finite-size.cfg": "phase-map",
    "phase-map-spectroscopic.cfg": "phase-map",
    "oracle-two-level.cfg": "oracle",
    "resources.cfg": "resources",
}

LZ_CFG = """
[model]
kind = landau-zener
a = 0.6
b = 0.9

[sweep]
omega_start = -4
omega_stop = 4
omega_count = 41
"""


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, text, name="x.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestConfig:
    def test_loads_landau_zener(self):
        cfg = cfgmod.loads(LZ_CFG)
        sc = cfg.sweep_config()
        assert sc.omega_count == 41 and sc.hamiltonian.coefficient("Z") == 0.6

    def test_fraction(self):
        cfg = cfgmod.loads(LZ_CFG + "dt = 1/3\n")
        assert cfg.sweep["dt"] == pytest.approx(1 / 3)

    def test_kitaev_physical_and_coupling(self):
        cfg = cfgmod.loads("[model]\nkind = kitaev\nl = 2\nmu = 0.1\ng = 2\ndelta = 0.5\nv = 0.8\n")
        assert cfg.hamiltonian().coefficient("XX") == pytest.approx(1.25)
        with pytest.raises(ConfigError):
            cfgmod.loads("[model]\nkind = kitaev\nmu = 0.1\nx = 1\n").hamiltonian()

    def test_pauli_terms(self):
        cfg = cfgmod.loads("[model]\nkind = pauli\nn = 2\nterms = 0.5 XX, -1 ZI\n")
        h = cfg.hamiltonian()
        assert h.coefficient("XX") == 0.5 and h.coefficient("ZI") == -1.0

    @pytest.mark.parametrize(
        "text",
        [
            "[sweep]\nc = 1\n",
            "[model]\nkind = ising\n",
            "[model]\nkind = landau-zener\nq = 1\n",
            "[model]\nkind = landau-zener\na = one\n",
            LZ_CFG + "colour = red\n",
            LZ_CFG + "shots = 10\n",
            LZ_CFG + "omega_count = many\n",
            LZ_CFG + "[extra]\nx = 1\n",
            LZ_CFG + "[scan]\nparameter = a\nstep = 1\n",
            "not an ini file",
        ],
    )
    def test_rejected(self, text):
        with pytest.raises(ConfigError):
            cfgmod.loads(text)

    def test_bad_sweep_value_surfaces_as_config_error(self):
        with pytest.raises(ConfigError):
            cfgmod.loads(LZ_CFG.replace("omega_count = 41", "omega_count = 2")).sweep_config()

    def test_overrides_need_seed_for_shots(self):
        cfg = cfgmod.loads(LZ_CFG)
        with pytest.raises(ConfigError):
            cfg.with_overrides(shots=100)
        assert cfg.with_overrides(shots=100, seed=1).sweep["shots"] == 100

    def test_grid_and_bool(self):
        assert cfgmod.grid({"m_start": "-1", "m_stop": "1", "m_count": "3"}, "m_").tolist() == [-1, 0, 1]
        assert cfgmod.grid({}, "m_", (0.0, 1.0, 2)).tolist() == [0.0, 1.0]
        with pytest.raises(ConfigError):
            cfgmod.grid({}, "m_")
        with pytest.raises(ConfigError):
            cfgmod.grid({"m_start": "0", "m_stop": "1", "m_count": "0"}, "m_")
        assert cfgmod.get_bool({"a": "yes"}, "a", False) is True
        with pytest.raises(ConfigError):
            cfgmod.get_bool({"a": "maybe"}, "a", False)

    @pytest.mark.parametrize("name", sorted(BUNDLED))
    def test_bundled_parse(self, name):
        cfgmod.load(cli.bundled_config(name))


class TestCliErrors:
    def test_missing_config(self, tmp_path, capsys):
        code, _, err = run(["sweep", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path / "o")], capsys)
        assert code == 2
        payload = json.loads(err)
        assert payload["error"] == "config" and payload["type"] == "ConfigError"

    def test_empty_grid_writes_nothing(self, tmp_path, capsys):
        p = write(tmp_path, LZ_CFG.replace("omega_count = 41", "omega_count = 0"))
        out = tmp_path / "o"
        code, _, err = run(["sweep", "--config", p, "--out", str(out)], capsys)
        assert code == 2 and "error" in json.loads(err)
        assert not out.exists()

    def test_wrong_model_for_phase_map(self, tmp_path, capsys):
        p = write(tmp_path, LZ_CFG + "[map]\nmode = exact\n")
        code, _, _ = run(["phase-map", "--config", p, "--out", str(tmp_path / "o")], capsys)
        assert code == 2

    def test_scan_unknown_parameter(self, tmp_path, capsys):
        p = write(tmp_path, LZ_CFG + "[scan]\nparameter = q\nvalues = 1, 2\n")
        code, _, _ = run(["scan", "--config", p, "--out", str(tmp_path / "o")], capsys)
        assert code == 2

    def test_missing_error_file(self, tmp_path, capsys):
        p = write(tmp_path, LZ_CFG + "[resources]\nerror_file = missing.txt\n")
        code, _, err = run(["resources", "--config", p, "--out", str(tmp_path / "o")], capsys)
        assert code == 2 and "missing.txt" in json.loads(err)["message"]

    def test_runtime_error_code(self, tmp_path, capsys):
        # seven sites exceed the exact-diagonalization limit of the gap maps
        p = write(tmp_path, "[model]\nkind = kitaev\nl = 7\nx = 1\nz = 0.4\n[map]\nmode = exact\nm_count = 2\nm_start = 0\nm_stop = 1\ny_start = 1\ny_stop = 1\ny_count = 1\n")
        code, _, err = run(["phase-map", "--config", p, "--out", str(tmp_path / "o")], capsys)
        assert code == 3 and json.loads(err)["error"] == "runtime"

    def test_workers_must_be_positive(self, tmp_path, capsys):
        p = write(tmp_path, LZ_CFG)
        code, _, _ = run(["sweep", "--config", p, "--workers", "0", "--out", str(tmp_path / "o")], capsys)
        assert code == 2

    def test_shots_without_seed(self, tmp_path, capsys):
        p = write(tmp_path, LZ_CFG)
        code, _, _ = run(["sweep", "--config", p, "--shots", "100", "--out", str(tmp_path / "o")], capsys)
        assert code == 2


class TestCliCommands:
    def test_sweep_outputs(self, tmp_path, capsys):
        code, out, _ = run(["sweep", "--config", write(tmp_path, LZ_CFG), "--out", str(tmp_path / "o")], capsys)
        assert code == 0
        assert json.loads(out)["files"] == ["sweep.csv", "sweep.json"]
        with open(tmp_path / "o" / "sweep.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["omega", "z0", "z0_smoothed"] and len(rows) == 42
        summary = json.loads((tmp_path / "o" / "sweep.json").read_text())
        assert {"minima", "transitions", "config", "rms_nearest_transition"} <= set(summary)

    def test_scan_of_one_value_is_a_sweep(self, tmp_path, capsys):
        p = write(tmp_path, LZ_CFG + "[scan]\nparameter = a\nvalues = 0.6\n")
        assert run(["scan", "--config", p, "--out", str(tmp_path / "s")], capsys)[0] == 0
        assert run(["sweep", "--config", p, "--out", str(tmp_path / "w")], capsys)[0] == 0
        a = (tmp_path / "s" / "sweeps" / "sweep_000.csv").read_bytes()
        b = (tmp_path / "w" / "sweep.csv").read_bytes()
        assert a == b

    def test_scan_over_sweep_parameter(self, tmp_path, capsys):
        p = write(tmp_path, LZ_CFG + "[scan]\nparameter = c\nvalues = 0.05, 0.1\n")
        assert run(["scan", "--config", p, "--out", str(tmp_path / "s")], capsys)[0] == 0
        scan = json.loads((tmp_path / "s" / "scan.json").read_text())
        assert scan["values"] == [0.05, 0.1]

    def test_noise_and_shots_flags(self, tmp_path, capsys):
        p = write(tmp_path, LZ_CFG)
        argv = ["sweep", "--config", p, "--shots", "1000", "--seed", "3", "--noise", "0.01"]
        assert run(argv + ["--out", str(tmp_path / "a")], capsys)[0] == 0
        cfg = json.loads((tmp_path / "a" / "sweep.json").read_text())["config"]
        assert (cfg["shots"], cfg["seed"], cfg["noise"]) == (1000, 3, 0.01)

    def test_oracle_zero_coupling(self, tmp_path, capsys):
        text = "[model]\nkind = landau-zener\n[sweep]\nomega_start = 0\nomega_stop = 3\nomega_count = 11\nc = 0\nt = 5\ndt = 0.25\n[oracle]\nd = 1.5\n"
        assert run(["oracle", "--config", write(tmp_path, text), "--out", str(tmp_path / "o")], capsys)[0] == 0
        with open(tmp_path / "o" / "oracle.csv") as fh:
            rows = list(csv.DictReader(fh))
        for r in rows:
            for k in ("sim", "exact", "perturbative", "model"):
                assert float(r[k]) == pytest.approx(1.0, abs=1e-12)

    def test_resources_zero_rates(self, tmp_path, capsys):
        (tmp_path / "zero.txt").write_text("two_qubit = 0\n")
        p = write(tmp_path, LZ_CFG + "[resources]\nerror_file = zero.txt\n")
        assert run(["resources", "--config", p, "--out", str(tmp_path / "o")], capsys)[0] == 0
        rep = json.loads((tmp_path / "o" / "resources.json").read_text())
        assert [r["score"] for r in rep["reports"]] == [0.0, 0.0, 0.0]

    def test_list_configs(self, capsys):
        code, out, _ = run(["list-configs"], capsys)
        assert code == 0
        assert set(BUNDLED) <= set(out.split())

    def test_module_entry_point(self, tmp_path):
        p = write(tmp_path, LZ_CFG)
        r = subprocess.run(
            [sys.executable, "-m", "speceig.cli", "sweep", "--config", p, "--out", str(tmp_path / "o")],
            capture_output=True,
            text=True,
        )
        assert r.returncode == 0, r.stderr


@pytest.mark.slow
class TestBundledConfigs:
    @pytest.mark.parametrize("name", sorted(BUNDLED))
    def test_runs(self, name, tmp_path, capsys):
        code, out, err = run([BUNDLED[name], "--config", name, "--out", str(tmp_path)], capsys)
        assert code == 0, err
        for f in json.loads(out)["files"]:
            assert (tmp_path / f).stat().st_size > 0

    def test_landau_zener_sweep_content(self, tmp_path, capsys):
        run(["sweep", "--config", "landau-zener.cfg", "--out", str(tmp_path)], capsys)
        s = json.loads((tmp_path / "sweep.json").read_text())
        centers = [m["center"] for m in s["minima"]]
        assert min(abs(c - 2.1633) for c in centers) < 0.08
        assert min(abs(c) for c in centers) < 0.08

    def test_a_scan_follows_avoided_crossing(self, tmp_path, capsys):
        run(["scan", "--config", "landau-zener-a-scan.cfg", "--out", str(tmp_path)], capsys)
        scan = json.loads((tmp_path / "scan.json").read_text())
        for entry in scan["sweeps"]:
            gap = 2 * np.hypot(entry["value"], 0.9)
            centers = [m["center"] for m in entry["minima"]]
            assert min(abs(c - gap) for c in centers) < 0.1
            assert min(abs(c + gap) for c in centers) < 0.1

    def test_y_scan_tracks_01(self, tmp_path, capsys):
        run(["scan", "--config", "kitaev-y-scan.cfg", "--out", str(tmp_path)], capsys)
        track = json.loads((tmp_path / "scan.json").read_text())["track"]
        assert len(track["path"]) == 11 and not any(track["gaps"])
        assert track["path"][0] == pytest.approx(2.2, abs=0.1)
        assert all(h is not None for h in track["hwhm"])

    def test_oracle_report(self, tmp_path, capsys):
        run(["oracle", "--config", "oracle-two-level.cfg", "--out", str(tmp_path)], capsys)
        rep = json.loads((tmp_path / "oracle.json").read_text())
        assert rep["max_abs_exact_minus_model"] < 1e-9
        assert rep["convergence"]["order2"]["slope"] == pytest.approx(2.0, abs=0.2)
        assert rep["convergence"]["order1"]["slope"] == pytest.approx(1.0, abs=0.2)

    def test_resources_ordering(self, tmp_path, capsys):
        run(["resources", "--config", "resources.cfg", "--out", str(tmp_path)], capsys)
        rep = json.loads((tmp_path / "resources.json").read_text())
        q, c, n = (r["score"] for r in rep["reports"])
        assert q > c > n
        assert rep["cnot_pair_by_order"] == {"1": 60, "2": 120}

    def test_finite_size_closings(self, tmp_path, capsys):
        run(["phase-map", "--config", "finite-size.cfg", "--out", str(tmp_path)], capsys)
        by_l = json.loads((tmp_path / "phase_map.json").read_text())["closings"]["by_L"]
        counts = [by_l[k] for k in sorted(by_l, key=int)]
        assert counts == sorted(counts)
