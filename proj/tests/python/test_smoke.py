import json
import math
import os
import subprocess

import numpy as np
import pytest

import vfplab


@pytest.fixture(scope="module")
def front():
    return vfplab.solve_front(vfplab.ModelParams(nz=257))


def test_thermo_matches_bisection():
    c = vfplab.coexistence_densities(1.25, 2.0)
    lo, hi = 1e-12, 1.0 - 1e-16
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if math.atanh(mid) < 1.25 * mid:
            lo = mid
        else:
            hi = mid
    assert abs(c.m - lo) < 1e-10
    assert c.rho_plus + c.rho_minus == pytest.approx(2.0)
    assert vfplab.coexistence_densities(1.0, 2.0).m == 0.0


def test_invalid_params_raise_value_error():
    with pytest.raises(ValueError, match="nz"):
        vfplab.ModelParams(nz=1024).validate()
    assert issubclass(vfplab.ValidationError, ValueError)
    assert issubclass(vfplab.NumericalError, RuntimeError)


def test_front(front, tmp_path):
    assert front.el_residual < 1e-8
    w1, w2 = front.w1, front.w2
    assert np.all(np.diff(w1) >= 0) and np.all(np.diff(w2) <= 0)
    assert np.array_equal(w1, w2[::-1])
    inv = vfplab.check_front_invariants(front)
    assert inv["monotone"] and inv["strictly_bounded"]
    path = tmp_path / "front.json"
    vfplab.save_front(front, str(path))
    again = vfplab.load_front(str(path))
    assert np.array_equal(again.w1, w1)


def test_spectrum(front):
    rep = vfplab.spectrum_atilde(front, 3)
    assert abs(rep["eigenvalues"][0]) < 1e-8
    assert rep["eigenvalues"][1] > 0
    assert rep["null_alignment"] > 0.999
    beta = front.params.beta
    assert np.array_equal(vfplab.fp_matrix_hermite(4, beta), -beta * np.arange(5))
    c = np.zeros(5)
    c[1] = 1.0
    assert vfplab.lgap_ratio(4, beta, c) == pytest.approx(beta / (1 + 2 * beta), abs=1e-12)


def test_short_evolve(front):
    sys = vfplab.KineticSystem(front, order=8)
    state = vfplab.init_perturbation(sys, "gaussian_density", 1e-3)
    records, final = vfplab.evolve(sys, state, dt=0.003, t_end=0.3, record_every=20)
    assert records["t"][-1] == pytest.approx(0.3)
    assert np.all(np.diff(records["free_energy"]) <= 1e-10)
    assert np.max(np.abs(records["mass_1"])) < 1e-12
    assert vfplab.symmetry_error(final) <= 1e-10


def test_hydro(front):
    s = vfplab.perturbed_front_state(front, 0.05)
    records, final = vfplab.hydro_evolve(front, s, t_end=0.05, record_every=10)
    assert np.all(np.diff(records["free_energy"]) <= 0)
    assert abs(records["mass_1"][-1] - records["mass_1"][0]) < 1e-12
    rest = vfplab.hydro_state_from_front(front)
    assert vfplab.hydro_free_energy(rest) == pytest.approx(vfplab.excess_free_energy(front), abs=1e-6)


def test_run_writes_manifest(tmp_path):
    manifest, code = vfplab.run("thermo", out=tmp_path / "t", beta=1.5)
    assert code == 0 and manifest["status"] == "ok"
    assert (tmp_path / "t" / "thermo.json").exists()
    manifest, code = vfplab.run("front", out=tmp_path / "f", beta=0.9)
    assert code == 2 and manifest["status"] == "failed"


def _cli(*args):
    exe = os.environ.get("VFPLAB_CLI")
    if not exe:
        pytest.skip("VFPLAB_CLI not set")
    return subprocess.run([exe, *args], capture_output=True, text=True)


def test_cli_exit_codes(tmp_path):
    ok = _cli("thermo", "--out", str(tmp_path / "a"), "-q")
    assert ok.returncode == 0, ok.stderr
    doc = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert doc["status"] == "ok"
    assert _cli("thermo", "--nz", "1024", "--out", str(tmp_path / "b")).returncode == 2
    assert _cli("thermo", "--no-such-flag").returncode == 2
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("beta = 1.25\nbogus = 3\n")
    bad = _cli("thermo", "--config", str(cfg), "--out", str(tmp_path / "c"))
    assert bad.returncode == 2 and "bogus" in bad.stderr
