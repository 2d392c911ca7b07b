"""Smoke test for the pycarterlab extension module.

Build and install with `pip install ./crates/py` (maturin backend), then run
`python python/smoke_test.py` or `pytest python/`.
"""
import math

import pycarterlab as cl


def test_kn_wall():
    margin = cl.nontrapping_margin(1.0, 0.0, 0.0, 2.5)
    assert abs(margin["max_factor"] + 6.25) < 1e-12
    assert margin["identity_is_zero"]
    obs = cl.wall_obstruction(1.0, 0.0, 0.0, 2.5)
    assert abs(obs["numeric"] - 3.2) < 1e-10
    assert abs(cl.sign_factor(1.0, 0.5, 0.3, 2.0) + 5.78) < 1e-12
    try:
        cl.horizon_constants(1.0, 0.9, 0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("superextremal parameters accepted")


def test_certificate():
    rep = cl.certificate()
    assert rep["scalar_ok"] and rep["trace_free_ok"]
    assert cl.spot_check(3, seed=1)["all_zero"]
    assert not cl.spot_check(2, seed=1, flip_cross_term=True)["all_zero"]


def test_slab():
    slab = cl.Slab(1.0, 0.5, (3.0, 5.0), (-0.5, 0.5), 12)
    lam = slab.spectrum(3)
    assert abs(lam[0]) < 1e-10 * lam[1]
    flat = cl.Slab.flat((0.0, math.pi), (0.0, math.pi), 16)
    assert abs(flat.spectrum(2)[1] - 1.0) < 1e-2
    scan = cl.Slab(1.0, 0.5, (3.0, 5.0), (-0.5, 0.5), 6, m=1).pencil_scan()
    assert scan["max_imag"] < 1e-8 * scan["spectral_radius"]


def test_modes():
    vals = cl.angular_eigenvalues(1.0, 0.0, 0.0, 0, 3)
    assert all(abs(v - j * (j + 1)) < 1e-8 for j, v in enumerate(vals))
    rep = cl.zero_frequency_classify("extremal-kerr-newman", 1.0, 0.6, 0.8, 2)
    assert rep["indicial_roots"] == [2.0, -3.0]
    assert not rep["admissible_state_exists"]


def test_extremal():
    st = cl.ExtremalState.constant(1.0, 0.6, 0.8, 0.7, 8, 5)
    assert abs(st.charge() - 2.8) < 1e-14
    dc = 0.5
    off = cl.ExtremalState(1.0, 0.0, 1.0, dc, 32, 4,
                           lambda r, x: ((dc - (r - 1)) ** 2, -2 * (dc - (r - 1)), 0.0))
    assert abs(off.charge() + 3.0) < 1e-13
    series = off.evolve(off.dependence_window() / 100, 100)
    assert len(series["charge"]) == len(series["v"])
    assert off.nondecay()["obstruction"]


def test_run_config():
    code, verdict, details = cl.run_config('command = "kn-check"')
    assert code == 0, verdict
    code, _, _ = cl.run_config('command = "slab-spectrum"', ["slab.r=[1.5, 5.0]"])
    assert code == 2
    try:
        cl.run_config('command = "cert"\ndtt = 1')
    except ValueError as e:
        assert "dtt" in str(e)
    else:
        raise AssertionError("unknown key accepted")


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print(f"{name}: ok")
