"""Smoke test for the Python bindings.

Build and install first:  pip install --no-build-isolation ./crates/hitchin-py
Then run:  python python/smoke_test.py   (or pytest python/)
"""

import math

import pytest

import hitchin_py as h


def test_painleve_matches_the_asymptotic_amplitude():
    s = h.painleve_solve()
    assert len(s["rho"]) == len(s["psi"]) == len(s["psi_prime"])
    assert abs(s["amplitude"] - 1.0 / math.pi) < 1e-6
    assert all(p > 0 for p in s["psi"])
    assert all(a > b for a, b in zip(s["psi"], s["psi"][1:]))


def test_fiducial_profile_is_bounded():
    p = h.fiducial_profiles(4.0, n=200)
    assert all(-1e-12 <= f <= 0.125 + 1e-12 for f in p["f"])
    assert len(p["r"]) == 200


def test_spectrum_and_curvature():
    lam = h.smallest_eigenvalue(4.0, 1, "-", n=120)
    assert lam > 0
    k = h.sectional_curvature([1], [1j], 16.0, n=200, ell_max=4)
    assert k["gram"] > 0 and math.isfinite(k["K"])
    assert 0.3 < h.LAMBDA_ONE_I < 0.5


def test_bad_input_raises_value_error():
    with pytest.raises(ValueError):
        h.smallest_eigenvalue(4.0, 1, "x")
    with pytest.raises(ValueError):
        h.sectional_curvature([1], [2], 16.0, n=150, ell_max=2)


def test_selftest_criterion():
    passed, detail = h.run_criterion(2)
    assert passed, detail


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
