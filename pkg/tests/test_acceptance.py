"""The twelve acceptance contracts, one test each, at their stated tolerances.

Each test prints a single PASS/FAIL line with the measured value; run with
`pytest -s tests/test_acceptance.py` to see all lines.
"""

import pytest

import ekpara.suites as suites


def _finish(result):
    print(result.line())
    assert result.passed, result.line()


def test_01_paraproduct_exactness():
    _finish(suites.check_paraproduct(n_pairs=100, N_ax=128))


def test_02_spectral_localization():
    _finish(suites.check_band())


def test_03_change_of_quantization():
    _finish(suites.check_change_of_quantization(n_symbols=20))


def test_04_composition_smoothing():
    _finish(suites.check_composition(N_ax=512))


def test_05_diagonalization():
    _finish(suites.check_diagonalization(n_states=100))


def test_06_paralinearization_identity():
    _finish(suites.check_paralinearization(n_states=100))


def test_07_energy_eps_independence():
    result, _, _ = suites.check_energy_eps_independence()
    _finish(result)


def test_08_modified_energy_equivalence():
    _finish(suites.check_energy_equivalence(n_samples=100))


def test_09_scheme_contraction_and_correctness():
    _finish(suites.check_scheme(N_ax=128))


def test_10_galerkin_rate():
    result, _ = suites.check_galerkin(N_ax=256)
    _finish(result)


def test_11_reversibility():
    _finish(suites.check_reversibility(N_ax=128))


def test_12_flow_map_continuity():
    result, _ = suites.check_continuity()
    _finish(result)
