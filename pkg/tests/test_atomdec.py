from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nchardy import atomdec, bmo, ensembles
from nchardy.gridfn import GridSpec, MatrixField, RatInterval, functional

G = GridSpec(1, 4)
seeds = st.integers(0, 2**32 - 1)


def haar_on(grid, lo, hi, m=((1.0,),)):
    mid = (lo + hi) / 2
    return MatrixField.indicator(grid, RatInterval(lo, mid), m) - MatrixField.indicator(grid, RatInterval(mid, hi), m)


def test_size_and_normalize_examples():
    iv = RatInterval(-1, 1)
    h = haar_on(G, Fraction(-1), Fraction(1))
    assert atomdec.size_of(h, iv) == pytest.approx(np.sqrt(2.0), rel=1e-14)
    a = atomdec.normalize_atom(h, iv)
    cert = atomdec.validate_atom(a, iv)
    assert cert.valid and cert.support_ok and cert.mean_norm == 0
    assert cert.size_value == pytest.approx(1.0, rel=1e-14)
    z = MatrixField.zeros(G, 2)
    assert atomdec.normalize_atom(z, iv) is z


def test_validate_rejects_bad_atoms():
    iv = RatInterval(0, 1)
    one = MatrixField.indicator(G, iv, [[1.0]])
    assert not atomdec.validate_atom(one, iv).valid  # not mean zero
    h = atomdec.normalize_atom(haar_on(G, Fraction(-1), Fraction(1)), RatInterval(-1, 1))
    cert = atomdec.validate_atom(h, iv)
    assert not cert.support_ok and not cert.valid
    big = haar_on(G, Fraction(0), Fraction(1)) * 3.0
    assert not atomdec.validate_atom(big, iv).valid


@settings(max_examples=20)
@given(seeds, st.sampled_from(["martingale", "gaussian"]), st.integers(1, 3))
def test_decompose_reconstructs(seed, kind, d):
    rng = np.random.default_rng(seed)
    f = ensembles.martingale_field(G, d, rng) if kind == "martingale" else ensembles.cell_gaussian_field(G, d, rng)
    terms = atomdec.decompose(f)
    assert all(t.cert.valid for t in terms)
    assert all(t.lam > 0 for t in terms)
    r = atomdec.reconstruct(terms, f)
    assert np.abs(r.values - f.values).max() <= 1e-12 * max(1.0, np.abs(f.values).max())
    again = atomdec.decompose(f)
    assert [t.lam for t in again] == [t.lam for t in terms]


def test_decompose_errors_and_zero():
    assert atomdec.decompose(MatrixField.zeros(G, 2)) == []
    with pytest.raises(ValueError):
        atomdec.decompose(MatrixField.constant(G, np.eye(2)))


@settings(max_examples=10)
@given(seeds)
def test_pairing_bound(seed):
    rng = np.random.default_rng(seed)
    f = ensembles.cell_gaussian_field(G, 2, rng)
    phi = ensembles.cell_gaussian_field(G, 2, rng, mean_zero=False)
    terms = atomdec.decompose(f)
    b = bmo.bmo_norm(phi).value
    for t in terms[:50]:
        assert abs(functional(phi, t.atom)) <= b * (1 + 1e-9)
    assert abs(functional(phi, f)) <= b * sum(t.lam for t in terms) * (1 + 1e-9)


def test_haar_atoms_have_comparable_hardy_norms():
    grid = GridSpec(1, 5)
    norms = []
    for k in range(0, 4):
        half = Fraction(1, 2**k)
        iv = RatInterval(-half, half)
        a = atomdec.normalize_atom(haar_on(grid, -half, half), iv)
        norms.append(atomdec.atom_hardy_norm(a))
    assert max(norms) <= 2 * min(norms)
    assert atomdec.atom_hardy_norm(MatrixField.zeros(grid, 1)) == 0
