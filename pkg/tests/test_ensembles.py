import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nchardy import dyadic, ensembles, matcore
from nchardy.gridfn import GridSpec

G = GridSpec(1, 4)
seeds = st.integers(0, 2**32 - 1)


@given(seeds, st.sampled_from(["gaussian", "martingale", "atoms", "psd"]))
def test_members_depend_only_on_seed_and_index(seed, kind):
    a = ensembles.generate_ensemble(kind, G, 2, 3, seed)
    b = ensembles.generate_ensemble(kind, G, 2, 5, seed)
    for x, y in zip(a, b):
        assert np.array_equal(x.values, y.values)
    assert not np.array_equal(a[0].values, a[1].values)


@given(seeds, st.integers(1, 3), st.integers(0, 3))
def test_mean_zero_is_exact(seed, d, block_level):
    rng = np.random.default_rng(seed)
    f = ensembles.gaussian_field(G, d, rng, block_level=block_level)
    assert np.all(f.values.sum(axis=0) == 0)
    g = ensembles.cell_gaussian_field(G, d, rng)
    assert np.all(g.values.sum(axis=0) == 0)
    q = ensembles.QUANTUM
    assert np.all(np.round(f.values.real / q) * q == f.values.real)


@given(seeds)
def test_martingale_field_bounds(seed):
    f = ensembles.martingale_field(G, 2, np.random.default_rng(seed), bound=0.5)
    levels = range(-G.J, 3 + 1)
    e = [dyadic.cond_exp(f, dyadic.Filtration.D, n) for n in levels]
    for lo, hi in zip(e, e[1:]):
        assert matcore.op_norm(hi.values - lo.values).max() <= 0.5
    assert np.all(f.values.sum(axis=0) == 0)
    z = ensembles.martingale_field(G, 2, np.random.default_rng(seed), bound=0.0)
    assert not np.any(z.values)


def test_psd_and_hermitian_fields():
    rng = np.random.default_rng(0)
    p = ensembles.psd_field(G, 3, rng, block_level=1, rank=1)
    w = np.linalg.eigvalsh(p.values)
    assert w.min() >= -1e-12 and np.all(w[:, :-1] <= 1e-12)
    h = ensembles.gaussian_field(G, 2, rng, hermitian=True, mean_zero=False)
    assert np.array_equal(h.values, matcore.adjoint(h.values))


def test_random_atom_is_valid():
    from nchardy.atomdec import validate_atom

    rng = np.random.default_rng(1)
    for _ in range(10):
        a, iv = ensembles.random_atom(G, 2, rng)
        assert validate_atom(a, iv, mean_tol=1e-12).valid


def test_errors():
    with pytest.raises(ValueError):
        ensembles.generate_ensemble("gaussian", G, 2, 0, 0)
    with pytest.raises(ValueError):
        ensembles.generate_ensemble("gaussian", G, 0, 1, 0)
    with pytest.raises(ValueError):
        ensembles.generate_ensemble("pink", G, 1, 1, 0)
    with pytest.raises(ValueError):
        ensembles.block_cells(G, G.K + 1)
    with pytest.raises(ValueError):
        ensembles.martingale_field(G, 1, np.random.default_rng(0), bottom_level=G.K + 1)
