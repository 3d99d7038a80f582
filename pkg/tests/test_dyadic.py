from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nchardy import dyadic, ensembles, matcore
from nchardy.dyadic import Filtration
from nchardy.gridfn import GridSpec, MatrixField, RatInterval, interval_cells

G = GridSpec(1, 4)
seeds = st.integers(0, 2**32 - 1)
filts = st.sampled_from([Filtration.D, Filtration.DPRIME])
rationals = st.fractions(min_value=-8, max_value=8, max_denominator=10**6)


def test_atom_at_examples():
    a = dyadic.atom_at(Filtration.D, 1, Fraction(3, 10))
    assert a.k == 0 and a.interval == RatInterval(0, Fraction(1, 2))
    b = dyadic.atom_at(Filtration.DPRIME, 4, Fraction(1, 4))
    assert b.k == 3 and b.interval == RatInterval(Fraction(10, 48), Fraction(13, 48))
    # right endpoints belong to the atom
    assert dyadic.atom_at(Filtration.D, 0, 1).interval == RatInterval(0, 1)
    with pytest.raises(ValueError):
        dyadic.atom_at(Filtration.D, 41, 0)


@given(filts, st.integers(-6, 12), rationals)
def test_atom_contains_point_and_nests(filt, n, t):
    a = dyadic.atom_at(filt, n, t)
    iv = a.interval
    assert iv.lo < t <= iv.hi and iv.length == Fraction(2) ** -n
    parent = dyadic.atom_at(filt, n - 1, t).interval
    if filt == Filtration.D:
        assert parent.contains(iv)


def test_cover_examples():
    a = dyadic.cover(RatInterval(Fraction(2, 5), Fraction(1, 2)))
    assert a.n == 1 and a.interval.contains(RatInterval(Fraction(2, 5), Fraction(1, 2)))
    iv = RatInterval(Fraction(6, 25), Fraction(13, 50))
    b = dyadic.cover(iv)
    assert b.n == 4 and b.filtration == Filtration.DPRIME
    assert b.interval == RatInterval(Fraction(10, 48), Fraction(13, 48))
    with pytest.raises(ValueError):
        dyadic.cover_level(Fraction(0))


@given(rationals, st.fractions(min_value=Fraction(1, 10**5), max_value=6, max_denominator=10**6))
def test_cover_contains_with_factor_six(lo, length):
    iv = RatInterval(lo, lo + length)
    a = dyadic.cover(iv)
    assert a.interval.contains(iv) and a.length <= 6 * iv.length


def test_exhaustive_cover_and_separation():
    rep = dyadic.exhaustive_cover_check(G)
    assert rep["failures"] == 0 and rep["worst_ratio"] <= 6
    assert rep["intervals"] == G.n_cells * (G.n_cells + 1) // 2
    assert rep["dprime_even_levels"] > 0 and rep["dprime_odd_levels"] > 0
    assert all(v["ok"] for v in dyadic.separation_check(G).values())


def test_cover_coords_match_fraction_cover():
    rng = np.random.default_rng(0)
    a = rng.integers(0, G.n_cells, 200)
    b = np.minimum(a + rng.integers(1, G.n_cells, 200), G.n_cells)
    N, _, lo, hi = dyadic.cover_coords(G, a, b)
    for i in range(a.size):
        ref = dyadic.cover(RatInterval(G.point(int(a[i])), G.point(int(b[i]))))
        assert N[i] == ref.n
        got = RatInterval(G.point(int(lo[i])), G.point(int(hi[i])))
        assert got.contains(RatInterval(G.point(int(a[i])), G.point(int(b[i]))))


def test_cond_exp_examples():
    f = MatrixField.indicator(G, RatInterval(0, Fraction(1, 2)), [[1.0]])
    e = dyadic.cond_exp(f, Filtration.D, 0)
    a, b = interval_cells(G, RatInterval(0, 1))
    assert np.all(e.values[a:b, 0, 0] == 0.5)
    c = MatrixField.constant(G, [[1.0, 2.0], [0.0, -3j]])
    assert np.array_equal(dyadic.cond_exp(c, Filtration.D, 2).values, c.values)
    _, partial = dyadic.cond_exp(c, Filtration.DPRIME, -1, return_flags=True)
    assert partial


def full_atom_cells(filt, n):
    """Mask of cells whose level-n atom lies inside W (cut-off atoms see f = 0 outside)."""
    s = dyadic.atom_cells(G, n)
    lo, _ = dyadic.atom_bounds(G, filt, n, dyadic.cell_atom_ids(G, filt, n))
    return (lo >= 0) & (lo + s <= G.n_cells)


@given(seeds, filts, st.integers(-1, 4))
def test_cond_exp_idempotent_and_positive(seed, filt, n):
    rng = np.random.default_rng(seed)
    f = ensembles.cell_gaussian_field(G, 2, rng, mean_zero=False)
    e = dyadic.cond_exp(f, filt, n)
    m = full_atom_cells(filt, n)
    assert np.allclose(dyadic.cond_exp(e, filt, n).values[m], e.values[m], atol=1e-14)
    p = MatrixField(G, matcore.random_psd(rng, 2, (G.n_cells,)))
    ep = dyadic.cond_exp(p, filt, n).values
    assert np.linalg.eigvalsh(ep).min() >= -1e-12


@given(seeds, filts, st.integers(-1, 4), st.integers(-1, 4))
def test_tower_property(seed, filt, n, m):
    f = ensembles.cell_gaussian_field(G, 2, np.random.default_rng(seed), mean_zero=False)
    a = dyadic.cond_exp(dyadic.cond_exp(f, filt, n), filt, m)
    b = dyadic.cond_exp(f, filt, min(n, m))
    if filt == Filtration.DPRIME:
        # D' is a filtration: the coarser atom is a union of finer ones
        mask = full_atom_cells(filt, min(n, m))
    else:
        mask = slice(None)
    assert np.allclose(a.values[mask], b.values[mask], atol=1e-14)


@given(seeds, st.integers(-1, 4))
def test_trace_preserved(seed, n):
    f = ensembles.cell_gaussian_field(G, 2, np.random.default_rng(seed), mean_zero=False)
    e = dyadic.cond_exp(f, Filtration.D, n)
    assert np.allclose(e.values.sum(axis=0), f.values.sum(axis=0), atol=1e-11)


@settings(max_examples=20)
@given(seeds)
def test_martingale_differences(seed):
    filt = Filtration.D
    f = ensembles.cell_gaussian_field(G, 2, np.random.default_rng(seed), mean_zero=False)
    e0, diffs = dyadic.martingale_differences(f, filt, (-1, G.K))
    total = e0.values + sum(d.values for d in diffs)
    assert np.allclose(total, dyadic.cond_exp(f, filt, G.K).values, atol=1e-12)
    for i in range(len(diffs)):
        for j in range(i):
            cross = np.einsum("kji,kjl->il", diffs[i].values.conj(), diffs[j].values) * G.h
            assert np.abs(cross).max() <= 1e-12
    with pytest.raises(ValueError):
        dyadic.martingale_differences(f, filt, (2, 1))


@given(seeds, filts)
def test_dyadic_bmo_scalar_oracle(seed, filt):
    f = MatrixField(G, ensembles.cell_gaussian_field(G, 1, np.random.default_rng(seed)).values.real.astype(complex))
    rep = dyadic.dyadic_bmo_q_norm(f, np.inf, filt)
    assert rep.value == pytest.approx(oracles.scalar_dyadic_bmo(f, filt == Filtration.DPRIME), rel=1e-10)


@given(seeds, filts)
def test_dyadic_bmo_inf_is_atom_sup(seed, filt):
    f = ensembles.cell_gaussian_field(G, 2, np.random.default_rng(seed))
    rep = dyadic.dyadic_bmo_q_norm(f, np.inf, filt)
    best = 0.0
    for n in dyadic.levels_inside(G):
        _, _, vals = dyadic.atom_sharp_values(f, filt, n)
        if len(vals):
            best = max(best, float(np.linalg.eigvalsh(vals)[:, -1].max()))
    assert rep.value == pytest.approx(np.sqrt(best), rel=1e-12)


def test_dyadic_bmo_finite_q_bounds():
    f = ensembles.gaussian_field(G, 2, np.random.default_rng(4), block_level=1)
    rep = dyadic.dyadic_bmo_q_norm(f, 4.0, Filtration.D)
    assert 0 <= rep.lower <= rep.upper * (1 + 1e-12)
    # the sup is below (sup norm) 1, whose L^2 norm over W carries the factor (d |W|)^(1/2)
    cap = dyadic.dyadic_bmo_q_norm(f, np.inf, Filtration.D).value * (f.d * 2 ** (G.J + 1)) ** 0.25
    assert rep.upper <= cap * (1 + 1e-9)
