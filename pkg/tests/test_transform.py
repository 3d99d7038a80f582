import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nchardy import ensembles, squarefn, transform
from nchardy.gridfn import GridSpec, MatrixField, RatInterval

G = GridSpec(1, 4)
seeds = st.integers(0, 2**32 - 1)


def haar(grid):
    one = [[1.0]]
    return MatrixField.indicator(grid, RatInterval(0, 1), one) - MatrixField.indicator(grid, RatInterval(-1, 0), one)


def test_phi_embed_zero_and_linear():
    z = transform.phi_embed(MatrixField.zeros(G, 2))
    assert not np.any(z.values)
    rng = np.random.default_rng(0)
    f, g = ensembles.gaussian_field(G, 2, rng), ensembles.gaussian_field(G, 2, rng)
    a = transform.phi_embed(f * 2.0 + g * 1j).values
    b = 2 * transform.phi_embed(f).values + 1j * transform.phi_embed(g).values
    assert np.allclose(a, b, atol=1e-12)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_embedding_norm_is_hardy_norm(p):
    f = ensembles.gaussian_field(G, 2, np.random.default_rng(1))
    assert transform.phi_embed(f).norm(p) == pytest.approx(squarefn.hardy_norm(f, p), rel=1e-12)


def test_cone_field_shape_checks():
    h = transform.phi_embed(ensembles.gaussian_field(G, 1, np.random.default_rng(2)))
    with pytest.raises(ValueError):
        transform.ConeField(h.net, h.tgrid, h.grid, h.values[:-1])
    bad = h.values.copy()
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        transform.ConeField(h.net, h.tgrid, h.grid, bad)
    assert h.inner(h).real == pytest.approx(h.norm(2) ** 2, rel=1e-12)
    assert h.sup_mixed_norm() >= h.norm(2) / np.sqrt(2 * float(h.tgrid.half_width)) * (1 - 1e-12)


@settings(max_examples=10)
@given(seeds)
def test_phi_adjoint_is_exact(seed):
    rng = np.random.default_rng(seed)
    op = transform.operator_for(G)
    f = ensembles.cell_gaussian_field(G, 2, rng, mean_zero=False)
    pf = op.phi(f.values)
    h = rng.standard_normal(pf.shape) + 1j * rng.standard_normal(pf.shape)
    lhs = np.real(np.vdot(pf, h))
    rhs = np.real(np.vdot(f.values, op.phi_adjoint(h)))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_psiphi_haar_reproduces_and_improves():
    f = haar(G)
    e1 = transform.psiphi_identity_error(f, refine=1)
    e2 = transform.psiphi_identity_error(f, refine=2)
    assert e2 < e1 <= 0.05
    assert transform.psiphi_identity_error(MatrixField.zeros(G, 2)) == 0.0
    with pytest.raises(ValueError):
        transform.psiphi_identity_error(MatrixField.constant(G, [[1.0]]))


@settings(max_examples=5)
@given(seeds)
def test_psiphi_matrix_fields(seed):
    # blocks of a few cells keep the jumps resolved on this small grid
    f = ensembles.gaussian_field(G, 3, np.random.default_rng(seed), block_level=1)
    assert transform.psiphi_identity_error(f) <= 0.05


def test_block_basis_matches_direct():
    op = transform.operator_for(G)
    basis = transform.psiphi_block_basis(op, 12)
    f = ensembles.gaussian_field(G, 2, np.random.default_rng(3), block_level=1)
    got = transform.psiphi_blocks(basis, f).values
    assert np.allclose(got, transform.psiphi(f).values, atol=1e-13)
    with pytest.raises(ValueError):
        transform.psiphi_blocks(basis, ensembles.cell_gaussian_field(G, 2, np.random.default_rng(0)))
    with pytest.raises(ValueError):
        transform.psiphi_block_basis(op, 7)


def test_hilbert_symbol_and_square():
    n = G.n_cells
    sym = transform.hilbert_symbol(n)
    assert sym[0] == 0 and np.all(np.abs(sym[1:]) == 1)
    assert sym[n // 2] == 1j  # Nyquist bin treated as negative
    f = ensembles.cell_gaussian_field(G, 2, np.random.default_rng(4))
    hh = transform.multiplier_apply(transform.multiplier_apply(f, "hilbert"), "hilbert")
    assert np.allclose(hh.values, -f.values, atol=1e-12)
    one = transform.multiplier_apply(f, lambda k: np.ones(k.size))
    assert np.allclose(one.values, f.values, atol=1e-13)
    with pytest.raises(ValueError):
        transform.multiplier_apply(f, "riesz")
    with pytest.raises(ValueError):
        transform.multiplier_apply(f, np.ones(5))


def test_hilbert_kernel_closed_form():
    n = G.n_cells
    e = np.zeros((n, 1, 1), complex)
    e[0] = 1
    k = transform.multiplier_apply(MatrixField(G, e), "hilbert").values[:, 0, 0]
    assert np.allclose(k, transform.hilbert_kernel(n), atol=1e-13)
    with pytest.raises(ValueError):
        transform.hilbert_kernel(7)


def test_square_wave_approaches_continuum():
    errs = []
    for K in (4, 6):
        g = GridSpec(1, K)
        th = 2 * np.pi * g.centers() / 4
        f = MatrixField(g, np.sign(np.sin(th))[:, None, None].astype(complex))
        hf = transform.multiplier_apply(f, "hilbert").values[:, 0, 0]
        away = np.abs(np.sin(th)) > 0.2
        errs.append(np.abs(hf - oracles.square_wave_hilbert(th))[away].max())
    assert errs[1] < errs[0] and errs[1] < 0.02


def test_load_symbol(tmp_path):
    n = 8
    sym = transform.hilbert_symbol(n)
    lines = ["# hilbert"] + [f"{k} {sym[k].real} {sym[k].imag}" for k in range(n // 2)]
    lines += [f"{k - n} {complex(sym[k])}".replace("j", "i") for k in range(n // 2, n)]
    p = tmp_path / "h.sym"
    p.write_text("\n".join(lines) + "\n")
    assert np.array_equal(transform.load_symbol(p, n), sym)
    p.write_text("0 1\n")
    with pytest.raises(ValueError):
        transform.load_symbol(p, n)
    p.write_text("0 1 2 3\n")
    with pytest.raises(ValueError):
        transform.load_symbol(p, n)
    p.write_text("\n".join(f"{k} 1" for k in range(n + 1)))
    with pytest.raises(ValueError):
        transform.load_symbol(p, n)


def test_duality_harness():
    rng = np.random.default_rng(5)
    f = ensembles.gaussian_field(G, 2, rng)
    c = MatrixField.constant(G, np.eye(2))
    assert transform.duality_constant_harness([(c, f)])["max"] == 0.0
    phi = ensembles.gaussian_field(G, 2, rng, mean_zero=False)
    a = transform.duality_constant_harness([(phi, f)])["max"]
    b = transform.duality_constant_harness([(phi * 2.0, f * 3.0)])["max"]
    assert 0 < a and b == pytest.approx(a, rel=1e-10)
    with pytest.raises(ValueError):
        transform.duality_constant_harness([])
