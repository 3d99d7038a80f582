"""Experiment suites: each returns a SuiteResult with reports and a pass flag."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
import numpy as np

from . import bmo, dyadic, ensembles, halfplane, matcore, maximal, squarefn, transform
from .atomdec import atom_hardy_norm, decompose, reconstruct
from .gridfn import GridSpec, MatrixField, l2_norm_sq
from .nets import cone_net
from .reports import NormReport

DEFAULT_TOLS = {
    "green": 0.02,
    "domination": 1e-9,
    "lemma25": 1e-3,
    "psiphi": 0.05,
    "hansen": 1e-9,
    "reconstruct": 1e-12,
    "stability": 10.0,
}
DIMS = (1, 2, 4)


@dataclass
class SuiteResult:
    suite: str
    passed: bool
    reports: list[NormReport]
    details: dict = field(default_factory=dict)
    seconds: float = 0.0


@dataclass
class SuiteParams:
    d: int = 2
    J: int = 1
    K: int = 6
    seed: int = 0
    cone_refine: int = 1
    ensemble: int = 100
    tol: dict = field(default_factory=dict)

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.J, self.K)

    def t(self, name: str) -> float:
        return float(self.tol.get(name, DEFAULT_TOLS[name]))


def _meta(p: SuiteParams, **extra) -> dict:
    m = {"seed": p.seed, "J": p.J, "K": p.K, "d": p.d, "ensemble": p.ensemble, "cone_refine": p.cone_refine}
    m.update(extra)
    return m


def _dims(p: SuiteParams, i: int, dims=None) -> int:
    return p.d if dims is None else dims[i % len(dims)]


# individual suites ------------------------------------------------------

def run_green(p: SuiteParams, dims=None) -> SuiteResult:
    tol = p.t("green")
    errs, est = [], []
    net = None
    for i in range(p.ensemble):
        d = _dims(p, i, dims)
        f = ensembles.gaussian_field(p.grid, d, ensembles.member_rng(p.seed, i))
        rep = halfplane.green_report(f, _hp_net(p))
        errs.append(rep["rel_error"])
        est.append(rep["strip_estimate"] / rep["l2sq"])
        net = rep["net"]
    errs = np.array(errs)
    reports = [
        NormReport.quad("green_max_rel_error", errs.max(), tol, _meta(p, net=net)),
        NormReport.quad("green_mean_rel_error", errs.mean(), tol, _meta(p, net=net)),
        NormReport.exact("green_strip_below_ymin_max", max(est), meta=_meta(p)),
    ]
    return SuiteResult("green", bool(errs.max() <= tol), reports, {"errors": errs})


def _hp_net(p: SuiteParams):
    from .nets import halfplane_net

    return halfplane_net(p.J, p.K, p.cone_refine)


def run_cover(p: SuiteParams) -> SuiteResult:
    grid = p.grid
    r = dyadic.exhaustive_cover_check(grid)
    sep = dyadic.separation_check(grid)
    sep_ok = all(v["ok"] for v in sep.values())
    reports = [
        NormReport.exact("cover_intervals", r["intervals"], meta=_meta(p)),
        NormReport.exact("cover_failures", r["failures"], meta=_meta(p)),
        NormReport.exact("cover_dprime_used", r["dprime_used"], meta=_meta(p, even=r["dprime_even_levels"],
                                                                          odd=r["dprime_odd_levels"])),
        NormReport.exact("cover_worst_length_ratio", r["worst_ratio"], meta=_meta(p)),
        NormReport.exact("separation_failures", sum(not v["ok"] for v in sep.values()), meta=_meta(p)),
    ]
    return SuiteResult("cover", r["failures"] == 0 and sep_ok, reports, {"cover": r, "separation": sep})


def domination_windows(grid: GridSpec, count: int = 12) -> list[maximal.AvgWindow]:
    """A fixed spread of grid-aligned windows, from one cell to half the window."""
    cw = grid.cell_width
    n = grid.n_cells
    sides = [(1, 1), (1, 2), (2, 5), (3, 3), (7, 1), (10, 20), (24, 24), (31, 17), (50, 77), (96, 96),
             (200, 100), (n // 4, n // 4)]
    out = []
    for a, b in sides[:count]:
        a, b = max(1, min(a, n)), max(1, min(b, n))
        out.append(maximal.AvgWindow(a * cw, b * cw))
    return out


def run_domination(p: SuiteParams, dims=None) -> SuiteResult:
    tol = p.t("domination")
    windows = domination_windows(p.grid)
    worst, fails = np.inf, 0
    for i in range(p.ensemble):
        d = _dims(p, i, dims)
        rng = ensembles.member_rng(p.seed, i)
        bl = [None, p.K - 1, p.K - 3][i % 3]
        f = ensembles.psd_field(p.grid, d, rng, block_level=bl, rank=1 + i % d)
        for w in windows:
            ok, slack = maximal.domination_check(f, w, tol)
            worst = min(worst, slack)
            fails += not ok
    reports = [
        NormReport.exact("domination_min_slack", worst, meta=_meta(p, windows=len(windows))),
        NormReport.exact("domination_failures", fails, meta=_meta(p, checks=p.ensemble * len(windows))),
    ]
    return SuiteResult("domination", fails == 0, reports, {"min_slack": worst})


def lemma25_levels(grid: GridSpec) -> list[float]:
    return [2.0**k for k in range(-3, grid.J + 1)]


def run_lemma25(p: SuiteParams, dims=None) -> SuiteResult:
    """G^2(f)(x, y) <= 8 S^2(f)(x, y/2) + eps at every cell center x."""
    rel = p.t("lemma25")
    worst, fails = np.inf, 0
    for i in range(p.ensemble):
        d = _dims(p, i, dims)
        f = ensembles.gaussian_field(p.grid, d, ensembles.member_rng(p.seed, i))
        for y in lemma25_levels(p.grid):
            g2 = squarefn.g_integral(f, "c", y).values
            cone = cone_net(p.J, p.K, p.cone_refine, y / 2)
            s2 = squarefn.area_integral(f, "c", y / 2, cone).values
            rhs = 8 * s2
            eps = rel * float(np.max(np.real(matcore.trace(rhs))))
            slack = matcore.loewner_slack(g2, rhs + eps * np.eye(d)).min()
            worst = min(worst, slack / max(eps, 1e-300))
            fails += slack < 0
    reports = [
        NormReport.exact("lemma25_min_slack_over_eps", worst, provenance="quadrature",
                         tol=rel, meta=_meta(p, levels=lemma25_levels(p.grid))),
        NormReport.exact("lemma25_failures", fails, meta=_meta(p)),
    ]
    return SuiteResult("lemma25", fails == 0, reports, {"min_slack_over_eps": worst})


def run_carleson(p: SuiteParams, dims=None) -> SuiteResult:
    ratios = []
    for i in range(p.ensemble):
        d = _dims(p, i, dims)
        phi = ensembles.martingale_field(p.grid, d, ensembles.member_rng(p.seed, i))
        b2 = bmo.bmo_norm(phi).value ** 2
        n = bmo.carleson_sup(phi, "dyadic", p.cone_refine).value
        ratios.append((n / b2, b2 / n))
    r = np.array(ratios)
    ok = bool(np.all(np.isfinite(r)) and np.all(r > 0))
    reports = [
        NormReport.exact("carleson_over_bmo2_max", r[:, 0].max(), provenance="quadrature", meta=_meta(p)),
        NormReport.exact("bmo2_over_carleson_max", r[:, 1].max(), provenance="quadrature", meta=_meta(p)),
    ]
    return SuiteResult("carleson", ok, reports, {"ratios": r})


def run_bmo_intersection(p: SuiteParams, dims=None) -> SuiteResult:
    fails_trivial = fails_reverse = 0
    worst = 0.0
    for i in range(p.ensemble):
        d = _dims(p, i, dims)
        rng = ensembles.member_rng(p.seed, i)
        if i % 2 == 0:
            phi = ensembles.martingale_field(p.grid, d, rng, bottom_level=min(p.K, 2 + i % 5))
        else:
            phi = ensembles.gaussian_field(p.grid, d, rng, block_level=min(p.K, 1 + i % 6), mean_zero=False)
        full = bmo.bmo_norm(phi).value
        dy = bmo.bmo_norm(phi, mode="dyadic").lower
        fails_trivial += dy > full
        fails_reverse += full > bmo.REVERSE_CONSTANT * dy
        if dy > 0:
            worst = max(worst, full / dy)
    reports = [
        NormReport.exact("bmo_trivial_failures", fails_trivial, meta=_meta(p)),
        NormReport.exact("bmo_reverse_failures", fails_reverse, meta=_meta(p, constant=bmo.REVERSE_CONSTANT)),
        NormReport.exact("bmo_full_over_dyadic_max", worst, meta=_meta(p)),
    ]
    return SuiteResult("bmo-intersection", fails_trivial == 0 and fails_reverse == 0, reports, {"worst": worst})


def _stable(values: dict, factor: float) -> tuple[bool, float]:
    v = np.array(list(values.values()), float)
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        return False, np.inf
    spread = float(v.max() / v.min())
    return spread <= factor, spread


def run_duality(p: SuiteParams, dims=DIMS) -> SuiteResult:
    per_d = max(1, p.ensemble // len(dims))
    h1, hq = {}, {}
    for d in dims:
        # aligned pairs f = phi come close to the pairing bound; independent
        # pairs mostly measure cancellation, which shrinks with d
        pairs = []
        for i in range(per_d):
            phi = ensembles.martingale_field(p.grid, d, ensembles.member_rng(p.seed, 1000 * d + i))
            pairs.append((phi, phi))
        h1[d] = transform.duality_constant_harness(pairs, refine=p.cone_refine)["max"]
        hq[d] = transform.duality_constant_harness(pairs, q=3.0, p_hardy=1.5, refine=p.cone_refine)["max"]
    f1 = p.t("stability")
    ok1, s1 = _stable(h1, f1)
    ok2, s2 = _stable(hq, f1)
    reports = [NormReport.exact(f"duality_h1_max_ratio_d{d}", v, provenance="quadrature", meta=_meta(p, d=d))
               for d, v in h1.items()]
    reports += [NormReport.exact(f"duality_p1.5_max_ratio_d{d}", v, provenance="quadrature", meta=_meta(p, d=d))
                for d, v in hq.items()]
    reports += [NormReport.exact("duality_h1_spread", s1, meta=_meta(p)),
                NormReport.exact("duality_p1.5_spread", s2, meta=_meta(p))]
    return SuiteResult("duality", ok1 and ok2, reports, {"h1": h1, "hq": hq})


def run_atoms(p: SuiteParams, dims=None, norm_samples: int = 10) -> SuiteResult:
    tol = p.t("reconstruct")
    worst_rec, invalid, count, ratios = 0.0, 0, 0, []
    for i in range(p.ensemble):
        d = _dims(p, i, dims)
        rng = ensembles.member_rng(p.seed, i)
        f = ensembles.gaussian_field(p.grid, d, rng, block_level=int(rng.integers(0, p.K + 1)))
        terms = decompose(f)
        rec = reconstruct(terms, f)
        again = reconstruct(decompose(f), f)
        if not np.array_equal(rec.values, again.values):
            invalid += 1
        err = np.sqrt(l2_norm_sq(rec - f) / max(l2_norm_sq(f), 1e-300))
        worst_rec = max(worst_rec, err)
        invalid += sum(not t.cert.valid for t in terms)
        count += len(terms)
        if i < norm_samples:
            hn = squarefn.hardy_norm(f, 1.0, "c", squarefn.default_cone(f, p.cone_refine))
            ratios.append(sum(abs(t.lam) for t in terms) / hn)
    norms = []
    for i in range(norm_samples):
        a = ensembles.random_atom(p.grid, _dims(p, i, dims), ensembles.member_rng(p.seed + 7, i))[0]
        norms.append(atom_hardy_norm(a, p.cone_refine))
    reports = [
        NormReport.exact("atoms_reconstruction_rel_error", worst_rec, tol=tol, meta=_meta(p)),
        NormReport.exact("atoms_invalid", invalid, meta=_meta(p, atoms=count)),
    ]
    if ratios:
        reports += [
            NormReport.exact("atoms_lambda_over_h1_max", max(ratios), provenance="quadrature", meta=_meta(p)),
            NormReport.exact("atom_h1_norm_max", max(norms), provenance="quadrature", meta=_meta(p)),
        ]
    return SuiteResult("atoms", invalid == 0 and worst_rec <= tol, reports,
                       {"atoms": count, "ratios": ratios, "atom_norms": norms})


def run_psiphi(p: SuiteParams, dims=None, block_level: int = 2) -> SuiteResult:
    """Psi Phi = id on block fields, through the precomputed block responses."""
    tol = p.t("psiphi")
    block = ensembles.block_cells(p.grid, block_level)
    ops = [transform.operator_for(p.grid, None, 1, p.cone_refine + k) for k in (0, 1)]
    bases = [transform.psiphi_block_basis(op, block) for op in ops]
    e1, e2 = [], []
    for i in range(p.ensemble):
        d = _dims(p, i, dims)
        f = ensembles.gaussian_field(p.grid, d, ensembles.member_rng(p.seed, i), block_level=block_level)
        nf = np.sqrt(l2_norm_sq(f))
        e1.append(np.sqrt(l2_norm_sq(transform.psiphi_blocks(bases[0], f) - f)) / nf)
        e2.append(np.sqrt(l2_norm_sq(transform.psiphi_blocks(bases[1], f) - f)) / nf)
    e1, e2 = np.array(e1), np.array(e2)
    ok = bool(e1.max() <= tol and np.all(e2 < e1))
    reports = [
        NormReport.quad("psiphi_max_error", e1.max(), tol, _meta(p, net=ops[0].cone.describe())),
        NormReport.quad("psiphi_max_error_refined", e2.max(), tol, _meta(p, net=ops[1].cone.describe())),
        NormReport.exact("psiphi_not_decreasing", int(np.sum(e2 >= e1)), meta=_meta(p)),
    ]
    return SuiteResult("psiphi", ok, reports, {"coarse": e1, "refined": e2})


def run_sg_equivalence(p: SuiteParams, dims=DIMS, ps=(1.0, 1.5, 2.0, 3.0)) -> SuiteResult:
    per_d = max(1, p.ensemble // len(dims))
    consts = {}
    for d in dims:
        lo, hi = np.inf, 0.0
        for i in range(per_d):
            f = ensembles.gaussian_field(p.grid, d, ensembles.member_rng(p.seed, 1000 * d + i))
            tg = squarefn.t_grid(p.grid, 1)
            s2 = squarefn.area_integral(f, "c", 0.0, squarefn.default_cone(f, p.cone_refine), tg)
            g2 = squarefn.g_integral(f, "c", tgrid=tg)
            for q in ps:
                r = s2.norm(q) / g2.norm(q)
                lo, hi = min(lo, r), max(hi, r)
        consts[d] = max(hi, 1 / lo)
    ok, spread = _stable(consts, p.t("stability"))
    reports = [NormReport.exact(f"sg_constant_d{d}", c, provenance="quadrature", meta=_meta(p, d=d, p_values=ps))
               for d, c in consts.items()]
    reports.append(NormReport.exact("sg_spread", spread, meta=_meta(p)))
    return SuiteResult("sg-equivalence", ok, reports, {"constants": consts})


def convexity_check(rng: np.random.Generator, d: int, tol: float) -> bool:
    """|sum mu_k f_k|^2 <= (sum mu_k) sum mu_k |f_k|^2 for random matrices and weights."""
    m = int(rng.integers(1, 6))
    mu = rng.uniform(0.0, 1.0, size=m)
    fs = matcore.random_matrix(rng, d, (m,))
    s = np.einsum("k,kij->ij", mu, fs)
    lhs = matcore.adjoint(s) @ s
    rhs = mu.sum() * np.einsum("k,kji,kjl->il", mu, fs.conj(), fs)
    scale = max(1.0, np.abs(rhs).max())
    return matcore.loewner_leq(lhs, rhs, tol=tol * scale)


def hansen_check(rng: np.random.Generator, d: int, tol: float) -> bool:
    a = matcore.random_psd(rng, d)
    b = matcore.random_contraction(rng, d)
    q = float(rng.uniform(1.0, 4.0))
    lhs, rhs = matcore.hansen_transform_bound(a, b, q)
    scale = max(1.0, np.abs(rhs).max())
    return matcore.loewner_leq(lhs, rhs, tol=tol * scale)


def run_hansen(p: SuiteParams, checks: int = 1000) -> SuiteResult:
    tol = p.t("hansen")
    rng = ensembles.member_rng(p.seed, 0)
    conv_fail = sum(not convexity_check(rng, 1 + k % 4, tol) for k in range(checks))
    hans_fail = sum(not hansen_check(rng, 1 + k % 4, tol) for k in range(checks))
    reports = [
        NormReport.exact("convexity_failures", conv_fail, tol=tol, meta=_meta(p, checks=checks)),
        NormReport.exact("hansen_failures", hans_fail, tol=tol, meta=_meta(p, checks=checks)),
    ]
    return SuiteResult("hansen", conv_fail == 0 and hans_fail == 0, reports)


def square_wave(grid: GridSpec) -> MatrixField:
    """sign(sin(pi x / 2^J)) on W as a 1 x 1 field (mean zero)."""
    c = grid.centers()
    return MatrixField(grid, np.sign(np.sin(np.pi * c / 2.0**grid.J))[:, None, None])


def run_multiplier(p: SuiteParams, dims=None) -> SuiteResult:
    grid = p.grid
    n = grid.n_cells
    f0 = square_wave(grid)
    h = transform.multiplier_apply(f0, "hilbert").values[:, 0, 0]
    ker = transform.hilbert_kernel(n)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    direct = ker[idx] @ f0.values[:, 0, 0]
    kernel_err = float(np.abs(h - direct).max())
    worst_id = worst_hh = 0.0
    ratios = []
    for i in range(min(p.ensemble, 20)):
        d = _dims(p, i, dims)
        rng = ensembles.member_rng(p.seed, i)
        f = ensembles.gaussian_field(grid, d, rng, mean_zero=False)
        one = transform.multiplier_apply(f, np.ones(n))
        worst_id = max(worst_id, float(np.abs(one.values - f.values).max()))
        hh = transform.multiplier_apply(transform.multiplier_apply(f, "hilbert"), "hilbert")
        target = -(f.values - f.values.mean(axis=0))
        worst_hh = max(worst_hh, float(np.abs(hh.values - target).max()))
        phi = ensembles.martingale_field(grid, d, rng)
        ratios.append(bmo.bmo_norm(transform.multiplier_apply(phi, "hilbert")).value / bmo.bmo_norm(phi).value)
    ok = kernel_err <= 1e-10 and worst_id <= 1e-10 and worst_hh <= 1e-8
    reports = [
        NormReport.exact("hilbert_kernel_max_error", kernel_err, tol=1e-10, meta=_meta(p)),
        NormReport.exact("unit_symbol_max_error", worst_id, tol=1e-10, meta=_meta(p)),
        NormReport.exact("hilbert_squared_max_error", worst_hh, tol=1e-8, meta=_meta(p)),
        NormReport.exact("hilbert_bmo_ratio_max", max(ratios), meta=_meta(p)),
    ]
    return SuiteResult("multiplier", ok, reports)


RUNNERS = {
    "green": run_green,
    "cover": run_cover,
    "domination": run_domination,
    "lemma25": run_lemma25,
    "carleson": run_carleson,
    "bmo-intersection": run_bmo_intersection,
    "duality": run_duality,
    "atoms": run_atoms,
    "psiphi": run_psiphi,
    "sg-equivalence": run_sg_equivalence,
    "hansen": run_hansen,
    "multiplier": run_multiplier,
}
SUITES = tuple(RUNNERS) + ("all",)


def run(name: str, params: SuiteParams) -> list[SuiteResult]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}")
    names = list(RUNNERS) if name == "all" else [name]
    out = []
    for nm in names:
        t0 = time.perf_counter()
        res = RUNNERS[nm](params)
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out
