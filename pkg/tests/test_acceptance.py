"""Acceptance battery: twelve numbered criteria, one verdict line each.

Each test prints a single [PASS]/[FAIL] line with the measured quantity
next to its tolerance, then asserts.  Tolerances live next to the checks
they guard; nothing here is tuned to the mesh beyond the stated budgets.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from nonlocal_cvp import (
    DomainSpec,
    alpha_sweep,
    assemble,
    assemble_trace_DK,
    build_mesh,
    build_space,
    dense_reference,
    dtn_assemble,
    dtn_extend,
    dtn_spectral_check,
    eig,
    interpolate,
    l2_omega_error,
    local_reference_1d,
    make_fractional,
    make_peridynamic,
    make_rescaled,
    nonexistence_probe,
    comparability_report,
    pointwise_L,
    pointwise_N,
    solve_dirichlet,
    solve_neumann,
    solve_robin,
    tail_mass,
    trace_quotient_norm,
    v_norm,
)

UNIT = DomainSpec(0.0, 1.0)


def _verdict(capsys, num, label, checks):
    """checks: list of (ok, detail); prints one line and asserts them all."""
    ok = all(c[0] for c in checks)
    detail = "; ".join(c[1] for c in checks)
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} {label}: {detail}"
    with capsys.disabled():
        print(line)
    assert ok, line


@pytest.fixture(scope="module")
def space8():
    return build_space(build_mesh(UNIT, 0.125, truncation_radius=4.0))


@pytest.fixture(scope="module")
def rescaled_system():
    base = make_peridynamic(1, 1.0, 1.5)
    k = make_rescaled(base, 1.5)
    mesh = build_mesh(UNIT, 0.125, support_radius=k.support_radius)
    return assemble(build_space(mesh), k)


def test_criterion_01_oracle_equivalence(space8, capsys):
    """Fast assembly against the adaptive dense oracle, entrywise."""
    checks = []
    for alpha in (0.5, 1.0, 1.5):
        k = make_fractional(1, alpha)
        fast = assemble(space8, k)
        ref = dense_reference(space8, k)
        worst = 0.0
        for name in ("A", "M", "M_tilde", "N_op"):
            F = getattr(fast, name)
            R = getattr(ref, name)
            mask = np.abs(R) > 1e-13 * np.max(np.abs(R))
            if np.any(mask):
                denom = np.maximum(np.abs(F[mask]), np.abs(R[mask]))
                worst = max(worst, float(np.max(np.abs(F[mask] - R[mask]) / denom)))
        checks.append((worst <= 1e-8, f"alpha={alpha} max rel dev {worst:.2e} <= 1e-8"))
    _verdict(capsys, 1, "oracle equivalence", checks)


def test_criterion_02_null_space_and_identity(frac_system, capsys):
    s = frac_system
    n = s.A.shape[0]
    ones = np.ones(n)
    null = np.linalg.norm(s.A @ ones)
    amax = np.max(np.abs(s.A))
    rng = np.random.default_rng(20260816)
    E = s.A - s.G_L - s.N_op
    worst_pair = 0.0
    for _ in range(100):
        u = rng.standard_normal(n)
        v = rng.standard_normal(n)
        worst_pair = max(worst_pair, abs(float(u @ E @ v)))
    # with v = 1 the domain and complement integrals must cancel
    balance = 0.0
    for _ in range(20):
        u = rng.standard_normal(n)
        balance = max(balance, abs(float(ones @ s.G_L @ u) + float(ones @ s.N_op @ u)))
    checks = [
        (null <= 1e-10 * amax, f"|A 1| {null:.2e} <= 1e-10 |A|max {1e-10 * amax:.2e}"),
        (worst_pair <= 1e-9, f"identity residual {worst_pair:.2e} <= 1e-9 on 100 pairs"),
        (balance <= 1e-9, f"v=1 balance {balance:.2e} <= 1e-9"),
    ]
    _verdict(capsys, 2, "null space and integration by parts", checks)


def test_criterion_03_seminorm_sandwich(frac_system, peri_system, rescaled_system, capsys):
    checks = []
    for name, s in (
        ("fractional", frac_system),
        ("peridynamic", peri_system),
        ("rescaled", rescaled_system),
    ):
        rng = np.random.default_rng(99)
        violations = 0
        for _ in range(100):
            v = rng.standard_normal(s.A.shape[0])
            a = float(v @ s.A @ v)
            sq = float(v @ s.S @ v)
            slack = 1e-12 * max(abs(a), abs(sq), 1.0)
            if not (sq <= a + slack and a <= 2.0 * sq + slack):
                violations += 1
        checks.append((violations == 0, f"{name} violations {violations}/100"))
    _verdict(capsys, 3, "seminorm sandwich", checks)


def test_criterion_04_spectra(frac_system, capsys):
    neu = eig(frac_system, "neumann", count=3)
    v0 = neu.vectors[:, 0]
    v0 = v0 / v0[np.argmax(np.abs(v0))]
    const_dev = float(np.max(np.abs(v0 - 1.0)))
    diri = eig(frac_system, "dirichlet", count=2)
    bound = 2.0 * tail_mass(frac_system.kernel, 1.0)
    checks = [
        (abs(neu.values[0]) <= 1e-10, f"mu0 {neu.values[0]:.2e} within 1e-10"),
        (const_dev <= 1e-8, f"constant eigenvector dev {const_dev:.2e}"),
        (neu.values[1] > 0.0, f"mu1 {neu.values[1]:.4f} > 0"),
        (
            diri.values[0] >= bound - 1e-10,
            f"lambda1 {diri.values[0]:.4f} >= 2 tail mass {bound:.4f} - 1e-10",
        ),
    ]
    _verdict(capsys, 4, "spectra", checks)


def test_criterion_05_well_posedness(frac_system, capsys):
    rep = solve_neumann(frac_system, 1.0, 0.0)
    k = frac_system.kernel
    phi = lambda x: math.exp(-4.0 * (x - 0.5) ** 2)
    f_fn = lambda x: pointwise_L(k, phi, x, 1e-3)[1]
    g_fn = lambda y: pointwise_N(k, phi, y, UNIT)
    mean_phi = quad(phi, 0.0, 1.0)[0]
    errs = []
    for h in (1 / 8, 1 / 16, 1 / 32):
        mesh = build_mesh(UNIT, h, truncation_radius=4.0)
        sysm = assemble(build_space(mesh), k)
        r = solve_neumann(sysm, f_fn, g_fn)
        errs.append(
            l2_omega_error(sysm.space, r.coefficients, ref=lambda x: phi(x) - mean_phi)
        )
    checks = [
        (rep.residual <= 1e-9, f"weak residual {rep.residual:.2e} <= 1e-9"),
        (
            abs(rep.compatibility_defect - 1.0) <= 1e-12,
            f"defect {rep.compatibility_defect:.15f} = 1 within 1e-12",
        ),
        (
            errs[0] > errs[1] > errs[2],
            "manufactured L2 decreasing " + " > ".join(f"{e:.2e}" for e in errs),
        ),
    ]
    _verdict(capsys, 5, "well-posedness contracts", checks)


def test_criterion_06_robin_to_dirichlet(frac_system, capsys):
    target = solve_dirichlet(frac_system, 1.0, 0.0).coefficients
    M = frac_system.M
    dists = []
    for beta in (10.0, 1e3, 1e5):
        u = solve_robin(frac_system, 1.0, 0.0, beta).coefficients
        d = u - target
        dists.append(math.sqrt(float(d @ M @ d)))
    ok = dists[0] > dists[1] > dists[2]
    _verdict(
        capsys,
        6,
        "Robin to Dirichlet trend",
        [(ok, "L2 distances " + " > ".join(f"{d:.3e}" for d in dists))],
    )


def test_criterion_07_dtn(frac_system, capsys):
    lam = -1.0
    D = dtn_assemble(frac_system, lam)
    sym = float(np.max(np.abs(D - D.T)))
    rng = np.random.default_rng(7)
    margin = math.inf
    for _ in range(50):
        g = rng.standard_normal(D.shape[0])
        u = dtn_extend(frac_system, lam, g)
        margin = min(margin, float(g @ D @ g) - v_norm(frac_system, u) ** 2)
    fine = assemble(
        build_space(build_mesh(UNIT, 1.0 / 15.0, truncation_radius=4.0)),
        frac_system.kernel,
    )
    n_free = len(fine.space.free_idx)
    spectral = dtn_spectral_check(fine, 1.0)
    checks = [
        (sym <= 1e-11, f"symmetry {sym:.2e} <= 1e-11"),
        (margin >= -1e-9, f"coercivity margin {margin:.3e} >= -1e-9 on 50 traces"),
        (
            spectral["status"] == "PASS" and n_free == 16,
            f"spectral check {spectral['status']} on {n_free} free dofs",
        ),
    ]
    _verdict(capsys, 7, "Dirichlet-to-Neumann map", checks)


def test_criterion_08_alpha_limit(capsys):
    phi = lambda x: math.exp(-4.0 * (x - 0.5) ** 2)
    f = lambda x: 8.0 / math.e
    rows = alpha_sweep(phi, f, alphas=(1.2, 1.5, 1.8, 1.95), h0=0.125,
                       truncation_radius=4.0)
    l2 = [r["l2_error"] for r in rows]
    gg = [r["gauss_green_residual"] for r in rows]
    # the sweep measures errors against the local Neumann solution of
    # -u'' = f with flux data from the derivative of phi at the interface
    step = 1e-5
    dphi0 = (phi(step) - phi(-step)) / (2.0 * step)
    dphi1 = (phi(1.0 + step) - phi(1.0 - step)) / (2.0 * step)
    u_loc = local_reference_1d(f, -dphi0, dphi1)
    norm_loc = math.sqrt(quad(lambda x: u_loc(x) ** 2, 0.0, 1.0)[0])
    checks = [
        (
            all(a > b for a, b in zip(l2, l2[1:])),
            "L2 errors decreasing " + " > ".join(f"{e:.5f}" for e in l2),
        ),
        (
            l2[-1] <= 0.05 * norm_loc,
            f"final {l2[-1]:.5f} <= 0.05 |u_loc| = {0.05 * norm_loc:.5f}",
        ),
        (
            all(a > b for a, b in zip(gg, gg[1:])),
            "boundary-term gaps decreasing " + " > ".join(f"{e:.4f}" for e in gg),
        ),
    ]
    _verdict(capsys, 8, "alpha to 2 transition", checks)


def test_criterion_09_nonexistence_probe(capsys):
    stable = nonexistence_probe(1.0, 0.3)
    norms = [r["v_norm"] for r in stable["rungs"]]
    change = abs(norms[-1] - norms[-2]) / norms[-2]
    divergent = nonexistence_probe(1.0, 0.8)
    ratios = divergent["growth_ratios"]
    checks = [
        (change < 0.10, f"gamma=0.3 last-two change {change:.3%} < 10%"),
        (
            len(ratios) >= 3 and all(r > 1.5 for r in ratios[-3:]),
            "gamma=0.8 growth " + ", ".join(f"{r:.3f}" for r in ratios) + " all > 1.5",
        ),
    ]
    _verdict(capsys, 9, "non-existence probe", checks)


def test_criterion_10_weight_comparability(capsys):
    k = make_fractional(1, 0.5)
    half = np.geomspace(1e-2, 50.0, 24)
    samples = np.concatenate([-half[::-1], half])
    rep = comparability_report(k, (0.0, 1.0), 2.0, samples)
    K = 1.0
    for lo, hi in rep["bands"].values():
        K = max(K, hi, 1.0 / lo)
    profile_ok = all(
        0.0 < lo <= hi < math.inf for lo, hi in rep["profile_bands"].values()
    )
    checks = [
        (rep["status"] == "ok" and math.isfinite(K), f"pairwise band K = {K:.2f} finite"),
        (profile_ok, "every weight within a constant band of (1+|x|)^(-d-alpha)"),
    ]
    _verdict(capsys, 10, "weight comparability", checks)


def test_criterion_11_trace_norm_equivalence(capsys):
    k = make_fractional(1, 1.0)
    bands = []
    for level, h in enumerate((0.125, 0.0625)):
        sysm = assemble(build_space(build_mesh(UNIT, h, truncation_radius=4.0)), k)
        DK = assemble_trace_DK(sysm.space, 1.0)
        rng = np.random.default_rng([11, level])
        ratios = []
        for _ in range(50):
            g = rng.standard_normal(DK.shape[0])
            quot = trace_quotient_norm(sysm, g)
            dk = math.sqrt(float(g @ DK @ g))
            ratios.append(quot / dk)
        bands.append((min(ratios), max(ratios)))
    lo_factor = max(bands[0][0], bands[1][0]) / min(bands[0][0], bands[1][0])
    hi_factor = max(bands[0][1], bands[1][1]) / min(bands[0][1], bands[1][1])
    checks = [
        (
            all(0.0 < lo <= hi < math.inf for lo, hi in bands),
            "bands " + ", ".join(f"[{lo:.3f}, {hi:.3f}]" for lo, hi in bands),
        ),
        (
            lo_factor < 2.0 and hi_factor < 2.0,
            f"endpoint drift x{lo_factor:.3f}, x{hi_factor:.3f} < 2 across levels",
        ),
    ]
    _verdict(capsys, 11, "trace norm equivalence", checks)


def test_criterion_12_peridynamic(peri_system, capsys):
    s = peri_system
    k = s.kernel
    n = s.A.shape[0]
    ones = np.ones(n)
    amax = np.max(np.abs(s.A))
    null = np.linalg.norm(s.A @ ones)
    rng = np.random.default_rng(12)
    E = s.A - s.G_L - s.N_op
    worst_pair = 0.0
    balance = 0.0
    for _ in range(100):
        u = rng.standard_normal(n)
        v = rng.standard_normal(n)
        worst_pair = max(worst_pair, abs(float(u @ E @ v)))
        balance = max(balance, abs(float(ones @ s.G_L @ u) + float(ones @ s.N_op @ u)))

    neu = eig(s, "neumann", count=3)
    diri = eig(s, "dirichlet", count=2)
    bound = 2.0 * tail_mass(k, 1.0)

    rep = solve_neumann(s, 1.0, 0.0)
    phi = lambda x: math.exp(-4.0 * (x - 0.5) ** 2)
    f_fn = lambda x: pointwise_L(k, phi, x, 1e-3)[1]
    g_fn = lambda y: pointwise_N(k, phi, y, UNIT)
    mean_phi = quad(phi, 0.0, 1.0)[0]
    errs = []
    for h in (1 / 8, 1 / 16, 1 / 32):
        mesh = build_mesh(UNIT, h, support_radius=k.support_radius)
        sysm = assemble(build_space(mesh), k)
        r = solve_neumann(sysm, f_fn, g_fn)
        errs.append(
            l2_omega_error(sysm.space, r.coefficients, ref=lambda x: phi(x) - mean_phi)
        )

    v = s.space.mesh.vertices
    lo = np.concatenate([[v[0]], v[:-1]])
    hi = np.concatenate([v[1:], [v[-1]]])
    leak = 0.0
    horizon = k.support_radius
    for i in range(n):
        for j in range(n):
            gap = max(lo[i] - hi[j], lo[j] - hi[i])
            if gap >= horizon - 1e-12:
                leak = max(leak, abs(s.A[i, j]))

    checks = [
        (null <= 1e-10 * amax, f"|A 1| {null:.2e} <= 1e-10 |A|max"),
        (worst_pair <= 1e-9, f"identity residual {worst_pair:.2e} <= 1e-9"),
        (balance <= 1e-9, f"v=1 balance {balance:.2e} <= 1e-9"),
        (abs(neu.values[0]) <= 1e-10, f"mu0 {neu.values[0]:.2e}"),
        (neu.values[1] > 0.0, f"mu1 {neu.values[1]:.4f} > 0"),
        (diri.values[0] >= bound - 1e-10, f"lambda1 {diri.values[0]:.4f} >= {bound:.1f}"),
        (rep.residual <= 1e-9, f"weak residual {rep.residual:.2e}"),
        (
            abs(rep.compatibility_defect - 1.0) <= 1e-12,
            f"defect {rep.compatibility_defect:.15f}",
        ),
        (
            errs[0] > errs[1] > errs[2],
            "manufactured L2 " + " > ".join(f"{e:.2e}" for e in errs),
        ),
        (leak == 0.0, f"horizon leak {leak:.1e} (exact zeros beyond the horizon)"),
    ]
    _verdict(capsys, 12, "peridynamic corollaries", checks)