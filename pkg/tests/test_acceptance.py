"""Acceptance criteria 1-11.

Each check prints one ``criterion N: PASS|FAIL`` line with its measured
values; the lines are repeated in the pytest terminal summary.  Run alone with
``pytest tests/test_acceptance.py -v -s`` or ``python tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from su12hitchin import disksolver, gluing, hermlin, localmodel, painleve, spectral, weights


def _record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_01_painleve():
    start = time.perf_counter()
    sol = painleve.solve_painleve()
    fit = painleve.fit_tail_decay(sol, 5.0, 20.0)
    eta = sol.eta_values
    wall = time.perf_counter() - start
    ok = (
        np.all(sol.psi > 0)
        and np.all(sol.dpsi < 0)
        and sol.residual_max <= 1e-8
        and fit.slope <= -0.9
        and eta.min() >= 0
        and eta.max() <= 0.125
        and wall <= 10
    )
    _record(
        1,
        ok,
        f"residual={sol.residual_max:.2e} tail_slope={fit.slope:.4f} "
        f"eta=[{eta.min():.3e}, {eta.max():.6f}] time={wall:.1f}s",
    )


def test_criterion_02_c0():
    start = time.perf_counter()
    values = []
    for rho_max in (20.0, 40.0, 80.0):
        sol = localmodel.solve_local_model(t=1.0, lam=0.0, rho_max=rho_max)
        values.append(localmodel.extract_c_lambda(sol)[0])
    extrap = localmodel.extrapolate_c(values)
    wall = time.perf_counter() - start
    ok = all(abs(v - 4) <= 0.04 for v in values) and abs(extrap - 4) <= 0.004 and wall <= 60
    _record(2, ok, f"c={['%.10f' % v for v in values]} extrapolated={extrap:.10f} time={wall:.1f}s")


def test_criterion_03_lambda0_closed_form(psol):
    start = time.perf_counter()
    sol = localmodel.solve_local_model(t=1.0, lam=0.0)
    u = np.geomspace(0.05, 20.0, 400)
    m = localmodel.eval_M_lambda(sol, u)
    o = localmodel.lambda0_M_oracle(psol, u)
    err = float(np.max(np.max(np.abs(m - o), axis=(1, 2)) / np.max(np.abs(o), axis=(1, 2))))
    wall = time.perf_counter() - start
    _record(3, err <= 1e-3 and wall <= 60, f"relative_sup_error={err:.3e} time={wall:.1f}s")


def test_criterion_04_scaling_law():
    start = time.perf_counter()
    sol_1 = localmodel.solve_local_model(t=1.0, lam=0.0)
    sol_8 = localmodel.solve_local_model(t=8.0, lam=0.0)
    rng = np.random.default_rng(4)
    rho = np.geomspace(0.01, 5.0, 200)
    zetas = rho * np.exp(2j * np.pi * rng.random(rho.size))
    defect = localmodel.scaling_defect(sol_1, sol_8, zetas)
    wall = time.perf_counter() - start
    _record(4, defect <= 1e-4 and wall <= 120, f"defect={defect:.3e} time={wall:.1f}s")


def test_criterion_05_asymptotic_decay():
    start = time.perf_counter()
    parts, ok = [], True
    for lam in (-0.15, 0.0, 0.1):
        sol = localmodel.solve_local_model(t=1.0, lam=lam)
        fit = localmodel.tail_decay_fit(sol, 5.0, 30.0)
        ok &= fit.slope <= -0.5 and fit.r2 >= 0.98
        parts.append(f"lam={lam:+.2f}:slope={fit.slope:.3f},R2={fit.r2:.4f}")
    wall = time.perf_counter() - start
    _record(5, ok and wall <= 180, " ".join(parts) + f" time={wall:.1f}s")


def test_criterion_06_glued_residual_decay(model0):
    start = time.perf_counter()
    t_list = [4.0, 8.0, 16.0, 32.0]
    r_sweep = gluing.residual_sweep("r", t_list, grid=(256, 16), model=model0)
    g_sweep = gluing.residual_sweep("gamma", t_list, grid=(256, 16))
    wall = time.perf_counter() - start
    ok = r_sweep.slope < 0 and r_sweep.r2 >= 0.99 and g_sweep.slope < 0 and wall <= 300
    _record(
        6,
        ok,
        f"R-type vs t^(2/3): slope={r_sweep.slope:.4f} R2={r_sweep.r2:.4f}; "
        f"gamma-type vs t: slope={g_sweep.slope:.4f} R2={g_sweep.r2:.4f} time={wall:.1f}s",
    )


def test_criterion_07_weight_combinatorics():
    from fractions import Fraction

    start = time.perf_counter()
    checked = mismatches = 0
    for g in (2, 3):
        for d in range(-3 * g, 3 * g + 1):
            surface = weights.SurfaceData(g, d)
            for part in weights.enumerate_partitions(surface):
                checked += 1
                cls = weights.check_stability(surface, part)
                if cls is not weights.stability_by_feasibility(surface, part):
                    mismatches += 1
                if cls is weights.Stability.STABLE:
                    bary = weights.barycenter(surface, part)
                    if sum(bary) != -d or not weights.is_admissible(bary, surface, part):
                        mismatches += 1
                    n_plus = 2 * (g - 1 - d) - part.d_beta
                    if len(weights.polytope_vertices(surface, part)) != math.comb(part.d_r, n_plus):
                        mismatches += 1
    example = weights.barycenter(weights.SurfaceData(2, 0), weights.ZeroPartition(1, 0, 3))
    expected = [Fraction(1, 4)] + [Fraction(-1, 12)] * 3
    wall = time.perf_counter() - start
    ok = mismatches == 0 and list(example) == expected and wall <= 5
    _record(7, ok, f"partitions={checked} mismatches={mismatches} example={example.as_strings()} time={wall:.2f}s")


def test_criterion_08_t_compatible_drift():
    start = time.perf_counter()
    table = localmodel.c_lambda_table(np.linspace(-0.2, 0.2, 9))
    c_interp = weights.CInterpolant.from_table(table)
    surface, partition, psi = weights.load_psi("psi_bounded")
    rows = weights.weight_drift_table([1e2, 1e4, 1e6, 1e8], surface, partition, psi, c_interp)
    prod = np.array([r[2] for r in rows])
    ratio = float(prod.max() / prod.min())
    surface0, partition0, psi0 = weights.load_psi("psi_zero")
    zero = weights.weight_drift_table([1e2, 1e4, 1e6, 1e8], surface0, partition0, psi0, c_interp)
    exact_zero = all(r[1] == 0.0 for r in zero)
    wall = time.perf_counter() - start
    ok = ratio <= 2 and exact_zero and wall <= 120
    _record(8, ok, f"drift*log(t)={np.round(prod, 4).tolist()} ratio={ratio:.3f} psi0_exact={exact_zero} time={wall:.1f}s")


def test_criterion_09_eigenvalue_bound():
    start = time.perf_counter()
    rows = spectral.eigen_table([10.0, 1e2, 1e3, 1e4], n_radial=1024)
    rel = max(abs(sec - fd) / sec for _, sec, fd, _ in rows)
    bounds = spectral.bound_products(np.geomspace(1e2, 1e8, 13))
    wall = time.perf_counter() - start
    ok = (
        rel <= 0.01
        and bounds.lower_product.min() > 0
        and bounds.lower_product.max() / bounds.lower_product.min() < 2
        and bounds.upper_product.max() / bounds.upper_product.min() < 2
        and wall <= 30
    )
    _record(
        9,
        ok,
        f"max_rel_diff={rel:.2e} lambda1*log(t) in [{bounds.lower_product.min():.3f}, {bounds.lower_product.max():.3f}] "
        f"lambda1*loglog(t/2)^2 in [{bounds.upper_product.min():.3f}, {bounds.upper_product.max():.3f}] time={wall:.1f}s",
    )


@pytest.mark.slow
def test_criterion_10_disk_solve():
    start = time.perf_counter()
    model = localmodel.solve_local_model(t=1.0, lam=0.0, n_nodes=disksolver.MODEL_NODES)
    exact = disksolver.seed_field("r", 8.0, "exact", grid=(128, 128), model=model)
    res = disksolver.solve_hitchin_disk(exact, 8.0, tol=1e-8)
    study = disksolver.doubling_study("r", 8.0, grid=(128, 128), tol=1e-8, model=model)
    wall = time.perf_counter() - start
    ok = (
        res.iterations <= 2
        and res.gt_sup_norm <= 1e-8
        and study.final_residual <= 1e-8
        and study.oracle_error <= 5 * study.discretization_error
        and wall <= 600
    )
    _record(
        10,
        ok,
        f"exact seed: iterations={res.iterations} |g-Id|={res.gt_sup_norm:.2e}; glued seed: iterations={study.iterations} "
        f"residual={study.final_residual:.2e} oracle_error={study.oracle_error:.2e} "
        f"doubling_error={study.discretization_error:.2e} ratio={study.ratio:.2f} time={wall:.0f}s",
    )


def _interior_bump(fld):
    s = np.log(fld.rho)
    x = (s - s[0]) / (s[-1] - s[0])
    inside = (x > 0) & (x < 1)
    b = np.zeros_like(x)
    b[inside] = np.exp(-0.25 / (x[inside] * (1 - x[inside])))
    th = fld.theta
    c = np.zeros(fld.shape + (4,))
    c[..., 0] = b[:, None] * (1 + 0.3 * np.cos(th))[None, :]
    c[..., 1] = 0.5 * b[:, None] * np.sin(2 * th)[None, :]
    c[..., 2] = 0.2 * b[:, None]
    c[..., 3] = -0.7 * b[:, None] * np.cos(th)[None, :]
    c[0] = c[-1] = 0.0
    return c


def test_criterion_11_property_suites(model0):
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    n = 10_000
    worst = {"matrest_det": 0.0, "matrest_detA": 0.0, "offdiag": 0.0, "hermcomp0": 0.0}
    for _ in range(n):
        m = rng.uniform(0.1, 10.0)
        a = rng.uniform(-1, 1, (2, 2)) + 1j * rng.uniform(-1, 1, (2, 2))
        a *= m / hermlin.matabs(a)
        e = rng.uniform(-1, 1, (2, 2)) + 1j * rng.uniform(-1, 1, (2, 2))
        e *= m * rng.uniform(1e-6, 1.0) / hermlin.matabs(e)
        r1, r2 = hermlin.matrest_ratios(a, a - e, m)
        worst["matrest_det"] = max(worst["matrest_det"], r1)
        worst["matrest_detA"] = max(worst["matrest_detA"], r2)
        x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        h = x @ x.conj().T + rng.uniform(1e-3, 1.0) * np.eye(2)
        worst["offdiag"] = max(worst["offdiag"], hermlin.offdiag_sqrt_defect(h) / hermlin.matabs(h) ** 0.5)
        ratio, lo, hi = hermlin.hermcomp0_ratio(x, h)
        worst["hermcomp0"] = max(worst["hermcomp0"], max(lo / ratio, ratio / hi))
    # Entrywise bounds |A| <= M, |B| <= 2M give 6 and 14 for the two ratios.
    herm_ok = (
        worst["matrest_det"] <= 6
        and worst["matrest_detA"] <= 14
        and worst["offdiag"] <= 1e-13
        and worst["hermcomp0"] <= 1 + 1e-12
    )
    diffs = []
    for grid in ((33, 32), (65, 64)):
        fld = disksolver.seed_field("r", 2.0, "exact", grid=grid, model=model0)
        u = _interior_bump(fld)
        lt = disksolver.apply_Lt(fld, 2.0, u, accuracy=2)
        diffs.append(abs(disksolver.pairing(fld, lt, disksolver.pauli_compose(u)) - disksolver.quadratic_form_Qt(fld, 2.0, u, accuracy=2)))
    order = math.log2(diffs[0] / diffs[1])
    wall = time.perf_counter() - start
    ok = herm_ok and order >= 1.7 and wall <= 120
    _record(
        11,
        ok,
        f"draws={n} worst={ {k: float('%.3g' % v) for k, v in worst.items()} } "
        f"pairing_gap={diffs[0]:.3e}->{diffs[1]:.3e} observed_order={order:.2f} time={wall:.1f}s",
    )


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
