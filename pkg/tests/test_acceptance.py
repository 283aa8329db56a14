"""Acceptance criteria 1-9, each at its stated tolerance.

Every criterion is split into parts; a criterion passes when all of its
parts pass.  One summary line per criterion is printed at the end of the
session (see ``conftest.py``).
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

import oracles
from dhlab.besov import band_norm, besov_norm, build_partition, conjugate_exponent
from dhlab.grid import log_grid, power_transform, uniform_grid
from dhlab.lab.config import load_config
from dhlab.lab.experiments import run_experiment
from dhlab.operator import (
    DistortedKernel,
    HankelOperator,
    KernelMatrix,
    assemble_distorted,
    assemble_weighted_hankel,
    hankel_matvec_fast,
)
from dhlab.projection import (
    QProjector,
    angular_rule,
    beta_normalizer,
    project_P,
    project_Q,
    project_Q_matrix,
)
from dhlab.spectrum import dense_singular_values, topk_singular_values, trace_pair
from dhlab.symbol import bump, dilate, exp_symbol, indicator_phi_n, power_weight

pytestmark = pytest.mark.acceptance

# criterion -> {part: (passed, detail)}
RESULTS = {}

_REPORTS = {}


def record(criterion, part, ok, detail=""):
    RESULTS.setdefault(criterion, {})[part] = (bool(ok), detail)
    print(f"criterion {criterion} [{part}]: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"criterion {criterion} [{part}]: {detail}"


def experiment(name):
    """Run an experiment with the default configuration once per session."""
    if name not in _REPORTS:
        t0 = time.perf_counter()
        rep = run_experiment(name, load_config())
        _REPORTS[name] = (rep, time.perf_counter() - t0)
    return _REPORTS[name]


def verdicts(rep, prefix):
    return [v for v in rep.verdicts if v["name"].startswith(prefix)]


# ---------------------------------------------------------------- 1


def test_c1_unitary_equivalence():
    rep, wall = experiment("unitary")
    cells = rep.cells
    assert len(cells) == 9
    assert all(c["values"]["n_points"] == 256 for c in cells)
    errors = [c["error"] for c in cells if c.get("error")]
    dev = max(c["values"]["deviation"] for c in cells)
    rel = max(c["values"]["relative_value_error"] for c in cells)
    ok = not errors and dev < 1e-10 and rel < 1e-10
    record(1, "top-20 match", ok, f"normwise {dev:.2e}, relative above floor {rel:.2e}, errors {errors}")


def test_c1_runtime():
    _, wall = experiment("unitary")
    record(1, "runtime", wall < 10.0, f"{wall:.2f} s (limit 10 s)")


# ---------------------------------------------------------------- 2


def test_c2_rank_one_distorted():
    g = log_grid(-10, 4, 16)
    s0 = dense_singular_values(assemble_distorted(exp_symbol(), 2, 2, g, g)).values[0]
    expect = 0.5 * math.sqrt(math.pi / 2)
    record(2, "G^{2,2}_exp", abs(s0 - 0.626657) <= 1e-3, f"s_0 = {s0:.6f}, closed form {expect:.6f}")


def test_c2_rank_one_hankel():
    g = log_grid(-12, 5, 16)
    s0 = dense_singular_values(assemble_weighted_hankel(exp_symbol(), 0, 0, g, g)).values[0]
    record(2, "Gamma_exp", abs(s0 - 0.5) <= 1e-3, f"s_0 = {s0:.6f}")


# ---------------------------------------------------------------- 3


def test_c3_partition_of_unity():
    v = build_partition()
    x = np.geomspace(2.0**-8, 2.0**8, 20_001)
    dev = np.max(np.abs(sum(v.band(j, x) for j in range(-10, 11)) - 1.0))
    record(3, "partition of unity", dev < 1e-12, f"max deviation {dev:.2e}")


@pytest.mark.parametrize("p,s", [(1.0, 1.0), (2.0, 1.5), (math.inf, 0.0)])
def test_c3_dilation_law(p, s):
    pc = conjugate_exponent(p)
    expect = 2.0 ** (s + (0.0 if math.isinf(pc) else 1.0 / pc))
    worst = 0.0
    for phi in (bump(1), power_weight(bump(1.3), 2)):
        ratio = besov_norm(dilate(phi, 2.0), p, s) / besov_norm(phi, p, s)
        worst = max(worst, abs(ratio / expect - 1.0))
    record(3, f"dilation (p={p:g}, s={s:g})", worst < 0.01, f"worst relative error {worst:.2e}")


def test_c3_band_norms_smooth():
    worst = 0.0
    for phi, j in ((bump(1), 0), (exp_symbol(), 2), (power_weight(bump(1.3), 2), 0)):
        for p in (1.0, 2.0, 4.0, math.inf):
            ref = oracles.band_lp_direct(phi, j, p, 600.0)
            worst = max(worst, abs(band_norm(phi, j, p) / ref - 1.0))
    record(3, "band norms smooth", worst < 1e-6, f"worst relative error {worst:.2e}")


def test_c3_band_norms_indicator():
    phi = indicator_phi_n(8)
    errs = [abs(band_norm(phi, j, 2) / oracles.band_l2_plancherel(phi, j, phi.jumps) - 1.0) for j in (0, 1)]
    for p in (4.0, math.inf):
        errs.append(abs(band_norm(phi, 0, p) / oracles.band_lp_direct(phi, 0, p, 600.0, phi.jumps) - 1.0))
    worst = max(errs)
    record(3, "band norms indicator", worst < 1e-3, f"worst relative error {worst:.2e}")


# ---------------------------------------------------------------- 4


def _angular(alpha, beta):
    f = lambda t: math.cos(t) ** (2 / alpha - 1) * math.sin(t) ** (2 / beta - 1)  # noqa: E731
    return quad(f, 0.0, math.pi / 2, epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def test_c4_beta_normalizer():
    errs = []
    for (a, b), exact in (((2, 2), math.pi / 2), ((1, 1), 0.5), ((1, 2), 1.0)):
        errs.append(abs(beta_normalizer(a, b) - exact))
        errs.append(abs(0.5 * oracles.beta_fn(1 / a, 1 / b) - exact))
        errs.append(abs(_angular(a, b) - exact))
    record(4, "A(alpha, beta)", max(errs) < 1e-10, f"worst error {max(errs):.2e}")


def test_c4_jacobi_weight_sums():
    worst = 0.0
    for a in (0.5, 1, 2, 3):
        for b in (0.5, 1, 2, 3):
            exact = oracles.beta_fn(1 / a, 1 / b)
            worst = max(worst, abs(angular_rule(a, b).weights.sum() / exact - 1.0))
    record(4, "Gauss-Jacobi sums", worst < 1e-12, f"worst relative error {worst:.2e}")


# ---------------------------------------------------------------- 5


def _lattice(alpha, beta, n=48):
    base = uniform_grid(0.0, 2.0, n)
    return power_transform(base, 1 / alpha), power_transform(base, 1 / beta)


def test_c5_fixed_point():
    errs = []
    r = np.geomspace(0.01, 20, 40)
    for a, b in ((1, 2), (0.5, 0.5), (3, 1.5)):
        psi = exp_symbol()
        errs.append(np.max(np.abs(project_Q(DistortedKernel(psi, a, b), a, b)(r) / psi(r) - 1.0)))
        gx, gy = _lattice(a, b)
        m = assemble_distorted(bump(1.2), a, b, gx, gy)
        errs.append(np.max(np.abs(project_Q_matrix(m, a, b).entries - m.entries)) / np.max(np.abs(m.entries)))
    record(5, "fixed point", max(errs) < 1e-10, f"worst {max(errs):.2e}")


def test_c5_idempotence_contraction_selfadjoint():
    idem, contr, adj = 0.0, True, 0.0
    rng = np.random.default_rng(0)
    for a, b in ((1, 2), (0.5, 0.5), (2, 3)):
        gx, gy = _lattice(a, b)
        proj = QProjector(gx, gy, a, b)
        assert proj.mode == "lattice"
        x, y = rng.standard_normal(proj.shape), rng.standard_normal(proj.shape)
        qx, qy = proj.apply(x), proj.apply(y)
        idem = max(idem, np.max(np.abs(proj.apply(qx) - qx)) / np.max(np.abs(qx)))
        contr &= np.linalg.norm(qx) <= np.linalg.norm(x)
        lhs = trace_pair(KernelMatrix(gx, gy, qx), KernelMatrix(gx, gy, y)).real
        rhs = trace_pair(KernelMatrix(gx, gy, x), KernelMatrix(gx, gy, qy)).real
        adj = max(adj, abs(lhs - rhs) / abs(lhs))
        k = lambda s, t: np.exp(-s - 2 * t) * (1 + s * t)  # noqa: E731
        q1 = project_Q(k, a, b)
        rr = np.geomspace(0.05, 10, 30)
        idem = max(idem, np.max(np.abs(project_Q(DistortedKernel(q1, a, b), a, b)(rr) / q1(rr) - 1.0)))
    ok = idem < 1e-10 and contr and adj < 1e-8
    record(5, "idempotence, contraction, self-adjointness", ok,
           f"idempotence {idem:.2e}, contraction {contr}, self-adjointness {adj:.2e}")


def test_c5_dual_identity():
    worst = 0.0
    phi = exp_symbol()
    for a, b in ((1, 2), (2, 2), (2, 1)):
        def k(x, y, a=a, b=b):
            s, t = x**a, y**b
            return np.exp(-s - 2 * t) * (1 + s) * np.cos(t)

        lhs = oracles.cartesian_integral(lambda x, y: phi(x**a + y**b) * k(x, y), 40.0, 40.0, 96)
        psi = project_Q(k, a, b)
        e = 1 / a + 1 / b - 1
        radial = lambda r: r**e * phi(np.array([r]))[0] * psi(np.array([r]))[0]  # noqa: E731
        integral = sum(quad(radial, lo, hi, epsabs=0, epsrel=1e-12, limit=200)[0]
                       for lo, hi in ((0, 1), (1, 10), (10, 80)))
        rhs = 2 * beta_normalizer(a, b) / (a * b) * integral
        worst = max(worst, abs(rhs / lhs - 1.0))
    record(5, "dual identity", worst < 1e-6, f"worst relative error {worst:.2e}")


def test_c5_project_P_beta_law():
    worst = 0.0
    phi0 = exp_symbol()
    x = np.geomspace(0.1, 5, 9)
    for a, b in ((1.0, 1.0), (0.25, 0.75)):
        got = project_P(lambda s, t: s**a * t**b * phi0(s + t))(x)
        expect = oracles.beta_fn(a + 1, b + 1) * x ** (a + b) * phi0(x)
        worst = max(worst, np.max(np.abs(got / expect - 1.0)))
    record(5, "project_P beta law", worst < 1e-6, f"worst relative error {worst:.2e}")


# ---------------------------------------------------------------- 6


def test_c6_block_bound_dominance():
    rep, _ = experiment("sharpness")
    v = verdicts(rep, "block bound dominance")
    record(6, "block bound dominance", v and v[0]["verdict"] == "PASS", str(v[0]["detail"] if v else "missing"))


def test_c6_monotone_growth():
    rep, _ = experiment("sharpness")
    v = verdicts(rep, "ratio increases with n")
    ns = [c["params"]["n"] for c in rep.cells if c["params"]["kind"] == "norms"]
    ok = bool(v) and v[0]["verdict"] == "PASS" and ns == [16, 32, 64, 128, 256]
    record(6, "monotone ratio growth", ok, str(v[0]["detail"] if v else "missing"))


def test_c6_hs_divergence_fit():
    rep, _ = experiment("sharpness")
    v = verdicts(rep, "HS divergence a=-0.5")
    r2 = v[0]["detail"].get("r2", 0.0) if v else 0.0
    record(6, "HS divergence R^2", r2 > 0.99, f"R^2 = {r2:.6f}")


def test_c6_runtime():
    _, wall = experiment("sharpness")
    record(6, "runtime", wall < 300.0, f"{wall:.1f} s (limit 300 s)")


# ---------------------------------------------------------------- 7


def _window(prefix):
    rep, _ = experiment("window")
    v = verdicts(rep, prefix)
    return v[0] if v else None


@pytest.mark.parametrize("part,prefix", [
    ("p=2 contraction", "S_2 contraction alpha=1|beta=2|p=2"),
    ("p=3 stable", "inside window stable alpha=1|beta=2|p=3"),
    ("p=8 grows", "outside window grows alpha=1|beta=2|p=8"),
    ("p=1.1 grows", "outside window grows alpha=1|beta=2|p=1.1"),
    ("operator norm stable at 1/2, 1/2", "operator norm stable alpha=0.5|beta=0.5"),
    ("operator norm grows at beta=2", "operator norm grows alpha=1|beta=2"),
])
def test_c7_window(part, prefix):
    v = _window(prefix)
    ok = v is not None and v["verdict"] == "PASS"
    detail = v["detail"] if v else "missing"
    if v is not None:
        detail = {k: v["detail"][k] for k in ("R_max", "per_doubling", "max_over_min", "limit",
                                             "required_per_doubling") if k in v["detail"]}
    record(7, part, ok, str(detail))


def test_c7_runtime():
    _, wall = experiment("window")
    record(7, "runtime", wall < 900.0, f"{wall:.1f} s (limit 900 s)")


# ---------------------------------------------------------------- 8


def test_c8_fast_matvec_accuracy():
    n = 4096
    rng = np.random.default_rng(0)
    s, v = rng.standard_normal(2 * n - 1), rng.standard_normal(n)
    i = np.arange(n)
    dense = s[i[:, None] + i[None, :]] @ v
    err = np.max(np.abs(hankel_matvec_fast(s, v) - dense)) / np.max(np.abs(dense))
    record(8, "fast matvec N=4096", err < 1e-10, f"relative error {err:.2e}")


def test_c8_fast_matvec_speed():
    n = 8192
    rng = np.random.default_rng(1)
    s, v = rng.standard_normal(2 * n - 1), rng.standard_normal(n)
    i = np.arange(n)
    H = s[i[:, None] + i[None, :]]

    def best(fn, reps=5):
        out = math.inf
        for _ in range(reps):
            t0 = time.perf_counter()
            fn()
            out = min(out, time.perf_counter() - t0)
        return out

    t_dense = best(lambda: H @ v)
    t_fast = best(lambda: hankel_matvec_fast(s, v))
    record(8, "fast matvec beats dense N=8192", t_fast < t_dense,
           f"fast {t_fast * 1e3:.2f} ms, dense {t_dense * 1e3:.2f} ms")


def test_c8_lanczos_top10():
    op = HankelOperator(indicator_phi_n(4), uniform_grid(0.0, 8.0, 512), -0.25, 0.0)
    dense = dense_singular_values(op.dense()).values[:10]
    sp = topk_singular_values(op.matvec, op.rmatvec, op.shape, 10, tol=1e-10)
    err = np.max(np.abs(sp.values[:10] / dense - 1.0))
    record(8, "Lanczos top-10 N=512", err < 1e-8, f"relative error {err:.2e}")


# ---------------------------------------------------------------- 9


@pytest.mark.parametrize("name", ["unitary", "besov_schatten", "sharpness", "window", "quasinorm"])
def test_c9_audits(name):
    rep, _ = experiment(name)
    a = rep.audit
    ok = a["spectra"] > 0 and a["monotonicity_violations"] == 0 and a["block_violations"] == 0
    record(9, name, ok, f"spectra {a['spectra']}, monotonicity violations {a['monotonicity_violations']}, "
                        f"block checks {a['block_checks']}, block violations {a['block_violations']}")
