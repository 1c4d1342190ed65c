"""The acceptance suite: ten desk-scale checks with fixed seeds and tolerances.

Each ``criterion_*`` function returns a :class:`CriterionResult`; both the
pytest suite and ``stable-lab selftest`` call them.
"""

import time
from dataclasses import dataclass

import numpy as np

from .charfn import HaarSample, m_H_estimate, mean_re_w, orbital_measure, w_alpha, w_alpha_abs_bound
from .matrix_core import EnsembleSpec, SupportTag, classify_support, sample_Y_m_batch
from .presets import degenerate, full_basis, identity_line, traceless_pairs
from .stable_core import (
    SpectralMeasureEig,
    StableVectorSpec,
    empirical_cf_vector,
    nu_alpha,
    sample_skewed_stable,
    sample_stable_vector,
    target_cf_vector,
)
from . import verify

ALPHAS = (0.5, 1.0, 1.5, 2.0)
RATE_M = [8, 16, 32, 64, 128, 256, 512]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(number, name):
    def wrap(func):
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            passed, detail = func(*args, **kwargs)
            return CriterionResult(number, name, bool(passed), detail, time.perf_counter() - t0)

        run.__name__ = func.__name__
        run.__doc__ = func.__doc__
        return run

    return wrap


@_timed(1, "gaussian closed form")
def criterion_1(seed=1, n_samples=100_000):
    """Empirical CF of the Gaussian N = 2 sum against the erf closed form."""
    rep = verify.gaussian_oracle_experiment([1, 4, 16, 64], [0.0, 0.5, 1.0, 2.0], n_samples, seed)
    worst = max(r["abs_error"] for r in rep["rows"])
    return rep["passed"], f"max error {worst:.2e} < {rep['tolerance']:.2e} over {len(rep['rows'])} points"


@_timed(2, "1/m rate law")
def criterion_2(seed=2, n_haar=100_000):
    """CF-distance slope in [-1.3, -0.7] for every alpha, orbital measure t = 0.3."""
    haar = HaarSample.draw(2, n_haar, (seed, 0))
    slopes = {}
    for alpha in ALPHAS:
        cfg = verify.ExperimentConfig(EnsembleSpec(alpha, orbital_measure(0.3, 2)), RATE_M, seed=seed, n_haar=n_haar)
        slopes[alpha] = verify.rate_fit(cfg, haar).slope
    ok = all(verify.RATE_WINDOW[0] <= s <= verify.RATE_WINDOW[1] for s in slopes.values())
    return ok, "slopes " + ", ".join(f"a={a}: {s:.3f}" for a, s in slopes.items())


@_timed(3, "m D asymptotics")
def criterion_3(seed=3, n_haar=100_000, m=10_000):
    """``m D(S_0, m)`` against 1/1440 for alpha = 2."""
    cfg = verify.ExperimentConfig(EnsembleSpec(2.0, orbital_measure(0.5, 2)), [m], seed=seed, n_haar=n_haar)
    rep = verify.d_asymptotics_check(np.diag([1.0, 0.0]), [m], cfg)
    row = rep["rows"][-1]
    err = abs(row["m_D"] - 1.0 / 1440.0)
    tol = max(5 * row["m_D_se"], 1e-5)
    return err < tol, f"m D = {row['m_D'].real:.6e}, |m D - 1/1440| = {err:.2e} < {tol:.2e}"


@_timed(4, "alpha = 1 drift")
def criterion_4(seed=4, n_haar=100_000):
    """Drift-corrected CF converges at 1/m; without the drift it does not."""
    haar = HaarSample.draw(2, n_haar, (seed, 0))
    cfg = verify.ExperimentConfig(EnsembleSpec(1.0, orbital_measure(1.0, 2)), RATE_M, seed=seed, n_haar=n_haar)
    traces = np.abs(np.trace(cfg.s_grid, axis1=1, axis2=2).real)
    fixed = verify.rate_fit(cfg, haar, drift=True)
    _, raw = verify.cf_distance_table(cfg, haar, drift=False)
    ratio = raw[-1] / fixed.distances[-1]
    ok = fixed.in_window() and ratio > 10 and traces.max() > 0.1
    return ok, f"slope {fixed.slope:.3f}; at m=512 without drift {raw[-1]:.3e} vs {fixed.distances[-1]:.3e} (x{ratio:.0f})"


@_timed(5, "support classification")
def criterion_5(seed=5):
    """Presets land in their classes; traceless samples have zero trace."""
    msgs, ok = [], True
    for n in (2, 3, 4):
        cases = [
            (full_basis(n), SupportTag.FULL_HERM, False),
            (orbital_measure(0.3, n), SupportTag.FULL_HERM, False),
            (traceless_pairs(n), SupportTag.TRACELESS, False),
            (identity_line(n), SupportTag.IDENTITY_LINE, False),
            (degenerate(n), None, True),
        ]
        for measure, tag, degen in cases:
            got = classify_support(measure)
            good = got.degenerate if degen else (got.tag is tag and not got.degenerate)
            ok &= good
            if not good:
                msgs.append(f"N={n}: {got}")
    worst = 0.0
    for n, alpha in ((2, 1.5), (3, 1.0), (3, 0.7)):
        y = sample_Y_m_batch(EnsembleSpec(alpha, traceless_pairs(n), m=16), 500, (seed, n))
        worst = max(worst, float(np.abs(np.trace(y, axis1=1, axis2=2)).max()))
    ok &= worst < 1e-9
    msgs.append(f"max |tr Y_m| on traceless = {worst:.1e}")
    return ok, "; ".join(msgs)


def _random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2 * np.exp(rng.normal(0, 2))


def _random_probability_measure(rng, n):
    k = rng.integers(1, 6)
    atoms = rng.standard_normal((k, n))
    atoms /= np.linalg.norm(atoms, axis=1, keepdims=True)
    return SpectralMeasureEig(atoms, rng.dirichlet(np.ones(k)))


@_timed(6, "w bound")
def criterion_6(seed=6, trials=1000):
    """``|w_alpha(X)|`` never exceeds the trace-norm bound for probability measures."""
    rng = np.random.default_rng(seed)
    violations, worst = 0, 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 5))
        alpha = float(rng.choice([rng.uniform(0.05, 2.0), 1.0, 2.0], p=[0.8, 0.1, 0.1]))
        x = _random_hermitian(rng, n)
        measure = _random_probability_measure(rng, n)
        lhs = abs(w_alpha(x, measure, alpha))
        rhs = w_alpha_abs_bound(x, alpha)
        worst = max(worst, lhs / rhs if rhs > 0 else 0.0)
        if lhs > rhs * (1 + 1e-12) + 1e-300:
            violations += 1
    return violations == 0, f"{violations} violations in {trials} trials, max ratio {worst:.3f}"


@_timed(7, "m_H positivity")
def criterion_7(seed=7, n_haar=4000):
    """``m_H`` clearly positive on full-span presets; zero at the identity for traceless atoms."""
    msgs, ok = [], True
    worst = np.inf
    for n in (2, 3):
        haar = HaarSample.draw(n, n_haar, (seed, n))
        for name, measure in (("orbital", orbital_measure(0.3, n)), ("full-basis", full_basis(n)),
                              ("traceless", traceless_pairs(n))):
            ws = classify_support(measure)
            for alpha in ALPHAS:
                mh = m_H_estimate(measure, alpha, ws, 16, haar, rng=seed, steps=30, starts=2)
                worst = min(worst, mh)
                if not mh > 1e-3:
                    ok = False
                    msgs.append(f"{name} N={n} a={alpha}: {mh:.2e}")
            if ws.tag is SupportTag.TRACELESS:
                for alpha in ALPHAS:
                    val = mean_re_w(np.eye(n) / np.sqrt(n), measure, alpha, haar)
                    if val != 0.0:
                        ok = False
                        msgs.append(f"identity direction {name} N={n}: {val!r}")
    msgs.insert(0, f"min m_H = {worst:.3e}; identity direction exactly 0 on traceless")
    return ok, "; ".join(msgs)


@_timed(8, "optimality integral")
def criterion_8(seed=8, n_mc=4000, n_haar=20_000):
    """``I_eps`` is nonzero at eps = 0.1 and extrapolates to its eps -> 0 limit."""
    haar = HaarSample.draw(2, n_haar, (seed, 0))
    big = HaarSample.draw(2, 100_000, (seed, 1))
    ladder = [0.1, 0.05, 0.025, 0.0125, 0.00625]
    msgs, ok = [], True
    for alpha, t in ((0.5, 0.3), (2.0, 0.0)):
        limit = verify.i_epsilon_limit(t, alpha, big)
        extrap, ests = verify.extrapolate_I_epsilon(ladder, t, alpha, n_mc, haar, seed)
        first = ests[0]
        nonzero = abs(first.value) > 3 * first.std_error
        rel = abs(extrap - limit) / abs(limit)
        ok &= nonzero and rel < 0.10
        msgs.append(f"a={alpha}: |I_0.1|/SE = {abs(first.value) / first.std_error:.1f}, extrapolation off by {rel:.1%}")
    return ok, "; ".join(msgs)


@_timed(9, "Haar moment variances")
def criterion_9(seed=9, n_haar=100_000):
    """Var of the |u|^(2 alpha) sum equals 1/45 at N = 2; the log moment is non-constant."""
    mv = verify.u_moment_variance(2, 2.0, n_haar, seed)
    ok = abs(mv.var_a - 1.0 / 45.0) < 5 * mv.se_a
    msgs = [f"varA = {mv.var_a:.5f} (1/45 = {1 / 45:.5f}, SE {mv.se_a:.1e})"]
    for n in (2, 3):
        mv_n = verify.u_moment_variance(n, 2.0, n_haar, (seed, n))
        ok &= mv_n.var_b > 5 * mv_n.se_b
        msgs.append(f"N={n}: varB/SE = {mv_n.var_b / mv_n.se_b:.0f}")
    return ok, "; ".join(msgs)


@_timed(10, "sampler CF conformance")
def criterion_10(seed=10, n=100_000):
    """Univariate and vector samplers reproduce their target CFs."""
    rng = np.random.default_rng(seed)
    tol = 4.0 / np.sqrt(n)
    grid_u = np.concatenate([-np.linspace(0.2, 2.0, 10), np.linspace(0.2, 2.0, 10)])
    measure = SpectralMeasureEig(
        np.array([[1.0, 0.0], [0.6, 0.8], [-0.8, 0.6]]), np.array([0.5, 0.3, 0.2])
    )
    xis = rng.uniform(-1.5, 1.5, size=(20, 2))
    worst, ok = 0.0, True
    for alpha in ALPHAS:
        z = sample_skewed_stable(alpha, rng, size=n)
        for u in grid_u:
            err = abs(empirical_cf_vector(z, [u]).value - np.exp(-nu_alpha(u, alpha)))
            worst = max(worst, err)
            ok &= err < tol
        spec = StableVectorSpec(alpha, measure, shift=np.array([0.3, -0.2]))
        x = sample_stable_vector(spec, rng, size=n)
        target = target_cf_vector(spec, xis)
        for xi, tgt in zip(xis, target):
            err = abs(empirical_cf_vector(x, xi).value - tgt)
            worst = max(worst, err)
            ok &= err < tol
    return ok, f"max CF error {worst:.2e} < {tol:.2e} over {len(ALPHAS) * 40} points"


CRITERIA = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
]


def run_all(only=None, echo=None):
    results = []
    for k, crit in enumerate(CRITERIA, start=1):
        if only and k not in only:
            continue
        res = crit()
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
