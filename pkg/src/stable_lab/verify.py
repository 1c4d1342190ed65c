"""Numerical experiments checking the convergence results at desk scale."""

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import factorial

import numpy as np
from scipy import integrate, special

from ._parallel import map_blocks, substream
from .charfn import (
    HaarSample,
    _averages_from_diagonals,
    default_n_haar,
    haar_averages,
    haar_averages_eigs,
    m_H_estimate,
    orbital_measure,
)
from .matrix_core import (
    EnsembleSpec,
    SupportTag,
    classify_support,
    herm_basis,
    random_unit_matrices,
    sample_haar_unitary,
)
from .stable_core import CfEstimate, InvariantError, check_alpha, mean_with_se

RATE_WINDOW = (-1.3, -0.7)
MIN_FIT_M = 8


@dataclass
class RateCurve:
    m_values: list
    distances: list
    slope: float
    slope_stderr: float
    intercept: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.m_values)
        if np.any(np.diff(m) <= 0):
            raise InvariantError("m_values strictly increasing")
        if np.any(np.asarray(self.distances) <= 0):
            raise InvariantError("distances positive")

    def in_window(self, window=RATE_WINDOW):
        return window[0] <= self.slope <= window[1]

    def to_dict(self):
        return {
            "m_values": [int(m) for m in self.m_values],
            "distances": [float(d) for d in self.distances],
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "intercept": self.intercept,
        }


@dataclass
class ExperimentConfig:
    ensemble: EnsembleSpec
    m_list: list
    s_grid: np.ndarray = None
    n_haar: int = None
    n_samples: int = 100_000
    seed: int = 0
    grid_radii: tuple = (0.5, 1.0)
    grid_directions: int = 10

    def __post_init__(self):
        n = self.ensemble.dim
        if self.n_haar is None:
            self.n_haar = default_n_haar(n)
        self.m_list = sorted(int(m) for m in self.m_list)
        if self.s_grid is None:
            self.s_grid = default_s_grid(
                n, self.seed, classify_support(self.ensemble.measure), self.grid_radii, self.grid_directions
            )
        self.s_grid = np.asarray(self.s_grid, dtype=complex)
        if self.s_grid.shape[1:] != (n, n):
            raise InvariantError("S_grid matrices are N x N", f"got {self.s_grid.shape}")

    def to_dict(self):
        return {
            "ensemble": self.ensemble.to_dict(),
            "m_list": self.m_list,
            "n_haar": self.n_haar,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "grid_radii": list(self.grid_radii),
            "grid_directions": self.grid_directions,
        }


def default_s_grid(n, seed, workspace=None, radii=(0.5, 1.0), directions=10):
    """Random unit directions of the workspace, each scaled to every radius."""
    traceless = workspace is not None and workspace.tag is SupportTag.TRACELESS
    dirs = random_unit_matrices(n, directions, substream((seed, 1), 0), traceless=traceless)
    return np.concatenate([r * dirs for r in radii])


# Gaussian N = 2 closed form


def gaussian_closed_form_cf(s, m):
    """Exact CF of ``m^{-1/2} sum_j x_j U_j diag(1,-1) U_j^dagger`` at eigenvalues ``(s, -s)``."""
    if m < 1:
        raise InvariantError("m >= 1", f"got {m}")
    x = np.sqrt(2.0) * abs(float(s)) / np.sqrt(m)
    if x == 0.0:
        return 1.0
    base = np.sqrt(np.pi) / 2.0 * special.erf(x) / x
    return float(np.exp(m * np.log(base)))


def _gaussian_block(m, s_values, size, rng):
    u = sample_haar_unitary(2, rng, size=size * m).reshape(size, m, 2, 2)
    x = rng.standard_normal((size, m))
    # diagonal of U diag(1,-1) U^dagger is (|u11|^2 - |u12|^2, |u21|^2 - |u22|^2)
    a = np.abs(u) ** 2
    d11 = a[..., 0, 0] - a[..., 0, 1]
    d22 = a[..., 1, 0] - a[..., 1, 1]
    diff = (x * (d11 - d22)).sum(axis=1) / np.sqrt(m)
    return np.exp(1j * np.outer(diff, s_values))


def gaussian_oracle_experiment(m_list, s_grid, n_samples, seed, n_se=5.0):
    """Empirical CF of the Gaussian N = 2 traceless sum against its closed form.

    Samples are built directly from standard normals and Haar unitaries; the
    stable samplers are not involved.  A grid point fails when the error
    exceeds ``n_se / sqrt(n_samples)``.
    """
    s_values = np.asarray(s_grid, dtype=float)
    tol = n_se / np.sqrt(n_samples)
    rows = []
    for m in m_list:
        block = max(1, min(4096, 262144 // int(m)))
        parts = map_blocks(
            lambda size, rng: _gaussian_block(int(m), s_values, size, rng), n_samples, (seed, m), block
        )
        phases = np.concatenate(parts)
        for j, s in enumerate(s_values):
            est = mean_with_se(phases[:, j])
            exact = gaussian_closed_form_cf(s, m)
            err = abs(est.value - exact)
            rows.append({
                "m": int(m),
                "s": float(s),
                "empirical": est.value,
                "se": est.std_error,
                "closed_form": exact,
                "abs_error": err,
                "ok": bool(err < tol),
            })
    return {
        "tolerance": tol,
        "rows": rows,
        "passed": all(r["ok"] for r in rows),
        "limit_errors": {
            int(m): max(abs(r["empirical"] - np.exp(-2 * r["s"] ** 2 / 3)) for r in rows if r["m"] == m)
            for m in m_list
        },
    }


# CF-level rate


def _fit_loglog(m_values, distances):
    x = np.log(np.asarray(m_values, dtype=float))
    y = np.log(np.asarray(distances, dtype=float))
    design = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    dof = max(1, len(x) - 2)
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(design.T @ design)
    return float(coef[1]), float(np.sqrt(cov[1, 1])), float(coef[0])


def cf_distance_table(config, haar=None, drift=True):
    """``d(m) = max_S |cf_m(S) - cf_inf(S)|`` on one shared Haar sample."""
    spec = config.ensemble
    if haar is None:
        haar = HaarSample.draw(spec.dim, config.n_haar, (config.seed, 2))
    avgs = [haar_averages(s, spec.measure, spec.alpha, haar) for s in config.s_grid]
    limits = [a.cf_infinity().value for a in avgs]
    dist = []
    for m in config.m_list:
        dist.append(max(abs(a.cf_m(m, drift).value - lim) for a, lim in zip(avgs, limits)))
    return np.array(config.m_list), np.array(dist)


def rate_fit(config, haar=None, drift=True):
    """Log-log slope of the CF distance against m; m < 8 is left out of the fit."""
    if len(config.m_list) < 4:
        raise InvariantError("m_list has >= 4 entries", f"got {config.m_list}")
    m_values, dist = cf_distance_table(config, haar, drift)
    keep = m_values >= MIN_FIT_M
    if keep.sum() < 2:
        keep[:] = True
    slope, se, icpt = _fit_loglog(m_values[keep], dist[keep])
    return RateCurve(list(m_values), list(dist), slope, se, icpt)


def d_asymptotics_check(s, m_list, config, haar=None):
    """Tabulate ``m D(S, m)`` against ``v(S)/2`` on a shared Haar sample."""
    spec = config.ensemble
    if haar is None:
        haar = HaarSample.draw(spec.dim, config.n_haar, (config.seed, 3))
    avg = haar_averages(s, spec.measure, spec.alpha, haar)
    v = avg.variance()
    half_v = v.value / 2.0
    rows = []
    for m in m_list:
        d = avg.d_term(m)
        rows.append({
            "m": int(m),
            "m_D": m * d.value,
            "m_D_se": m * d.std_error,
            "half_v": half_v,
            "deviation": abs(m * d.value - half_v),
        })
    return {"v": v.value, "v_se": v.std_error, "rows": rows, "max_deviation_at_largest_m": rows[-1]["deviation"]}


# Haar moment variables


@dataclass(frozen=True)
class MomentVariances:
    var_a: float
    var_b: float
    se_a: float
    se_b: float


def _variance_with_se(x):
    dev2 = (x - x.mean()) ** 2
    n = x.shape[0]
    se = float(dev2.std() / np.sqrt(n)) if n > 1 else 0.0
    return float(dev2.mean()), se


def u_moment_variance(n, alpha, n_haar, seed):
    """Haar variances of ``sum_j |u_j1|^(2 alpha)`` and ``sum_j |u_j1|^2 log|u_j1|``."""
    alpha = check_alpha(alpha)
    if n < 1:
        raise InvariantError("N >= 1", f"got {n}")
    haar = HaarSample.draw(n, n_haar, (seed, 4))
    p = haar.abs2[:, :, 0]
    a = np.sum(p**alpha, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.sum(np.where(p > 0, 0.5 * p * np.log(np.where(p > 0, p, 1.0)), 0.0), axis=1)
    if n == 1:
        return MomentVariances(0.0, 0.0, 0.0, 0.0)
    var_a, se_a = _variance_with_se(a)
    var_b, se_b = _variance_with_se(b)
    return MomentVariances(var_a, var_b, se_a, se_b)


# Test function for the optimality probe


@lru_cache(maxsize=None)
def zeta_norm(n):
    """``c`` with ``1/c = int_{-1}^{1} cos^(2N-1)(pi u / 2) du``."""
    val, _ = integrate.quad(lambda u: np.cos(np.pi * u / 2.0) ** (2 * n - 1), -1.0, 1.0, epsabs=1e-14, epsrel=1e-14)
    return 1.0 / val


def zeta_hat(s, eps, kappa, n):
    """Bump ``(2 pi c / eps) cos^(2N-1)(pi (s - kappa) / (2 eps))`` on ``(kappa - eps, kappa + eps)``."""
    if eps <= 0:
        raise InvariantError("eps > 0", f"got {eps}")
    s = np.asarray(s, dtype=float)
    inside = np.abs(s - kappa) < eps
    val = np.where(inside, 2 * np.pi * zeta_norm(n) / eps * np.cos(np.pi * (s - kappa) / (2 * eps)) ** (2 * n - 1), 0.0)
    return float(val) if val.ndim == 0 else val


def permanent(a):
    """Permanent by Ryser's inclusion-exclusion formula, vectorised over leading axes."""
    a = np.asarray(a)
    n = a.shape[-1]
    if n == 0:
        return np.ones(a.shape[:-2])
    total = np.zeros(a.shape[:-2], dtype=a.dtype)
    cols = range(n)
    for k in range(1, n + 1):
        sign = (-1) ** k
        for subset in combinations(cols, k):
            total = total + sign * np.prod(a[..., list(subset)].sum(axis=-1), axis=-1)
    return (-1) ** n * total


def phi_hat(eigs, eps, n=None):
    """Fourier-side test function evaluated at eigenvalues ``eigs`` (last axis).

    First column of the permanent uses the window centred at 1, the others
    the window centred at ``eps``.
    """
    eigs = np.asarray(eigs, dtype=float)
    n = eigs.shape[-1] if n is None else n
    z1 = zeta_hat(eigs, eps, 1.0, n)
    ze = zeta_hat(eigs, eps, eps, n)
    mat = np.concatenate([np.asarray(z1)[..., None], np.repeat(np.asarray(ze)[..., None], n - 1, axis=-1)], axis=-1)
    out = permanent(mat) / (factorial(n) * eps ** ((n - 1) * (n - 2)))
    return float(out) if np.ndim(out) == 0 else out


def eigen_jacobian_const(n):
    """``prod_j pi^(j-1) / j!`` from the eigenvalue change of variables on Herm(N)."""
    return float(np.prod([np.pi ** (j - 1) / factorial(j) for j in range(1, n + 1)]))


def tilde_c(n=2):
    """Limit constant of ``int f phi_hat`` as eps -> 0, by quadrature (N <= 3)."""
    c = zeta_norm(n)
    bump = lambda u: 2 * np.pi * c * np.cos(np.pi * u / 2.0) ** (2 * n - 1)
    first, _ = integrate.quad(bump, -1, 1, epsabs=1e-13)
    if n == 2:
        rest, _ = integrate.quad(bump, -1, 1, epsabs=1e-13)
    elif n == 3:
        rest, _ = integrate.dblquad(lambda y, x: (x - y) ** 2 * bump(x) * bump(y), -1, 1, -1, 1, epsabs=1e-12)
    else:
        raise InvariantError("N <= 3 for tilde_c", f"got {n}")
    return eigen_jacobian_const(n) * first * rest


def _f_values(eigs, measure, alpha, haar, chunk=64):
    """``exp(-<w>) v`` at diagonal test matrices; one row of eigenvalues per point."""
    out = np.empty(eigs.shape[0], dtype=complex)
    for start in range(0, eigs.shape[0], chunk):
        e = eigs[start:start + chunk]
        diags = haar.diagonals_from_eigs(e)
        avg = _averages_from_diagonals(diags, measure, alpha, 0.0)
        w = avg.w
        mean = w.mean(axis=-1)
        dev = w - mean[:, None]
        out[start:start + chunk] = np.exp(-mean) * np.mean(dev * dev, axis=-1)
    return out


def estimate_I_epsilon(eps, t, alpha, n, n_mc, haar, seed):
    """Monte Carlo for ``int dS phi_hat(S) exp(-<w(U S U^dagger)>) v(S)`` at N = 2.

    Eigenvalue coordinates: points are uniform on the box
    ``(1-eps, 1+eps) x (0, 2 eps)``; its mirror image contributes the same by
    symmetry of the integrand, hence the factor 2.
    """
    if n != 2:
        raise InvariantError("N = 2", f"got N={n}")
    if not 0 < eps <= 0.25:
        raise InvariantError("0 < eps <= 1/4 (disjoint windows)", f"got {eps}")
    alpha = check_alpha(alpha)
    measure = orbital_measure(t, n)
    rng = substream((seed, 5), 0)
    u = rng.uniform(-1.0, 1.0, size=(int(n_mc), 2))
    s = np.column_stack([1.0 + eps * u[:, 0], eps + eps * u[:, 1]])
    box_area = (2 * eps) ** 2
    weight = 2 * eigen_jacobian_const(n) * box_area * (s[:, 0] - s[:, 1]) ** 2 * phi_hat(s, eps, n)
    vals = weight * _f_values(s, measure, alpha, haar)
    return mean_with_se(vals)


def i_epsilon_limit(t, alpha, haar, n=2):
    """``tilde_c exp(-<w(S_0)>) v(S_0)`` with ``S_0 = diag(1, 0, ..., 0)``."""
    measure = orbital_measure(t, n)
    s0 = np.zeros(n)
    s0[0] = 1.0
    avg = haar_averages_eigs(s0, measure, alpha, haar)
    return tilde_c(n) * avg.cf_infinity().value * avg.variance().value


def extrapolation_powers(alpha):
    """Powers of eps in the small-eps expansion of ``I_eps``.

    Besides the analytic terms, ``|x|^alpha`` near a vanishing diagonal entry
    contributes an ``eps^(1 + alpha)`` term.
    """
    powers = [0.0, 1.0, 2.0]
    if all(abs(1.0 + alpha - p) > 1e-9 for p in powers):
        powers.append(1.0 + alpha)
    return sorted(powers)


def extrapolate_I_epsilon(eps_values, t, alpha, n_mc, haar, seed, n=2, powers=None):
    """Least-squares extrapolation of ``I_eps`` to eps = 0.

    The fit uses :func:`extrapolation_powers` unless ``powers`` is given.
    All eps share the same uniform points and Haar sample, so the fit sees
    mostly the deterministic eps dependence.
    """
    eps_values = np.asarray(eps_values, dtype=float)
    powers = extrapolation_powers(alpha) if powers is None else list(powers)
    if eps_values.size < len(powers):
        raise InvariantError("at least as many eps values as fit terms", f"{eps_values.size} < {len(powers)}")
    ests = [estimate_I_epsilon(e, t, alpha, n, n_mc, haar, seed) for e in eps_values]
    y = np.array([e.value for e in ests])
    design = eps_values[:, None] ** np.asarray(powers)[None, :]
    re, *_ = np.linalg.lstsq(design, y.real, rcond=None)
    im, *_ = np.linalg.lstsq(design, y.imag, rcond=None)
    return complex(re[0], im[0]), ests


# Fourier-side density bound


def density_sup_bounds(config, m_values, n_points=2000, haar=None, m_h=None):
    """Importance-sampled ``(2 pi)^-d int_W |cf_m - cf_inf| dS`` for several m.

    Coordinates on W are orthonormal for the trace form.  The proposal is
    radial, ``exp(-a |S|^alpha)`` with ``a`` half the estimated ``m_H`` so
    that its tails are no lighter than those of the limit CF.  ``None`` in
    ``m_values`` is the m = infinity sentinel.  The same points and Haar
    sample are used for every m.
    """
    spec = config.ensemble
    n, alpha = spec.dim, spec.alpha
    if n != 2:
        raise InvariantError("N = 2", f"got N={n}")
    workspace = classify_support(spec.measure)
    if workspace.degenerate or workspace.tag not in (SupportTag.FULL_HERM, SupportTag.TRACELESS):
        raise InvariantError("workspace is FullHerm or TracelessHyperplane", str(workspace))
    if haar is None:
        haar = HaarSample.draw(n, min(config.n_haar, 20_000), (config.seed, 6))
    if m_h is None:
        m_h = m_H_estimate(spec.measure, alpha, workspace, 64, haar, rng=config.seed)
    rate = m_h / 2.0
    basis = herm_basis(n, workspace.tag is SupportTag.TRACELESS)
    d = basis.shape[0]
    rng = substream((config.seed, 7), 0)
    g = rng.standard_gamma(d / alpha, size=n_points)
    rho = (g / rate) ** (1.0 / alpha)
    dirs = rng.standard_normal((n_points, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    sphere = 2 * np.pi ** (d / 2) / special.gamma(d / 2)
    log_q = np.log(alpha) + (d / alpha) * np.log(rate) - rate * rho**alpha - special.gammaln(d / alpha) - np.log(sphere)
    mats = np.tensordot(dirs * rho[:, None], basis, axes=(1, 0))
    eigs = np.linalg.eigvalsh(mats)
    cf_inf = np.empty(n_points, dtype=complex)
    cfm = {m: np.empty(n_points, dtype=complex) for m in m_values if m is not None}
    for i in range(n_points):
        avg = haar_averages_eigs(eigs[i], spec.measure, alpha, haar)
        cf_inf[i] = avg.cf_infinity().value
        for m in cfm:
            cfm[m][i] = avg.cf_m(m).value
    norm = (2 * np.pi) ** d
    out = []
    for m in m_values:
        diff = np.zeros(n_points) if m is None else np.abs(cfm[m] - cf_inf)
        out.append(float(np.mean(diff * np.exp(-log_q)) / norm))
    return np.array(out)


def density_sup_bound(config, m, **kwargs):
    return float(density_sup_bounds(config, [m], **kwargs)[0])
