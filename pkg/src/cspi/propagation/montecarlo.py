"""Monte Carlo estimates of K^nu over pinned Brownian bridges.

Samples are drawn in fixed-size chunks. Chunk i draws from
SeedSequence(seed, spawn_key=(i,)), and chunk sums are reduced in index
order, so the estimate depends only on (seed, samples, chunk) and not on the
number of worker threads.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..errors import InvalidArgument, QualityWarning, UnsupportedBackend
from .chain import RULES, check_metric
from .lattice import KernelEstimate, LatticeSpec

MIN_SAMPLES = 1000
DEFAULT_CHUNK = 8192


def _coth_minus_inv(x):
    """coth(x) - 1/x, accurate near 0."""
    x = np.asarray(x, float)
    small = x < 1e-2
    xs = np.where(small, 1.0, x)
    series = x / 3 - x**3 / 45 + 2 * x**5 / 945
    return np.where(small, series, 1 / np.tanh(xs) - 1 / xs)


def _rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def _chunk_sizes(samples, chunk):
    full, rest = divmod(samples, chunk)
    return [chunk] * full + ([rest] if rest else [])


def _bridges(rng, m, N, start, end, scale):
    """m pinned Gaussian bridges from start to end; ``scale`` maps unit normals to one increment."""
    xi = rng.standard_normal((m, N, 2)) @ scale.T
    walk = np.concatenate([np.zeros((m, 1, 2)), np.cumsum(xi, axis=1)], axis=1)
    frac = np.linspace(0.0, 1.0, N + 1)[None, :, None]
    return start + walk - frac * (walk[:, -1:, :] - (end - start))


def _reduce(chunk_sums):
    total, total_sq, count = 0j, 0.0, 0
    for s1, s2, m in chunk_sums:
        total += s1
        total_sq += s2
        count += m
    mean = total / count
    var = max(total_sq / count - abs(mean) ** 2, 0.0) * count / max(count - 1, 1)
    return mean, np.sqrt(var / count)


def _run(task, sizes, threads):
    if threads <= 1:
        return [task(i, m) for i, m in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task, range(len(sizes)), sizes))


def _finish(value, stderr, spec, samples, seed, extra=None):
    warning = None
    if stderr > abs(value):
        warning = f"stderr {stderr:.3e} exceeds |value| {abs(value):.3e}; sign problem"
        warnings.warn(warning, QualityWarning, stacklevel=3)
    return KernelEstimate(value=complex(value), stderr=float(stderr), backend="MonteCarlo", spec=spec,
                          samples=samples, seed=seed, warning=warning, extra=extra or {})


def mc_kernel(spec: LatticeSpec, endpoints, h=None, samples: int = 10**6, seed: int = 0, *,
              rule: str = "exact", metric=None, chunk: int = DEFAULT_CHUNK, threads: int = 1) -> KernelEstimate:
    """Bridge-sampled 2 pi e^{nu T/2} K(final; initial).

    Each bridge carries the midpoint phase sum(pbar dq) and the midpoint
    action eps * sum(h(zbar)). With ``rule="exact"`` every increment is also
    reweighted by the ratio of the exact slice to the Gaussian increment,
    which makes the estimator unbiased for the exact-slice lattice used by
    the Gaussian chain. ``rule="midpoint"`` samples the plain lattice.
    """
    if rule not in RULES:
        raise InvalidArgument(f"rule must be one of {RULES}")
    if samples < MIN_SAMPLES:
        raise InvalidArgument(f"need at least {MIN_SAMPLES} samples")
    if chunk < 1:
        raise InvalidArgument("chunk must be >= 1")
    g = check_metric(metric, rule)
    final = np.asarray(endpoints[0], float)
    initial = np.asarray(endpoints[1], float)
    N, eps, s = spec.N, spec.epsilon, spec.step_variance
    scale = np.linalg.cholesky(np.linalg.inv(g)) * np.sqrt(s)
    if h is not None and not callable(h):
        raise UnsupportedBackend("h must be a callable symbol")
    x = s / 2
    log_ratio0 = np.log(x / np.sinh(x)) if rule == "exact" else 0.0
    shrink = _coth_minus_inv(x) / 4 if rule == "exact" else 0.0

    def task(i, m):
        z = _bridges(_rng(seed, i), m, N, initial, final, scale)
        dz = np.diff(z, axis=1)
        zbar = 0.5 * (z[:, 1:] + z[:, :-1])
        log_w = 1j * np.sum(zbar[..., 0] * dz[..., 1], axis=1)
        if h is not None:
            log_w = log_w - 1j * eps * np.sum(h(zbar[..., 0], zbar[..., 1]), axis=1)
        if rule == "exact":
            r2 = np.einsum("mki,ij,mkj->mk", dz, g, dz)
            log_w = log_w + N * log_ratio0 - shrink * np.sum(r2, axis=1)
        w = np.exp(log_w)
        return complex(np.sum(w)), float(np.sum(np.abs(w) ** 2)), m

    mean, err = _reduce(_run(task, _chunk_sizes(samples, chunk), threads))
    delta = final - initial
    nuT = spec.nu * spec.T
    log_density = 0.5 * np.log(np.linalg.det(g)) - np.log(2 * np.pi * nuT) - delta @ g @ delta / (2 * nuT)
    pref = np.exp(np.log(2 * np.pi) + nuT / 2 + log_density)
    return _finish(pref * mean, pref * err, spec, samples, seed)


def halfplane_mc_kernel(beta: float, spec: LatticeSpec, endpoints, h=None, samples: int = 10**5,
                        seed: int = 0, *, chunk: int = DEFAULT_CHUNK, threads: int = 1) -> KernelEstimate:
    """Kernel for the half-plane metric q^2 dp^2 / beta + beta dq^2 / q^2, q > 0.

    The lattice step density is the Gaussian of the metric frozen at the
    step midpoint (its volume element is dp dq). Bridges are proposed in
    (p, u = ln q), so q stays positive, and reweighted by target over
    proposal times the Jacobian q of each interior point. The result carries
    the prefactor 2 pi (1 - 1/(2 beta)) e^{nu T/2}.
    """
    if beta <= 0.5:
        raise InvalidArgument("beta must exceed 1/2")
    if samples < MIN_SAMPLES:
        raise InvalidArgument(f"need at least {MIN_SAMPLES} samples")
    final = np.asarray(endpoints[0], float)
    initial = np.asarray(endpoints[1], float)
    if final[1] <= 0 or initial[1] <= 0:
        raise InvalidArgument("half-plane endpoints need q > 0")
    N, eps, s = spec.N, spec.epsilon, spec.step_variance
    var_p = s * beta / (final[1] * initial[1])
    var_u = s / beta
    scale = np.diag(np.sqrt([var_p, var_u]))
    start = np.array([initial[0], np.log(initial[1])])
    end = np.array([final[0], np.log(final[1])])
    span = end - start
    # log density of the total proposal displacement, which the bridge conditions on
    log_total = -np.log(2 * np.pi * N * np.sqrt(var_p * var_u)) - (
        span[0] ** 2 / var_p + span[1] ** 2 / var_u) / (2 * N)

    def task(i, m):
        w_path = _bridges(_rng(seed, i), m, N, start, end, scale)
        p, u = w_path[..., 0], w_path[..., 1]
        q = np.exp(u)
        dp, dq, du = np.diff(p, axis=1), np.diff(q, axis=1), np.diff(u, axis=1)
        pbar = 0.5 * (p[:, 1:] + p[:, :-1])
        qbar = 0.5 * (q[:, 1:] + q[:, :-1])
        log_target = -np.log(2 * np.pi * s) - (qbar**2 * dp**2 / beta + beta * dq**2 / qbar**2) / (2 * s)
        log_prop = -np.log(2 * np.pi * np.sqrt(var_p * var_u)) - (dp**2 / var_p + du**2 / var_u) / 2
        log_w = np.sum(log_target - log_prop, axis=1) + np.sum(u[:, 1:-1], axis=1) + log_total
        log_w = log_w + 1j * np.sum(pbar * dq, axis=1)
        if h is not None:
            log_w = log_w - 1j * eps * np.sum(h(pbar, qbar), axis=1)
        w = np.exp(log_w)
        return complex(np.sum(w)), float(np.sum(np.abs(w) ** 2)), m

    mean, err = _reduce(_run(task, _chunk_sizes(samples, chunk), threads))
    pref = 2 * np.pi * (1 - 1 / (2 * beta)) * np.exp(spec.nu * spec.T / 2)
    return _finish(pref * mean, pref * err, spec, samples, seed, {"beta": beta})
