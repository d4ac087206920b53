"""Simulation of elementary AR(p)/OU(p) panels and their normalized aggregate.

Reproducibility: member ``i`` draws its parameters (and, for independent
innovations, its noise) from ``default_rng([seed, 0, i])``; shared noise comes
from ``default_rng([seed, 1])`` in fixed-size time blocks. Members are reduced
in fixed-size chunks in index order, so the aggregate is bit-identical for any
number of worker processes.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, expm, solve_continuous_lyapunov
from scipy.signal import lfilter

from .errors import ExistenceRefused, InvalidLaw, NotPSD, StepTooCoarse
from .laws import CONTINUOUS, DISCRETE
from .model import COMMON, INDEPENDENT, INTERACTIVE, ModelSpec
from .poles import (ArCoefficients, PoleSample, companion_matrix, expand_polynomial)

log = logging.getLogger(__name__)

BURN_TARGET = 1e-8
BURN_CAP = 1_000_000
CHUNK = 64  # members per reduction chunk
TIME_BLOCK = 8192
STEP_GUARD = 0.1
ITO_NODES = 4  # Gauss-Legendre nodes per step for shared continuous noise


# ---------------------------------------------------------------------------
# innovations


def toeplitz_factor(scheme, n: int) -> np.ndarray:
    """Lower Cholesky factor of the cross-sectional correlation ``Toeplitz(chi)``."""
    C = scheme.correlation_matrix(n)
    w = np.linalg.eigvalsh(C)
    if w[0] < -1e-10:
        raise NotPSD(f"Toeplitz(chi) has eigenvalue {w[0]:.3g} at N={n}")
    if w[0] < 1e-12:
        C = C + (1e-12 - w[0]) * np.eye(n)
    return cholesky(C, lower=True)


def generate_innovations(scheme, n: int, T: int, rng) -> np.ndarray:
    """``n x T`` Gaussian innovations with the scheme's cross-sectional covariance."""
    if scheme.kind == INDEPENDENT:
        return rng.standard_normal((n, T))
    if scheme.kind == COMMON:
        return np.repeat(rng.standard_normal((1, T)), n, axis=0)
    L = toeplitz_factor(scheme, n)
    return L @ rng.standard_normal((n, T))


# ---------------------------------------------------------------------------
# discrete members


def suggested_burn_in(sample: PoleSample) -> int:
    rho = sample.max_modulus()
    return int(math.ceil(math.log(BURN_TARGET) / math.log(rho))) if rho > 0 else 0


def capped_burn_in(sample: PoleSample) -> tuple[int, bool]:
    b = suggested_burn_in(sample)
    return (BURN_CAP, True) if b > BURN_CAP else (b, False)


def simulate_ar_member(coeffs: ArCoefficients, innovations, burn_in: int = 0) -> np.ndarray:
    """Filter ``sigma * innovations`` through ``1 / A`` and drop the first ``burn_in`` values."""
    e = np.asarray(innovations, dtype=float)
    y = lfilter([coeffs.sigma], coeffs.polynomial(), e)
    return y[burn_in:]


# ---------------------------------------------------------------------------
# continuous members


@dataclass
class OuSystem:
    """Exact one-step transition of the companion state-space form."""

    Phi: np.ndarray
    Q: np.ndarray
    P: np.ndarray  # stationary state covariance
    basis: np.ndarray  # columns e^{A v_q} b sqrt(w_q) for shared-noise simulation

    @property
    def order(self) -> int:
        return self.Phi.shape[0]


def ou_system(sample: PoleSample, step: float, sigma: float = 1.0) -> OuSystem:
    if sample.flavor != CONTINUOUS:
        raise InvalidLaw("OU simulation needs a continuous-flavor sample")
    ymax = max(math.hypot(g.radius, g.angle) for g in sample.groups)
    if step > STEP_GUARD / ymax:
        raise StepTooCoarse(f"step {step:g} exceeds {STEP_GUARD}/max|y| = {STEP_GUARD / ymax:.4g}")
    A = companion_matrix(sample)
    p = A.shape[0]
    b = np.zeros((p, 1))
    b[-1, 0] = sigma
    # Van Loan: expm([[-A, bb'], [0, A']] step) yields Phi and the step covariance
    M = np.zeros((2 * p, 2 * p))
    M[:p, :p] = -A
    M[:p, p:] = b @ b.T
    M[p:, p:] = A.T
    E = expm(M * step)
    Phi = E[p:, p:].T
    Q = Phi @ E[:p, p:]
    Q = 0.5 * (Q + Q.T)
    P = solve_continuous_lyapunov(A, -(b @ b.T))
    P = 0.5 * (P + P.T)
    gx, gw = np.polynomial.legendre.leggauss(ITO_NODES)
    v = 0.5 * step * (gx + 1.0)
    w = 0.5 * step * gw
    basis = np.column_stack([(expm(A * vq) @ b)[:, 0] * math.sqrt(wq) for vq, wq in zip(v, w)])
    return OuSystem(Phi, Q, P, basis)


def _psd_factor(M):
    w, V = np.linalg.eigh(M)
    return V * np.sqrt(np.clip(w, 0.0, None))


def simulate_ou_member(sample: PoleSample, step: float, horizon: float, rng, burn_in: int = 0,
                       sigma: float = 1.0) -> np.ndarray:
    """Path on the grid ``step, 2 step, ...`` up to ``horizon`` from the stationary law."""
    sys = ou_system(sample, step, sigma)
    n = int(round(horizon / step))
    Lq = _psd_factor(sys.Q)
    x = _psd_factor(sys.P) @ rng.standard_normal(sys.order)
    noise = rng.standard_normal((burn_in + n, sys.order)) @ Lq.T
    out = np.empty(n)
    Phi = sys.Phi
    for k in range(burn_in + n):
        x = Phi @ x + noise[k]
        if k >= burn_in:
            out[k - burn_in] = x[0]
    return out


def ou_burn_in(sample: PoleSample, step: float) -> int:
    rmin = min(g.radius for g in sample.groups)
    return int(math.ceil(-math.log(BURN_TARGET) / (rmin * step)))


# ---------------------------------------------------------------------------
# panels


@dataclass
class PanelRun:
    N: int
    T: int
    samples: list
    aggregate: np.ndarray
    normalization: float
    scheme: dict
    seed: int
    burn_in: list = field(default_factory=list)
    step: float | None = None
    members: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def save(self, directory, config: dict | None = None, members: bool = False):
        """Write ``config.json``, ``aggregate.csv`` and optionally ``members.csv``."""
        from .spectral import fmt
        os.makedirs(directory, exist_ok=True)
        doc = {"N": self.N, "T": self.T, "seed": self.seed, "normalization": self.normalization,
               "scheme": self.scheme, "step": self.step, "burn_in_max": max(self.burn_in, default=0),
               "capped_members": self.metadata.get("capped_members", 0), "model": config}
        paths = []
        p = os.path.join(directory, "config.json")
        with open(p, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
        paths.append(p)
        p = os.path.join(directory, "aggregate.csv")
        with open(p, "w") as fh:
            fh.write("t,value\n")
            dt = self.step if self.step else 1
            for k, v in enumerate(self.aggregate):
                fh.write(f"{fmt((k + 1) * dt) if self.step else k},{fmt(v)}\n")
        paths.append(p)
        if members:
            if self.members is None:
                raise InvalidLaw("run was simulated without keeping members")
            p = os.path.join(directory, "members.csv")
            with open(p, "w") as fh:
                fh.write("t," + ",".join(f"m{i}" for i in range(self.N)) + "\n")
                for k in range(self.T):
                    fh.write(f"{k}," + ",".join(fmt(v) for v in self.members[:, k]) + "\n")
            paths.append(p)
        return paths


def _member_rng(seed, i):
    return np.random.default_rng([seed, 0, i])


def _shared_rng(seed):
    return np.random.default_rng([seed, 1])


def _draw_members(model: ModelSpec, N: int, seed: int):
    samples, rngs = [], []
    for i in range(N):
        rng = _member_rng(seed, i)
        samples.append(model.draw(rng))
        rngs.append(rng)
    return samples, rngs


def aggregate(model: ModelSpec, N: int, T: int, seed: int, *, step: float | None = None,
              force: bool = False, keep_members: bool = False, jobs: int = 1,
              normalization: float | None = None) -> PanelRun:
    """Simulate ``N`` members and return ``X^N = (1 / B_N) sum Z^i``."""
    from .classify import classify_model
    if N < 1 or T < 1:
        raise InvalidLaw("N and T must be positive")
    report = classify_model(model)
    if not report.exists and not force:
        raise ExistenceRefused(f"aggregate does not exist: {report.exists_condition}")
    scheme = model.innovation
    if scheme.kind == INTERACTIVE:
        scheme.check_psd(N)
    B = float(normalization) if normalization is not None else scheme.default_normalization(N)
    samples, rngs = _draw_members(model, N, seed)
    if model.flavor == DISCRETE:
        total, members, burns, capped = _aggregate_ar(model, samples, rngs, T, seed, keep_members, jobs)
    else:
        if step is None:
            raise InvalidLaw("continuous panels need a time step")
        total, members, burns, capped = _aggregate_ou(model, samples, rngs, T, step, seed, keep_members)
    if capped:
        log.warning("%d member(s) hit the burn-in cap of %d steps; near-unit-root members are "
                    "not fully equilibrated", capped, BURN_CAP)
    meta = {"capped_members": capped, "regime": scheme.regime(), "exists": report.exists}
    return PanelRun(N, T, samples, total / B, B, scheme.to_dict(), seed, burns, step,
                    members, meta)


def _aggregate_ar(model, samples, rngs, T, seed, keep, jobs):
    scheme = model.innovation
    N = len(samples)
    burns, capped = [], 0
    for s in samples:
        b, hit = capped_burn_in(s)
        burns.append(b)
        capped += hit
    members = np.empty((N, T)) if keep else None
    total = np.zeros(T)
    if scheme.kind == INDEPENDENT:
        # each member continues its own stream after its parameter draws
        parts = []
        for i, (s, rng, b) in enumerate(zip(samples, rngs, burns)):
            parts.append((i, s, b, rng))
        chunks = [parts[k:k + CHUNK] for k in range(0, N, CHUNK)]
        if jobs > 1 and len(chunks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_independent_chunk,
                                        [(model.sigma, c, T, keep) for c in chunks]))
        else:
            results = [_independent_chunk((model.sigma, c, T, keep)) for c in chunks]
        for k, (part, kept) in enumerate(results):
            total += part
            if keep:
                members[k * CHUNK:k * CHUNK + kept.shape[0]] = kept
        return total, members, burns, capped
    # shared timeline: member i starts bmax - b_i steps into it
    bmax = max(burns)
    length = bmax + T
    shared = _shared_rng(seed)
    coeffs = [expand_polynomial(s, model.sigma) for s in samples]
    if scheme.kind == COMMON:
        e = shared.standard_normal(length)
        for k in range(0, N, CHUNK):
            part = np.zeros(T)
            for i in range(k, min(N, k + CHUNK)):
                y = simulate_ar_member(coeffs[i], e[bmax - burns[i]:], burns[i])
                part += y
                if keep:
                    members[i] = y
            total += part
        return total, members, burns, capped
    # interactive: correlated rows generated block by block, filters carry state
    L = toeplitz_factor(scheme, N)
    states = [None] * N
    pos = 0
    while pos < length:
        blk = min(TIME_BLOCK, length - pos)
        E = L @ shared.standard_normal((N, blk))
        block_sum = np.zeros(blk)
        for i in range(N):
            start = bmax - burns[i]
            if pos + blk <= start:
                continue
            a = max(0, start - pos)
            den = coeffs[i].polynomial()
            if states[i] is None:
                states[i] = np.zeros(len(den) - 1)
            y, states[i] = lfilter([coeffs[i].sigma], den, E[i, a:], zi=states[i])
            if a:
                y = np.concatenate([np.zeros(a), y])
            block_sum += y
            if keep:
                lo = max(pos, bmax)
                if lo < pos + blk:
                    members[i, lo - bmax:pos + blk - bmax] = y[lo - pos:]
        lo = max(pos, bmax)
        if lo < pos + blk:
            total[lo - bmax:pos + blk - bmax] += block_sum[lo - pos:]
        pos += blk
    return total, members, burns, capped


def _independent_chunk(args):
    sigma, chunk, T, keep = args
    part = np.zeros(T)
    kept = np.empty((len(chunk), T)) if keep else None
    for j, (i, sample, b, rng) in enumerate(chunk):
        coeffs = expand_polynomial(sample, sigma)
        y = simulate_ar_member(coeffs, rng.standard_normal(b + T), b)
        part += y
        if keep:
            kept[j] = y
    return part, kept


def _aggregate_ou(model, samples, rngs, T, step, seed, keep):
    scheme = model.innovation
    N = len(samples)
    systems = [ou_system(s, step, model.sigma) for s in samples]
    p = max(s.order for s in systems)
    Phi = np.zeros((N, p, p))
    kicks = np.zeros((N, p, max(p, ITO_NODES)))
    x = np.zeros((N, p))
    capped = 0
    if scheme.kind == INDEPENDENT:
        # stationary start, exact step covariance, no burn-in needed
        burns = [0] * N
        for i, (sys, rng) in enumerate(zip(systems, rngs)):
            k = sys.order
            Phi[i, :k, :k] = sys.Phi
            kicks[i, :k, :k] = _psd_factor(sys.Q)
            x[i, :k] = _psd_factor(sys.P) @ rng.standard_normal(k)
    else:
        burns = []
        for s in samples:
            b = ou_burn_in(s, step)
            if b > BURN_CAP:
                b, capped = BURN_CAP, capped + 1
            burns.append(b)
        for i, sys in enumerate(systems):
            k = sys.order
            Phi[i, :k, :k] = sys.Phi
            kicks[i, :k, :ITO_NODES] = sys.basis
    bmax = max(burns)
    start = np.array([bmax - b for b in burns])
    length = bmax + T
    shared = _shared_rng(seed)
    L = toeplitz_factor(scheme, N) if scheme.kind == INTERACTIVE else None
    members = np.empty((N, T)) if keep else None
    total = np.zeros(T)
    q = kicks.shape[2]
    pos = 0
    while pos < length:
        blk = min(TIME_BLOCK, length - pos)
        if scheme.kind == INDEPENDENT:
            z = np.stack([rng.standard_normal((blk, q)) for rng in rngs], axis=1)  # blk, N, q
        elif scheme.kind == COMMON:
            z = np.broadcast_to(shared.standard_normal((blk, 1, q)), (blk, N, q))
        else:
            z = np.einsum("ij,tjq->tiq", L, shared.standard_normal((blk, N, q)))
        noise = np.einsum("ipq,tiq->tip", kicks, z)
        for k in range(blk):
            t = pos + k
            x = np.einsum("ipq,iq->ip", Phi, x) + noise[k]
            if t < bmax:
                x[start > t] = 0.0
            else:
                total[t - bmax] += x[:, 0].sum()
                if keep:
                    members[:, t - bmax] = x[:, 0]
        pos += blk
    return total, members, burns, capped
