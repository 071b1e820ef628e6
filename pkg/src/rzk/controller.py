"""Closed-form universal controller and its activation terms.

The feedback is kappa(lambda, a, q) with a the certificate's drift-side
activation (Lie derivative plus gain terms minus the delay-weighted history
sup) and q the input-side Lie derivative.  One formula serves the
stabilizing, safety, and combined designs; only the certificate changes.
"""

import logging

import numpy as np

from . import history as hist
from .system import lie_derivatives

log = logging.getLogger("rzk.controller")

Q_THRESHOLD = 1e-12


class RazumikhinGains:
    """(gamma, eta, mu) with gamma > eta >= 0, mu >= 0."""

    def __init__(self, gamma, eta, mu=0.0):
        if not gamma > eta:
            raise ValueError("need gamma > eta")
        if eta < 0 or mu < 0:
            raise ValueError("need eta >= 0 and mu >= 0")
        self.gamma = float(gamma)
        self.eta = float(eta)
        self.mu = float(mu)

    def as_dict(self):
        return {"gamma": self.gamma, "eta": self.eta, "mu": self.mu}


class ControllerSpec:
    """Certificate field + gains + Sontag parameter lambda."""

    def __init__(self, certificate, gains, lam, q_threshold=Q_THRESHOLD,
                 grid=hist.DEFAULT_GRID):
        if lam <= 0:
            raise ValueError("lambda must be positive")
        if q_threshold <= 0:
            raise ValueError("q-threshold must be positive")
        self.certificate = certificate
        self.gains = gains
        self.lam = float(lam)
        self.q_threshold = float(q_threshold)
        self.grid = int(grid)


def kappa(lam, p, q, q_threshold=Q_THRESHOLD):
    """Sontag-type formula: 0 when ||q|| is numerically zero, otherwise
    -((p + sqrt(p^2 + lambda*||q||^4)) / ||q||^2) * q."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    q = np.asarray(q, dtype=float).ravel()
    q2 = float(q @ q)
    if np.sqrt(q2) <= q_threshold:
        return np.zeros_like(q)
    num = p + np.sqrt(p * p + lam * q2 * q2)
    return (-num / q2) * q


def activation(spec, dyn, window):
    """(a, q): a = Lf + gamma*field(x) - eta*weighted_sup, q = Lg."""
    Lf, q = lie_derivatives(spec.certificate, dyn, window)
    x = window.latest_state
    vx = spec.certificate.value(x)
    sup = hist.weighted_sup(window, spec.certificate, spec.gains.mu, spec.grid)
    a = Lf + spec.gains.gamma * vx - spec.gains.eta * sup
    return a, q


def control(spec, dyn, window, details=None):
    """u = kappa(lambda, a, q).

    Closed-loop margin Lf + q.u + gamma*field - eta*sup equals
    -sqrt(a^2 + lambda*||q||^4) when ||q|| is above threshold, else a.
    If ||q|| is below threshold while a > 0 the certificate's strict
    decrease condition failed at this window; that is reported (it
    falsifies the candidate certificate) rather than hidden.

    `details`, when given, is a dict filled with a/q/margin/flags.
    """
    a, q = activation(spec, dyn, window)
    qn = float(np.sqrt(q @ q))
    u = kappa(spec.lam, a, q, spec.q_threshold)
    if qn > spec.q_threshold:
        margin = -np.sqrt(a * a + spec.lam * qn ** 4)
    else:
        margin = a
        if a > 0:
            log.warning("certificate violation: q ~ 0 but a = %.3e > 0", a)
            if details is not None:
                details["certificate_violation"] = True
    if details is not None:
        details["a"] = float(a)
        details["q"] = q
        details["margin"] = float(margin)
    return u


def scp_probe(spec, dyn, deltas, samples_per_delta=64, seed=0):
    """Small-control-property probe: max ||u|| over random windows with
    sup-norm below each delta.

    The same random window shapes (constant states and jittered histories,
    normalized into the unit sup-norm ball) are reused across deltas and
    scaled into each delta-ball, so the rows isolate the delta dependence.
    Returns a list of (delta, sup||u||) rows; decay as delta -> 0 evidences
    controller continuity at 0.
    """
    deltas = list(deltas)
    if not deltas:
        raise ValueError("need a non-empty delta grid")
    rng = np.random.default_rng(seed)
    n = dyn.n
    m = 8
    shapes = []
    for _ in range(samples_per_delta):
        x0 = rng.uniform(-1.0, 1.0, size=n)
        nx = np.linalg.norm(x0)
        if nx == 0.0:
            x0[0] = 1.0
            nx = 1.0
        x0 = x0 / nx
        if rng.uniform() < 0.5:
            path = None
        else:
            path = x0 + 0.3 * rng.standard_normal((m, n)) / np.sqrt(n)
        peak = 1.0
        if path is not None:
            peak = max(peak, float(np.max(np.linalg.norm(path, axis=1))))
        scale = rng.uniform(0.2, 0.999) / peak
        shapes.append((scale * x0, None if path is None else scale * path))
    rows = []
    for d in deltas:
        worst = 0.0
        for x0, path in shapes:
            w = hist.from_constant(d * x0, dyn.delta)
            if path is not None:
                for k in range(m):
                    w.push((k + 1) * dyn.delta / m, d * path[k])
            u = control(spec, dyn, w)
            worst = max(worst, float(np.linalg.norm(u)))
        rows.append((float(d), worst))
    return rows
