"""Scalar certificate fields: quadratic Lyapunov candidates, the example
hazard/barrier pair, and the psi-weighted Lyapunov-barrier combination.

Every field exposes value(x), grad(x) and vectorized value_many/grad_many;
grad must track value to finite-difference accuracy (see finite_diff_check).
Piecewise definitions cover all of R^n.
"""

import numpy as np

# hazard ceiling and the C^1 blend region feeding it; e^{-50} ~ 2e-22 so the
# barrier's exp term is numerically dead well before the box boundary
H_MAX = 50.0
H_BLEND_LO = 45.0


class ScalarField:
    """C^1 scalar function of the state with an analytic gradient."""

    def __init__(self, n, value_many, grad_many, name=""):
        self.n = int(n)
        self._value_many = value_many
        self._grad_many = grad_many
        self.name = name

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return float(self._value_many(x[None, :])[0])

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        return self._grad_many(x[None, :])[0]

    def value_many(self, X):
        X = np.asarray(X, dtype=float)
        return self._value_many(X)

    def grad_many(self, X):
        X = np.asarray(X, dtype=float)
        return self._grad_many(X)


class SandwichBounds:
    """Class-Kinf envelopes alpha1(v) = c1*v^p1 <= field <= alpha2(v) = c2*v^p2."""

    def __init__(self, c1, p1, c2, p2):
        if c1 <= 0 or c2 <= 0 or p1 <= 0 or p2 <= 0:
            raise ValueError("bounds must be strictly increasing from 0")
        self.c1, self.p1, self.c2, self.p2 = float(c1), float(p1), float(c2), float(p2)

    def alpha1(self, v):
        return self.c1 * np.asarray(v, dtype=float) ** self.p1

    def alpha2(self, v):
        return self.c2 * np.asarray(v, dtype=float) ** self.p2


class RegionBox:
    """Open axis-aligned box; per-axis (lower, upper) with lower < upper."""

    def __init__(self, bounds):
        b = np.asarray(bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or np.any(b[:, 0] >= b[:, 1]):
            raise ValueError("bounds must be per-axis (lower, upper), lower < upper")
        self.lo = b[:, 0].copy()
        self.hi = b[:, 1].copy()

    @property
    def n(self):
        return self.lo.shape[0]

    def contains_many(self, X):
        X = np.asarray(X, dtype=float)
        return np.all((X > self.lo) & (X < self.hi), axis=-1)

    def contains(self, x):
        return bool(self.contains_many(np.asarray(x, dtype=float)[None, :])[0])


# the example's obstacle region X = (-3,-1) x (0,2)
EXAMPLE_BOX = RegionBox([(-3.0, -1.0), (0.0, 2.0)])


def quadratic_field(Q, name="quadratic"):
    """x^T Q x with gradient 2 Q x; Q must be symmetric."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError("Q must be square")
    if not np.allclose(Q, Q.T, atol=1e-12):
        raise ValueError("Q must be symmetric")
    n = Q.shape[0]

    def value_many(X):
        return np.einsum("ij,jk,ik->i", X, Q, X)

    def grad_many(X):
        return 2.0 * X @ Q.T

    return ScalarField(n, value_many, grad_many, name=name)


def example_lyapunov():
    """V(x) = x1^2 + x1 x2 + x2^2 (eigenvalues 0.5 and 1.5)."""
    return quadratic_field(np.array([[1.0, 0.5], [0.5, 1.0]]), name="V")


def example_sandwich():
    return SandwichBounds(0.5, 2, 1.5, 2)


def _quintic_blend(s):
    # P(0)=0, P(1)=1, P'(0)=1, P'(1)=0: C^1 ramp onto the plateau
    return ((3.0 * s - 7.0) * s + 4.0) * s * s * s + s


def _quintic_blend_d(s):
    return ((15.0 * s - 28.0) * s + 12.0) * s * s + 1.0


def _hazard_pieces(X):
    """Returns (value, d/draw wrt raw, raw gradient) of the clamped hazard."""
    x1 = X[..., 0]
    x2 = X[..., 1]
    inside = EXAMPLE_BOX.contains_many(X)
    # reciprocal arguments are positive only inside the box; mask before
    # dividing so no invalid values are ever formed
    d1 = np.where(inside, 1.0 - (x1 + 2.0) ** 2, 1.0)
    d2 = np.where(inside, 1.0 - (x2 - 1.0) ** 2, 1.0)
    d1 = np.maximum(d1, 1e-300)
    d2 = np.maximum(d2, 1e-300)
    raw = 1.0 / d1 + 1.0 / d2
    s = np.clip((raw - H_BLEND_LO) / (H_MAX - H_BLEND_LO), 0.0, 1.0)
    val = np.where(raw < H_BLEND_LO, raw,
                   H_BLEND_LO + (H_MAX - H_BLEND_LO) * _quintic_blend(s))
    val = np.where(inside, val, H_MAX)
    dval = np.where(raw < H_BLEND_LO, 1.0, _quintic_blend_d(s))
    dval = np.where(inside & (raw < H_MAX), dval, 0.0)
    g1 = np.where(inside, 2.0 * (x1 + 2.0) / (d1 * d1), 0.0)
    g2 = np.where(inside, 2.0 * (x2 - 1.0) / (d2 * d2), 0.0)
    return val, dval, g1, g2


def example_hazard():
    """H(x) = 1/(1-(x1+2)^2) + 1/(1-(x2-1)^2) inside the box, clamped at
    H_MAX with a C^1 quintic blend over [45, 50]; H == H_MAX outside."""

    def value_many(X):
        return _hazard_pieces(X)[0]

    def grad_many(X):
        _, dval, g1, g2 = _hazard_pieces(X)
        return np.stack([dval * g1, dval * g2], axis=-1)

    return ScalarField(2, value_many, grad_many, name="H")


_E4 = np.exp(-4.0)


def example_margin(r):
    """Exterior envelope phi_m(r) = e^{-4} r^2; the barrier satisfies
    B(x) <= -phi_m(|x|) outside the box."""
    return _E4 * np.asarray(r, dtype=float) ** 2


def example_barrier():
    """B = (e^{-H} - e^{-4})||x||^2 inside the box, -e^{-4}||x||^2 outside.

    Positive exactly on the unsafe set D = {H < 4}, <= -e^{-4}||x||^2 off
    the box.  C^1 via the hazard clamp (the e^{-H} term dies with zero
    gradient before the box boundary).
    """

    def value_many(X):
        H, _, _, _ = _hazard_pieces(X)
        r2 = np.sum(X * X, axis=-1)
        inside = EXAMPLE_BOX.contains_many(X)
        coef = np.where(inside, np.exp(-H) - _E4, -_E4)
        return coef * r2

    def grad_many(X):
        H, dval, g1, g2 = _hazard_pieces(X)
        r2 = np.sum(X * X, axis=-1)
        inside = EXAMPLE_BOX.contains_many(X)
        eH = np.exp(-H)
        coef = np.where(inside, eH - _E4, -_E4)
        out = 2.0 * coef[..., None] * X
        out[..., 0] -= eH * dval * g1 * r2
        out[..., 1] -= eH * dval * g2 * r2
        return out

    return ScalarField(2, value_many, grad_many, name="B")


def combine_clbrf(V, B, psi):
    """W = V + psi*B, combined value and gradient (exactly affine)."""
    if V.n != B.n:
        raise ValueError("field dimensions differ")
    if psi <= 0:
        raise ValueError("psi must be positive")
    psi = float(psi)

    def value_many(X):
        return V.value_many(X) + psi * B.value_many(X)

    def grad_many(X):
        return V.grad_many(X) + psi * B.grad_many(X)

    return ScalarField(V.n, value_many, grad_many, name="W")


def finite_diff_check(field, x, h=1e-5):
    """Max componentwise |analytic grad - central difference| at x."""
    x = np.asarray(x, dtype=float)
    g = field.grad(x)
    worst = 0.0
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        fd = (field.value(x + e) - field.value(x - e)) / (2.0 * h)
        worst = max(worst, abs(g[i] - fd))
    return worst


def check_sandwich(field, bounds, states):
    """Verify alpha1(||x||) <= field(x) <= alpha2(||x||) on the samples.

    Returns a dict with pass flag, worst slack (most negative means worst
    violation) and a witness state if any sample violates.
    """
    X = np.asarray(states, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty 2-d sample array")
    v = np.sqrt(np.sum(X * X, axis=1))
    f = field.value_many(X)
    lo_slack = f - bounds.alpha1(v)
    hi_slack = bounds.alpha2(v) - f
    slack = np.minimum(lo_slack, hi_slack)
    i = int(np.argmin(slack))
    ok = bool(slack[i] >= -1e-12)
    return {
        "pass": ok,
        "worst_slack": float(slack[i]),
        "witness": None if ok else X[i].copy(),
    }
