"""Control-affine delay dynamics xdot = f(x_t) + g(x_t) u and the
mechanical example plant (mass-spring with delayed nonlinear friction).
"""

import numpy as np


class DelayDynamics:
    """The pair of history functionals (f, g).

    drift(window) -> (n,) vector, input_map(window) -> (n, m) matrix.
    `read_points` lists the theta offsets the maps actually consume, so
    integrators can reason about required history accuracy.
    """

    def __init__(self, n, m, drift, input_map, delta, read_points=(0.0,), name=""):
        self.n = int(n)
        self.m = int(m)
        self.drift = drift
        self.input_map = input_map
        self.delta = float(delta)
        self.read_points = tuple(read_points)
        self.name = name

    def f(self, window):
        return np.asarray(self.drift(window), dtype=float)

    def g(self, window):
        G = np.asarray(self.input_map(window), dtype=float)
        return G.reshape(self.n, self.m)


class ExampleConfig:
    """Delay parameter for the example plant; tau in [0, 0.3]."""

    def __init__(self, tau=0.3, delta=0.3):
        if not (0.0 <= tau <= delta):
            raise ValueError("tau must lie in [0, delta]")
        self.tau = float(tau)
        self.delta = float(delta)


def friction(v):
    """h(v) = (0.8 + 2 e^{-100|v|}) tanh(10 v) + v, elementwise."""
    v = np.asarray(v, dtype=float)
    out = (0.8 + 2.0 * np.exp(-100.0 * np.abs(v))) * np.tanh(10.0 * v) + v
    return out if out.ndim else float(out)


def example_system(cfg=None):
    """x1dot = x2, x2dot = -h(x2(t-tau)) - x1 + u; g is the constant column
    (0, 1) (kept as printed even though it does not vanish at the origin;
    the closed loop still has an equilibrium there because u does)."""
    if cfg is None:
        cfg = ExampleConfig()
    tau = cfg.tau

    def drift(window):
        now = window.latest_state
        xd = window.interp_times(np.array([window.latest_time - tau]))[0]
        return np.array([now[1], -friction(xd[1]) - now[0]])

    G = np.array([[0.0], [1.0]])

    def input_map(window):
        return G

    return DelayDynamics(2, 1, drift, input_map, cfg.delta,
                         read_points=(0.0, -tau), name="example")


def lie_derivatives(field, dyn, window):
    """(Lf, Lg) = (grad . f(window), grad^T g(window)) at x = window head."""
    if field.n != dyn.n:
        raise ValueError("field/dynamics dimension mismatch")
    gr = field.grad(window.latest_state)
    Lf = float(gr @ dyn.f(window))
    Lg = gr @ dyn.g(window)
    return Lf, np.asarray(Lg, dtype=float).ravel()


def pure_delay_system(tau=0.3, delta=None):
    """Scalar test plant xdot = -x(t - tau), u unused (m=1, g=0).

    Method of steps gives piecewise polynomials, handy as an exact oracle.
    """
    if delta is None:
        delta = tau

    def drift(window):
        xd = window.interp_times(np.array([window.latest_time - tau]))[0]
        return -xd

    def input_map(window):
        return np.zeros((1, 1))

    return DelayDynamics(1, 1, drift, input_map, delta,
                         read_points=(-tau,), name="pure-delay")
