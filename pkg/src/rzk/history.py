"""Bounded-history trajectory windows.

A HistoryWindow is the computational stand-in for a continuous history
segment: it stores time-stamped state samples spanning at least the delay
horizon and answers interpolation queries at offsets theta in [-Delta, 0]
measured from the latest sample.  All decrease inequalities in this package
query histories only through `interpolate` and `weighted_sup`.
"""

import numpy as np

# default number of theta-grid points for sup evaluations: 64 interior-ish
# points plus both endpoints, so theta = 0 is always on the grid
DEFAULT_GRID = 66

LINEAR = "linear"
CUBIC = "cubic-hermite"


class HistoryWindow:
    """Time-stamped samples with cubic-Hermite (or linear) interpolation.

    Samples before `const_until` are implied: the window was initialized
    from a constant initial function and reads there return `const_state`
    exactly.  Slopes are stored per sample; when a sample is pushed without
    a slope the interpolation falls back to a finite-difference slope for
    the affected interval.
    """

    __slots__ = ("n", "delta", "order", "ts", "xs", "ms", "count",
                 "const_state", "const_until", "_scratch")

    def __init__(self, n, delta, order=CUBIC):
        if delta <= 0:
            raise ValueError("horizon must be positive")
        self.n = int(n)
        self.delta = float(delta)
        self.order = order
        cap = 256
        self.ts = np.empty(cap)
        self.xs = np.empty((cap, self.n))
        self.ms = np.empty((cap, self.n))
        self.count = 0
        self.const_state = None
        self.const_until = None
        self._scratch = 0  # number of trailing scratch samples

    # -- construction ---------------------------------------------------

    def copy(self):
        w = HistoryWindow.__new__(HistoryWindow)
        w.n = self.n
        w.delta = self.delta
        w.order = self.order
        w.ts = self.ts[: self.count].copy()
        w.xs = self.xs[: self.count].copy()
        w.ms = self.ms[: self.count].copy()
        w.count = self.count
        w.const_state = None if self.const_state is None else self.const_state.copy()
        w.const_until = self.const_until
        w._scratch = 0
        return w

    @property
    def latest_time(self):
        return self.ts[self.count - 1]

    @property
    def latest_state(self):
        return self.xs[self.count - 1]

    def _grow(self):
        cap = max(256, 2 * self.ts.shape[0])
        ts = np.empty(cap)
        xs = np.empty((cap, self.n))
        ms = np.empty((cap, self.n))
        ts[: self.count] = self.ts[: self.count]
        xs[: self.count] = self.xs[: self.count]
        ms[: self.count] = self.ms[: self.count]
        self.ts, self.xs, self.ms = ts, xs, ms

    def _append(self, t, x, m):
        if self.count == self.ts.shape[0]:
            self._grow()
        i = self.count
        self.ts[i] = t
        self.xs[i] = x
        self.ms[i] = m
        self.count = i + 1

    # -- mutation -------------------------------------------------------

    def push(self, t, x, slope=None):
        """Append a sample at time t > latest time.

        `slope` is dx/dt at the sample if known (exact-slope Hermite keeps
        the integrator's full order); otherwise the previous interval uses
        a secant slope.
        """
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError("state dimension mismatch")
        if not np.isfinite(t):
            raise ValueError("non-finite sample time")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite sample state")
        if self.count and t <= self.latest_time:
            raise ValueError("sample times must be strictly increasing")
        if slope is None:
            if self.count:
                dt = t - self.ts[self.count - 1]
                m = (x - self.xs[self.count - 1]) / dt
            else:
                m = np.zeros(self.n)
        else:
            m = np.asarray(slope, dtype=float)
        self._append(t, x, m)

    def push_scratch(self, t, x, slope=None):
        """Push a provisional stage sample; removable with pop_scratch."""
        self.push(t, x, slope)
        self._scratch += 1

    def pop_scratch(self):
        if self._scratch <= 0:
            raise ValueError("no scratch samples to pop")
        self.count -= 1
        self._scratch -= 1

    # -- queries --------------------------------------------------------

    def span_ok(self):
        """True when the window covers [-Delta, 0] behind its latest time."""
        t1 = self.latest_time
        t0 = self.const_until if self.const_until is not None else self.ts[0]
        return (t1 - t0) >= self.delta - 1e-12 or self.const_state is not None

    def interp_times(self, times):
        """Interpolate the state at absolute times (vectorized).

        Times at or before `const_until` return the constant initial state.
        Times must not exceed the latest sample time.
        """
        times = np.atleast_1d(np.asarray(times, dtype=float))
        out = np.empty((times.shape[0], self.n))
        c = self.count
        ts = self.ts[:c]
        if times.size and times.max() > ts[c - 1] + 1e-9:
            raise ValueError("interpolation beyond the latest sample")
        if self.const_state is not None:
            pre = times <= self.const_until + 1e-15
        else:
            pre = np.zeros(times.shape, dtype=bool)
            if times.size and times.min() < ts[0] - 1e-9:
                raise ValueError("interpolation before the earliest sample")
        live = ~pre
        if pre.any():
            out[pre] = self.const_state
        if live.any() and c == 1:
            # only the initial sample exists; live times can at most be
            # within rounding of it
            out[live] = self.xs[0]
        elif live.any():
            tq = np.minimum(times[live], ts[c - 1])
            i1 = np.searchsorted(ts, tq, side="left")
            i1 = np.clip(i1, 1, c - 1)
            i0 = i1 - 1
            t0 = ts[i0]
            dt = ts[i1] - t0
            s = (tq - t0) / dt
            x0 = self.xs[i0]
            x1 = self.xs[i1]
            if self.order == LINEAR:
                vals = x0 + s[:, None] * (x1 - x0)
            else:
                m0 = self.ms[i0] * dt[:, None]
                m1 = self.ms[i1] * dt[:, None]
                s = s[:, None]
                s2 = s * s
                s3 = s2 * s
                vals = ((2.0 * s3 - 3.0 * s2 + 1.0) * x0
                        + (s3 - 2.0 * s2 + s) * m0
                        + (-2.0 * s3 + 3.0 * s2) * x1
                        + (s3 - s2) * m1)
            out[live] = vals
        return out


def from_constant(x0, delta, order=CUBIC):
    """Window covering [-Delta, 0] that equals x0 everywhere on it."""
    x0 = np.asarray(x0, dtype=float).ravel()
    w = HistoryWindow(x0.shape[0], delta, order=order)
    w.const_state = x0.copy()
    w.const_until = 0.0
    w._append(0.0, x0, np.zeros(x0.shape[0]))
    return w


def push_sample(window, t, x, slope=None):
    """Functional alias for HistoryWindow.push (returns the window)."""
    window.push(t, x, slope)
    return window


def interpolate(window, theta):
    """State at offset theta in [-Delta, 0] from the latest sample time."""
    theta = float(theta)
    if theta < -window.delta - 1e-12 or theta > 1e-12:
        raise ValueError("theta outside [-Delta, 0]")
    return window.interp_times(np.array([window.latest_time + theta]))[0]


def theta_grid(delta, grid=DEFAULT_GRID):
    if grid < 2:
        raise ValueError("grid must have at least 2 points")
    return np.linspace(-delta, 0.0, int(grid))


def weighted_sup(window, field, mu=0.0, grid=DEFAULT_GRID):
    """max over the theta-grid of e^{mu*theta} * field(x(t+theta)).

    The sup defining the Razumikhin history term, discretized on a uniform
    grid with both endpoints included.  Signed: no absolute value is taken,
    so for sign-indefinite fields the result can be negative.
    """
    if mu < 0:
        raise ValueError("mu must be >= 0")
    thetas = theta_grid(window.delta, grid)
    states = window.interp_times(window.latest_time + thetas)
    vals = field.value_many(states)
    if mu:
        vals = np.exp(mu * thetas) * vals
    return float(np.max(vals))


def sup_norm(window, grid=DEFAULT_GRID):
    """max Euclidean norm of the state over the theta-grid."""
    thetas = theta_grid(window.delta, grid)
    states = window.interp_times(window.latest_time + thetas)
    return float(np.max(np.sqrt(np.sum(states * states, axis=1))))
