"""Decay-rate roots and the comparison-system envelope.

Solves the transcendental rate equation for both published forms, then
integrates the worst-case scalar comparison dynamics

    vdot = -gamma v + eta * sup of v over the trailing delay window

and checks the e^{-rho t} envelope at 90% of the root rate.  Saves a plot
when matplotlib is importable.
"""

import numpy as np

from rzk import halanay

GAMMA, ETA, DELTA = 2.5, 2.0, 0.3


def main():
    for variant in ("proof", "statement"):
        r = halanay.decay_rate(GAMMA, ETA, DELTA, variant)
        resid = halanay.gamma_fn(r, GAMMA, ETA, DELTA, variant)
        print(f"rho_bar({variant}) = {r:.10f}   residual {resid:+.2e}")

    cert = halanay.DecayCertificate(GAMMA, ETA, DELTA)
    print(f"\nworking rate rho = 0.9 rho_bar = {cert.rho:.10f}")

    ts, vs = halanay.scalar_comparison_sim(GAMMA, ETA, 0.0, DELTA,
                                           v0=1.0, T=10.0, step=1e-3)
    rep = halanay.check_envelope(ts, vs, 1.0, cert.rho)
    print(f"envelope over [0, {ts[-1]:.0f}]: "
          f"{'holds' if rep['pass'] else 'VIOLATED'}, "
          f"max v / bound = {rep['max_ratio']:.9f}")

    # the comparison solution sits between the two root-rate envelopes:
    # slower than e^{-rho_bar t} would violate the lemma, faster than the
    # gamma-only rate is impossible while the sup term feeds back
    for t_probe in (2.0, 5.0, 10.0):
        k = int(round(t_probe / 1e-3))
        print(f"  v({t_probe:4.1f}) = {vs[k]:.6e}   "
              f"bound {np.exp(-cert.rho * ts[k]):.6e}")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("\nmatplotlib not available, skipping the plot")
        return
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(ts, np.maximum(vs, 1e-300), label="comparison solution v(t)")
    ax.semilogy(ts, np.exp(-cert.rho * ts), "--",
                label=r"envelope $e^{-\rho t}$, $\rho = 0.9\bar\rho$")
    ax.semilogy(ts, np.exp(-cert.rho_bar * ts), ":",
                label=r"root rate $e^{-\bar\rho t}$")
    ax.set_xlabel("t")
    ax.set_ylabel("v")
    ax.legend()
    fig.tight_layout()
    fig.savefig("decay_envelope.png", dpi=150)
    print("\nwrote decay_envelope.png")


if __name__ == "__main__":
    main()
