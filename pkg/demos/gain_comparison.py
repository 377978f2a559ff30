# Fast vs slow estimator gains.  The transient is clearly faster with
# (f0, alpha) = (0.001, 100) than with (0.1, 1), but both runs settle on the
# same order of final error: the steady state is the batch least-squares
# solution of the recorded regression, and the gains cancel out of it.

import numpy as np

from ltvobs import IntegrationConfig, make_example_scenario, run_closed_loop

cfg = IntegrationConfig(h=1e-3, t_final=100.0, record_stride=100)
res_fast = run_closed_loop(make_example_scenario(), cfg)
res_slow = run_closed_loop(make_example_scenario(slow_gains=True), cfg)

e_fast = res_fast.theta_err_norm()
e_slow = res_slow.theta_err_norm()
t = res_fast.t

print("      t    fast gains    slow gains")
for tq in (1.0, 5.0, 20.0, 50.0, 100.0):
    i = np.searchsorted(t, tq)
    print(f"{t[i]:7.1f}    {e_fast[i]:.4e}    {e_slow[i]:.4e}")

d_fast = res_fast.delta_series()
d_slow = res_slow.delta_series()
print()
print(f"Delta(100): fast = {d_fast[-1]:.3e}, slow = {d_slow[-1]:.3e}")
print(f"final |theta_err|: fast = {e_fast[-1]:.4e}, slow = {e_slow[-1]:.4e}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(t, np.maximum(e_fast, 1e-16), label="fast gains")
    ax.semilogy(t, np.maximum(e_slow, 1e-16), label="slow gains")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("|theta_err|")
    ax.legend()
    fig.tight_layout()
    fig.savefig("gain_comparison.png", dpi=120)
    print("wrote gain_comparison.png")
except ImportError:
    print("matplotlib not available, skipping plot")
