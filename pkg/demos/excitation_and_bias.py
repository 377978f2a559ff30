# Why the parameter estimate plateaus: the LS update is exactly batch least
# squares on the recorded regression.  With F(0) = I/f0 and
# dF/dt = -alpha F Omega^T Omega F, the inverse satisfies
#
#     F^{-1}(t) = f0 I + alpha * int_0^t Omega^T Omega ds,
#
# so the steady target is Gram^{-1} (f0 theta_g0 + alpha int Omega^T Y),
# i.e. the batch-LS solution.  The filters start at zero while the plant does
# not, which injects a transient regression error eps(t) ~ 0.2 * e^{-t}; its
# energy is baked into the normal equations and, because alpha multiplies
# both sides, the resulting bias is gain-independent.  This script checks the
# inverse identity numerically, measures the excitation level, and predicts
# the final parameter error from (Omega, eps) alone.

import numpy as np

from ltvobs import IntegrationConfig, make_example_scenario, run_closed_loop
from ltvobs.estimator import excitation_report
from ltvobs.gpebo import g_map, split_theta
from ltvobs.truth import true_theta_vector
from ltvobs.verify import regression_residual

sc = make_example_scenario()
cfg = IntegrationConfig(h=1e-3, t_final=100.0, record_stride=100)
res = run_closed_loop(sc, cfg)

t = res.t
rows = res.regressor_rows()                       # N x p
samples = res.regressor_samples()
Y = np.array([s.Y for s in samples])

# 1) inverse identity check at t_final
outer = rows[:, :, None] * rows[:, None, :]
gram = np.trapezoid(outer, t, axis=0)
F = res.seg("F")[-1].reshape(sc.p, sc.p)
lhs = np.linalg.inv(F)
rhs = sc.f0 * np.eye(sc.p) + sc.alpha * gram
print(f"|F^-1 - (f0 I + alpha Gram)| / |F^-1| = "
      f"{np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs):.2e}")

# 2) excitation level over [0, 100]
rep = excitation_report(t, res.delta_series(), rows, t_c=float(t[-1]))
eigs = np.linalg.eigvalsh(rep.gram)
print(f"Gram lambda_min = {eigs[0]:.3e}, lambda_max = {eigs[-1]:.3e} "
      f"(Gershgorin lower bound {rep.gram_min_eig_lower_bound:.3e})")
print(f"Delta crossings: {rep.delta_crossings}")

# 3) predicted batch-LS target vs the realized estimate
theta_true_g = g_map(sc, split_theta(sc, true_theta_vector(sc)))
cross = np.trapezoid(rows * Y[:, None], t, axis=0)
target_g = np.linalg.solve(rhs, sc.alpha * cross)   # theta_g0 = 0
theta_g_final = res.seg("theta_g")[-1]
print(f"|theta_g(100) - batch-LS target| = "
      f"{np.linalg.norm(theta_g_final - target_g):.3e}")

eps = regression_residual(res)
bias_g = np.linalg.solve(rhs, sc.alpha * np.trapezoid(rows * eps[:, None],
                                                      t, axis=0))
print(f"predicted |bias| on the extended vector = "
      f"{np.linalg.norm(bias_g):.4e}")
print(f"realized  |theta_g(100) - G(theta_true)| = "
      f"{np.linalg.norm(theta_g_final - theta_true_g):.4e}")
print(f"realized  |theta_err(100)| = {res.theta_err_norm()[-1]:.4e}")
print()
print("note: alpha appears on both sides of the normal equations, so this")
print("bias does not shrink with faster gains; it is set by the transient")
print("regression error and the weak excitation of the regressor.")
