"""One diagonal problem, three weight exponents.

theta_iterate(theta) minimizes the lambda^theta-weighted error norm over
the same Krylov spaces, so each column below is monotone in N while the
off-diagonal entries are merely along for the ride. theta = 1 is classical
CG; theta = 2 minimizes the residual. The last block checks the
interpolation inequality rho1^2 <= rho0 * rho2 along the CG run.
"""

import numpy as np

from powercg.diagnostics import rho
from powercg.krylov import theta_iterate
from powercg.runs import build_custom_case

prob = build_custom_case({"dimension": 10, "seed": 42, "kappa": 1e4})
lam = prob.operator.eigenvalues()
print(f"spectrum [{lam.min():.3e}, {lam.max():.3e}], dim {lam.size}")

iterates = {th: [theta_iterate(prob, th, N) for N in range(11)]
            for th in (1.0, 2.0, 3.0)}

for th in (1.0, 2.0, 3.0):
    vals = [rho(prob, f, th) for f in iterates[th]]
    drops = " ".join(f"{v:.2e}" for v in vals[:8])
    assert all(b <= a * (1 + 1e-10) for a, b in zip(vals, vals[1:]))
    print(f"theta={th}: rho_{int(th)} series {drops} ... monotone ok")

print()
print("interpolation inequality along the CG run (theta = 1):")
for N in range(11):
    f = iterates[1.0][N]
    r0, r1, r2 = (rho(prob, f, s) for s in (0.0, 1.0, 2.0))
    gap = r1 * r1 / (r0 * r2) if r0 * r2 > 0 else float("nan")
    print(f"  N={N:2d}  rho1^2 / (rho0 rho2) = {gap:.6f}")
    assert not gap > 1 + 1e-10
