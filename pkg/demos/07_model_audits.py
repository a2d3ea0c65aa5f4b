"""Which Gaussian models are admissible, and how the code checks.

Two audits gate every model before the heavy experiments trust it.  The
first measures the mixed variation of the covariance on dyadic meshes and
fits the stabilized value; for Brownian motion it is the horizon itself,
and for fractional Brownian motion with Hurst index H it scales with
rho = 1/(2H).  The second examines the incremental standard deviation
sigma(tau): near-concavity, a doubling constant, and the comparison
against the wavelet coefficient envelope.
"""

from roughball.gaussian import (
    brownian_model,
    fbm_model,
    rho_variation_audit,
    sigma_conditions_audit,
    wavelet_variance,
)

for label, model in (("brownian", brownian_model()),
                     ("fbm H=0.40", fbm_model(0.40)),
                     ("fbm H=0.45", fbm_model(0.45))):
    audit = rho_variation_audit(model, mesh_levels=7)
    print(f"{label:12s} rho={model.rho:.3f}  mixed-variation estimate "
          f"{audit['estimate']:.5f}  fitted M={audit['fitted_M']:.4f}")

print()
model = fbm_model(0.4)
sig = sigma_conditions_audit(model)
print("sigma(tau) structure for fbm H=0.4:")
print(f"  doubling constant {sig['doubling_C2']:.4f}  (pass: {sig['doubling_pass']})")
print(f"  concavity ok: {sig['convexity']}")
print(f"  wavelet envelope ratio {sig['envelope_ratio']:.4f}  (pass: {sig['envelope_pass']})")

print()
print("per-level wavelet coefficient variances (fbm H=0.4):")
print("  level p   variance        x 2^(-p(1-2H)) (should be flat)")
h = 0.4
for p in range(7):
    v = wavelet_variance(model, p)
    print(f"  {p}         {v:.6e}   {v * 2 ** (-p * (1 - 2 * h)):.6f}")
