"""A few spherical function values, the c-function and the test function for mu = (6, 2)."""
import math

import numpy as np

from sp4verify.spherical.functions import c_inv_sq_closed, compare_c, phi
from sp4verify.spherical.testfunction import TestFunctionSpec, decay_order
from sp4verify.symplectic import RHO, cartan_from_norm

H = cartan_from_norm(1.0, (2, 1))
for n in (0, 5, 20, 60):
    lam = n * math.sqrt(12) * np.array([3.0, 1.0]) / math.hypot(3, 1)
    v = phi(lam, H)
    print(f"||lambda|| = {n:>2}: phi = {v.value:.6f}  (quadrature change {v.error:.1e})")
print("phi at i rho:", phi(1j * np.asarray(RHO, float), H).value)

cmp = compare_c((7.0, 3.0))
print(f"\n|c|^-2 at (7, 3): product {cmp.product:.6e}, closed {cmp.closed:.6e}")
print("on the wall (5, 5):", c_inv_sq_closed((5.0, 5.0)))

spec = TestFunctionSpec((6.0, 2.0))
print(f"\nepsilon = {spec.eps:.4f}, c_psi = {spec.c_psi:.4f}")
print("f~ at mu:", spec(np.array([6.0, 2.0])))
print("decay order along (1, 0.3):", round(decay_order(spec), 1))
