"""Simple-factor dressing and the root arithmetic of the determinant.

Dressing an initial value at a point beta inside the unit disk multiplies the
determinant polynomial by (lam - beta)^2 (1 - conj(beta) lam)^2, planting
double zeros at beta and 1/conj(beta).  The inverse direction divides a
common zero out of the field, dropping the degree back down.
"""

import numpy as np
import numpy.polynomial.polynomial as npoly

from cmcs3 import families, loop_algebra as la

xi = families.delaunay_xi(families.DelaunayParams(0.3, 0.5))
a0 = np.asarray(la.det_polynomial(xi)[0])
print(f"base determinant polynomial (degree {len(a0) - 1}): {np.real_if_close(a0)}")
for r in la.find_roots(a0):
    print(f"  root {r.value:.6f}, multiplicity {r.multiplicity}, real = {r.is_real}")

beta = 0.35 - 0.2j
dressed = la.dress_simple_factor(xi, beta)
a1 = np.asarray(la.det_polynomial(dressed)[0])
print(f"dressed determinant degree: {len(a1) - 1}")
for r in la.find_roots(a1):
    print(f"  root {r.value:.6f}, multiplicity {r.multiplicity}")

quad = npoly.polymul([-beta, 1.0], [1.0, -np.conj(beta)])
expect = npoly.polymul(npoly.polymul(a0, quad), quad)
print(f"determinant identity residual: {np.max(np.abs(a1 - expect)):.3e}")

# The inverse operation: lift the field by the factor vanishing at beta and
# 1/conj(beta), then divide the common zero back out.
factor = la.root_removal_factor(beta)
coeffs = np.zeros((xi.g + 4, 2, 2), dtype=complex)
for i in range(2):
    for j in range(2):
        prod = npoly.polymul(xi.entry_poly(i, j), factor)
        coeffs[: prod.size, i, j] = prod
lifted = la.LaurentMatrix(xi.g + 2, coeffs)
reduced = la.divide_root(lifted, beta)
print(
    "division recovers the base field to "
    f"{np.max(np.abs(reduced.coeffs - xi.coeffs)):.3e}"
)
