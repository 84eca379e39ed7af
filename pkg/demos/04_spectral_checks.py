"""Closing conditions and branch diagnostics of rotational spectral data.

Spectral data is a pair of real polynomials (a, b) plus two marked points.
Closed cylinders need: a nonnegative on the real axis (A), all periods of
d ln mu in 2 pi i Z (B), and mu = +-1 at the marked points (C).  The trace
function Delta = 2 cosh(ln mu) organizes the real diagnostics: its real
branch points and the integer invariant counting double points.
"""

import json

import numpy as np

from cmcs3 import families, spectral as sp

for h_val, alpha in ((0.0, 0.25), (0.5, 0.25), (2.0, 0.75)):
    data, b2 = families.revolution_family(families.RevolutionParams(h_val, alpha))
    rep = sp.check_conditions(data)
    print(
        f"H = {h_val}, alpha = {alpha}: A/B/C = "
        f"{rep['A']}/{rep['B']['pass']}/{rep['C']['pass']}, "
        f"residual B = {rep['residuals']['B']:.2e}, "
        f"C = ({rep['residuals']['C0']:.2e}, {rep['residuals']['C1']:.2e})"
    )
    report = sp.real_branch_points(data, window=(-10.0, 10.0))
    doubles = [e for e in report if e.kind in ("double_point", "both")]
    kappas = ", ".join(f"{e.kappa.real:+.6f}" for e in doubles)
    print(f"  real double points (mu = +-1): {kappas} (marked: +-{data.kappa0:.6f})")
    g_val, details = sp.g_invariant(data)
    print(f"  G invariant: {g_val} (details: {details['real_double_points']} doubles)")

# Genus-zero data of the flat minimal torus: Delta touches +-2 at {0, +-1}.
clifford = families.clifford_spectral_data()
report = sp.real_branch_points(clifford, window=(-3.0, 3.0))
for e in report:
    print(f"clifford branch point: kappa = {e.kappa.real:+.6f}, Delta = {complex(e.delta).real:+.4f}")

# Spectral data round-trips through JSON for use with the command line tool.
print(json.dumps(clifford.to_json()))
