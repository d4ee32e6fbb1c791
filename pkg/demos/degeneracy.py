"""Linear degeneracy of the characteristic fields near the rest state.

For random small states every eigenvalue of the flux symbol is constant along
its own eigenvector.  A central difference therefore measures only roundoff,
which grows like machine epsilon / step as the step shrinks.  The control
column shows the same difference quotient converging at second order on a
generic direction, where the eigenvalue does vary.

    python demos/degeneracy.py
"""
import numpy as np

from lame_ci import hyperbolic as H
from lame_ci.params import LameParams

params = LameParams()
for d in (2, 3):
    S = H.sample_degeneracy(params, d, n=30, seed=0)
    print(f"d = {d}: {len(S.rows)} admissible states "
          f"({S.rejected_complex} complex spectra and {S.rejected_conditioning} clustered ones rejected)")
    print(f"  zero-eigenvalue multiplicities seen: {sorted({z for _, _, z in S.rows})}")
    for h, r in H.richardson_table(params, S.states, steps=(1e-4, 1e-5, 1e-6, 1e-7)):
        print(f"  step {h:.0e}: max |grad lambda . r| = {r:.2e}   (eps/step = {np.finfo(float).eps / h:.1e})")
    orders = [H.richardson_order(U, xi, params) for U, xi in S.states[:10]]
    print(f"  control: observed order on a generic direction, median {np.median(orders):.3f}\n")
