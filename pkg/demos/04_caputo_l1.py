"""L1 approximation of the Caputo derivative.

For f(t) = t^2 the exact derivative of order a is 2 t^(2-a)/Gamma(3-a); the
error of the L1 scheme decays like dt^(2-a).  At a discrete interior minimum
the L1 value is nonpositive.
"""

import math

import numpy as np

from nonlocal_ircp import FractionalSpec, caputo_apply, check_extremum_lemma

alpha = 0.5
prev = None
for n in (32, 64, 128, 256, 512):
    spec = FractionalSpec(alpha, dt=1 / n, T=1.0)
    t = np.linspace(0, 1, n + 1)
    err = np.max(np.abs(caputo_apply(spec, t**2) - 2 * t ** (2 - alpha) / math.gamma(3 - alpha)))
    rate = "" if prev is None else f"  observed order {math.log2(prev / err):.3f}"
    print(f"dt = 1/{n:<4d} max error {err:.3e}{rate}")
    prev = err

t = np.linspace(0, 1, 201)
f = (t - 0.6) ** 2
rep = check_extremum_lemma(f, FractionalSpec(0.7, dt=1 / 200, T=1.0))
print(f"minimum at t = {t[rep.index]:.3f}: L1 value {rep.value:.3e} (<= 0)")
