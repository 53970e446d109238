"""Entangled two-qutrit target with amplitude damping on the second qutrit.

The closed-form input is compared against the generic transfer-matrix
solver, and the region of (gamma, p) where a valid input exists is traced
on a coarse grid.

    python3 demos/two_qutrit_damping.py
"""

import numpy as np

from qepc import channels as c
from qepc import experiments as ex
from qepc import precomp as pc

gamma, p = 0.2, 0.3
rho, valid = ex.example2_closed_form(gamma, p)
res = pc.solve_exact_bipartite(c.amplitude_damping_qutrit(gamma), 3, ex.example2_target(p))
print(f"gamma={gamma}, p={p}: case {res.case}, closed form valid={valid}")
print("max entry difference:", np.max(np.abs(res.rho_in.matrix - rho)))

print("\nreachable region ('#' = a valid input exists, '.' = none)")
ps = np.linspace(0, 1, 21)
targets = [ex.example2_target(q) for q in ps]
print("gamma \\ p  " + "".join("|" if i % 5 == 0 else " " for i in range(ps.size)))
for g in np.linspace(0, 0.5, 11):
    ext = c.extend_bipartite(c.amplitude_damping_qutrit(g), 3)
    row = "".join("#" if r.feasible else "." for r in pc.solve_exact_many(ext, targets))
    print(f"  {g:4.2f}     {row}")
print("no input exists once gamma exceeds 1/3")
