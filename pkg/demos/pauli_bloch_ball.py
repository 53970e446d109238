"""Which qubit targets survive a Pauli channel, and what to send when they don't.

A Pauli channel shrinks the Bloch ball along each axis by q_i. A target is
exactly reachable when its pre-image r_i / q_i still lies in the unit ball;
otherwise the fidelity program finds the best input.

    python3 demos/pauli_bloch_ball.py
"""

import numpy as np

from qepc import channels as c
from qepc import experiments as ex
from qepc import precomp as pc
from qepc.sdp import max_fidelity

params = c.PauliChannelParams((0.7, 0.1, 0.1, 0.1))
ch = params.channel()
print("shrink factors q =", params.q[1:])

for x in (0.3, 0.6, 0.9):
    target = c.from_bloch([x, 0, 0])
    res = pc.solve_exact(ch, target)
    line = f"target r=({x}, 0, 0): case {res.case}"
    if res.feasible:
        line += f", send Bloch {np.round(c.to_bloch(res.state.matrix), 6)}"
    else:
        F, rho_in = max_fidelity(ch, target)
        line += (f", unreachable (min eigenvalue {res.certificate:+.3f});"
                 f" best F = {F:.6f} from Bloch {np.round(c.to_bloch(rho_in.matrix), 4) + 0.0}")
    print(line)

# A channel that erases two axes: only targets on the surviving axis are in range.
half = c.PauliChannelParams((0.5, 0.5, 0.0, 0.0))
for r in ([0.4, 0, 0], [0, 0.2, 0]):
    res = pc.solve_exact(half.channel(), c.from_bloch(r))
    kind = type(res).__name__
    print(f"q={half.q[1:]}, target {r}: case {res.case} ({kind})")

rep = ex.monte_carlo(ch, 2000, "bloch-ball-uniform", seed=0)
print()
print("uniform Bloch-ball targets:", rep.summary())
print(f"expected perfect fraction 0.6^3 = {0.6 ** 3:.3f}")
