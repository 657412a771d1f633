"""Build the two cycle environments and inspect their diagnostics.

Ranker 0 is a Condorcet winner, but the remaining rankers beat one another
in a ring. Borda scores barely separate the winner, which is exactly what
makes these environments hard for methods that lean on average strength.
"""

import numpy as np

from duelbench import diagnose, generate_cycle

for name, (pc, pr) in {"Cycle": (0.51, 1.0), "Cycle2": (0.6, 0.51)}.items():
    p = generate_cycle(19, pc, pr)
    d = diagnose(p)
    print(f"{name}: K={p.k}, Condorcet winner {d.condorcet}, delta_min {d.delta_min:.3g}")
    print(f"  Borda: winner {d.borda_scores[0]:.2f}, others {np.unique(d.borda_scores[1:].round(9))}")
    print(f"  Copeland: winner {d.copeland_scores[0]:.3f}, others {d.copeland_scores[1]:.3f}")
    print(f"  assumptions hold: {d.assumption1_holds and d.assumption2_holds}")
