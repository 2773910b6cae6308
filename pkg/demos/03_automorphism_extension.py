"""
The extension 1 -> Hom(H_p, L_{k+1}) -> Aut N_{k+1} -> Aut N_k -> 1
=================================================================

Exactness, non-centrality of the full extension, and centrality of its
restriction to IA automorphisms.
"""

from pcentral import extensions as ext
from pcentral.endos import Ctx

for p, n, k, s in [(2, 2, 1, "Z"), (3, 2, 1, "Z"), (2, 2, 2, "Z"), (2, 2, 1, "S")]:
    rep = ext.verify_exactness(Ctx(p, n, k, s))
    legs = ", ".join(f"{l.name}={'ok' if l.ok else 'FAIL'}" for l in rep.legs)
    print(f"({p},{n},{k},{s}) |Hom| = {rep.hom_size}: {legs}")

# %% A kernel element moved by conjugation: the extension is not central.
rep = ext.verify_noncentral(Ctx(2, 2, 1, "Z"))
for key, val in rep.witness.items():
    print(f"  {key:10s} {val}")

# %% On IA^p the same kernel is central.
rep = ext.verify_ia_central(Ctx(2, 2, 2, "Z"))
print("IA-central at (2,2,2,Z):", rep.ok, rep.leg("ia_commutes_with_kernel").detail)

# %% [IA_k, G_l] lies in G_{k+l}, and the bound is attained.
for k, l in [(1, 2), (2, 1), (1, 3)]:
    rep = ext.verify_sharpness(k, l)
    print(f"k={k} l={l}: weight {rep.leg('weight_exact').detail['weight']}")
