"""
When does Aut N_{k+1} -> Aut N_k split?
=======================================

Split verdicts come with an explicit section; non-split verdicts with an
obstruction that can be replayed.
"""

from pcentral import matgroups as mg
from pcentral import splitting as sp

# %% Reduction SL_n(Z/p^2) -> SL_n(F_p) and its GL analogue.
for case in mg.verify_split_tables():
    print(f"{case.kind}_{case.n}(Z/{case.p}^2): {case.status:9s} (expected {case.expected})")

# %% Explicit sections of order p.
for row in sp.verify_fixture_sections().rows:
    print(f"{row['series']}({row['p']},{row['n']}) {row['name']:7s} {row['images']}  pass={row['pass']}")

# %% The (2,3) obstruction: no m_e solves the criterion equation.
cert = sp.obstruction_23("S")
print("b T13(b) image size:", cert.witness["b_image_size"], " m_e solutions:", cert.witness["m_solutions"])

# %% Verdict grid against the published classification.
for r in sp.verdict_grid():
    pub = "SPLIT" if sp.published_rule(r.series, r.p, r.n, r.k) else "NOSPLIT"
    cor = "SPLIT" if sp.corrected_rule(r.series, r.p, r.n, r.k) else "NOSPLIT"
    flag = "" if r.verdict == pub else "   <- differs from the published rule"
    print(f"{r.series} p={r.p} n={r.n} k={r.k}: {r.verdict:7s} published {pub:7s} corrected {cor}{flag}")
