"""
Commutator calculus in the free group
=====================================

Conventions: [x, y] = x y x^-1 y^-1 and x^y = y x y^-1.
"""

from pcentral import truncalg as ta
from pcentral.words import (
    alternating_commutator,
    commutator,
    format_word,
    gen,
    hall_identity_suite,
    hall_witt,
    hall_witt_printed,
    parse_word,
)

x, y, z = gen(1, 3), gen(2, 3), gen(3, 3)
print("[x1,x2]          =", format_word(commutator(x, y)))
print("[x2,[x1,x2]]     =", format_word(alternating_commutator(2, 1, 3, 3)))

# %% The classical identities hold on random triples.
rep = hall_identity_suite(3, 1000, seed=42)
print("identities checked:", rep.checked, "failures:", len(rep.failures))

# %% Hall-Witt: the valid form is trivial, a common misprint is not.
print("Hall-Witt at (x1,x2,x3):", format_word(hall_witt(x, y, z)))
print("misprinted variant has length", len(hall_witt_printed(x, y, z)))

# %% Words act on the truncated algebra through x_i -> 1 + X_i.
for w in ["x1", "[x1,x2]", "x1^2", "[x1,[x1,x2]]"]:
    u = ta.eval_word(parse_word(w, 2), 2, 2, 4)
    print(f"{w:14s} weight {ta.zweight(u)}   {ta.format_series(u)}")
