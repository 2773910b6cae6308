"""
Zassenhaus and Stallings quotients
==================================

N_k = Gamma / Gamma_{k+1} for the two mod-p central series of the free
group Gamma, enumerated as finite p-groups.
"""

from pcentral import quotients as qt
from pcentral import truncalg as ta
from pcentral.extensions import verify_series_inclusions

# %% Layer dimensions from the Witt numbers agree with enumeration.
for p, n, kmax in [(2, 2, 4), (3, 2, 3), (2, 3, 3)]:
    dims, orders = ta.jennings_dims(p, n, kmax)
    built = [qt.build_nz(p, n, k).order for k in range(1, kmax + 1)]
    print(f"p={p} n={n}: dims {dims}  predicted {orders}  enumerated {built}")

# %% The Stallings series sits between two Zassenhaus terms.
st = qt.stallings_layers(2, 2, 2)
print("Stallings layer dims at (2,2):", st.dims())
rep = verify_series_inclusions(2, 2, 3)
for leg in rep.legs:
    print(f"  {leg.name:22s} {'ok' if leg.ok else 'FAIL'}")

# %% The class-2 polycyclic model of N^S_2 agrees with the coset model.
print("|N^S_2(2,2)| =", qt.build_ns2(2, 2).order, "=", qt.build_ns_coset(2, 2, 2).order)
print("|N^S_2(2,3)| =", qt.build_ns2(2, 3).order)

# %% The universal p-covering of N_1 has kernel of dimension C(n+1, 2).
for n in (2, 3):
    info = qt.build_tilde(2, n, 1)
    ok = qt.verify_pcovering(info.kernel, info.group, info.proj)
    print(f"n={n}: |tilde N_2| = {info.group.order}, kernel dim {info.dim_kernel}, p-covering {ok}")
