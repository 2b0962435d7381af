# %% [markdown]
# # Searching for large nonclassicality
#
# Pattern search over pure states and pairs of bases, started from the rotated-basis qubit example.

# %%
from kdquasi.search import harvest_violations, maximize_l1, maximize_l2

res = maximize_l1(2, rng=5, restarts=3, iters=150)
print("best sum|q| =", res.best_value, "(upper limit sqrt(N) = 2)")
print("re-evaluated:", res.reevaluate())

# %%
print(res.trace_csv().splitlines()[:5])

# %% [markdown]
# The squared norm reaches its cap of 1 on classical-looking instances.

# %%
print("best sum|q|^2 =", maximize_l2(2, rng=5, restarts=2, iters=100).best_value)

# %% [markdown]
# Random sampling also finds strongly nonclassical qubit instances.

# %%
found = harvest_violations(2, rng=8, count=2000)
print(len(found), "nonclassical instances, best", found[0][1])
