# %% [markdown]
# # Checking the norm bounds on random instances
#
# A seeded campaign draws random states and measurements, evaluates every bound, and keeps
# the smallest slack seen for each.

# %%
from kdquasi.campaign import run_campaign

report = run_campaign(d=3, seed=11, count=300, measurements="mixed")
print("passed:", report.passed)

# %%
summary = report.to_json()
for bound_id, stats in sorted(summary["bounds"].items()):
    print(f"{bound_id:40s} min slack {stats['min_slack']:+.3e}  violations {stats['violations']}")

# %% [markdown]
# A single instance in detail, including the support counts and the state-dependent bounds.

# %%
from kdquasi import bound_suite
from kdquasi.quantum import derived_rng, random_density, random_povm, random_pvm

rng = derived_rng(11, 0)
rho = random_density(3, 2, rng)
rep = bound_suite(rho, random_pvm(3, rng), random_povm(3, 4, rng))
print(rep.metadata)
print(rep.to_csv())
