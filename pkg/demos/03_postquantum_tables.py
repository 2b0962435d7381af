# %% [markdown]
# # Tables beyond quantum theory
#
# Relax the Kirkwood-Dirac structure to unit-sum tables with entries in the unit disk.

# %%
import numpy as np

from kdquasi.postquantum import (
    beyond_kd_example,
    case_maxima,
    complex_saturator,
    one_negative_family,
    real_sup_search,
    two_negative_family,
)

sat = complex_saturator()
print(np.round(sat.table, 6))
print("sum|l| =", sat.l1, "equals the table size", sat.size)

# %%
ex = beyond_kd_example()
print(np.round(ex.table, 6), "sum|l| =", ex.l1)

# %% [markdown]
# With real entries the best a 2x2 table reaches is 3, found by a grid search and attained by
# two explicit families.

# %%
sup, arg = real_sup_search(grid_step=0.05)
print("grid sup:", sup, "at", arg.values.ravel())
print("one negative:", one_negative_family(0.3, 0.9).l1)
print("two negatives:", two_negative_family(-0.2).l1)

# %% [markdown]
# Per sign pattern: three negative entries force the remaining one above 1, so that case is empty.

# %%
print(case_maxima(0.1))
