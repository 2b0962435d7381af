# %% [markdown]
# # Kirkwood-Dirac distributions of a qubit
#
# Build the distribution of a pure qubit measured in two rotated bases, check its marginals,
# and see an entry escape the classical region.

# %%
import numpy as np

from kdquasi import kd_distribution, marginals, nonclassicality_witness
from kdquasi.quantum import theorem1_example

rho, X, Y = theorem1_example()
q = kd_distribution(rho, X, Y)
print(np.round(q.table, 6))

# %% [markdown]
# The marginals are the Born probabilities of each measurement.

# %%
px, py = marginals(q)
print("p(x) =", px, " p(y) =", py)
print("Born X:", X.probabilities(rho), " Born Y:", Y.probabilities(rho))

# %% [markdown]
# Every modulus is bounded by the geometric mean of its marginals, yet one entry exceeds the
# smaller marginal, something no classical joint distribution can do.

# %%
print("|q|^2 <= p_x p_y:", bool(np.all(q.moduli**2 <= np.outer(px, py) + 1e-12)))
print("|q_00| =", q.moduli[0, 0], "> min(p_x, p_y) =", min(px[0], py[0]))

# %%
w = nonclassicality_witness(q)
print(w)
print("sum|q|^2 =", q.l2)
