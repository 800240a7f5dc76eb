# %% [markdown]
# # Closed-form threshold policies
#
# A sensor with a finite battery decides when to spend one unit of energy on
# a status update. The optimal rule is a threshold on the current age that
# depends on how many units are stored. This script solves the two recharge
# models in closed form and prints the thresholds.

# %%
import numpy as np

from aoi_threshold import p_rbr, solve_ibr, solve_rbr
from aoi_threshold.ibr import p4_ibr

# %% [markdown]
# ## Full recharge per arrival (RBR)
#
# The optimal average age is the zero of a decreasing scalar function, found
# by bisection. Larger batteries always help.

# %%
for B in (1, 2, 4, 8, 16):
    s = solve_rbr(B)
    print(f"B={B:2d}  lambda*={s.lambda_star:.4f}  cut-offs={np.round(s.thresholds, 3)}")

# %%
# the objective is decreasing and crosses zero once
grid = np.linspace(0.05, 0.9, 10)
print(np.round([p_rbr(x, 4) for x in grid], 4))

# %% [markdown]
# ## One unit per arrival (IBR)
#
# For a four-unit battery each threshold is an explicit function of the
# full-battery threshold, so the solve is again one-dimensional.

# %%
s = solve_ibr(4)
print(f"lambda*={s.lambda_star:.4f}")
print("thresholds by stored units 1..4:", np.round(s.policy().thresholds, 4))
print("residual at the root:", p4_ibr(s.lambda_star))
