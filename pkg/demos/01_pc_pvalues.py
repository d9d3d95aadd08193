"""
Partial conjunction p-values
============================

For a voxel with per-subject p-values p_1..p_s, the PC p-value at
granularity gamma tests "active in fewer than gamma subjects". Fisher's
method is applied to the s - gamma + 1 largest p-values only.
"""
import numpy as np

from pcmap import conditional_pc, fisher_pc_pvalue, new_pvalue_matrix, pc_field

# one voxel, four subjects: strong signal in three, nothing in the fourth
row = [1e-6, 2e-4, 0.003, 0.61]
for gamma in range(1, 5):
    print(f"gamma={gamma}: p^{gamma}/4 = {fisher_pc_pvalue(row, gamma):.3g}")

# The whole field at once: column gamma-1 holds the PC p-values at gamma.
rng = np.random.default_rng(0)
matrix = new_pvalue_matrix(rng.uniform(size=(5, 4)) ** 3)
field = pc_field(matrix)
np.set_printoptions(precision=4, suppress=True)
print(field.pc)

# CoFilter keeps voxels with pc <= tau and rescales them
print("conditional:", conditional_pc(0.004, tau=0.1))
