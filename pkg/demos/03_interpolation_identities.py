"""
The cavity interpolation, checked numerically
=============================================

H_t moves from a decoupled single-site Hamiltonian at t=0 to the full model
at t=1, driven by Brownian couplings B_ij[t] and time-reversed site
fields W_i[t].  Here we sample paths and check the identities that the
interpolation relies on.
"""

import numpy as np

from gsfluct import effective, interpolation, model
from gsfluct.interpolation import PathGrid
from gsfluct.model import ModelParams

params = ModelParams(2, 6, 0.3, 0.2, -0.1)
fp = effective.fixed_point_solve(params)
grid = PathGrid(256)
path = interpolation.sample_path(params, grid, seed=1)

# The reversed fields start at the Gaussian eta and end at zero.
W = path.reversed_sites
print("W[0] == eta:", np.array_equal(W[:, 0], path.eta), " W[1] == 0:", np.all(W[:, -1] == 0))

# At t=1 the interpolated Hamiltonian is the model Hamiltonian built on B[1].
sigma = np.array([2, -1, 0, 1, -2, 1])
hp = interpolation.hamiltonian_path(sigma, path, fp, params)
print(f"H_1 = {hp.values[-1]:.12f}, H_N = {model.hamiltonian(sigma, path.couplings(), params):.12f}")

# The summed product of increments estimates the cross-variation; its error
# shrinks like K^(-1/2).
small = ModelParams(1, 6, 0.2, 0.3, 0.05)
fp_small = effective.fixed_point_solve(small)
rms, slope = interpolation.qv_scaling(small, fp_small, [2**6, 2**8, 2**10], 200, seed=2)
print("QV RMS gaps:", np.array2string(rms, precision=4), f"slope {slope:.3f}")

# Gaussian integration by parts at t = 1/2, averaged over disorder and paths.
est = interpolation.ibp_identity_estimate(small, fp_small, 0.5, 2000, PathGrid(2), seed=3)
print(f"IBP: lhs {est.lhs:.5f} +/- {est.lhs_se:.5f}, rhs {est.rhs:.5f} +/- {est.rhs_se:.5f}")

# W[t] = B[1-t] has variance 1 - t.
var, se = interpolation.time_reversal_marginals(ModelParams(1, 1, 0.0), PathGrid(4), [0.25, 0.5, 0.75],
                                                20_000, seed=4)
print("Var W[t] at t = 0.25, 0.5, 0.75:", np.array2string(var, precision=3))
