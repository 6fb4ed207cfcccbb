"""
Proximal operators: shrinkage maps in one page
==============================================

The nonsmooth parts of a split problem enter only through their prox
maps. Each map takes a point v and a scale t and returns the minimizer
of h(u) + ||u - v||^2 / (2t).
"""

import numpy as np

from bosvs import prox

rng = np.random.default_rng(1)

# Soft thresholding is the prox of t * ||.||_1: values inside [-t, t]
# go to zero, the rest move toward zero by t.
v = np.array([-2.0, -0.3, 0.0, 0.4, 1.5])
print('v              ', v)
print('soft(v, 0.5)   ', prox.soft_threshold(v, 0.5))

# Group shrinkage is the prox of t * sum of group norms. Groups are
# strided: with group size 2 and 2m entries, entry j pairs with entry
# m + j, the layout of stacked horizontal/vertical difference fields.
# Small groups vanish together, large ones shrink radially.
g = np.array([3.0, 0.1, 0.0, 4.0, 0.1, 0.3])
print('group(g, 0.5)  ', np.round(prox.group_shrink(g, 0.5), 4))

# A box indicator projects: the prox forgets t entirely.
print('box[-1,1](v)   ', prox.box_clamp(v, -1.0, 1.0))

# Every prox of a convex function is firmly nonexpansive, the property
# the convergence analysis leans on:
#   ||P(v) - P(w)||^2 <= <P(v) - P(w), v - w>  for all v, w.
worst = -np.inf
h = prox.ScaledL1(0.7)
for _ in range(2000):
    a, b = rng.standard_normal(30), rng.standard_normal(30)
    da = h.prox(a, 0.8) - h.prox(b, 0.8)
    worst = max(worst, float(da @ da - da @ (a - b)))
print('firm nonexpansiveness margin over 2000 pairs: %.2e (<= 0)' % worst)

# The class wrappers carry the weight so problem files can serialize
# them; ScaledL1(w).prox(v, t) equals soft_threshold(v, w * t).
s = prox.ScaledL1(0.25)
print('ScaledL1(0.25).prox(v, 2.0) == soft(v, 0.5):',
      np.array_equal(s.prox(v, 2.0), prox.soft_threshold(v, 0.5)))
