"""Manufactured-solution convergence table for p = 1..3 on warped curved meshes."""
import sys

import numpy as np

from nsshape.gas import GasModel
from nsshape.mms import convergence_study, smooth_solution

orders = tuple(int(a) for a in sys.argv[1:]) or (1, 2, 3)
study = convergence_study(orders, (4, 8, 16), 0.05, smooth_solution(GasModel(mu=0.01)))
for p in orders:
    rows = [r for r in study.rows if r.p == p]
    obs = np.concatenate([[np.nan], study.orders(p)])
    for r, o in zip(rows, obs):
        print(f"p={p} n={r.n:3d} h={r.h:.4f} L2 error {r.error:.3e} order {o:5.2f}")
study.to_csv("mms.csv")
