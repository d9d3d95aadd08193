"""
Equi-correlated Monte Carlo study
=================================

Reproduces the layout of the equi-correlated FDR table: m = 1000 voxels,
s = 10 subjects, n = 50 observations per map, voxel activity counts roughly
proportional to 1.5**(s - i). Use REPS = 500 for the full-size study
(a few minutes); the default here is quick.
"""
import os

from pcmap import EquiCorrScenario, Procedure, aggregate, simulate_trials

REPS = int(os.environ.get("REPS", "20"))
procs = [Procedure("adafilter"), Procedure("bh-selective"), Procedure("cofilter-adaptive")]

print(f"{'rho':>4}  " + "  ".join(f"{p.label:>22}" for p in procs))
for rho in (0.0, 0.3, 0.6, 0.9):
    trials = simulate_trials(EquiCorrScenario(rho=rho, seed=0), procs, REPS)
    cells = []
    for p in procs:
        a = aggregate(trials[p.label])
        cells.append(f"FDR {a['fdr']:.4f} beta {a['power']['mean']:.2f}")
    print(f"{rho:>4}  " + "  ".join(f"{c:>22}" for c in cells))
