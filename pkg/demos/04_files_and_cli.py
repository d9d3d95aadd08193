"""
Working with files
==================

Matrices travel as CSV (``voxel,s1,...,ss``) or as the ``PCM1`` binary
format; both round-trip bit-exactly. The same steps are available from the
shell, e.g.::

    pcmap simulate --kind phantom --snr 2 --out-dir sim
    pcmap analyze --input sim/pvalues.csv --method cofilter-adaptive --grid 10,10,10 --out d.csv
    pcmap bench --method bh-selective --rho 0.3 --replications 500 --out-dir bench-0.3
    pcmap report bench-*/aggregate.json
"""
import tempfile
from pathlib import Path

from pcmap import PhantomScenario, Procedure, superimpose
from pcmap.io import read_pvalue_matrix, write_lower_bounds, write_pvalue_matrix
from pcmap.simulate import generate_replication

scenario = PhantomScenario(snr=2.5, seed=4)
matrix, _ = generate_replication(scenario, 0)

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    write_pvalue_matrix(matrix, tmp / "p.csv")
    write_pvalue_matrix(matrix, tmp / "p.bin", format="binary")
    same = read_pvalue_matrix(tmp / "p.csv").values.tobytes() == read_pvalue_matrix(tmp / "p.bin").values.tobytes()
    print("csv and binary agree:", same)
    d = superimpose(read_pvalue_matrix(tmp / "p.bin"), Procedure("cofilter-fixed", tau=0.2))
    out = write_lower_bounds(d, tmp / "d.csv", grid=scenario.grid)
    print(out.read_text().splitlines()[:4])
