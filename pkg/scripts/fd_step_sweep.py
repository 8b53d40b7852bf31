"""FD step-size sweep for selected wall bumps on a converged solution.

    python scripts/fd_step_sweep.py RESULTS_DIR P EDGE [EDGE ...]

Reads the solution written by the pipeline in RESULTS_DIR (config.resolved.yaml
must be there) and prints the central difference for several steps, together
with the admissible step of each bump.
"""
import sys

from nsshape.config import load_config
from nsshape.fdcheck import bump_entry
from nsshape.geometry.perturb import DeformationError, deform_mesh, quartic_bump
from nsshape.pipeline import Pipeline

out, p, edges = sys.argv[1], int(sys.argv[2]), [int(a) for a in sys.argv[3:]]
pipe = Pipeline(load_config(f"{out}/config.resolved.yaml"))
case = pipe.load_case(p)
for e in edges:
    V = quartic_bump(case.mesh, e, support_radius=pipe.cfg.fd.support_radius)
    try:
        deform_mesh(case.mesh, V, 1.0)
        tmax = "> 1"
    except DeformationError as exc:
        tmax = f"{exc.max_admissible_t:.1e}"
    for h in (3e-4, 1e-4, 3e-5):
        ent = bump_entry(case, pipe.objectives, e, h, "central", pipe.cfg.fd.support_radius)
        vals = "  ".join(f"{k} {ent.derivative(k):+.6e}" for k in (o.kind for o in pipe.objectives))
        print(f"edge {e:2d} (t_max {tmax}) h={h:.0e}: {vals}")
