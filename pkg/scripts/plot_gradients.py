"""Plot FD vs pointwise vs variational gradients per wall bump from pipeline output.

    python scripts/plot_gradients.py RESULTS_DIR
"""
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def read_blocks(path):
    curves, name, rows = {}, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# curve"):
            if name:
                curves[name] = np.array(rows)
            name, rows = line.split()[-1], []
        elif line.strip() and not line.startswith("#"):
            rows.append([float(v) for v in line.split()])
    if name:
        curves[name] = np.array(rows)
    return curves


out = Path(sys.argv[1] if len(sys.argv) > 1 else "results/desk")
files = sorted(out.glob("plot_*_p*.dat"))
fig, axes = plt.subplots(1, len(files), figsize=(4.2 * len(files), 3.4), squeeze=False)
for ax, f in zip(axes[0], files):
    for name, style in (("fd", "ko"), ("pointwise", "C0--"), ("variational", "C3-")):
        c = read_blocks(f)[name]
        ax.plot(c[:, 0], c[:, 1], style, ms=3, label=name)
    ax.set_title(f.stem.replace("plot_", ""))
    ax.set_xlabel("arc length")
axes[0, 0].legend()
fig.tight_layout()
fig.savefig(out / "gradients.png", dpi=130)
print(f"wrote {out / 'gradients.png'}")
