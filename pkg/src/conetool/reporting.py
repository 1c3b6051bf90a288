"""Run manifests and file emitters.

Every command writes exactly one ``manifest.json`` into its output
directory, recording the resolved configuration, package versions,
output paths and a pass/fail summary, so each table and figure can be
regenerated from the config alone.  Numeric outputs are serialized with
``repr`` round-trip precision; analysis reports are pure functions of
the config, so re-running a command reproduces them byte for byte.
"""

import csv
import json
import os
import sys
import time

import numpy as np
import scipy


def _r(value):
    """Round-trip decimal representation of a scalar."""
    return repr(float(value))


def _versions():
    from . import __version__

    return {
        "conetool": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": sys.version.split()[0],
    }


class ManifestWriter:
    """Collects outputs of a command and writes the manifest at the end."""

    def __init__(self, command, out_dir, config_snapshot, seed=None):
        self.command = command
        self.out_dir = out_dir
        self.config = config_snapshot
        self.seed = seed
        self.outputs = []
        self.summary = {}
        self._t0 = time.time()
        os.makedirs(out_dir, exist_ok=True)

    def register(self, path):
        self.outputs.append(os.path.relpath(path, self.out_dir))
        return path

    def path(self, name):
        return self.register(os.path.join(self.out_dir, name))

    def finish(self, summary=None):
        if summary:
            self.summary.update(summary)
        manifest = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "versions": _versions(),
            "outputs": sorted(self.outputs),
            "wall_time_s": round(time.time() - self._t0, 3),
            "summary": self.summary,
        }
        path = os.path.join(self.out_dir, "manifest.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_trajectory_csv(path, traj):
    cols, rows = traj.as_table()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_r(v) for v in row])
    return path


def write_snapshot_csv(path, grid, values):
    """One snapshot: tau, x, then the amplitude of every resolved mode."""
    spec = grid.spectrum
    from .grid import ConeField

    fld = ConeField(grid, values)
    amps = np.column_stack([fld.mode_amplitude(j) for j in range(spec.n_modes)])
    header = ["tau", "x"] + [f"mode_{j}" for j in range(spec.n_modes)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(grid.n_x):
            writer.writerow([_r(grid.tau[i]), _r(grid.x[i])]
                            + [_r(a) for a in amps[i]])
    return path


def write_snapshots(out_dir, traj):
    snap_dir = os.path.join(out_dir, "snapshots")
    os.makedirs(snap_dir, exist_ok=True)
    paths = []
    index = []
    for k, (t, values) in enumerate(traj.snapshots):
        name = f"snap_{k:06d}.csv"
        paths.append(write_snapshot_csv(os.path.join(snap_dir, name),
                                        traj.grid, values))
        index.append({"file": f"snapshots/{name}", "t": t})
    write_json(os.path.join(snap_dir, "index.json"), index)
    return paths


def write_slope_table(path, rows):
    """Slope table rows: dicts with mode, predicted, fitted, rel_error, note."""
    header = ["mode", "predicted", "fitted", "rel_error", "stderr", "note"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in rows:
            writer.writerow([r.get(k, "") for k in header])
    return path


def write_loglog_svg(path, grid, curves, title="tip amplitudes"):
    """Log-log plot of mode amplitudes against x (optional artifact)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label, amp in curves:
        sel = amp > 0
        ax.loglog(grid.x[sel], amp[sel], label=label)
    ax.set_xlabel("x")
    ax.set_ylabel("mode amplitude")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path
