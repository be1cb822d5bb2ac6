"""Convergence figures (exploitability against iterations and wall time)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def plot_curves(curves, path, title=None):
    """Save a two-panel log-scale figure.

    ``curves`` maps a legend label to a list of (iteration, wall_seconds,
    exploitability) rows or CurvePoint objects.
    """
    with plt.rc_context(STYLE):
        fig, (ax_it, ax_t) = plt.subplots(1, 2, figsize=(7.0, 2.8))
        for label, rows in curves.items():
            rows = [_row(r) for r in rows]
            rows = [r for r in rows if r[2] > 0]
            if not rows:
                continue
            it, sec, ex = zip(*rows)
            ax_it.plot(it, ex, label=label, lw=1.2)
            ax_t.plot(sec, ex, label=label, lw=1.2)
        ax_it.set_xlabel("iterations")
        ax_t.set_xlabel("time (s)")
        for ax in (ax_it, ax_t):
            ax.set_yscale("log")
            ax.set_ylabel("exploitability")
            ax.grid(alpha=0.3, lw=0.5)
        ax_it.legend(frameon=False)
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return path


def _row(r):
    if hasattr(r, "iteration"):
        return r.iteration, r.wall_seconds, r.exploitability
    return tuple(r[:3])
