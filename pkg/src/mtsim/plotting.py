"""Figure rendering for the CLI report paths.

Each function takes already-computed results and writes one image file; the
delimited text output stays the primary artifact.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "savefig.dpi": 150,
    # Fixed metadata keeps reruns byte-identical.
    "svg.hashsalt": "mtsim",
}


_NO_STAMP = {".png": {"Software": None}, ".svg": {"Date": None},
             ".pdf": {"CreationDate": None, "Producer": None}}


def _save(fig, path):
    suffix = str(path)[str(path).rfind("."):].lower()
    fig.tight_layout()
    fig.savefig(path, metadata=_NO_STAMP.get(suffix))
    plt.close(fig)


def plot_cdf(cdf, path, label=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        x = [0.0, *cdf.block_fraction.tolist()]
        y = [0.0, *cdf.access_fraction.tolist()]
        ax.plot(x, y, drawstyle="steps-post", label=label)
        ax.plot([0, 1], [0, 1], ls=":", color="grey", lw=0.8)
        ax.set_xlabel("fraction of blocks (coldest first)")
        ax.set_ylabel("fraction of accesses")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        if label:
            ax.legend(frameon=False)
        _save(fig, path)


def plot_history(result, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        steps = range(len(result.history))
        obj = [s.objective for s in result.history]
        acc = [i for i, s in enumerate(result.history) if s.accepted]
        ax.plot(steps, obj, lw=0.6, color="0.6", label="proposed")
        ax.plot(acc, [obj[i] for i in acc], ".", ms=2, label="accepted")
        ax.axhline(result.best_objective, ls="--", lw=0.8, color="k",
                   label=f"best {result.best_policy}")
        ax.set_xlabel("step")
        ax.set_ylabel("objective")
        ax.legend(frameon=False, fontsize=7)
        _save(fig, path)


def plot_recommendation(rec, path, top=15):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        entries = rec.entries[:top]
        labels = [str(c.hierarchy) for c in entries]
        ax.barh(range(len(entries)), [c.perf_per_price for c in entries])
        ax.set_yticks(range(len(entries)))
        ax.set_yticklabels(labels, fontsize=6)
        ax.invert_yaxis()
        ax.set_xlabel("throughput per dollar (ops/s/$)")
        _save(fig, path)
