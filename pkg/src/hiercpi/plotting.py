"""Report figures written next to the CSV/JSON outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_RC = {
    "axes.labelsize": 11,
    "axes.titlesize": 12,
    "font.size": 10,
    "legend.fontsize": 9,
    "lines.linewidth": 1.6,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
}


def _save(fig, path) -> str:
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return str(path)


def plot_pretrain_losses(rows: list[dict], path) -> str:
    """Semilog curves of the three pre-training terms and their sum."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        steps = [r["step"] for r in rows]
        for key, label in (("l_atom", "atom"), ("l_motif", "motif"),
                           ("l_cond", "atom | motif"), ("total", "total")):
            ax.plot(steps, [r[key] for r in rows], label=label,
                    color="k" if key == "total" else None, lw=2.2 if key == "total" else None)
        if rows:
            ax.set_yscale("log")
            ax.legend(frameon=False)
        ax.set_xlabel("step")
        ax.set_ylabel("mean squared distance error (Å$^2$)")
        ax.set_title("masked-distance pre-training")
        return _save(fig, path)


def plot_finetune_curves(rows: list[dict], path) -> str:
    with plt.rc_context(_RC):
        fig, (a1, a2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
        epochs = [r["epoch"] for r in rows]
        a1.plot(epochs, [r["train_mse"] for r in rows], label="train MSE")
        a1.plot(epochs, [r["val_rmse"] ** 2 for r in rows], label="val RMSE$^2$", ls="--")
        if rows:
            a1.set_yscale("log")
            a1.legend(frameon=False)
        a1.set_xlabel("epoch")
        a1.set_ylabel("pKa$^2$")
        pear = [(r["epoch"], r["val_pearson"]) for r in rows if isinstance(r["val_pearson"], float)]
        if pear:
            a2.plot(*zip(*pear), color="C2")
        a2.set_ylim(-1.05, 1.05)
        a2.set_xlabel("epoch")
        a2.set_ylabel("val Pearson $R_p$")
        return _save(fig, path)


def plot_parity(preds, labels, path, title: str = "") -> str:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.2, 4.2))
        ax.scatter(labels, preds, s=18, alpha=0.8, edgecolor="none")
        if len(labels):
            lo = min(min(labels), min(preds))
            hi = max(max(labels), max(preds))
            ax.plot([lo, hi], [lo, hi], color="0.5", lw=1, ls=":")
        ax.set_xlabel("true pKa")
        ax.set_ylabel("predicted pKa")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_distance_matrix(matrix, path, title: str = "") -> str:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.8))
        im = ax.imshow(matrix, aspect="auto", cmap="viridis_r")
        fig.colorbar(im, ax=ax, label="predicted distance (Å)")
        ax.set_xlabel("protein node")
        ax.set_ylabel("compound node")
        if title:
            ax.set_title(title)
        return _save(fig, path)
