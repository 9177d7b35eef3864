"""Static SVG renderings of the pipeline tables."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "simplexreg"


def save_svg(draw, path):
    fig = plt.figure(figsize=(8, 6))
    try:
        draw(fig)
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)


def _group_markers(labels):
    levels = sorted(set(labels))
    return {lev: m for lev, m in zip(levels, ["o", "x", "^", "s"])}


def lra_biplot(fig, lra, m, labels):
    ax = fig.add_subplot(111)
    markers = _group_markers(labels)
    labels = np.asarray(labels)
    for lev, mk in markers.items():
        sel = labels == lev
        ax.scatter(lra.row_scores[sel, 0], lra.row_scores[sel, 1], marker=mk, s=12,
                   label=lev or None, alpha=0.6)
    scale = np.abs(lra.row_scores[:, :2]).max() / max(np.abs(lra.column_loadings).max(), 1e-12)
    for p, (a, b) in zip(m.part_names, lra.column_loadings[:, :2]):
        ax.annotate(p, (a * scale, b * scale), color="darkred")
        ax.plot([0, a * scale], [0, b * scale], color="darkred", lw=0.8)
    ve = lra.variance_explained
    ax.set_xlabel(f"LRA dimension 1 ({100 * ve[0]:.1f}%)")
    ax.set_ylabel(f"LRA dimension 2 ({100 * ve[1]:.1f}%)")
    if any(labels):
        ax.legend()


def discriminant_plot(fig, disc, m, labels):
    ax = fig.add_subplot(111)
    labels = np.asarray(labels)
    for lev, mk in _group_markers(labels).items():
        sel = labels == lev
        ax.scatter(disc.scores[sel], disc.residual_lra.row_scores[sel, 0], marker=mk,
                   s=12, label=lev, alpha=0.6)
    ax.set_xlabel("group-difference axis")
    ax.set_ylabel("first residual LRA dimension")
    ax.legend()


def confidence_plot(fig, summaries):
    axes = fig.subplots(1, len(summaries), squeeze=False)[0]
    for ax, (label, s) in zip(axes, summaries):
        for g in range(2):
            lo95, hi95 = s.ci95[g]
            lo50, hi50 = s.ci50[g]
            ax.plot([g, g], [lo95, hi95], color="black")
            ax.add_patch(matplotlib.patches.Rectangle((g - 0.15, lo50), 0.3, hi50 - lo50,
                                                      fill=False))
            ax.plot(g, s.means[g], "o", color="black")
        ax.set_xticks([0, 1])
        ax.set_xticklabels([str(x) for x in s.groups])
        ax.set_title(f"{label}\np = {s.p_value:.4f}", fontsize=9)
        ax.set_xlim(-0.6, 1.6)


def log_contrast_plot(fig, table):
    recs = table.records()
    covs = sorted({r["covariate"] for r in recs}, key=[r["covariate"] for r in recs].index)
    axes = fig.subplots(1, len(covs), squeeze=False)[0]
    for ax, cov in zip(axes, covs):
        rows = [r for r in recs if r["covariate"] == cov]
        y = np.arange(len(rows))
        est = [r["multiplicative"] for r in rows]
        ax.plot(est, y, "o")
        if "ci_lower" in rows[0]:
            for k, r in enumerate(rows):
                ax.plot([r["ci_lower"], r["ci_upper"]], [k, k], color="black")
        ax.axvline(1.0, color="grey", ls="--")
        ax.set_yticks(y)
        ax.set_yticklabels([r["part"] for r in rows])
        ax.set_title(cov)


def componentwise_plot(fig, m, stat, labels, ylabel, mark_max=False):
    D = m.D
    cols = int(np.ceil(np.sqrt(D)))
    rows = int(np.ceil(D / cols))
    axes = fig.subplots(rows, cols, squeeze=False).ravel()
    labels = np.asarray(labels)
    for d in range(D):
        ax = axes[d]
        for lev, mk in _group_markers(labels).items():
            sel = labels == lev
            ax.scatter(m.values[sel, d], stat[sel, d], marker=mk, s=6, label=lev)
        if mark_max:
            i = int(np.argmax(stat[:, d]))
            ax.scatter([m.values[i, d]], [stat[i, d]], color="red", s=20)
        ax.set_title(m.part_names[d], fontsize=8)
        ax.tick_params(labelsize=6)
    for ax in axes[D:]:
        ax.set_visible(False)
    fig.supylabel(ylabel)


def composite_plot(fig, composite, labels):
    ax = fig.add_subplot(111)
    labels = np.asarray(labels)
    for lev, mk in _group_markers(labels).items():
        sel = np.flatnonzero(labels == lev)
        ax.scatter(sel, composite[sel], marker=mk, s=10, label=lev)
    ax.set_xlabel("observation")
    ax.set_ylabel("composite residual")
    ax.legend()
