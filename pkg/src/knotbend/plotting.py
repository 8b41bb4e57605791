"""Figures for CLI reports, rendered off-screen to PNG files."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .meshout import atomic_write  # noqa: E402

_METADATA = {"Software": None}


def _save(fig, path):
    import io

    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=120, metadata=_METADATA)
    plt.close(fig)
    atomic_write(path, buf.getvalue())
    return path


def _arc(c):
    return c.sigma[:-1]


def plot_curvature(c, path, title=""):
    """Curvature and torsion against arc length."""
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    ax1.plot(_arc(c), c.k, lw=1.2, color="C0")
    ax1.set_ylabel("curvature $k$")
    ax1.set_yscale("log")
    ax2.plot(_arc(c), c.tau, lw=1.2, color="C1")
    ax2.set_ylabel(r"torsion $\tau$")
    ax2.set_xlabel("arc length $s$")
    if title:
        ax1.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_variation(c, values, path, label):
    """A per-sample first variation along the curve."""
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.plot(_arc(c), values, lw=1.2)
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel("arc length $s$")
    ax.set_ylabel(label)
    fig.tight_layout()
    return _save(fig, path)


def plot_convergence(eps, errors, path, label, reference_order=None):
    """Log-log plot of oracle discrepancy against the step ``eps``."""
    eps = np.asarray(eps, dtype=float)
    errors = np.maximum(np.asarray(errors, dtype=float), np.finfo(float).tiny)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.loglog(eps, errors, "o-", label=label)
    if reference_order:
        ref = errors[0] * (eps / eps[0]) ** reference_order
        ax.loglog(eps, ref, "--", color="0.5", label=f"order {reference_order}")
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel("|analytic - finite difference|")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def plot_family(curves, labels, path, title=""):
    """Centerlines of a bent family drawn together in 3D."""
    fig = plt.figure(figsize=(6, 6))
    ax = fig.add_subplot(projection="3d")
    for i, (c, lab) in enumerate(zip(curves, labels)):
        pts = np.vstack([c.r, c.end_position])
        ax.plot(pts[:, 0], pts[:, 1], pts[:, 2], lw=1.5, color=f"C{i}", label=lab)
    ax.set_box_aspect((1, 1, 1))
    ax.legend(frameon=False)
    if title:
        ax.set_title(title)
    return _save(fig, path)
