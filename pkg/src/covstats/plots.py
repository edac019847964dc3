"""Headless report figures: envelope panels and realization snapshots."""

from __future__ import annotations

from math import pi

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .estimators import Envelope
from .experiments import RawReplicate
from .grid import GridSpec
from .oracles import OracleCurve

_LABELS = {
    "K12": "K12(t)",
    "L2": "L2(t)",
    "L12": "L12(t)",
    "J12": "J12(t)",
    "F2": "F2(t)",
    "H12": "H12(t)",
    "T12": "T12(t)",
    "void": "void ratio",
    "Jscaled": "J on rescaled pair",
}

# unit/area baselines drawn as dotted guides
_UNIT_BASELINE = ("J12", "void", "Jscaled")


def envelope_panel(
    envelopes: list[Envelope],
    oracles: list[OracleCurve] | None = None,
    ordering: str = "12",
    title: str | None = None,
):
    """One axes per statistic: replicate mean, central band, reference curve."""
    envs = [e for e in envelopes if e.ordering == ordering]
    if not envs:
        raise ValueError("no envelopes with ordering %r" % ordering)
    refs = {}
    for o in oracles or []:
        if o.ordering == ordering:
            refs[o.name] = o
    ncols = 2 if len(envs) > 1 else 1
    nrows = (len(envs) + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(4.6 * ncols, 3.2 * nrows), squeeze=False, constrained_layout=True
    )
    for ax in axes.ravel()[len(envs) :]:
        ax.set_visible(False)
    for ax, env in zip(axes.ravel(), envs):
        ax.fill_between(env.t, env.lower, env.upper, alpha=0.25, color="C0", linewidth=0)
        ax.plot(env.t, env.mean, color="C0", label="replicate mean")
        if env.name in refs:
            ax.plot(refs[env.name].t, refs[env.name].values, "k--", label="reference")
        if env.name == "K12":
            ax.plot(env.t, pi * env.t**2, "k:", linewidth=1, label="pi t^2")
        elif env.name in _UNIT_BASELINE:
            ax.axhline(1.0, color="k", linestyle=":", linewidth=1)
        ax.set_xlabel("t")
        ax.set_ylabel(_LABELS.get(env.name, env.name))
        ax.legend(frameon=False, fontsize=8)
    if title:
        fig.suptitle(title)
    return fig


def realization_figure(raw: RawReplicate, title: str | None = None):
    """Side-by-side images of the two measure densities of one replicate."""
    spec: GridSpec = raw.psi1.spec
    extent = (spec.x_min, spec.x_max, spec.y_min, spec.y_max)
    fig, axes = plt.subplots(1, 2, figsize=(9.2, 4.2), constrained_layout=True)
    vmax = max(raw.psi1.values.max(), raw.psi2.values.max(), 1e-12)
    for ax, fld, label in ((axes[0], raw.psi1, "Psi_1"), (axes[1], raw.psi2, "Psi_2")):
        im = ax.imshow(
            fld.values, origin="lower", extent=extent, cmap="viridis", vmin=0.0, vmax=vmax
        )
        ax.set_title(label)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    fig.colorbar(im, ax=axes, shrink=0.85)
    if title:
        fig.suptitle(title)
    return fig


def comparison_figure(
    envelopes: list[Envelope], oracles: list[OracleCurve], title: str | None = None
):
    """Overlay of both orderings for every statistic with a reference curve."""
    names = sorted({o.name for o in oracles})
    if not names:
        raise ValueError("no reference curves to compare against")
    ncols = 2 if len(names) > 1 else 1
    nrows = (len(names) + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(4.6 * ncols, 3.2 * nrows), squeeze=False, constrained_layout=True
    )
    for ax in axes.ravel()[len(names) :]:
        ax.set_visible(False)
    env_by_key = {(e.name, e.ordering): e for e in envelopes}
    ora_by_key = {(o.name, o.ordering): o for o in oracles}
    for ax, name in zip(axes.ravel(), names):
        for i, ordering in enumerate(("12", "21")):
            env = env_by_key.get((name, ordering))
            if env is None:
                continue
            color = "C%d" % i
            ax.fill_between(env.t, env.lower, env.upper, alpha=0.2, color=color, linewidth=0)
            ax.plot(env.t, env.mean, color=color, label="ordering %s" % ordering)
            ora = ora_by_key.get((name, ordering))
            if ora is not None:
                ax.plot(ora.t, ora.values, "--", color="k", linewidth=1)
        ax.set_xlabel("t")
        ax.set_ylabel(_LABELS.get(name, name))
        ax.legend(frameon=False, fontsize=8)
    if title:
        fig.suptitle(title)
    return fig


def save_figure(fig, path) -> None:
    fig.savefig(path, dpi=150)
    plt.close(fig)
