#!/usr/bin/env python3
"""Plot the CSV tables of one run directory.

    python3 scripts/plot_run.py out/radius_decay [--save figs/]

Needs matplotlib. Each table found in the directory gets one figure.
"""
import argparse
import csv
import math
import pathlib

import matplotlib.pyplot as plt


def read(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))

    def num(v):
        if v in ("", "nan"):
            return math.nan
        if v in ("true", "false"):
            return float(v == "true")
        try:
            return float(v)
        except ValueError:
            return v

    return {k: [num(r[k]) for r in rows] for k in (rows[0].keys() if rows else [])}


def trajectory(d, ax):
    t = d["t"]
    for key in ("mass", "momentum", "hamiltonian"):
        ref = d[key][0]
        ax[0].plot(t, [abs(v - ref) / abs(ref) if ref else abs(v - ref) for v in d[key]], label=key)
    ax[0].set_yscale("log")
    ax[0].set_ylabel("relative drift")
    ax[0].legend()
    for key in (k for k in d if k.startswith("gevrey_norm@")):
        ax[1].plot(t, d[key], label=key.split("@")[1])
    ax[1].set_yscale("log")
    ax[1].set_ylabel("Gevrey norm")
    ax[1].legend(title="sigma")
    ax[1].set_xlabel("t")


def schedule(d, ax):
    t = d["t"]
    ax[0].plot(t, d["sigma_hat"], label="sigma_hat")
    ax[0].plot(t, d["sigma_certified"], label="sigma_certified")
    ax[0].set_yscale("log")
    ax[0].legend()
    ax[1].plot(t, [g * g for g in d["gamma_measured"]], label="gamma_measured^2")
    ax[1].plot(t, d["gamma_sq_bound"], label="gamma_sq_bound")
    ax[1].legend()
    ax[1].set_xlabel("t")


def acl_sweep(d, ax):
    ax[0].loglog(d["sigma"], d["error_measured"], "o-", label="error_measured")
    ax[0].loglog(d["sigma"], d["r_integral"], "s--", label="r_integral")
    ax[0].set_title(f"fitted exponent {d['fitted_exponent'][0]:.3f}")
    ax[0].legend()
    ax[1].plot(d["sigma"], [l - b for l, b in zip(d["lhs"], d["rhs_base"])], "o-")
    ax[1].set_xlabel("sigma")
    ax[1].set_ylabel("lhs - rhs_base")


def bilinear_sweep(d, ax):
    n = d["N1"] if d["regime"][0] == "lemma34" else d["N2"]
    raw = [r * c for r, c in zip(d["max_ratio"], d["predicted_C"])]
    ax[0].loglog(n, raw, "o-")
    ax[0].set_title(f"fitted exponent {d['fitted_exponent'][0]:.3f}")
    ax[0].set_ylabel("max quotient")
    ax[1].semilogx(n, d["max_ratio"], "o-")
    ax[1].set_ylabel("max quotient / predicted_C")
    ax[1].set_xlabel("N")


def schedule_analytic(d, ax):
    ax[0].loglog(d["T"], d["sigma"], "o-")
    ax[0].set_title(f"fitted slope {d['fitted_slope'][0]:.6f}")
    ax[0].set_ylabel("sigma(T)")
    ax[1].semilogx(d["T"], d["condition"], "o-")
    ax[1].set_ylabel("condition")
    ax[1].set_xlabel("T")


PLOTS = {
    "trajectory": trajectory,
    "schedule": schedule,
    "acl_sweep": acl_sweep,
    "bilinear_sweep": bilinear_sweep,
    "schedule_analytic": schedule_analytic,
}


def main():
    p = argparse.ArgumentParser()
    p.add_argument("run_dir", type=pathlib.Path)
    p.add_argument("--save", type=pathlib.Path, help="write PNGs here instead of showing")
    a = p.parse_args()
    for name, plot in PLOTS.items():
        path = a.run_dir / f"{name}.csv"
        if not path.exists():
            continue
        fig, ax = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
        fig.suptitle(f"{a.run_dir.name}: {name}")
        plot(read(path), ax)
        fig.tight_layout()
        if a.save:
            a.save.mkdir(parents=True, exist_ok=True)
            fig.savefig(a.save / f"{name}.png", dpi=120)
    if not a.save:
        plt.show()


if __name__ == "__main__":
    main()
