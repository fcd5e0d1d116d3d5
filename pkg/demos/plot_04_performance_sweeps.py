"""
Detection rate, NMSE and FAR sweeps
===================================

Small versions of the SNR sweep (two panels) and the panel-count sweep
(30 dB). The full runs are ``risparking sweep --figure 3`` and
``risparking sweep --figure 4``; add ``--fast`` for 100 trials per point.
"""

from risparking.harness import ExperimentConfig, format_report, run_sweep

cfg = ExperimentConfig()
cfg.sweep.trials = 20
cfg.sweep.vehicle_count = [1, 10, 20, 30, 40]

cfg.sweep.ris_count = [2]
cfg.sweep.snr_db = [10.0, 20.0, 30.0]
print(format_report(run_sweep(cfg).rows))

# %%
# Panel-count sweep at 30 dB.

cfg.sweep.ris_count = [1, 2, 4]
cfg.sweep.snr_db = [30.0]
result = run_sweep(cfg)
print(format_report(result.rows))

# %%
# Optional plot, if matplotlib is installed.

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
    for t in cfg.sweep.ris_count:
        rows = [r for r in result.rows if r.ris_count == t]
        v = [r.vehicle_count for r in rows]
        axes[0].plot(v, [r.detection_rate for r in rows], marker="o", label=f"{t} RIS")
        axes[1].plot(v, [r.nmse_db for r in rows], marker="o")
        axes[2].plot(v, [r.far for r in rows], marker="o")
    for ax, name in zip(axes, ["detection rate", "NMSE (dB)", "FAR"]):
        ax.set_xlabel("vehicles")
        ax.set_title(name)
    axes[0].legend()
    fig.tight_layout()
    fig.savefig("ris_sweep.png", dpi=120)
    print("saved ris_sweep.png")
