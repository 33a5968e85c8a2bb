"""Pattern-by-rate evaluation grid on a small scale.

run_sweep reconstructs every (case, pattern, rate, seed, method) cell and
returns per-cell rows plus aggregates over seeds. The full-size grid is
what the acceptance checks use; this demo shrinks the image so the whole
table appears in seconds.
"""

import os

from pnpmri.evaluate import run_sweep, write_report
from pnpmri.fileio import read_model
from pnpmri.phantom import shepp_logan, synthetic_phantom

model_path = "/tmp/demo_model.dnzr"
if not os.path.exists(model_path):
    import runpy

    runpy.run_path(os.path.join(os.path.dirname(__file__),
                                "03_train_small_denoiser.py"))

cases = [
    ("shepp", shepp_logan(128, 128)),
    ("blobs", synthetic_phantom(128, 128, seed=5)),
]
grid = [("cartesian1d", 0.35), ("random2d", 0.3)]

report = run_sweep(
    cases,
    grid=grid,
    methods=("zero_filled", "pnp-identity", "pnp-cnn1d"),
    seeds=(0, 1),
    coils=4,
    max_iters=30,
    model=read_model(model_path),
)

print(f"{'case':8s} {'pattern':12s} {'rate':5s} {'method':13s} {'psnr':>7s}")
for row in report.rows:
    print(f"{row['case_id']:8s} {row['pattern']:12s} {row['rate']:<5.2f} "
          f"{row['method']:13s} {row['psnr_db']:7.2f}")

print("\naggregates over seeds:")
for agg in report.aggregates:
    print(f"{agg['pattern']:12s} rate {agg['rate']:.2f} {agg['method']:13s} "
          f"{agg['mean_psnr']:6.2f} +- {agg['std_psnr']:.2f} dB (n={agg['n']})")

out_dir = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out_dir, exist_ok=True)
write_report(report, os.path.join(out_dir, "demo_report.csv"))
print("\nwrote", os.path.join(out_dir, "demo_report.csv"))
