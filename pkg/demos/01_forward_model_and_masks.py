"""
The undersampled multi-coil forward model, step by step
=======================================================

Builds a phantom, simulates coil sensitivities, draws the two mask
families, and sanity-checks the operator algebra numerically.
"""

import os

import numpy as np

from pnpmri.core import inner_product, l2_norm, make_rng
from pnpmri.evaluate import psnr
from pnpmri.fileio import write_pgm
from pnpmri.forward_model import adjoint, estimate_op_norm, forward, simulate_coil_maps
from pnpmri.phantom import shepp_logan
from pnpmri.reconstruct import zero_filled
from pnpmri.sampling import make_cartesian1d_mask, make_random2d_mask

out_dir = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out_dir, exist_ok=True)

# A 128x128 complex phantom. The magnitude is the classic head phantom,
# the phase is a smooth synthetic map so the image is genuinely complex.
phantom = shepp_logan(128, 128)
x = phantom.image
print("phantom:", x.shape, x.dtype, "peak magnitude", np.abs(x).max())

# Eight simulated receiver coils. The sensitivity magnitudes sum to one
# at every pixel, so the coil images jointly preserve signal energy.
maps = simulate_coil_maps(128, 128, coils=8)
print("coil maps:", maps.shape, "sum |S|^2 range",
      np.sum(np.abs(maps) ** 2, axis=0).min(),
      np.sum(np.abs(maps) ** 2, axis=0).max())

# Two undersampling families. cartesian1d keeps whole columns (phase
# encodes), random2d keeps individual points. Both always keep a fully
# sampled center region.
cart = make_cartesian1d_mask(128, 128, rate=0.35, center_fraction=0.08, seed=0)
rand = make_random2d_mask(128, 128, rate=0.35, center_fraction=0.08, seed=0)
print("cartesian1d achieved rate", cart.achieved_rate)
print("random2d    achieved rate", rand.achieved_rate)

# The forward operator A maps the image to masked multi-coil k-space.
y = forward(x, maps, cart)
print("k-space:", y.shape, "sampled fraction", np.mean(y != 0))

# <Ax, y> == <x, A^H y> is the adjoint identity. It should hold to
# floating-point roundoff for any pair of test vectors.
rng = make_rng(1)
u = rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)
v = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
lhs = inner_product(forward(u, maps, cart), v)
rhs = inner_product(u, adjoint(v, maps, cart))
print("adjoint gap", abs(lhs - rhs) / (l2_norm(forward(u, maps, cart)) * l2_norm(v)))

# Power iteration confirms the operator is non-expansive, which is what
# lets the reconstruction use a unit gradient step.
print("operator norm estimate", estimate_op_norm(maps, cart, iters=30))

# Zero filling is the no-prior baseline: apply A^H and look at the image.
for name, mask in (("cartesian1d", cart), ("random2d", rand)):
    baseline = zero_filled(forward(x, maps, mask), maps, mask)
    print(f"zero-filled PSNR under {name}: {psnr(x, baseline):.2f} dB")
    write_pgm(os.path.join(out_dir, f"zero_filled_{name}.pgm"),
              np.abs(baseline), peak=float(np.abs(x).max()))

write_pgm(os.path.join(out_dir, "reference.pgm"), np.abs(x))
print("wrote PGM previews to", out_dir)
