"""Compare assumed and sampled interface profiles on one configuration.

The truncated main-chamber run needs a velocity profile across the open
channel boundary.  A Poiseuille assumption is cheap; sampling the profile
from the reference solve is the best the boundary condition can do.  The
gap between the two errors is the cost of guessing the profile shape.
"""
import numpy as np

from paralic import (
    GeometryParams,
    InterfaceProfile,
    PhysicalParams,
    PROFILE_EXACT_POINTWISE,
    PROFILE_POISEUILLE,
    TransportConfig,
    build_chamber_meshes,
    build_lagoon,
    main_run,
    reference_run,
    truncation_error,
)

delta = 0.2
geom = build_lagoon(GeometryParams(delta=delta))
cm = build_chamber_meshes(geom, target_h=0.05)
phys = PhysicalParams(nu=0.01, horizon=5.0)
tcfg = TransportConfig(horizon=5.0, nsteps=50, nu=phys.nu)

ref = reference_run(cm, phys, tcfg)

for kind in (PROFILE_POISEUILLE, PROFILE_EXACT_POINTWISE):
    prof = InterfaceProfile(kind, delta)
    mr = main_run(cm, prof, phys, tcfg, ref)
    err = truncation_error(cm, ref, mr)
    q = mr.flux_diag["budget"]
    print(
        f"{kind:16s} rel={err.rel:.6f} abs={err.abs:.2e} "
        f"interface flux={q:+.6f} masked nodes={err.masked}"
    )

u = ref.potential.u_elem
print(f"\nreference channel speed range: [{np.linalg.norm(u, axis=1).min():.4f}, "
      f"{np.linalg.norm(u, axis=1).max():.4f}]")
print("the sampled profile should cut the error by well over 3x")
