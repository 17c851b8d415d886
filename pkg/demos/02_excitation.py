# Cooperative excitation: watch the scalar regressor of each sensor.
import numpy as np

from drem_diffusion.excitation import cooperative_pe_scan, per_sensor_excitation
from drem_diffusion.model import CosineSineSource, RotatingCanonicalSource
from drem_diffusion.scenario import scalar_regressor_sequence

deltas = scalar_regressor_sequence(CosineSineSource(), 2, 40)[:, 1:]
print("delta_i(k) for k = 1..16:")
print(deltas[:, :16].round(3))

# Sensors 2 and 3 take turns; sensors 1 and 4 are never excited.
rep = cooperative_pe_scan(deltas, 8, first_k=1, periodic=True)
print("omega =", rep.omega, " omega_underbar =", rep.omega_underbar)
# column 0 of `deltas` is time k = 1; sensor indices are 0-based
print("witness (column, sensor) in the first window:", per_sensor_excitation(deltas, 0, 8, rep.omega_underbar))

# The rotating canonical schedule is different. A sensor's five activations
# are spread over 15 steps, so no window of 5 consecutive regressors is
# full rank, and every scalar regressor vanishes.
src = RotatingCanonicalSource()
ring = scalar_regressor_sequence(src, 5, 90)
print("largest |delta| in the rotating schedule:", np.abs(ring).max())
