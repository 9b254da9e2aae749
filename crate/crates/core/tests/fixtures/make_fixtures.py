# Regenerates the MAT-file fixtures used by the loader tests (requires scipy).
import numpy as np
from scipy.io import savemat

T, C, S = 2, 40, 384 + 256
t, c, s = np.meshgrid(np.arange(T), np.arange(C), np.arange(S), indexing="ij")
data = (t * 1000 + c + s * 0.001).astype(np.float64)
labels = np.array([[7.5, 2.0, 5.0, 6.0], [3.0, 8.1, 1.0, 9.0]])
savemat("s01.mat", {"data": data, "labels": labels}, do_compression=False)
savemat("s02.mat", {"data": data.astype(np.float32) * -1, "labels": labels[::-1].copy()}, do_compression=True)

def eeg(subj, trial, n):
    s, ch = np.meshgrid(np.arange(n), np.arange(14), indexing="ij")
    return (subj * 100 + trial * 10 + ch + s * 0.01).astype(np.float64)

subjects = np.empty((1, 2), dtype=object)
for i in range(2):
    base = np.empty((2, 1), dtype=object)
    stim = np.empty((2, 1), dtype=object)
    for k in range(2):
        base[k, 0] = eeg(i, k, 256)
        stim[k, 0] = eeg(i, k, 300)
    subjects[0, i] = {
        "EEG": {"baseline": base, "stimuli": stim},
        "ScoreValence": np.array([[4.0], [2.0]]),
        "ScoreArousal": np.array([[1.0], [5.0]]),
        "Age": "22",
    }
savemat("DREAMER.mat", {"DREAMER": {"Data": subjects, "EEG_SamplingRate": 128.0}}, do_compression=True)

# Masking fixture: signal e, draw field r, rate tau, and the masked grid
# evaluated cell by cell (zero where r <= tau).
rng = np.random.default_rng(20240611)
e = rng.standard_normal((128, 9, 9)).astype(np.float32)
r = rng.random((128, 9, 9))
tau = 0.35
masked = np.where(r <= tau, np.float32(0.0), e).astype(np.float32)
np.save("mask_e.npy", e)
np.save("mask_r.npy", r)
np.save("mask_tau.npy", np.array([tau]))
np.save("mask_expected.npy", masked)
