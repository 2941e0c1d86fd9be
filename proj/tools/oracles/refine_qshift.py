# spic-recon : self-supervised training of unrolled MRI reconstruction
#
# Copyright 2026 The spic-recon Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Refine the 14-tap quarter-shift lowpass so that it is orthonormal and has an
exact zero at z = -1 (the stored double-precision design is off by ~1e-6).

Prints the refined h0a taps with 17 significant digits.
"""
import numpy as np

H0A = np.array([0.003253142763653182, -0.00388321199915849, 0.03466034684485349,
                -0.03887280126882779, -0.11720388769911527, 0.27529538466888204,
                0.7561456438925225, 0.5688104207121227, 0.011866092033797,
                -0.1067118046866654, 0.023825384794920298, 0.01702522388155399,
                -0.005439475937274115, -0.004556895628475491])


def residual(h):
    n = len(h)
    r = [sum(h[i] * h[i + 2 * k] for i in range(n - 2 * k)) - (1.0 if k == 0 else 0.0)
         for k in range(n // 2)]
    r.append(sum(((-1) ** i) * h[i] for i in range(n)))
    return np.array(r)


def jacobian(h, step=1e-7):
    n = len(h)
    rows = []
    for k in range(n // 2):
        g = np.zeros(n)
        for i in range(n - 2 * k):
            g[i] += h[i + 2 * k]
            g[i + 2 * k] += h[i]
        rows.append(g)
    rows.append(np.array([(-1.0) ** i for i in range(n)]))
    return np.array(rows)


h = H0A.copy()
for _ in range(20):
    r = residual(h)
    J = jacobian(h)
    h = h - J.T @ np.linalg.solve(J @ J.T, r)
print("max residual", np.abs(residual(h)).max(), "max change", np.abs(h - H0A).max())
print(",\n".join("%.17g" % v for v in h))
