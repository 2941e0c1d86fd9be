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

"""Reference DTCWT coefficients from the `dtcwt` package (near_sym_b with the
refined 14-tap quarter-shift set), used to freeze values in test_wavelet.cpp.

Input image: X[r, c] = sin(0.3 r) + cos(0.17 c) + 0.05 * ((3 r + 5 c) % 7).
"""
import numpy as np
import dtcwt

h0a = np.array([
    0.0032531314539378485, -0.003883200384190765, 0.034660230008252302, -0.03887268833066862,
    -0.11720401465701731, 0.27529548310269081, 0.75614553372343873, 0.56881053235908197,
    0.011865974004314685, -0.10671169218758104, 0.023825382688208784, 0.017025223370035193,
    -0.0054394560345875391, -0.0045568767428200464])
h0b = h0a[::-1].copy()
sign = np.array([(-1.0) ** n for n in range(14)])
h1a = sign * h0b
h1b = -sign * h0a
col = lambda v: v.reshape(-1, 1)
qshift = (col(h0a), col(h0b), col(h0b), col(h0a), col(h1a), col(h1b), col(h1b), col(h1a))

t = dtcwt.Transform2d(biort='near_sym_b', qshift=qshift)
r, c = np.mgrid[0:32, 0:32]
X = np.sin(0.3 * r) + np.cos(0.17 * c) + 0.05 * ((3 * r + 5 * c) % 7)
p = t.forward(X, nlevels=3)
print("recon err", np.abs(t.inverse(p) - X).max())
for lvl, h in enumerate(p.highpasses):
    for o in range(6):
        print("norm level %d orient %d: %.17g" % (lvl, o, np.linalg.norm(h[:, :, o])))
for lvl, o, i, j in [(0, 0, 3, 5), (0, 4, 10, 2), (1, 2, 4, 6), (1, 5, 0, 7), (2, 1, 1, 2), (2, 3, 3, 0)]:
    v = p.highpasses[lvl][i, j, o]
    print("coef level %d orient %d (%d,%d): %.17g %.17g" % (lvl, o, i, j, v.real, v.imag))
print("lowpass (2,3): %.17g" % p.lowpass[2, 3])
print("lowpass (7,1): %.17g" % p.lowpass[7, 1])
