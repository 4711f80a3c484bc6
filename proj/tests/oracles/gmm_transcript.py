"""Hand-executed single-pixel mixture transcript.

Prints the expected mode table after each update for the scripted sequence
used in test_background.cpp. Plain float arithmetic, one step at a time.
"""
import math

K = 2
ALPHA = 0.1
MATCH = 2.5
SIGMA0 = 15.0 / 255.0
W0 = 0.05
MIN_VAR = 1e-6
VALUES = [128 / 256, 134 / 256, 231 / 256, 128 / 256, 229 / 256, 25 / 256, 129 / 256]

modes = None  # list of [weight, mean, var]
for step, x in enumerate(VALUES):
    if modes is None:
        modes = [[1.0, x, SIGMA0 ** 2]] + [[0.0, 0.0, 0.0] for _ in range(K - 1)]
    else:
        hit = None
        for i, (w, mu, var) in enumerate(modes):
            if w > 0 and (x - mu) ** 2 < MATCH * MATCH * var:
                hit = i
                break
        for i in range(K):
            modes[i][0] = (1 - ALPHA) * modes[i][0] + (ALPHA if i == hit else 0.0)
        if hit is not None:
            w, mu, var = modes[hit]
            mu = (1 - ALPHA) * mu + ALPHA * x
            var = max((1 - ALPHA) * var + ALPHA * (x - mu) ** 2, MIN_VAR)
            modes[hit] = [w, mu, var]
        else:
            low = min(range(K), key=lambda i: (modes[i][0], i))
            modes[low] = [W0, x, SIGMA0 ** 2]
        total = sum(m[0] for m in modes)
        for m in modes:
            m[0] /= total
        modes.sort(key=lambda m: -(m[0] / math.sqrt(m[2])) if m[0] > 0 else 1.0)
    print("    {%d, {%s}}," % (step, ", ".join("{%.17g, %.17g, %.17g}" % tuple(m) for m in modes)))
