"""Pure-Python RK4 stepping; same contract as the compiled ``_rk4core``."""

import numpy as np


def rk4_linear(t, A, f, y0, w):
    """Integrate y' = f(t) w^T - A(t) y over the fine samples.

    Step ``s`` uses samples ``2s`` (start), ``2s+1`` (midpoint) and ``2s+2``
    (end). Returns ``(out, bad)`` with ``out[s]`` the state after ``s`` steps
    and ``bad`` the first step giving a non-finite value, or -1.
    """
    t = np.asarray(t).real
    K = A.shape[0]
    S = (K - 1) // 2
    y = np.array(y0, dtype=complex)
    out = np.empty((S + 1,) + y.shape, dtype=complex)
    out[0] = y
    # forcing term per sample, broadcast over columns
    F = f[:, :, None] * w[None, None, :]
    # overflow is reported through `bad`, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(S):
            a0 = 2 * s
            h = t[a0 + 2] - t[a0]
            A0, A1, A2 = A[a0], A[a0 + 1], A[a0 + 2]
            k1 = F[a0] - A0 @ y
            k2 = F[a0 + 1] - A1 @ (y + 0.5 * h * k1)
            k3 = F[a0 + 1] - A1 @ (y + 0.5 * h * k2)
            k4 = F[a0 + 2] - A2 @ (y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out[s + 1] = y
            if not np.all(np.isfinite(y)):
                return out, s
    return out, -1
