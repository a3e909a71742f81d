"""Regenerates the transcript fixtures at 50 significant digits.

Inputs are converted from their binary64 values so the fixtures describe
exactly the stream the Rust tests feed. Run from this directory:

    python3 gen_fixtures.py
"""
from mpmath import mp, mpf, sqrt

mp.dps = 50

DEFAULTS = dict(lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8)


def replay(kernel, stream, theta0, lrs, weight_decay=0.0):
    b1, b2, eps = mpf(DEFAULTS["beta1"]), mpf(DEFAULTS["beta2"]), mpf(DEFAULTS["eps"])
    lam = mpf(weight_decay)
    decay = kernel in ("adaplus", "adamw")
    nesterov = kernel in ("adaplus", "nadam")
    belief = kernel in ("adaplus", "adabelief")
    dim = len(theta0)
    theta = [mpf(x) for x in theta0]
    m = [mpf(0)] * dim
    s = [mpf(0)] * dim
    rows = []
    for step, (grads, lr) in enumerate(zip(stream, lrs), start=1):
        lr = mpf(lr)
        for i in range(dim):
            g = mpf(grads[i])
            if decay:
                theta[i] = theta[i] - lr * lam * theta[i]
            m[i] = b1 * m[i] + (1 - b1) * g
            if belief:
                s[i] = b2 * s[i] + (1 - b2) * (g - m[i]) ** 2 + eps
            else:
                s[i] = b2 * s[i] + (1 - b2) * g ** 2
            mbar = b1 * m[i] + (1 - b1) * g if nesterov else m[i]
            mhat = mbar / (1 - b1 ** step)
            shat = s[i] / (1 - b2 ** step)
            dtheta = -lr * mhat / (sqrt(shat) + eps)
            theta[i] = theta[i] + dtheta
            rows.append((step, i, g, m[i], s[i], mbar, mhat, shat, dtheta, theta[i]))
    return rows


def fmt(x):
    if x == 0:
        return "0.0000000000000000e0"
    return mp.nstr(x, 17, min_fixed=1, max_fixed=0, strip_zeros=False).replace("e+", "e")


def write(name, header, rows):
    with open(name, "w") as f:
        for line in header:
            f.write(f"# {line}\n")
        f.write("# t idx g m s mbar mhat shat dtheta theta\n")
        for r in rows:
            f.write(" ".join([str(r[0]), str(r[1])] + [fmt(x) for x in r[2:]]) + "\n")


if __name__ == "__main__":
    for kernel in ("adaplus", "adam", "adamw", "nadam", "adabelief"):
        write(
            f"{kernel}_first_step.txt",
            [f"kernel={kernel} theta0=[0] stream=[[1]] lr=1e-3 weight_decay=0"],
            replay(kernel, [[1.0]], [0.0], [1e-3]),
        )
    write(
        "adaplus_zero_grad.txt",
        ["kernel=adaplus theta0=[1] stream=[[0]] lr=1e-3 weight_decay=0"],
        replay("adaplus", [[0.0]], [1.0], [1e-3]),
    )
    stream = [
        [0.5, -1.25, 3.0],
        [0.75, -1.0, 2.5],
        [-0.25, -1.5, 2.75],
        [1.5, 0.125, 3.25],
        [0.0, -0.75, 2.0],
        [2.0, 0.5, 3.5],
    ]
    lrs = [1e-2, 1e-2, 1e-2, 1e-3, 1e-3, 1e-3]
    for kernel in ("adaplus", "adamw"):
        write(
            f"{kernel}_six_steps.txt",
            [f"kernel={kernel} theta0=[1,-2,0.5] weight_decay=1e-2 lr=[1e-2 x3, 1e-3 x3]",
             f"stream={stream}"],
            replay(kernel, stream, [1.0, -2.0, 0.5], lrs, weight_decay=1e-2),
        )
