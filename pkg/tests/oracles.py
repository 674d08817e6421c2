"""Reference values computed independently of the package.

For the 1-D Gaussian location instance (base mean mu0, displacement a per
unit theta, ridge lam, noise sigma) with the squared-ridge loss, integrating
the Gaussian moments by hand gives:

    dpr(t1, t2) = (t2 - mu0 - a t1)^2 + sigma^2 + (lam/2) t2^2
    pr(t)       = ((1 - a) t - mu0)^2 + sigma^2 + (lam/2) t^2

Setting pr' = 0 gives the minimizer; solving t = argmin dpr(t, .) gives the
retraining fixed point:

    t_opt    = 2 (1 - a) mu0 / (2 (1 - a)^2 + lam)
    t_stable = 2 mu0 / (2 + lam - 2 a)

The retraining map itself is affine: T(t) = 2 (mu0 + a t) / (2 + lam), with
contraction factor 2 a / (2 + lam).
"""


def dpr_value(t1, t2, mu0=1.0, a=0.5, lam=1.0, sigma=1.0):
    return (t2 - mu0 - a * t1) ** 2 + sigma**2 + 0.5 * lam * t2**2


def pr_value(t, mu0=1.0, a=0.5, lam=1.0, sigma=1.0):
    return ((1 - a) * t - mu0) ** 2 + sigma**2 + 0.5 * lam * t**2


def pr_grad(t, mu0=1.0, a=0.5, lam=1.0):
    return 2 * (1 - a) * ((1 - a) * t - mu0) + lam * t


def theta_opt(mu0=1.0, a=0.5, lam=1.0):
    return 2 * (1 - a) * mu0 / (2 * (1 - a) ** 2 + lam)


def theta_stable(mu0=1.0, a=0.5, lam=1.0):
    return 2 * mu0 / (2 + lam - 2 * a)


def retrain_map(t, mu0=1.0, a=0.5, lam=1.0):
    return 2 * (mu0 + a * t) / (2 + lam)


def contraction_factor(a=0.5, lam=1.0):
    return 2 * a / (2 + lam)
