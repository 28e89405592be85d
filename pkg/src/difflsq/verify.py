"""Randomized verification sweeps against independent oracles.

Each sweep draws seeded random instances, compares the library route with
an independent computation, and returns a :class:`SweepResult`. The
``check`` CLI command and the acceptance tests both run these.
"""

import time
from dataclasses import dataclass

import numpy as np

from .autodiff import check_gradients
from .geoloss import (LossConfig, geometric_loss_line, geometric_loss_numeric,
                      geometric_loss_parabola)
from .homography import Homography, backward_transform, transform_points
from .linfit import WeightedPointSet, solve_weighted_ls


@dataclass
class SweepResult:
    name: str
    count: int
    worst: float
    tol: float
    seconds: float
    passed: bool

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: {self.count} cases, worst {self.worst:.3e} "
                f"(tol {self.tol:.0e}), {self.seconds:.2f}s")


def dense_solve(A, b):
    """Gaussian elimination with partial pivoting, written out explicitly."""
    M = np.array(A, dtype=np.float64)
    x = np.array(b, dtype=np.float64)
    n = x.size
    for col in range(n):
        piv = col + int(np.argmax(np.abs(M[col:, col])))
        if M[piv, col] == 0.0:
            raise np.linalg.LinAlgError("singular matrix")
        if piv != col:
            M[[col, piv]] = M[[piv, col]]
            x[[col, piv]] = x[[piv, col]]
        for r in range(col + 1, n):
            f = M[r, col] / M[col, col]
            M[r, col:] -= f * M[col, col:]
            x[r] -= f * x[col]
    for r in range(n - 1, -1, -1):
        x[r] = (x[r] - M[r, r + 1:] @ x[r + 1:]) / M[r, r]
    return x


def oracle_weighted_ls(xs, ys, ws, n, damping=0.0):
    """Assemble ``X^T W^2 X`` with an explicit diagonal ``W`` and solve densely."""
    X = np.array([[x**j for j in range(n)] for x in xs])
    W = np.diag(ws)
    XtW2 = X.T @ W @ W
    return dense_solve(XtW2 @ X + damping * np.eye(n), XtW2 @ np.asarray(ys))


def random_instance(rng, m_max, n_max, w_lo=0.0, w_hi=1.0, cond_max=1e6, min_extra=0):
    """Random weighted point set whose normal matrix has condition <= ``cond_max``.

    ``min_extra`` forces at least that many points beyond the coefficient count.
    """
    while True:
        n = int(rng.integers(1, n_max + 1))
        m = int(rng.integers(n + min_extra, m_max + 1))
        xs = rng.uniform(-1.0, 1.0, m)
        ys = rng.normal(0.0, 1.0, m)
        ws = rng.uniform(w_lo, w_hi, m)
        if w_lo == 0.0:
            ws = 1.0 - ws            # (0, 1]
        X = np.vander(xs, n, increasing=True)
        if np.linalg.cond(X.T @ (X * (ws**2)[:, None])) <= cond_max:
            return WeightedPointSet(xs, ys, ws), n


def sweep_solver(count=1000, seed=0, tol=1e-8, m_max=50, n_max=5):
    """Solver vs dense normal-equation oracle, relative error."""
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(count):
        pts, n = random_instance(rng, m_max, n_max)
        beta, ctx = solve_weighted_ls(pts, n)
        ref = oracle_weighted_ls(pts.xs, pts.ys, pts.ws, n, ctx.damping)
        err = np.linalg.norm(beta.coeffs - ref) / max(np.linalg.norm(ref), 1e-300)
        worst = max(worst, float(err))
    return SweepResult("solver vs dense oracle", count, worst, tol,
                       time.perf_counter() - start, worst <= tol)


def sweep_gradients(count=500, seed=1, rtol=1e-5, atol=1e-9, step=1e-5, m_max=30, n_max=4):
    """Analytic fit gradients vs central differences.

    ``worst`` is the largest error in units of the per-entry bound
    ``max(atol, rtol*|numeric|)``, times rtol. Square (interpolating) systems
    are excluded: there the weight gradient is identically zero and central
    differences only measure solver round-off.
    """
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(count):
        pts, n = random_instance(rng, m_max, n_max, 0.1, 1.0, cond_max=1e3, min_extra=1)
        g = rng.normal(0.0, 1.0, n)
        rep = check_gradients(pts, n, g, step)
        for k in rep.analytic:
            bound = np.maximum(atol, rtol * np.abs(rep.numeric[k]))
            worst = max(worst, float(np.max(rep.abs_errors(k) / bound)) * rtol)
    return SweepResult("fit gradients vs finite differences", count, worst, rtol,
                       time.perf_counter() - start, worst <= rtol)


def _fd_grad(fn, beta, step):
    out = np.empty(beta.size)
    for i in range(beta.size):
        h = step * max(1.0, abs(beta[i]))
        up, down = beta.copy(), beta.copy()
        up[i] += h
        down[i] -= h
        out[i] = (fn(up) - fn(down)) / (2 * h)
    return out


def sweep_losses(count=1000, seed=2, tol=1e-9, grad_rtol=1e-7, grad_atol=1e-9, segments=1000):
    """Closed-form line/parabola losses vs Simpson quadrature, plus gradient FD checks."""
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    worst_val = worst_grad = 0.0
    for _ in range(count):
        t = float(rng.uniform(0.0, 3.0)) or 3.0
        cfg = LossConfig(t=t, quad_segments=segments)
        for n, closed in ((2, geometric_loss_line), (3, geometric_loss_parabola)):
            gt = rng.uniform(-1.0, 1.0, n)
            pred = gt + rng.uniform(-1.0, 1.0, n)
            value, grad = closed(pred, gt, cfg)
            quad = geometric_loss_numeric(pred, gt, cfg)
            worst_val = max(worst_val, abs(value - quad) / max(1.0, value))
            fd = _fd_grad(lambda p: closed(p, gt, cfg)[0], pred, 1e-4)
            bound = np.maximum(grad_atol, grad_rtol * np.abs(fd))
            worst_grad = max(worst_grad, float(np.max(np.abs(grad - fd) / bound)) * grad_rtol)
    seconds = time.perf_counter() - start
    return [
        SweepResult("closed-form loss vs Simpson quadrature", count, worst_val, tol, seconds,
                    worst_val <= tol),
        SweepResult("loss gradients vs finite differences", count, worst_grad, grad_rtol,
                    seconds, worst_grad <= grad_rtol),
    ]


def random_homography(rng):
    while True:
        h = np.eye(3) + rng.normal(0.0, 0.2, (3, 3))
        h[2, :2] = rng.normal(0.0, 0.1, 2)
        if np.linalg.cond(h) < 50:
            return Homography(h)


def sweep_homography(count=200, seed=3, tol=1e-9, comp_tol=1e-10, fd_rtol=1e-6, fd_atol=1e-9, m=20):
    """Inverse and composition identities for projective transforms, plus reverse-pass FD checks."""
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    worst_rt = worst_comp = worst_fd = 0.0
    for _ in range(count):
        H1, H2 = random_homography(rng), random_homography(rng)
        pts = WeightedPointSet(rng.uniform(0, 1, m), rng.uniform(0, 1, m), rng.uniform(0, 1, m))
        out = transform_points(H1, pts)
        back = transform_points(H1.inverse(), out)
        worst_rt = max(worst_rt, float(np.max(np.abs(np.concatenate(
            [back.xs - pts.xs, back.ys - pts.ys])))))
        two = transform_points(H2, out)
        comp = transform_points(H2 @ H1, pts)
        worst_comp = max(worst_comp, float(np.max(np.abs(np.concatenate(
            [two.xs - comp.xs, two.ys - comp.ys])))))

        gu, gv = rng.normal(0, 1, m), rng.normal(0, 1, m)
        gx, gy = backward_transform(H1, pts, gu, gv)

        def scalar(xs, ys):
            o = transform_points(H1, WeightedPointSet(xs, ys, pts.ws))
            return float(gu @ o.xs + gv @ o.ys)

        for analytic, coord in ((gx, "x"), (gy, "y")):
            fd = np.empty(m)
            for i in range(m):
                xs, ys = np.array(pts.xs), np.array(pts.ys)
                arr = xs if coord == "x" else ys
                h = 1e-6 * max(1.0, abs(arr[i]))
                arr[i] += h
                up = scalar(xs, ys)
                arr[i] -= 2 * h
                down = scalar(xs, ys)
                fd[i] = (up - down) / (2 * h)
            bound = np.maximum(fd_atol, fd_rtol * np.abs(fd))
            worst_fd = max(worst_fd, float(np.max(np.abs(analytic - fd) / bound)) * fd_rtol)
    seconds = time.perf_counter() - start
    return [
        SweepResult("homography inverse round trip", count, worst_rt, tol, seconds, worst_rt <= tol),
        SweepResult("homography composition", count, worst_comp, comp_tol, seconds,
                    worst_comp <= comp_tol),
        SweepResult("homography reverse pass vs finite differences", count, worst_fd, fd_rtol,
                    seconds, worst_fd <= fd_rtol),
    ]


def check_pipeline_gradient(gen, scene, step=1e-5, t=1.0, rtol=1e-4, atol=1e-9):
    """Reverse pass of the whole lane chain vs central differences.

    Returns ``(param_error, coord_error)`` for the generator parameters and
    the image-frame pixel coordinates. Each is the worst per-entry error in
    units of ``max(atol, rtol*|numeric|)``, times ``rtol``, so a value at or
    below ``rtol`` means every entry passed.
    """
    from .geoloss import LossConfig, geometric_loss_parabola
    from .lanesim.generator import WeightGenerator, forward_weights
    from .lanesim.training import pipeline_grad, pipeline_loss

    _, d_params, d_coords = pipeline_grad(gen, scene, t)

    num = np.empty_like(d_params)
    for idx in np.ndindex(*d_params.shape):
        p = gen.params.copy()
        h = step * max(1.0, abs(p[idx]))
        p[idx] += h
        up = pipeline_loss(WeightGenerator(p), scene, t)
        p[idx] -= 2 * h
        down = pipeline_loss(WeightGenerator(p), scene, t)
        num[idx] = (up - down) / (2 * h)
    param_err = float(np.max(np.abs(d_params - num) / np.maximum(atol, rtol * np.abs(num)))) * rtol

    cfg = LossConfig(t=t)
    coord_err = 0.0
    for j, (pts, gt) in enumerate(zip(forward_weights(gen, scene), scene.gt_curves)):
        def loss_at(xs, ys):
            moved = transform_points(scene.homography, WeightedPointSet(xs, ys, pts.ws))
            beta, _ = solve_weighted_ls(moved, 3)
            return geometric_loss_parabola(beta, gt, cfg)[0] / scene.k

        for axis in (0, 1):
            fd = np.empty(len(pts))
            for i in range(len(pts)):
                coords = [np.array(pts.xs), np.array(pts.ys)]
                h = step * max(1.0, abs(coords[axis][i]))
                coords[axis][i] += h
                up = loss_at(*coords)
                coords[axis][i] -= 2 * h
                down = loss_at(*coords)
                fd[i] = (up - down) / (2 * h)
            err = np.abs(d_coords[j, axis] - fd) / np.maximum(atol, rtol * np.abs(fd))
            coord_err = max(coord_err, float(np.max(err)) * rtol)
    return param_err, coord_err


SUITES = {
    "oracle": lambda: [sweep_solver()],
    "grads": lambda: [sweep_gradients()],
    "losses": sweep_losses,
    "homography": sweep_homography,
}


def run_suite(name):
    if name == "all":
        return [r for key in SUITES for r in SUITES[key]()]
    return list(SUITES[name]())
