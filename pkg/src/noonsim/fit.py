"""Weighted least-squares fits of fringe and HOM-dip models.

The optimizer is a damped Gauss-Newton (Levenberg-Marquardt) iteration with
Marquardt diagonal scaling, seeded from a coarse deterministic grid. The
reported covariance is (J^T W J)^-1 scaled by the reduced chi-square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .counts import poisson_sigma
from .errors import FitError
from .hom import NM_PER_UM


class FringeModel:
    """Base class. Subclasses define ``params``, ``evaluate``, ``seeds`` and ``extrema``."""

    name = "model"
    params: tuple[str, ...] = ()
    phase_param: str | None = None

    def __init__(self, fixed: dict | None = None):
        self.fixed = dict(fixed or {})
        unknown = set(self.fixed) - set(self.params)
        if unknown:
            raise ValueError(f"{self.name}: cannot fix unknown parameter(s) {sorted(unknown)}")

    @property
    def free(self) -> tuple[str, ...]:
        return tuple(p for p in self.params if p not in self.fixed)

    def bounds(self) -> dict[str, tuple[float, float]]:
        return {}

    def typical(self) -> dict[str, float]:
        return {}

    def period(self, p: dict) -> float | None:
        return None

    def evaluate(self, x: np.ndarray, p: dict) -> np.ndarray:
        raise NotImplementedError

    def seeds(self, x: np.ndarray, y: np.ndarray) -> list[dict]:
        raise NotImplementedError

    def extrema(self, p: dict) -> tuple[float, float]:
        raise NotImplementedError

    def canonical(self, p: dict) -> dict:
        """Wrap the phase parameter into one period centred on zero."""
        T = self.period(p)
        if self.phase_param and T:
            p = dict(p)
            p[self.phase_param] = (p[self.phase_param] + T / 2) % T - T / 2
        return p

    def describe(self) -> dict:
        return {"name": self.name, "fixed": dict(self.fixed)}


def _dominant_period(x, y) -> float | None:
    """Period of the strongest Fourier component, for evenly spaced x; else None."""
    if x.size < 8:
        return None
    dx = np.diff(x)
    if not np.allclose(dx, dx[0], rtol=1e-9) or dx[0] <= 0:
        return None
    spec = np.abs(np.fft.rfft(y - np.mean(y)))
    if spec.size < 3:
        return None
    k = int(np.argmax(spec[1:])) + 1
    return float(x.size * dx[0] / k)


class SinSq(FringeModel):
    """a sin^2(pi (phi - phi0) / period) + c; period pi unless freed."""

    name = "sinsq"
    params = ("a", "phi0", "c", "period")
    phase_param = "phi0"
    default_period = math.pi

    def __init__(self, fixed: dict | None = None, free_period: bool = False, period: float | None = None):
        fixed = dict(fixed or {})
        if not free_period:
            fixed.setdefault("period", period or self.default_period)
        self.period_guess = period or self.default_period
        super().__init__(fixed)

    def _wave(self, z):
        return np.sin(z) ** 2

    def evaluate(self, x, p):
        return p["a"] * self._wave(np.pi * (x - p["phi0"]) / p["period"]) + p["c"]

    def period(self, p):
        return p["period"]

    def bounds(self):
        return {"a": (0.0, math.inf), "period": (1e-12, math.inf)}

    def typical(self):
        return {"phi0": 1.0, "period": 1.0}

    def seeds(self, x, y):
        lo, hi = float(np.min(y)), float(np.max(y))
        if "period" in self.fixed:
            periods = [self.fixed["period"]]
        else:
            guesses = [self.period_guess]
            est = _dominant_period(x, y)
            if est is not None:
                guesses.append(est)
            periods = [g * f for g in guesses for f in (0.8, 0.9, 1.0, 1.1, 1.25)]
        return [{"a": max(hi - lo, 1e-12), "c": lo, "phi0": T * k / 24, "period": T}
                for T in periods for k in range(24)]

    def extrema(self, p):
        return p["a"] + p["c"], p["c"]


class CosSq(SinSq):
    """a cos^2(pi (phi - phi0) / period) + c."""

    name = "cossq"

    def _wave(self, z):
        return np.cos(z) ** 2


class ClassicalMZ(CosSq):
    """Bright-light interferometer fringe, a cos^2((phi - phi0)/2) + c."""

    name = "classical"
    default_period = 2 * math.pi


class Eq4Asym(FringeModel):
    """scale |(1 + g) cos(phi - phi0) -/+ g|^2 + c; minus for output A, plus for B.

    ``g`` is the spurious-to-source amplitude ratio.
    """

    params = ("scale", "g", "phi0", "c")
    phase_param = "phi0"

    def __init__(self, arm: str = "A", fixed: dict | None = None):
        if arm not in ("A", "B"):
            raise ValueError("arm must be 'A' or 'B'")
        self.arm = arm
        self.sign = -1.0 if arm == "A" else 1.0
        self.name = "eq4" + arm.lower()
        super().__init__(fixed)

    def evaluate(self, x, p):
        return p["scale"] * ((1 + p["g"]) * np.cos(x - p["phi0"]) + self.sign * p["g"]) ** 2 + p["c"]

    def period(self, p):
        return 2 * math.pi

    def bounds(self):
        return {"scale": (0.0, math.inf), "g": (0.0, math.inf)}

    def typical(self):
        return {"phi0": 1.0, "g": 1e-2}

    def seeds(self, x, y):
        lo, hi = float(np.min(y)), float(np.max(y))
        out = []
        for g in (0.05, 0.15, 0.3):
            for k in range(24):
                out.append({"scale": max(hi - lo, 1e-12) / (1 + 2 * g) ** 2, "g": g,
                            "phi0": 2 * math.pi * k / 24 - math.pi, "c": lo})
        return out

    def extrema(self, p):
        return p["scale"] * (1 + 2 * p["g"]) ** 2 + p["c"], p["c"]

    def describe(self):
        return {**super().describe(), "arm": self.arm}


class HOMDip(FringeModel):
    """scale [1/2 - V/2 cos(2 pi (x-x0) delta / lp^2) sinc(2 pi (x-x0) w / lp^2)], x in um.

    With ``delta_guess == 0`` the detuning is fixed at zero (no beat to fit).
    """

    name = "hom"
    params = ("scale", "V", "delta", "w", "x0")

    def __init__(self, lambda_p_nm: float = 1549.6, delta_guess: float = 6.4, w_guess: float = 0.8,
                 fixed: dict | None = None):
        fixed = dict(fixed or {})
        if delta_guess == 0:
            fixed.setdefault("delta", 0.0)
        self.lambda_p_nm = lambda_p_nm
        self.delta_guess = delta_guess
        self.w_guess = w_guess
        super().__init__(fixed)

    def evaluate(self, x, p):
        k = 2 * np.pi * NM_PER_UM / self.lambda_p_nm ** 2
        z = (x - p["x0"]) * k
        return p["scale"] * (0.5 - 0.5 * p["V"] * np.cos(z * p["delta"]) * np.sinc(z * p["w"] / np.pi))

    def bounds(self):
        return {"scale": (0.0, math.inf), "V": (0.0, 1.05), "delta": (0.0, math.inf), "w": (1e-9, math.inf)}

    def typical(self):
        return {"x0": 1.0, "V": 1.0, "delta": 1.0, "w": 0.1}

    def seeds(self, x, y):
        base = float(np.median(y))
        xmin = float(x[int(np.argmin(y))])
        deltas = [self.fixed["delta"]] if "delta" in self.fixed else \
            [self.delta_guess * (1 + f) for f in np.linspace(-0.1, 0.1, 9)]
        return [{"scale": 2 * max(base, 1e-12), "V": v, "delta": d, "w": self.w_guess, "x0": x0}
                for d in deltas for v in (0.6, 0.95) for x0 in (xmin, 0.0)]

    def extrema(self, p):
        # visibility relative to the distinguishable baseline, dip at x0
        return p["scale"] / 2, p["scale"] * (1 - p["V"]) / 2

    def describe(self):
        return {**super().describe(), "lambda_p_nm": self.lambda_p_nm,
                "delta_guess": self.delta_guess, "w_guess": self.w_guess}


MODELS = {"sinsq": SinSq, "cossq": CosSq, "classical": ClassicalMZ,
          "eq4a": lambda **kw: Eq4Asym("A", **kw), "eq4b": lambda **kw: Eq4Asym("B", **kw),
          "hom": HOMDip}


def make_model(name: str, **kwargs) -> FringeModel:
    try:
        factory = MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
    return factory(**kwargs)


@dataclass
class FitResult:
    model: FringeModel
    params: dict[str, float]
    errors: dict[str, float]
    covariance: np.ndarray
    chi2: float
    dof: int
    n_iter: int
    converged: bool
    n_max: float = field(default=math.nan)
    n_min: float = field(default=math.nan)
    visibility: float = field(default=math.nan)
    sigma_visibility: float = field(default=math.nan)
    chi2_history: list = field(default_factory=list)

    @property
    def chi2_red(self) -> float:
        return self.chi2 / self.dof if self.dof > 0 else math.nan

    @property
    def best_so_far(self) -> bool:
        return not self.converged

    def predict(self, x) -> np.ndarray:
        return self.model.evaluate(np.asarray(x, dtype=float), self.params)

    def to_dict(self) -> dict:
        return {
            "model": self.model.describe(),
            "params": {k: float(v) for k, v in self.params.items()},
            "errors": {k: float(v) for k, v in self.errors.items()},
            "chi2": float(self.chi2), "dof": int(self.dof), "chi2_red": float(self.chi2_red),
            "n_iter": int(self.n_iter), "converged": bool(self.converged),
            "N_max": float(self.n_max), "N_min": float(self.n_min),
            "V": float(self.visibility), "sigma_V": float(self.sigma_visibility),
        }


class _Problem:
    def __init__(self, model: FringeModel, x, y, sigma):
        self.model, self.x, self.y, self.sigma = model, x, y, sigma
        self.free = model.free
        b = model.bounds()
        self.lo = np.array([b.get(n, (-math.inf, math.inf))[0] for n in self.free])
        self.hi = np.array([b.get(n, (-math.inf, math.inf))[1] for n in self.free])
        # amplitude-like parameters default to the data scale for finite-difference steps
        yscale = float(np.max(np.abs(y))) or 1.0
        self.typ = np.array([model.typical().get(n, yscale) for n in self.free])

    def full(self, theta) -> dict:
        p = dict(self.model.fixed)
        p.update(zip(self.free, (float(t) for t in theta)))
        return p

    def vector(self, p: dict) -> np.ndarray:
        return np.clip(np.array([float(p[n]) for n in self.free]), self.lo, self.hi)

    def residual(self, theta) -> np.ndarray:
        return (self.y - self.model.evaluate(self.x, self.full(theta))) / self.sigma

    def jacobian(self, theta) -> np.ndarray:
        """d(model)/d(theta) / sigma by central differences."""
        J = np.empty((self.x.size, theta.size))
        for j in range(theta.size):
            h = 1e-6 * max(abs(theta[j]), self.typ[j])
            tp, tm = theta.copy(), theta.copy()
            tp[j] += h
            tm[j] -= h
            fp = self.model.evaluate(self.x, self.full(tp))
            fm = self.model.evaluate(self.x, self.full(tm))
            J[:, j] = (fp - fm) / (2 * h) / self.sigma
        return J


def _normal_inverse(J: np.ndarray) -> np.ndarray:
    A = J.T @ J
    d = np.sqrt(np.diag(A))
    if np.any(d == 0) or not np.all(np.isfinite(A)):
        raise FitError("degenerate fit: a parameter does not affect the model")
    C = A / np.outer(d, d)
    if np.linalg.cond(C) > 1e13:
        raise FitError("degenerate fit: singular normal equations")
    return np.linalg.inv(C) / np.outer(d, d)


def _refine(prob: _Problem, theta, max_iter: int, rtol: float):
    r = prob.residual(theta)
    chi = float(r @ r)
    history = [chi]
    lam = 1e-3
    quiet = 0
    for it in range(1, max_iter + 1):
        J = prob.jacobian(theta)
        A = J.T @ J
        g = J.T @ r
        D = np.maximum(np.diag(A), 1e-30 * max(np.max(np.diag(A)), 1e-300))
        step_taken = False
        while lam < 1e16:
            try:
                delta = np.linalg.solve(A + lam * np.diag(D), g)
            except np.linalg.LinAlgError:
                lam *= 4
                continue
            trial = np.clip(theta + delta, prob.lo, prob.hi)
            rt = prob.residual(trial)
            ct = float(rt @ rt)
            if np.isfinite(ct) and ct <= chi:
                step_taken = True
                break
            lam *= 4
        if not step_taken:
            return theta, chi, it, True, history
        rel = (chi - ct) / chi if chi > 0 else 0.0
        theta, r, chi = trial, rt, ct
        history.append(chi)
        lam = max(lam / 3, 1e-15)
        quiet = quiet + 1 if rel < rtol else 0
        if quiet >= 2 or chi == 0:
            return theta, chi, it, True, history
    return theta, chi, max_iter, False, history


def fit_model(x, y, sigma=None, model: FringeModel | None = None, init: dict | None = None,
              max_iter: int = 200, rtol: float = 1e-10, n_refine: int = 3) -> FitResult:
    """Fit ``model`` to (x, y +- sigma). ``sigma`` defaults to Poisson sqrt(y), floored at 1."""
    if model is None:
        raise ValueError("a model is required")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sigma = poisson_sigma(y) if sigma is None else np.asarray(sigma, dtype=float)
    if not (x.shape == y.shape == sigma.shape) or x.ndim != 1:
        raise ValueError("x, y and sigma must be 1-D arrays of equal length")
    if np.any(~(sigma > 0)):
        raise ValueError("all sigma must be positive")
    prob = _Problem(model, x, y, sigma)
    k = len(prob.free)
    if x.size < 2 * k:
        raise ValueError(f"need at least {2 * k} points for {k} free parameters, got {x.size}")

    if init is not None:
        seeds = [{**model.seeds(x, y)[0], **init}]
    else:
        seeds = model.seeds(x, y)
    scored = []
    for s in seeds:
        th = prob.vector({**model.fixed, **s})
        rr = prob.residual(th)
        scored.append((float(rr @ rr), len(scored), th))
    scored.sort(key=lambda t: (t[0], t[1]))

    best = None
    for _, _, th in scored[:n_refine]:
        cand = _refine(prob, th, max_iter, rtol)
        if best is None or cand[1] < best[1]:
            best = cand
    theta, chi, n_iter, converged, history = best

    J = prob.jacobian(theta)
    dof = x.size - k
    cov = _normal_inverse(J)
    if dof > 0:
        cov = cov * (chi / dof)
    params = model.canonical(prob.full(theta))
    errs = {n: 0.0 for n in model.params}
    errs.update({n: float(math.sqrt(max(cov[i, i], 0.0))) for i, n in enumerate(prob.free)})
    res = FitResult(model, params, errs, cov, chi, dof, n_iter, converged, chi2_history=history)
    try:
        res.visibility, res.sigma_visibility = visibility_from_fit(res)
        res.n_max, res.n_min = model.extrema(params)
    except ValueError:
        pass
    return res


def visibility_from_fit(result: FitResult) -> tuple[float, float]:
    """V = (N_max - N_min)/N_max from the fitted curve, with first-order uncertainty."""
    model = result.model
    free = model.free

    def vis(p):
        n_max, n_min = model.extrema(p)
        if not n_max > 0:
            raise ValueError("fitted curve has no positive maximum")
        return (n_max - n_min) / n_max

    p0 = result.params
    v = vis(p0)
    grad = np.zeros(len(free))
    for j, name in enumerate(free):
        h = 1e-6 * max(abs(p0[name]), 1e-6)
        pp, pm = dict(p0), dict(p0)
        pp[name] += h
        pm[name] -= h
        grad[j] = (vis(pp) - vis(pm)) / (2 * h)
    var = float(grad @ result.covariance @ grad)
    return v, math.sqrt(max(var, 0.0))
