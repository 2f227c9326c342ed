"""Link functions W(x, y) in [0, 1] and their integrals.

Built-in variants

* ``constant(p)``: W = p.
* ``exp_tail(lam)``: W = exp(-lam (x + y)).
* ``beta_multiplicative(a1, a2)``: W = x y on [0, 1]^2.  Raw weights drawn
  uniformly on [0, c] are mapped to Beta(a, 1) variates by ``(w / c) ** (1 / a)``
  and the kernel is evaluated on that scale.
* ``cox_log``: W = 1 - exp(-x y).
* ``custom(func)``: any vectorisable callable; integrals by adaptive quadrature.
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DivergenceError, DomainError

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10


@dataclass(frozen=True)
class FinitenessReport:
    condition_i: bool
    condition_ii: bool
    condition_iii: bool
    total_mass: float  # math.inf when divergent

    @property
    def locally_finite(self) -> bool:
        return self.condition_i and self.condition_ii and self.condition_iii


@dataclass(frozen=True)
class Kernel:
    variant: str
    params: tuple = ()
    func: Callable | None = field(default=None, compare=False)
    name: str = ""

    # -- construction -------------------------------------------------------
    @staticmethod
    def constant(p: float) -> "Kernel":
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"constant kernel needs p in [0,1], got {p}")
        return Kernel("constant", (float(p),))

    @staticmethod
    def exp_tail(lam: float) -> "Kernel":
        if not lam > 0:
            raise DomainError(f"exp_tail needs lambda > 0, got {lam}")
        return Kernel("exp_tail", (float(lam),))

    @staticmethod
    def beta_multiplicative(a1: float, a2: float) -> "Kernel":
        if not (a1 > 0 and a2 > 0):
            raise DomainError("beta_multiplicative needs positive shape parameters")
        return Kernel("beta", (float(a1), float(a2)))

    @staticmethod
    def cox_log() -> "Kernel":
        return Kernel("cox", ())

    @staticmethod
    def custom(func: Callable, name: str = "custom") -> "Kernel":
        return Kernel("custom", (), func, name)

    # -- evaluation ---------------------------------------------------------
    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(x < 0) or np.any(y < 0):
            raise DomainError("kernel arguments must be nonnegative")
        v = self.variant
        if v == "constant":
            out = np.full(np.broadcast(x, y).shape, self.params[0])
        elif v == "exp_tail":
            out = np.exp(-self.params[0] * (x + y))
        elif v == "beta":
            out = np.where((x <= 1) & (y <= 1), x * y, 0.0)
        elif v == "cox":
            out = -np.expm1(-x * y)
        else:
            out = np.asarray(self.func(x, y), dtype=float)
            if np.any(out < 0) or np.any(out > 1):
                raise DomainError("custom kernel returned a value outside [0,1]")
        return float(out) if out.ndim == 0 else out

    def __call__(self, x, y):
        return self.evaluate(x, y)

    # -- integrals ----------------------------------------------------------
    def marginal(self, y: float, upper: float = math.inf) -> float:
        """Integral of W(x, y) over x in [0, upper]."""
        if y < 0:
            raise DomainError("marginal needs y >= 0")
        if upper < 0:
            raise DomainError("upper bound must be nonnegative")
        v = self.variant
        if upper == 0:
            return 0.0
        if v == "constant":
            p = self.params[0]
            if math.isinf(upper):
                if p == 0:
                    return 0.0
                raise DivergenceError("constant kernel has an infinite marginal on the half line")
            return p * upper
        if v == "exp_tail":
            lam = self.params[0]
            head = 1.0 if math.isinf(upper) else -math.expm1(-lam * upper)
            return head * math.exp(-lam * y) / lam
        if v == "beta":
            if y > 1:
                return 0.0
            u = min(upper, 1.0)
            return y * u * u / 2.0
        if v == "cox":
            if math.isinf(upper):
                if y == 0:
                    return 0.0
                raise DivergenceError("cox kernel has an infinite marginal on the half line")
            if y == 0:
                return 0.0
            return upper + math.expm1(-upper * y) / y
        return _quad(lambda x: self.evaluate(x, y), 0.0, upper)

    def marginal_nodes(self, x: float, upper: float = math.inf) -> float:
        """Integral of W(x, y) over y in [0, upper]."""
        if self.variant in ("constant", "exp_tail", "cox"):
            return self.marginal(x, upper)  # symmetric kernels
        if self.variant == "beta":
            return self.marginal(x, upper)
        return _quad(lambda y: self.evaluate(x, y), 0.0, upper)

    def total_mass(self, window=None) -> float:
        """Double integral of W over the quadrant, or over a window's weight box."""
        if window is not None:
            return self._window_mass(self.weight_bound(window.c_prime, "clique"),
                                     self.weight_bound(window.c, "node"))
        v = self.variant
        if v == "constant":
            if self.params[0] == 0:
                return 0.0
            raise DivergenceError("constant kernel has infinite total mass")
        if v == "exp_tail":
            return 1.0 / self.params[0] ** 2
        if v == "beta":
            return 0.25
        if v == "cox":
            raise DivergenceError("cox kernel has infinite total mass")
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val = _quad(lambda y: self.marginal(y, math.inf), 0.0, math.inf)
            except (integrate.IntegrationWarning, DivergenceError) as exc:
                raise DivergenceError(f"total mass did not converge: {exc}") from exc
        if not math.isfinite(val) or val > 1e12:
            raise DivergenceError("total mass is not finite")
        return val

    def _window_mass(self, cx: float, cy: float) -> float:
        v = self.variant
        if v == "constant":
            return self.params[0] * cx * cy
        if v == "exp_tail":
            lam = self.params[0]
            return math.expm1(-lam * cx) * math.expm1(-lam * cy) / lam ** 2
        if v == "beta":
            a, b = min(cx, 1.0), min(cy, 1.0)
            return a * a * b * b / 4.0
        return _quad(lambda y: self.marginal(y, cx), 0.0, cy)

    def finiteness_check(self) -> FinitenessReport:
        v = self.variant
        if v == "constant":
            if self.params[0] == 0:
                return FinitenessReport(True, True, True, 0.0)
            # W1 is infinite everywhere; the set {W1 <= 1} is empty so (iii) is trivially finite
            return FinitenessReport(False, False, True, math.inf)
        if v == "cox":
            return FinitenessReport(False, False, True, math.inf)
        if v in ("exp_tail", "beta"):
            return FinitenessReport(True, True, True, self.total_mass())
        return self._numeric_finiteness()

    def _numeric_finiteness(self, grid=None) -> FinitenessReport:
        """Grid + quadrature check for custom kernels.

        A marginal counts as infinite when quadrature fails to converge or
        exceeds 1e12.  Condition (ii) is judged on the last quarter of a
        log-spaced grid reaching 1e6: the marginal must be <= 1 there.
        """
        grid = np.logspace(-6, 6, 49) if grid is None else np.asarray(grid)

        def safe(fn, y):
            with warnings.catch_warnings():
                warnings.simplefilter("error", integrate.IntegrationWarning)
                try:
                    val = fn(y, math.inf)
                except (integrate.IntegrationWarning, DivergenceError):
                    return math.inf
            return val if val < 1e12 else math.inf

        w1 = np.array([safe(self.marginal, y) for y in grid])
        w2 = np.array([safe(self.marginal_nodes, x) for x in grid])
        cond_i = bool(np.all(np.isfinite(w1)) and np.all(np.isfinite(w2)))
        tail = len(grid) * 3 // 4
        cond_ii = bool(np.all(w1[tail:] <= 1) and np.all(w2[tail:] <= 1))
        try:
            mass = self.total_mass()
        except DivergenceError:
            mass = math.inf
        cond_iii = cond_i and cond_ii and math.isfinite(mass)
        return FinitenessReport(cond_i, cond_ii, cond_iii, mass)

    # -- weight scales ------------------------------------------------------
    def weight_bound(self, bound: float, side: str) -> float:
        """Upper end of the kernel-scale weight range for raw weights in [0, bound]."""
        return 1.0 if self.variant == "beta" else bound

    def effective_weights(self, raw, bound: float, side: str) -> np.ndarray:
        raw = np.asarray(raw, dtype=float)
        if self.variant != "beta":
            return raw.copy()
        a = self.params[0] if side == "clique" else self.params[1]
        return np.clip(raw / bound, 0.0, 1.0) ** (1.0 / a)

    def attach_effective_weights(self, points):
        if points.window is None:
            if self.variant == "beta":
                raise DomainError("beta kernel needs the sampling window to transform weights")
            return replace(points, clique_eff=points.clique_weight.copy(), node_eff=points.node_weight.copy())
        w = points.window
        return replace(points,
                       clique_eff=self.effective_weights(points.clique_weight, w.c_prime, "clique"),
                       node_eff=self.effective_weights(points.node_weight, w.c, "node"))

    def matrix(self, points) -> np.ndarray:
        """W evaluated at every (clique, node) pair of a point set."""
        return np.asarray(self.evaluate(points.clique_eff[:, None], points.node_eff[None, :]), dtype=float)\
            .reshape(points.n_cliques, points.n_nodes)

    # -- text form ----------------------------------------------------------
    def to_spec(self) -> str:
        v = self.variant
        if v == "constant":
            return f"const:p={self.params[0]!r}"
        if v == "exp_tail":
            return f"exp:lambda={self.params[0]!r}"
        if v == "beta":
            return f"beta:a1={self.params[0]!r},a2={self.params[1]!r}"
        if v == "cox":
            return "cox"
        return f"custom:{self.name}"


def _quad(f, a, b) -> float:
    val, _ = integrate.quad(f, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
    return float(val)


_SPEC = re.compile(r"^(?P<name>[a-z]+)(?::(?P<args>.*))?$")


def _parse_args(args: str | None) -> dict[str, float]:
    out: dict[str, float] = {}
    if not args:
        return out
    for part in args.split(","):
        if "=" not in part:
            raise DomainError(f"expected key=value, got {part!r}")
        key, val = part.split("=", 1)
        try:
            out[key.strip()] = float(val)
        except ValueError as exc:
            raise DomainError(f"bad number in {part!r}") from exc
    return out


def parse_kernel(spec: str) -> Kernel:
    """Parse ``const:p=<f>``, ``exp:lambda=<f>``, ``beta:a1=<f>,a2=<f>`` or ``cox``."""
    m = _SPEC.match(spec.strip())
    if not m:
        raise DomainError(f"bad kernel spec {spec!r}")
    name, args = m["name"], _parse_args(m["args"])
    expected = {"const": {"p"}, "exp": {"lambda"}, "beta": {"a1", "a2"}, "cox": set()}
    if name not in expected:
        raise DomainError(f"unknown kernel {name!r}")
    if set(args) != expected[name]:
        raise DomainError(f"kernel {name!r} takes parameters {sorted(expected[name])}")
    if name == "const":
        return Kernel.constant(args["p"])
    if name == "exp":
        return Kernel.exp_tail(args["lambda"])
    if name == "beta":
        return Kernel.beta_multiplicative(args["a1"], args["a2"])
    return Kernel.cox_log()
