"""Fixed points, spectral radii, the critical point and exact series."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from endwalk.errors import BracketFailure, Inconclusive, InvariantViolation, MissingDependency
from endwalk.gensys import DependencyDigraph, Polynomial, PolynomialSystem, derivative

CONVERGED = "converged"
DIVERGENT = "divergent"
UNCONVERGED = "unconverged"

INNER_TOL = 1e-12
OUTER_TOL = 1e-9
CEILING = 1e12


class CompiledPolynomials:
    """Monomials of several polynomials packed for vectorised evaluation.

    Variable slot ``n`` (one past the last configuration) always holds 1 and
    pads monomials with fewer factors.
    """

    def __init__(self, polys: list[Polynomial], n_vars: int, rows=None):
        rows = range(len(polys)) if rows is None else rows
        owner, zdeg, coeff, factors = [], [], [], []
        for r in rows:
            for (d, exps), c in polys[r].items():
                owner.append(r)
                zdeg.append(d)
                coeff.append(float(c))
                factors.append([v for v, p in exps for _ in range(p)])
        width = max((len(f) for f in factors), default=0)
        self.n_rows = len(polys)
        self.n_vars = n_vars
        self.owner = np.array(owner, dtype=np.int64)
        self.zdeg = np.array(zdeg, dtype=np.float64)
        self.coeff = np.array(coeff, dtype=np.float64)
        self.vars = np.full((len(factors), width), n_vars, dtype=np.int64)
        for i, f in enumerate(factors):
            self.vars[i, :len(f)] = f

    def __call__(self, z: float, values: np.ndarray) -> np.ndarray:
        ext = np.append(values, 1.0)
        terms = self.coeff * np.power(z, self.zdeg)
        if self.vars.shape[1]:
            with np.errstate(over="ignore", invalid="ignore"):
                terms = terms * np.prod(ext[self.vars], axis=1)
        return np.bincount(self.owner, weights=terms, minlength=self.n_rows)


@dataclass
class Valuation:
    z: float
    values: np.ndarray
    status: list[str]
    iterations: list[int]
    digraph: DependencyDigraph

    def component_status(self, comp: int) -> str:
        return self.status[comp]

    def status_of(self, c: int) -> str:
        return self.status[self.digraph.component_of[c]]

    def converged(self, indices) -> bool:
        return all(self.status_of(c) == CONVERGED for c in indices)


def _closure(digraph: DependencyDigraph, comps) -> set[int]:
    """The given components and everything they depend on."""
    out = set()
    stack = list(comps)
    g = digraph.graph
    while stack:
        k = stack.pop()
        if k in out:
            continue
        out.add(k)
        for c in digraph.components[k]:
            for v in g.successors(c):
                stack.append(digraph.component_of[v])
    return out


class Solver:
    """Numerical analysis of one pruned polynomial system."""

    def __init__(self, system: PolynomialSystem, digraph: DependencyDigraph):
        self.system = system
        self.digraph = digraph
        n = system.size
        self._comp_eval = [CompiledPolynomials(system.polys, n, rows=comp)
                           for comp in digraph.components]
        self._full = CompiledPolynomials(system.polys, n)
        self._jac_cache: dict = {}

    # -- fixed point ------------------------------------------------------

    def evaluate_fixed_point(self, z: float, tol: float = INNER_TOL, max_iter: int = 100_000,
                             ceiling: float = CEILING, components=None) -> Valuation:
        """Kleene iteration from 0, one strong component at a time in
        dependency order.  ``components`` limits the work to those components
        and what they depend on; skipped ones report ``unconverged``."""
        if z < 0:
            raise ValueError("z must be nonnegative")
        d = self.digraph
        n = self.system.size
        values = np.zeros(n)
        status = [UNCONVERGED] * len(d.components)
        iters = [0] * len(d.components)
        wanted = None if components is None else _closure(d, components)
        for k in d.order:
            if wanted is not None and k not in wanted:
                continue
            comp = list(d.components[k])
            deps = {d.component_of[v] for c in comp for v in d.graph.successors(c)} - {k}
            if any(status[j] == DIVERGENT for j in deps):
                values[comp] = np.inf
                status[k] = DIVERGENT
                continue
            ev = self._comp_eval[k]
            state = UNCONVERGED
            for it in range(1, max_iter + 1):
                new = ev(z, values)[comp]
                if not np.all(np.isfinite(new)) or np.max(new, initial=0.0) > ceiling:
                    values[comp] = np.inf
                    state = DIVERGENT
                    break
                delta = np.max(np.abs(new - values[comp]), initial=0.0)
                values[comp] = new
                if delta <= tol * (1.0 + np.max(np.abs(new), initial=0.0)):
                    state = CONVERGED
                    break
            iters[k] = it
            status[k] = state
        return Valuation(z, values, status, iters, d)

    def residual(self, val: Valuation) -> float:
        finite = np.isfinite(val.values)
        p = self._full(val.z, np.where(finite, val.values, 0.0))
        return float(np.max(np.abs(p - val.values)[finite], initial=0.0))

    # -- Jacobians --------------------------------------------------------

    def _jacobian_terms(self, comp: int):
        hit = self._jac_cache.get(comp)
        if hit is None:
            members = self.digraph.components[comp]
            pos = {c: i for i, c in enumerate(members)}
            polys, cells = [], []
            for c in members:
                for v in sorted(self.system.variables(self.system.polys[c])):
                    if v in pos:
                        polys.append(derivative(self.system.polys[c], v))
                        cells.append((pos[c], pos[v]))
            compiled = CompiledPolynomials(polys, self.system.size)
            needed = sorted({u for p in polys for (_, exps) in p for u, _ in exps})
            hit = (members, cells, compiled, needed)
            self._jac_cache[comp] = hit
        return hit

    def jacobian_needs(self, comp: int) -> list[int]:
        return self._jacobian_terms(comp)[3]

    def jacobian_at(self, z: float, val: Valuation, comp: int) -> np.ndarray:
        members, cells, compiled, needed = self._jacobian_terms(comp)
        missing = [u for u in needed if val.status_of(u) != CONVERGED]
        if missing:
            raise MissingDependency(
                f"Jacobian of component {comp} needs values of {missing} that did not converge")
        out = np.zeros((len(members), len(members)))
        if cells:
            vals = compiled(z, val.values)
            for (i, j), x in zip(cells, vals):
                out[i, j] += x
        return out

    def full_jacobian(self, z: float, val: Valuation, rows=None) -> np.ndarray:
        """Numeric Jacobian restricted to ``rows`` x ``rows`` (all by default)."""
        rows = list(range(self.system.size)) if rows is None else list(rows)
        pos = {c: i for i, c in enumerate(rows)}
        out = np.zeros((len(rows), len(rows)))
        for c in rows:
            for v in self.system.variables(self.system.polys[c]):
                if v not in pos:
                    continue
                d = derivative(self.system.polys[c], v)
                comp = CompiledPolynomials([d], self.system.size)
                needed = {u for (_, exps) in d for u, _ in exps}
                if any(val.status_of(u) != CONVERGED for u in needed):
                    raise MissingDependency(f"entry ({c},{v}) needs unconverged values")
                out[pos[c], pos[v]] = comp(z, val.values)[0]
        return out

    # -- critical point ---------------------------------------------------

    def _lambda_profile(self, z: float, comps):
        needed = {self.digraph.component_of[u] for k in comps for u in self.jacobian_needs(k)}
        val = self.evaluate_fixed_point(z, components=needed) if needed else \
            self.evaluate_fixed_point(z, components=[])
        if any(val.status[k] != CONVERGED for k in needed):
            return val, None
        return val, {k: spectral_radius(self.jacobian_at(z, val, k)) for k in comps}

    def find_critical_point(self, tol: float = 1e-14, z_ceiling: float = 64.0) -> "SpectralReport":
        """Bisection for the smallest z where a persistent component's
        Jacobian reaches spectral radius 1."""
        d = self.digraph
        pers = d.persistent_components
        if not pers:
            raise BracketFailure("the system has no persistent component")

        def past(z):
            _, lam = self._lambda_profile(z, pers)
            return lam is None or max(lam.values()) >= 1.0

        lo, hi = 0.0, 1.0
        while not past(hi):
            lo, hi = hi, hi * 2
            if hi > z_ceiling:
                raise BracketFailure(f"no upper bracket below z = {z_ceiling}")
        steps = 0
        while hi - lo > tol * max(hi, 1e-300) and steps < 200:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if past(mid):
                hi = mid
            else:
                lo = mid
            steps += 1
        R = lo
        val = self.evaluate_fixed_point(R, components=[k for k in range(len(d.components))
                                                       if d.classes[k] == "U"])
        comps = []
        for k, members in enumerate(d.components):
            entry = {"component": k, "class": d.classes[k], "size": len(members),
                     "members": list(members)}
            try:
                entry["lambda_at_R"] = spectral_radius(self.jacobian_at(R, val, k))
            except MissingDependency:
                entry["lambda_at_R"] = None
            comps.append(entry)
        lam_p = max(comps[k]["lambda_at_R"] for k in pers)
        return SpectralReport(R, 1.0 / R if R > 0 else math.inf, comps, (lo, hi), tol, lam_p,
                              steps, d.persistent_single_component)

    # -- exact series ------------------------------------------------------

    def series_fixed_point(self, N: int) -> list[list[int]]:
        """Truncated power series F_c(z) mod z^(N+1) with exact integers."""
        n = self.system.size
        cur = [[0] * (N + 1) for _ in range(n)]
        cap = N * (n + 1) + 1
        for _ in range(cap):
            new = [evaluate_series(p, cur, N) for p in self.system.polys]
            if new == cur:
                return cur
            cur = new
        raise InvariantViolation(f"series iteration did not stabilise within {cap} steps")

    def series_coefficients(self, N: int) -> list[int]:
        """c_1..c_N of the infinite graph."""
        if N < 1:
            raise ValueError("N must be at least 1")
        F = self.series_fixed_point(N)
        return evaluate_series(self.system.root_saw, F, N)[1:]

    def series_returns(self, N: int) -> list[int]:
        """SAR_1..SAR_N of the infinite graph."""
        if N < 1:
            raise ValueError("N must be at least 1")
        kinds = [c.kind for c in self.system.configs]
        used = {v for (_, exps) in self.system.root_sar for v, _ in exps}
        if any(kinds[v] != "U" for v in used):
            raise InvariantViolation("return polynomial uses an I-configuration")
        F = self.series_fixed_point(N)
        return evaluate_series(self.system.root_sar, F, N)[1:]


def _mul(a: list[int], b: list[int], N: int) -> list[int]:
    out = [0] * (N + 1)
    nz = [(i, x) for i, x in enumerate(a) if x]
    for j, y in enumerate(b):
        if not y:
            continue
        for i, x in nz:
            if i + j > N:
                break
            out[i + j] += x * y
    return out


def evaluate_series(poly: Polynomial, F: list[list[int]], N: int) -> list[int]:
    total = [0] * (N + 1)
    for (zdeg, exps), coeff in poly.items():
        if zdeg > N:
            continue
        term = [0] * (N + 1)
        term[zdeg] = coeff
        for v, p in exps:
            for _ in range(p):
                term = _mul(term, F[v], N)
        for i in range(N + 1):
            total[i] += term[i]
    return total


@dataclass
class SpectralReport:
    R: float
    mu_w: float
    components: list[dict]
    bracket: tuple[float, float]
    tol: float
    lambda_persistent: float
    steps: int
    persistent_single_component: bool

    def to_dict(self) -> dict:
        return {"R": self.R, "mu_w": self.mu_w, "bracket": list(self.bracket), "tol": self.tol,
                "lambda_persistent": self.lambda_persistent, "bisection_steps": self.steps,
                "persistent_single_component": self.persistent_single_component,
                "components": self.components}


def spectral_radius(matrix, tol: float = 1e-13, max_iter: int = 20_000) -> float:
    """Perron root of a nonnegative square matrix.

    Power iteration runs on (A + I) / 2, which has the same Perron vector and
    no other eigenvalue of the same modulus, so periodic matrices converge
    too.  Collatz-Wielandt bounds give a certified bracket; if they do not
    close in time (reducible input) the dense eigenvalues decide.
    """
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    n = A.shape[0]
    if n == 0 or not A.any():
        return 0.0
    if np.any(A < 0):
        raise ValueError("matrix must be nonnegative")
    B = 0.5 * (A + np.eye(n))
    x = np.ones(n)
    for _ in range(max_iter):
        y = B @ x
        ratios = y / x
        lo, hi = ratios.min(), ratios.max()
        if 2 * (hi - lo) <= tol * max(1.0, hi):
            return max(2 * 0.5 * (lo + hi) - 1.0, 0.0)
        x = y / y.max()
        if not np.all(x > 0):
            break
    return float(np.max(np.abs(np.linalg.eigvals(A))))


@dataclass
class AmplitudeEstimate:
    period: int
    amplitudes: list[float]
    decay: float | None
    ratios: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"period": self.period, "amplitudes": self.amplitudes, "decay": self.decay}


def amplitude_periodic(coefficients, mu_w: float, k_max: int = 2, start: int = 1,
                       rel_tol: float = 0.05) -> AmplitudeEstimate:
    """Smallest period k for which c_n / mu_w^n settles on every residue class.

    ``coefficients[i]`` is c_{start + i}.  A residue class settles when its
    last successive difference is small relative to its value and no larger
    than the one before.
    """
    coeffs = list(coefficients)
    if len(coeffs) < 3 * k_max:
        raise Inconclusive(f"need at least {3 * k_max} coefficients, got {len(coeffs)}")
    ratios = [c / mu_w ** (start + i) for i, c in enumerate(coeffs)]
    for k in range(1, k_max + 1):
        amps, decays, ok = [], [], True
        for r in range(k):
            cls = [ratios[i] for i in range(len(ratios)) if (start + i) % k == r]
            if len(cls) < 3:
                ok = False
                break
            d1, d2 = cls[-2] - cls[-3], cls[-1] - cls[-2]
            scale = max(abs(cls[-1]), 1e-300)
            if abs(d2) > rel_tol * scale or abs(d2) > abs(d1) + 1e-12 * scale:
                ok = False
                break
            amps.append(cls[-1])
            if abs(d1) > 1e-12 * scale:
                decays.append(abs(d2) / abs(d1))
        if ok:
            decay = max(decays) if decays else 0.0
            return AmplitudeEstimate(k, amps, decay, ratios)
    raise Inconclusive(f"no period up to {k_max} settles within relative tolerance {rel_tol}")
