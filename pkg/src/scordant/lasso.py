"""l1-regularized logistic regression: solver, sign consistency and efficiency.

The estimator minimizes ``J_hat(w) + lam ||w||_1``. With ``K`` the support
of ``w0``, ``s = sign(w0)`` and ``Q`` the weighted Gram matrix at ``w0``:

* sign consistency needs ``||Q_{K^c K} Q_{KK}^{-1} s_K||_inf <= 1 - eta``,
  ``lambda_min(Q_KK) >= rho``, ``min_K |w0_j| >= mu`` and
  ``lam <= min(rho mu / (4 |K|^{1/2}), eta rho^{3/2} / (64 R |K|))``; the
  probability of a wrong sign pattern is then at most
  ``2p exp(-n lam^2 eta^2/16) + 2|K| exp(-n rho^2 mu^2/(16|K|))
  + 2|K| exp(-lam n rho^{3/2} eta / (64 R |K|))``.
* efficiency needs the restricted eigenvalue
  ``rho = min (D'QD)^{1/2} / ||D_K|| over ||D_{K^c}||_1 <= 3 ||D_K||_1``
  and ``lam <= rho^2 / (48 R |K|)``; then ``||w_hat - w0||_1 <= 12 lam |K| / rho^2``
  and ``J(w_hat) - J(w0) <= 12 lam^2 |K| / rho^2``.
"""

import itertools
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize
from scipy.special import expit

from .linalg import SingularMatrixError, lambda_max, lambda_min
from .logistic import empirical_objective, population_objective, sample_labels
from .newton import NewtonError, solve
from .replicates import mc_cushion, run_replicates
from .scfn import ScfnOracle

ZERO_TOL = 1e-10
ARMIJO = 1e-4


class LassoConvergenceError(RuntimeError):
    pass


# ----------------------------------------------------------------------
# solver
# ----------------------------------------------------------------------


def kkt_residual(grad, w, lam):
    """Largest violation of the subgradient optimality conditions."""
    nz = w != 0
    r = np.where(nz, np.abs(grad + lam * np.sign(w)), np.maximum(np.abs(grad) - lam, 0.0))
    return float(np.max(r)) if r.size else 0.0


def _soft(x, t):
    return np.sign(x) * max(abs(x) - t, 0.0)


def _prox_newton_target(g, H, w, lam, tol=1e-13, max_sweeps=1000):
    """Coordinate descent on ``g'(z-w) + (z-w)'H(z-w)/2 + lam ||z||_1``."""
    z = w.copy()
    r = g.copy()  # gradient of the smooth part at z
    diag = np.diag(H)
    for _ in range(max_sweeps):
        biggest = 0.0
        for j in range(z.size):
            zj = _soft(z[j] - r[j] / diag[j], lam / diag[j])
            delta = zj - z[j]
            if delta != 0.0:
                z[j] = zj
                r += H[:, j] * delta
                biggest = max(biggest, abs(delta))
        if biggest <= tol * (1.0 + np.max(np.abs(z))):
            break
    return z


class _SupportOracle(ScfnOracle):
    """``w_S -> F(embed(w_S)) + c'w_S``."""

    has_third = False

    def __init__(self, base, support, linear):
        self.base = base
        self.support = np.asarray(support)
        self.linear = np.asarray(linear, dtype=float)
        self.p = base.dimension
        self.dimension = self.support.size
        self.r_constant = base.r_constant

    def _embed(self, ws):
        w = np.zeros(self.p)
        w[self.support] = ws
        return w

    def value(self, ws):
        return self.base.value(self._embed(ws)) + float(self.linear @ ws)

    def gradient(self, ws):
        return self.base.gradient(self._embed(ws))[self.support] + self.linear

    def hessian(self, ws):
        return self.base.hessian(self._embed(ws))[np.ix_(self.support, self.support)]


def _polish(F, w, lam):
    """Re-solve on the support of ``w`` with its signs fixed; ``None`` if the
    result changes a sign or violates the conditions off the support."""
    support = np.flatnonzero(w)
    if support.size == 0:
        return np.zeros_like(w)
    signs = np.sign(w[support])
    try:
        res = solve(_SupportOracle(F, support, lam * signs), w_init=w[support],
                    tol_nu=1e-13, max_iter=100)
    except (NewtonError, SingularMatrixError):
        return None
    if np.any(np.sign(res.w_star) != signs):
        return None
    out = np.zeros_like(w)
    out[support] = res.w_star
    return out


@dataclass
class LassoFit:
    w_hat: np.ndarray
    kkt_residual: float
    iterations: int

    @property
    def support(self):
        return np.flatnonzero(self.w_hat)


def fit_lasso(problem, lam, labels=None, w_init=None, tol=1e-10, max_iter=200):
    """Proximal Newton with backtracking, then a Newton polish on the
    identified support so the conditions hold to round-off."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    F = empirical_objective(problem, labels)
    p = problem.p
    w = np.zeros(p) if w_init is None else np.array(w_init, dtype=float)
    g0 = F.gradient(np.zeros(p))
    if np.max(np.abs(g0)) <= lam:
        return LassoFit(np.zeros(p), kkt_residual(g0, np.zeros(p), lam), 0)
    obj = lambda x: F.value(x) + lam * float(np.sum(np.abs(x)))
    f = obj(w)
    it = 0
    for it in range(1, max_iter + 1):
        g = F.gradient(w)
        H = F.hessian(w)
        # damping keeps coordinate steps finite on flat directions
        H = H + 1e-12 * max(np.trace(H) / p, np.finfo(float).tiny) * np.eye(p)
        z = _prox_newton_target(g, H, w, lam)
        d = z - w
        decrease = float(g @ d) + lam * (np.sum(np.abs(z)) - np.sum(np.abs(w)))
        if decrease > -1e-16 * (1.0 + abs(f)):
            break
        t = 1.0
        while True:
            trial = w + t * d
            f_trial = obj(trial)
            if f_trial <= f + ARMIJO * t * decrease:
                break
            t *= 0.5
            if t < 1e-12:
                break
        w, f = trial, f_trial
        w[np.abs(w) <= ZERO_TOL * max(1.0, np.max(np.abs(w)))] = 0.0
        if t == 1.0 and kkt_residual(F.gradient(w), w, lam) <= tol * 1e-2:
            break
    polished = _polish(F, w, lam)
    if polished is not None:
        res_pol = kkt_residual(F.gradient(polished), polished, lam)
        res_raw = kkt_residual(F.gradient(w), w, lam)
        if res_pol <= res_raw:
            w = polished
    res = kkt_residual(F.gradient(w), w, lam)
    if res > max(tol, 1e-8):
        raise LassoConvergenceError(f"KKT residual {res:.3e} after {it} proximal Newton steps")
    return LassoFit(w, res, it)


def _restricted_newton(X, weights, pi, linear, max_iter=100, blowup=1e4):
    """Damped Newton for ``sum_i a_i [pi_i softplus(-z_i) + (1-pi_i) softplus(z_i)] + c'w``
    with ``z = Xw``; ``None`` when the iterates run off (no minimizer) or stall."""
    w = np.zeros(X.shape[1])

    def value(w):
        z = X @ w
        return float(weights @ (pi * np.logaddexp(0.0, -z) + (1.0 - pi) * np.logaddexp(0.0, z))
                     + linear @ w)

    f = value(w)
    for _ in range(max_iter):
        z = X @ w
        s1, s0 = expit(z), expit(-z)
        g = X.T @ (weights * ((1.0 - pi) * s1 - pi * s0)) + linear
        H = (X * (weights * s1 * s0)[:, None]).T @ X
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            return None
        dec = -float(g @ step)
        if dec <= 1e-24:
            return w
        t = 1.0
        trial = w + step
        f_trial = value(trial)
        # below dec ~ 1e-10 the Armijo test is lost in round-off; take full steps
        while dec > 1e-10 and f_trial > f - ARMIJO * t * dec:
            t *= 0.5
            if t < 1e-10:
                return None
            trial = w + t * step
            f_trial = value(trial)
        if np.max(np.abs(trial)) > blowup:
            return None
        w, f = trial, f_trial
    return None


def lasso_by_enumeration(problem, lam, labels=None):
    """Exact l1 solution by trying every sign pattern in ``{-1, 0, 1}^p``.

    For each pattern the smooth problem ``J_hat(w) + lam s'w`` on the
    pattern's support is solved; a pattern is feasible when the solution
    has the assumed signs and ``|dJ_hat/dw_j| <= lam`` off the support.
    The feasible solution with the smallest objective is returned. Intended
    for ``p <= 8``.
    """
    F = empirical_objective(problem, labels)
    p = problem.p
    obj = lambda x: F.value(x) + lam * float(np.sum(np.abs(x)))
    best, best_val = None, np.inf
    for pattern in itertools.product((0, 1, -1), repeat=p):
        s = np.array(pattern, dtype=float)
        support = np.flatnonzero(s)
        if support.size == 0:
            w = np.zeros(p)
        else:
            ws = _restricted_newton(F.X[:, support], F.weights, F.pi, lam * s[support])
            if ws is None or np.any(np.sign(ws) != s[support]):
                continue
            w = np.zeros(p)
            w[support] = ws
        g = F.gradient(w)
        off = np.setdiff1d(np.arange(p), support)
        if off.size and np.max(np.abs(g[off])) > lam * (1.0 + 1e-9):
            continue
        val = obj(w)
        if val < best_val:
            best, best_val = w, val
    if best is None:
        raise LassoConvergenceError("no sign pattern satisfies the optimality conditions")
    return best


# ----------------------------------------------------------------------
# restricted eigenvalue
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class RestrictedEigenvalue:
    rho: float
    exact: bool
    direction: Optional[np.ndarray] = None

    @property
    def upper_bound_only(self):
        return not self.exact


def _cone_ok(delta, K, Kc, tol=1e-10):
    a = np.sum(np.abs(delta[K]))
    return a > 0 and np.sum(np.abs(delta[Kc])) <= 3.0 * a * (1.0 + tol) + tol * np.max(np.abs(delta))


def _face_candidates(Q, FK, Fc, sigma, tau, K, Kc, trace):
    """Stationary values of ``D'QD / ||D_K||^2`` on one face span.

    ``sigma``/``tau`` are the face signs on ``FK``/``Fc``; ``tau is None``
    means the l1 constraint is not active (only the support matters then).
    Returns ``(values, directions)`` for stationary points inside the cone.
    """
    p = Q.shape[0]
    active = tau is not None
    # basis U: free coordinates FK (x1) and Fc minus one pivot when active (x2)
    free_c = Fc[1:] if active else Fc
    cols = []
    for j in FK:
        u = np.zeros(p)
        u[j] = 1.0
        if active:
            u[Fc[0]] = tau[0] * 3.0 * sigma[list(FK).index(j)]
        cols.append(u)
    for k, j in enumerate(free_c):
        u = np.zeros(p)
        u[j] = 1.0
        if active:
            u[Fc[0]] = -tau[0] * tau[k + 1]
        cols.append(u)
    U = np.array(cols).T
    A = U.T @ Q @ U
    m1 = len(FK)
    A11, A12, A22 = A[:m1, :m1], A[:m1, m1:], A[m1:, m1:]
    if A22.size:
        ev22 = np.linalg.eigvalsh(A22)
        if ev22[0] <= 1e-12 * trace:
            # minimizers here are reproduced on a smaller face
            return [], []
        elim = np.linalg.solve(A22, A12.T)
        S = A11 - A12 @ elim
    else:
        elim = np.zeros((0, m1))
        S = A11
    mu, V = np.linalg.eigh(0.5 * (S + S.T))
    lift = U @ np.vstack([np.eye(m1), -elim])  # x -> D
    vals, dirs = [], []
    i = 0
    while i < mu.size:
        j = i
        while j + 1 < mu.size and mu[j + 1] - mu[i] <= 1e-10 * max(1.0, abs(mu[i])):
            j += 1
        E = V[:, i:j + 1]
        found = None
        if E.shape[1] == 1:
            for sgn in (1.0, -1.0):
                D = sgn * (lift @ E[:, 0])
                if _in_face(D, FK, Fc, sigma, tau, K, Kc):
                    found = D
                    break
        else:
            found = _multi_in_face(E, lift, FK, Fc, sigma, tau, K, Kc)
        if found is not None:
            vals.append(float(mu[i]))
            dirs.append(found)
            break  # eigenvalues are ascending; the first admissible is this face's minimum
        i = j + 1
    return vals, dirs


def _in_face(D, FK, Fc, sigma, tau, K, Kc, tol=1e-9):
    scale = np.max(np.abs(D))
    if scale == 0:
        return False
    if tau is None:
        return _cone_ok(D, K, Kc)
    ok = np.all(sigma * D[FK] >= -tol * scale) and np.all(tau * D[Fc] >= -tol * scale)
    return bool(ok) and _cone_ok(D, K, Kc)


def _multi_in_face(E, lift, FK, Fc, sigma, tau, K, Kc):
    """Search an eigenspace of dimension > 1 for a point of the face (or cone)."""
    Lc = lift[Fc, :] @ E if len(Fc) else np.zeros((0, E.shape[1]))
    Ex = lift[FK, :] @ E
    sign_sets = [sigma] if tau is not None else itertools.product((1.0, -1.0), repeat=len(FK))
    for sg in sign_sets:
        sg = np.asarray(sg, dtype=float)
        if tau is not None:
            taus = [tau]
        else:
            taus = itertools.product((1.0, -1.0), repeat=len(Fc))
        for tu in taus:
            tu = np.asarray(tu, dtype=float)
            m = E.shape[1]
            rows = [-(sg[:, None] * Ex)]
            if len(Fc):
                rows.append(-(tu[:, None] * Lc))
                rows.append((tu @ Lc - 3.0 * sg @ Ex)[None, :])
            A_ub = np.vstack(rows)
            res = optimize.linprog(np.zeros(m), A_ub=A_ub, b_ub=np.full(A_ub.shape[0], 1e-12),
                                   A_eq=(sg @ Ex)[None, :], b_eq=[1.0],
                                   bounds=[(None, None)] * m, method="highs")
            if res.status == 0:
                return lift @ (E @ res.x)
    return None


def _re_exact(Q, K):
    p = Q.shape[0]
    K = np.asarray(K)
    Kc = np.setdiff1d(np.arange(p), K)
    trace = max(float(np.trace(Q)), np.finfo(float).tiny)
    best, best_dir = np.inf, None

    def consider(vals, dirs):
        nonlocal best, best_dir
        for v, d in zip(vals, dirs):
            if v < best:
                best, best_dir = v, d

    for rK in range(1, K.size + 1):
        for FK in itertools.combinations(K, rK):
            FK = list(FK)
            for rc in range(0, Kc.size + 1):
                for Fc in itertools.combinations(Kc, rc):
                    Fc = list(Fc)
                    consider(*_face_candidates(Q, FK, Fc, None, None, K, Kc, trace))
                    if not Fc:
                        continue
                    # l1-active faces; fix the first sign of FK to + (D and -D are equivalent)
                    for sg in itertools.product((1.0, -1.0), repeat=len(FK) - 1):
                        sigma = np.array((1.0,) + sg)
                        for tau in itertools.product((1.0, -1.0), repeat=len(Fc)):
                            consider(*_face_candidates(Q, FK, Fc, sigma, np.array(tau),
                                                       K, Kc, trace))
    return best, best_dir


def _re_sampled(Q, K, n_directions, seed):
    p = Q.shape[0]
    K = np.asarray(K)
    Kc = np.setdiff1d(np.arange(p), K)
    rng = np.random.default_rng(seed)

    def ratio(D):
        den = float(D[K] @ D[K])
        return float(D @ Q @ D) / den if den > 0 else np.inf

    samples = []
    for _ in range(n_directions):
        D = np.zeros(p)
        D[K] = rng.standard_normal(K.size)
        if Kc.size:
            c = rng.standard_normal(Kc.size) * (rng.random(Kc.size) < rng.random())
            budget = 3.0 * np.sum(np.abs(D[K])) * rng.random()
            l1 = np.sum(np.abs(c))
            D[Kc] = c * (budget / l1) if l1 > 0 else 0.0
        samples.append((ratio(D), D))
    samples.sort(key=lambda t: t[0])
    best, best_dir = samples[0]
    for _, D0 in samples[:min(20, len(samples))]:
        sg = np.where(D0 >= 0, 1.0, -1.0)
        bounds = [(0, None) if s > 0 else (None, 0) for s in sg]
        cons = [{"type": "ineq",
                 "fun": lambda D, sg=sg: 3.0 * sg[K] @ D[K] - sg[Kc] @ D[Kc]}]
        res = optimize.minimize(ratio, D0, method="SLSQP", bounds=bounds, constraints=cons,
                                options={"maxiter": 200, "ftol": 1e-12})
        D = res.x
        if _cone_ok(D, K, Kc) and ratio(D) < best:
            best, best_dir = ratio(D), D
    return best, best_dir


def restricted_eigenvalue(Q, K, n_directions=2000, seed=0, exact=None):
    """``min (D'QD)^{1/2} / ||D_K||_2`` over the cone ``||D_{K^c}||_1 <= 3 ||D_K||_1``.

    Exact for ``p <= 12`` by enumerating the faces of the cone: on each face
    span the stationary values of the quotient are the eigenvalues of a
    Schur complement, and the smallest one whose eigenvector lies in the
    face is kept. Otherwise random cone directions refined by SLSQP give an
    upper bound, flagged by ``exact=False``.
    """
    Q = 0.5 * (np.asarray(Q, dtype=float) + np.asarray(Q, dtype=float).T)
    K = np.asarray(sorted(K), dtype=int)
    if K.size == 0:
        raise ValueError("restricted eigenvalue needs a nonempty support")
    exact = Q.shape[0] <= 12 if exact is None else exact
    if exact:
        val, D = _re_exact(Q, K)
    else:
        val, D = _re_sampled(Q, K, n_directions, seed)
    return RestrictedEigenvalue(rho=float(np.sqrt(max(val, 0.0))), exact=bool(exact), direction=D)


# ----------------------------------------------------------------------
# diagnostics
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LassoDiagnostics:
    """Support, margins and regularization ceilings for a sparse ``w0``.

    ``eta`` is the irrepresentable margin, ``rho_min = lambda_min(Q_KK)``,
    ``re_rho`` the restricted eigenvalue (an upper bound when
    ``re_exact`` is false) and ``R_K`` the radius of the data restricted to
    the support.
    """

    support: tuple
    signs: np.ndarray
    eta: float
    rho_min: float
    mu: float
    re_rho: float
    re_exact: bool
    R: float
    R_K: float
    caps: dict
    degenerate: bool = False
    lambda_max_Q: float = 0.0

    @property
    def sign_cap(self):
        return min(self.caps["rho_mu"], self.caps["eta_rho"])

    @property
    def efficiency_cap(self):
        return self.caps["restricted_eigenvalue"]

    def to_dict(self):
        out = asdict(self)
        out["support"] = list(self.support)
        out["signs"] = self.signs.tolist()
        out["sign_cap"] = self.sign_cap
        out["efficiency_cap"] = self.efficiency_cap
        return out


def irrepresentable_margin(Q, K, signs):
    """``1 - ||Q_{K^c K} Q_{KK}^{-1} s_K||_inf`` (1 when ``K^c`` is empty)."""
    p = Q.shape[0]
    K = np.asarray(K)
    Kc = np.setdiff1d(np.arange(p), K)
    QKK = Q[np.ix_(K, K)]
    lam = lambda_min(QKK)
    if lam <= 1e-12 * max(np.trace(QKK), np.finfo(float).tiny):
        raise SingularMatrixError(f"Q_KK is singular (lambda_min={lam:.3e})", lambda_min=lam)
    if Kc.size == 0:
        return 1.0
    v = Q[np.ix_(Kc, K)] @ np.linalg.solve(QKK, signs[K])
    return float(1.0 - np.max(np.abs(v)))


def consistency_diagnostics(problem, Q=None, re_directions=2000, seed=0):
    """:class:`LassoDiagnostics` of ``problem`` (``Q`` defaults to the weighted Gram matrix)."""
    if problem.w0 is None:
        raise ValueError("consistency diagnostics need w0")
    Q = problem.weighted_gram() if Q is None else np.asarray(Q, dtype=float)
    w0 = problem.w0
    K = np.flatnonzero(w0)
    s = np.sign(w0)
    R = problem.radius_R
    if K.size == 0:
        nan = float("nan")
        return LassoDiagnostics(support=(), signs=s, eta=nan, rho_min=nan, mu=nan, re_rho=nan,
                                re_exact=False, R=R, R_K=0.0,
                                caps={"rho_mu": nan, "eta_rho": nan, "restricted_eigenvalue": nan},
                                degenerate=True, lambda_max_Q=lambda_max(Q))
    eta = irrepresentable_margin(Q, K, s)
    rho = lambda_min(Q[np.ix_(K, K)])
    mu = float(np.min(np.abs(w0[K])))
    re = restricted_eigenvalue(Q, K, n_directions=re_directions, seed=seed)
    k = K.size
    caps = {
        "rho_mu": rho * mu / (4.0 * np.sqrt(k)),
        "eta_rho": eta * rho**1.5 / (64.0 * R * k),
        "restricted_eigenvalue": re.rho**2 / (48.0 * R * k),
    }
    R_K = float(np.max(np.linalg.norm(problem.X[:, K], axis=1)))
    return LassoDiagnostics(support=tuple(int(j) for j in K), signs=s, eta=eta, rho_min=rho,
                            mu=mu, re_rho=re.rho, re_exact=re.exact, R=R, R_K=R_K,
                            caps={k_: float(v) for k_, v in caps.items()},
                            lambda_max_Q=lambda_max(Q))


# ----------------------------------------------------------------------
# sign consistency
# ----------------------------------------------------------------------


def sign_error_bound(n, p, k, lam, eta, rho, mu, R):
    """Upper bound on the probability that ``sign(w_hat) != sign(w0)``."""
    return float(2 * p * np.exp(-n * lam**2 * eta**2 / 16.0)
                 + 2 * k * np.exp(-n * rho**2 * mu**2 / (16.0 * k))
                 + 2 * k * np.exp(-lam * n * rho**1.5 * eta / (64.0 * R * k)))


def sign_pattern(w, tol=ZERO_TOL):
    return np.where(np.abs(w) <= tol, 0.0, np.sign(w))


@dataclass
class SignConsistencyCheck:
    lam: float
    diagnostics: LassoDiagnostics
    premises: dict
    bound: float
    n_reps: int
    errors: np.ndarray = field(repr=False)

    @property
    def premise_ok(self):
        return all(self.premises.values())

    @property
    def vacuous(self):
        return self.bound >= 1.0

    @property
    def sign_error_rate(self):
        return float(np.mean(self.errors))

    @property
    def recovery_rate(self):
        return 1.0 - self.sign_error_rate

    @property
    def allowed(self):
        return self.bound + mc_cushion(min(self.bound, 1.0), self.n_reps)

    @property
    def passed(self):
        return self.sign_error_rate <= self.allowed

    def summary(self):
        return {"lam": self.lam, "premises": self.premises, "bound": self.bound,
                "vacuous": self.vacuous, "sign_error_rate": self.sign_error_rate,
                "recovery_rate": self.recovery_rate, "allowed": self.allowed,
                "caps": self.diagnostics.caps, "eta": self.diagnostics.eta,
                "rho_min": self.diagnostics.rho_min, "mu": self.diagnostics.mu}


def sign_consistency_premises(problem, lam, diag):
    return {
        "well_specified": bool(problem.well_specified),
        "normalized": bool(np.max(problem.column_mean_squares()) <= 1.0 + 1e-12),
        "eta>0": bool(diag.eta > 0),
        "rho>0": bool(diag.rho_min > 0),
        "mu>0": bool(diag.mu > 0),
        "lam<=rho*mu/(4|K|^0.5)": bool(lam <= diag.caps["rho_mu"]),
        "lam<=eta*rho^1.5/(64R|K|)": bool(lam <= diag.caps["eta_rho"]),
    }


def sign_consistency_check(problem, lam, n_reps, seed, diag=None):
    """Empirical rate of wrong sign patterns against the three-term bound
    (plus three binomial standard errors)."""
    diag = consistency_diagnostics(problem) if diag is None else diag
    if diag.degenerate:
        raise ValueError("w0 has empty support; the sign-consistency bound is undefined")
    bound = sign_error_bound(problem.n, problem.p, len(diag.support), lam,
                             diag.eta, diag.rho_min, diag.mu, problem.radius_R)
    s = diag.signs

    def one(i, rng):
        w = fit_lasso(problem, lam, sample_labels(problem, rng), w_init=problem.w0).w_hat
        return bool(np.any(sign_pattern(w) != s))

    errors = np.array(run_replicates(one, n_reps, seed), dtype=bool)
    return SignConsistencyCheck(lam=float(lam), diagnostics=diag,
                                premises=sign_consistency_premises(problem, lam, diag),
                                bound=bound, n_reps=n_reps, errors=errors)


# ----------------------------------------------------------------------
# efficiency
# ----------------------------------------------------------------------


def efficiency_bounds(lam, k, rho):
    """``(12 lam |K| / rho^2, 12 lam^2 |K| / rho^2)``."""
    return 12.0 * lam * k / rho**2, 12.0 * lam**2 * k / rho**2


def efficiency_probability_floors(n, p, lam):
    """Stated floor ``1 - 2p exp(-lam n^2/5)`` and the ``exp(-lam^2 n/5)`` reading."""
    return {"literal": float(1.0 - 2 * p * np.exp(-lam * n**2 / 5.0)),
            "lam2n": float(1.0 - 2 * p * np.exp(-lam**2 * n / 5.0))}


@dataclass
class EfficiencyCheck:
    lam: float
    diagnostics: LassoDiagnostics
    premises: dict
    l1_bound: float
    risk_bound: float
    prob_floor: dict
    n_reps: int
    l1_error: np.ndarray = field(repr=False)
    excess: np.ndarray = field(repr=False)
    noise_event: np.ndarray = field(repr=False)
    required: float = 0.99

    @property
    def premise_ok(self):
        return all(self.premises.values())

    @property
    def l1_violation_rate(self):
        return float(np.mean(self.l1_error > self.l1_bound))

    @property
    def risk_violation_rate(self):
        return float(np.mean(self.excess > self.risk_bound))

    @property
    def holding_freq(self):
        return float(np.mean((self.l1_error <= self.l1_bound) & (self.excess <= self.risk_bound)))

    @property
    def passed(self):
        return self.holding_freq >= self.required

    def summary(self):
        return {"lam": self.lam, "premises": self.premises, "l1_bound": self.l1_bound,
                "risk_bound": self.risk_bound, "prob_floor": self.prob_floor,
                "l1_violation_rate": self.l1_violation_rate,
                "risk_violation_rate": self.risk_violation_rate,
                "holding_freq": self.holding_freq, "required": self.required,
                "noise_event_rate": float(np.mean(self.noise_event)),
                "median_l1_error": float(np.median(self.l1_error)),
                "median_excess": float(np.median(self.excess)),
                "re_rho": self.diagnostics.re_rho, "re_exact": self.diagnostics.re_exact}


def efficiency_check(problem, lam, n_reps, seed, diag=None, required=0.99):
    """Frequency with which both the l1-error and the excess-risk bounds hold.

    ``noise_event`` records ``||q||_inf <= lam/2``, the event on which the
    bounds are derived.
    """
    diag = consistency_diagnostics(problem) if diag is None else diag
    if diag.degenerate:
        raise ValueError("w0 has empty support; the efficiency bounds are undefined")
    k = len(diag.support)
    l1_bound, risk_bound = efficiency_bounds(lam, k, diag.re_rho)
    J = population_objective(problem)
    w0 = problem.w0

    def one(i, rng):
        labels = sample_labels(problem, rng)
        w = fit_lasso(problem, lam, labels, w_init=w0).w_hat
        q = problem.q_vector(labels)
        return (float(np.sum(np.abs(w - w0))), J.difference(w, w0),
                float(np.max(np.abs(q)) <= lam / 2.0))

    out = np.array(run_replicates(one, n_reps, seed), dtype=float).reshape(n_reps, 3)
    premises = {
        "well_specified": bool(problem.well_specified),
        "normalized": bool(np.max(problem.column_mean_squares()) <= 1.0 + 1e-12),
        "re_rho>0": bool(diag.re_rho > 0),
        "lam<=rho^2/(48R|K|)": bool(lam <= diag.caps["restricted_eigenvalue"]),
    }
    return EfficiencyCheck(lam=float(lam), diagnostics=diag, premises=premises,
                           l1_bound=float(l1_bound), risk_bound=float(risk_bound),
                           prob_floor=efficiency_probability_floors(problem.n, problem.p, lam),
                           n_reps=n_reps, l1_error=out[:, 0], excess=out[:, 1],
                           noise_event=out[:, 2].astype(bool), required=required)


# ----------------------------------------------------------------------
# phase diagram
# ----------------------------------------------------------------------


def sign_recovery_grid(problem, sizes, lams, n_reps, seed):
    """Sign-recovery rate and bound over a grid of sample sizes and ``lam``.

    ``problem`` is resized with :meth:`DesignProblem.with_size`; rows of
    the result hold ``n, lam, recovery_rate, bound, premise_ok``.
    """
    diag0 = consistency_diagnostics(problem)
    rows = []
    for n in sizes:
        resized = problem.with_size(int(n))
        diag = consistency_diagnostics(resized) if resized.n != problem.n else diag0
        for lam in lams:
            chk = sign_consistency_check(resized, float(lam), n_reps, seed, diag=diag)
            rows.append({"n": int(resized.n), "lam": float(lam),
                         "recovery_rate": chk.recovery_rate, "bound": chk.bound,
                         "premise_ok": chk.premise_ok})
    return rows
