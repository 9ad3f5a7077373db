"""Unobservable-subspace decomposition and hypothesis certification.

W is the set of states invisible to the control pairing: B e^{tA} x = 0 for
all t, equivalently B A^k x = 0 for k < n.  The state space splits as
W + W_perp (metric-orthogonal); the projector P onto W_perp, the positivity
constant gamma, and the nilpotency horizon delta drive the settling bounds.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import CheckReport, ModalModel, ModelError, validate_control_operator

KERNEL_RTOL = 1e-10
H1_TOL = 1e-9
H2_TOL = 1e-9


class _NotNilpotent:
    """Sentinel: the flow restricted to W is injective, so no horizon exists."""

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return "NotNilpotent"


NOT_NILPOTENT = _NotNilpotent()


@dataclass(frozen=True)
class DecompositionResult:
    w_basis: np.ndarray        # (n, dim W), metric-orthonormal columns
    wperp_basis: np.ndarray    # (n, dim W_perp), metric-orthonormal columns
    projection: np.ndarray     # (n, n) metric-orthogonal projector onto W_perp
    gamma: float | None = None
    delta: float | _NotNilpotent | None = None
    h1_holds: bool | None = None
    h3_holds: bool | None = None
    h4_holds: bool | None = None

    @property
    def dim_w(self) -> int:
        return self.w_basis.shape[1]

    @property
    def dim_wperp(self) -> int:
        return self.wperp_basis.shape[1]


def _metric_orthonormalize(vecs: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Orthonormalize the columns of vecs w.r.t. the metric (thin, stable)."""
    if vecs.shape[1] == 0:
        return vecs
    gram = vecs.T @ metric @ vecs
    evals, evecs = scipy.linalg.eigh(gram)
    keep = evals > 1e-14 * max(evals.max(), 1.0)
    return vecs @ (evecs[:, keep] / np.sqrt(evals[keep]))


def _projector_from_basis(wperp: np.ndarray, metric: np.ndarray) -> np.ndarray:
    return wperp @ (wperp.T @ metric)


def _effective_control_matrix(model: ModalModel) -> np.ndarray:
    """B for bilinear models; the induced L L* (metric adjoint) for linear ones."""
    if model.control_op is not None:
        return model.control_op
    L = model.input_map
    return L @ (L.T @ model.metric)


def unobservable_subspace(model: ModalModel) -> DecompositionResult:
    """Bases of W and W_perp plus the projector, from the stacked observability matrix."""
    n = model.dim
    B = _effective_control_matrix(model)
    A = model.generator
    blocks = []
    block = B.copy()
    for _ in range(n):
        blocks.append(block)
        block = block @ A
    obs = np.vstack(blocks)
    _, sv, vt = scipy.linalg.svd(obs, full_matrices=True)
    cutoff = KERNEL_RTOL * (sv[0] if sv.size else 1.0)
    rank = int(np.sum(sv > cutoff))
    w_raw = vt[rank:].T  # (n, n - rank), Euclidean-orthonormal kernel basis
    w_basis = _metric_orthonormalize(w_raw, model.metric)
    if w_basis.shape[1] == 0:
        wperp_basis = _metric_orthonormalize(np.eye(n), model.metric)
    else:
        # W_perp = null space of (w_basis^T M): metric-orthogonality to W
        _, sv2, vt2 = scipy.linalg.svd(w_basis.T @ model.metric, full_matrices=True)
        rank2 = int(np.sum(sv2 > KERNEL_RTOL * max(sv2[0], 1.0)))
        wperp_basis = _metric_orthonormalize(vt2[rank2:].T, model.metric)
    projection = _projector_from_basis(wperp_basis, model.metric)
    return DecompositionResult(w_basis=w_basis, wperp_basis=wperp_basis, projection=projection)


def decomposition_from_axes(model: ModalModel, w_axes: tuple[int, ...]) -> DecompositionResult:
    """Exact decomposition when W is spanned by coordinate axes of an identity metric.

    The projector is then an exact 0/1 diagonal mask, so P(y + w) == Py holds
    bit-for-bit for states w supported on the W axes.
    """
    n = model.dim
    if np.max(np.abs(model.metric - np.eye(n))) != 0.0:
        raise ModelError("axis-aligned decomposition requires the identity metric")
    w_axes = tuple(sorted(w_axes))
    perp_axes = tuple(i for i in range(n) if i not in w_axes)
    eye = np.eye(n)
    w_basis = eye[:, list(w_axes)]
    wperp_basis = eye[:, list(perp_axes)]
    projection = np.diag(np.array([0.0 if i in w_axes else 1.0 for i in range(n)]))
    return DecompositionResult(w_basis=w_basis, wperp_basis=wperp_basis, projection=projection)


def check_H1(model: ModalModel, dec: DecompositionResult) -> CheckReport:
    """Invariance of W_perp under A (semigroup invariance for matrix generators)."""
    A = model.generator
    M = model.metric
    P = dec.projection
    worst = 0.0
    for v in dec.wperp_basis.T:
        av = A @ v
        leak = av - P @ av
        r = float(np.sqrt(max(leak @ M @ leak, 0.0))) / max(1.0, float(np.sqrt(max(av @ M @ av, 0.0))))
        worst = max(worst, r)
    scale = max(1.0, float(np.max(np.abs(A.T @ M))))
    sym_residual = float(np.max(np.abs(A.T @ M - M @ A))) / scale
    skew_residual = float(np.max(np.abs(A.T @ M + M @ A))) / scale
    return CheckReport(
        "H1",
        worst < H1_TOL,
        {
            "invariance_residual": worst,
            "generator_symmetric": sym_residual < 1e-10,
            "generator_skew": skew_residual < 1e-10,
        },
    )


def compute_gamma(model: ModalModel, dec: DecompositionResult) -> float:
    """Largest gamma with gamma <Bx,x> <= ||Bx||^2 on W_perp.

    For a self-adjoint PSD B this is the smallest strictly positive eigenvalue
    of B restricted to W_perp.
    """
    report = validate_control_operator(_as_bilinear(model))
    if not report.passed:
        raise ModelError("compute_gamma requires a self-adjoint PSD control operator")
    if dec.dim_wperp == 0:
        return 1.0
    B = _effective_control_matrix(model)
    Q = dec.wperp_basis
    restricted = Q.T @ model.metric @ B @ Q
    restricted = 0.5 * (restricted + restricted.T)
    evals = scipy.linalg.eigvalsh(restricted)
    positive = evals[evals > 1e-12 * max(np.max(np.abs(evals)), 1.0)]
    if positive.size == 0:
        raise ModelError("control operator vanishes on W_perp")
    return float(positive[0])


def _as_bilinear(model: ModalModel) -> ModalModel:
    """View a linear model through its induced B = L L* for operator checks."""
    if model.control_op is not None:
        return model
    return ModalModel(
        dim=model.dim,
        metric=model.metric,
        generator=model.generator,
        control_op=_effective_control_matrix(model),
        basis_labels=model.basis_labels,
    )


def gamma_certificate(model: ModalModel, dec: DecompositionResult, gamma: float,
                      samples: int = 1000, seed: int = 0) -> CheckReport:
    """Two-sided sample certificate: the bound holds everywhere and is attained."""
    B = _effective_control_matrix(model)
    M = model.metric
    Q = dec.wperp_basis
    k = Q.shape[1]
    if k == 0:
        return CheckReport("gamma_certificate", True, {"dim_wperp": 0})
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal((samples, k))
    # include the minimizing eigendirection so the bound is witnessed as tight
    restricted = Q.T @ M @ B @ Q
    restricted = 0.5 * (restricted + restricted.T)
    evals, evecs = scipy.linalg.eigh(restricted)
    positive = np.where(evals > 1e-12 * max(np.max(np.abs(evals)), 1.0))[0]
    if positive.size:
        coeffs = np.vstack([coeffs, evecs[:, positive[0]]])
    worst_violation = 0.0
    min_ratio = np.inf
    for c in coeffs:
        x = Q @ c
        bx = B @ x
        quad = float(bx @ M @ x)
        normsq = float(bx @ M @ bx)
        worst_violation = max(worst_violation, gamma * quad - normsq)
        if quad > 1e-12:
            min_ratio = min(min_ratio, normsq / quad)
    holds = worst_violation <= 1e-9
    attained = min_ratio <= gamma * (1.0 + 1e-6)
    return CheckReport(
        "gamma_certificate",
        holds and attained,
        {"max_violation": worst_violation, "min_ratio": float(min_ratio), "gamma": gamma},
    )


def compute_delta(model: ModalModel, dec: DecompositionResult,
                  analytic_delta: float | None = None) -> float | _NotNilpotent:
    """Nilpotency horizon of the flow on W; NotNilpotent for pure matrix models.

    A matrix exponential restricted to a nontrivial invariant subspace is
    injective for every t, so a finite horizon can only come from a front-end
    with a genuinely nilpotent flow, supplied as analytic_delta.
    """
    if dec.dim_w == 0:
        return 0.0
    if analytic_delta is None:
        return NOT_NILPOTENT
    if analytic_delta < 0:
        raise ModelError("analytic_delta must be nonnegative")
    return float(analytic_delta)


def check_H2(model: ModalModel, dec: DecompositionResult, phi, samples: int = 256,
             seed: int = 0) -> CheckReport:
    """Monte-Carlo margin certificate for <Ay,By> <= phi(y) ||By||^2 on W_perp.

    phi: callable y -> float.  When phi is constant the exact requirement is
    also solved as a generalized eigenvalue problem; a cross-coupling between
    ker(B) and range(B) inside W_perp makes any constant insufficient, which
    is reported as needed_phi = inf.
    """
    if samples <= 0:
        raise ModelError("check_H2 requires a positive sample count")
    A = model.generator
    B = _effective_control_matrix(model)
    M = model.metric
    Q = dec.wperp_basis
    k = Q.shape[1]
    if k == 0:
        return CheckReport("H2", True, {"dim_wperp": 0})
    rng = np.random.default_rng(seed)
    min_margin = np.inf
    prev = None
    lipschitz = 0.0
    for _ in range(samples):
        c = rng.standard_normal(k)
        y = Q @ c
        y = y / max(np.sqrt(y @ M @ y), 1e-300)
        by = B @ y
        pairing = float((A @ y) @ M @ by)
        bnormsq = float(by @ M @ by)
        margin = phi(y) * bnormsq - pairing
        min_margin = min(min_margin, margin)
        cur = (y, phi(y) * by)
        if prev is not None:
            dy = cur[0] - prev[0]
            dist = float(np.sqrt(max(dy @ M @ dy, 0.0)))
            if dist > 1e-12:
                df = cur[1] - prev[1]
                lipschitz = max(lipschitz, float(np.sqrt(max(df @ M @ df, 0.0))) / dist)
        prev = cur
    details = {"min_margin": float(min_margin), "lipschitz_estimate": lipschitz}
    constant_value = _constant_value_of(phi, Q, M)
    if constant_value is not None:
        needed = _exact_constant_phi(A, B, M, Q)
        details["needed_phi"] = needed
        details["phi_constant"] = constant_value
        exact_ok = needed != np.inf and constant_value >= needed - H2_TOL
        return CheckReport("H2", bool(min_margin >= -H2_TOL and exact_ok), details)
    return CheckReport("H2", bool(min_margin >= -H2_TOL), details)


def _constant_value_of(phi, Q: np.ndarray, M: np.ndarray) -> float | None:
    """Detect a constant phi by probing; returns its value or None."""
    probe = np.linspace(0.3, 1.7, 5)
    vals = []
    for i, s in enumerate(probe):
        y = Q @ (s * np.cos(np.arange(Q.shape[1]) + i))
        vals.append(phi(y))
    return vals[0] if all(v == vals[0] for v in vals) else None


def _exact_constant_phi(A: np.ndarray, B: np.ndarray, M: np.ndarray, Q: np.ndarray) -> float:
    """Smallest constant phi with <Ay,By> <= phi ||By||^2 on W_perp, or inf."""
    S = A.T @ M @ B
    S = 0.5 * (S + S.T)
    G = B.T @ M @ B
    S_r = Q.T @ S @ Q
    G_r = Q.T @ G @ Q
    G_r = 0.5 * (G_r + G_r.T)
    evals, evecs = scipy.linalg.eigh(G_r)
    tol = 1e-12 * max(np.max(np.abs(evals)), 1.0)
    pos = evals > tol
    if not np.any(pos):
        return 0.0
    U_pos = evecs[:, pos]
    U_ker = evecs[:, ~pos]
    if U_ker.shape[1]:
        cross = U_ker.T @ S_r @ U_pos
        ker_diag = U_ker.T @ S_r @ U_ker
        if np.max(np.abs(cross)) > 1e-9 or np.max(np.abs(ker_diag)) > 1e-9:
            return np.inf
    reduced = (U_pos / np.sqrt(evals[pos])).T @ S_r @ (U_pos / np.sqrt(evals[pos]))
    reduced = 0.5 * (reduced + reduced.T)
    lam = float(np.max(scipy.linalg.eigvalsh(reduced)))
    return max(lam, 0.0)
