"""Differentiable torch kernels shared by the transport losses.

Everything here takes and returns float64 tensors and is deterministic:
sorts are stable, ties resolve by original index, and the assignments
produced by sorting/searchsorted are constants of the backward pass (the
standard subgradient for quantile-based transport).
"""

import numpy as np
import torch

from .errors import DataError


def as_tensor(x):
    """View a numpy array (or tensor) as a float64 torch tensor."""
    if isinstance(x, torch.Tensor):
        return x.to(torch.float64)
    return torch.as_tensor(np.asarray(x), dtype=torch.float64)


def p_root(value, p):
    """``value ** (1/p)`` with subgradient 0 at exactly zero.

    A perfectly aligned configuration yields loss 0 with a well-defined
    zero gradient instead of the NaN the bare power would produce.
    """
    if float(value) == 0.0:
        return value * 0.0
    return value ** (1.0 / p)


def _checked_weights(weights, size):
    if weights is None:
        return torch.full((size,), 1.0 / size, dtype=torch.float64)
    w = as_tensor(weights).reshape(-1)
    if w.numel() != size:
        raise DataError(f"expected {size} weights, got {w.numel()}")
    wd = w.detach()
    if torch.any(wd < 0):
        raise DataError("weights must be non-negative")
    if abs(float(wd.sum()) - 1.0) > 1e-12:
        raise DataError(f"weights must sum to 1, got {float(wd.sum()):.15g}")
    return w


def batched_quantile_pp(a_values, b_values, p, a_weights=None, b_weights=None):
    """Column-wise exact 1-D ``W_p^p`` between weighted empirical measures.

    ``a_values`` is (s_a, L) and ``b_values`` (s_b, L); every column is one
    1-D instance and all columns share the same weights, so the merged
    quantile grid is computed once. Supports unequal sizes and non-uniform
    weights in O(L s log s). Returns a tensor of shape (L,).
    """
    a_values = as_tensor(a_values)
    b_values = as_tensor(b_values)
    if a_values.ndim != 2 or b_values.ndim != 2 or a_values.shape[1] != b_values.shape[1]:
        raise DataError(
            f"expected (s, L) value arrays with matching L, got {tuple(a_values.shape)}"
            f" and {tuple(b_values.shape)}"
        )
    if a_values.shape[0] == 0 or b_values.shape[0] == 0:
        raise DataError("empty sample set")
    if p < 1:
        raise DataError(f"order p must be >= 1, got {p}")
    a_w = _checked_weights(a_weights, a_values.shape[0])
    b_w = _checked_weights(b_weights, b_values.shape[0])

    # Stable per-column sort: ties keep original index order, making the
    # frozen assignment (and hence the gradient) deterministic.
    a_order = torch.argsort(a_values.detach(), dim=0, stable=True)
    b_order = torch.argsort(b_values.detach(), dim=0, stable=True)
    a_sorted = torch.gather(a_values, 0, a_order)
    b_sorted = torch.gather(b_values, 0, b_order)

    a_cum = torch.cumsum(a_w, dim=0)
    b_cum = torch.cumsum(b_w, dim=0)
    qs = torch.sort(torch.cat([a_cum, b_cum])).values
    a_idx = torch.searchsorted(a_cum.contiguous(), qs, right=False).clamp(max=a_values.shape[0] - 1)
    b_idx = torch.searchsorted(b_cum.contiguous(), qs, right=False).clamp(max=b_values.shape[0] - 1)
    deltas = qs - torch.cat([qs.new_zeros(1), qs[:-1]])

    gaps = torch.abs(a_sorted[a_idx, :] - b_sorted[b_idx, :])
    if p == 2:
        integrand = gaps * gaps
    elif p == 1:
        integrand = gaps
    else:
        integrand = gaps**p
    return torch.sum(deltas[:, None] * integrand, dim=0)


def quantile_wasserstein_pp(a_values, b_values, p, a_weights=None, b_weights=None):
    """Exact 1-D ``W_p^p`` between two weighted sample sets (1-D values)."""
    a = as_tensor(a_values).reshape(-1, 1)
    b = as_tensor(b_values).reshape(-1, 1)
    return batched_quantile_pp(a, b, p, a_weights, b_weights)[0]


def sliced_pp(a_points, b_points, directions, p, a_weights=None, b_weights=None):
    """Per-direction 1-D ``W_p^p`` values, one per row of ``directions``.

    ``a_points`` (s_a, d) and ``b_points`` (s_b, d) are projected onto each
    unit direction; returns a tensor of shape (L,).
    """
    a_points = as_tensor(a_points)
    b_points = as_tensor(b_points)
    directions = as_tensor(directions)
    if a_points.shape[1] != b_points.shape[1]:
        raise DataError(
            f"dimension mismatch: {a_points.shape[1]} vs {b_points.shape[1]}"
        )
    if directions.shape[1] != a_points.shape[1]:
        raise DataError(
            f"projections have dimension {directions.shape[1]}, points have {a_points.shape[1]}"
        )
    a_proj = a_points @ directions.T
    b_proj = b_points @ directions.T
    return batched_quantile_pp(a_proj, b_proj, p, a_weights, b_weights)


def softmax_weighted_mean(values):
    """``sum_l values_l * softmax(values)_l`` with max-subtraction.

    The importance-sampling estimator for an exponential energy over slice
    distances; reduces to the plain mean when all values coincide.
    """
    w = torch.softmax(values - values.detach().max(), dim=0)
    return torch.sum(values * w)


def row_softmax(logits):
    """Row-stochastic softmax with per-row max subtraction."""
    return torch.softmax(logits - logits.detach().max(dim=1, keepdim=True).values, dim=1)


def l2_normalize_rows(features, eps=1e-12):
    """Scale each row to unit Euclidean norm (zero rows are left at zero)."""
    f = as_tensor(features)
    norms = torch.linalg.vector_norm(f, dim=1, keepdim=True)
    return f / torch.clamp(norms, min=eps)


def squared_euclidean_cost(f_x, f_y):
    """Pairwise squared-distance cost matrix between feature rows."""
    f_x = as_tensor(f_x)
    f_y = as_tensor(f_y)
    if f_x.shape[1] != f_y.shape[1]:
        raise DataError(f"dimension mismatch: {f_x.shape[1]} vs {f_y.shape[1]}")
    return torch.cdist(f_x, f_y) ** 2


def sinkhorn_log(cost, mu, nu, epsilon, max_iters, tol):
    """Log-domain Sinkhorn: alternating marginal projections.

    Returns ``(coupling, iterations, marginal_error)``. The loop runs until
    the worst column-marginal violation drops below ``tol`` (rows are exact
    after every row projection) or ``max_iters`` is reached; hitting the cap
    is reported via the marginal error, not an exception. Differentiable in
    ``cost`` when built from tensors that require grad.
    """
    cost = as_tensor(cost)
    if not torch.isfinite(cost).all():
        raise DataError("cost matrix contains non-finite entries")
    mu = as_tensor(mu).reshape(-1)
    nu = as_tensor(nu).reshape(-1)
    if mu.numel() != cost.shape[0] or nu.numel() != cost.shape[1]:
        raise DataError(
            f"marginals ({mu.numel()}, {nu.numel()}) do not match cost {tuple(cost.shape)}"
        )
    if epsilon <= 0:
        raise DataError(f"epsilon must be positive, got {epsilon}")

    log_mu = torch.log(mu)
    log_nu = torch.log(nu)
    neg_c = -cost / epsilon
    f = torch.zeros_like(mu)
    g = torch.zeros_like(nu)
    iterations = 0
    err = float("inf")
    for iterations in range(1, max_iters + 1):
        g = epsilon * (log_nu - torch.logsumexp(neg_c + f[:, None] / epsilon, dim=0))
        f = epsilon * (log_mu - torch.logsumexp(neg_c + g[None, :] / epsilon, dim=1))
        with torch.no_grad():
            col = torch.exp(neg_c + f[:, None] / epsilon + g[None, :] / epsilon).sum(dim=0)
            err = float(torch.abs(col - nu).max())
        if err < tol:
            break
    plan = torch.exp(neg_c + f[:, None] / epsilon + g[None, :] / epsilon)
    return plan, iterations, err
