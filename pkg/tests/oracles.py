"""Independent reference implementations used to pin expected values.

Everything here is written with plain numpy loops, deliberately ignoring how
the package computes the same quantities, so tests compare two independent
routes. Gradients are checked against central finite differences.
"""

from __future__ import annotations

import numpy as np
import torch


def np_mse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean((np.asarray(a, float) - np.asarray(b, float)) ** 2))


def np_reconstruction(xs, recs) -> float:
    return float(np.mean([np_mse(x, r) for x, r in zip(xs, recs)]))


def np_weighted_reconstruction(xs, recs, corrupted, w_c=0.5, w_o=0.25) -> float:
    total = 0.0
    for i, (x, r) in enumerate(zip(xs, recs)):
        total += (w_c if i == corrupted else w_o) * np_mse(x, r)
    return total / len(xs)


def _np_row_normalize(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, float)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def np_clip_alignment(za, zb, tau) -> float:
    za = _np_row_normalize(za)
    zb = _np_row_normalize(zb)
    logits = za @ zb.T / tau
    n = logits.shape[0]

    def ce(mat):
        total = 0.0
        for i in range(n):
            row = mat[i]
            total += -(row[i] - np.log(np.sum(np.exp(row))))
        return total / n

    return 0.5 * (ce(logits) + ce(logits.T))


def np_barlow(z, zn, lam, eps=1e-5) -> float:
    z = np.asarray(z, float)
    zn = np.asarray(zn, float)
    n, d = z.shape

    def std(t):
        return (t - t.mean(axis=0)) / (t.std(axis=0) + eps)

    c = std(z).T @ std(zn) / n
    on = sum((c[i, i] - 1.0) ** 2 for i in range(d))
    off = sum(c[i, j] ** 2 for i in range(d) for j in range(d) if i != j)
    return float(on + lam * off)


def np_ntxent(z, zn, tau) -> float:
    reps = _np_row_normalize(np.vstack([z, zn]))
    m = reps.shape[0]
    n = m // 2
    sim = reps @ reps.T / tau
    total = 0.0
    for i in range(m):
        target = i + n if i < n else i - n
        others = [j for j in range(m) if j != i]
        logits = sim[i, others]
        pos = sim[i, target]
        total += -(pos - np.log(np.sum(np.exp(logits))))
    return total / m


def np_simsiam(p_a, h_b, p_b, h_a) -> float:
    pa = _np_row_normalize(p_a)
    hb = _np_row_normalize(h_b)
    pb = _np_row_normalize(p_b)
    ha = _np_row_normalize(h_a)
    cos_ab = np.mean(np.sum(pa * hb, axis=1))
    cos_ba = np.mean(np.sum(pb * ha, axis=1))
    return float(0.5 * (-cos_ab - cos_ba))


def np_distance(latents) -> float:
    total = 0.0
    for i in range(len(latents)):
        for j in range(i + 1, len(latents)):
            total += np_mse(latents[i], latents[j])
    return total


def np_mask_bce(logits, targets, eps=1e-7) -> float:
    p = 1.0 / (1.0 + np.exp(-np.asarray(logits, float)))
    p = np.clip(p, eps, 1.0 - eps)
    t = np.asarray(targets, float)
    return float(np.mean(-(t * np.log(p) + (1.0 - t) * np.log(1.0 - p))))


def np_cross_entropy(logits, labels) -> float:
    logits = np.asarray(logits, float)
    total = 0.0
    for row, label in zip(logits, labels):
        total += -(row[label] - np.log(np.sum(np.exp(row))))
    return total / len(labels)


def concordance_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    """Brute-force pairwise concordance with ties counting one half."""
    pos = scores[positive]
    neg = scores[~positive]
    total = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                total += 1.0
            elif sp == sn:
                total += 0.5
    return total / (len(pos) * len(neg))


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------


def finite_difference_grads(loss_fn, params, eps: float = 1e-6):
    """Central-difference gradient of ``loss_fn()`` w.r.t. each parameter
    tensor (parameters are perturbed in place and restored)."""
    grads = []
    with torch.no_grad():
        for p in params:
            g = torch.zeros_like(p)
            flat = p.view(-1)
            gflat = g.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + eps
                f_plus = float(loss_fn())
                flat[i] = orig - eps
                f_minus = float(loss_fn())
                flat[i] = orig
                gflat[i] = (f_plus - f_minus) / (2.0 * eps)
            grads.append(g)
    return grads


def autograd_grads(loss_fn, params):
    loss = loss_fn()
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    return [
        torch.zeros_like(p) if g is None else g.detach().clone()
        for p, g in zip(params, grads)
    ]


def max_relative_grad_error(loss_fn, params, eps: float = 1e-6) -> float:
    """Worst-case relative disagreement between autograd and finite
    differences over every coordinate of ``params``."""
    analytic = autograd_grads(loss_fn, params)
    numeric = finite_difference_grads(loss_fn, params, eps=eps)
    worst = 0.0
    for ga, gf in zip(analytic, numeric):
        diff = (ga - gf).abs()
        scale = torch.maximum(
            torch.maximum(ga.abs(), gf.abs()), torch.full_like(ga, 1e-5)
        )
        worst = max(worst, float((diff / scale).max()))
    return worst
