"""Embedding-space attack: optimize an additive perturbation of the input
embeddings under a CW-style loss, then project each perturbed position back
onto its semantic search space.

Each iteration has two phases. Phase I takes one Adam step on
L(e*) = ||e*||_p + const * g(logits(e + e*)), with g evaluated on the
continuous embeddings (the discrete substitution has no gradient). Phase II
maps every attackable position to the candidate token whose embedding row
is closest to its perturbed embedding, and scores the resulting discrete
sentence. The best successful candidate (fewest substitutions, then lowest
loss) is returned; if none succeeds, the final projection is.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .errors import (
    EmptyInput,
    MaskSpaceConflict,
    ShapeMismatch,
    SingleClass,
    TargetEqualsTruth,
)
from .optim import Adam
from .spaces import SearchSpace
from .vocab import distances_to_rows


def targeted_objective(logits, target: int, confidence: float) -> float:
    """max(max_{i != target} z_i - z_target, -confidence): negative once the
    target class leads every other logit by at least ``confidence``."""
    z = np.asarray(logits, dtype=np.float64)
    if z.shape[0] < 2:
        raise SingleClass("attack objective needs at least two classes")
    rival = np.max(np.delete(z, target))
    return float(max(rival - z[target], -confidence))


def untargeted_objective(logits, truth: int, confidence: float) -> float:
    """max(z_truth - max_{i != truth} z_i, -confidence): negative once any
    other class leads the true one by at least ``confidence``."""
    z = np.asarray(logits, dtype=np.float64)
    if z.shape[0] < 2:
        raise SingleClass("attack objective needs at least two classes")
    rival = np.max(np.delete(z, truth))
    return float(max(z[truth] - rival, -confidence))


def _objective_grad(
    logits: np.ndarray, label: int, confidence: float, targeted: bool
) -> np.ndarray:
    """d objective / d logits; zero where the confidence floor is active.
    The rival argmax resolves to the lowest index on ties."""
    z = np.asarray(logits, dtype=np.float64)
    masked = z.copy()
    masked[label] = -np.inf
    rival = int(np.argmax(masked))
    grad = np.zeros_like(z)
    if targeted:
        if z[rival] - z[label] > -confidence:
            grad[rival] = 1.0
            grad[label] = -1.0
    else:
        if z[label] - z[rival] > -confidence:
            grad[label] = 1.0
            grad[rival] = -1.0
    return grad


def perturbation_norm(e_star: np.ndarray, norm: int) -> float:
    """Global p-norm of the concatenated per-position perturbations."""
    flat = np.asarray(e_star, dtype=np.float64).ravel()
    if norm == 1:
        return float(np.abs(flat).sum())
    if norm == 2:
        return float(np.sqrt(flat @ flat))
    raise ValueError(f"norm order must be 1 or 2, got {norm}")


def attack_loss(e_star, objective_value: float, const: float, norm: int) -> float:
    """||e*||_p + const * g."""
    return perturbation_norm(np.asarray(e_star, dtype=np.float64), norm) + float(
        const
    ) * float(objective_value)


def _norm_grad(e_star: np.ndarray, norm: int) -> np.ndarray:
    # subgradient 0 at the origin (l2) and at exact zeros (l1)
    if norm == 1:
        return np.sign(e_star)
    total = perturbation_norm(e_star, 2)
    if total == 0.0:
        return np.zeros_like(e_star)
    return e_star / total


@dataclass
class AttackResult:
    """Outcome of one attack: the adversarial sequence and its audit trail."""

    adversarial_ids: np.ndarray
    success: bool
    perturbed_positions: list[int]
    iterations_used: int
    loss_trace: list[float]
    final_logits: np.ndarray
    g_trace: list[float] = field(default_factory=list)


class EmbeddingSpaceAttack(BaseEstimator):
    """Configured attack runner; hyperparameters follow the CW attack
    family (``const`` trades perturbation size against the attack goal,
    ``confidence`` floors the objective).

    The attack itself draws no randomness; ``seed`` is recorded so campaign
    outputs can declare the setting they were produced under.
    """

    def __init__(
        self,
        const: float = 100.0,
        confidence: float = 1.0,
        max_iter: int = 100,
        norm: int = 2,
        step_size: float = 0.1,
        goal: str = "untargeted",
        target_class: int | None = None,
        early_exit: bool = False,
        seed: int = 1111,
    ):
        self.const = const
        self.confidence = confidence
        self.max_iter = max_iter
        self.norm = norm
        self.step_size = step_size
        self.goal = goal
        self.target_class = target_class
        self.early_exit = early_exit
        self.seed = seed

    def validate(self, num_classes: int | None = None) -> None:
        if self.const <= 0:
            raise ValueError("const must be positive")
        if self.confidence < 0:
            raise ValueError("confidence must be nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.norm not in (1, 2):
            raise ValueError("norm must be 1 or 2")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.goal not in ("targeted", "untargeted"):
            raise ValueError(f"unknown goal {self.goal!r}")
        if self.goal == "targeted":
            if self.target_class is None:
                raise ValueError("targeted attacks need a target_class")
            if num_classes is not None and not 0 <= self.target_class < num_classes:
                raise ValueError("target_class outside the model's classes")

    def _objective(self, logits, truth: int) -> float:
        if self.goal == "targeted":
            return targeted_objective(logits, self.target_class, self.confidence)
        return untargeted_objective(logits, truth, self.confidence)

    def _is_success(self, prediction: int, truth: int) -> bool:
        if self.goal == "targeted":
            return prediction == self.target_class
        return prediction != truth

    def loss_and_grad(
        self, model, base: np.ndarray, e_star: np.ndarray, truth: int
    ) -> tuple[float, float, np.ndarray]:
        """Loss, objective value, and d loss / d e_star at the continuous
        point e = base + e_star."""
        label = self.target_class if self.goal == "targeted" else truth
        logits, trace = model.forward_from_embeddings(base + e_star)
        g_val = self._objective(logits, truth)
        loss = attack_loss(e_star, g_val, self.const, self.norm)
        gz = _objective_grad(logits, label, self.confidence, self.goal == "targeted")
        grad = _norm_grad(e_star, self.norm) + self.const * model.grad_wrt_embeddings(
            trace, gz
        )
        return loss, g_val, grad

    def run(
        self,
        model,
        ids,
        truth: int,
        spaces: list[SearchSpace],
        attack_mask: list[bool] | None = None,
    ) -> AttackResult:
        """Attack one sentence. ``spaces`` holds one SearchSpace per
        position; masked-off positions are never substituted and their
        perturbation stays pinned at zero."""
        self.validate(num_classes=model.num_classes)
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size == 0:
            raise EmptyInput("cannot attack an empty sentence")
        n = ids.shape[0]
        if len(spaces) != n:
            raise ShapeMismatch(f"{len(spaces)} spaces for {n} tokens")
        if attack_mask is None:
            mask = np.ones(n, dtype=bool)
        else:
            mask = np.asarray(attack_mask, dtype=bool)
            if mask.shape != (n,):
                raise ShapeMismatch(f"mask shape {mask.shape} != ({n},)")
        if self.goal == "targeted" and self.target_class == truth:
            raise TargetEqualsTruth(f"target class equals the true label {truth}")
        for i in np.flatnonzero(mask):
            if len(spaces[i]) == 0:
                raise MaskSpaceConflict(f"attackable position {i} has an empty space")

        matrix = model.embedding_matrix

        # original embeddings stay the anchor for every iteration
        base = matrix.rows[ids].astype(np.float64, copy=True)
        e_star = np.zeros_like(base)
        optimizer = Adam([e_star], lr=self.step_size)

        attackable = [i for i in range(n) if mask[i]]
        cand_ids = {i: spaces[i].candidate_ids for i in attackable}
        cand_rows = {i: matrix.rows[cand_ids[i]] for i in attackable}

        loss_trace: list[float] = []
        g_trace: list[float] = []

        def score_candidate(x: np.ndarray) -> tuple[bool, int, float, np.ndarray]:
            logits = model.forward(x)
            g_val = self._objective(logits, truth)
            g_trace.append(g_val)
            success = self._is_success(int(np.argmax(logits)), truth)
            n_pert = int(np.count_nonzero(x != ids))
            return success, n_pert, attack_loss(e_star, g_val, self.const, self.norm), logits

        def result(x, success, iters, logits) -> AttackResult:
            return AttackResult(
                adversarial_ids=x.copy(),
                success=success,
                perturbed_positions=[int(i) for i in np.flatnonzero(x != ids)],
                iterations_used=iters,
                loss_trace=loss_trace,
                final_logits=logits.copy(),
                g_trace=g_trace,
            )

        success0, _, loss0, logits0 = score_candidate(ids)
        best: tuple[int, float, np.ndarray, np.ndarray] | None = None
        if success0:
            best = (0, loss0, ids.copy(), logits0)
            if self.early_exit:
                return result(ids, True, 0, logits0)

        x_last, logits_last = ids.copy(), logits0
        iterations = 0
        for k in range(self.max_iter):
            iterations = k + 1
            # Phase I: one Adam step on the continuous relaxation
            loss, g_val, grad = self.loss_and_grad(model, base, e_star, truth)
            g_trace.append(g_val)
            loss_trace.append(loss)
            grad[~mask] = 0.0
            optimizer.step([grad])

            # Phase II: project every attackable position onto its space
            e_prime = base + e_star
            x_new = ids.copy()
            for i in attackable:
                dists = distances_to_rows(e_prime[i], cand_rows[i], self.norm)
                x_new[i] = cand_ids[i][int(np.argmin(dists))]

            success, n_pert, cand_loss, logits_d = score_candidate(x_new)
            x_last, logits_last = x_new, logits_d
            if success and (best is None or (n_pert, cand_loss) < (best[0], best[1])):
                best = (n_pert, cand_loss, x_new.copy(), logits_d)
            if success and self.early_exit:
                break

        if best is not None:
            return result(best[2], True, iterations, best[3])
        return result(x_last, False, iterations, logits_last)
