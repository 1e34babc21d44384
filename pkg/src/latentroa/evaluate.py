"""Attractor labeling and outcome classification of initial states.

Terminal latent vectors of labeled trajectories vote on the attractors their
cells are assigned to: an attractor receiving more success than failure votes
becomes the success region, every other attractor is a failure region (ties
and zero votes go to failure, the conservative choice for safety analysis).

Initial latent vectors are then classified by membership: the predicted
outcome of an initial state is the label of the attractor its cell's ROA
points to. Cells that reach several attractors, reach none, or lie outside
the valid set predict failure; a safety analysis should not certify success
without an exclusive path to the success attractor. Success is the positive
class of the precision/recall/F computation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import EndpointSets
from .grid import DOMAIN_HI, DOMAIN_LO, LatentGrid
from .morse import (
    LABEL_FAILURE,
    LABEL_SUCCESS,
    ROA_AMBIGUOUS,
    ROA_UNREACHABLE,
    MorseGraph,
    RoaAssignment,
)


class NoSuccessRegionError(RuntimeError):
    """No terminal success vector could be mapped to any attractor.

    Raised instead of silently labeling everything failure: the labeling
    protocol has no anchor for a success region in this situation.
    """


@dataclass(frozen=True)
class VoteSummary:
    """How the terminal sets voted, per attractor, plus the excluded points."""

    success_votes: dict[int, int]
    failure_votes: dict[int, int]
    excluded_success: int
    excluded_failure: int


def _attractor_of_points(
    points: np.ndarray, roa: RoaAssignment, g: LatentGrid
) -> np.ndarray:
    """Morse node id per point, or -1 where the point's cell has no exclusive attractor."""
    out = np.full(points.shape[0], -1, dtype=np.int64)
    if points.shape[0] == 0:
        return out
    cells = g.points_to_cells(np.clip(points, DOMAIN_LO, DOMAIN_HI))
    flats = np.ravel_multi_index(cells.T, g.subdivisions)
    for i, flat in enumerate(flats):
        try:
            code = roa.code_of_flat(int(flat))
        except KeyError:
            continue
        if code >= 0:
            out[i] = code
    return out


def label_attractors(
    mg: MorseGraph,
    roa: RoaAssignment,
    endpoints: EndpointSets,
    g: LatentGrid,
) -> tuple[MorseGraph, VoteSummary]:
    """Label attractors by majority vote of the terminal latent vectors.

    Each terminal point votes for the attractor its cell is exclusively
    assigned to; points in ambiguous or unreachable cells, or outside the
    valid set, are excluded from the vote. An attractor is labeled success
    when its success votes strictly exceed its failure votes, failure
    otherwise; attractors with no votes are failure regions.
    """
    if not mg.attractors():
        raise ValueError("Morse graph has no attractors to label")

    succ_at = _attractor_of_points(endpoints.l_success, roa, g)
    fail_at = _attractor_of_points(endpoints.l_failure, roa, g)

    if endpoints.l_success.shape[0] == 0 or np.all(succ_at < 0):
        raise NoSuccessRegionError(
            "no terminal success vector falls in any attractor's region; "
            "cannot designate a success region"
        )

    success_votes: dict[int, int] = {}
    failure_votes: dict[int, int] = {}
    for a in succ_at[succ_at >= 0]:
        success_votes[int(a)] = success_votes.get(int(a), 0) + 1
    for a in fail_at[fail_at >= 0]:
        failure_votes[int(a)] = failure_votes.get(int(a), 0) + 1

    labels: dict[int, str] = {}
    for node in mg.attractors():
        s = success_votes.get(node.id, 0)
        f = failure_votes.get(node.id, 0)
        labels[node.id] = LABEL_SUCCESS if s > f else LABEL_FAILURE

    summary = VoteSummary(
        success_votes=success_votes,
        failure_votes=failure_votes,
        excluded_success=int(np.sum(succ_at < 0)),
        excluded_failure=int(np.sum(fail_at < 0)),
    )
    return mg.with_labels(labels), summary


def confusion_metrics(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """(precision, recall, f_score); zero-denominator cases return 0."""
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f_score = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return precision, recall, f_score


@dataclass(frozen=True)
class ClassificationReport:
    """Predicted outcomes of the initial states plus the derived metrics."""

    success_predictions: tuple[str, ...]  # aligned with endpoints.success_ids
    failure_predictions: tuple[str, ...]  # aligned with endpoints.failure_ids
    success_ids: tuple[str, ...]
    failure_ids: tuple[str, ...]
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f_score: float
    ambiguous_initial: int
    unreachable_initial: int
    outside_valid_initial: int
    clamped_initial: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def classify_initial_states(
    endpoints: EndpointSets,
    roa: RoaAssignment,
    labeled_mg: MorseGraph,
    g: LatentGrid,
) -> ClassificationReport:
    """Predict the outcome of every initial state through the labeled ROA."""
    label_of = {n.id: n.label for n in labeled_mg.attractors()}
    if any(lab == "unlabeled" for lab in label_of.values()):
        raise ValueError("Morse graph attractors are unlabeled; run label_attractors first")

    counters = {"ambiguous": 0, "unreachable": 0, "outside": 0, "clamped": 0}

    def predict(points: np.ndarray) -> list[str]:
        preds: list[str] = []
        if points.shape[0] == 0:
            return preds
        clamped = np.clip(points, DOMAIN_LO, DOMAIN_HI)
        counters["clamped"] += int(np.sum(np.any(clamped != points, axis=1)))
        cells = g.points_to_cells(clamped)
        flats = np.ravel_multi_index(cells.T, g.subdivisions)
        for flat in flats:
            try:
                code = roa.code_of_flat(int(flat))
            except KeyError:
                counters["outside"] += 1
                preds.append(LABEL_FAILURE)
                continue
            if code == ROA_AMBIGUOUS:
                counters["ambiguous"] += 1
                preds.append(LABEL_FAILURE)
            elif code == ROA_UNREACHABLE:
                counters["unreachable"] += 1
                preds.append(LABEL_FAILURE)
            else:
                preds.append(label_of[int(code)])
        return preds

    succ_preds = predict(endpoints.b_success)
    fail_preds = predict(endpoints.b_failure)

    tp = sum(1 for p in succ_preds if p == LABEL_SUCCESS)
    fn = len(succ_preds) - tp
    fp = sum(1 for p in fail_preds if p == LABEL_SUCCESS)
    tn = len(fail_preds) - fp
    precision, recall, f_score = confusion_metrics(tp, fp, fn)

    return ClassificationReport(
        success_predictions=tuple(succ_preds),
        failure_predictions=tuple(fail_preds),
        success_ids=endpoints.success_ids,
        failure_ids=endpoints.failure_ids,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        precision=precision,
        recall=recall,
        f_score=f_score,
        ambiguous_initial=counters["ambiguous"],
        unreachable_initial=counters["unreachable"],
        outside_valid_initial=counters["outside"],
        clamped_initial=counters["clamped"],
    )
