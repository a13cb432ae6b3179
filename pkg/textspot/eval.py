'''
Evaluation: detection precision/recall/F-measure, end-to-end spotting F-measure,
and average edit distance
'''

import math

from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Optional, Sequence

import editdistance
import numpy as np
import pandas as pd

from .geometry import Polygon, TextAnnotation, raster_mask

IOU_THRESHOLD = 0.5

# Predictions covering an ignored region with more than this share of their area are dropped
IGNORE_OVERLAP = 0.5


@dataclass(frozen=True)
class Match:
    ''' One matched (ground truth, prediction) pair '''
    gt_index: int
    pred_index: int
    iou: float
    text_match: bool


@dataclass(frozen=True)
class ImageMatch:
    ''' Matching result of one image '''
    matches: tuple[Match, ...]
    num_gt: int
    num_pred: int
    excluded_preds: tuple[int, ...] = ()

    @property
    def detections(self) -> int:
        ''' Matched pairs, regardless of text '''
        return len(self.matches)

    @property
    def text_matches(self) -> int:
        ''' Matched pairs whose transcriptions agree '''
        return sum(1 for match in self.matches if match.text_match)


def _ratio(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator > 0 else 0.0


@dataclass(frozen=True)
class MatchReport:
    '''
        Counts summed over all images and the derived scores.

        For end-to-end reports a pair only counts when its texts match.
    '''
    images: list[ImageMatch] = field(default_factory=list)
    end_to_end: bool = False

    @property
    def true_positives(self) -> int:
        ''' Number of correct predictions '''
        if self.end_to_end:
            return sum(image.text_matches for image in self.images)
        return sum(image.detections for image in self.images)

    @property
    def num_gt(self) -> int:
        ''' Number of non-ignored ground-truth instances '''
        return sum(image.num_gt for image in self.images)

    @property
    def num_pred(self) -> int:
        ''' Number of predictions that were not excluded '''
        return sum(image.num_pred for image in self.images)

    @property
    def precision(self) -> float:
        ''' TP / predictions (0 without predictions) '''
        return _ratio(self.true_positives, self.num_pred)

    @property
    def recall(self) -> float:
        ''' TP / ground truth (0 without ground truth) '''
        return _ratio(self.true_positives, self.num_gt)

    @property
    def f_measure(self) -> float:
        ''' Harmonic mean of precision and recall '''
        (precision, recall) = (self.precision, self.recall)
        if precision + recall == 0:
            return 0.0
        return 2 * precision * recall / (precision + recall)

    def to_dict(self, prefix: str = "") -> dict[str, float]:
        ''' Flat key/value view for reports '''
        return {
            f"{prefix}precision": self.precision,
            f"{prefix}recall": self.recall,
            f"{prefix}f_measure": self.f_measure,
            f"{prefix}true_positives": self.true_positives,
            f"{prefix}num_gt": self.num_gt,
            f"{prefix}num_pred": self.num_pred,
        }


def _polygon_of(pred) -> Polygon:
    # Detected instances carry their contour at image resolution
    contour = getattr(pred, "image_contour", None)
    return contour if contour is not None else pred.polygon


def canvas_size(polygons: Sequence[Polygon]) -> tuple[int, int]:
    ''' (height, width) large enough to rasterize all polygons '''
    if not polygons:
        return 1, 1
    max_x = max(poly.bounds()[2] for poly in polygons)
    max_y = max(poly.bounds()[3] for poly in polygons)
    return max(1, math.ceil(max_y) + 1), max(1, math.ceil(max_x) + 1)


def normalize_text(text: str, case_sensitive: bool = False) -> str:
    ''' Strip surrounding whitespace and optionally fold case '''
    text = text.strip()
    return text if case_sensitive else text.casefold()


def match_image(gts: Sequence[TextAnnotation], preds: Sequence, iou_thr: float = IOU_THRESHOLD,
                case_sensitive: bool = False,
                canvas: Optional[tuple[int, int]] = None) -> ImageMatch:
    '''
        Greedy one-to-one matching of predictions to non-ignored ground truth
        in descending IoU order. Equal IoUs are taken in (gt, pred) index order.
    '''
    pred_polygons = [_polygon_of(pred) for pred in preds]
    if canvas is None:
        canvas = canvas_size([gt.polygon for gt in gts] + pred_polygons)
    (height, width) = canvas

    gt_masks = [raster_mask(gt.polygon, height, width) for gt in gts]
    pred_masks = [raster_mask(poly, height, width) for poly in pred_polygons]
    ignore_masks = [mask for (gt, mask) in zip(gts, gt_masks) if gt.ignore]

    excluded = []
    for (index, mask) in enumerate(pred_masks):
        pred_area = mask.sum()
        if pred_area > 0 and any((mask & ignored).sum() / pred_area > IGNORE_OVERLAP
                                 for ignored in ignore_masks):
            excluded.append(index)

    care_gts = [index for (index, gt) in enumerate(gts) if not gt.ignore]
    care_preds = [index for index in range(len(preds)) if index not in excluded]

    candidates = []
    for gt_index in care_gts:
        for pred_index in care_preds:
            union = (gt_masks[gt_index] | pred_masks[pred_index]).sum()
            if union == 0:
                continue
            iou = float((gt_masks[gt_index] & pred_masks[pred_index]).sum() / union)
            if iou >= iou_thr:
                candidates.append((-iou, gt_index, pred_index))

    matches = []
    (used_gts, used_preds) = (set(), set())
    for (negative_iou, gt_index, pred_index) in sorted(candidates):
        if gt_index in used_gts or pred_index in used_preds:
            continue
        used_gts.add(gt_index)
        used_preds.add(pred_index)

        gt_text = normalize_text(gts[gt_index].transcription, case_sensitive)
        pred_text = normalize_text(preds[pred_index].transcription, case_sensitive)
        matches.append(Match(gt_index, pred_index, -negative_iou, gt_text == pred_text))

    return ImageMatch(tuple(matches), len(care_gts), len(care_preds), tuple(excluded))


def match_detections(gts: Sequence[TextAnnotation], preds: Sequence,
                     iou_thr: float = IOU_THRESHOLD,
                     canvas: Optional[tuple[int, int]] = None) -> MatchReport:
    ''' Detection scores of one image '''
    return MatchReport([match_image(gts, preds, iou_thr, canvas=canvas)])


def e2e_f_measure(gts: Sequence[TextAnnotation], preds: Sequence, iou_thr: float = IOU_THRESHOLD,
                  case_sensitive: bool = False,
                  canvas: Optional[tuple[int, int]] = None) -> MatchReport:
    ''' End-to-end scores of one image: a match also needs the right text '''
    return MatchReport([match_image(gts, preds, iou_thr, case_sensitive, canvas)],
                       end_to_end=True)


def edit_distance(a: str, b: str) -> int:
    ''' Levenshtein distance with unit costs '''
    return int(editdistance.eval(a, b))


def image_edit_distance(gts: Sequence[TextAnnotation], preds: Sequence, image: ImageMatch,
                        case_sensitive: bool = False) -> int:
    '''
        Sum of edit distances of one image: matched pairs by their texts,
        unmatched ground truth and unmatched predictions by their length.
    '''
    def text(item) -> str:
        return normalize_text(item.transcription, case_sensitive)

    matched_gts = {match.gt_index for match in image.matches}
    matched_preds = {match.pred_index for match in image.matches}

    total = sum(edit_distance(text(gts[match.gt_index]), text(preds[match.pred_index]))
                for match in image.matches)
    total += sum(len(text(gt)) for (index, gt) in enumerate(gts)
                 if not gt.ignore and index not in matched_gts)
    total += sum(len(text(pred)) for (index, pred) in enumerate(preds)
                 if index not in matched_preds and index not in image.excluded_preds)
    return total


def aed(samples: Sequence[tuple[Sequence[TextAnnotation], Sequence]],
        iou_thr: float = IOU_THRESHOLD, case_sensitive: bool = False) -> float:
    ''' Average edit distance: the mean per-image sum over (gts, preds) pairs '''
    if not samples:
        return 0.0
    totals = [image_edit_distance(gts, preds, match_image(gts, preds, iou_thr, case_sensitive),
                                  case_sensitive)
              for (gts, preds) in samples]
    return float(np.mean(totals))


@dataclass(frozen=True)
class EvalSample:
    ''' Ground truth and predictions of one image '''
    name: str
    gts: list[TextAnnotation]
    preds: list


@dataclass(frozen=True)
class ImageEvaluation:
    ''' Everything computed for one image '''
    name: str
    match: ImageMatch
    edit_distance: int


@dataclass(frozen=True)
class DatasetReport:
    ''' Scores of a whole dataset '''
    detection: MatchReport
    end_to_end: MatchReport
    aed: float
    images: list[ImageEvaluation]

    def to_dict(self) -> dict[str, float]:
        ''' All scores as flat key/value pairs '''
        result = {"images": len(self.images)}
        result.update(self.detection.to_dict("det_"))
        result.update(self.end_to_end.to_dict("e2e_"))
        result["aed"] = self.aed
        return result

    def to_frame(self) -> pd.DataFrame:
        ''' One row per image '''
        rows = []
        for image in self.images:
            det = MatchReport([image.match])
            e2e = MatchReport([image.match], end_to_end=True)
            rows.append({
                "image": image.name,
                "num_gt": image.match.num_gt,
                "num_pred": image.match.num_pred,
                "det_tp": det.true_positives,
                "e2e_tp": e2e.true_positives,
                "det_f_measure": det.f_measure,
                "e2e_f_measure": e2e.f_measure,
                "edit_distance": image.edit_distance,
            })
        return pd.DataFrame(rows, columns=["image", "num_gt", "num_pred", "det_tp", "e2e_tp",
                                           "det_f_measure", "e2e_f_measure", "edit_distance"])


def evaluate_image(sample: EvalSample, iou_thr: float = IOU_THRESHOLD,
                   case_sensitive: bool = False) -> ImageEvaluation:
    ''' Match one image and compute its edit distance '''
    match = match_image(sample.gts, sample.preds, iou_thr, case_sensitive)
    distance = image_edit_distance(sample.gts, sample.preds, match, case_sensitive)
    return ImageEvaluation(sample.name, match, distance)


def _evaluate_job(job: tuple[EvalSample, float, bool]) -> ImageEvaluation:
    return evaluate_image(*job)


def evaluate_dataset(samples: Sequence[EvalSample], iou_thr: float = IOU_THRESHOLD,
                     case_sensitive: bool = False, workers: int = 1) -> DatasetReport:
    ''' Evaluate all images, in parallel if workers > 1; results keep the input order '''
    jobs = [(sample, iou_thr, case_sensitive) for sample in samples]
    if workers > 1 and len(jobs) > 1:
        with Pool(workers) as pool:
            images = pool.map(_evaluate_job, jobs)
    else:
        images = [_evaluate_job(job) for job in jobs]

    matches = [image.match for image in images]
    average = float(np.mean([image.edit_distance for image in images])) if images else 0.0
    return DatasetReport(MatchReport(matches), MatchReport(matches, end_to_end=True),
                         average, images)
