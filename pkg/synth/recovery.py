# synth/recovery.py
import logging
from typing import Iterable

import numpy as np
from scipy.optimize import linear_sum_assignment

from cluster.kmeans import ClusteringModel
from utils.errors import DataError
from .city_generator import ZoneTruth

logger = logging.getLogger(__name__)


def score_recovery(truth: Iterable[ZoneTruth], model: ClusteringModel) -> float:
    """
    分群還原的正確率：在所有「預測群集 ↔ 真實群集」的一對一對應中，取正確區域比例最高者。
    以混淆矩陣上的最佳指派 (linear_sum_assignment) 求解，因此與群集編號的排列無關。
    """
    truth_by_zone = {t.zone_id: t.true_cluster for t in truth}
    if set(truth_by_zone) != set(model.zone_ids) or len(model.zone_ids) != len(truth_by_zone):
        missing = sorted(set(truth_by_zone) ^ set(model.zone_ids))
        raise DataError("zone_mismatch", f"真實答案與分群結果的區域集合不同（差異 {len(missing)} 個）。",
                        details={"zones": missing[:20]})

    true_labels = np.asarray([truth_by_zone[zone] for zone in model.zone_ids])
    predicted = np.asarray(model.assignments)
    true_ids, true_index = np.unique(true_labels, return_inverse=True)
    pred_ids, pred_index = np.unique(predicted, return_inverse=True)
    confusion = np.zeros((len(true_ids), len(pred_ids)), dtype=np.int64)
    np.add.at(confusion, (true_index, pred_index), 1)

    rows, cols = linear_sum_assignment(confusion, maximize=True)
    score = float(confusion[rows, cols].sum()) / len(true_labels)
    logger.debug(f"分群還原正確率: {score:.4f}")
    return score
