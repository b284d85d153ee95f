"""
扩展曲线：随 η 增大，基域与扩展后目标域之间的类比数量和 ses 的变化
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence

from mediator.core.errors import ConfigError
from mediator.core.expansion import derive_seed, eta_levels, expansion_chain
from mediator.core.knowledge_base import KnowledgeBase
from mediator.core.ontology import Ontology
from mediator.core.sme import DEFAULT_SME_CONFIG, SMEConfig, compute_gmaps

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CurvePoint:
    seed: int
    eta: float
    num_analogies: int
    max_ses: float
    avg_ses: float


@dataclass(frozen=True)
class CurveSummary:
    eta: float
    num_analogies: float
    max_ses: float
    avg_ses: float


def _point(base: Ontology, target: Ontology, kb: KnowledgeBase, seed: int, eta: float,
           cfg: SMEConfig) -> CurvePoint:
    gmaps = compute_gmaps(base, target, kb.synset_service, cfg)
    scores = [g.ses for g in gmaps]
    return CurvePoint(
        seed=seed,
        eta=eta,
        num_analogies=len(gmaps),
        max_ses=max(scores) if scores else 0.0,
        avg_ses=math.fsum(scores) / len(scores) if scores else 0.0,
    )


def expansion_curve(base: Ontology, target: Ontology, kb: KnowledgeBase, eta_max: float,
                    seeds: Sequence[int], independent: bool = False,
                    cfg: SMEConfig = DEFAULT_SME_CONFIG,
                    max_attempts_factor: int = 100) -> List[CurvePoint]:
    """对每个种子扩展目标域，记录各 η 层的 gmap 数量、最大与平均 ses

    默认使用嵌套扩展链，independent 为真时每个 η 各自重新抽样。
    """
    if eta_max < 1:
        raise ConfigError(f"eta_max 必须 ≥ 1，实际为 {eta_max}")
    levels = eta_levels(eta_max)
    points: List[CurvePoint] = []
    for seed in seeds:
        if independent:
            expansions = [expansion_chain(target, kb, [eta], derive_seed(seed, eta),
                                          max_attempts_factor)[0] for eta in levels]
        else:
            expansions = expansion_chain(target, kb, levels, seed, max_attempts_factor)
        for result in expansions:
            points.append(_point(base, result.ontology, kb, seed, result.eta, cfg))
        logger.debug(f"种子 {seed} 的扩展曲线已完成")
    return points


def summarize_curve(points: Sequence[CurvePoint]) -> List[CurveSummary]:
    """按 η 对所有种子取平均"""
    grouped = {}
    for point in points:
        grouped.setdefault(point.eta, []).append(point)
    summary = []
    for eta in sorted(grouped):
        group = grouped[eta]
        summary.append(CurveSummary(
            eta=eta,
            num_analogies=math.fsum(p.num_analogies for p in group) / len(group),
            max_ses=math.fsum(p.max_ses for p in group) / len(group),
            avg_ses=math.fsum(p.avg_ses for p in group) / len(group),
        ))
    return summary
