"""
基于常识知识库的本体扩展

随机挑选本体中的一个概念，再从知识库中它的邻居里随机挑一个尚未出现的概念追加进来，
连同新概念与已有概念之间的全部知识库边。追加数量 n = ⌊(η−1)·|概念数|⌋。
"""

import hashlib
import logging
import math
import random
from dataclasses import dataclass
from decimal import Decimal
from typing import List, Sequence, Tuple

from mediator.core.errors import ConfigError
from mediator.core.knowledge_base import KnowledgeBase
from mediator.core.ontology import Concept, Ontology, Relation, natural_key

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExpansionConfig:
    """扩展参数"""
    eta: float = 1.0
    eta_max: float = 6.0
    seed: int = 0
    max_attempts_factor: int = 100

    def validate(self) -> "ExpansionConfig":
        if self.eta_max < 1:
            raise ConfigError(f"eta_max 必须 ≥ 1，实际为 {self.eta_max}")
        if not 1 <= self.eta <= self.eta_max:
            raise ConfigError(f"eta 必须在 [1, {self.eta_max}] 之间，实际为 {self.eta}")
        if self.max_attempts_factor < 1:
            raise ConfigError(f"max_attempts_factor 必须 ≥ 1，实际为 {self.max_attempts_factor}")
        return self


@dataclass(frozen=True)
class ExpansionResult:
    """一次扩展的结果；partial 表示知识库不足以追加 requested 个概念"""
    ontology: Ontology
    eta: float
    requested: int
    added: Tuple[str, ...]
    partial: bool


def target_count(eta: float, num_concepts: int) -> int:
    """n = ⌊(η−1)·|概念数|⌋，用十进制避免 1.1-1 之类的浮点误差"""
    return math.floor((Decimal(str(eta)) - 1) * num_concepts)


def derive_seed(seed: int, *keys) -> int:
    """由主种子和若干键派生出独立的随机种子"""
    material = "\x1f".join([str(seed)] + [str(k) for k in keys]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")


def eta_levels(eta_max: float) -> List[float]:
    """η = 1, 2, …, ⌊η_max⌋，η_max 不是整数时把它也加在最后"""
    levels = [float(k) for k in range(1, int(math.floor(eta_max)) + 1)]
    if eta_max > levels[-1]:
        levels.append(float(eta_max))
    return levels


class _Grower:
    """在一条随机流上逐步追加概念"""

    def __init__(self, ontology: Ontology, kb: KnowledgeBase, rng: random.Random):
        self.ontology = ontology
        self.kb = kb
        self.rng = rng
        self.syn = kb.synset_service
        self.added: List[str] = []
        self._relation_counter = 0

    def grow(self, count: int, attempts: int):
        while count > 0 and attempts > 0:
            attempts -= 1
            concepts = sorted(self.ontology.concepts, key=lambda c: natural_key(c.id))
            anchor = self.rng.choice(concepts)
            present = self.ontology.labels
            candidates = [label for label in self.kb.neighbor_labels(anchor.label)
                          if label not in present]
            if not candidates:
                continue
            self._append(self.rng.choice(candidates))
            count -= 1

    def _append(self, label: str):
        ontology = self.ontology
        concept_id = ontology.fresh_id(label)
        concept = Concept(concept_id, label, self.syn.synsets(label), "expansion")
        by_label = {}
        for existing in ontology.concepts:
            by_label.setdefault(existing.label, []).append(existing.id)
        relations = []
        taken = {concept_id}
        for edge in self.kb.edges_between(label, by_label):
            sources = [concept_id] if edge.source == label else by_label[edge.source]
            targets = [concept_id] if edge.target == label else by_label[edge.target]
            for source in sources:
                for target in targets:
                    relation_id = self._next_relation_id(ontology, taken)
                    taken.add(relation_id)
                    relations.append(Relation(relation_id, edge.predicate, (source, target),
                                              self.syn.synsets(edge.predicate), "expansion"))
        self.ontology = ontology.add([concept], relations)
        self.added.append(concept_id)
        logger.debug(f"扩展追加概念 {label}（{len(relations)} 条关系）")

    def _next_relation_id(self, ontology: Ontology, taken) -> str:
        while True:
            self._relation_counter += 1
            candidate = f"x{self._relation_counter}"
            if candidate not in ontology.ids and candidate not in taken:
                return candidate


def expansion_chain(ontology: Ontology, kb: KnowledgeBase, etas: Sequence[float],
                    seed: int, max_attempts_factor: int = 100) -> List[ExpansionResult]:
    """嵌套扩展：每个 η 层在上一层输出的基础上继续追加

    追加数量始终以原始本体的概念数计算，因此第 k 层共追加 n(η_k) 个概念
    （知识库不足时标记 partial）。
    """
    rng = random.Random(seed)
    grower = _Grower(ontology, kb, rng)
    base_count = len(ontology.concepts)
    results = []
    for eta in etas:
        requested = target_count(eta, base_count)
        remaining = requested - len(grower.added)
        if remaining > 0:
            grower.grow(remaining, max_attempts_factor * remaining)
        partial = len(grower.added) < requested
        if partial:
            logger.info(f"η={eta} 的扩展只追加了 {len(grower.added)}/{requested} 个概念")
        results.append(ExpansionResult(
            ontology=grower.ontology,
            eta=eta,
            requested=requested,
            added=tuple(grower.added),
            partial=partial,
        ))
    return results


def expand(ontology: Ontology, cfg: ExpansionConfig, kb: KnowledgeBase) -> ExpansionResult:
    """按 cfg.eta 扩展本体；随机选择只由 cfg.seed 决定"""
    cfg.validate()
    return expansion_chain(ontology, kb, [cfg.eta], cfg.seed, cfg.max_attempts_factor)[0]
