"""
结构映射引擎

在基域与目标域本体之间建立关系级的局部匹配假设，
把两两一致的假设组合成极大的全局映射（gmap），计算结构评价分数，
并从未匹配的基域关系推出候选推断。

结构一致性指实体对应的一对一约束：同一基域概念不能映到两个目标，
同一目标也不能接收两个基域概念。一致性是两两可判定的，
因此极大一致假设集恰好是相容图中的极大团。
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import networkx as nx

from mediator.core.errors import ConfigError, SMESizeError
from mediator.core.ontology import Ontology, natural_key, predicate_synsets, predicates_match

if TYPE_CHECKING:
    from mediator.core.knowledge_base import SynsetService

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SMEConfig:
    """评分权重与规模上限"""
    w_rel: float = 1.0
    w_label: float = 0.5
    w_sys: float = 0.2
    max_hypotheses: int = 10000

    def validate(self) -> "SMEConfig":
        for name in ("w_rel", "w_label", "w_sys"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} 不能为负")
        if self.max_hypotheses < 1:
            raise ConfigError("max_hypotheses 必须 ≥ 1")
        return self


DEFAULT_SME_CONFIG = SMEConfig()


@dataclass(frozen=True)
class Skolem:
    """推断引入的假设概念，对应一个未映射的基域概念"""
    base_concept: str
    label: str

    def __str__(self):
        return f"?{self.label}"


Term = Union[str, Skolem]


@dataclass(frozen=True)
class CandidateInference:
    """投射到目标域的关系：参数是目标概念 id 或 Skolem

    候选推断和解在映射下的像都用这个类型表示。
    """
    predicate: str
    predicate_synsets: FrozenSet[str]
    args: Tuple[Term, ...]
    base_relation: str

    @property
    def skolems(self) -> Tuple[Skolem, ...]:
        return tuple(dict.fromkeys(a for a in self.args if isinstance(a, Skolem)))

    @property
    def is_grounded(self) -> bool:
        return not self.skolems

    def render(self, target: Optional[Ontology] = None) -> str:
        def show(arg):
            if isinstance(arg, Skolem):
                return str(arg)
            return target.label_of(arg) if target is not None else arg
        return f"({self.predicate} {' '.join(show(a) for a in self.args)})"


@dataclass(frozen=True)
class MatchHypothesis:
    """一个基域关系与一个目标关系的局部匹配"""
    base_relation: str
    target_relation: str
    entity_pairs: Tuple[Tuple[str, str], ...]
    local_score: float

    @property
    def is_consistent(self) -> bool:
        return _consistent_pairs(self.entity_pairs)


@dataclass(frozen=True)
class GMap:
    """一个极大结构一致的全局映射"""
    hypotheses: Tuple[MatchHypothesis, ...]
    entity_map: Tuple[Tuple[str, str], ...]
    ses: float
    inferences: Tuple[CandidateInference, ...] = ()

    @cached_property
    def mapping(self) -> Dict[str, str]:
        return dict(self.entity_map)

    @cached_property
    def targets(self) -> FrozenSet[str]:
        return frozenset(t for _, t in self.entity_map)

    @cached_property
    def base_relations(self) -> FrozenSet[str]:
        return frozenset(h.base_relation for h in self.hypotheses)

    def sort_key(self):
        return (-self.ses, self.entity_map,
                tuple((h.base_relation, h.target_relation) for h in self.hypotheses))


def _consistent_pairs(pairs) -> bool:
    forward: Dict[str, str] = {}
    backward: Dict[str, str] = {}
    for base, target in pairs:
        if forward.setdefault(base, target) != target:
            return False
        if backward.setdefault(target, base) != base:
            return False
    return True


def _hypothesis_key(h: MatchHypothesis):
    return (natural_key(h.base_relation), natural_key(h.target_relation))


def build_match_hypotheses(base: Ontology, target: Ontology,
                           syn: Optional["SynsetService"] = None,
                           cfg: SMEConfig = DEFAULT_SME_CONFIG) -> List[MatchHypothesis]:
    """为每一对元数相同、谓词匹配的关系建立一个匹配假设"""
    hypotheses = []
    target_synsets = {r.id: predicate_synsets(r, syn) for r in target.relations}
    for base_relation in base.relations:
        base_synsets = predicate_synsets(base_relation, syn)
        for target_relation in target.relations:
            if base_relation.arity != target_relation.arity:
                continue
            if not predicates_match(base_relation.predicate, base_synsets,
                                    target_relation.predicate, target_synsets[target_relation.id]):
                continue
            pairs = []
            compatible = True
            for base_arg, target_arg in zip(base_relation.args, target_relation.args):
                base_is_concept = base.is_concept(base_arg)
                if base_is_concept != target.is_concept(target_arg):
                    compatible = False
                    break
                if base_is_concept:
                    pairs.append((base_arg, target_arg))
            if not compatible:
                continue
            score = cfg.w_rel
            if base_relation.predicate == target_relation.predicate:
                score += cfg.w_label
            hypotheses.append(MatchHypothesis(base_relation.id, target_relation.id,
                                              tuple(pairs), score))
    return sorted(hypotheses, key=_hypothesis_key)


def structural_score(hypotheses: Sequence[MatchHypothesis],
                     cfg: SMEConfig = DEFAULT_SME_CONFIG) -> float:
    """局部分数之和，加上每个被 d ≥ 2 个假设共用的实体对应 w_sys·(d−1)"""
    ordered = sorted(hypotheses, key=_hypothesis_key)
    usage = Counter(pair for h in ordered for pair in set(h.entity_pairs))
    extra = sum(d - 1 for d in usage.values() if d >= 2)
    return math.fsum(h.local_score for h in ordered) + cfg.w_sys * extra


def ses(g: GMap, cfg: SMEConfig = DEFAULT_SME_CONFIG) -> float:
    """gmap 的结构评价分数"""
    return structural_score(g.hypotheses, cfg)


def _make_gmap(hypotheses: Sequence[MatchHypothesis], cfg: SMEConfig) -> GMap:
    ordered = tuple(sorted(hypotheses, key=_hypothesis_key))
    entity_map = tuple(sorted({pair for h in ordered for pair in h.entity_pairs}))
    return GMap(ordered, entity_map, structural_score(ordered, cfg))


def compute_gmaps(base: Ontology, target: Ontology,
                  syn: Optional["SynsetService"] = None,
                  cfg: SMEConfig = DEFAULT_SME_CONFIG) -> List[GMap]:
    """全部极大结构一致 gmap，按 (ses 降序, entity_map 字典序) 排列"""
    hypotheses = build_match_hypotheses(base, target, syn, cfg)
    if len(hypotheses) > cfg.max_hypotheses:
        raise SMESizeError(len(hypotheses), cfg.max_hypotheses)
    usable = [h for h in hypotheses if h.is_consistent]
    if not usable:
        return []

    graph = nx.Graph()
    graph.add_nodes_from(range(len(usable)))
    for i in range(len(usable)):
        for j in range(i + 1, len(usable)):
            if _consistent_pairs(usable[i].entity_pairs + usable[j].entity_pairs):
                graph.add_edge(i, j)

    gmaps = []
    for clique in nx.find_cliques(graph):
        g = _make_gmap([usable[i] for i in clique], cfg)
        gmaps.append(GMap(g.hypotheses, g.entity_map, g.ses,
                          tuple(candidate_inferences(g, base, target))))
    gmaps.sort(key=GMap.sort_key)
    logger.debug(f"SME: {len(hypotheses)} 个匹配假设, {len(gmaps)} 个 gmap")
    return gmaps


def match_total(base: Ontology, target: Ontology,
                syn: Optional["SynsetService"] = None,
                cfg: SMEConfig = DEFAULT_SME_CONFIG) -> float:
    """两个本体之间全部 gmap 的 ses 之和，衡量它们适合类比的程度"""
    return math.fsum(g.ses for g in compute_gmaps(base, target, syn, cfg))


def candidate_inferences(g: GMap, base: Ontology, target: Ontology) -> List[CandidateInference]:
    """把未匹配但至少有一个参数已映射的基域关系投射到目标域

    未映射的概念替换为 Skolem；同一基域概念在所有推断中共用一个 Skolem。
    """
    mapping = {b: t for b, t in g.entity_map if target.is_concept(t)}
    relation_map: Dict[str, str] = {}
    for h in g.hypotheses:
        relation_map.setdefault(h.base_relation, h.target_relation)
    matched = set(relation_map)
    skolems: Dict[str, Skolem] = {}
    inferences = []
    for relation in base.relations:
        if relation.id in matched:
            continue
        if not any(a in mapping for a in relation.args if base.is_concept(a)):
            continue
        args: List[Term] = []
        for arg in relation.args:
            if base.is_concept(arg):
                if arg in mapping:
                    args.append(mapping[arg])
                else:
                    args.append(skolems.setdefault(arg, Skolem(arg, base.concept(arg).label)))
            elif arg in relation_map:
                args.append(relation_map[arg])
            else:
                args = []
                break
        if args:
            inferences.append(CandidateInference(relation.predicate, relation.predicate_synsets,
                                                 tuple(args), relation.id))
    return inferences


@dataclass(frozen=True)
class MappingFunction:
    """由一个 gmap 导出的基域到目标域的映射 f"""
    concepts: Tuple[Tuple[str, str], ...]
    relations: Tuple[Tuple[str, str], ...]
    skolems: Tuple[Tuple[str, Skolem], ...]

    @classmethod
    def from_gmap(cls, g: Optional[GMap], base: Ontology) -> "MappingFunction":
        concepts = g.entity_map if g is not None else ()
        relations = {}
        for h in (g.hypotheses if g is not None else ()):
            relations.setdefault(h.base_relation, h.target_relation)
        mapped = dict(concepts)
        skolems = tuple((c.id, Skolem(c.id, c.label)) for c in base.concepts if c.id not in mapped)
        return cls(tuple(concepts), tuple(sorted(relations.items())), skolems)

    def image(self, element_id: str) -> Optional[Term]:
        for base_id, target_id in self.concepts + self.relations:
            if base_id == element_id:
                return target_id
        for base_id, skolem in self.skolems:
            if base_id == element_id:
                return skolem
        return None

    def apply(self, base: Ontology, relation_ids: Sequence[str]) -> List[CandidateInference]:
        """把基域关系映射到目标域，未映射概念替换为 Skolem"""
        images = []
        for relation_id in relation_ids:
            relation = base.relation(relation_id)
            args = tuple(self.image(a) for a in relation.args)
            if any(a is None for a in args):
                continue
            images.append(CandidateInference(relation.predicate, relation.predicate_synsets,
                                             args, relation.id))
        return images
