"""
本体数据模型

概念、关系、本体、案例与当事方立场都是构造后不可变的值对象；
每个 Ontology 在构造时都会经过 OntologyValidator 的全局校验。
"""

import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import (TYPE_CHECKING, Dict, FrozenSet, Iterable, List, Optional,
                    Sequence, Tuple)

from mediator.core.errors import MergeConflictError, OntologyError
from mediator.core.ontology_validator import validate_ontology

if TYPE_CHECKING:
    from mediator.core.knowledge_base import SynsetService


def natural_key(token: str):
    """自然排序键：数字段按整数比较，r2 排在 r10 之前"""
    parts = re.split(r"(\d+)", token)
    return tuple(int(part) if index % 2 else part for index, part in enumerate(parts))


@dataclass(frozen=True)
class Concept:
    """本体中的一个概念（图的顶点）"""
    id: str
    label: str
    synsets: FrozenSet[str] = frozenset()
    provenance: str = "original"


@dataclass(frozen=True)
class Relation:
    """带类型的关系实例（图的边），参数按位置引用概念或关系 id"""
    id: str
    predicate: str
    args: Tuple[str, ...]
    predicate_synsets: FrozenSet[str] = frozenset()
    provenance: str = "original"

    @property
    def arity(self) -> int:
        return len(self.args)


@dataclass(frozen=True)
class Ontology:
    """概念与关系的集合

    元素按 id 的自然顺序保存，因此相等的本体总有相同的表示。
    """
    concepts: Tuple[Concept, ...] = ()
    relations: Tuple[Relation, ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "concepts", tuple(sorted(self.concepts, key=lambda c: natural_key(c.id))))
        object.__setattr__(
            self, "relations", tuple(sorted(self.relations, key=lambda r: natural_key(r.id))))
        result = validate_ontology(self)
        if not result.is_valid:
            raise OntologyError("; ".join(result.issues))

    @classmethod
    def empty(cls) -> "Ontology":
        return cls()

    @cached_property
    def concepts_by_id(self) -> Dict[str, Concept]:
        return {c.id: c for c in self.concepts}

    @cached_property
    def relations_by_id(self) -> Dict[str, Relation]:
        return {r.id: r for r in self.relations}

    @cached_property
    def ids(self) -> FrozenSet[str]:
        return frozenset(self.concepts_by_id) | frozenset(self.relations_by_id)

    @cached_property
    def labels(self) -> FrozenSet[str]:
        return frozenset(c.label for c in self.concepts)

    def concept(self, concept_id: str) -> Concept:
        try:
            return self.concepts_by_id[concept_id]
        except KeyError:
            raise OntologyError(f"未知概念 '{concept_id}'") from None

    def relation(self, relation_id: str) -> Relation:
        try:
            return self.relations_by_id[relation_id]
        except KeyError:
            raise OntologyError(f"未知关系 '{relation_id}'") from None

    def is_concept(self, element_id: str) -> bool:
        return element_id in self.concepts_by_id

    def concepts_with_label(self, label: str) -> List[Concept]:
        return [c for c in self.concepts if c.label == label]

    def label_of(self, element_id: str) -> str:
        """概念返回标签，关系返回其 id"""
        concept = self.concepts_by_id.get(element_id)
        return concept.label if concept else element_id

    def add(self, concepts: Iterable[Concept] = (),
            relations: Iterable[Relation] = ()) -> "Ontology":
        """返回追加了新元素的本体，原本体不变"""
        return Ontology(self.concepts + tuple(concepts), self.relations + tuple(relations))

    def fresh_id(self, stem: str, taken: Iterable[str] = ()) -> str:
        """返回 stem、stem_2、stem_3…中第一个未被占用的 id"""
        used = set(self.ids) | set(taken)
        if stem not in used:
            return stem
        index = 2
        while f"{stem}_{index}" in used:
            index += 1
        return f"{stem}_{index}"

    def is_empty(self) -> bool:
        return not self.concepts and not self.relations

    def size(self) -> int:
        return len(self.concepts) + len(self.relations)

    def format_relation(self, relation: Relation) -> str:
        args = " ".join(self.label_of(arg) for arg in relation.args)
        return f"({relation.predicate} {args})"


@dataclass(frozen=True)
class Case:
    """一个争端案例：本体、当事方、目标、保留条件与解"""
    case_id: str
    domain_tag: str
    ontology: Ontology
    agents: Tuple[str, ...] = ()
    goals: Tuple[str, ...] = ()
    reservations: Tuple[str, ...] = ()
    solution: Tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("agents", "goals", "reservations", "solution"):
            ordered = tuple(sorted(set(getattr(self, name)), key=natural_key))
            object.__setattr__(self, name, ordered)
        if not self.case_id:
            raise OntologyError("案例缺少 id")
        for agent in self.agents:
            if agent not in self.ontology.concepts_by_id:
                raise OntologyError(f"案例 '{self.case_id}' 的当事方 '{agent}' 不是本体中的概念")
        for name in ("goals", "reservations", "solution"):
            for relation_id in getattr(self, name):
                if relation_id not in self.ontology.relations_by_id:
                    raise OntologyError(
                        f"案例 '{self.case_id}' 的 {name} 引用了未知关系 '{relation_id}'")

    @property
    def is_query(self) -> bool:
        return not self.solution

    def solution_relations(self) -> List[Relation]:
        return [self.ontology.relation(r) for r in self.solution]

    def with_solution(self, ontology: Ontology, solution: Sequence[str],
                      case_id: Optional[str] = None) -> "Case":
        """附加解后得到已解决案例"""
        return replace(self, ontology=ontology, solution=tuple(solution),
                       case_id=case_id or self.case_id)


@dataclass(frozen=True)
class Stance:
    """某一轮中一个当事方公开的立场"""
    agent: str
    ontology_fragment: Ontology
    goals: Tuple[str, ...] = ()
    reservations: Tuple[str, ...] = ()
    t: int = 0

    def __post_init__(self):
        if self.t < 0:
            raise OntologyError(f"立场轮次不能为负: {self.t}")
        for name in ("goals", "reservations"):
            for relation_id in getattr(self, name):
                if relation_id not in self.ontology_fragment.relations_by_id:
                    raise OntologyError(
                        f"当事方 '{self.agent}' 的 {name} 引用了未知关系 '{relation_id}'")

    def extend(self, delta: "Stance", t: Optional[int] = None) -> "Stance":
        """把公开的增量并入立场，按 id 合并"""
        known = self.ontology_fragment
        concepts = [c for c in delta.ontology_fragment.concepts if c.id not in known.concepts_by_id]
        relations = [r for r in delta.ontology_fragment.relations if r.id not in known.relations_by_id]
        return Stance(
            agent=self.agent,
            ontology_fragment=known.add(concepts, relations),
            goals=tuple(dict.fromkeys(self.goals + delta.goals)),
            reservations=tuple(dict.fromkeys(self.reservations + delta.reservations)),
            t=self.t + 1 if t is None else t,
        )


def concept_synsets(concept: Concept, syn: Optional["SynsetService"] = None) -> FrozenSet[str]:
    """概念的有效同义词集：显式标注并上知识库查得的"""
    if syn is None:
        return concept.synsets
    return concept.synsets | syn.synsets(concept.label)


def predicate_synsets(relation: Relation, syn: Optional["SynsetService"] = None) -> FrozenSet[str]:
    if syn is None:
        return relation.predicate_synsets
    return relation.predicate_synsets | syn.synsets(relation.predicate)


def predicates_match(predicate_a: str, synsets_a: FrozenSet[str],
                     predicate_b: str, synsets_b: FrozenSet[str]) -> bool:
    """谓词标签相同或同义词集相交即视为匹配"""
    return predicate_a == predicate_b or bool(synsets_a & synsets_b)


def relations_match(a: Relation, b: Relation, syn: Optional["SynsetService"] = None) -> bool:
    return predicates_match(a.predicate, predicate_synsets(a, syn),
                            b.predicate, predicate_synsets(b, syn))


def concepts_identical(a: Concept, b: Concept, syn: Optional["SynsetService"] = None) -> bool:
    """跨本体的概念同一性：标签相同或共享同义词集"""
    return a.label == b.label or bool(concept_synsets(a, syn) & concept_synsets(b, syn))


@dataclass
class _MergedConcept:
    id: str
    label: str
    synsets: set
    provenance: str
    source: str


@dataclass
class _MergedRelation:
    id: str
    predicate: str
    args: Tuple[str, ...]
    synsets: set
    provenance: str
    source: str


@dataclass
class StanceMerge:
    """合并结果及每个立场到合并本体的 id 映射"""
    ontology: Ontology
    id_maps: List[Dict[str, str]] = field(default_factory=list)


def merge_stance_views(stances: Sequence[Stance],
                       syn: Optional["SynsetService"] = None) -> StanceMerge:
    """构造中间立场本体，同时返回各立场的 id 映射"""
    if len(stances) < 2:
        raise OntologyError(f"合并至少需要两个立场，实际为 {len(stances)}")

    concepts: List[_MergedConcept] = []
    relations: List[_MergedRelation] = []
    used_ids: set = set()
    predicate_arity: Dict[str, Tuple[int, str]] = {}
    id_maps: List[Dict[str, str]] = []

    def claim(stem: str) -> str:
        candidate, index = stem, 2
        while candidate in used_ids:
            candidate = f"{stem}_{index}"
            index += 1
        used_ids.add(candidate)
        return candidate

    for stance in stances:
        id_map: Dict[str, str] = {}
        source = f"立场 {stance.agent}@t{stance.t}"
        for concept in stance.ontology_fragment.concepts:
            synsets = concept_synsets(concept, syn)
            target = _find_concept(concepts, concept, synsets, source)
            if target is None:
                target = _MergedConcept(claim(concept.id), concept.label, set(synsets),
                                        concept.provenance, source)
                concepts.append(target)
            else:
                target.synsets |= synsets
            id_map[concept.id] = target.id

        pending = list(stance.ontology_fragment.relations)
        while pending:
            ready = [r for r in pending if all(a in id_map for a in r.args)]
            if not ready:
                raise OntologyError(f"{source} 的关系参数无法解析")
            for relation in ready:
                pending.remove(relation)
                known = predicate_arity.get(relation.predicate)
                if known is not None and known[0] != relation.arity:
                    raise MergeConflictError(
                        f"谓词 '{relation.predicate}' 的元数冲突 ({known[0]} 与 {relation.arity})",
                        sources=[known[1], source])
                predicate_arity.setdefault(relation.predicate, (relation.arity, source))
                args = tuple(id_map[a] for a in relation.args)
                synsets = predicate_synsets(relation, syn)
                target = next(
                    (m for m in relations
                     if m.args == args and predicates_match(m.predicate, frozenset(m.synsets),
                                                            relation.predicate, synsets)),
                    None)
                if target is None:
                    target = _MergedRelation(claim(relation.id), relation.predicate, args,
                                             set(synsets), relation.provenance, source)
                    relations.append(target)
                else:
                    target.synsets |= synsets
                id_map[relation.id] = target.id
        id_maps.append(id_map)

    ontology = Ontology(
        tuple(Concept(c.id, c.label, frozenset(c.synsets), c.provenance) for c in concepts),
        tuple(Relation(r.id, r.predicate, r.args, frozenset(r.synsets), r.provenance)
              for r in relations),
    )
    return StanceMerge(ontology=ontology, id_maps=id_maps)


def _find_concept(concepts: List[_MergedConcept], concept: Concept,
                  synsets: FrozenSet[str], source: str) -> Optional[_MergedConcept]:
    for merged in concepts:
        if merged.label == concept.label:
            if merged.synsets and synsets and not (merged.synsets & synsets):
                raise MergeConflictError(
                    f"概念 '{concept.label}' 的同义词集互不相交",
                    sources=[merged.source, source])
            return merged
    for merged in concepts:
        if merged.synsets & synsets:
            return merged
    return None


def merge_stances(stances: Sequence[Stance],
                  syn: Optional["SynsetService"] = None) -> Ontology:
    """把所有当事方的立场合并为中间立场本体

    标签相同或共享同义词集的概念被统一（先出现的立场决定标签与 id）；
    谓词匹配且统一后参数一致的关系去重。
    """
    return merge_stance_views(stances, syn).ontology


def is_sub_ontology(a: Ontology, b: Ontology, syn: Optional["SynsetService"] = None) -> bool:
    """判断 a ⊑ b

    概念按“标签相同或共享同义词集”对应。同义词集只来自知识库且每个词至多属于一个同义词集时，
    这种对应是等价关系，⊑ 自反且传递；手工标注了与标签不一致的同义词集时传递性可能不成立。
    """
    for concept in a.concepts:
        if not any(concepts_identical(concept, other, syn) for other in b.concepts):
            return False
    for relation in a.relations:
        if not any(_relation_counterpart(a, relation, b, other, syn) for other in b.relations):
            return False
    return True


def _relation_counterpart(a: Ontology, ra: Relation, b: Ontology, rb: Relation, syn) -> bool:
    if ra.arity != rb.arity or not relations_match(ra, rb, syn):
        return False
    for arg_a, arg_b in zip(ra.args, rb.args):
        if a.is_concept(arg_a) and b.is_concept(arg_b):
            if not concepts_identical(a.concept(arg_a), b.concept(arg_b), syn):
                return False
        elif not a.is_concept(arg_a) and not b.is_concept(arg_b):
            if not _relation_counterpart(a, a.relation(arg_a), b, b.relation(arg_b), syn):
                return False
        else:
            return False
    return True
