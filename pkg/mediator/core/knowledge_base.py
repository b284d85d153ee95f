"""
离线常识知识库

三个 TSV 文件构成一个知识库快照：

- edges.tsv      谓词<TAB>起点<TAB>终点<TAB>权重，# 开头为注释
- synsets.tsv    同义词集 id<TAB>词1,词2,...
- hypernyms.tsv  同义词集 id<TAB>上位同义词集 id
"""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

import networkx as nx

from mediator.core.errors import KnowledgeBaseError
from mediator.core.ontology import Case, Concept, Ontology, Relation, natural_key
from mediator.core.ontology_validator import OntologyValidator

logger = logging.getLogger(__name__)

EDGES_FILE = "edges.tsv"
SYNSETS_FILE = "synsets.tsv"
HYPERNYMS_FILE = "hypernyms.tsv"


@dataclass(frozen=True)
class Edge:
    """知识库中的一条二元边"""
    predicate: str
    source: str
    target: str
    weight: float = 1.0

    @property
    def key(self) -> Tuple[str, str, str]:
        return (self.predicate, self.source, self.target)


@dataclass(frozen=True)
class KnowledgeBase:
    """加载后不可变的常识知识库"""
    edges: Tuple[Edge, ...] = ()
    synsets: Dict[str, FrozenSet[str]] = field(default_factory=dict)
    hypernyms: Tuple[Tuple[str, str], ...] = ()

    @cached_property
    def adjacency(self) -> Dict[str, List[Edge]]:
        """标签 -> 关联边（忽略方向）"""
        index: Dict[str, List[Edge]] = {}
        for edge in self.edges:
            index.setdefault(edge.source, []).append(edge)
            if edge.target != edge.source:
                index.setdefault(edge.target, []).append(edge)
        return index

    @cached_property
    def synset_service(self) -> "SynsetService":
        return SynsetService(self)

    @cached_property
    def labels(self) -> FrozenSet[str]:
        return frozenset(self.adjacency)

    def incident_edges(self, label: str) -> List[Edge]:
        return self.adjacency.get(label, [])

    def neighbor_labels(self, label: str) -> List[str]:
        """与 label 相邻的全部标签，按字母序"""
        found = set()
        for edge in self.incident_edges(label):
            found.add(edge.target if edge.source == label else edge.source)
        return sorted(found)

    def degree(self, label: str) -> int:
        return len(self.incident_edges(label))

    def edges_between(self, label: str, others) -> List[Edge]:
        """label 与 others 中任一标签之间的边（含 label 的自环）"""
        others = set(others)
        result = []
        for edge in self.incident_edges(label):
            other = edge.target if edge.source == label else edge.source
            if other in others or other == label:
                result.append(edge)
        return sorted(result, key=lambda e: e.key)

    def without_labels(self, labels) -> "KnowledgeBase":
        """去掉与指定标签相关的边，得到新的知识库"""
        labels = set(labels)
        edges = tuple(e for e in self.edges if e.source not in labels and e.target not in labels)
        return KnowledgeBase(edges, dict(self.synsets), self.hypernyms)


class SynsetService:
    """词 -> 同义词集 id 的查询服务

    查询对大小写不敏感；未知词返回空集。
    """

    def __init__(self, kb: Optional[KnowledgeBase] = None):
        self._index: Dict[str, set] = {}
        self._graph = nx.DiGraph()
        self._members: Dict[str, FrozenSet[str]] = {}
        if kb is None:
            return
        for synset_id, words in kb.synsets.items():
            self._members[synset_id] = words
            for word in words:
                self._index.setdefault(word.lower(), set()).add(synset_id)
        self._graph.add_edges_from(kb.hypernyms)

    @classmethod
    def empty(cls) -> "SynsetService":
        return cls()

    def synsets(self, word: str) -> FrozenSet[str]:
        return frozenset(self._index.get(word.lower(), ()))

    def words(self, synset_id: str) -> FrozenSet[str]:
        return self._members.get(synset_id, frozenset())

    def overlap(self, a: str, b: str) -> bool:
        return a == b or bool(self.synsets(a) & self.synsets(b))

    def hypernyms(self, synset_id: str) -> List[str]:
        if synset_id not in self._graph:
            return []
        return sorted(self._graph.successors(synset_id))

    def hypernym_closure(self, word: str) -> FrozenSet[str]:
        """word 全部同义词集的所有祖先"""
        ancestors = set()
        for synset_id in self.synsets(word):
            if synset_id in self._graph:
                ancestors |= nx.descendants(self._graph, synset_id)
        return frozenset(ancestors)


def synset_overlap(syn: SynsetService, a: str, b: str) -> bool:
    """a 与 b 标签相同或共享同义词集"""
    return syn.overlap(a, b)


def _iter_rows(path: Path) -> Iterator[Tuple[int, List[str]]]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            for number, line in enumerate(f, start=1):
                stripped = line.rstrip("\n").rstrip("\r")
                if not stripped.strip() or stripped.lstrip().startswith("#"):
                    continue
                yield number, stripped.split("\t")
    except OSError as e:
        raise KnowledgeBaseError(f"无法读取文件: {e}", path=str(path)) from e
    except UnicodeDecodeError as e:
        raise KnowledgeBaseError(f"文件不是 UTF-8 编码: {e}", path=str(path)) from e


def _load_edges(path: Path) -> Tuple[Edge, ...]:
    edges: Dict[Tuple[str, str, str], Edge] = {}
    for number, fields in _iter_rows(path):
        if len(fields) != 4:
            raise KnowledgeBaseError(f"需要 4 个字段，实际为 {len(fields)}", path=str(path), line=number)
        predicate, source, target, weight_text = (f.strip() for f in fields)
        if not OntologyValidator.PREDICATE_PATTERN.match(predicate):
            raise KnowledgeBaseError(f"非法谓词 '{predicate}'", path=str(path), line=number)
        for label in (source, target):
            if not OntologyValidator.LABEL_PATTERN.fullmatch(label):
                raise KnowledgeBaseError(f"非法标签 '{label}'", path=str(path), line=number)
        try:
            weight = float(weight_text)
        except ValueError:
            raise KnowledgeBaseError(f"权重不是数值: '{weight_text}'", path=str(path), line=number) from None
        if weight < 0:
            raise KnowledgeBaseError(f"权重不能为负: {weight}", path=str(path), line=number)
        edge = Edge(predicate, source, target, weight)
        previous = edges.get(edge.key)
        if previous is None or previous.weight < weight:
            edges[edge.key] = edge
    return tuple(sorted(edges.values(), key=lambda e: e.key))


def _load_synsets(path: Path) -> Dict[str, FrozenSet[str]]:
    synsets: Dict[str, FrozenSet[str]] = {}
    for number, fields in _iter_rows(path):
        if len(fields) != 2:
            raise KnowledgeBaseError(f"需要 2 个字段，实际为 {len(fields)}", path=str(path), line=number)
        synset_id = fields[0].strip()
        words = frozenset(w.strip() for w in fields[1].split(",") if w.strip())
        if not synset_id or not words:
            raise KnowledgeBaseError("同义词集 id 或词表为空", path=str(path), line=number)
        if synset_id in synsets:
            raise KnowledgeBaseError(f"同义词集 '{synset_id}' 重复", path=str(path), line=number)
        synsets[synset_id] = words
    return synsets


def _load_hypernyms(path: Path) -> Tuple[Tuple[str, str], ...]:
    pairs = set()
    for number, fields in _iter_rows(path):
        if len(fields) != 2 or not all(f.strip() for f in fields):
            raise KnowledgeBaseError("需要 同义词集<TAB>上位词 两个字段", path=str(path), line=number)
        pairs.add((fields[0].strip(), fields[1].strip()))
    graph = nx.DiGraph()
    graph.add_edges_from(pairs)
    try:
        cycle = nx.find_cycle(graph)
    except nx.NetworkXNoCycle:
        return tuple(sorted(pairs))
    members = [edge[0] for edge in cycle]
    raise KnowledgeBaseError(f"上位词关系成环: {' -> '.join(members + members[:1])}",
                             path=str(path), cycle=members)


def load_kb(edge_path, synset_path, hypernym_path) -> KnowledgeBase:
    """加载并校验知识库快照，重复边保留最大权重"""
    kb = KnowledgeBase(
        edges=_load_edges(Path(edge_path)),
        synsets=_load_synsets(Path(synset_path)),
        hypernyms=_load_hypernyms(Path(hypernym_path)),
    )
    logger.info(f"知识库已加载: {len(kb.edges)} 条边, {len(kb.synsets)} 个同义词集, "
                f"{len(kb.hypernyms)} 条上位关系")
    return kb


def load_kb_dir(directory) -> KnowledgeBase:
    """从目录中按约定文件名加载知识库"""
    directory = Path(directory)
    if not directory.is_dir():
        raise KnowledgeBaseError("知识库目录不存在", path=str(directory))
    return load_kb(directory / EDGES_FILE, directory / SYNSETS_FILE, directory / HYPERNYMS_FILE)


def normalize_label(text: str) -> str:
    """把用户输入的词规范成概念标签：去首尾空白、转小写、内部空白换成下划线"""
    return "_".join(text.strip().lower().split())


def neighbors(kb: KnowledgeBase, concept_label: str) -> Ontology:
    """查询概念及其全部相邻概念构成的小本体，保留知识库边的方向

    标签先规范化；不合法时返回空本体，知识库中没有的标签只含查询概念本身。
    """
    syn = kb.synset_service
    label = normalize_label(concept_label)
    if not OntologyValidator.LABEL_PATTERN.fullmatch(label):
        logger.debug(f"不合法的概念标签: {concept_label!r}")
        return Ontology()
    incident = kb.incident_edges(label)
    concepts = {label: Concept(label, label, syn.synsets(label))}
    relations = []
    for index, edge in enumerate(sorted(incident, key=lambda e: e.key), start=1):
        for name in (edge.source, edge.target):
            if name not in concepts:
                concepts[name] = Concept(name, name, syn.synsets(name), "expansion")
        relations.append(Relation(f"e{index}", edge.predicate, (edge.source, edge.target),
                                  syn.synsets(edge.predicate), "expansion"))
    return Ontology(tuple(concepts.values()), tuple(relations))


def tag_synsets(ontology: Ontology, syn: SynsetService) -> Ontology:
    """为没有同义词集标注的概念与关系补上知识库中的同义词集"""
    concepts = tuple(
        c if c.synsets else Concept(c.id, c.label, syn.synsets(c.label), c.provenance)
        for c in ontology.concepts
    )
    relations = tuple(
        r if r.predicate_synsets else Relation(r.id, r.predicate, r.args,
                                               syn.synsets(r.predicate), r.provenance)
        for r in ontology.relations
    )
    return Ontology(concepts, relations)


def tag_case(case: Case, syn: SynsetService) -> Case:
    """案例本体的同义词集补全，其余字段不变"""
    return replace(case, ontology=tag_synsets(case.ontology, syn))


def describe_label(
kb: KnowledgeBase, label: str) -> Dict[str, object]:
    """汇总一个词在知识库中的信息，供 kb lookup 使用"""
    syn = kb.synset_service
    label = normalize_label(label)
    synset_ids = sorted(syn.synsets(label), key=natural_key)
    return {
        "label": label,
        "synsets": [(sid, sorted(syn.words(sid))) for sid in synset_ids],
        "hypernyms": sorted(syn.hypernym_closure(label)),
        "degree": kb.degree(label),
        "neighbors": kb.neighbor_labels(label),
    }
