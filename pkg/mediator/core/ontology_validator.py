"""本体质量检查器

检查本体是否满足全部不变式：标签格式、概念与关系 id 的联合唯一性、
关系参数的引用完整性，以及关系值参数构成的图无环。
"""

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, List

import networkx as nx

if TYPE_CHECKING:
    from mediator.core.ontology import Ontology


CONCEPT_PROVENANCE = ("original", "expansion", "postulated")
RELATION_PROVENANCE = ("original", "expansion", "inferred")


@dataclass
class ValidationResult:
    """验证结果"""
    is_valid: bool
    issues: List[str]
    suggestions: List[str]


class OntologyValidator:
    """本体不变式检查器"""

    # 概念标签：小写单词或 snake_case 短语
    LABEL_PATTERN = re.compile(r"^[a-z0-9][a-z0-9_\-]*$")
    # 谓词允许驼峰写法，例如 usedFor
    PREDICATE_PATTERN = re.compile(r"^[A-Za-z][A-Za-z0-9_\-]*$")
    # id 只是不含空白与括号的记号
    ID_PATTERN = re.compile(r"^[^\s()\";:?]+$")

    def validate(self, ontology: "Ontology") -> ValidationResult:
        """验证整个本体

        Args:
            ontology: 待检查的本体

        Returns:
            ValidationResult: 验证结果
        """
        issues: List[str] = []
        suggestions: List[str] = []

        self._check_concepts(ontology, issues, suggestions)
        self._check_unique_ids(ontology, issues)
        self._check_relations(ontology, issues, suggestions)
        if not issues:
            self._check_acyclic(ontology, issues)

        return ValidationResult(
            is_valid=not issues,
            issues=issues,
            suggestions=suggestions,
        )

    def _check_concepts(self, ontology, issues, suggestions):
        for concept in ontology.concepts:
            if not self.ID_PATTERN.match(concept.id or ""):
                issues.append(f"概念 id 非法: '{concept.id}'")
            if not concept.label:
                issues.append(f"概念 '{concept.id}' 的标签为空")
            elif not self.LABEL_PATTERN.match(concept.label):
                issues.append(f"概念标签格式非法: '{concept.label}'")
                suggestions.append(
                    f"建议将 '{concept.label}' 改写为小写 snake_case，例如 "
                    f"'{_to_snake(concept.label)}'"
                )
            if concept.provenance not in CONCEPT_PROVENANCE:
                issues.append(f"概念 '{concept.id}' 的来源取值非法: {concept.provenance}")

    def _check_unique_ids(self, ontology, issues):
        seen = set()
        for element_id in [c.id for c in ontology.concepts] + [r.id for r in ontology.relations]:
            if element_id in seen:
                issues.append(f"id 重复: '{element_id}'")
            seen.add(element_id)

    def _check_relations(self, ontology, issues, suggestions):
        known = {c.id for c in ontology.concepts} | {r.id for r in ontology.relations}
        for relation in ontology.relations:
            if not self.ID_PATTERN.match(relation.id or ""):
                issues.append(f"关系 id 非法: '{relation.id}'")
            if not self.PREDICATE_PATTERN.match(relation.predicate or ""):
                issues.append(f"关系 '{relation.id}' 的谓词非法: '{relation.predicate}'")
            if len(relation.args) < 1:
                issues.append(f"关系 '{relation.id}' 没有参数")
            for arg in relation.args:
                if arg not in known:
                    issues.append(f"关系 '{relation.id}' 引用了未知元素 '{arg}'")
                    suggestions.append(f"请先声明概念 '{arg}'")
            if relation.provenance not in RELATION_PROVENANCE:
                issues.append(f"关系 '{relation.id}' 的来源取值非法: {relation.provenance}")

    def _check_acyclic(self, ontology, issues):
        relation_ids = {r.id for r in ontology.relations}
        graph = nx.DiGraph()
        for relation in ontology.relations:
            for arg in relation.args:
                if arg in relation_ids:
                    graph.add_edge(relation.id, arg)
        try:
            cycle = nx.find_cycle(graph)
        except nx.NetworkXNoCycle:
            return
        path = " -> ".join(edge[0] for edge in cycle)
        issues.append(f"关系参数成环: {path} -> {cycle[0][0]}")


def _to_snake(label: str) -> str:
    snake = re.sub(r"(?<=[a-z0-9])([A-Z])", r"_\1", label.strip())
    snake = re.sub(r"[\s]+", "_", snake).lower()
    return re.sub(r"[^a-z0-9_\-]", "", snake) or "concept"


def validate_ontology(ontology: "Ontology") -> ValidationResult:
    """便捷函数：验证单个本体"""
    return OntologyValidator().validate(ontology)
