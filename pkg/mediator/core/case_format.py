"""
案例文件的解析与规范化序列化

文件格式是 LISP 风格的 s-表达式：

    (case :id orange-dispute :domain household
      (concepts sister1 sister2 orange)
      (relations
        (desires sister1 orange :id r1))
      (agents sister1 sister2)
      (goals r1)
      (reservations)
      (solution (gets sister1 orange)))

目标、保留条件和解里可以直接写关系字面量，解析时会并入本体。
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from mediator.core.errors import CaseFormatError, OntologyError
from mediator.core.ontology import Case, Concept, Ontology, Relation, natural_key
from mediator.core.ontology_validator import OntologyValidator
from mediator.core.sexpr import Atom, Node, SList, quote_token, read_one

CASE_SECTIONS = ("concepts", "relations", "agents", "goals", "reservations", "solution")


@dataclass(frozen=True)
class CaseDocument:
    """案例文件：原始文本、解析结果与来源路径"""
    raw: str
    case: Case
    path: Optional[Path] = None


@dataclass
class _RelationSpec:
    predicate: str
    args: Tuple[str, ...]
    explicit_id: Optional[str]
    synsets: frozenset
    provenance: str
    node: SList


class OntologyBuilder:
    """从 concepts/relations 段逐步构造本体

    自动编号的关系 id 为 r1、r2…，按出现顺序分配并跳过已占用的 id。
    """

    def __init__(self, taken: Iterable[str] = (), known_concepts: Iterable[str] = ()):
        self.concepts: Dict[str, Concept] = {}
        self.relations: Dict[str, Relation] = {}
        self.taken: Set[str] = set(taken)
        # 由外部上下文提供、可作为参数引用但不属于本片段的概念
        self.known_concepts: Set[str] = set(known_concepts)
        self._counter = 0

    # -- concepts ---------------------------------------------------------
    def add_concept_entries(self, entries: Sequence[Node]):
        for entry in entries:
            self.add_concept(*_parse_concept(entry))

    def add_concept(self, concept: Concept, node: Node):
        if concept.id in self.concepts or concept.id in self.taken:
            raise CaseFormatError(f"id 重复: '{concept.id}'", line=node.line, column=node.column)
        self.concepts[concept.id] = concept
        self.taken.add(concept.id)

    def ensure_concept(self, concept_id: str):
        """确保概念存在（用于自动补充当事方概念）"""
        if concept_id not in self.concepts and concept_id not in self.known_concepts:
            self.concepts[concept_id] = Concept(concept_id, concept_id)
            self.taken.add(concept_id)

    # -- relations --------------------------------------------------------
    def add_relation_entries(self, entries: Sequence[Node]) -> List[str]:
        specs = [self._parse_relation(entry) for entry in entries]
        for spec in specs:
            if spec.explicit_id is not None:
                self._claim_explicit(spec)
        return [self._commit(spec) for spec in specs]

    def resolve_reference(self, node: Node) -> str:
        """目标/保留/解中的条目：关系 id 或关系字面量"""
        if isinstance(node, Atom):
            if node.value not in self.relations:
                raise CaseFormatError(f"未解析的关系引用 '{node.value}'",
                                      line=node.line, column=node.column)
            return node.value
        spec = self._parse_relation(node)
        for relation in self.relations.values():
            if relation.predicate == spec.predicate and relation.args == spec.args:
                if spec.explicit_id is None or spec.explicit_id == relation.id:
                    return relation.id
        if spec.explicit_id is not None:
            self._claim_explicit(spec)
        return self._commit(spec)

    def _claim_explicit(self, spec: _RelationSpec):
        if spec.explicit_id in self.taken:
            raise CaseFormatError(f"id 重复: '{spec.explicit_id}'",
                                  line=spec.node.line, column=spec.node.column)
        self.taken.add(spec.explicit_id)

    def _commit(self, spec: _RelationSpec) -> str:
        relation_id = spec.explicit_id or self._next_id()
        self.relations[relation_id] = Relation(relation_id, spec.predicate, spec.args,
                                               spec.synsets, spec.provenance)
        return relation_id

    def _next_id(self) -> str:
        while True:
            self._counter += 1
            candidate = f"r{self._counter}"
            if candidate not in self.taken:
                self.taken.add(candidate)
                return candidate

    def _parse_relation(self, node: Node) -> _RelationSpec:
        if not isinstance(node, SList) or not node.items or not isinstance(node.items[0], Atom):
            raise CaseFormatError("关系必须写成 (谓词 参数 参数 ...)", line=node.line, column=node.column)
        predicate_atom = node.items[0]
        if predicate_atom.quoted or not OntologyValidator.PREDICATE_PATTERN.match(predicate_atom.value):
            raise CaseFormatError(f"非法谓词 '{predicate_atom.value}'",
                                  line=predicate_atom.line, column=predicate_atom.column)
        args: List[str] = []
        rest = list(node.items[1:])
        while rest and not (isinstance(rest[0], Atom) and rest[0].is_keyword):
            arg = rest.pop(0)
            if not isinstance(arg, Atom):
                raise CaseFormatError("关系参数必须是记号", line=arg.line, column=arg.column)
            if arg.value in self.relations:
                raise CaseFormatError(f"暂不支持关系值参数 '{arg.value}'",
                                      line=arg.line, column=arg.column)
            if arg.value not in self.concepts and arg.value not in self.known_concepts:
                raise CaseFormatError(f"未声明的概念 '{arg.value}'", line=arg.line, column=arg.column)
            args.append(arg.value)
        if len(args) < 2:
            raise CaseFormatError(f"关系 '{predicate_atom.value}' 至少需要两个参数",
                                  line=node.line, column=node.column)
        options = _parse_options(rest, ("id", "synsets", "provenance"))
        return _RelationSpec(
            predicate=predicate_atom.value,
            args=tuple(args),
            explicit_id=_atom_value(options.get("id")),
            synsets=_synset_set(options.get("synsets")),
            provenance=_atom_value(options.get("provenance")) or "original",
            node=node,
        )

    def build(self, node: Optional[Node] = None) -> Ontology:
        try:
            return Ontology(tuple(self.concepts.values()), tuple(self.relations.values()))
        except OntologyError as e:
            line = node.line if node is not None else None
            column = node.column if node is not None else None
            raise CaseFormatError(str(e), line=line, column=column) from e


def _parse_concept(entry: Node):
    if isinstance(entry, Atom):
        _check_label(entry.value, entry)
        return Concept(entry.value, entry.value), entry
    if not entry.items or not isinstance(entry.items[0], Atom):
        raise CaseFormatError("概念条目必须以 id 开头", line=entry.line, column=entry.column)
    concept_id = entry.items[0].value
    options = _parse_options(list(entry.items[1:]), ("label", "synsets", "provenance"))
    label = _atom_value(options.get("label")) or concept_id
    _check_label(label, entry)
    provenance = _atom_value(options.get("provenance")) or "original"
    return Concept(concept_id, label, _synset_set(options.get("synsets")), provenance), entry


def _check_label(label: str, node: Node):
    if not OntologyValidator.LABEL_PATTERN.match(label):
        raise CaseFormatError(f"非法的概念标签 '{label}'", line=node.line, column=node.column)


def _parse_options(items: List[Node], allowed: Sequence[str]) -> Dict[str, Node]:
    options: Dict[str, Node] = {}
    index = 0
    while index < len(items):
        key = items[index]
        if not isinstance(key, Atom) or not key.is_keyword:
            raise CaseFormatError("此处需要 :关键字", line=key.line, column=key.column)
        name = key.value[1:]
        if name not in allowed:
            raise CaseFormatError(f"未知关键字 ':{name}'", line=key.line, column=key.column)
        if name in options:
            raise CaseFormatError(f"关键字 ':{name}' 重复", line=key.line, column=key.column)
        if index + 1 >= len(items):
            raise CaseFormatError(f"关键字 ':{name}' 缺少取值", line=key.line, column=key.column)
        options[name] = items[index + 1]
        index += 2
    return options


def _atom_value(node: Optional[Node]) -> Optional[str]:
    if node is None:
        return None
    if not isinstance(node, Atom):
        raise CaseFormatError("此处需要记号", line=node.line, column=node.column)
    return node.value


def _synset_set(node: Optional[Node]) -> frozenset:
    if node is None:
        return frozenset()
    if not isinstance(node, SList) or not all(isinstance(item, Atom) for item in node.items):
        raise CaseFormatError(":synsets 需要记号列表", line=node.line, column=node.column)
    return frozenset(item.value for item in node.items)


def _sections(root: SList, allowed: Sequence[str], start: int) -> Dict[str, SList]:
    sections: Dict[str, SList] = {}
    for node in root.items[start:]:
        if not isinstance(node, SList) or node.head not in allowed:
            name = node.head if isinstance(node, SList) else node.value
            raise CaseFormatError(f"未知的段: '{name}'", line=node.line, column=node.column)
        if node.head in sections:
            raise CaseFormatError(f"段 '{node.head}' 重复", line=node.line, column=node.column)
        sections[node.head] = node
    return sections


def _header(root: SList, head: str, keys: Sequence[str]) -> Tuple[Dict[str, Node], int]:
    """读取 (head :key value ...) 的关键字部分，返回取值与段起始下标"""
    if root.head != head:
        raise CaseFormatError(f"需要 ({head} ...) 形式", line=root.line, column=root.column)
    index = 1
    header_items = []
    while index < len(root.items) and isinstance(root.items[index], Atom):
        header_items.append(root.items[index])
        index += 1
    return _parse_options(header_items, keys), index


def parse_case(text: str) -> Case:
    """解析一个 .case 文本"""
    root = read_one(text, "案例")
    header, start = _header(root, "case", ("id", "domain"))
    if "id" not in header:
        raise CaseFormatError("案例缺少 :id", line=root.line, column=root.column)
    sections = _sections(root, CASE_SECTIONS, start)

    builder = OntologyBuilder()
    if "concepts" in sections:
        builder.add_concept_entries(sections["concepts"].items[1:])
    if "relations" in sections:
        builder.add_relation_entries(sections["relations"].items[1:])

    agents = []
    for node in sections["agents"].items[1:] if "agents" in sections else ():
        if not isinstance(node, Atom) or node.value not in builder.concepts:
            raise CaseFormatError(f"未解析的当事方 '{node}'", line=node.line, column=node.column)
        agents.append(node.value)

    refs: Dict[str, List[str]] = {}
    for name in ("goals", "reservations", "solution"):
        entries = sections[name].items[1:] if name in sections else ()
        refs[name] = [builder.resolve_reference(node) for node in entries]

    ontology = builder.build(root)
    try:
        return Case(
            case_id=_atom_value(header["id"]),
            domain_tag=_atom_value(header.get("domain")) or "",
            ontology=ontology,
            agents=tuple(agents),
            goals=tuple(refs["goals"]),
            reservations=tuple(refs["reservations"]),
            solution=tuple(refs["solution"]),
        )
    except OntologyError as e:
        raise CaseFormatError(str(e), line=root.line, column=root.column) from e


def parse_ontology(text: str) -> Ontology:
    """解析 (ontology (concepts ...) (relations ...)) 文本"""
    root = read_one(text, "本体")
    _, start = _header(root, "ontology", ())
    sections = _sections(root, ("concepts", "relations"), start)
    builder = OntologyBuilder()
    if "concepts" in sections:
        builder.add_concept_entries(sections["concepts"].items[1:])
    if "relations" in sections:
        builder.add_relation_entries(sections["relations"].items[1:])
    return builder.build(root)


# -- serialization ------------------------------------------------------------

def _format_concept(concept: Concept) -> str:
    if concept.label == concept.id and not concept.synsets and concept.provenance == "original":
        return quote_token(concept.id)
    parts = [quote_token(concept.id)]
    if concept.label != concept.id:
        parts.append(f":label {concept.label}")
    if concept.synsets:
        parts.append(f":synsets ({' '.join(sorted(concept.synsets))})")
    if concept.provenance != "original":
        parts.append(f":provenance {concept.provenance}")
    return f"({' '.join(parts)})"


def format_relation_entry(relation: Relation) -> str:
    parts = [relation.predicate, *relation.args, f":id {relation.id}"]
    if relation.predicate_synsets:
        parts.append(f":synsets ({' '.join(sorted(relation.predicate_synsets))})")
    if relation.provenance != "original":
        parts.append(f":provenance {relation.provenance}")
    return f"({' '.join(parts)})"


def _ontology_lines(ontology: Ontology) -> List[str]:
    concepts = " ".join(_format_concept(c) for c in ontology.concepts)
    lines = [f"  (concepts {concepts})" if concepts else "  (concepts)"]
    if not ontology.relations:
        lines.append("  (relations)")
    else:
        lines.append("  (relations")
        lines.extend(f"    {format_relation_entry(r)}" for r in ontology.relations)
        lines[-1] += ")"
    return lines


def _refuse_postulated(ontology: Ontology):
    postulated = [c.id for c in ontology.concepts if c.provenance == "postulated"]
    if postulated:
        raise OntologyError(f"含有未落地的假设概念，不能持久化: {', '.join(postulated)}")


def _token_section(name: str, tokens: Sequence[str]) -> str:
    body = " ".join(quote_token(t) for t in sorted(tokens, key=natural_key))
    return f"  ({name} {body})" if body else f"  ({name})"


def serialize_case(case: Case) -> str:
    """规范化序列化：段顺序固定、条目按 id 排序、每行一个关系"""
    _refuse_postulated(case.ontology)
    lines = [f"(case :id {quote_token(case.case_id)} :domain {quote_token(case.domain_tag)}"]
    lines.extend(_ontology_lines(case.ontology))
    lines.append(_token_section("agents", case.agents))
    lines.append(_token_section("goals", case.goals))
    lines.append(_token_section("reservations", case.reservations))
    lines.append(_token_section("solution", case.solution) + ")")
    return "\n".join(lines) + "\n"


def serialize_ontology(ontology: Ontology) -> str:
    lines = ["(ontology"]
    lines.extend(_ontology_lines(ontology))
    lines[-1] += ")"
    return "\n".join(lines) + "\n"


# -- files --------------------------------------------------------------------

def _read_text(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise CaseFormatError(f"无法读取文件: {e}", path=str(path)) from e


def load_case_document(path) -> CaseDocument:
    path = Path(path)
    raw = _read_text(path)
    try:
        case = parse_case(raw)
    except CaseFormatError as e:
        raise CaseFormatError(e.message, line=e.line, column=e.column, path=str(path)) from e
    return CaseDocument(raw=raw, case=case, path=path)


def load_case(path) -> Case:
    return load_case_document(path).case


def load_ontology(path) -> Ontology:
    path = Path(path)
    raw = _read_text(path)
    try:
        return parse_ontology(raw)
    except CaseFormatError as e:
        raise CaseFormatError(e.message, line=e.line, column=e.column, path=str(path)) from e
