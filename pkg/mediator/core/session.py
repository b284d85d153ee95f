"""
调解会话

每一轮：合并各方立场得到中间立场本体并组装查询案例，检索先例、改编出方案，
交给各方的脚本策略表态；全体接受则保留新案例，否则各方按计划公开新的立场增量，进入下一轮。
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from mediator.core.case_format import OntologyBuilder
from mediator.core.casebase import CaseBase
from mediator.core.cbr import AdaptationResult, CbrConfig, CbrEngine
from mediator.core.errors import CaseFormatError, NoPrecedentError, OntologyError
from mediator.core.knowledge_base import KnowledgeBase, SynsetService
from mediator.core.ontology import (Case, Ontology, Relation, Stance, merge_stance_views,
                                    predicate_synsets, predicates_match)
from mediator.core.sexpr import Atom, SList, read_one
from mediator.core.sme import DEFAULT_SME_CONFIG, SMEConfig

logger = logging.getLogger(__name__)

ACCEPT = "accept"
REJECT = "reject"
RULES = ("goals", "always_accept", "always_reject")
OUTCOMES = ("accepted", "no_precedent", "round_limit")


@dataclass(frozen=True)
class PartyPolicy:
    """当事方的脚本策略

    reveal 把轮次 t 映射到该方在第 t 轮拒绝之后公开的立场增量。
    """
    agent: str
    rule: str = "goals"
    reveal: Tuple[Tuple[int, Stance], ...] = ()

    def __post_init__(self):
        if self.rule not in RULES:
            raise OntologyError(f"未知的策略规则 '{self.rule}'，可选: {', '.join(RULES)}")
        rounds = [t for t, _ in self.reveal]
        if any(b <= a for a, b in zip(rounds, rounds[1:])):
            raise OntologyError(f"当事方 '{self.agent}' 的公开计划轮次必须严格递增: {rounds}")
        if any(t < 0 for t in rounds):
            raise OntologyError(f"当事方 '{self.agent}' 的公开计划轮次不能为负")

    def delta_for(self, t: int) -> Optional[Stance]:
        for round_index, delta in self.reveal:
            if round_index == t:
                return delta
        return None


@dataclass(frozen=True)
class Proposal:
    """提交给各方的方案 S^t"""
    relations: Tuple[Relation, ...]
    ontology: Ontology
    case_id: Optional[str] = None

    def render(self) -> List[str]:
        return [self.ontology.format_relation(r) for r in self.relations]


@dataclass(frozen=True)
class SessionRound:
    """一轮调解的记录"""
    t: int
    case_id: Optional[str]
    proposal: Optional[Proposal]
    covered: bool
    verdicts: Tuple[Tuple[str, str], ...]
    deltas: Tuple[Tuple[str, Stance], ...]
    ontology: Ontology


@dataclass(frozen=True)
class SessionTranscript:
    """整个会话的记录"""
    session_id: str
    rounds: Tuple[SessionRound, ...]
    outcome: str
    retained: bool = False
    solved_case: Optional[Case] = None


@dataclass(frozen=True)
class SessionSpec:
    """会话文件的解析结果"""
    session_id: str
    domain_tag: str
    stances: Tuple[Stance, ...]
    policies: Dict[str, PartyPolicy] = field(default_factory=dict)


# -- accept rule ---------------------------------------------------------------

def _arg_labels(ontology: Ontology, relation: Relation) -> Tuple[str, ...]:
    return tuple(ontology.label_of(a) for a in relation.args)


def _counterpart(relation: Relation, owner: Ontology, proposal: Proposal,
                 syn: Optional[SynsetService]) -> bool:
    labels = _arg_labels(owner, relation)
    synsets = predicate_synsets(relation, syn)
    for candidate in proposal.relations:
        if candidate.arity != relation.arity:
            continue
        if not predicates_match(relation.predicate, synsets, candidate.predicate,
                                predicate_synsets(candidate, syn)):
            continue
        if _arg_labels(proposal.ontology, candidate) == labels:
            return True
    return False


def goal_satisfied(goal: Relation, owner: Ontology, proposal: Proposal,
                   syn: Optional[SynsetService] = None) -> bool:
    """方案是否满足目标 (p 主体 对象)

    方案中有同义且参数相同的关系，或者方案分给主体的某个概念 x 就是对象、
    或在方案本体、方案关系及 owner 中与对象直接相连，都算满足。
    """
    if _counterpart(goal, owner, proposal, syn):
        return True
    labels = _arg_labels(owner, goal)
    subject, target = labels[0], labels[-1]
    links = set()
    for ontology, relations in ((proposal.ontology, proposal.relations),
                                (proposal.ontology, proposal.ontology.relations),
                                (owner, owner.relations)):
        for relation in relations:
            names = _arg_labels(ontology, relation)
            for i, a in enumerate(names):
                for b in names[i + 1:]:
                    links.add(frozenset((a, b)))
    for relation in proposal.relations:
        names = _arg_labels(proposal.ontology, relation)
        if names[0] != subject:
            continue
        for given in names[1:]:
            if given == target or frozenset((given, target)) in links:
                return True
    return False


def reservation_violated(reservation: Relation, owner: Ontology, proposal: Proposal,
                         syn: Optional[SynsetService] = None) -> bool:
    return _counterpart(reservation, owner, proposal, syn)


def policy_respond(policy: PartyPolicy, proposal: Proposal, current_stance: Stance,
                   syn: Optional[SynsetService] = None,
                   t: Optional[int] = None) -> Tuple[str, Optional[Stance]]:
    """按策略对方案表态；拒绝时给出本轮计划公开的增量

    只依据 current_stance 中已公开的目标与保留条件判断，尚未公开的增量不参与。
    """
    round_index = current_stance.t if t is None else t
    if policy.rule == "always_accept":
        verdict = ACCEPT
    elif policy.rule == "always_reject":
        verdict = REJECT
    else:
        owner = current_stance.ontology_fragment
        goals_ok = all(goal_satisfied(owner.relation(g), owner, proposal, syn)
                       for g in current_stance.goals)
        reservations_ok = not any(reservation_violated(owner.relation(r), owner, proposal, syn)
                                  for r in current_stance.reservations)
        verdict = ACCEPT if goals_ok and reservations_ok else REJECT
    if verdict == ACCEPT:
        return ACCEPT, None
    return REJECT, policy.delta_for(round_index)


# -- session loop ----------------------------------------------------------------

def build_query(stances: Sequence[Stance], case_id: str, domain_tag: str = "",
                syn: Optional[SynsetService] = None) -> Case:
    """合并立场并组装查询案例"""
    merged = merge_stance_views(stances, syn)
    agents, goals, reservations = [], [], []
    for stance, id_map in zip(stances, merged.id_maps):
        if stance.agent in id_map:
            agents.append(id_map[stance.agent])
        goals.extend(id_map[g] for g in stance.goals)
        reservations.extend(id_map[r] for r in stance.reservations)
    return Case(case_id=case_id, domain_tag=domain_tag, ontology=merged.ontology,
                agents=tuple(agents), goals=tuple(goals), reservations=tuple(reservations))


def _covers(query: Case, adaptation: AdaptationResult, proposal: Proposal,
            syn: Optional[SynsetService]) -> bool:
    if adaptation.partial or not proposal.relations:
        return False
    owner = query.ontology
    return all(goal_satisfied(owner.relation(g), owner, proposal, syn) for g in query.goals)


def run_session(stances: Sequence[Stance], casebase: CaseBase, kb: KnowledgeBase,
                cfg: CbrConfig, policies: Dict[str, PartyPolicy], max_rounds: int,
                session_id: str = "session", domain_tag: str = "",
                sme_cfg: SMEConfig = DEFAULT_SME_CONFIG) -> SessionTranscript:
    """运行调解会话直到全体接受、找不到先例或轮数用尽"""
    if max_rounds < 1:
        raise OntologyError(f"max_rounds 必须 ≥ 1，实际为 {max_rounds}")
    missing = [s.agent for s in stances if s.agent not in policies]
    if missing:
        raise OntologyError(f"缺少当事方策略: {', '.join(missing)}")

    engine = CbrEngine(kb, cfg, sme_cfg)
    syn = engine.syn
    current = [replace(s, t=0) for s in stances]
    rounds: List[SessionRound] = []

    for t in range(max_rounds):
        query = build_query(current, session_id, domain_tag, syn)
        logger.info(f"第 {t} 轮: 中间立场本体含 {len(query.ontology.concepts)} 个概念、"
                    f"{len(query.ontology.relations)} 条关系")
        try:
            retrieval = engine.retrieve(query, casebase)
        except NoPrecedentError as e:
            logger.warning(f"第 {t} 轮没有可用先例: {e}")
            rounds.append(SessionRound(t, None, None, False, (), (), query.ontology))
            return SessionTranscript(session_id, tuple(rounds), "no_precedent")

        chosen = None
        for case_id in retrieval.ranking:
            star = casebase.get(case_id)
            adaptation = engine.adapt(query, star, retrieval.candidate(case_id))
            proposal = Proposal(adaptation.grounded_solution, adaptation.ontology, case_id)
            covered = _covers(query, adaptation, proposal, syn)
            if chosen is None or covered:
                chosen = (star, adaptation, proposal, covered)
            if covered:
                break
            logger.info(f"先例 {case_id} 的方案未覆盖全部目标，尝试下一个候选")
        star, adaptation, proposal, covered = chosen

        verdicts, deltas = [], []
        for stance in current:
            verdict, delta = policy_respond(policies[stance.agent], proposal, stance, syn, t)
            verdicts.append((stance.agent, verdict))
            if delta is not None:
                deltas.append((stance.agent, delta))

        if all(v == ACCEPT for _, v in verdicts):
            rounds.append(SessionRound(t, star.case_id, proposal, covered, tuple(verdicts), (),
                                       query.ontology))
            solved, retained = None, False
            if proposal.relations:
                solved = query.with_solution(adaptation.ontology,
                                             [r.id for r in proposal.relations])
                retained = engine.retain(casebase, solved, star)
            logger.info(f"第 {t} 轮方案被全体接受，保留: {retained}")
            return SessionTranscript(session_id, tuple(rounds), "accepted", retained, solved)

        rounds.append(SessionRound(t, star.case_id, proposal, covered, tuple(verdicts),
                                   tuple(deltas), query.ontology))
        disclosed = dict(deltas)
        current = [s.extend(disclosed[s.agent], t=t + 1) if s.agent in disclosed
                   else replace(s, t=t + 1) for s in current]

    return SessionTranscript(session_id, tuple(rounds), "round_limit")


# -- session file ------------------------------------------------------------------

def _fragment_sections(node: SList, start: int) -> Dict[str, SList]:
    sections: Dict[str, SList] = {}
    for item in node.items[start:]:
        if not isinstance(item, SList) or item.head not in ("concepts", "relations", "goals", "reservations"):
            raise CaseFormatError("立场中只允许 concepts/relations/goals/reservations 段",
                                  line=item.line, column=item.column)
        if item.head in sections:
            raise CaseFormatError(f"段 '{item.head}' 重复", line=item.line, column=item.column)
        sections[item.head] = item
    return sections


def _build_fragment(builder: OntologyBuilder, sections: Dict[str, SList],
                    agent: Optional[str] = None):
    if "concepts" in sections:
        builder.add_concept_entries(sections["concepts"].items[1:])
    if agent is not None:
        builder.ensure_concept(agent)
    if "relations" in sections:
        builder.add_relation_entries(sections["relations"].items[1:])
    goals = [builder.resolve_reference(n) for n in sections["goals"].items[1:]] if "goals" in sections else []
    reservations = ([builder.resolve_reference(n) for n in sections["reservations"].items[1:]]
                    if "reservations" in sections else [])
    return goals, reservations


def parse_session(text: str) -> SessionSpec:
    """解析会话文件

        (session :id ID :domain TAG
          (stance AGENT (concepts ...) (relations ...) (goals ...) (reservations ...))
          (reveal AGENT ROUND (concepts ...) (relations ...) (goals ...) (reservations ...))
          (policy AGENT goals|always_accept|always_reject))
    """
    root = read_one(text, "会话")
    if root.head != "session":
        raise CaseFormatError("需要 (session ...) 形式", line=root.line, column=root.column)
    header: Dict[str, str] = {}
    index = 1
    while index + 1 < len(root.items) and isinstance(root.items[index], Atom) and root.items[index].is_keyword:
        key, value = root.items[index], root.items[index + 1]
        if key.value not in (":id", ":domain") or not isinstance(value, Atom):
            raise CaseFormatError(f"非法的会话头 '{key.value}'", line=key.line, column=key.column)
        header[key.value[1:]] = value.value
        index += 2

    stances: Dict[str, Stance] = {}
    known: Dict[str, Ontology] = {}
    reveals: Dict[str, List[Tuple[int, Stance]]] = {}
    rules: Dict[str, str] = {}
    for node in root.items[index:]:
        if not isinstance(node, SList) or node.head not in ("stance", "reveal", "policy"):
            raise CaseFormatError("会话中只允许 stance/reveal/policy", line=node.line, column=node.column)
        if len(node.items) < 2 or not isinstance(node.items[1], Atom):
            raise CaseFormatError(f"{node.head} 需要当事方名称", line=node.line, column=node.column)
        agent = node.items[1].value

        if node.head == "stance":
            if agent in stances:
                raise CaseFormatError(f"当事方 '{agent}' 的立场重复", line=node.line, column=node.column)
            builder = OntologyBuilder()
            goals, reservations = _build_fragment(builder, _fragment_sections(node, 2), agent)
            fragment = builder.build(node)
            stances[agent] = Stance(agent, fragment, tuple(goals), tuple(reservations), 0)
            known[agent] = fragment
            reveals[agent] = []

        elif node.head == "reveal":
            if agent not in stances:
                raise CaseFormatError(f"当事方 '{agent}' 的 reveal 必须在其 stance 之后",
                                      line=node.line, column=node.column)
            if len(node.items) < 3 or not isinstance(node.items[2], Atom) or not node.items[2].value.isdigit():
                raise CaseFormatError("reveal 需要非负整数轮次", line=node.line, column=node.column)
            round_index = int(node.items[2].value)
            if reveals[agent] and round_index <= reveals[agent][-1][0]:
                raise CaseFormatError(f"当事方 '{agent}' 的 reveal 轮次必须严格递增",
                                      line=node.items[2].line, column=node.items[2].column)
            context = known[agent]
            builder = OntologyBuilder(taken=context.ids, known_concepts=context.concepts_by_id)
            goals, reservations = _build_fragment(builder, _fragment_sections(node, 3))
            for concept_id in sorted({a for r in builder.relations.values() for a in r.args}):
                if concept_id in context.concepts_by_id and concept_id not in builder.concepts:
                    builder.concepts[concept_id] = context.concept(concept_id)
            fragment = builder.build(node)
            delta = Stance(agent, fragment, tuple(goals), tuple(reservations), round_index + 1)
            reveals[agent].append((round_index, delta))
            known[agent] = context.add(
                [c for c in fragment.concepts if c.id not in context.concepts_by_id],
                [r for r in fragment.relations if r.id not in context.relations_by_id])

        else:
            if len(node.items) != 3 or not isinstance(node.items[2], Atom) or node.items[2].value not in RULES:
                raise CaseFormatError(f"policy 规则必须是 {', '.join(RULES)} 之一",
                                      line=node.line, column=node.column)
            rules[agent] = node.items[2].value

    if len(stances) < 2:
        raise CaseFormatError("会话至少需要两个当事方的立场", line=root.line, column=root.column)
    unknown = sorted(set(rules) - set(stances))
    if unknown:
        raise CaseFormatError(f"policy 引用了未知当事方: {', '.join(unknown)}",
                              line=root.line, column=root.column)
    policies = {
        agent: PartyPolicy(agent, rules.get(agent, "goals"), tuple(reveals[agent]))
        for agent in stances
    }
    return SessionSpec(
        session_id=header.get("id", "session"),
        domain_tag=header.get("domain", ""),
        stances=tuple(stances.values()),
        policies=policies,
    )


def load_session(path) -> SessionSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise CaseFormatError(f"无法读取文件: {e}", path=str(path)) from e
    try:
        return parse_session(text)
    except CaseFormatError as e:
        raise CaseFormatError(e.message, line=e.line, column=e.column, path=str(path)) from e
