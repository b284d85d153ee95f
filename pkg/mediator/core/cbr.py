"""
案例推理循环：检索、替换式改编与保留

检索时把查询本体向知识库随机扩展，寻找与每个先例类比分数最高的扩展；
改编时把先例的解经 gmap 映射到当前本体，再用扩展出的常识概念落实其中的 Skolem；
保留时只把与先例差异足够大的新案例写回案例库。
"""

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

from mediator.core.casebase import CaseBase
from mediator.core.errors import ConfigError, NoPrecedentError, OntologyError
from mediator.core.expansion import (ExpansionResult, derive_seed, eta_levels,
                                     expansion_chain)
from mediator.core.knowledge_base import KnowledgeBase, SynsetService
from mediator.core.ontology import (Case, Concept, Ontology, Relation, concept_synsets,
                                    natural_key, predicate_synsets, predicates_match)
from mediator.core.sme import (DEFAULT_SME_CONFIG, CandidateInference, GMap,
                               MappingFunction, SMEConfig, Skolem, compute_gmaps)

logger = logging.getLogger(__name__)

DIRECTIONS = ("target", "base")


@dataclass(frozen=True)
class CbrConfig:
    """案例推理参数"""
    eta_max: float = 6.0
    samples_per_eta: int = 8
    sigma: float = 0.3
    theta: float = 0.8
    seed: int = 0
    allow_same_domain: bool = False
    workers: int = 1
    max_attempts_factor: int = 100

    def validate(self) -> "CbrConfig":
        if self.eta_max < 1:
            raise ConfigError(f"eta_max 必须 ≥ 1，实际为 {self.eta_max}")
        if self.samples_per_eta < 1:
            raise ConfigError(f"samples_per_eta 必须 ≥ 1，实际为 {self.samples_per_eta}")
        for name in ("sigma", "theta"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ConfigError(f"{name} 必须在 [0, 1] 之间，实际为 {value}")
        if self.workers < 1:
            raise ConfigError(f"workers 必须 ≥ 1，实际为 {self.workers}")
        if self.max_attempts_factor < 1:
            raise ConfigError("max_attempts_factor 必须 ≥ 1")
        return self


@dataclass(frozen=True)
class PoolEntry:
    """扩展样本池中的一项；chain 为 -1 表示未扩展的原本体"""
    index: int
    eta: float
    chain: int
    expansion: ExpansionResult

    @property
    def ontology(self) -> Ontology:
        return self.expansion.ontology


@dataclass(frozen=True)
class CaseScore:
    """检索分数表中的一行"""
    case_id: str
    domain_tag: str
    ses: float
    smatch: float
    sat: bool
    status: str
    expansion: Optional[Ontology] = None
    gmap: Optional[GMap] = None

    @property
    def passed(self) -> bool:
        return not self.status.startswith("rejected")


@dataclass(frozen=True)
class RetrievalResult:
    """检索结果：最佳先例、对应的查询扩展与 gmap，以及完整分数表"""
    case_id: str
    best_expansion: Ontology
    gmap: Optional[GMap]
    ses_total: float
    table: Tuple[CaseScore, ...]
    ranking: Tuple[str, ...]

    def candidate(self, case_id: str) -> "RetrievalResult":
        """以排名中的另一个候选为主的结果视图"""
        row = next(r for r in self.table if r.case_id == case_id)
        return replace(self, case_id=row.case_id, best_expansion=row.expansion,
                       gmap=row.gmap, ses_total=row.ses)


@dataclass(frozen=True)
class AdaptationResult:
    """改编结果"""
    retrieved_expansion: Ontology
    gmap: Optional[GMap]
    mapping: MappingFunction
    mapped_solution: Tuple[CandidateInference, ...]
    grounded_solution: Tuple[Relation, ...]
    ontology: Ontology
    bindings: Tuple[Tuple[Skolem, str], ...]
    unbound: Tuple[Skolem, ...]
    precedent: str = ""
    retrieval_ses: Optional[float] = None

    @property
    def partial(self) -> bool:
        return bool(self.unbound)

    def grounding_report(self) -> List[str]:
        lines = [f"{sk} -> {self.ontology.label_of(cid)}" for sk, cid in self.bindings]
        lines.extend(f"{sk} -> (未落地)" for sk in self.unbound)
        return lines


def structural_signature(ontology: Ontology):
    """与 id 无关的结构签名；标签不唯一或含关系值参数时退回到本体本身"""
    labels = [c.label for c in ontology.concepts]
    if len(set(labels)) != len(labels):
        return ("ids", ontology)
    names = {c.id: c.label for c in ontology.concepts}
    if any(a not in names for r in ontology.relations for a in r.args):
        return ("ids", ontology)
    concepts = tuple(sorted((c.label, tuple(sorted(c.synsets))) for c in ontology.concepts))
    relations = tuple(sorted(
        (r.predicate, tuple(sorted(r.predicate_synsets)), tuple(names[a] for a in r.args))
        for r in ontology.relations))
    return ("labels", concepts, relations)


class MatchCache:
    """match_total 与 gmap 的线程安全缓存"""

    def __init__(self, syn: SynsetService, cfg: SMEConfig = DEFAULT_SME_CONFIG):
        self.syn = syn
        self.cfg = cfg
        self._lock = threading.Lock()
        self._totals: Dict[tuple, float] = {}
        self._gmaps: Dict[tuple, List[GMap]] = {}

    def gmaps(self, base: Ontology, target: Ontology) -> List[GMap]:
        key = (base, target)
        with self._lock:
            cached = self._gmaps.get(key)
        if cached is None:
            cached = compute_gmaps(base, target, self.syn, self.cfg)
            with self._lock:
                self._gmaps[key] = cached
        return cached

    def total(self, base: Ontology, target: Ontology) -> float:
        key = (structural_signature(base), structural_signature(target))
        with self._lock:
            cached = self._totals.get(key)
        if cached is None:
            cached = math.fsum(g.ses for g in self.gmaps(base, target))
            with self._lock:
                self._totals[key] = cached
        return cached


def expansion_pool(ontology: Ontology, kb: KnowledgeBase, cfg: CbrConfig, seed: int) -> List[PoolEntry]:
    """η=1 的原本体在前，随后是 samples_per_eta 条嵌套扩展链上 η=2..η_max 的各层"""
    entries = [PoolEntry(0, 1.0, -1, ExpansionResult(ontology, 1.0, 0, (), False))]
    levels = [eta for eta in eta_levels(cfg.eta_max) if eta > 1]
    if not levels:
        return entries
    for chain in range(cfg.samples_per_eta):
        results = expansion_chain(ontology, kb, levels, derive_seed(seed, "chain", chain),
                                  cfg.max_attempts_factor)
        for result in results:
            entries.append(PoolEntry(len(entries), result.eta, chain, result))
    return entries


def smatch(a: Ontology, b: Ontology, syn: Optional[SynsetService] = None) -> float:
    """两个本体概念同义词集 id 集合的 Jaccard 相似度

    没有同义词集的概念用标签本身充当 id。
    """
    def ids(ontology: Ontology) -> set:
        found = set()
        for concept in ontology.concepts:
            synsets = concept_synsets(concept, syn)
            found |= synsets if synsets else {concept.label}
        return found

    left, right = ids(a), ids(b)
    union = left | right
    if not union:
        return 1.0
    return len(left & right) / len(union)


def _duplicates(predicate: str, synsets, args, reservation: Relation, syn) -> bool:
    if tuple(args) != reservation.args:
        return False
    return predicates_match(predicate, synsets, reservation.predicate,
                            predicate_synsets(reservation, syn))


def sat(gmap: Optional[GMap], inferences: Sequence[CandidateInference], current: Case,
        syn: Optional[SynsetService] = None) -> bool:
    """gmap 是否覆盖全部当事方且不触犯任何保留条件"""
    if gmap is None:
        return not current.agents
    if any(agent not in gmap.targets for agent in current.agents):
        return False
    reservations = [current.ontology.relation(r) for r in current.reservations]
    if not reservations:
        return True
    for h in gmap.hypotheses:
        if h.target_relation in current.reservations:
            return False
        matched = current.ontology.relations_by_id.get(h.target_relation)
        if matched is not None and any(
                _duplicates(matched.predicate, predicate_synsets(matched, syn), matched.args, res, syn)
                for res in reservations):
            return False
    for inference in inferences:
        synsets = inference.predicate_synsets
        if syn is not None:
            synsets = synsets | syn.synsets(inference.predicate)
        if any(_duplicates(inference.predicate, synsets, inference.args, res, syn)
               for res in reservations):
            return False
    return True


class CbrEngine:
    """检索-改编-保留引擎"""

    def __init__(self, kb: KnowledgeBase, cfg: Optional[CbrConfig] = None,
                 sme_cfg: SMEConfig = DEFAULT_SME_CONFIG,
                 syn: Optional[SynsetService] = None):
        self.kb = kb
        self.cfg = (cfg or CbrConfig()).validate()
        self.sme_cfg = sme_cfg.validate()
        self.syn = syn if syn is not None else kb.synset_service
        self.cache = MatchCache(self.syn, self.sme_cfg)
        logger.info(f"初始化案例推理引擎: eta_max={self.cfg.eta_max}, "
                    f"samples={self.cfg.samples_per_eta}, seed={self.cfg.seed}")

    # -- expansion sampling ---------------------------------------------------
    def score(self, fixed: Ontology, candidate: Ontology, direction: str) -> float:
        if direction == "target":
            return self.cache.total(fixed, candidate)
        return self.cache.total(candidate, fixed)

    def sample_best_expansion(self, fixed: Ontology, expandable: Ontology,
                              direction: str, seed: int) -> Tuple[Ontology, Optional[GMap], float]:
        """在扩展样本池中找出与 fixed 的 match_total 最大的扩展

        direction 为 target 时 fixed 是基域、扩展是目标域（检索）；
        为 base 时扩展是基域（改编）。并列时取池中靠前的一项。
        """
        if direction not in DIRECTIONS:
            raise ConfigError(f"未知方向 '{direction}'，可选: {', '.join(DIRECTIONS)}")
        best_entry, best_score = None, -1.0
        for entry in expansion_pool(expandable, self.kb, self.cfg, seed):
            value = self.score(fixed, entry.ontology, direction)
            if value > best_score:
                best_entry, best_score = entry, value
        ontology = best_entry.ontology
        gmaps = (self.cache.gmaps(fixed, ontology) if direction == "target"
                 else self.cache.gmaps(ontology, fixed))
        return ontology, (gmaps[0] if gmaps else None), best_score

    def general_expansion(self, ontology: Ontology, key: str) -> Ontology:
        """η_max 的一般化扩展，用于 SMatch"""
        seed = derive_seed(self.cfg.seed, "general", key)
        return expansion_chain(ontology, self.kb, [self.cfg.eta_max], seed,
                               self.cfg.max_attempts_factor)[0].ontology

    # -- retrieval -------------------------------------------------------------
    def _score_case(self, query: Case, case: Case, query_general: Ontology) -> CaseScore:
        seed = derive_seed(self.cfg.seed, case.case_id)
        expansion, _, total = self.sample_best_expansion(case.ontology, query.ontology, "target", seed)
        gmaps = self.cache.gmaps(case.ontology, expansion)
        satisfying = [g for g in gmaps if sat(g, g.inferences, query, self.syn)]
        similarity = smatch(self.general_expansion(case.ontology, f"case:{case.case_id}"),
                            query_general, self.syn)

        if not self.cfg.allow_same_domain and similarity > self.cfg.sigma:
            status = "rejected:smatch"
        elif not satisfying:
            status = "rejected:sat"
        else:
            status = "candidate"
        gmap = satisfying[0] if satisfying else (gmaps[0] if gmaps else None)
        logger.debug(f"案例 {case.case_id}: ses={total:.6f} smatch={similarity:.6f} {status}")
        return CaseScore(case.case_id, case.domain_tag, total, similarity, bool(satisfying),
                         status, expansion, gmap)

    def retrieve(self, query: Case, casebase: CaseBase) -> RetrievalResult:
        """为查询案例检索最佳先例"""
        if query.solution:
            raise OntologyError(f"'{query.case_id}' 已有解，不能作为查询案例")
        cases = list(casebase)
        if not cases:
            raise NoPrecedentError("案例库为空", table=[])

        query_general = self.general_expansion(query.ontology, "query")
        if self.cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool:
                rows = list(pool.map(lambda c: self._score_case(query, c, query_general), cases))
        else:
            rows = [self._score_case(query, c, query_general) for c in cases]

        survivors = sorted((r for r in rows if r.passed),
                           key=lambda r: (-r.ses, natural_key(r.case_id)))
        if not survivors:
            raise NoPrecedentError("没有任何案例通过 sat/smatch 过滤", table=rows)
        winner = survivors[0]
        table = tuple(replace(r, status="winner") if r.case_id == winner.case_id else r for r in rows)
        logger.info(f"检索到先例 {winner.case_id} (ses={winner.ses:.6f})")
        return RetrievalResult(
            case_id=winner.case_id,
            best_expansion=winner.expansion,
            gmap=winner.gmap,
            ses_total=winner.ses,
            table=table,
            ranking=tuple(r.case_id for r in survivors),
        )

    # -- adaptation --------------------------------------------------------------
    def adapt(self, query: Case, retrieved: Case,
              result: Optional[RetrievalResult] = None) -> AdaptationResult:
        """把先例的解映射到当前案例，并用常识扩展落实假设概念

        给出 result 时它必须来自对同一先例的检索，其 ses 随结果一起报告。
        """
        if not retrieved.solution:
            raise OntologyError(f"先例 '{retrieved.case_id}' 没有解")
        if result is not None and result.case_id != retrieved.case_id:
            raise OntologyError(f"检索结果属于 '{result.case_id}'，不能用来改编 '{retrieved.case_id}'")
        current = query.ontology
        seed = derive_seed(self.cfg.seed, retrieved.case_id, "adapt")
        retrieved_expansion, gmap, _ = self.sample_best_expansion(
            current, retrieved.ontology, "base", seed)
        mapping = MappingFunction.from_gmap(gmap, retrieved_expansion)
        mapped = tuple(mapping.apply(retrieved_expansion, retrieved.solution))
        skolems = sorted({sk for m in mapped for sk in m.skolems},
                         key=lambda s: (natural_key(s.label), natural_key(s.base_concept)))

        grounding_ontology, bindings = current, {}
        if skolems:
            solution_ids = set(retrieved.solution)
            inferences = gmap.inferences if gmap is not None else ()
            requirements = {
                sk: [inf for inf in inferences
                     if sk in inf.args and inf.base_relation not in solution_ids]
                for sk in skolems
            }
            grounding_ontology, bindings = self._ground(
                current, retrieved_expansion, skolems, requirements,
                derive_seed(self.cfg.seed, retrieved.case_id, "grounding"))

        grounded, final = self._materialize(grounding_ontology, mapped, bindings)
        unbound = tuple(sk for sk in skolems if sk not in bindings)
        if unbound:
            logger.warning(f"有 {len(unbound)} 个假设概念无法落地: "
                           f"{', '.join(str(sk) for sk in unbound)}")
        return AdaptationResult(
            retrieved_expansion=retrieved_expansion,
            gmap=gmap,
            mapping=mapping,
            mapped_solution=mapped,
            grounded_solution=grounded,
            ontology=final,
            bindings=tuple((sk, bindings[sk]) for sk in skolems if sk in bindings),
            unbound=unbound,
            precedent=retrieved.case_id,
            retrieval_ses=result.ses_total if result is not None else None,
        )

    def _ground(self, current: Ontology, retrieved_expansion: Ontology, skolems: List[Skolem],
                requirements: Dict[Skolem, List[CandidateInference]], seed: int):
        pool = expansion_pool(current, self.kb, self.cfg, seed)
        ordered = sorted(pool, key=lambda e: (-self.cache.total(retrieved_expansion, e.ontology),
                                              -len(e.ontology.concepts), e.index))
        best = None
        for entry in ordered:
            bindings = self._bind(entry.ontology, skolems, requirements)
            if best is None or len(bindings) > len(best[1]):
                best = (entry.ontology, bindings)
            if len(bindings) == len(skolems):
                break
        return best

    def _bind(self, ontology: Ontology, skolems: List[Skolem],
              requirements: Dict[Skolem, List[CandidateInference]]) -> Dict[Skolem, str]:
        candidates = sorted((c for c in ontology.concepts if c.provenance == "expansion"),
                            key=lambda c: (-self.kb.degree(c.label), c.label))
        bindings: Dict[Skolem, str] = {}
        used = set()
        for skolem in skolems:
            needed = requirements.get(skolem, [])
            if not needed:
                continue
            for concept in candidates:
                if concept.id in used:
                    continue
                if all(self._supports(ontology, concept, skolem, req) for req in needed):
                    bindings[skolem] = concept.id
                    used.add(concept.id)
                    break
        return bindings

    def _supports(self, ontology: Ontology, concept: Concept, skolem: Skolem,
                  requirement: CandidateInference) -> bool:
        """候选概念上是否有与推断关系同义且参数相容的关系"""
        wanted = requirement.predicate_synsets | self.syn.synsets(requirement.predicate)
        for relation in ontology.relations:
            if relation.arity != len(requirement.args):
                continue
            if not predicates_match(requirement.predicate, wanted, relation.predicate,
                                    predicate_synsets(relation, self.syn)):
                continue
            if all(_arg_fits(arg, actual, skolem, concept.id)
                   for arg, actual in zip(requirement.args, relation.args)):
                return True
        return False

    def _materialize(self, ontology: Ontology, mapped: Sequence[CandidateInference],
                     bindings: Dict[Skolem, str]) -> Tuple[Tuple[Relation, ...], Ontology]:
        grounded: List[Relation] = []
        fresh: List[Relation] = []
        taken = set(ontology.ids)
        counter = 0
        for image in mapped:
            args = tuple(bindings.get(a) if isinstance(a, Skolem) else a for a in image.args)
            if any(a is None for a in args):
                continue
            existing = next((r for r in ontology.relations + tuple(fresh)
                             if r.predicate == image.predicate and r.args == args), None)
            if existing is not None:
                grounded.append(existing)
                continue
            while True:
                counter += 1
                relation_id = f"s{counter}"
                if relation_id not in taken:
                    break
            taken.add(relation_id)
            relation = Relation(relation_id, image.predicate, args,
                                image.predicate_synsets | self.syn.synsets(image.predicate),
                                "inferred")
            fresh.append(relation)
            grounded.append(relation)
        return tuple(grounded), ontology.add(relations=fresh)

    # -- retention ---------------------------------------------------------------
    def similarity(self, a: Ontology, b: Ontology) -> float:
        """最佳 gmap 的 ses 除以较小本体的自匹配 ses，截断到 [0, 1]"""
        cross = self.cache.gmaps(a, b)
        smaller = a if a.size() <= b.size() else b
        own = self.cache.gmaps(smaller, smaller)
        if not cross or not own or own[0].ses <= 0:
            return 0.0
        return min(1.0, max(0.0, cross[0].ses / own[0].ses))

    def retain(self, casebase: CaseBase, solved: Case, star: Case) -> bool:
        """新案例与先例的相似度低于 θ 且案例库中尚无同 id 案例时写入"""
        if not solved.solution:
            raise OntologyError(f"案例 '{solved.case_id}' 没有解，不能保留")
        value = self.similarity(solved.ontology, star.ontology)
        if value >= self.cfg.theta:
            logger.info(f"相似度 {value:.6f} ≥ θ={self.cfg.theta}，不保留 {solved.case_id}")
            return False
        retained = casebase.add(solved)
        logger.info(f"相似度 {value:.6f}，保留 {solved.case_id}: {retained}")
        return retained


def _arg_fits(expected, actual: str, skolem: Skolem, candidate: str) -> bool:
    if expected == skolem:
        return actual == candidate
    if isinstance(expected, Skolem):
        return True
    return actual == expected


# -- functional entry points --------------------------------------------------

def sample_best_expansion(fixed: Ontology, expandable: Ontology, kb: KnowledgeBase,
                          cfg: CbrConfig, direction: str, seed: Optional[int] = None,
                          sme_cfg: SMEConfig = DEFAULT_SME_CONFIG):
    engine = CbrEngine(kb, cfg, sme_cfg)
    return engine.sample_best_expansion(fixed, expandable, direction,
                                        cfg.seed if seed is None else seed)


def retrieve(c: Case, casebase: CaseBase, kb: KnowledgeBase, cfg: CbrConfig,
             sme_cfg: SMEConfig = DEFAULT_SME_CONFIG) -> RetrievalResult:
    return CbrEngine(kb, cfg, sme_cfg).retrieve(c, casebase)


def adapt(c: Case, retrieved: Case, result: Optional[RetrievalResult], kb: KnowledgeBase,
          cfg: CbrConfig, sme_cfg: SMEConfig = DEFAULT_SME_CONFIG) -> AdaptationResult:
    return CbrEngine(kb, cfg, sme_cfg).adapt(c, retrieved, result)


def retain(casebase: CaseBase, c_solved: Case, c_star: Case, cfg: CbrConfig,
           kb: Optional[KnowledgeBase] = None, sme_cfg: SMEConfig = DEFAULT_SME_CONFIG) -> bool:
    engine = CbrEngine(kb if kb is not None else KnowledgeBase(), cfg, sme_cfg)
    return engine.retain(casebase, c_solved, c_star)
