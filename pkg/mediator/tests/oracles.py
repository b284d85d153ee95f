"""
测试用的穷举参照实现与随机本体生成器

穷举 SME 独立于引擎实现：自行建立匹配假设，回溯枚举全部结构一致的假设子集，
保留其中极大的非空子集并按定义计算 ses。
"""

import math
import random
from collections import Counter
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple

from mediator.core.ontology import Concept, Ontology, Relation

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
KB_DIR = FIXTURES / "kb"

VOCABULARY = ("a", "b", "c", "d", "e")
PREDICATES = ("desires", "wants", "usedFor", "neededFor", "partOf", "near")


def _predicate_synsets(relation: Relation, syn) -> FrozenSet[str]:
    found = set(relation.predicate_synsets)
    if syn is not None:
        found |= syn.synsets(relation.predicate)
    return frozenset(found)


def oracle_hypotheses(base: Ontology, target: Ontology, syn=None,
                      w_rel: float = 1.0, w_label: float = 0.5):
    """(基域关系 id, 目标关系 id, 实体对, 局部分数) 列表"""
    result = []
    for rb in base.relations:
        for rt in target.relations:
            if len(rb.args) != len(rt.args):
                continue
            same = rb.predicate == rt.predicate
            if not same and not (_predicate_synsets(rb, syn) & _predicate_synsets(rt, syn)):
                continue
            pairs = tuple(zip(rb.args, rt.args))
            result.append((rb.id, rt.id, pairs, w_rel + (w_label if same else 0.0)))
    return result


def _extend(forward: Dict[str, str], backward: Dict[str, str], pairs) -> Optional[Tuple[dict, dict]]:
    forward, backward = dict(forward), dict(backward)
    for b, t in pairs:
        if forward.get(b, t) != t or backward.get(t, b) != b:
            return None
        forward[b] = t
        backward[t] = b
    return forward, backward


def oracle_ses(chosen, w_sys: float = 0.2) -> float:
    usage = Counter()
    for _, _, pairs, _ in chosen:
        for pair in set(pairs):
            usage[pair] += 1
    extra = sum(count - 1 for count in usage.values() if count > 1)
    return math.fsum(h[3] for h in chosen) + w_sys * extra


def brute_force_gmaps(base: Ontology, target: Ontology, syn=None,
                      w_rel: float = 1.0, w_label: float = 0.5,
                      w_sys: float = 0.2) -> Dict[FrozenSet[Tuple[str, str]], float]:
    """全部极大结构一致假设集 -> ses"""
    hyps = oracle_hypotheses(base, target, syn, w_rel, w_label)
    found: Dict[FrozenSet[Tuple[str, str]], float] = {}

    def walk(index: int, chosen: List, forward, backward):
        if index == len(hyps):
            if not chosen:
                return
            for h in hyps:
                if h in chosen:
                    continue
                if _extend(forward, backward, h[2]) is not None:
                    return
            key = frozenset((h[0], h[1]) for h in chosen)
            found[key] = oracle_ses(chosen, w_sys)
            return
        extended = _extend(forward, backward, hyps[index][2])
        if extended is not None:
            walk(index + 1, chosen + [hyps[index]], *extended)
        walk(index + 1, chosen, forward, backward)

    walk(0, [], {}, {})
    return found


def random_ontology(rng: random.Random, max_relations: int = 6,
                    vocabulary=VOCABULARY, predicates=PREDICATES) -> Ontology:
    """随机本体：概念取自共享词表，同一本体内 (谓词, 参数) 不重复"""
    count = rng.randint(1, max_relations)
    seen = set()
    relations = []
    attempts = 0
    while len(relations) < count and attempts < 100:
        attempts += 1
        predicate = rng.choice(predicates)
        arity = 3 if rng.random() < 0.1 else 2
        args = tuple(rng.choice(vocabulary) for _ in range(arity))
        if (predicate, args) in seen:
            continue
        seen.add((predicate, args))
        relations.append(Relation(f"r{len(relations) + 1}", predicate, args))
    used = sorted({a for r in relations for a in r.args})
    return Ontology(tuple(Concept(label, label) for label in used), tuple(relations))


WIDE_VOCABULARY = ("a", "b", "c", "d", "e", "f", "g", "h", "i", "j")
SYNONYMS = {"desires": "wants", "wants": "desires", "usedFor": "neededFor", "neededFor": "usedFor"}


def binary_ontology(rng: random.Random, max_relations: int = 6,
                    vocabulary=VOCABULARY, predicates=PREDICATES) -> Ontology:
    """只含二元关系的随机本体，合并时不会出现元数冲突"""
    source = random_ontology(rng, max_relations, vocabulary, predicates)
    relations = tuple(r for r in source.relations if r.arity == 2)
    used = sorted({a for r in relations for a in r.args} | {rng.choice(vocabulary)})
    return Ontology(tuple(Concept(label, label) for label in used), relations)


def grow_ontology(rng: random.Random, ontology: Ontology, prefix: str, max_new: int = 3,
                  vocabulary=VOCABULARY, predicates=PREDICATES) -> Ontology:
    """追加随机二元关系，并把部分已有关系的谓词换成同义词"""
    relations = [
        Relation(r.id, SYNONYMS[r.predicate], r.args, r.predicate_synsets, r.provenance)
        if r.predicate in SYNONYMS and rng.random() < 0.5 else r
        for r in ontology.relations
    ]
    for index in range(rng.randint(0, max_new)):
        args = (rng.choice(vocabulary), rng.choice(vocabulary))
        relations.append(Relation(f"{prefix}{index + 1}", rng.choice(predicates), args))
    labels = {c.label for c in ontology.concepts} | {a for r in relations for a in r.args}
    known = {c.id: c for c in ontology.concepts}
    concepts = tuple(known.get(label, Concept(label, label)) for label in sorted(labels))
    return Ontology(concepts, tuple(relations))
