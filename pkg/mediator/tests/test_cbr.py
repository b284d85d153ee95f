"""
检索、改编与保留的单元测试
"""

import shutil
import tempfile
import unittest
from pathlib import Path

import sys
sys.path.append(str(Path(__file__).parent.parent.parent))

from mediator.core.case_format import load_case, load_ontology, parse_ontology
from mediator.core.casebase import CaseBase
from mediator.core.cbr import (CbrConfig, CbrEngine, expansion_pool, sat, smatch,
                               structural_signature)
from mediator.core.errors import ConfigError, NoPrecedentError, OntologyError
from mediator.core.knowledge_base import load_kb_dir
from mediator.core.ontology import Case, Relation
from mediator.core.reports import retrieval_tsv
from mediator.core.sme import CandidateInference, GMap, MatchHypothesis, compute_gmaps
from mediator.tests.oracles import FIXTURES, KB_DIR

FAST = CbrConfig(eta_max=3.0, samples_per_eta=2)


def retrieval_report(engine, query, casebase) -> str:
    """检索结果的 TSV，没有先例时输出错误里附带的分数表"""
    try:
        result = engine.retrieve(query, casebase)
    except NoPrecedentError as e:
        return retrieval_tsv(e.table)
    return retrieval_tsv(result.table, result.case_id)


class TestHelpers(unittest.TestCase):
    """相似度与签名"""

    @classmethod
    def setUpClass(cls):
        cls.kb = load_kb_dir(KB_DIR)
        cls.syn = cls.kb.synset_service

    def test_smatch(self):
        a = parse_ontology("(ontology (concepts orange cake) (relations))")
        b = parse_ontology("(ontology (concepts orange drink) (relations))")
        self.assertEqual(smatch(a, a, self.syn), 1.0)
        self.assertAlmostEqual(smatch(a, b, self.syn), 1 / 3)
        self.assertEqual(smatch(parse_ontology("(ontology)"), parse_ontology("(ontology)")), 1.0)

    def test_smatch_uses_synonyms(self):
        a = parse_ontology("(ontology (concepts peel) (relations))")
        b = parse_ontology("(ontology (concepts rind) (relations))")
        self.assertEqual(smatch(a, b, self.syn), 1.0)
        self.assertEqual(smatch(a, b), 0.0)

    def test_structural_signature_ignores_ids(self):
        a = parse_ontology("(ontology (concepts a b) (relations (p a b :id r1)))")
        b = parse_ontology("(ontology (concepts a b) (relations (p a b :id x7)))")
        self.assertEqual(structural_signature(a), structural_signature(b))

    def test_expansion_pool_layout(self):
        sinai = load_ontology(FIXTURES / "ontologies" / "sinai.onto")
        pool = expansion_pool(sinai, self.kb, FAST, seed=3)
        self.assertEqual(len(pool), 1 + 2 * 2)
        self.assertEqual((pool[0].eta, pool[0].chain), (1.0, -1))
        self.assertEqual(pool[0].ontology, sinai)
        self.assertEqual([e.index for e in pool], list(range(5)))
        again = expansion_pool(sinai, self.kb, FAST, seed=3)
        self.assertEqual([e.ontology for e in pool], [e.ontology for e in again])

    def test_config_validation(self):
        for bad in (CbrConfig(sigma=1.5), CbrConfig(theta=-0.1), CbrConfig(workers=0),
                    CbrConfig(samples_per_eta=0), CbrConfig(eta_max=0.5)):
            with self.assertRaises(ConfigError):
                bad.validate()


class TestSat(unittest.TestCase):
    """当事方覆盖与保留条件"""

    @classmethod
    def setUpClass(cls):
        cls.syn = load_kb_dir(KB_DIR).synset_service
        cls.orange = load_ontology(FIXTURES / "ontologies" / "orange.onto")
        cls.sinai = load_ontology(FIXTURES / "ontologies" / "sinai.onto")
        cls.top = compute_gmaps(cls.orange, cls.sinai, cls.syn)[0]

    def test_covering_gmap_satisfies(self):
        query = Case("q", "international", self.sinai, agents=("egypt", "israel"))
        self.assertTrue(sat(self.top, self.top.inferences, query, self.syn))

    def test_reservation_on_matched_relation(self):
        query = Case("q", "international", self.sinai, agents=("egypt", "israel"),
                     reservations=("r1",))
        self.assertFalse(sat(self.top, self.top.inferences, query, self.syn))

    def test_no_gmap(self):
        self.assertFalse(sat(None, [], Case("q", "d", self.sinai, agents=("egypt",))))
        self.assertTrue(sat(None, [], Case("q", "d", self.sinai)))

    def hand_built(self, entity_map):
        hypothesis = MatchHypothesis("b1", "r1", (("s1", "egypt"), ("orange", "sinai")), 1.0)
        return GMap((hypothesis,), tuple(sorted(entity_map)), 1.0)

    def test_gmap_leaving_out_an_agent(self):
        query = Case("q", "international", self.sinai, agents=("egypt", "israel"))
        partial = self.hand_built([("s1", "egypt"), ("orange", "sinai")])
        full = self.hand_built([("s1", "egypt"), ("s2", "israel"), ("orange", "sinai")])
        self.assertFalse(sat(partial, [], query, self.syn))
        self.assertTrue(sat(full, [], query, self.syn))

    def test_inference_duplicating_reservation(self):
        """候选推断恰好推出保留条件中的关系时不满足"""
        ontology = self.sinai.add(relations=[Relation("res1", "controls", ("israel", "sinai"))])
        query = Case("q", "international", ontology, agents=("egypt", "israel"),
                     reservations=("res1",))
        g = self.hand_built([("s1", "egypt"), ("s2", "israel"), ("orange", "sinai")])
        same = CandidateInference("controls", frozenset(), ("israel", "sinai"), "b7")
        synonym = CandidateInference("control", frozenset(), ("israel", "sinai"), "b7")
        other = CandidateInference("controls", frozenset(), ("egypt", "sinai"), "b7")
        self.assertTrue(sat(g, [], query, self.syn))
        self.assertFalse(sat(g, [same], query, self.syn))
        self.assertFalse(sat(g, [synonym], query, self.syn))
        self.assertTrue(sat(g, [synonym], query))
        self.assertTrue(sat(g, [other], query, self.syn))


class TestRetrieve(unittest.TestCase):
    """检索"""

    @classmethod
    def setUpClass(cls):
        cls.kb = load_kb_dir(KB_DIR)
        cls.orange_case = load_case(FIXTURES / "cases" / "orange.case")
        cls.query = load_case(FIXTURES / "cases" / "sinai-query.case")

    def test_sinai_retrieves_orange(self):
        engine = CbrEngine(self.kb, FAST)
        result = engine.retrieve(self.query, CaseBase.in_memory([self.orange_case]))
        self.assertEqual(result.case_id, "orange-dispute")
        self.assertEqual(result.ranking, ("orange-dispute",))
        row = result.table[0]
        self.assertEqual(row.status, "winner")
        self.assertTrue(row.sat)
        self.assertEqual(row.smatch, 0.0)
        self.assertEqual(result.gmap.mapping["orange"], "sinai")
        self.assertGreater(result.ses_total, 0.0)

    def test_same_domain_rejected_by_smatch(self):
        query = Case("orange-again", "household", self.orange_case.ontology,
                     agents=self.orange_case.agents)
        casebase = CaseBase.in_memory([self.orange_case])
        with self.assertRaises(NoPrecedentError) as ctx:
            CbrEngine(self.kb, FAST).retrieve(query, casebase)
        self.assertEqual(ctx.exception.exit_code, 1)
        self.assertEqual([r.status for r in ctx.exception.table], ["rejected:smatch"])
        self.assertEqual(ctx.exception.table[0].smatch, 1.0)

        allowed = CbrConfig(eta_max=3.0, samples_per_eta=2, allow_same_domain=True)
        result = CbrEngine(self.kb, allowed).retrieve(query, casebase)
        self.assertEqual(result.case_id, "orange-dispute")

    def test_empty_casebase(self):
        with self.assertRaises(NoPrecedentError):
            CbrEngine(self.kb, FAST).retrieve(self.query, CaseBase.in_memory())

    def test_solved_query_rejected(self):
        with self.assertRaises(OntologyError):
            CbrEngine(self.kb, FAST).retrieve(self.orange_case, CaseBase.in_memory())

    def test_parallel_retrieval_is_deterministic(self):
        """并行与顺序检索、以及重复运行的输出逐字节相同"""
        casebase = CaseBase(str(FIXTURES / "casebase"))
        self.assertEqual(len(casebase), 10)
        sequential = retrieval_report(CbrEngine(self.kb, FAST), self.query, casebase)
        parallel_cfg = CbrConfig(eta_max=3.0, samples_per_eta=2, workers=4)
        parallel = retrieval_report(CbrEngine(self.kb, parallel_cfg), self.query, casebase)
        self.assertEqual(sequential, parallel)
        for _ in range(3):
            self.assertEqual(retrieval_report(CbrEngine(self.kb, FAST), self.query, casebase),
                             sequential)
        self.assertEqual(len(sequential.splitlines()), 1 + 10 + (1 if "# winner" in sequential else 0))


class TestAdaptAndRetain(unittest.TestCase):
    """改编与保留"""

    @classmethod
    def setUpClass(cls):
        cls.kb = load_kb_dir(KB_DIR)
        cls.orange_case = load_case(FIXTURES / "cases" / "orange.case")
        cls.query = load_case(FIXTURES / "cases" / "sinai-query.case")

    def setUp(self):
        """测试前准备"""
        self.temp_dir = Path(tempfile.mkdtemp())

    def tearDown(self):
        """测试后清理"""
        shutil.rmtree(self.temp_dir)

    def test_peel_and_pulp_grounded_as_controls(self):
        """橙皮与果肉分别落实为军事控制与民事控制"""
        adaptation = CbrEngine(self.kb, FAST).adapt(self.query, self.orange_case)
        self.assertFalse(adaptation.partial)
        rendered = {adaptation.ontology.format_relation(r) for r in adaptation.grounded_solution}
        self.assertEqual(rendered, {"(gets israel military_control)",
                                    "(gets egypt civilian_control)"})
        self.assertEqual({sk.label for sk, _ in adaptation.bindings}, {"peel", "pulp"})
        for relation in adaptation.grounded_solution:
            self.assertEqual(relation.provenance, "inferred")
        self.assertEqual(len(adaptation.grounding_report()), 2)

    def test_missing_knowledge_leaves_skolems_unbound(self):
        stripped = self.kb.without_labels({"military_control", "civilian_control"})
        adaptation = CbrEngine(stripped, FAST).adapt(self.query, self.orange_case)
        self.assertTrue(adaptation.partial)
        self.assertEqual(len(adaptation.unbound), 2)
        self.assertEqual(adaptation.grounded_solution, ())
        self.assertTrue(all("未落地" in line for line in adaptation.grounding_report()))

    def test_adapt_reports_retrieval(self):
        engine = CbrEngine(self.kb, FAST)
        result = engine.retrieve(self.query, CaseBase.in_memory([self.orange_case]))
        adaptation = engine.adapt(self.query, self.orange_case, result)
        self.assertEqual(adaptation.precedent, "orange-dispute")
        self.assertEqual(adaptation.retrieval_ses, result.ses_total)
        plain = engine.adapt(self.query, self.orange_case)
        self.assertIsNone(plain.retrieval_ses)
        self.assertEqual(adaptation.grounded_solution, plain.grounded_solution)

    def test_adapt_rejects_result_of_other_case(self):
        engine = CbrEngine(self.kb, FAST)
        result = engine.retrieve(self.query, CaseBase.in_memory([self.orange_case]))
        other = self.orange_case.with_solution(self.orange_case.ontology, self.orange_case.solution,
                                               case_id="orange-copy")
        with self.assertRaises(OntologyError):
            engine.adapt(self.query, other, result)

    def test_adapt_requires_solution(self):
        with self.assertRaises(OntologyError):
            CbrEngine(self.kb, FAST).adapt(self.query, self.query)

    def test_retain_dissimilar_case(self):
        engine = CbrEngine(self.kb, FAST)
        adaptation = engine.adapt(self.query, self.orange_case)
        solved = self.query.with_solution(adaptation.ontology,
                                          [r.id for r in adaptation.grounded_solution],
                                          case_id="sinai-solved")
        casebase = CaseBase(str(self.temp_dir / "casebase"))
        self.assertLess(engine.similarity(solved.ontology, self.orange_case.ontology), 0.8)
        self.assertTrue(engine.retain(casebase, solved, self.orange_case))
        self.assertFalse(engine.retain(casebase, solved, self.orange_case))
        self.assertEqual(CaseBase(str(self.temp_dir / "casebase")).ids(), ["sinai-solved"])

    def test_retain_skips_near_duplicate(self):
        engine = CbrEngine(self.kb, FAST)
        copy = self.orange_case.with_solution(self.orange_case.ontology, self.orange_case.solution,
                                              case_id="orange-copy")
        self.assertEqual(engine.similarity(copy.ontology, self.orange_case.ontology), 1.0)
        casebase = CaseBase.in_memory()
        self.assertFalse(engine.retain(casebase, copy, self.orange_case))
        self.assertEqual(len(casebase), 0)

    def test_theta_one_retains_any_different_case(self):
        engine = CbrEngine(self.kb, CbrConfig(eta_max=3.0, samples_per_eta=2, theta=1.0))
        adaptation = engine.adapt(self.query, self.orange_case)
        solved = self.query.with_solution(adaptation.ontology,
                                          [r.id for r in adaptation.grounded_solution],
                                          case_id="sinai-solved")
        casebase = CaseBase.in_memory()
        self.assertTrue(engine.retain(casebase, solved, self.orange_case))
        self.assertEqual(casebase.ids(), ["sinai-solved"])

    def test_retain_requires_solution(self):
        with self.assertRaises(OntologyError):
            CbrEngine(self.kb, FAST).retain(CaseBase.in_memory(), self.query, self.orange_case)


if __name__ == '__main__':
    unittest.main()
