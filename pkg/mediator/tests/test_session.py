"""
调解会话的单元测试
"""

import shutil
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import sys
sys.path.append(str(Path(__file__).parent.parent.parent))

from mediator.core.case_format import load_case, parse_ontology
from mediator.core.casebase import CaseBase
from mediator.core.cbr import CbrConfig
from mediator.core.errors import CaseFormatError, OntologyError
from mediator.core.knowledge_base import load_kb_dir
from mediator.core.ontology import Stance, is_sub_ontology
from mediator.core.session import (ACCEPT, REJECT, PartyPolicy, Proposal, build_query,
                                   goal_satisfied, load_session, parse_session,
                                   policy_respond, reservation_violated, run_session)
from mediator.tests.oracles import FIXTURES, KB_DIR

FAST = CbrConfig(eta_max=3.0, samples_per_eta=2)
SESSION_FILE = FIXTURES / "sessions" / "sinai.session"


def proposal_from(text: str) -> Proposal:
    """把一个本体文本中带 :id s 前缀的关系当作方案"""
    ontology = parse_ontology(text)
    return Proposal(tuple(r for r in ontology.relations if r.id.startswith("s")), ontology)


class TestAcceptRule(unittest.TestCase):
    """目标满足与保留条件"""

    @classmethod
    def setUpClass(cls):
        cls.syn = load_kb_dir(KB_DIR).synset_service
        cls.owner = parse_ontology(
            "(ontology (concepts egypt sinai sovereignty)"
            " (relations (wants egypt sovereignty :id r1) (controls egypt sinai :id r2)))")

    def test_allocated_concept_linked_to_goal(self):
        proposal = proposal_from(
            "(ontology (concepts egypt civilian_control sovereignty)"
            " (relations (neededFor civilian_control sovereignty :id x1)"
            " (gets egypt civilian_control :id s1)))")
        self.assertTrue(goal_satisfied(self.owner.relation("r1"), self.owner, proposal, self.syn))

    def test_unrelated_allocation(self):
        proposal = proposal_from("(ontology (concepts egypt army) (relations (gets egypt army :id s1)))")
        self.assertFalse(goal_satisfied(self.owner.relation("r1"), self.owner, proposal, self.syn))

    def test_synonymous_counterpart(self):
        proposal = proposal_from(
            "(ontology (concepts egypt sovereignty) (relations (desires egypt sovereignty :id s1)))")
        self.assertTrue(goal_satisfied(self.owner.relation("r1"), self.owner, proposal, self.syn))

    def test_reservation(self):
        violating = proposal_from(
            "(ontology (concepts egypt sinai) (relations (controls egypt sinai :id s1)))")
        harmless = proposal_from(
            "(ontology (concepts egypt sinai) (relations (gets egypt sinai :id s1)))")
        reservation = self.owner.relation("r2")
        self.assertTrue(reservation_violated(reservation, self.owner, violating, self.syn))
        self.assertFalse(reservation_violated(reservation, self.owner, harmless, self.syn))


class TestPolicy(unittest.TestCase):
    """脚本策略"""

    def setUp(self):
        self.stance = Stance("egypt", parse_ontology(
            "(ontology (concepts egypt sinai) (relations (wants egypt sinai :id r1)))"), goals=("r1",))
        self.delta = Stance("egypt", parse_ontology(
            "(ontology (concepts egypt sovereignty) (relations (wants egypt sovereignty :id r2)))"),
            goals=("r2",), t=1)
        self.proposal = proposal_from(
            "(ontology (concepts egypt sinai) (relations (gets egypt sinai :id s1)))")

    def test_fixed_rules(self):
        self.assertEqual(policy_respond(PartyPolicy("egypt", "always_accept"), self.proposal, self.stance),
                         (ACCEPT, None))
        self.assertEqual(policy_respond(PartyPolicy("egypt", "always_reject"), self.proposal, self.stance),
                         (REJECT, None))

    def test_only_disclosed_goals_decide(self):
        """公开目标已满足时接受，尚未公开的增量不影响表态"""
        policy = PartyPolicy("egypt", "goals", ((0, self.delta),))
        self.assertEqual(policy_respond(policy, self.proposal, self.stance, t=0), (ACCEPT, None))
        self.assertEqual(policy_respond(PartyPolicy("egypt"), self.proposal, self.stance), (ACCEPT, None))

    def test_reject_reveals_delta_of_round(self):
        policy = PartyPolicy("egypt", "goals", ((0, self.delta),))
        army = proposal_from("(ontology (concepts egypt army) (relations (gets egypt army :id s1)))")
        verdict, delta = policy_respond(policy, army, self.stance, t=0)
        self.assertEqual(verdict, REJECT)
        self.assertEqual(delta, self.delta)

    def test_stance_without_goals_accepts_anything(self):
        bare = Stance("egypt", parse_ontology("(ontology (concepts egypt) (relations))"))
        policy = PartyPolicy("egypt", "goals", ((3, self.delta),))
        self.assertEqual(policy_respond(policy, self.proposal, bare, t=1), (ACCEPT, None))
        self.assertEqual(policy_respond(policy, self.proposal, bare, t=3), (ACCEPT, None))

    def test_nothing_to_reveal_after_plan(self):
        policy = PartyPolicy("egypt", "goals", ((0, self.delta),))
        army = proposal_from("(ontology (concepts egypt army) (relations (gets egypt army :id s1)))")
        verdict, delta = policy_respond(policy, army, self.stance, t=3)
        self.assertEqual(verdict, REJECT)
        self.assertIsNone(delta)

    def test_validation(self):
        with self.assertRaises(OntologyError):
            PartyPolicy("egypt", "sometimes")
        with self.assertRaises(OntologyError):
            PartyPolicy("egypt", "goals", ((1, self.delta), (1, self.delta)))


class TestSessionFile(unittest.TestCase):
    """会话文件解析"""

    def test_fixture(self):
        spec = load_session(SESSION_FILE)
        self.assertEqual(spec.session_id, "sinai-1979")
        self.assertEqual(spec.domain_tag, "international")
        self.assertEqual([s.agent for s in spec.stances], ["egypt", "israel"])
        israel = spec.stances[1]
        self.assertEqual(len(israel.reservations), 1)
        self.assertEqual(israel.ontology_fragment.format_relation(
            israel.ontology_fragment.relation(israel.reservations[0])), "(controls egypt sinai)")

        policy = spec.policies["egypt"]
        self.assertEqual(policy.rule, "goals")
        delta = policy.delta_for(0)
        self.assertEqual(delta.t, 1)
        fragment = delta.ontology_fragment
        self.assertEqual({c.id for c in fragment.concepts}, {"egypt", "sinai", "sovereignty"})
        self.assertEqual([fragment.format_relation(fragment.relation(g)) for g in delta.goals],
                         ["(wants egypt sovereignty)"])
        self.assertNotIn("r1", fragment.relations_by_id)

    def test_agent_concept_added(self):
        spec = parse_session("(session :id s (stance a (concepts x)) (stance b))")
        self.assertIn("a", spec.stances[0].ontology_fragment.concepts_by_id)
        self.assertEqual(spec.policies["b"].rule, "goals")

    def test_reveal_before_stance(self):
        with self.assertRaises(CaseFormatError):
            parse_session("(session (reveal a 0 (concepts x)) (stance a) (stance b))")

    def test_reveal_rounds_strictly_increasing(self):
        with self.assertRaises(CaseFormatError) as ctx:
            parse_session("(session (stance a) (stance b)\n"
                          "  (reveal a 1 (concepts x))\n"
                          "  (reveal a 1 (concepts y)))")
        self.assertEqual(ctx.exception.line, 3)

    def test_needs_two_stances(self):
        with self.assertRaises(CaseFormatError):
            parse_session("(session (stance a))")

    def test_unknown_policy_agent(self):
        with self.assertRaises(CaseFormatError):
            parse_session("(session (stance a) (stance b) (policy c goals))")

    def test_unknown_rule(self):
        with self.assertRaises(CaseFormatError):
            parse_session("(session (stance a) (stance b) (policy a maybe))")

    def test_build_query_maps_goals(self):
        spec = load_session(SESSION_FILE)
        query = build_query(spec.stances, "q", "international", load_kb_dir(KB_DIR).synset_service)
        self.assertEqual(query.agents, ("egypt", "israel"))
        self.assertEqual(len(query.goals), 2)
        self.assertEqual(len(query.reservations), 1)
        self.assertTrue(query.is_query)


class TestRunSession(unittest.TestCase):
    """以橙子争端为唯一先例的西奈调解"""

    @classmethod
    def setUpClass(cls):
        cls.kb = load_kb_dir(KB_DIR)
        cls.spec = load_session(SESSION_FILE)
        cls.orange = load_case(FIXTURES / "cases" / "orange.case")

    def setUp(self):
        """测试前准备"""
        self.temp_dir = Path(tempfile.mkdtemp())
        self.root = self.temp_dir / "casebase"
        CaseBase(str(self.root)).add(self.orange)

    def tearDown(self):
        """测试后清理"""
        shutil.rmtree(self.temp_dir)

    def run_sinai(self, casebase, policies=None, max_rounds=5):
        return run_session(self.spec.stances, casebase, self.kb, CbrConfig(),
                           policies or self.spec.policies, max_rounds,
                           self.spec.session_id, self.spec.domain_tag)

    def test_accepted_on_disclosed_goals(self):
        """公开的目标只要求得到西奈的一部分，第 0 轮方案即被双方接受"""
        casebase = CaseBase(str(self.root))
        transcript = self.run_sinai(casebase)
        self.assertEqual(transcript.outcome, "accepted")
        self.assertEqual(len(transcript.rounds), 1)

        first = transcript.rounds[0]
        self.assertEqual(first.case_id, "orange-dispute")
        self.assertTrue(first.covered)
        self.assertEqual(set(first.proposal.render()),
                         {"(gets egypt military_control)", "(gets israel civilian_control)"})
        self.assertEqual(dict(first.verdicts), {"egypt": ACCEPT, "israel": ACCEPT})
        self.assertEqual(first.deltas, ())

        self.assertEqual(transcript.solved_case.case_id, "sinai-1979")
        expected = ["orange-dispute"] + (["sinai-1979"] if transcript.retained else [])
        self.assertEqual(CaseBase(str(self.root)).ids(), expected)

    def test_rejection_discloses_scheduled_deltas(self):
        """拒绝之后才公开计划中的增量，下一轮的方案随之改变"""
        policies = {agent: replace(policy, rule="always_reject")
                    for agent, policy in self.spec.policies.items()}
        transcript = self.run_sinai(CaseBase(str(self.root)), policies, max_rounds=2)
        self.assertEqual(transcript.outcome, "round_limit")
        first, second = transcript.rounds
        self.assertEqual([agent for agent, _ in first.deltas], ["egypt", "israel"])
        self.assertEqual(second.deltas, ())
        labels = {c.label for c in second.ontology.concepts}
        self.assertTrue({"sovereignty", "security"} <= labels)
        self.assertFalse({"sovereignty", "security"} & {c.label for c in first.ontology.concepts})
        self.assertEqual(set(second.proposal.render()),
                         {"(gets israel military_control)", "(gets egypt civilian_control)"})

    def test_disclosure_is_monotone(self):
        policies = {agent: replace(policy, rule="always_reject")
                    for agent, policy in self.spec.policies.items()}
        transcript = self.run_sinai(CaseBase(str(self.root)), policies, max_rounds=3)
        self.assertEqual(len(transcript.rounds), 3)
        for earlier, later in zip(transcript.rounds, transcript.rounds[1:]):
            self.assertTrue(is_sub_ontology(earlier.ontology, later.ontology))
        self.assertGreater(len(transcript.rounds[1].ontology.relations),
                           len(transcript.rounds[0].ontology.relations))

    def test_rerun_does_not_retain_twice(self):
        self.run_sinai(CaseBase(str(self.root)))
        size = len(CaseBase(str(self.root)))
        casebase = CaseBase(str(self.root))
        transcript = self.run_sinai(casebase)
        self.assertEqual(transcript.outcome, "accepted")
        self.assertFalse(transcript.retained)
        self.assertEqual(len(CaseBase(str(self.root))), size)

    def test_no_precedent(self):
        transcript = self.run_sinai(CaseBase.in_memory())
        self.assertEqual(transcript.outcome, "no_precedent")
        self.assertEqual(len(transcript.rounds), 1)
        self.assertIsNone(transcript.rounds[0].proposal)
        self.assertFalse(transcript.retained)

    def test_round_limit(self):
        policies = {agent: replace(policy, rule="always_reject", reveal=())
                    for agent, policy in self.spec.policies.items()}
        casebase = CaseBase.in_memory([self.orange])
        transcript = self.run_sinai(casebase, policies, max_rounds=3)
        self.assertEqual(transcript.outcome, "round_limit")
        self.assertEqual([r.t for r in transcript.rounds], [0, 1, 2])
        self.assertTrue(all(r.deltas == () for r in transcript.rounds))
        self.assertEqual(len(casebase), 1)

    def test_missing_policy(self):
        with self.assertRaises(OntologyError):
            run_session(self.spec.stances, CaseBase.in_memory(), self.kb, FAST,
                        {"egypt": self.spec.policies["egypt"]}, 3)

    def test_invalid_round_count(self):
        with self.assertRaises(OntologyError):
            self.run_sinai(CaseBase.in_memory(), max_rounds=0)


if __name__ == '__main__':
    unittest.main()
