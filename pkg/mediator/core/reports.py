"""
文本与 TSV 报告

浮点数一律以 .6f 格式输出，与区域设置无关。
"""

from typing import Iterable, List, Optional, Sequence

from mediator.core.cbr import AdaptationResult, CaseScore
from mediator.core.curve import CurvePoint, CurveSummary
from mediator.core.ontology import Ontology
from mediator.core.session import SessionTranscript
from mediator.core.sme import GMap

RETRIEVAL_HEADER = "case_id\tdomain\tses\tsmatch\tsat\tstatus"
CURVE_HEADER = "seed\teta\tnum_analogies\tmax_ses\tavg_ses"
CURVE_SUMMARY_HEADER = "eta\tnum_analogies\tmax_ses\tavg_ses"
SESSION_HEADER = "round\tcase_id\tproposal\tverdicts\toutcome"


def format_float(value: float) -> str:
    return f"{value:.6f}"


def format_eta(eta: float) -> str:
    return f"{eta:g}"


def render_gmaps(gmaps: Sequence[GMap], base: Ontology, target: Ontology,
                 limit: Optional[int] = None) -> str:
    """analogize 的输出：每个 gmap 的分数、实体对应、匹配的关系与候选推断"""
    lines: List[str] = []
    shown = gmaps if limit is None else gmaps[:limit]
    for index, g in enumerate(shown, start=1):
        lines.append(f"gmap {index}\tses={format_float(g.ses)}\thypotheses={len(g.hypotheses)}")
        for b, t in g.entity_map:
            lines.append(f"  {base.label_of(b)} -> {target.label_of(t)}")
        for h in g.hypotheses:
            left = base.format_relation(base.relation(h.base_relation))
            right = target.format_relation(target.relation(h.target_relation))
            lines.append(f"  match {left} ~ {right}")
        for inference in g.inferences:
            lines.append(f"  infer {inference.render(target)}")
    lines.append(f"# gmaps: {len(gmaps)}")
    return "\n".join(lines) + "\n"


def retrieval_tsv(table: Iterable[CaseScore], winner: Optional[str] = None) -> str:
    rows = [RETRIEVAL_HEADER]
    for row in table:
        rows.append("\t".join([
            row.case_id,
            row.domain_tag,
            format_float(row.ses),
            format_float(row.smatch),
            "true" if row.sat else "false",
            row.status,
        ]))
    if winner is not None:
        rows.append(f"# winner: {winner}")
    return "\n".join(rows) + "\n"


def adaptation_text(adaptation: AdaptationResult) -> str:
    """改编后的方案及 Skolem 落地情况"""
    lines = []
    if adaptation.retrieval_ses is not None:
        lines.append(f"# precedent {adaptation.precedent}\tses={format_float(adaptation.retrieval_ses)}")
    lines.append("# solution")
    lines.extend(adaptation.ontology.format_relation(r) for r in adaptation.grounded_solution)
    lines.append("# grounding")
    lines.extend(adaptation.grounding_report())
    return "\n".join(lines) + "\n"


def curve_tsv(points: Iterable[CurvePoint]) -> str:
    rows = [CURVE_HEADER]
    for p in points:
        rows.append(f"{p.seed}\t{format_eta(p.eta)}\t{p.num_analogies}\t"
                    f"{format_float(p.max_ses)}\t{format_float(p.avg_ses)}")
    return "\n".join(rows) + "\n"


def curve_summary_tsv(summary: Iterable[CurveSummary]) -> str:
    rows = [CURVE_SUMMARY_HEADER]
    for s in summary:
        rows.append(f"{format_eta(s.eta)}\t{format_float(s.num_analogies)}\t"
                    f"{format_float(s.max_ses)}\t{format_float(s.avg_ses)}")
    return "\n".join(rows) + "\n"


def transcript_text(transcript: SessionTranscript) -> str:
    """结构化的会话记录"""
    lines = [f"session {transcript.session_id}"]
    for r in transcript.rounds:
        lines.append(f"round {r.t}")
        lines.append(f"  ontology: {len(r.ontology.concepts)} concepts, "
                     f"{len(r.ontology.relations)} relations")
        if r.proposal is None:
            lines.append("  precedent: -")
            continue
        lines.append(f"  precedent: {r.case_id}")
        for relation in r.proposal.render():
            lines.append(f"  proposal: {relation}")
        lines.append(f"  covered: {'true' if r.covered else 'false'}")
        for agent, verdict in r.verdicts:
            lines.append(f"  verdict {agent}: {verdict}")
        for agent, delta in r.deltas:
            fragment = delta.ontology_fragment
            revealed = " ".join(fragment.format_relation(rel) for rel in fragment.relations)
            lines.append(f"  reveal {agent}: {revealed}")
    lines.append(f"outcome: {transcript.outcome}")
    lines.append(f"retained: {'true' if transcript.retained else 'false'}")
    return "\n".join(lines) + "\n"


def transcript_tsv(transcript: SessionTranscript) -> str:
    rows = [SESSION_HEADER]
    last = len(transcript.rounds) - 1
    for index, r in enumerate(transcript.rounds):
        proposal = "; ".join(r.proposal.render()) if r.proposal is not None else "-"
        verdicts = ",".join(f"{agent}={verdict}" for agent, verdict in r.verdicts) or "-"
        outcome = transcript.outcome if index == last else "continue"
        rows.append(f"{r.t}\t{r.case_id or '-'}\t{proposal}\t{verdicts}\t{outcome}")
    return "\n".join(rows) + "\n"
