"""
mediator retrieve
"""
from pathlib import Path
from typing import Optional

import typer

from mediator.cli_commands.common import (CASEBASE_OPTION_HELP, CONFIG_OPTION_HELP,
                                          KB_OPTION_HELP, fail, open_config, open_kb)
from mediator.core.case_format import load_case
from mediator.core.casebase import open_casebase
from mediator.core.cbr import CbrEngine
from mediator.core.errors import MediatorError, NoPrecedentError
from mediator.core.knowledge_base import tag_case
from mediator.core.reports import adaptation_text, retrieval_tsv
from mediator.core.settings import default_casebase_dir


def retrieve(
    query: Path = typer.Argument(..., help="查询案例（没有解的 .case 文件）"),
    casebase: Optional[Path] = typer.Option(None, "--casebase", help=CASEBASE_OPTION_HELP),
    kb: Optional[Path] = typer.Option(None, "--kb", help=KB_OPTION_HELP),
    sigma: Optional[float] = typer.Option(None, "--sigma", help="SMatch 阈值 σ"),
    allow_same_domain: bool = typer.Option(False, "--allow-same-domain", help="不做跨领域过滤"),
    seed: Optional[int] = typer.Option(None, "--seed", help="随机种子"),
    workers: Optional[int] = typer.Option(None, "--workers", "-j", help="并行评分的线程数"),
    adapt: bool = typer.Option(False, "--adapt", help="同时改编胜出先例的解"),
    config: Optional[Path] = typer.Option(None, "--config", help=CONFIG_OPTION_HELP),
):
    """
    为查询案例检索最佳先例，输出 TSV 分数表
    """
    try:
        settings = open_config(config).with_cbr(
            sigma=sigma, seed=seed, workers=workers,
            allow_same_domain=True if allow_same_domain else None)
        knowledge = open_kb(kb)
        query_case = tag_case(load_case(query), knowledge.synset_service)
        cases = open_casebase(casebase if casebase is not None else default_casebase_dir(),
                              knowledge.synset_service)
        engine = CbrEngine(knowledge, settings.cbr, settings.sme)
        result = engine.retrieve(query_case, cases)
        adaptation = engine.adapt(query_case, cases.get(result.case_id), result) if adapt else None
    except NoPrecedentError as e:
        if e.table:
            typer.echo(retrieval_tsv(e.table), nl=False)
        fail(e)
    except MediatorError as e:
        fail(e)
    typer.echo(retrieval_tsv(result.table, result.case_id), nl=False)
    if adaptation is not None:
        typer.echo(adaptation_text(adaptation), nl=False)
