"""
mediator mediate
"""
from pathlib import Path
from typing import Optional

import typer

from mediator.cli_commands.common import (CASEBASE_OPTION_HELP, CONFIG_OPTION_HELP,
                                          KB_OPTION_HELP, fail, open_config, open_kb)
from mediator.core.casebase import open_casebase
from mediator.core.errors import MediatorError
from mediator.core.reports import transcript_text, transcript_tsv
from mediator.core.session import load_session, run_session
from mediator.core.settings import default_casebase_dir


def mediate(
    session: Path = typer.Argument(..., help="会话文件"),
    casebase: Optional[Path] = typer.Option(None, "--casebase", help=CASEBASE_OPTION_HELP),
    kb: Optional[Path] = typer.Option(None, "--kb", help=KB_OPTION_HELP),
    max_rounds: int = typer.Option(5, "--max-rounds", min=1, help="最多进行的轮数"),
    seed: Optional[int] = typer.Option(None, "--seed", help="随机种子"),
    tsv: bool = typer.Option(False, "--tsv", help="输出 TSV 摘要而不是完整记录"),
    config: Optional[Path] = typer.Option(None, "--config", help=CONFIG_OPTION_HELP),
):
    """
    运行脚本化的调解会话并输出会话记录
    """
    try:
        settings = open_config(config).with_cbr(seed=seed)
        knowledge = open_kb(kb)
        spec = load_session(session)
        cases = open_casebase(casebase if casebase is not None else default_casebase_dir(),
                              knowledge.synset_service)
        transcript = run_session(spec.stances, cases, knowledge, settings.cbr, spec.policies,
                                 max_rounds, session_id=spec.session_id,
                                 domain_tag=spec.domain_tag, sme_cfg=settings.sme)
    except MediatorError as e:
        fail(e)
    typer.echo(transcript_tsv(transcript) if tsv else transcript_text(transcript), nl=False)
    if transcript.outcome != "accepted":
        typer.echo(f"调解未达成: {transcript.outcome}", err=True)
        raise typer.Exit(1)
