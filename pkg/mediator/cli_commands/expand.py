"""
mediator expand
"""
from dataclasses import replace
from pathlib import Path
from typing import Optional

import typer

from mediator.cli_commands.common import (CONFIG_OPTION_HELP, KB_OPTION_HELP, fail,
                                          open_config, open_kb, read_ontology)
from mediator.core.case_format import serialize_ontology
from mediator.core.errors import MediatorError
from mediator.core.expansion import expand as expand_ontology


def expand(
    ontology: Path = typer.Argument(..., help="要扩展的本体（.onto 或 .case）"),
    eta: float = typer.Option(1.0, "--eta", help="扩展因子 η"),
    seed: int = typer.Option(0, "--seed", help="随机种子"),
    kb: Optional[Path] = typer.Option(None, "--kb", help=KB_OPTION_HELP),
    config: Optional[Path] = typer.Option(None, "--config", help=CONFIG_OPTION_HELP),
):
    """
    按常识知识库扩展本体，输出规范化序列化结果
    """
    try:
        settings = open_config(config)
        knowledge = open_kb(kb)
        source = read_ontology(ontology)
        cfg = replace(settings.expansion, eta=eta, seed=seed,
                      eta_max=max(settings.expansion.eta_max, eta))
        result = expand_ontology(source, cfg, knowledge)
    except MediatorError as e:
        fail(e)
    if result.partial:
        typer.echo(f"警告: 知识库只能追加 {len(result.added)}/{result.requested} 个概念", err=True)
    typer.echo(serialize_ontology(result.ontology), nl=False)
