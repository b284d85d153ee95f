"""
mediator analogize
"""
from pathlib import Path
from typing import Optional

import typer

from mediator.cli_commands.common import (CONFIG_OPTION_HELP, KB_OPTION_HELP, fail,
                                          open_config, open_kb, read_ontology)
from mediator.core.errors import MediatorError
from mediator.core.reports import render_gmaps
from mediator.core.sme import compute_gmaps


def analogize(
    base: Path = typer.Argument(..., help="基域本体（.onto 或 .case）"),
    target: Path = typer.Argument(..., help="目标域本体（.onto 或 .case）"),
    kb: Optional[Path] = typer.Option(None, "--kb", help=KB_OPTION_HELP),
    limit: Optional[int] = typer.Option(None, "--limit", "-n", min=1, help="只显示前 N 个 gmap"),
    config: Optional[Path] = typer.Option(None, "--config", help=CONFIG_OPTION_HELP),
):
    """
    在两个本体之间做结构映射，输出 gmap、ses 与候选推断
    """
    try:
        settings = open_config(config)
        knowledge = open_kb(kb)
        base_ontology = read_ontology(base, knowledge.synset_service)
        target_ontology = read_ontology(target, knowledge.synset_service)
        gmaps = compute_gmaps(base_ontology, target_ontology, knowledge.synset_service, settings.sme)
    except MediatorError as e:
        fail(e)
    typer.echo(render_gmaps(gmaps, base_ontology, target_ontology, limit), nl=False)
