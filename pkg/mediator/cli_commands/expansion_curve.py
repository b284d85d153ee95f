"""
mediator expansion-curve
"""
from pathlib import Path
from typing import Optional

import typer

from mediator.cli_commands.common import (CONFIG_OPTION_HELP, KB_OPTION_HELP, fail,
                                          open_config, open_kb, read_ontology)
from mediator.core.curve import expansion_curve as compute_curve
from mediator.core.curve import summarize_curve
from mediator.core.errors import MediatorError
from mediator.core.reports import curve_summary_tsv, curve_tsv


def expansion_curve(
    base: Path = typer.Argument(..., help="基域本体"),
    target: Path = typer.Argument(..., help="被扩展的目标域本体"),
    kb: Optional[Path] = typer.Option(None, "--kb", help=KB_OPTION_HELP),
    eta_max: float = typer.Option(6.0, "--eta-max", help="最大扩展因子"),
    seeds: int = typer.Option(20, "--seeds", min=1, help="种子个数"),
    seed: int = typer.Option(0, "--seed", help="第一个种子，其余依次加一"),
    independent: bool = typer.Option(False, "--independent", help="每个 η 独立抽样而不是嵌套扩展"),
    summary: bool = typer.Option(False, "--summary", help="输出按 η 平均后的汇总"),
    config: Optional[Path] = typer.Option(None, "--config", help=CONFIG_OPTION_HELP),
):
    """
    统计 η = 1..η_max 时的类比数量与 ses，输出 TSV
    """
    try:
        settings = open_config(config)
        knowledge = open_kb(kb)
        base_ontology = read_ontology(base, knowledge.synset_service)
        target_ontology = read_ontology(target, knowledge.synset_service)
        points = compute_curve(base_ontology, target_ontology, knowledge, eta_max,
                               range(seed, seed + seeds), independent, settings.sme,
                               settings.expansion.max_attempts_factor)
    except MediatorError as e:
        fail(e)
    if summary:
        typer.echo(curve_summary_tsv(summarize_curve(points)), nl=False)
    else:
        typer.echo(curve_tsv(points), nl=False)
