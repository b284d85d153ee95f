"""
mediator kb neighbors / lookup
"""
from pathlib import Path
from typing import Optional

import typer

from mediator.cli_commands.common import KB_OPTION_HELP, fail, open_kb
from mediator.core.case_format import serialize_ontology
from mediator.core.errors import MediatorError
from mediator.core.knowledge_base import describe_label, neighbors

kb_app = typer.Typer(help="常识知识库查询", no_args_is_help=True)


@kb_app.command("neighbors", help="输出概念及其全部邻居构成的本体")
def show_neighbors(
    label: str = typer.Argument(..., help="概念标签"),
    kb: Optional[Path] = typer.Option(None, "--kb", help=KB_OPTION_HELP),
):
    try:
        knowledge = open_kb(kb)
        ontology = neighbors(knowledge, label)
    except MediatorError as e:
        fail(e)
    typer.echo(serialize_ontology(ontology), nl=False)


@kb_app.command("lookup", help="查询词的同义词集、上位词与邻居")
def lookup(
    word: str = typer.Argument(..., help="要查询的词"),
    kb: Optional[Path] = typer.Option(None, "--kb", help=KB_OPTION_HELP),
):
    try:
        knowledge = open_kb(kb)
    except MediatorError as e:
        fail(e)
    info = describe_label(knowledge, word)
    typer.echo(f"label\t{info['label']}")
    for synset_id, words in info["synsets"]:
        typer.echo(f"synset\t{synset_id}\t{','.join(words)}")
    for hypernym in info["hypernyms"]:
        typer.echo(f"hypernym\t{hypernym}")
    typer.echo(f"degree\t{info['degree']}")
    for neighbor in info["neighbors"]:
        typer.echo(f"neighbor\t{neighbor}")
