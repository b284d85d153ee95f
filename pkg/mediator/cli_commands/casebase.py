"""
mediator casebase add / list
"""
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.tree import Tree

from mediator.cli_commands.common import CASEBASE_OPTION_HELP, fail
from mediator.core.casebase import CaseBase, open_casebase
from mediator.core.errors import MediatorError
from mediator.core.settings import default_casebase_dir

console = Console()

casebase_app = typer.Typer(help="案例库管理", no_args_is_help=True)


@casebase_app.command("add", help="把已解决的 .case 文件加入案例库")
def add_case(
    case_file: Path = typer.Argument(..., help="已解决案例文件"),
    casebase: Optional[Path] = typer.Option(None, "--casebase", help=CASEBASE_OPTION_HELP),
):
    root = casebase if casebase is not None else default_casebase_dir()
    try:
        cases = CaseBase(str(root))
        case = cases.add_file(case_file)
    except MediatorError as e:
        fail(e)
    typer.echo(f"已加入案例 '{case.case_id}'（领域 {case.domain_tag or '-'}），案例库共 {len(cases)} 个案例")


@casebase_app.command("list", help="按领域分组显示案例库")
def list_cases(
    casebase: Optional[Path] = typer.Option(None, "--casebase", help=CASEBASE_OPTION_HELP),
):
    root = casebase if casebase is not None else default_casebase_dir()
    try:
        cases = open_casebase(root)
    except MediatorError as e:
        fail(e)
    if not len(cases):
        typer.echo("案例库中还没有任何案例。")
        return
    console.print(build_casebase_tree(cases))


def build_casebase_tree(cases: CaseBase) -> Tree:
    """领域 → 案例 → 当事方与解"""
    tree = Tree(f"📚 [bold cyan]案例库[/bold cyan] ({len(cases)} 个案例)")
    for domain, members in cases.by_domain().items():
        branch = tree.add(f"🌳 [bold]{domain or '(无领域)'}[/bold]")
        for case in members:
            ontology = case.ontology
            node = branch.add(f"📦 {case.case_id} ({len(ontology.concepts)} 概念, "
                              f"{len(ontology.relations)} 关系)")
            agents = ", ".join(ontology.label_of(a) for a in case.agents) or "-"
            node.add(f"当事方: {agents}")
            for relation in case.solution_relations():
                node.add(f"✅ {ontology.format_relation(relation)}")
    return tree
