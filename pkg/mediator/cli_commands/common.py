"""
各子命令共用的加载与错误处理
"""

import logging
from pathlib import Path
from typing import Optional

import typer

from mediator.core.case_format import load_case, load_ontology
from mediator.core.errors import MediatorError
from mediator.core.knowledge_base import KnowledgeBase, SynsetService, load_kb_dir, tag_synsets
from mediator.core.ontology import Ontology
from mediator.core.settings import MediatorConfig, default_kb_dir, load_config

logger = logging.getLogger(__name__)

KB_OPTION_HELP = "知识库目录（默认读取 MEDIATOR_KB_DIR，否则使用内置样例）"
CASEBASE_OPTION_HELP = "案例库目录（默认读取 MEDIATOR_CASEBASE_DIR）"
CONFIG_OPTION_HELP = "YAML 配置文件"


def fail(error: MediatorError):
    """把库异常翻译成退出码，诊断信息写到 stderr"""
    typer.echo(f"错误: {error}", err=True)
    raise typer.Exit(error.exit_code)


def open_kb(kb_dir: Optional[Path]) -> KnowledgeBase:
    directory = kb_dir if kb_dir is not None else default_kb_dir()
    logger.debug(f"使用知识库目录 {directory}")
    return load_kb_dir(directory)


def open_config(config: Optional[Path]) -> MediatorConfig:
    return load_config(config)


def read_ontology(path: Path, syn: Optional[SynsetService] = None) -> Ontology:
    """.case 文件取其本体，其他文件按 (ontology ...) 读取；给定 syn 时补全同义词集"""
    ontology = load_case(path).ontology if path.suffix == ".case" else load_ontology(path)
    return tag_synsets(ontology, syn) if syn is not None else ontology
