from pathlib import Path
from typing import Dict, Optional

import typer

from mediator.core.settings import (CASEBASE_DIR_ENV, DEFAULT_CASEBASE_DIR, DEFAULT_KB_DIR,
                                    ENV_FILE, KB_DIR_ENV)


def write_env(env_file: Path, values: Dict[str, str]):
    """更新 .env 中的键，保留其他行"""
    lines = []
    if env_file.exists():
        with open(env_file, 'r', encoding='utf-8') as f:
            lines = f.readlines()

    pending = dict(values)
    for i, line in enumerate(lines):
        key = line.split("=", 1)[0].strip()
        if key in pending:
            lines[i] = f"{key}={pending.pop(key)}\n"
    if lines and not lines[-1].endswith("\n"):
        lines[-1] += "\n"
    lines.extend(f"{key}={value}\n" for key, value in pending.items())

    with open(env_file, 'w', encoding='utf-8') as f:
        f.writelines(lines)


def init_config(
    kb_dir: Optional[Path] = typer.Option(None, "--kb-dir", help="知识库目录，不给出时交互询问"),
    casebase_dir: Optional[Path] = typer.Option(None, "--casebase-dir", help="案例库目录，不给出时交互询问"),
):
    """
    初始化配置：把知识库与案例库目录写入当前目录的 .env
    """
    typer.echo("🔧 Mediator 配置初始化")
    typer.echo("=" * 40)

    env_file = Path.cwd() / ENV_FILE
    if env_file.exists():
        typer.echo(f"📁 发现现有配置文件: {env_file}")
        content = env_file.read_text(encoding='utf-8')
        if f"{KB_DIR_ENV}=" in content or f"{CASEBASE_DIR_ENV}=" in content:
            if kb_dir is None and casebase_dir is None:
                overwrite = typer.confirm("⚠️  已存在目录配置，是否要覆盖？")
                if not overwrite:
                    typer.echo("❌ 配置初始化已取消")
                    return

    if kb_dir is None:
        kb_dir = Path(typer.prompt("知识库目录", default=str(DEFAULT_KB_DIR)))
    if casebase_dir is None:
        casebase_dir = Path(typer.prompt("案例库目录", default=str(DEFAULT_CASEBASE_DIR)))

    if not kb_dir.is_dir():
        typer.echo(f"⚠️  警告: 知识库目录 {kb_dir} 不存在", err=True)

    try:
        write_env(env_file, {KB_DIR_ENV: str(kb_dir), CASEBASE_DIR_ENV: str(casebase_dir)})
        casebase_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        typer.echo(f"❌ 保存配置时发生错误: {e}", err=True)
        raise typer.Exit(2)

    typer.echo(f"\n✅ 配置已保存到 {env_file}")
    typer.echo("\n🚀 快速开始:")
    typer.echo("   mediator analogize a.onto b.onto      # 结构映射")
    typer.echo("   mediator retrieve query.case          # 检索先例")
    typer.echo("   mediator mediate sinai.session        # 运行调解会话")
