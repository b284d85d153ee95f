import logging
import sys

import typer

# 从独立的命令模块中导入命令函数
from mediator.cli_commands.analogize import analogize
from mediator.cli_commands.casebase import casebase_app
from mediator.cli_commands.expand import expand
from mediator.cli_commands.expansion_curve import expansion_curve
from mediator.cli_commands.init_config import init_config
from mediator.cli_commands.kb import kb_app
from mediator.cli_commands.mediate import mediate
from mediator.cli_commands.retrieve import retrieve
from mediator.core.settings import load_environment

# 初始化 Typer 应用
app = typer.Typer(
    name="mediator",
    help="Mediator - 基于类比与案例推理的争端调解命令行工具",
    add_completion=False,
    no_args_is_help=True
)


@app.callback()
def configure(
    verbose: bool = typer.Option(
        False,
        "--verbose",
        "-v",
        help="在 stderr 输出调试日志"
    )
):
    """读取 .env 并配置日志"""
    load_environment()
    if verbose:
        logging.basicConfig(
            level=logging.DEBUG,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
            force=True,
        )


# 将命令注册到 Typer 应用
# 每个命令的实现都委托给对应的模块
app.command("i", help="初始化配置：设置知识库与案例库目录")(init_config)
app.command("analogize", help="在两个本体之间做结构映射")(analogize)
app.command("expand", help="用常识知识库扩展本体")(expand)
app.command("retrieve", help="为查询案例检索最佳先例")(retrieve)
app.command("mediate", help="运行脚本化的调解会话")(mediate)
app.command("expansion-curve", help="统计类比数量与 ses 随 η 的变化")(expansion_curve)
app.add_typer(casebase_app, name="casebase", help="案例库管理")
app.add_typer(kb_app, name="kb", help="常识知识库查询")


def main():
    """主函数"""
    app()


if __name__ == "__main__":
    main()
