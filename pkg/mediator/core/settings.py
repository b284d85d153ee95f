"""
全局路径与配置

默认路径可以用 .env 或环境变量覆盖；数值参数可以放在 YAML 配置文件里，
命令行参数再覆盖文件中的值。
"""

import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from mediator.core.cbr import CbrConfig
from mediator.core.errors import ConfigError
from mediator.core.expansion import ExpansionConfig
from mediator.core.sme import SMEConfig

logger = logging.getLogger(__name__)

PACKAGE_DIR = Path(__file__).resolve().parent.parent
FIXTURES_DIR = PACKAGE_DIR / "fixtures"
WORKSPACE_DIR = Path("workspace")

DEFAULT_KB_DIR = FIXTURES_DIR / "kb"
DEFAULT_CASEBASE_DIR = WORKSPACE_DIR / "casebase"

KB_DIR_ENV = "MEDIATOR_KB_DIR"
CASEBASE_DIR_ENV = "MEDIATOR_CASEBASE_DIR"
ENV_FILE = ".env"


def load_environment(env_file: Optional[Path] = None) -> bool:
    """读取 .env，已存在的环境变量优先"""
    path = Path(env_file) if env_file is not None else Path.cwd() / ENV_FILE
    if not path.exists():
        return False
    return load_dotenv(path, override=False)


def default_kb_dir() -> Path:
    return Path(os.getenv(KB_DIR_ENV) or DEFAULT_KB_DIR)


def default_casebase_dir() -> Path:
    return Path(os.getenv(CASEBASE_DIR_ENV) or DEFAULT_CASEBASE_DIR)


@dataclass(frozen=True)
class MediatorConfig:
    """配置文件的三个段"""
    sme: SMEConfig = field(default_factory=SMEConfig)
    expansion: ExpansionConfig = field(default_factory=ExpansionConfig)
    cbr: CbrConfig = field(default_factory=CbrConfig)

    def validate(self) -> "MediatorConfig":
        self.sme.validate()
        self.expansion.validate()
        self.cbr.validate()
        return self

    def with_cbr(self, **overrides) -> "MediatorConfig":
        """用命令行参数覆盖 cbr 段，值为 None 的参数忽略"""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, cbr=replace(self.cbr, **changes)).validate()


_SECTIONS = {
    "sme": SMEConfig,
    "expansion": ExpansionConfig,
    "cbr": CbrConfig,
}


def _section(name: str, raw: Any):
    cls = _SECTIONS[name]
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"配置段 '{name}' 必须是映射")
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"配置段 '{name}' 含未知键: {', '.join(map(str, unknown))}")
    try:
        return cls(**raw)
    except TypeError as e:
        raise ConfigError(f"配置段 '{name}' 无效: {e}") from e


def parse_config(data: Optional[Dict[str, Any]]) -> MediatorConfig:
    if data is None:
        return MediatorConfig()
    if not isinstance(data, dict):
        raise ConfigError("配置文件顶层必须是映射")
    unknown = sorted(set(data) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"未知配置段: {', '.join(map(str, unknown))}")
    config = MediatorConfig(**{name: _section(name, data.get(name)) for name in _SECTIONS})
    return config.validate()


def load_config(path: Optional[Path] = None) -> MediatorConfig:
    """读取 YAML 配置文件；path 为 None 时返回默认配置"""
    if path is None:
        return MediatorConfig()
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"无法读取配置文件 {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"配置文件 {path} 不是合法的 YAML: {e}") from e
    config = parse_config(data)
    logger.info(f"已加载配置文件 {path}")
    return config
