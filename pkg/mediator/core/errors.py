"""
调解引擎的异常层次

库代码只抛出 MediatorError 的子类，由 CLI 层统一翻译为退出码：
领域错误（无先例、规模超限）为 1，格式/用法/配置错误为 2。
"""

from typing import List, Optional, Sequence


class MediatorError(Exception):
    """所有调解引擎错误的基类"""

    exit_code = 2


class OntologyError(MediatorError):
    """本体不满足不变式（引用完整性、id 唯一、无环等）"""


class MergeConflictError(OntologyError):
    """立场合并时出现无法统一的冲突"""

    def __init__(self, message: str, sources: Sequence[str] = ()):
        self.sources = list(sources)
        if self.sources:
            message = f"{message} (来源: {'; '.join(self.sources)})"
        super().__init__(message)


class CaseFormatError(MediatorError):
    """案例文件语法或引用错误，附带行列位置"""

    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None, path: Optional[str] = None):
        self.message = message
        self.line = line
        self.column = column
        self.path = path
        where = []
        if path:
            where.append(str(path))
        if line is not None:
            where.append(f"{line}:{column if column is not None else 0}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class KnowledgeBaseError(MediatorError):
    """常识知识库文件格式错误或上位词成环"""

    def __init__(self, message: str, path: Optional[str] = None,
                 line: Optional[int] = None, cycle: Optional[List[str]] = None):
        self.path = path
        self.line = line
        self.cycle = cycle
        if path is not None and line is not None:
            message = f"{path}:{line}: {message}"
        elif path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class SMESizeError(MediatorError):
    """匹配假设数量超过上限"""

    exit_code = 1

    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"匹配假设数量 {count} 超过上限 {cap}")


class NoPrecedentError(MediatorError):
    """没有任何案例通过检索过滤"""

    exit_code = 1

    def __init__(self, message: str, table=None):
        self.table = list(table or [])
        super().__init__(message)


class CaseBaseError(MediatorError):
    """案例库读写错误"""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ConfigError(MediatorError):
    """配置文件或参数取值非法"""
