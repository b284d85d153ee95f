"""
带位置信息的 s-表达式读取器

只支持案例文件需要的子集：列表、记号、双引号字符串和 ; 行注释。
每个节点都记录起始行列，方便错误信息定位。
"""

from bisect import bisect_right
from dataclasses import dataclass
from typing import List, Tuple, Union

from mediator.core.errors import CaseFormatError


@dataclass(frozen=True)
class Atom:
    """记号或字符串"""
    value: str
    line: int
    column: int
    quoted: bool = False

    @property
    def is_keyword(self) -> bool:
        return not self.quoted and self.value.startswith(":") and len(self.value) > 1

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SList:
    """括号列表"""
    items: Tuple["Node", ...]
    line: int
    column: int

    @property
    def head(self) -> str:
        if self.items and isinstance(self.items[0], Atom):
            return self.items[0].value
        return ""

    def __len__(self):
        return len(self.items)


Node = Union[Atom, SList]

_DELIMITERS = "();\""


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self._line_starts = [0]
        for index, char in enumerate(text):
            if char == "\n":
                self._line_starts.append(index + 1)

    def where(self, offset: int) -> Tuple[int, int]:
        line = bisect_right(self._line_starts, offset)
        return line, offset - self._line_starts[line - 1] + 1

    def error(self, message: str, offset: int) -> CaseFormatError:
        line, column = self.where(offset)
        return CaseFormatError(message, line=line, column=column)

    def skip_whitespace(self):
        text = self.text
        while self.pos < len(text):
            char = text[self.pos]
            if char == ";":
                while self.pos < len(text) and text[self.pos] != "\n":
                    self.pos += 1
            elif char.isspace():
                self.pos += 1
            else:
                return

    def read(self) -> Node:
        self.skip_whitespace()
        if self.pos >= len(self.text):
            raise self.error("输入意外结束", self.pos)
        char = self.text[self.pos]
        if char == "(":
            return self.read_list()
        if char == ")":
            raise self.error("多余的右括号", self.pos)
        if char == "\"":
            return self.read_string()
        return self.read_token()

    def read_list(self) -> SList:
        start = self.pos
        self.pos += 1
        items: List[Node] = []
        while True:
            self.skip_whitespace()
            if self.pos >= len(self.text):
                raise self.error("括号未闭合", start)
            if self.text[self.pos] == ")":
                self.pos += 1
                line, column = self.where(start)
                return SList(tuple(items), line, column)
            items.append(self.read())

    def read_string(self) -> Atom:
        start = self.pos
        self.pos += 1
        chars = []
        while self.pos < len(self.text):
            char = self.text[self.pos]
            if char == "\\" and self.pos + 1 < len(self.text):
                chars.append(self.text[self.pos + 1])
                self.pos += 2
                continue
            if char == "\"":
                self.pos += 1
                line, column = self.where(start)
                return Atom("".join(chars), line, column, quoted=True)
            chars.append(char)
            self.pos += 1
        raise self.error("字符串未闭合", start)

    def read_token(self) -> Atom:
        start = self.pos
        text = self.text
        while self.pos < len(text) and not text[self.pos].isspace() and text[self.pos] not in _DELIMITERS:
            self.pos += 1
        line, column = self.where(start)
        return Atom(text[start:self.pos], line, column)


def read_all(text: str) -> List[Node]:
    """读取文本中的全部顶层表达式"""
    reader = _Reader(text)
    nodes = []
    while True:
        reader.skip_whitespace()
        if reader.pos >= len(text):
            return nodes
        nodes.append(reader.read())


def read_one(text: str, what: str = "表达式") -> SList:
    """读取恰好一个顶层列表"""
    nodes = read_all(text)
    if not nodes:
        raise CaseFormatError(f"文本中没有{what}", line=1, column=1)
    if len(nodes) > 1:
        extra = nodes[1]
        raise CaseFormatError(f"{what}之后还有多余内容", line=extra.line, column=extra.column)
    if not isinstance(nodes[0], SList):
        raise CaseFormatError(f"{what}必须是括号列表", line=nodes[0].line, column=nodes[0].column)
    return nodes[0]


def quote_token(value: str) -> str:
    """记号中含空白或分隔符时写成字符串"""
    if value and not any(ch.isspace() or ch in _DELIMITERS for ch in value):
        return value
    escaped = value.replace("\\", "\\\\").replace("\"", "\\\"")
    return f"\"{escaped}\""
