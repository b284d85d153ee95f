"""
CaseBase 案例库管理类

案例库是一个目录：每个案例一个 .case 文件，外加一个无表头的 index.tsv
（case_id<TAB>domain_tag<TAB>相对路径）。root 为 None 时案例库只存在于内存中。
"""

import logging
import threading
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional

from mediator.core.case_format import load_case, serialize_case
from mediator.core.errors import CaseBaseError, OntologyError
from mediator.core.knowledge_base import SynsetService, tag_case
from mediator.core.ontology import Case, natural_key
from mediator.core.ontology_validator import OntologyValidator

logger = logging.getLogger(__name__)

INDEX_FILE = "index.tsv"


class CaseBase:
    """案例库：读取、追加与索引维护"""

    def __init__(self, root: Optional[str] = None, syn: Optional[SynsetService] = None):
        """
        初始化案例库

        Args:
            root: 案例库目录；为 None 时只在内存中保存
            syn: 给定时从文件读入的案例会补全同义词集
        """
        self.root = Path(root) if root is not None else None
        self.syn = syn
        self._lock = threading.Lock()
        self._cases: Dict[str, Case] = {}
        self._paths: Dict[str, str] = {}
        if self.root is not None:
            self._load()

    @classmethod
    def in_memory(cls, cases: Iterable[Case] = ()) -> "CaseBase":
        casebase = cls(None)
        for case in cases:
            casebase.add(case)
        return casebase

    @property
    def index_path(self) -> Optional[Path]:
        return self.root / INDEX_FILE if self.root is not None else None

    def _load(self):
        """读取 index.tsv 及其列出的全部案例"""
        index_path = self.index_path
        if not index_path.exists():
            return
        try:
            lines = index_path.read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise CaseBaseError(f"无法读取索引: {e}", path=str(index_path)) from e

        for number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise CaseBaseError(f"第 {number} 行需要 3 个字段", path=str(index_path))
            case_id, domain_tag, relative = fields
            case = self._read(self.root / relative)
            if case.case_id != case_id:
                raise CaseBaseError(
                    f"第 {number} 行的 id '{case_id}' 与文件中的 '{case.case_id}' 不一致",
                    path=str(index_path))
            if not case.solution:
                raise CaseBaseError(f"案例 '{case_id}' 没有解", path=str(self.root / relative))
            self._cases[case_id] = case
            self._paths[case_id] = relative
        logger.info(f"案例库 {self.root} 已加载 {len(self._cases)} 个案例")

    def _read(self, path) -> Case:
        case = load_case(path)
        return tag_case(case, self.syn) if self.syn is not None else case

    def __len__(self) -> int:
        return len(self._cases)

    def __contains__(self, case_id: str) -> bool:
        return case_id in self._cases

    def __iter__(self) -> Iterator[Case]:
        return iter([self._cases[cid] for cid in self.ids()])

    def ids(self) -> List[str]:
        return sorted(self._cases, key=natural_key)

    def get(self, case_id: str) -> Case:
        try:
            return self._cases[case_id]
        except KeyError:
            raise CaseBaseError(f"案例 '{case_id}' 不存在") from None

    def by_domain(self) -> Dict[str, List[Case]]:
        """按领域标签分组"""
        groups: Dict[str, List[Case]] = {}
        for case in self:
            groups.setdefault(case.domain_tag, []).append(case)
        return dict(sorted(groups.items()))

    def add(self, case: Case) -> bool:
        """追加一个已解决案例；id 已存在时不做任何事并返回 False"""
        if not case.solution:
            raise OntologyError(f"案例 '{case.case_id}' 没有解，不能放入案例库")
        if not OntologyValidator.LABEL_PATTERN.fullmatch(case.case_id):
            raise CaseBaseError(f"案例 id '{case.case_id}' 不能用作文件名，须匹配 "
                                f"{OntologyValidator.LABEL_PATTERN.pattern}")
        if any(ch in case.domain_tag for ch in "\t\r\n"):
            raise CaseBaseError(f"案例 '{case.case_id}' 的领域标签不能含制表符或换行")
        with self._lock:
            if case.case_id in self._cases:
                return False
            text = serialize_case(case)
            if self.root is not None:
                relative = f"{case.case_id}.case"
                self._write(self.root / relative, text)
                self._paths[case.case_id] = relative
            self._cases[case.case_id] = case
            if self.root is not None:
                self._save_index()
        logger.info(f"案例 '{case.case_id}' 已加入案例库")
        return True

    def add_file(self, path) -> Case:
        """从 .case 文件追加案例"""
        case = self._read(path)
        if case.case_id in self._cases:
            raise CaseBaseError(f"案例 '{case.case_id}' 已存在", path=str(path))
        self.add(case)
        return case

    def _write(self, path: Path, text: str):
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        except OSError as e:
            raise CaseBaseError(f"无法写入: {e}", path=str(path)) from e

    def _save_index(self):
        rows = [f"{cid}\t{self._cases[cid].domain_tag}\t{self._paths[cid]}" for cid in self.ids()]
        self._write(self.index_path, "\n".join(rows) + "\n" if rows else "")


def open_casebase(root, syn: Optional[SynsetService] = None) -> CaseBase:
    """打开案例库目录，目录不存在时报错"""
    path = Path(root)
    if not path.is_dir():
        raise CaseBaseError("案例库目录不存在", path=str(path))
    return CaseBase(str(path), syn)
