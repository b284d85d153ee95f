"""
配置文件与环境变量的单元测试
"""

import os
import shutil
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import sys
sys.path.append(str(Path(__file__).parent.parent.parent))

from mediator.core.errors import ConfigError
from mediator.core.settings import (CASEBASE_DIR_ENV, DEFAULT_KB_DIR, KB_DIR_ENV, MediatorConfig,
                                    default_casebase_dir, default_kb_dir, load_config,
                                    load_environment, parse_config)


class TestConfigFile(unittest.TestCase):
    """YAML 配置"""

    def setUp(self):
        """测试前准备"""
        self.temp_dir = Path(tempfile.mkdtemp())

    def tearDown(self):
        """测试后清理"""
        shutil.rmtree(self.temp_dir)

    def write(self, text: str) -> Path:
        path = self.temp_dir / "mediator.yaml"
        path.write_text(text, encoding="utf-8")
        return path

    def test_defaults(self):
        config = load_config(None)
        self.assertEqual(config.sme.w_rel, 1.0)
        self.assertEqual(config.cbr.sigma, 0.3)
        self.assertEqual(config.cbr.theta, 0.8)
        self.assertEqual(config.expansion.eta_max, 6.0)

    def test_partial_sections(self):
        config = load_config(self.write("sme:\n  w_sys: 0.4\ncbr:\n  samples_per_eta: 3\n"))
        self.assertEqual(config.sme.w_sys, 0.4)
        self.assertEqual(config.sme.w_label, 0.5)
        self.assertEqual(config.cbr.samples_per_eta, 3)
        self.assertEqual(config.expansion, MediatorConfig().expansion)

    def test_empty_file(self):
        self.assertEqual(load_config(self.write("")), MediatorConfig())

    def test_unknown_key(self):
        with self.assertRaises(ConfigError) as ctx:
            load_config(self.write("cbr:\n  sigmaa: 0.2\n"))
        self.assertIn("sigmaa", str(ctx.exception))

    def test_unknown_section(self):
        with self.assertRaises(ConfigError):
            parse_config({"retrieval": {}})

    def test_out_of_range(self):
        with self.assertRaises(ConfigError):
            parse_config({"cbr": {"theta": 2}})

    def test_invalid_yaml(self):
        with self.assertRaises(ConfigError):
            load_config(self.write("cbr: [unclosed\n"))

    def test_missing_file(self):
        with self.assertRaises(ConfigError) as ctx:
            load_config(self.temp_dir / "nope.yaml")
        self.assertEqual(ctx.exception.exit_code, 2)

    def test_command_line_overrides(self):
        config = MediatorConfig().with_cbr(sigma=0.5, seed=None, workers=2)
        self.assertEqual(config.cbr.sigma, 0.5)
        self.assertEqual(config.cbr.seed, 0)
        self.assertEqual(config.cbr.workers, 2)
        with self.assertRaises(ConfigError):
            MediatorConfig().with_cbr(sigma=3.0)


class TestEnvironment(unittest.TestCase):
    """.env 与环境变量"""

    def setUp(self):
        """测试前准备"""
        self.temp_dir = Path(tempfile.mkdtemp())

    def tearDown(self):
        """测试后清理"""
        shutil.rmtree(self.temp_dir)

    def test_defaults_without_environment(self):
        with mock.patch.dict(os.environ, {}, clear=True):
            self.assertEqual(default_kb_dir(), DEFAULT_KB_DIR)
            self.assertEqual(default_casebase_dir(), Path("workspace") / "casebase")

    def test_env_file(self):
        env_file = self.temp_dir / ".env"
        env_file.write_text(f"{KB_DIR_ENV}=/data/kb\n{CASEBASE_DIR_ENV}=/data/cases\n", encoding="utf-8")
        with mock.patch.dict(os.environ, {}, clear=True):
            self.assertTrue(load_environment(env_file))
            self.assertEqual(default_kb_dir(), Path("/data/kb"))
            self.assertEqual(default_casebase_dir(), Path("/data/cases"))

    def test_existing_variables_win(self):
        env_file = self.temp_dir / ".env"
        env_file.write_text(f"{KB_DIR_ENV}=/data/kb\n", encoding="utf-8")
        with mock.patch.dict(os.environ, {KB_DIR_ENV: "/shell/kb"}, clear=True):
            load_environment(env_file)
            self.assertEqual(default_kb_dir(), Path("/shell/kb"))

    def test_missing_env_file(self):
        self.assertFalse(load_environment(self.temp_dir / "absent.env"))


if __name__ == '__main__':
    unittest.main()
