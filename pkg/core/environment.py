"""
环境检查模块
用于检查 Python 版本、数值计算依赖（numpy / scipy / pandas）、jinja2 / colorama，
以及 ROC SVG 模板是否存在
跨平台支持 Windows/macOS/Linux
"""

import importlib
import json
import os
import platform
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from colorama import Fore, Style, init

init(autoreset=True)  # Windows 兼容初始化

REQUIRED_PACKAGES = ['numpy', 'scipy', 'pandas', 'jinja2', 'colorama']

TEMPLATE_PATH = Path(__file__).resolve().parent.parent / 'templates' / 'roc_curve.svg.j2'


class EnvironmentChecker:
    """环境依赖检查器"""

    def __init__(self, template_path: Optional[Path] = None):
        self.system = platform.system()
        self.template_path = Path(template_path) if template_path else TEMPLATE_PATH

    def check_python_version(self) -> Tuple[bool, str]:
        """检查 Python 版本（需要 >= 3.8）"""
        version = sys.version_info
        if version >= (3, 8):
            return True, f"Python {version.major}.{version.minor}.{version.micro}"
        return False, f"Python 版本过低: {version.major}.{version.minor} (需要 >= 3.8)"

    def check_package(self, name: str) -> Tuple[bool, str]:
        """检查依赖包是否可导入"""
        try:
            module = importlib.import_module(name)
        except ImportError:
            return False, f"{name} 未安装"
        return True, f"{name} {getattr(module, '__version__', '')}".strip()

    def check_template(self) -> Tuple[bool, str]:
        """检查 ROC SVG 模板（power --plot 需要）"""
        if self.template_path.is_file():
            return True, f"模板 {self.template_path.name}"
        return False, f"缺少模板: {self.template_path}"

    def detect_environment(self) -> str:
        """检测运行环境"""
        if self.system == 'Windows':
            if os.environ.get('PSModulePath'):
                return 'PowerShell'
            return 'CMD'
        elif self.system == 'Darwin':
            return 'macOS'
        elif self.system == 'Linux':
            if 'microsoft' in platform.uname().release.lower():
                return 'WSL'
            return 'Linux'
        return 'Unknown'

    def get_install_instruction(self, packages: List[str]) -> str:
        """返回平台特定的安装指令"""
        pip = 'pip' if self.detect_environment() in ('PowerShell', 'CMD', 'Unknown') else 'pip3'
        return f"{pip} install {' '.join(packages)}"

    def collect(self) -> Dict[str, Tuple[bool, str]]:
        """运行所有检查，返回 {检查项: (是否通过, 说明)}"""
        checks = {'python': self.check_python_version()}
        for name in REQUIRED_PACKAGES:
            checks[name] = self.check_package(name)
        checks['template'] = self.check_template()
        return checks

    def run_all_checks(self, show_instructions: bool = True) -> bool:
        """
        运行所有环境检查并打印结果

        Args:
            show_instructions: 是否显示安装指令

        Returns:
            所有检查是否通过
        """
        checks = self.collect()
        for passed, message in checks.values():
            mark = f"{Fore.GREEN}✓" if passed else f"{Fore.RED}✗"
            print(f"  {mark}{Style.RESET_ALL} {message}")

        all_passed = all(passed for passed, _ in checks.values())
        missing = [name for name in REQUIRED_PACKAGES if not checks[name][0]]

        if missing and show_instructions:
            print(f"\n{Fore.YELLOW}安装指令:{Style.RESET_ALL}")
            print(f"  检测到运行环境: {Fore.CYAN}{self.detect_environment()}{Style.RESET_ALL}\n")
            print(f"    {self.get_install_instruction(missing)}")

        print()
        return all_passed

    def check_config_file(self, config_path: str) -> Tuple[bool, Optional[str]]:
        """
        检查实验配置文件是否存在且是合法 JSON

        Returns:
            (ok, error_message)
        """
        if not os.path.exists(config_path):
            return False, "文件不存在"
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                json.load(f)
        except json.JSONDecodeError as e:
            return False, f"JSON 格式错误: {e}"
        return True, None
