#!/usr/bin/env python3
"""
文件操作工具模块

所有结果文件都先写入同目录下的临时文件，再通过 rename 原子替换，
中断的运行不会留下被截断的报告。
"""

import json
import os
import tempfile
from datetime import datetime
from pathlib import Path
from typing import Any, Union

PathLike = Union[str, Path]


def get_timestamped_name(prefix: str, suffix: str = '') -> str:
    """
    生成带时间戳的文件名或目录名

    Args:
        prefix: 名称前缀（如 'power_study'）
        suffix: 扩展名（如 '.json'），目录名留空

    Returns:
        格式: {prefix}_YYYYMMDD_HHMMSS{suffix}

    Example:
        >>> get_timestamped_name('power_study')
        'power_study_20260116_143025'
    """
    timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
    return f'{prefix}_{timestamp}{suffix}'


def atomic_write_text(path: PathLike, text: str, encoding: str = 'utf-8') -> Path:
    """
    原子写入文本文件

    Args:
        path: 目标路径（父目录不存在时自动创建）
        text: 文件内容

    Returns:
        目标路径
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f'.{path.name}.', suffix='.tmp', dir=str(path.parent))
    try:
        with os.fdopen(fd, 'w', encoding=encoding, newline='') as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise
    return path


def atomic_write_json(path: PathLike, data: Any) -> Path:
    """原子写入 JSON（键顺序保持插入顺序，保证同样的数据得到同样的字节）"""
    text = json.dumps(data, indent=2, ensure_ascii=False, default=str)
    return atomic_write_text(path, text + '\n')
