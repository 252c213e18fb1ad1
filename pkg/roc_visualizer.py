#!/usr/bin/env python3
"""
ROC Curve Visualizer

将 RocSummary 渲染为 SVG（折线 + 坐标轴 + AUC 标注），模板位于 templates/roc_curve.svg.j2
"""

from pathlib import Path
from typing import Dict, List, Union

from jinja2 import Environment, FileSystemLoader, select_autoescape

from core.file_utils import atomic_write_text
from core.roc_analysis import RocSummary

TEMPLATE_NAME = 'roc_curve.svg.j2'


class RocVisualizer:
    """ROC 曲线 SVG 生成器"""

    def __init__(self, width: int = 480, height: int = 480, margin: int = 56, debug: bool = False):
        """
        Args:
            width: 画布宽度（像素）
            height: 画布高度（像素）
            margin: 绘图区四周留白
            debug: 是否启用调试模式
        """
        self.width = width
        self.height = height
        self.margin = margin
        self.debug = debug

        template_dir = Path(__file__).parent / 'templates'
        self.env = Environment(
            loader=FileSystemLoader(str(template_dir)),
            autoescape=select_autoescape(['svg', 'j2'])
        )

    @property
    def plot_box(self) -> Dict[str, int]:
        return {
            'left': self.margin,
            'right': self.width - self.margin // 2,
            'top': self.margin // 2,
            'bottom': self.height - self.margin,
        }

    def _project(self, fpr: float, tpr: float) -> str:
        box = self.plot_box
        x = box['left'] + fpr * (box['right'] - box['left'])
        y = box['bottom'] - tpr * (box['bottom'] - box['top'])
        return f'{x:.2f},{y:.2f}'

    def _ticks(self) -> List[Dict]:
        box = self.plot_box
        ticks = []
        for k in range(6):
            value = k / 5
            ticks.append({
                'label': f'{value:.1f}',
                'x': round(box['left'] + value * (box['right'] - box['left']), 2),
                'y': round(box['bottom'] - value * (box['bottom'] - box['top']), 2),
            })
        return ticks

    def render_svg(self, summary: RocSummary, title: str = 'ROC') -> str:
        """渲染 SVG 文本"""
        points = ' '.join(self._project(p.fpr, p.tpr) for p in summary.curve)
        template = self.env.get_template(TEMPLATE_NAME)
        return template.render(
            width=self.width,
            height=self.height,
            ticks=self._ticks(),
            points=points,
            summary=summary,
            title=title,
            **self.plot_box,
        )

    def save_svg(self, summary: RocSummary, output_file: Union[str, Path], title: str = 'ROC') -> Path:
        """渲染并原子写入 SVG 文件"""
        if self.debug:
            print(f"[DEBUG] Rendering ROC curve ({len(summary.curve)} points) to: {output_file}")
        return atomic_write_text(output_file, self.render_svg(summary, title=title))
