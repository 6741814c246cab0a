"""Grouped bar charts rendered to standalone SVG.

Every bar carries its value as text, so the numbers survive without a
viewer that reads the SVG geometry.
"""
import logging
from pathlib import Path
from typing import List, Optional, Union

from jinja2 import Environment, FileSystemLoader, select_autoescape

# Set up logging
logger = logging.getLogger(__name__)

TEMPLATES_DIR = Path(__file__).resolve().parent.parent / "templates"
PALETTE = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860",
    "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd", "#2f4b7c", "#a05195",
]
REFERENCE_COLOR = "#222222"

_environment = Environment(
    loader=FileSystemLoader(str(TEMPLATES_DIR)),
    autoescape=select_autoescape(["svg", "svg.j2"]),
    trim_blocks=True,
    lstrip_blocks=True,
)


def _nice_max(vmax: float) -> float:
    if vmax <= 0:
        return 1.0
    # round the axis up to 1, 2 or 5 times a power of ten
    magnitude = 10 ** max(0, len(str(int(vmax))) - 1)
    if vmax < 1:
        magnitude = 0.1 if vmax > 0.1 else 0.01
    base = vmax / magnitude
    for candidate in (1, 2, 5, 10):
        if base <= candidate:
            return candidate * magnitude
    return 10 * magnitude


def grouped_bar_chart_svg(
    title: str,
    categories: List[str],
    series: List[dict],
    y_max: Optional[float] = None,
    width: int = 880,
    height: int = 420,
    tick_count: int = 5,
    decimals: int = 2,
) -> str:
    """Render one group of bars per category, one bar per series.

    Each series is ``{"name": ..., "values": [...]}`` aligned with
    ``categories``; ``None`` values draw no bar and are labelled ``n/a``.
    """
    for item in series:
        if len(item["values"]) != len(categories):
            raise ValueError(f"series {item['name']!r} has {len(item['values'])} values for {len(categories)} categories")

    top, right, bottom, left = 40, 24, 90, 56
    plot_width, plot_height = width - left - right, height - top - bottom
    origin_y = top + plot_height

    values = [v for item in series for v in item["values"] if v is not None]
    axis_max = y_max if y_max is not None else _nice_max(max(values, default=0.0))

    ticks = []
    for i in range(tick_count + 1):
        value = axis_max * i / tick_count
        ticks.append({"y": origin_y - plot_height * i / tick_count, "text": f"{value:.{decimals}f}"})

    group_width = plot_width / max(1, len(categories))
    bar_width = group_width * 0.8 / max(1, len(series))
    groups = []
    for g, category in enumerate(categories):
        start = left + g * group_width + group_width * 0.1
        bars = []
        for s, item in enumerate(series):
            value = item["values"][g]
            bar_height = 0.0 if value is None else plot_height * min(value, axis_max) / axis_max
            bars.append({
                "series": item["name"],
                "x": start + s * bar_width,
                "y": origin_y - bar_height,
                "height": bar_height,
                "color": item.get("color") or _color(s, item),
                "text": "n/a" if value is None else f"{value:.{decimals}f}",
            })
        groups.append({"category": category, "center": left + (g + 0.5) * group_width, "bars": bars})

    columns = 6
    legend = [
        {
            "name": item["name"],
            "color": item.get("color") or _color(s, item),
            "x": left + (s % columns) * (plot_width / columns),
            "y": origin_y + 34 + (s // columns) * 18,
        }
        for s, item in enumerate(series)
    ]

    template = _environment.get_template("grouped_bars.svg.j2")
    return template.render(
        title=title, width=width, height=height, top=top, left=left,
        plot_width=plot_width, origin_y=origin_y, ticks=ticks,
        groups=groups, bar_width=bar_width, legend=legend,
    )


def _color(index: int, item: dict) -> str:
    if item.get("label") == "reference":
        return REFERENCE_COLOR
    return PALETTE[index % len(PALETTE)]


def write_chart(path: Union[str, Path], chart: dict, y_max: Optional[float] = 1.0) -> Path:
    """Write chart data (as built by the morphology audit) to an SVG file"""
    path = Path(path)
    svg = grouped_bar_chart_svg(chart["title"], chart["categories"], chart["series"], y_max=y_max)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg, encoding="utf-8")
    logger.info(f"Wrote chart {path}")
    return path
