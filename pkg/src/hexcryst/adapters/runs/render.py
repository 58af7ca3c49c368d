import io
from typing import Optional, Sequence

import numpy as np
from matplotlib import colormaps
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.collections import PolyCollection
from matplotlib.colors import Normalize
from matplotlib.figure import Figure
from matplotlib.patches import Polygon, Rectangle

from hexcryst.domain.domain import DomainSpec
from hexcryst.domain.measure import CellPartition

# closeness values at or above this are drawn in the hottest colour
HEAT_MAX = 0.2
HEAT_MAP = 'YlOrRd'
NOT_HEXAGON_COLOR = '#9e9e9e'


def cell_colors(closeness: Sequence[float]):
    """Heat colour per cell; cells with an edge count other than six are grey."""
    cmap = colormaps[HEAT_MAP]
    norm = Normalize(0.0, HEAT_MAX, clip=True)
    return [NOT_HEXAGON_COLOR if not np.isfinite(eps) else cmap(norm(eps)) for eps in closeness]


def render_partition(domain: DomainSpec, partition: CellPartition, closeness: Sequence[float],
                     title: Optional[str] = None) -> str:
    """SVG drawing of the domain outline, the cells coloured by hexagon closeness and the sites."""
    fig = Figure(figsize=(6, 6))
    FigureCanvasSVG(fig)
    ax = fig.add_subplot(1, 1, 1)
    cells = [(c.vertices, color) for c, color in zip(partition.cells, cell_colors(closeness)) if c is not None]
    collection = PolyCollection([v for v, _ in cells], facecolors=[col for _, col in cells],
                                edgecolors='black', linewidths=0.6)
    ax.add_collection(collection)
    pts = partition.points
    ax.scatter(pts[:, 0], pts[:, 1], s=4, c='black', zorder=3)

    xmin, ymin, xmax, ymax = domain.bounding_box()
    if domain.is_torus:
        ax.add_patch(Rectangle((xmin, ymin), xmax - xmin, ymax - ymin, fill=False, edgecolor='blue', linewidth=1.2))
    else:
        ax.add_patch(Polygon(domain.scaled.vertices, closed=True, fill=False, edgecolor='blue', linewidth=1.2))
    pad_x, pad_y = 0.05 * (xmax - xmin), 0.05 * (ymax - ymin)
    ax.set_xlim(xmin - pad_x, xmax + pad_x)
    ax.set_ylim(ymin - pad_y, ymax + pad_y)
    ax.set_aspect('equal')
    if title:
        ax.set_title(title)
    buf = io.StringIO()
    fig.savefig(buf, format='svg', metadata={'Date': None})
    return buf.getvalue()
