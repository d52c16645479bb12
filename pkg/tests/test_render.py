import re

import numpy as np

from vtspline.odo_core import Odo
from vtspline.render import raster, render_decomposition, render_spline
from vtspline.tensor_spline import TensorAtom, make_spline

O1 = Odo(0.0, 1)


def _spline():
    return make_spline(
        O1,
        O1,
        [
            TensorAtom.tensor_green(1.0, 0.25, 0.25),
            TensorAtom.tensor_green(-2.0, 0.5, 0.75),
            TensorAtom.poly_green(1, 0.5, 0.5),
            TensorAtom.green_poly(1, 0.5, 0.6),
            TensorAtom.poly_poly(1, 1, 0.1),
        ],
    )


def test_empty_spline_renders_background_only():
    svg = render_spline(make_spline(O1, O1, []), res=16)
    rects = re.findall(r"<rect [^>]*>", svg)
    assert len(rects) == 2  # background and domain outline
    assert 'class="domain"' in svg


def test_markers():
    svg = render_spline(_spline(), res=32)
    assert svg.count('class="knot-tg"') == 2
    assert svg.count('class="knot-pg"') == 1
    assert svg.count('class="knot-gp"') == 1


def test_raster_orientation_and_values():
    s = make_spline(O1, O1, [TensorAtom.tensor_green(1.0, 0.5, 0.5)])
    r = raster(s, (0.0, 1.0, 0.0, 1.0), 4)
    # row 0 is the top of the window: upper-right quadrant is lit
    np.testing.assert_array_equal(r, [[0, 0, 1, 1], [0, 0, 1, 1], [0, 0, 0, 0], [0, 0, 0, 0]])


def test_decomposition_has_four_panels_and_is_deterministic():
    a = render_decomposition(_spline(), res=24)
    b = render_decomposition(_spline(), res=24)
    assert a == b
    assert [m for m in re.findall(r'id="panel-(\d)"', a)] == ["0", "1", "2", "3"]
    assert a.startswith("<svg") and a.rstrip().endswith("</svg>")
