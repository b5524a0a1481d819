__version__ = "0.1.0"

from .certificates import (  # noqa: E402
    Box, LinearProgressFunction, SupermartingaleMap, check_lpf, check_smap, replay,
)
from .lang import load_loop, normalize, parse  # noqa: E402
from .semantics import exact_tail  # noqa: E402
from .simulator import estimate_process_tail, estimate_tail  # noqa: E402
from .synthesis import NotFound, Synthesized, synth_lpf, synth_smap_linear  # noqa: E402
from .tailbounds import BoundInput, bound_diff, bound_general, bound_series  # noqa: E402
