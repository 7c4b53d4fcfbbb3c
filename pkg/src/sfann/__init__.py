"""Graph-based (1+eps)-approximate nearest neighbor search whose query cost
does not depend on the spread of the data."""

from .bench import QueryEngine
from .errors import ConfigError, FormatError, InputError
from .metric import PointSet, brute_force_nn, gen_dataset
from .multires import MultiResIndex, build_multires
from .search import SpreadFreeIndex, bootstrap_query

__all__ = [
    "ConfigError",
    "FormatError",
    "InputError",
    "MultiResIndex",
    "PointSet",
    "QueryEngine",
    "SpreadFreeIndex",
    "bootstrap_query",
    "brute_force_nn",
    "build_multires",
    "gen_dataset",
]
__version__ = "0.1.0"
