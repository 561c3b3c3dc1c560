"""Forecaster implementations behind one contract.

Four model families share the fit / predict / size_bytes surface:

* vector autoregression (:mod:`flowcast.models.var`)
* damped Holt-Winters (:mod:`flowcast.models.holtwinters`)
* recursive random projection regression (:mod:`flowcast.models.rrp`)
* bit-level binary decision tree (:mod:`flowcast.models.bdt`)

Model size is always the byte length of the canonical serialization, a
length-prefixed little-endian binary framing defined in ``base``.
"""

from .base import Forecaster, load_model
from .var import VarModel, var_fit, var_forecast, VarForecaster
from .holtwinters import HwForecaster
from .rrp import RrpTree, rrp_fit, rrp_predict, RrpForecaster
from .bdt import (
    BitDecisionTree,
    bdt_fit,
    bdt_predict,
    BdtForecaster,
    tree_to_text,
    tree_from_text,
)

__all__ = [
    "Forecaster",
    "load_model",
    "VarModel",
    "var_fit",
    "var_forecast",
    "VarForecaster",
    "HwForecaster",
    "RrpTree",
    "rrp_fit",
    "rrp_predict",
    "RrpForecaster",
    "BitDecisionTree",
    "bdt_fit",
    "bdt_predict",
    "BdtForecaster",
    "tree_to_text",
    "tree_from_text",
]
