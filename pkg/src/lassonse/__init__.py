"""Noise sensitivity of the generalized LASSO.

Closed-form and Monte-Carlo geometry of structured signals, NSE predictions
for the constrained, l2 and l2^2 LASSO, and seeded simulations that check
them.
"""

from .geometry import (ConeSummary, GeometrySummary, bound_table, closed_form_summary,
                       mc_cone, mc_summary)
from .models import Kind, SignalModel, make_model, model_from_dict
from .regimes import (Program, Region, RegimeReport, classify, map_inverse, map_lambda,
                      predict_nse, predict_nse_ls, regime_report, tau_best,
                      translate_variance)
from .solvers import generate, nse, solve_classo, solve_ell2, solve_ell22

__version__ = "0.1.0"
