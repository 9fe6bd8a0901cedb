"""Rigorous blow-up solutions of polynomial ODEs via compactification."""

from .interval import Interval, DomainError, NoContraction, int_pow, interval_newton_scalar
from .series import TaylorCoeffs, Series, cauchy_product, series_pow, ell1_norm, eval_enclosure
from .compactify import CompactificationSpec, HorizonError
from .field import PolyField, VerifiedEquilibrium, verify_equilibrium, check_nonresonance
from .models import build_example1, build_example2, build_example3, load_model

__version__ = "0.1.0"
from .manifold import ManifoldChart, build_chart, choose_sigma, inward_signs, VerificationFailed
from .integrate import (TaylorIntegrator, TrajectoryEnclosure, LohnerSet, augment_passing_time,
                        extend_manifold, lyapunov_neighborhood, connect_to_source, connect_to_sink,
                        invert_chart, NoEnclosure, DomainExit)
from .blowtime import (TmaxSeries, tmax_chart, total_blowup_time, example1_table, separatrix_scan,
                       scan_summary, ValidityError)
