"""Differential privacy of Gaussian sketching, and regression built on it."""
from .calibration import CalibrationResult, compare_bounds, eps_tilde, find_gamma, threshold_tau
from .logistic import (BinaryLabeledDataset, fit_quadratic_surrogate, logistic_loss,
                       logistic_mixing, objective_perturbation, surrogate_argmin_exact,
                       surrogate_loss)
from .mechanisms import Branch, DataMatrix, gauss_mix, modified_gauss_mix, private_min_eig
from .rdp import (GaussMixParams, PrivacyBudget, RdpPoint, TcdpParams, exact_renyi_gaussmix,
                  gaussmix_tcdp, phi, rdp_to_dp, tcdp_to_dp)
from .regression import FitResult, LabeledDataset, Method, adassp, linear_mixing, ridge, sheffet_alg
from .rng import RngStream

__version__ = "0.1.0"
