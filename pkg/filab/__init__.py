"""Numerical laboratory for log-Sobolev inequalities and curvature of finite reversible Markov chains"""

from filab.chain import ChainSpec, Observable, load_chain, save_chain, validate_chain
from filab.constants import solve_tls, solve_tmls
from filab.curvature import bakry_emery_kappa, ollivier_kappa, wasserstein1
from filab.generators import FamilyParams, make_chain
from filab.verify import check_lemmas, check_theorems, conjecture_probe, verify_chain
