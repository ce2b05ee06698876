"""haarlib: invariant measures on matrix groups, coset spaces and trees.

A numerical and combinatorial toolkit built around translation-invariant
integration: a catalog of matrix groups with explicit invariant densities,
compactly supported polynomial test functions with deterministic quadrature,
property checkers for invariance and modular functions, quotient-space
integration, lattice fundamental domains, and exact index computations for
automorphism groups of regular trees.
"""

from .groups import (Chart, Element, GroupId, MembershipError,
                     SingularParameterError, catalog, default_chart, gl,
                     haar_density, identity, invert, iwasawa_decompose,
                     multiply, real_add, real_mult, sl2, so2, triangular_p)
from .invariance import (CheckReport, check_compact_finiteness,
                         check_left_invariance, check_right_invariance,
                         default_quadrature, det_ad, estimate_modular,
                         modular_closed_form, right_from_left, standard_bumps)
from .measure import (IntegralResult, LinearCombination, QuadratureSpec,
                      QuadratureError, SupportError, TestFunction, bump,
                      chart_mass, integrate, integrate_evaluable, mc_integrate,
                      pairwise_sum, translate, urysohn_bump)
from .quotient import (LatticeSpec, QuotientSpec, SubgroupEmbedding,
                       average_over_h, check_discrete_subgroup_criterion,
                       check_lattice_unimodular, existence_criterion,
                       hyperbolic_invariance_check, hyperbolic_plane_chart,
                       moebius_translate, periodize,
                       projective_angle_instability, quotient_instance,
                       quotient_integrate_lattice, rn_zn, sl2_n_plane,
                       sl2_p_embedding, sl2_so2_quotient, weil_check)
from .trees import (EndDirection, TreeBall, ball_aut_order, busemann,
                    edge_stabilizer_measures_equal, horospherical_modular,
                    ray_word, relabel_cosets, stabilizer_index,
                    van_dantzig_measure)

__version__ = "0.1.0"
