from .friedrichs import (FriedrichsDivergence, FriedrichsModel, friedrichs_bound_states,
                         friedrichs_density, friedrichs_expansion, friedrichs_I,
                         friedrichs_J, friedrichs_pole, friedrichs_residue,
                         friedrichs_smatrix, friedrichs_w)
from .graph_models import (CrossModel, LassoModel, LoopTwoLeadsModel, PolygonModel,
                           StubModel, cross_condition, lasso_condition, lasso_embedded,
                           loop_two_leads_condition, polygon_effective_size,
                           polygon_floquet_poles, stub_condition, stub_free_poles)
from .twochannel import (BranchAmbiguity, TwoChannelModel, TwoChannelPole, degenerate_split,
                         e1_expansion, e2_expansion, kappa, lifetime, phase_shift,
                         twochannel_amplitude, twochannel_condition, twochannel_poles,
                         twochannel_quartic, twochannel_smatrix)
from .winter import (TruncationWarning, WinterModel, winter_condition, winter_current,
                     winter_decay_law, winter_kernel_denominator, winter_pole_expansion,
                     winter_poles)
