"""finslerkit: connection and curvature of Finsler metrics from exact Taylor jets.

Modules
-------
jets        truncated multivariate Taylor arithmetic (forward mode, order <= 4)
metrics     Riemannian, Randers and warped-product metric families
geometry    fundamental tensor, spray, connections, flag and h-curvature
geodesics   RK4 geodesics, parallel frames and along-geodesic checks
oracles     finite-difference and classical Christoffel cross-checks
suites      named verification suites; ``report`` serializes their output
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegenerateFlagError,
    DomainError,
    FinslerError,
    InvalidMetricError,
    JetDomainError,
    SchemaError,
    TrivialSolutionError,
    UnsupportedCaseError,
)
from .metrics import (  # noqa: E402
    Bump,
    LineElement,
    MetricSpec,
    Randers,
    Riemannian,
    SpecialSolution,
    Warped,
    critical_points,
    finsler_function,
    flat,
    gradient_rho,
    round_sphere,
    special_solution,
)
from .geometry import (  # noqa: E402
    cartan_tensor,
    check_constant_curvature_form,
    check_decomposition,
    curvature_data,
    flag_curvature,
    fundamental_tensor,
    h_curvature_tensor,
    horizontal_connection,
    horizontal_hessian,
    riemann_flag_operator,
    spray,
)
from .geodesics import (  # noqa: E402
    GeodesicTrace,
    antipodal_focusing,
    cartan_torsion_along_geodesic,
    integrate_geodesic,
    integrate_geodesics,
    rho_along_geodesic,
)
from .metricfile import dump_metric, load_metric  # noqa: E402
