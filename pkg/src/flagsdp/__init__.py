"""Flag algebra computations with exact rational certificates."""

from .errors import *  # noqa: F401,F403
from .theory import (  # noqa: F401
    BUILTIN_THEORIES,
    CyclicSymmetry,
    DiGraphTheory,
    FullSymmetry,
    GraphTheory,
    NoSymmetry,
    RelationSpec,
    RestrictedTheory,
    Symmetry,
    Theory,
    ThreeGraphTheory,
    TheorySpec,
    combine,
    make_theory,
)
from .flags import (  # noqa: F401
    Flag,
    Pattern,
    canonical_form,
    contains_induced,
    ftype_of,
    induced_subflag,
    induced_typed_subflag,
    is_isomorphic,
)
from .enumeration import FlagBasis, generate, generate_types  # noqa: F401
from .algebra import AlgebraElement, density, evaluate, lift, multiply, project  # noqa: F401
from .constructions import (  # noqa: F401
    BlowupTemplate,
    Construction,
    blowup_construction,
    density_in_construction,
    make_template,
)
from .sdp import NumericSolution, SdpProblem, assemble, export_sdpa, solve_external, solve_numeric  # noqa: F401
from .rounding import ExactCertificate, RoundingSettings, kernel_guided_rounding, round_solution, verify  # noqa: F401
from .exact import exact_psd_check  # noqa: F401
from .workflow import OptimizationResult, external_optimize, optimize, verify_file  # noqa: F401
