"""Discretization and solvers for nonlocal complement-value problems in 1D."""

from ._errors import NonlocalError
from .assembly import (
    AssembledSystem,
    DiscreteSpace,
    assemble,
    assemble_N,
    assemble_trace_DK,
    build_space,
    complement_mass,
    export_matrix_text,
    interpolate,
    l2_omega_error,
    mean_over_omega,
)
from .geometry import DomainMesh, DomainSpec, Element, boundary_distance, build_mesh, collar, shrink
from .kernels import (
    KernelSpec,
    WeightField,
    class_diagnostics,
    comparability_report,
    embedding_constant,
    levy_mass,
    make_custom,
    make_fractional,
    make_peridynamic,
    make_rescaled,
    make_weight,
    one_wedge_mass,
    radial_moment,
    sphere_area,
    tail_mass,
    weight_eval,
)
from .oracle import alpha_sweep, dense_reference, local_reference_1d
from .quadrature import (
    ASSEMBLY_RULE,
    ORACLE_RULE,
    QuadRule,
    far_field_coupling,
    one_sided_tail,
    pair_engine,
    pair_integral,
    pointwise_L,
    pointwise_N,
    same_element_integral,
)
from .solvers import (
    DENSE_DOF_LIMIT,
    EigenReport,
    ProblemSpec,
    SolveReport,
    dtn_assemble,
    dtn_extend,
    dtn_spectral_check,
    eig,
    nonexistence_probe,
    poincare_constant,
    solve_dirichlet,
    solve_neumann,
    solve_neumann_weighted,
    solve_robin,
    trace_quotient_norm,
    v_norm,
)

__version__ = "0.1.0"

__all__ = [
    "NonlocalError",
    "KernelSpec",
    "WeightField",
    "make_fractional",
    "make_peridynamic",
    "make_rescaled",
    "make_custom",
    "sphere_area",
    "radial_moment",
    "levy_mass",
    "tail_mass",
    "one_wedge_mass",
    "embedding_constant",
    "make_weight",
    "weight_eval",
    "comparability_report",
    "class_diagnostics",
    "DomainSpec",
    "Element",
    "DomainMesh",
    "shrink",
    "collar",
    "build_mesh",
    "boundary_distance",
    "QuadRule",
    "ASSEMBLY_RULE",
    "ORACLE_RULE",
    "pair_engine",
    "same_element_integral",
    "pair_integral",
    "pointwise_L",
    "pointwise_N",
    "far_field_coupling",
    "one_sided_tail",
    "DiscreteSpace",
    "AssembledSystem",
    "build_space",
    "assemble",
    "assemble_N",
    "assemble_trace_DK",
    "complement_mass",
    "interpolate",
    "mean_over_omega",
    "l2_omega_error",
    "export_matrix_text",
    "ProblemSpec",
    "SolveReport",
    "EigenReport",
    "DENSE_DOF_LIMIT",
    "solve_neumann",
    "solve_neumann_weighted",
    "solve_dirichlet",
    "solve_robin",
    "eig",
    "poincare_constant",
    "dtn_assemble",
    "dtn_extend",
    "dtn_spectral_check",
    "trace_quotient_norm",
    "nonexistence_probe",
    "v_norm",
    "dense_reference",
    "local_reference_1d",
    "alpha_sweep",
    "__version__",
]
