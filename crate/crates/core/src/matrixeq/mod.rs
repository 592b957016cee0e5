//! Dense real Schur factorization and Bartels-Stewart solvers for standard and
//! semistable (singular) Sylvester and Lyapunov equations.

mod schur;
mod solve;

pub use schur::{
    real_schur, real_schur_with_tolerance, RealSchurForm, SchurBlock, ZERO_EIGENVALUE_RTOL,
};
pub use solve::{
    relative_residual, solve_lyapunov_like, solve_lyapunov_like_with, solve_standard_lyapunov,
    solve_sylvester_like, solve_sylvester_like_with, solve_sylvester_schur, SingularOptions,
    SolveReport,
};
