use thiserror::Error;

/// Every failure the toolkit can report.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("point {point:?} lies outside the chart domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("differential is rank deficient (smallest singular value {sigma_min:.3e})")]
    RankDeficient { sigma_min: f64 },
    #[error("chart has no analytic jets")]
    JetUnavailable,
    #[error("only {found} independent normals found, {needed} needed")]
    FrameIncomplete { found: usize, needed: usize },
    #[error("boundary data missing at node {node}")]
    BoundaryDataMissing { node: usize },
    #[error("degenerate link: {0}")]
    DegenerateLink(String),
    #[error("tolerance exceeded: worst error {worst:.3e} at sample {index} (tolerance {tol:.1e})")]
    ToleranceExceeded { worst: f64, index: usize, tol: f64 },
    #[error("evaluation at the singular point")]
    SingularPoint,
    #[error("unsupported link topology: {0}")]
    UnsupportedLinkTopology(String),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("non-hyperbolic exponents: discriminant {discriminant:.3e} <= 0")]
    NonHyperbolic { discriminant: f64 },
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("inner integral diverges at 0")]
    DivergentInnerIntegral,
    #[error("mode cutoff undefined: nu = {nu} does not exceed gamma_1(+) = {gamma1}")]
    CutoffUndefined { nu: f64, gamma1: f64 },
    #[error("tube self-intersects: radius {radius:.3e} exceeds reach estimate {reach:.3e}")]
    SelfIntersection { radius: f64, reach: f64 },
    #[error("cone is not graphical over its tangent plane: {0}")]
    NotGraphicalOverTangent(String),
    #[error("bridge end does not match its cone: {0}")]
    TangencyMismatch(String),
    #[error("assembly is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("quadrature budget exceeded ({nodes} nodes)")]
    QuadratureBudgetExceeded { nodes: usize },
    #[error("infeasible center curve constraints: {0}")]
    InfeasibleConstraints(String),
    #[error("perturbed map is no longer an immersion")]
    ImmersionLost,
    #[error("linear solve failed (relative residual {residual:.3e}); {hint}")]
    LinearSolveFailure { residual: f64, hint: String },
    #[error("attachment disks cover the whole link")]
    MaskEmpty,
    #[error("iteration diverged at step {step}")]
    Diverged { step: usize },
    #[error("iteration cap {cap} reached (residual {residual:.3e})")]
    CapReached { cap: usize, residual: f64 },
    #[error("line search stalled at residual {residual:.3e}")]
    LineSearchStall { residual: f64 },
    #[error("perturbed frame system is ill-conditioned (condition {condition:.3e})")]
    FrameDegenerate { condition: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
