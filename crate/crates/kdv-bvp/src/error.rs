use thiserror::Error;

/// Errors surfaced by solvers, diagnostics, and the scenario runner.
#[derive(Debug, Error)]
pub enum KdvError {
    #[error("coefficient matrices satisfy none of the four boundary-class hypothesis sets")]
    NoClassMatch,
    /// The four hypothesis sets are mutually exclusive; reaching this is a bug.
    #[error("coefficient matrices matched more than one boundary class (internal bug)")]
    AmbiguousClass,
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("field/grid shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("degenerate kernel ratio at rho={rho} (class {class}, j={j}, m={m})")]
    DegenerateKernel { class: u8, j: usize, m: usize, rho: f64 },
    #[error("rho-quadrature tail failed to reach tolerance {tol:.3e} by R_max={rmax}")]
    QuadratureNotConverged { tol: f64, rmax: f64 },
    #[error("dispersive support {needed:.3e} exceeds line padding {pad:.3e}")]
    PadExceeded { needed: f64, pad: f64 },
    #[error("boundary data incompatible with initial trace: |h({slot})(0) - B v(0)| = {mismatch:.3e}")]
    IncompatibleData { slot: usize, mismatch: f64 },
    #[error("local time step underflow: theta={theta:.3e} < 16 dt = {floor:.3e}")]
    ThetaUnderflow { theta: f64, floor: f64 },
    #[error("Picard iteration failed to contract after window shrinking (last factor {factor:.3})")]
    ContractionFailed { factor: f64 },
    #[error("signal not resolved: top spectral decade carries {fraction:.1}% of weighted energy")]
    UnresolvedSignal { fraction: f64 },
    #[error("discrete boundary constraint rows are singular (pivot {pivot:.3e})")]
    SingularBoundarySystem { pivot: f64 },
    #[error("regularity tier s={0} sits on an excluded half-integer compatibility threshold")]
    ExcludedTier(f64),
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, KdvError>;
