use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of the numerical kernels.
///
/// Physics-domain errors (poles, thresholds, singular kinematics) are kept
/// apart from numerical guards so callers can map them to distinct exit
/// codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("four-vector is spacelike (p.p = {norm_sq})")]
    SpacelikeVector { norm_sq: f64 },
    #[error("energy component must be positive, got {energy}")]
    NonpositiveEnergy { energy: f64 },
    #[error("boost speed |beta| = {speed} is not below 1")]
    SuperluminalBoost { speed: f64 },
    #[error("centre-of-mass energy {e_cm} is not above threshold {threshold}")]
    BelowThreshold { e_cm: f64, threshold: f64 },
    #[error("massless spinor requested at zero momentum")]
    MasslessAtRest,
    #[error("covariant normalization needs a positive mass")]
    MasslessCovariant,
    #[error("photon wavevector is zero")]
    ZeroWavevector,
    #[error("invalid constant {name} = {value}: must be finite and positive")]
    InvalidConstant { name: &'static str, value: f64 },
    #[error("invalid level system: {reason}")]
    InvalidSystem { reason: &'static str },
    #[error("initial state norm is {norm}, expected 1")]
    NotNormalized { norm: f64 },
    #[error("invalid step: {reason}")]
    InvalidStep { reason: &'static str },
    #[error("norm drift {drift:e} at t = {time} exceeds the step guard")]
    StepTooLarge { drift: f64, time: f64 },
    #[error("coupled levels {a} and {b} are degenerate")]
    DegenerateLevels { a: usize, b: usize },
    #[error("transition frequencies are not commensurate")]
    IncommensurateFrequencies,
    #[error("energy denominator {denominator:e} is at a pole")]
    PoleEncountered { denominator: f64 },
    #[error("input momentum is off shell: {reason}")]
    OffShellInput { reason: &'static str },
    #[error("forward singularity: momentum transfer squared is {t}")]
    ForwardSingularity { t: f64 },
    #[error("photon energy {photon_energy} reaches the pair threshold {threshold}")]
    RealPairThreshold { photon_energy: f64, threshold: f64 },
    #[error("cutoff {cutoff} must exceed {minimum}")]
    CutoffTooSmall { cutoff: f64, minimum: f64 },
    #[error("grid refinement changed the result by {relative_change:e} (tolerance {tolerance:e})")]
    GridTooCoarse { relative_change: f64, tolerance: f64 },
    #[error("first-order correction ratio {ratio} exceeds guard {guard}")]
    CorrectionTooLarge { ratio: f64, guard: f64 },
    #[error("momentum factors {cm} and {here} have different signs or vanish")]
    SignMismatch { cm: f64, here: f64 },
}
