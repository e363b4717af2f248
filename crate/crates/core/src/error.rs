use alloc::string::String;
use core::fmt;

/// Everything that can go wrong in the numerical pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Support or probability list is empty.
    EmptyInput,
    /// Support and probability lists have different lengths.
    LengthMismatch { support: usize, probs: usize },
    /// The same support point was listed twice.
    DuplicateSupport(i64),
    /// A probability outside `(0, 1]`.
    ProbabilityOutOfRange { index: usize },
    /// A probability string that could not be parsed.
    InvalidProbability(String),
    SumNotOne,
    MeanNotZero,
    /// The gcd of support differences is not one.
    SpanNotOne { span: u64 },
    /// No negative or no positive support point.
    EmptySide,
    /// An order argument below its minimum.
    InvalidOrder { order: usize, min: usize },
    /// Exact arithmetic was requested beyond the configured horizon cap.
    HorizonTooLarge { requested: usize, cap: usize },
    /// `P(τ > n)` is exactly zero.
    DegenerateConditioning,
    /// Interval bounds must satisfy `0 < u < v`.
    InvalidInterval,
    InsufficientPoints { needed: usize, available: usize },
    IllConditioned { condition: f64 },
    /// Exponent lists must start at zero and increase strictly.
    InvalidExponents,
    /// A walk constant that must be positive came out non-positive.
    NonPositiveConstant(&'static str),
    /// `γ_{q,j,ℓ}` requested outside `0 ≤ q ≤ j ≤ 16`.
    IndexOutOfRange { q: usize, j: usize },
    /// An overshoot coefficient `b_ℓ^{(h)}` needed for assembly is absent.
    MissingConstant { ell: usize, h: usize },
    /// The expansion was built with too small an `r`.
    MissingOrder { nu: usize },
    /// A negative power survived assembly of `Q_η`.
    CancellationFailure {
        eta: usize,
        exponent: i32,
        magnitude: f64,
        largest: f64,
    },
    QuadratureNonconvergence { estimate: f64, error: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyInput => write!(f, "support and probabilities must be nonempty"),
            Error::LengthMismatch { support, probs } => write!(
                f,
                "support has {support} points but {probs} probabilities were given"
            ),
            Error::DuplicateSupport(x) => write!(f, "support point {x} listed twice"),
            Error::ProbabilityOutOfRange { index } => {
                write!(f, "probability #{index} is not in (0, 1]")
            }
            Error::InvalidProbability(s) => write!(f, "cannot parse probability {s:?}"),
            Error::SumNotOne => write!(f, "SumNotOne: probabilities do not sum to one"),
            Error::MeanNotZero => write!(f, "MeanNotZero: increment mean is not zero"),
            Error::SpanNotOne { span } => {
                write!(f, "SpanNotOne: support differences have gcd {span}, expected 1")
            }
            Error::EmptySide => write!(
                f,
                "EmptySide: support needs at least one negative and one positive point"
            ),
            Error::InvalidOrder { order, min } => {
                write!(f, "order {order} is below the minimum {min}")
            }
            Error::HorizonTooLarge { requested, cap } => write!(
                f,
                "HorizonTooLarge: exact horizon {requested} exceeds the cap {cap}"
            ),
            Error::DegenerateConditioning => write!(f, "P(tau > n) is zero"),
            Error::InvalidInterval => write!(f, "interval must satisfy 0 < u < v"),
            Error::InsufficientPoints { needed, available } => write!(
                f,
                "fit window has {available} points, at least {needed} are needed"
            ),
            Error::IllConditioned { condition } => {
                write!(f, "least-squares basis is ill-conditioned (estimate {condition:e})")
            }
            Error::InvalidExponents => {
                write!(f, "exponents must start at 0 and increase strictly")
            }
            Error::NonPositiveConstant(name) => write!(f, "{name} must be positive"),
            Error::IndexOutOfRange { q, j } => {
                write!(f, "gamma index (q={q}, j={j}) outside 0 <= q <= j <= 16")
            }
            Error::MissingConstant { ell, h } => {
                write!(f, "overshoot coefficient b_{ell}^({h}) is missing")
            }
            Error::MissingOrder { nu } => {
                write!(f, "polynomial P_{nu} is not part of this expansion")
            }
            Error::CancellationFailure {
                eta,
                exponent,
                magnitude,
                largest,
            } => write!(
                f,
                "Q_{eta}: coefficient of t^{exponent} is {magnitude:e}, \
                 largest polynomial coefficient {largest:e}"
            ),
            Error::QuadratureNonconvergence { estimate, error } => write!(
                f,
                "quadrature did not converge (estimate {estimate:e}, error {error:e})"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
