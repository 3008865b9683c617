use thiserror::Error;

/// Errors shared across the pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("duplicate modulus {0} in CRT batch")]
    DuplicateModulus(u64),

    #[error("only {found} primes of the form 2^{bits}-r with r < {limit}, need {want}")]
    PrimesExhausted {
        bits: u32,
        limit: u64,
        found: usize,
        want: usize,
    },

    #[error("series too short: need {need} terms, have {have}")]
    SeriesTooShort { need: usize, have: usize },

    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("rational reconstruction failed at component {component}: need more primes")]
    NeedMorePrimes { component: usize },

    #[error("pinned component differs across primes")]
    PinMismatch,

    #[error("no annihilating equation found; largest unknown count attempted {largest_l}")]
    SearchExhausted { largest_l: usize },

    #[error("leading recurrence coefficient vanishes at n = {0}")]
    LeadingZero(i64),

    #[error("recurrence step at n = {0} is not integral")]
    NonIntegralStep(i64),

    #[error("linear system is numerically singular; increase series length or precision")]
    SingularSystem,

    #[error("residual nonzero at index {0}")]
    ResidualNonzero(usize),

    #[error("numeric check inconclusive at {0}")]
    Inconclusive(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}
