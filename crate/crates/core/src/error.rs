use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unsupported field degree {0} (supported: 2..=24)")]
    UnsupportedDegree(u32),

    #[error("modulus {modulus:#x} does not have degree {n}")]
    ModulusDegree { modulus: u64, n: u32 },

    #[error("modulus {0:#x} is reducible over GF(2)")]
    Reducible(u64),

    #[error("element {value:#x} out of range for GF(2^{n})")]
    ElementRange { value: u64, n: u32 },

    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("leading coefficient of a quadratic must be nonzero")]
    ZeroLeadingCoefficient,

    #[error("operation requires an even field degree, got n = {0}")]
    OddDegree(u32),

    #[error("element {0:#x} is not in the subfield GF(2^m)")]
    NotInSubfield(u32),

    #[error("power exponent must be positive")]
    ZeroExponent,

    #[error("lookup table has {got} entries, expected {expected}")]
    LutLength { got: usize, expected: usize },

    #[error("lookup table entry at index {index} is {value:#x}, outside GF(2^{n})")]
    LutRange { index: usize, value: u64, n: u32 },

    #[error("line {line}: {message}")]
    LutParse { line: usize, message: String },

    #[error("S-box is not a permutation")]
    NotPermutation,

    #[error("expected {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("tuple {coords:?} matches {count} closed-form cases")]
    CaseConflict { coords: Vec<u32>, count: usize },

    #[error("work budget exceeded: {0}")]
    Budget(String),

    #[error("closed-form predictions require the x^(2^(m+1)-1) power map")]
    NotClosedFormSBox,
}

pub type Result<T> = std::result::Result<T, Error>;
