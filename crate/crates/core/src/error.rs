use alloc::string::String;

/// Errors raised by validation, decoding and training.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("head {head} of token {token} is out of range for a sentence of length {len}")]
    HeadOutOfRange { token: usize, head: usize, len: usize },

    #[error("token index {index} is out of range for a sentence of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("token {0} has an empty form")]
    EmptyForm(usize),

    #[error("token {0} is its own head")]
    SelfLoop(usize),

    #[error("cycle through token {0}")]
    Cycle(usize),

    #[error("tokens {0} and {1} both attach to the root")]
    MultipleRoots(usize, usize),

    #[error("no token attaches to the root")]
    NoRoot,

    #[error("arcs {0:?} and {1:?} cross")]
    Crossing((usize, usize), (usize, usize)),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("no projective single-root tree satisfies the constraints")]
    Unsatisfiable,

    #[error("sibling {sibling} is not on the same side of head {head} as modifier {modifier}")]
    SiblingSide { head: usize, modifier: usize, sibling: usize },

    #[error("invalid feature configuration: {0}")]
    FeatureConfig(String),

    #[error("invalid training configuration: {0}")]
    TrainConfig(String),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("model dimension {found} does not match the extractor dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("action {0} is not legal in this configuration")]
    IllegalAction(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
