use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("operands belong to different variable tables")]
    TableMismatch,
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("odd generator `{name}` raised to a power above 1 at {pos}")]
    OddPower { pos: usize, name: String },
    #[error("substitution for `{0}` does not preserve parity and form degree")]
    GradingMismatch(String),
    #[error("matrix is not invertible")]
    NotInvertible,
    #[error("elimination needs an odd pivot in column {0}")]
    OddPivot(usize),
    #[error("denominator contains non-even or form generators")]
    BadDenominator,
    #[error("division by zero while evaluating")]
    DivisionByZero,
    #[error("expression is not a polynomial")]
    NotPolynomial,
    #[error("structures live on different charts")]
    ChartMismatch,
    #[error("`{0}` is not a Casimir of bracket {1}")]
    CasimirPrecheckFailed(String, usize),
    #[error("group element is singular")]
    SingularGroupElement,
    #[error("chart is not semi-canonical: {0}")]
    NotSemiCanonical(String),
    #[error("fundamental bracket {0} depends on positions")]
    QDependent(String),
    #[error("E matrix is singular")]
    ESingular,
    #[error("closedness fails: {0}")]
    NotClosed(String),
    #[error("E is singular at the base point")]
    BasePointSingular,
    #[error("matrix is not a Jacobian: {0}")]
    NotIntegrable(String),
    #[error("coordinate map is not invertible")]
    MapNotInvertible,
    #[error("series inversion leaves a residual at degree {0}")]
    TruncationResidual(u32),
    #[error("E is not the identity")]
    EnotIdentity,
    #[error("form has a component of form degree {0} < 2")]
    DegreeTooLow(u32),
    #[error("block ({n12}, {n3}) is below the invertibility threshold")]
    BlockNotCovered { n12: u32, n3: u32 },
    #[error("form has degree {0} beyond the truncation degree {1}")]
    BeyondTruncation(u32, u32),
    #[error("group element does not have unit determinant")]
    NotUnitDeterminant,
    #[error("invalid chart file: {0}")]
    ChartFile(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl Error {
    pub fn at_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
