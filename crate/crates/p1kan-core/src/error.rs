use core::fmt;

pub type Result<T> = core::result::Result<T, CoreError>;

#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// A box with `lower > upper` or a non-finite bound.
    InvalidBox {
        dim: usize,
        lower: f64,
        upper: f64,
    },
    /// A box whose width is zero where positive width is required.
    ZeroWidth {
        dim: usize,
    },
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    NonFiniteInput {
        sample: usize,
        coord: usize,
    },
    /// A point that lies outside the support it is evaluated on.
    OutOfSupport {
        sample: usize,
        coord: usize,
        value: f64,
    },
    /// A function evaluated by the finite-difference oracle was not finite.
    NonFiniteValue {
        coordinate: usize,
    },
    NonFiniteGradient {
        tensor: usize,
        index: usize,
    },
    OutOfDomain {
        coord: usize,
        value: f64,
    },
    InvalidArgument(&'static str),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidBox { dim, lower, upper } => {
                write!(f, "invalid box in dimension {dim}: [{lower}, {upper}]")
            }
            CoreError::ZeroWidth { dim } => write!(f, "support has zero width in dimension {dim}"),
            CoreError::ShapeMismatch {
                what,
                expected,
                found,
            } => write!(
                f,
                "shape mismatch for {what}: expected {expected}, found {found}"
            ),
            CoreError::NonFiniteInput { sample, coord } => {
                write!(f, "non-finite input at sample {sample}, coordinate {coord}")
            }
            CoreError::OutOfSupport {
                sample,
                coord,
                value,
            } => write!(
                f,
                "value {value} at sample {sample}, coordinate {coord} lies outside its support"
            ),
            CoreError::NonFiniteValue { coordinate } => {
                write!(
                    f,
                    "function value not finite when perturbing coordinate {coordinate}"
                )
            }
            CoreError::NonFiniteGradient { tensor, index } => {
                write!(
                    f,
                    "non-finite gradient in tensor {tensor} at element {index}"
                )
            }
            CoreError::OutOfDomain { coord, value } => {
                write!(f, "coordinate {coord} = {value} is outside [0, 1]")
            }
            CoreError::InvalidArgument(msg) => f.write_str(msg),
        }
    }
}

impl core::error::Error for CoreError {}
