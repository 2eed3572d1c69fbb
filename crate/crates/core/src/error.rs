use core::fmt;

use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Image too small for the requested operation.
    Dimension {
        width: usize,
        height: usize,
        required: usize,
    },
    /// A configuration value is outside its allowed range.
    Validation { key: &'static str, reason: String },
    /// Frame list violates the 1..N contiguity or dummy rules.
    Frames(String),
    /// A dummy measurement was used where a real detection is required.
    DummyMeasurement,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension {
                width,
                height,
                required,
            } => write!(
                f,
                "image {width}x{height} is smaller than the {required}px window"
            ),
            Error::Validation { key, reason } => write!(f, "invalid value for `{key}`: {reason}"),
            Error::Frames(msg) => write!(f, "invalid frame set: {msg}"),
            Error::DummyMeasurement => f.write_str("dummy measurement cannot initialise a track"),
        }
    }
}

impl core::error::Error for Error {}
