use alloc::string::String;

/// Failures raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Arguments violate an operation's preconditions.
    #[error("invalid input: {0}")]
    Input(String),
    /// The integrated state stopped being finite.
    #[error("integration blew up at t = {last_good_time} (last finite state)")]
    Integration { last_good_time: f64 },
    /// A QR diagonal entry collapsed to (numerical) zero.
    #[error("degenerate QR diagonal |r| = {value:e} at t = {time}")]
    Conditioning { time: f64, value: f64 },
    /// The oracle has no closed form for this fixture.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
