use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::{Mp1024, Mp128, Mp256, Mp512};

/// Mantissa widths a task can run at; 53 is `f64`.
pub const SUPPORTED_BITS: [u32; 5] = [53, 128, 256, 512, 1024];

pub const DEFAULT_BITS: u32 = 256;

/// Computation that can be instantiated at any supported precision.
pub trait PrecisionTask: Sync {
    type Output: Send;

    fn run<T: Real>(&self) -> Result<Self::Output>;
}

/// Runs `task` with the scalar type whose mantissa has `bits` bits.
pub fn run_at<P: PrecisionTask>(bits: u32, task: &P) -> Result<P::Output> {
    match bits {
        53 | 64 => task.run::<f64>(),
        128 => task.run::<Mp128>(),
        256 => task.run::<Mp256>(),
        512 => task.run::<Mp512>(),
        1024 => task.run::<Mp1024>(),
        other => Err(Error::InvalidArgument(format!(
            "unsupported precision {other} bits; choose one of 64, 128, 256, 512, 1024"
        ))),
    }
}

/// One failed rung of the ladder.
#[derive(Clone, Debug, Serialize)]
pub struct Attempt {
    pub bits: u32,
    pub error: String,
}

#[derive(Clone, Debug)]
pub struct Escalated<O> {
    pub output: O,
    pub bits: u32,
    /// Failed attempts at lower precision, in order.
    pub attempts: Vec<Attempt>,
}

fn is_precision_failure(e: &Error) -> bool {
    matches!(e, Error::NotPositiveDefinite { .. } | Error::ResidualTooLarge { .. })
}

/// Runs `task` at `start` bits and doubles the mantissa on precision
/// failures up to 1024 bits. Other errors return immediately.
pub fn escalate<P: PrecisionTask>(start: u32, task: &P) -> Result<Escalated<P::Output>> {
    let start = if start == 64 { 53 } else { start };
    if !SUPPORTED_BITS.contains(&start) {
        return run_at(start, task).map(|output| Escalated {
            output,
            bits: start,
            attempts: Vec::new(),
        });
    }
    let mut attempts = Vec::new();
    let mut last = None;
    for &bits in SUPPORTED_BITS.iter().filter(|&&b| b >= start) {
        match run_at(bits, task) {
            Ok(output) => {
                return Ok(Escalated {
                    output,
                    bits,
                    attempts,
                })
            }
            Err(e) if is_precision_failure(&e) => {
                attempts.push(Attempt {
                    bits,
                    error: e.to_string(),
                });
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::PrecisionExhausted {
        max_bits: *SUPPORTED_BITS.last().unwrap(),
        last: Box::new(last.expect("ladder is never empty")),
    })
}
