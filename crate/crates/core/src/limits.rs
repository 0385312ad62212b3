//! Process-wide size caps.
//!
//! Classical sequence spaces default to 2^22 outcomes and dense matrices built
//! by Kronecker products to dimension 4096. Both can be changed at runtime
//! (the CLI reads `ONESHOT_MAX_DIM`).

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_OUTCOMES: usize = 1 << 22;
pub const DEFAULT_MAX_MATRIX_DIM: usize = 4096;
/// Hard cap for the interior-point solver; every worked instance is far below it.
pub const MAX_SDP_DIM: usize = 64;

static MAX_OUTCOMES: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_OUTCOMES);
static MAX_MATRIX_DIM: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_MATRIX_DIM);

pub fn max_outcomes() -> usize {
    MAX_OUTCOMES.load(Ordering::Relaxed)
}

pub fn max_matrix_dim() -> usize {
    MAX_MATRIX_DIM.load(Ordering::Relaxed)
}

/// Overrides both caps with a single value.
pub fn set_max_dim(value: usize) {
    MAX_OUTCOMES.store(value, Ordering::Relaxed);
    MAX_MATRIX_DIM.store(value, Ordering::Relaxed);
}

pub fn reset() {
    MAX_OUTCOMES.store(DEFAULT_MAX_OUTCOMES, Ordering::Relaxed);
    MAX_MATRIX_DIM.store(DEFAULT_MAX_MATRIX_DIM, Ordering::Relaxed);
}

pub(crate) fn check_outcomes(requested: usize) -> Result<()> {
    let max = max_outcomes();
    if requested > max {
        return Err(Error::Capacity { requested, max });
    }
    Ok(())
}

pub(crate) fn check_matrix_dim(requested: usize) -> Result<()> {
    let max = max_matrix_dim();
    if requested > max {
        return Err(Error::Capacity { requested, max });
    }
    Ok(())
}

/// `base^exp`, or `None` on overflow.
pub(crate) fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}
