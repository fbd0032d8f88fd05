//! Energy from sampled power traces.
//!
//! Integration only needs ring arithmetic and a division by two, so the
//! kernel is generic over any [`num_traits::Num`] scalar, including exact
//! rationals.

use num_traits::Num;

use crate::error::{Error, Result};

/// Ordered `(t_s, watts)` samples with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrace<T> {
    samples: Vec<(T, T)>,
}

impl<T: Num + Copy + PartialOrd> PowerTrace<T> {
    pub fn new(samples: Vec<(T, T)>) -> Result<Self> {
        for (i, &(t, w)) in samples.iter().enumerate() {
            if t < T::zero() || w < T::zero() {
                return Err(Error::InvalidParameter(format!(
                    "power sample {i} has negative time or power"
                )));
            }
        }
        if samples.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::InvalidParameter(
                "power trace timestamps must be strictly increasing".into(),
            ));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(T, T)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn integrate(&self) -> Result<T> {
        integrate_samples(&self.samples)
    }
}

/// Trapezoidal energy of a power trace, in joules.
pub fn integrate<T: Num + Copy + PartialOrd>(trace: &PowerTrace<T>) -> Result<T> {
    trace.integrate()
}

/// Trapezoidal rule over raw samples. Callers are responsible for ordering.
pub fn integrate_samples<T: Num + Copy>(samples: &[(T, T)]) -> Result<T> {
    if samples.len() < 2 {
        return Err(Error::Insufficient {
            what: "power samples",
            needed: 2,
            got: samples.len(),
        });
    }
    let two = T::one() + T::one();
    Ok(samples.windows(2).fold(T::zero(), |acc, pair| {
        let (t1, p1) = pair[0];
        let (t2, p2) = pair[1];
        acc + (t2 - t1) * (p1 + p2) / two
    }))
}
