use crate::error::{Error, Result};
use crate::metric::MetricSpace;

use super::ScalarFunction;

/// Sum of tents `h_k * (1 - d(x, c_k) / r_k)` over pairwise disjoint open balls
/// `B_{r_k}(c_k)`; zero outside every ball.
pub fn spike_function(
    space: &MetricSpace,
    centers: &[usize],
    radii: &[f64],
    heights: &[f64],
) -> Result<ScalarFunction> {
    if radii.len() != centers.len() {
        return Err(Error::LengthMismatch { expected: centers.len(), found: radii.len() });
    }
    if heights.len() != centers.len() {
        return Err(Error::LengthMismatch { expected: centers.len(), found: heights.len() });
    }
    for &c in centers {
        space.check_index(c)?;
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::BadParam(format!("spike radius {r} must be positive")));
    }
    if let Some(h) = heights.iter().find(|h| !h.is_finite()) {
        return Err(Error::BadParam(format!("spike height {h} must be finite")));
    }

    let n = space.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut values = vec![0.0; n];
    for (k, (&c, (&r, &h))) in centers.iter().zip(radii.iter().zip(heights)).enumerate() {
        for (x, slot) in owner.iter_mut().enumerate() {
            let d = space.d(x, c);
            if d < r {
                if let Some(first) = *slot {
                    return Err(Error::OverlappingBalls { first, second: k, witness: x });
                }
                *slot = Some(k);
                values[x] = h * (1.0 - d / r);
            }
        }
    }
    ScalarFunction::new(space, values)
}
