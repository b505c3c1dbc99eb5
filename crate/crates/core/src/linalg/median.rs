//! Coordinate-wise medians, the aggregation step of median-of-means
//! gradient estimation.

use nalgebra::DVector;

use crate::Error;

/// Returns the per-coordinate median of the given vectors (lower median for
/// even counts).
pub fn coordinate_median(vectors: &[DVector<f64>]) -> Result<DVector<f64>, Error> {
    let first = vectors
        .first()
        .ok_or(Error::InvalidParameter("median of an empty sample list"))?;
    let d = first.len();
    for v in vectors {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: v.len(),
            });
        }
    }
    let mid = (vectors.len() - 1) / 2;
    let mut out = DVector::<f64>::zeros(d);
    let mut column = vec![0.0; vectors.len()];
    for j in 0..d {
        for (slot, v) in column.iter_mut().zip(vectors) {
            *slot = v[j];
        }
        column.sort_by(f64::total_cmp);
        out[j] = column[mid];
    }
    Ok(out)
}
