//! Compensated summation.

/// Neumaier-compensated sum of an iterator of terms.
pub(crate) fn compensated<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for x in terms {
        let t = sum + x;
        if libm::fabs(sum) >= libm::fabs(x) {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}
