//! Small numeric helpers shared across modules.

/// t^e for t >= 0 with fast paths for the exponents that dominate the
/// solver's inner loops (half-integers and small integers).
#[inline]
pub fn pow_nonneg(t: f64, e: f64) -> f64 {
    if e == 0.5 {
        return t.sqrt();
    }
    if e == 1.5 {
        return t * t.sqrt();
    }
    if e == -0.5 {
        return 1.0 / t.sqrt();
    }
    let r = e.round();
    if r == e && r.abs() <= 16.0 {
        return t.powi(r as i32);
    }
    t.powf(e)
}
