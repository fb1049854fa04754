//! Angle wrapping in degrees.

/// Wrap to `(-180, 180]`.
pub fn wrap180(deg: f64) -> f64 {
    let w = (deg + 180.0).rem_euclid(360.0) - 180.0;
    if w <= -180.0 {
        w + 360.0
    } else {
        w
    }
}

/// Wrap to `[0, 360)`. `rem_euclid` alone rounds tiny negatives up to 360.
pub fn wrap360(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(wrap180(180.0), 180.0);
        assert_eq!(wrap180(-180.0), 180.0);
        assert_eq!(wrap180(190.0), -170.0);
        assert_eq!(wrap360(-1e-18), 0.0);
        assert_eq!(wrap360(-90.0), 270.0);
        assert_eq!(wrap360(720.5), 0.5);
    }
}
