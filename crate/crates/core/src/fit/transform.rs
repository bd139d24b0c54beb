//! Maps bounded parameters onto an unconstrained space for the LM core.

/// Closed interval for one parameter. `lo == hi` holds the parameter fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub const FREE: Bounds = Bounds {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    pub const POSITIVE: Bounds = Bounds {
        lo: 0.0,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Bounds { lo, hi }
    }

    pub fn lower(lo: f64) -> Self {
        Bounds { lo, hi: f64::INFINITY }
    }

    pub fn fixed(value: f64) -> Self {
        Bounds { lo: value, hi: value }
    }

    pub fn is_fixed(&self) -> bool {
        self.lo == self.hi
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Transform {
    Free,
    Lower(f64),
    Upper(f64),
    Both(f64, f64),
}

fn softplus(u: f64) -> f64 {
    if u > 30.0 {
        u
    } else {
        u.exp().ln_1p()
    }
}

fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

impl Transform {
    pub(crate) fn for_bounds(b: Bounds) -> Transform {
        match (b.lo.is_finite(), b.hi.is_finite()) {
            (false, false) => Transform::Free,
            (true, false) => Transform::Lower(b.lo),
            (false, true) => Transform::Upper(b.hi),
            (true, true) => Transform::Both(b.lo, b.hi),
        }
    }

    /// Internal coordinate for external value `p`, nudged inside open bounds.
    pub(crate) fn to_internal(self, p: f64) -> f64 {
        match self {
            Transform::Free => p,
            Transform::Lower(lo) => softplus_inv((p - lo).max(min_offset(lo))),
            Transform::Upper(hi) => softplus_inv((hi - p).max(min_offset(hi))),
            Transform::Both(lo, hi) => {
                let t = ((p - lo) / (hi - lo)).clamp(1e-9, 1.0 - 1e-9);
                (t / (1.0 - t)).ln()
            }
        }
    }

    pub(crate) fn to_external(self, u: f64) -> f64 {
        match self {
            Transform::Free => u,
            Transform::Lower(lo) => lo + softplus(u),
            Transform::Upper(hi) => hi - softplus(u),
            Transform::Both(lo, hi) => lo + (hi - lo) * sigmoid(u),
        }
    }

    /// dp/du at internal coordinate `u`.
    pub(crate) fn derivative(self, u: f64) -> f64 {
        match self {
            Transform::Free => 1.0,
            Transform::Lower(_) => sigmoid(u),
            Transform::Upper(_) => -sigmoid(u),
            Transform::Both(lo, hi) => {
                let s = sigmoid(u);
                (hi - lo) * s * (1.0 - s)
            }
        }
    }
}

fn min_offset(edge: f64) -> f64 {
    1e-12 * edge.abs().max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn round_trips() {
        for (b, p) in [
            (Bounds::FREE, -3.5),
            (Bounds::POSITIVE, 2.54e-9),
            (Bounds::lower(1.0), 7.0),
            (Bounds::new(f64::NEG_INFINITY, 2.0), -1.0),
            (Bounds::new(0.0, 1.0), 0.3),
        ] {
            let t = Transform::for_bounds(b);
            assert_relative_eq!(t.to_external(t.to_internal(p)), p, max_relative = 1e-9);
        }
    }

    #[test]
    fn derivative_matches_difference() {
        for b in [
            Bounds::POSITIVE,
            Bounds::new(-1.0, 3.0),
            Bounds::new(f64::NEG_INFINITY, 0.5),
        ] {
            let t = Transform::for_bounds(b);
            for u in [-4.0, -0.3, 0.0, 1.7, 5.0] {
                let h = 1e-6;
                let fd = (t.to_external(u + h) - t.to_external(u - h)) / (2.0 * h);
                assert_relative_eq!(t.derivative(u), fd, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn boundary_values_nudged_inside() {
        let t = Transform::for_bounds(Bounds::POSITIVE);
        assert!(t.to_internal(0.0).is_finite());
        assert!(t.to_external(t.to_internal(0.0)) > 0.0);
    }
}
