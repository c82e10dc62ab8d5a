use serde::Serialize;

/// A nonnegative fraction in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        let g = gcd(num, den).max(1);
        Ratio { num: num / g, den: den / g }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn factorial_u64(n: u64) -> u64 {
    (1..=n).product()
}

/// Offsets of the coverage profile: `x + log C` is the profile argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LawConstants {
    /// `d! / (d + 1)`, for the gossip process.
    pub c_d: Ratio,
    /// `(d - 1)!`, for the small-world process.
    pub c_tilde_d: Ratio,
}

impl LawConstants {
    /// Exact for `1 <= d <= 12`.
    pub fn new(d: usize) -> Self {
        assert!((1..=12).contains(&d), "constants are tabulated for 1 <= d <= 12");
        let d = d as u64;
        LawConstants { c_d: Ratio::new(factorial_u64(d), d + 1), c_tilde_d: Ratio::new(factorial_u64(d - 1), 1) }
    }
}
