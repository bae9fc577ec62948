//! Rational identities behind the eigenframe closed forms.
//!
//! Differentiating the eigenframe expression for `J` and inserting `M` leaves
//! a remainder `Wⱼₖ r(λⱼ,λₖ,λ̇ⱼ,λ̇ₖ) + Σₗ WⱼₗWₗₖ s(λⱼ,λₖ,λₗ)` that has to vanish
//! for every eigenvalue configuration. `r` and `s` are evaluated here term by
//! term so a caller can compare each residual with the size of its parts.

/// Weight `p(λⱼ,λₖ,λₗ)` of the quadratic `Ṙ` terms in the eigenframe curvature.
pub fn blend_weight(j: f64, k: f64, l: f64) -> f64 {
    let (j2, k2, l2) = (j * j, k * k, l * l);
    (l2 * l * (j + k) - l2 * (j2 + k2 - j * k) - j2 * k2) / ((j2 + k2) * (j2 + l2) * (k2 + l2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    pub r: f64,
    pub s: f64,
    /// Largest absolute term entering `r`.
    pub r_scale: f64,
    /// Largest absolute term entering `s`.
    pub s_scale: f64,
}

impl IdentityResiduals {
    pub fn r_relative(&self) -> f64 {
        relative(self.r, self.r_scale)
    }

    pub fn s_relative(&self) -> f64 {
        relative(self.s, self.s_scale)
    }
}

fn relative(value: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        value.abs() / scale
    } else {
        value.abs()
    }
}

// f(a, b) = (a² − b²)(a + b)/(a² + b²) and its partial derivatives
fn f(a: f64, b: f64) -> f64 {
    (a * a - b * b) * (a + b) / (a * a + b * b)
}

fn f_partials(a: f64, b: f64) -> (f64, f64) {
    let n = (a * a - b * b) * (a + b);
    let d = a * a + b * b;
    let na = 3.0 * a * a + 2.0 * a * b - b * b;
    let nb = a * a - 2.0 * a * b - 3.0 * b * b;
    ((na * d - n * 2.0 * a) / (d * d), (nb * d - n * 2.0 * b) / (d * d))
}

fn sum_with_scale(terms: &[f64]) -> (f64, f64) {
    let sum = terms.iter().sum();
    let scale = terms.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    (sum, scale)
}

/// Evaluate `r(λⱼ,λₖ,λ̇ⱼ,λ̇ₖ)` and `s(λⱼ,λₖ,λₗ)`.
pub fn weight_identities(lj: f64, lk: f64, ll: f64, dj: f64, dk: f64) -> IdentityResiduals {
    let (fa, fb) = f_partials(lj, lk);
    let r_terms = [
        (lj - lk) * (fa * dj + fb * dk),
        -f(lj, lk) * (dj - dk),
        -2.0 * (lj - lk) * (lk * lk - lj * lj) * dj * blend_weight(lj, lk, lj),
        -2.0 * (lj - lk) * (lk * lk - lj * lj) * dk * blend_weight(lj, lk, lk),
    ];
    let (j2, k2, l2) = (lj * lj, lk * lk, ll * ll);
    let s_terms = [
        -(l2 - k2).powi(2) / (l2 + k2),
        (j2 - l2).powi(2) / (j2 + l2),
        (lj + lk) * (k2 - j2) * (lj + lk - 2.0 * ll) / (j2 + k2),
        -2.0 * (lj - ll) * (lk - ll) * (j2 - k2) * blend_weight(lj, lk, ll),
    ];
    let (r, r_scale) = sum_with_scale(&r_terms);
    let (s, s_scale) = sum_with_scale(&s_terms);
    IdentityResiduals { r, s, r_scale, s_scale }
}
