//! Non-local currents `Q`, `Q̃` of a symmetry transform, the sum rule
//! `|Q̃|² - |Q|² = σJ²`, the field mapping `A(F(x)) = (Q̃A - QA*)/J`, and
//! the eigenfunction (parity / Bloch) limits reached when `Q = 0`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{Domain, SymmetryTransform};
use crate::solver::{FieldEvaluator, FieldSample};

/// Samples per component used by [`invariant_pair`] when not overridden.
pub const DEFAULT_SAMPLES: usize = 17;

/// Relative spread of `Q`, `Q̃` below which they count as constant.
pub const DEFAULT_CONSTANCY_TOL: f64 = 1e-9;

/// `|J| <= ZERO_CURRENT_REL * scale` makes the field mapping collapse.
pub const ZERO_CURRENT_REL: f64 = 1e-10;

/// `|Q| <= BLOCH_Q_REL * scale` is treated as `Q = 0` by [`bloch_phase`].
pub const BLOCH_Q_REL: f64 = 1e-9;

const HALF_OVER_I: Complex64 = Complex64 { re: 0.0, im: -0.5 };

/// `Q(x) = (1/2i)[σ A(x) A'(x̄) - A(x̄) A'(x)]`, `x̄ = F(x)`.
///
/// `A'(x̄)` is the derivative function evaluated at `x̄`, not the derivative
/// of `x ↦ A(F(x))`.
pub fn q_at(field: &(impl FieldEvaluator + ?Sized), transform: &SymmetryTransform, x: f64) -> Complex64 {
    let here = field.field_at(x);
    let there = field.field_at(transform.apply(x));
    q_from_samples(transform.sigma_f64(), here, there)
}

/// `Q̃(x) = (1/2i)[σ A*(x) A'(x̄) - A(x̄) A'*(x)]`.
pub fn qtilde_at(field: &(impl FieldEvaluator + ?Sized), transform: &SymmetryTransform, x: f64) -> Complex64 {
    let here = field.field_at(x);
    let there = field.field_at(transform.apply(x));
    qtilde_from_samples(transform.sigma_f64(), here, there)
}

pub fn q_from_samples(sigma: f64, here: FieldSample, there: FieldSample) -> Complex64 {
    (here.a_value * there.a_deriv * sigma - there.a_value * here.a_deriv) * HALF_OVER_I
}

pub fn qtilde_from_samples(sigma: f64, here: FieldSample, there: FieldSample) -> Complex64 {
    (here.a_value.conj() * there.a_deriv * sigma - there.a_value * here.a_deriv.conj()) * HALF_OVER_I
}

/// `Q`, `Q̃`, `J` at one point together with the magnitude of the products
/// they are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalInvariants {
    pub x: f64,
    pub q: Complex64,
    pub q_tilde: Complex64,
    pub j: f64,
    /// `max(|A(x) A'(x̄)|, |A(x̄) A'(x)|, |A(x) A'(x)|)`: the size of the terms
    /// whose differences make up `Q`, `Q̃` and `J`.
    pub term_scale: f64,
}

impl LocalInvariants {
    pub fn at(field: &(impl FieldEvaluator + ?Sized), transform: &SymmetryTransform, x: f64) -> Self {
        let here = field.field_at(x);
        let there = field.field_at(transform.apply(x));
        let sigma = transform.sigma_f64();
        let term_scale = (here.a_value.norm() * there.a_deriv.norm())
            .max(there.a_value.norm() * here.a_deriv.norm())
            .max(here.a_value.norm() * here.a_deriv.norm());
        Self {
            x,
            q: q_from_samples(sigma, here, there),
            q_tilde: qtilde_from_samples(sigma, here, there),
            j: here.current(),
            term_scale,
        }
    }

    /// `| |Q̃|² - |Q|² - σJ² |` at this point.
    pub fn sum_rule_residual(&self, sigma: f64) -> f64 {
        (self.q_tilde.norm_sqr() - self.q.norm_sqr() - sigma * self.j * self.j).abs()
    }
}

/// `(Q, Q̃, J)` of one transform on one domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantPair {
    pub q: Complex64,
    pub q_tilde: Complex64,
    pub j: f64,
    pub transform: SymmetryTransform,
    pub domain: Domain,
    /// `max |Q(x) - Q̄| + |Q̃(x) - Q̃̄|` over the samples, divided by `scale`.
    pub constancy_residual: f64,
    /// Yardstick for all relative tolerances of this pair.
    pub scale: f64,
    pub n_samples: usize,
    #[serde(skip)]
    pub state_id: Option<u64>,
}

impl InvariantPair {
    pub fn sigma(&self) -> f64 {
        self.transform.sigma_f64()
    }

    pub fn is_constant(&self, tol: f64) -> bool {
        self.constancy_residual <= tol
    }

    /// Sum-rule residual relative to `max(|Q|², |Q̃|², J², scale²)`.
    pub fn relative_sum_rule_residual(&self) -> f64 {
        let denom = self
            .q
            .norm_sqr()
            .max(self.q_tilde.norm_sqr())
            .max(self.j * self.j)
            .max(self.scale * self.scale);
        if denom == 0.0 {
            0.0
        } else {
            sum_rule_residual(self) / denom
        }
    }

    /// `ε_J` below which the mapping is refused.
    pub fn zero_current_threshold(&self) -> f64 {
        ZERO_CURRENT_REL * self.scale
    }
}

/// `Q`, `Q̃`, `J` on `n_samples` points per component of `domain`.
pub fn sample_invariants(
    field: &(impl FieldEvaluator + ?Sized),
    transform: &SymmetryTransform,
    domain: &Domain,
    n_samples: usize,
) -> Vec<LocalInvariants> {
    domain
        .components()
        .iter()
        .flat_map(|c| c.sample_points(n_samples))
        .map(|x| LocalInvariants::at(field, transform, x))
        .collect()
}

/// Means of `Q`, `Q̃`, `J` over `domain` with the constancy residual.
///
/// Non-constancy is reported through `constancy_residual`, never as an error:
/// outside symmetry domains the currents are simply position dependent.
pub fn invariant_pair(
    field: &(impl FieldEvaluator + ?Sized),
    transform: &SymmetryTransform,
    domain: &Domain,
    n_samples: usize,
) -> Result<InvariantPair> {
    if domain.is_empty() {
        return Err(Error::EmptyDomain);
    }
    if n_samples < 2 {
        return Err(Error::InvalidArgument(format!("n_samples = {n_samples} < 2")));
    }
    let samples = sample_invariants(field, transform, domain, n_samples);
    let count = samples.len() as f64;
    let q = samples.iter().map(|s| s.q).sum::<Complex64>() / count;
    let q_tilde = samples.iter().map(|s| s.q_tilde).sum::<Complex64>() / count;
    let j = samples.iter().map(|s| s.j).sum::<f64>() / count;
    let term_scale = samples.iter().map(|s| s.term_scale).fold(0.0, f64::max);
    let scale = term_scale.max(q.norm()).max(q_tilde.norm()).max(j.abs());
    let spread = samples
        .iter()
        .map(|s| (s.q - q).norm() + (s.q_tilde - q_tilde).norm())
        .fold(0.0, f64::max);
    Ok(InvariantPair {
        q,
        q_tilde,
        j,
        transform: *transform,
        domain: domain.clone(),
        constancy_residual: if scale > 0.0 { spread / scale } else { 0.0 },
        scale,
        n_samples,
        state_id: field.origin_id(),
    })
}

/// `| |Q̃|² - |Q|² - σJ² |` (absolute).
pub fn sum_rule_residual(pair: &InvariantPair) -> f64 {
    (pair.q_tilde.norm_sqr() - pair.q.norm_sqr() - pair.sigma() * pair.j * pair.j).abs()
}

/// Predicted `A(F(x)) = (Q̃ A(x) - Q A*(x)) / J`.
pub fn map_field(pair: &InvariantPair, sample: &FieldSample) -> Result<Complex64> {
    let threshold = pair.zero_current_threshold();
    if pair.j.abs() <= threshold {
        return Err(Error::ZeroCurrent {
            current: pair.j,
            threshold,
        });
    }
    Ok((pair.q_tilde * sample.a_value - pair.q * sample.a_value.conj()) / pair.j)
}

/// If `Q` vanishes (relative to the pair scale) and `J` does not, the field
/// is an eigenfunction of the transform with eigenvalue `λ = Q̃/J`, which must
/// lie on the unit circle within `tol`. Returns `None` otherwise.
pub fn eigenvalue_check(pair: &InvariantPair, tol: f64) -> Option<Complex64> {
    if pair.q.norm() > tol * pair.scale || pair.j.abs() <= pair.zero_current_threshold() {
        return None;
    }
    let lambda = pair.q_tilde / pair.j;
    ((lambda.norm() - 1.0).abs() <= tol).then_some(lambda)
}

/// Bloch phase `arg(Q̃/J) ∈ (-π, π]` of a translation pair with `Q = 0`.
///
/// The raw principal value is returned. Since `Q̃ = ±|J| e^{ikL}` with the
/// sign set by the direction of the current, the phase of `Q̃` alone is only
/// defined up to multiples of π; dividing by the signed `J` removes that.
pub fn bloch_phase(pair: &InvariantPair) -> Result<f64> {
    bloch_phase_with_tol(pair, BLOCH_Q_REL)
}

pub fn bloch_phase_with_tol(pair: &InvariantPair, tol: f64) -> Result<f64> {
    if pair.transform.is_inversion() {
        return Err(Error::NotTranslation);
    }
    let threshold = tol * pair.scale;
    if pair.q.norm() > threshold {
        return Err(Error::NotBlochState {
            q_abs: pair.q.norm(),
            threshold,
        });
    }
    if pair.j.abs() <= pair.zero_current_threshold() {
        return Err(Error::ZeroCurrent {
            current: pair.j,
            threshold: pair.zero_current_threshold(),
        });
    }
    Ok((pair.q_tilde / pair.j).arg())
}

/// Parity of a field under inversion through `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

/// Classifies `A` as even/odd about `alpha` on `grid` (relative tolerance
/// `tol` against `max |A|`), also requiring `A'(α) = 0` (even) or `A(α) = 0`
/// (odd) relative to `max |A'|` resp. `max |A|`.
pub fn parity_character(field: &(impl FieldEvaluator + ?Sized), alpha: f64, grid: &[f64], tol: f64) -> Parity {
    let pairs: Vec<(FieldSample, FieldSample)> = grid
        .iter()
        .map(|&x| (field.field_at(x), field.field_at(2.0 * alpha - x)))
        .collect();
    let center = field.field_at(alpha);
    let a_scale = pairs
        .iter()
        .map(|(a, b)| a.a_value.norm().max(b.a_value.norm()))
        .fold(center.a_value.norm(), f64::max);
    let d_scale = pairs
        .iter()
        .map(|(a, b)| a.a_deriv.norm().max(b.a_deriv.norm()))
        .fold(center.a_deriv.norm(), f64::max);
    if a_scale == 0.0 {
        return Parity::None;
    }
    let matches = |sign: f64| {
        pairs
            .iter()
            .all(|(a, b)| (b.a_value - a.a_value * sign).norm() <= tol * a_scale)
    };
    if matches(1.0) && center.a_deriv.norm() <= tol * d_scale.max(f64::MIN_POSITIVE) {
        Parity::Even
    } else if matches(-1.0) && center.a_value.norm() <= tol * a_scale {
        Parity::Odd
    } else {
        Parity::None
    }
}
