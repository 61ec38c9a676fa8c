//! Piecewise-constant potentials `U(x)`, the inversion/translation maps
//! `F(x) = σx + ρ`, and the exact set on which `U(x) = U(F(x))`.
//!
//! All quantities are dimensionless. For matter waves `U = E - V` (with
//! `2m/ħ² = 1`), for optical waves `U = ω²n²` (with `c = 1`); see
//! [`Landscape`] for the energy-dependent construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when checking slab contiguity and when merging
/// coincident breakpoints.
pub const COORD_EPS: f64 = 1e-12;

/// Relative tolerance on `|U(x) - U(F(x))|` (scaled by `max |U|`).
pub const DEFAULT_TOL_U_REL: f64 = 1e-12;

/// A homogeneous layer `[x_left, x_left + width)` with constant `U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    pub x_left: f64,
    pub width: f64,
    pub u_value: f64,
}

impl Slab {
    pub fn new(x_left: f64, width: f64, u_value: f64) -> Self {
        Self {
            x_left,
            width,
            u_value,
        }
    }

    pub fn x_right(&self) -> f64 {
        self.x_left + self.width
    }
}

/// A validated, contiguous stack of slabs embedded between two homogeneous
/// asymptotic regions with positive `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialProfile {
    slabs: Vec<Slab>,
    u_left: f64,
    u_right: f64,
    breakpoints: Vec<f64>,
}

impl PotentialProfile {
    /// Validates and builds a profile. Slabs must be sorted and contiguous.
    pub fn new(slabs: Vec<Slab>, u_left: f64, u_right: f64) -> Result<Self> {
        if !u_left.is_finite() || !u_right.is_finite() {
            return Err(Error::NonFinite("asymptotic potential"));
        }
        if u_left <= 0.0 {
            return Err(Error::NonPositiveAsymptote {
                side: "left",
                value: u_left,
            });
        }
        if u_right <= 0.0 {
            return Err(Error::NonPositiveAsymptote {
                side: "right",
                value: u_right,
            });
        }
        if slabs.is_empty() && u_left != u_right {
            return Err(Error::UnequalFreeSpace {
                left: u_left,
                right: u_right,
            });
        }
        for (index, slab) in slabs.iter().enumerate() {
            if !slab.x_left.is_finite() || !slab.width.is_finite() || !slab.u_value.is_finite() {
                return Err(Error::InvalidSlab {
                    index,
                    reason: "non-finite field".into(),
                });
            }
            if slab.width <= 0.0 {
                return Err(Error::InvalidSlab {
                    index,
                    reason: format!("width {} is not positive", slab.width),
                });
            }
        }
        for (i, pair) in slabs.windows(2).enumerate() {
            let end = pair[0].x_right();
            let mismatch = pair[1].x_left - end;
            let scale = end.abs().max(pair[1].x_left.abs()).max(1.0);
            if mismatch.abs() > COORD_EPS * scale {
                return Err(Error::NonContiguous {
                    left: i,
                    right: i + 1,
                    mismatch,
                });
            }
        }
        let mut breakpoints: Vec<f64> = slabs.iter().map(|s| s.x_left).collect();
        if let Some(last) = slabs.last() {
            breakpoints.push(last.x_right());
        }
        Ok(Self {
            slabs,
            u_left,
            u_right,
            breakpoints,
        })
    }

    /// Builds a profile from `n + 1` breakpoints and `n` slab values.
    pub fn from_breakpoints(breakpoints: &[f64], values: &[f64], u_left: f64, u_right: f64) -> Result<Self> {
        if values.is_empty() {
            if breakpoints.len() > 1 {
                return Err(Error::InvalidArgument(
                    "breakpoints given without slab values".into(),
                ));
            }
            return Self::new(Vec::new(), u_left, u_right);
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} breakpoints for {} slabs",
                breakpoints.len(),
                values.len()
            )));
        }
        let slabs = values
            .iter()
            .enumerate()
            .map(|(i, &u)| Slab::new(breakpoints[i], breakpoints[i + 1] - breakpoints[i], u))
            .collect();
        let mut profile = Self::new(slabs, u_left, u_right)?;
        // keep the caller's breakpoints bit-exact (x_left + width can round)
        profile.breakpoints = breakpoints.to_vec();
        Ok(profile)
    }

    /// Homogeneous medium with `U = u` everywhere.
    pub fn free_space(u: f64) -> Result<Self> {
        Self::new(Vec::new(), u, u)
    }

    pub fn slabs(&self) -> &[Slab] {
        &self.slabs
    }

    pub fn u_left(&self) -> f64 {
        self.u_left
    }

    pub fn u_right(&self) -> f64 {
        self.u_right
    }

    /// Slab edges in increasing order (`n + 1` values, empty for free space).
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn is_free_space(&self) -> bool {
        self.slabs.is_empty()
    }

    /// The finite region `[first breakpoint, last breakpoint]` occupied by
    /// the scatterer, if any.
    pub fn scatterer(&self) -> Option<Interval> {
        match (self.breakpoints.first(), self.breakpoints.last()) {
            (Some(&a), Some(&b)) => Some(Interval::new(a, b)),
            _ => None,
        }
    }

    /// Right-continuous evaluation of `U(x)`.
    pub fn eval_u(&self, x: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&b| b <= x);
        if idx == 0 {
            self.u_left
        } else if idx >= self.breakpoints.len() {
            if self.slabs.is_empty() {
                self.u_left
            } else {
                self.u_right
            }
        } else {
            self.slabs[idx - 1].u_value
        }
    }

    /// `max |U|` over slabs and asymptotes.
    pub fn u_scale(&self) -> f64 {
        self.slabs
            .iter()
            .map(|s| s.u_value.abs())
            .fold(self.u_left.abs().max(self.u_right.abs()), f64::max)
    }

    /// Default comparison tolerance for potential values.
    pub fn default_tol_u(&self) -> f64 {
        DEFAULT_TOL_U_REL * self.u_scale()
    }

    /// Two average slab widths (2 for free space).
    pub fn default_pad(&self) -> f64 {
        match self.scatterer() {
            Some(s) => 2.0 * s.width() / self.slabs.len() as f64,
            None => 2.0,
        }
    }

    /// `[first breakpoint - pad, last breakpoint + pad]`, or `[-pad, pad]`
    /// for free space.
    pub fn bounding_box(&self, pad: Option<f64>) -> Interval {
        let pad = pad.unwrap_or_else(|| self.default_pad());
        match self.scatterer() {
            Some(s) => Interval::new(s.start - pad, s.end + pad),
            None => Interval::new(-pad, pad),
        }
    }

    /// Scale for coordinate comparisons.
    pub(crate) fn coord_scale(&self) -> f64 {
        self.breakpoints
            .iter()
            .fold(1.0_f64, |acc, b| acc.max(b.abs()))
    }

    /// Exact test of whether `U` is constant on the open interval: no
    /// breakpoint inside it carries a jump of `U`.
    pub fn is_constant_on(&self, interval: &Interval) -> bool {
        !self.breakpoints.iter().enumerate().any(|(i, &b)| {
            let before = if i == 0 { self.u_left } else { self.slabs[i - 1].u_value };
            b > interval.start && b < interval.end && before != self.eval_u(b)
        })
    }
}

/// The affine map `x ↦ σx + ρ`: inversion through `α = ρ/2` for `σ = -1`,
/// translation by `L = ρ` for `σ = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryTransform {
    sigma: i32,
    rho: f64,
}

impl SymmetryTransform {
    pub fn new(sigma: i32, rho: f64) -> Result<Self> {
        if sigma != -1 && sigma != 1 {
            return Err(Error::InvalidSigma(sigma));
        }
        if !rho.is_finite() {
            return Err(Error::NonFinite("transform offset"));
        }
        Ok(Self { sigma, rho })
    }

    /// Inversion through `center`.
    pub fn inversion(center: f64) -> Self {
        Self {
            sigma: -1,
            rho: 2.0 * center,
        }
    }

    /// Translation by `length`.
    pub fn translation(length: f64) -> Self {
        Self {
            sigma: 1,
            rho: length,
        }
    }

    pub fn sigma(&self) -> i32 {
        self.sigma
    }

    pub fn sigma_f64(&self) -> f64 {
        self.sigma as f64
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn is_inversion(&self) -> bool {
        self.sigma == -1
    }

    /// Inversion center `ρ/2` (meaningful for inversions only).
    pub fn center(&self) -> f64 {
        0.5 * self.rho
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.sigma_f64() * x + self.rho
    }

    /// `F⁻¹(y)`.
    pub fn preimage(&self, y: f64) -> f64 {
        self.sigma_f64() * (y - self.rho)
    }

    /// `F⁻¹` of a closed interval, endpoints reordered.
    pub fn preimage_interval(&self, interval: &Interval) -> Interval {
        let a = self.preimage(interval.start);
        let b = self.preimage(interval.end);
        Interval::new(a.min(b), a.max(b))
    }

    /// Image of a closed interval, endpoints reordered.
    pub fn image(&self, interval: &Interval) -> Interval {
        let a = self.apply(interval.start);
        let b = self.apply(interval.end);
        Interval::new(a.min(b), a.max(b))
    }
}

/// `transform_point(F, x) = σx + ρ`.
pub fn transform_point(transform: &SymmetryTransform, x: f64) -> f64 {
    transform.apply(x)
}

/// Closed interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start && x <= self.end
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.start >= self.start && other.end <= self.end
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (start <= end).then(|| Interval::new(start, end))
    }

    /// True when the closed intervals share no point.
    pub fn is_disjoint(&self, other: &Interval) -> bool {
        self.end < other.start || other.end < self.start
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    /// `n >= 2` points: both endpoints plus `n - 2` uniform interior points.
    pub fn sample_points(&self, n: usize) -> Vec<f64> {
        if n < 2 || self.width() == 0.0 {
            return vec![self.start];
        }
        let step = self.width() / (n - 1) as f64;
        (0..n)
            .map(|i| if i == n - 1 { self.end } else { self.start + step * i as f64 })
            .collect()
    }
}

/// A finite union of sorted, pairwise disjoint closed intervals.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Domain {
    intervals: Vec<Interval>,
}

impl Domain {
    /// Sorts and merges touching or overlapping intervals.
    pub fn from_intervals(mut intervals: Vec<Interval>) -> Self {
        intervals.retain(|iv| iv.end >= iv.start);
        intervals.sort_by(|a, b| a.start.total_cmp(&b.start));
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.start <= last.end => last.end = last.end.max(iv.end),
                _ => merged.push(iv),
            }
        }
        Self { intervals: merged }
    }

    pub fn single(interval: Interval) -> Self {
        Self {
            intervals: vec![interval],
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Connected components.
    pub fn components(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(Interval::width).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
    }

    pub fn intersect_interval(&self, other: &Interval) -> Domain {
        Domain {
            intervals: self
                .intervals
                .iter()
                .filter_map(|iv| iv.intersect(other))
                .collect(),
        }
    }

    /// True when a single component spans `bbox`.
    pub fn covers(&self, bbox: &Interval) -> bool {
        self.intervals.iter().any(|iv| iv.contains_interval(bbox))
    }

    pub fn image(&self, transform: &SymmetryTransform) -> Domain {
        Domain::from_intervals(self.intervals.iter().map(|iv| transform.image(iv)).collect())
    }

    /// Component containing `x`.
    pub fn component_containing(&self, x: f64) -> Option<Interval> {
        self.intervals.iter().copied().find(|iv| iv.contains(x))
    }
}

/// Maximal set `{x ∈ bbox : |U(x) - U(F(x))| <= tol_u}`.
///
/// Exact for piecewise-constant `U`: the breakpoints of `U` and their
/// preimages under `F` cut `bbox` into elementary intervals on which both
/// `U(x)` and `U(F(x))` are constant, so one midpoint test per interval
/// decides membership.
pub fn symmetry_set(
    profile: &PotentialProfile,
    transform: &SymmetryTransform,
    tol_u: f64,
    bbox: &Interval,
) -> Domain {
    let cuts = elementary_cuts(profile, transform, bbox);
    let mut intervals: Vec<Interval> = Vec::new();
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let diff = (profile.eval_u(mid) - profile.eval_u(transform.apply(mid))).abs();
        if diff <= tol_u {
            match intervals.last_mut() {
                Some(last) if last.end == a => last.end = b,
                _ => intervals.push(Interval::new(a, b)),
            }
        }
    }
    Domain { intervals }
}

/// [`symmetry_set`] with the default tolerance and bounding box.
pub fn symmetry_set_default(profile: &PotentialProfile, transform: &SymmetryTransform) -> Domain {
    symmetry_set(
        profile,
        transform,
        profile.default_tol_u(),
        &profile.bounding_box(None),
    )
}

/// Sorted cut points of `bbox`: box edges, breakpoints and their preimages.
/// Points closer than the coordinate tolerance are merged, keeping a true
/// breakpoint over a preimage so that domain edges stay bit-exact.
pub(crate) fn elementary_cuts(profile: &PotentialProfile, transform: &SymmetryTransform, bbox: &Interval) -> Vec<f64> {
    // (coordinate, priority): 0 = box edge, 1 = breakpoint, 2 = preimage
    let mut points: Vec<(f64, u8)> = vec![(bbox.start, 0), (bbox.end, 0)];
    for &b in profile.breakpoints() {
        points.push((b, 1));
        points.push((transform.preimage(b), 2));
    }
    points.retain(|&(x, _)| x >= bbox.start && x <= bbox.end);
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let eps = COORD_EPS * profile.coord_scale().max(bbox.start.abs()).max(bbox.end.abs());
    let mut cuts: Vec<(f64, u8)> = Vec::with_capacity(points.len());
    for p in points {
        match cuts.last_mut() {
            Some(last) if p.0 - last.0 <= eps => {
                if p.1 < last.1 {
                    *last = p;
                }
            }
            _ => cuts.push(p),
        }
    }
    cuts.into_iter().map(|(x, _)| x).collect()
}

/// Interpretation of slab values for [`Landscape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Values are potentials `V`; `U = E - V`.
    #[default]
    Matter,
    /// Values are refractive indices `n`; the energy parameter is `ω` and
    /// `U = ω² n²`.
    Optical,
    /// Values are `U` itself; the energy parameter is only a label.
    Direct,
}

/// An energy-independent description of the medium: slab values are `V`
/// (matter), `n` (optical) or `U` (direct). [`Landscape::at_energy`] yields the `U` profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub convention: Convention,
    /// `(x_left, width, value)` per slab.
    pub slabs: Vec<Slab>,
    pub left: f64,
    pub right: f64,
}

impl Landscape {
    pub fn u_of(&self, value: f64, energy: f64) -> f64 {
        match self.convention {
            Convention::Matter => energy - value,
            Convention::Optical => energy * energy * value * value,
            Convention::Direct => value,
        }
    }

    /// `U(x)` at the given energy (matter) or frequency (optical). Fails if
    /// an asymptotic region is not propagating.
    pub fn at_energy(&self, energy: f64) -> Result<PotentialProfile> {
        let slabs = self
            .slabs
            .iter()
            .map(|s| Slab::new(s.x_left, s.width, self.u_of(s.u_value, energy)))
            .collect();
        PotentialProfile::new(slabs, self.u_of(self.left, energy), self.u_of(self.right, energy))
    }
}
