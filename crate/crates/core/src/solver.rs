//! Exact solution of `A'' + U(x) A = 0` on piecewise-constant profiles.
//!
//! Fields are carried in the `(A, A')` representation, where matching at an
//! interface is the identity and every slab acts through a real unimodular
//! 2×2 matrix. A [`Solution`] stores `(A, A')` at every breakpoint; inside a
//! slab the field is reconstructed from the neighbouring node values.

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{Interval, PotentialProfile};

/// `|U|` below `FLAT_REL * max|U|` is treated as exactly zero (linear basis).
pub const FLAT_REL: f64 = 1e-14;

/// Backward/forward sweeps renormalize once node values exceed this.
const RESCALE_LIMIT: f64 = 1e100;

/// Largest `q·d` crossed in one propagator step during a sweep.
const MAX_GROWTH_EXPONENT: f64 = 30.0;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

static NEXT_SOLUTION_ID: AtomicU64 = AtomicU64::new(1);

fn next_id() -> u64 {
    NEXT_SOLUTION_ID.fetch_add(1, Ordering::Relaxed)
}

/// Field value and derivative at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub a_value: Complex64,
    pub a_deriv: Complex64,
}

impl FieldSample {
    pub fn new(a_value: Complex64, a_deriv: Complex64) -> Self {
        Self { a_value, a_deriv }
    }

    /// `J = Im(A* A')`.
    pub fn current(&self) -> f64 {
        (self.a_value.conj() * self.a_deriv).im
    }

    fn scale(self, factor: Complex64) -> Self {
        Self::new(self.a_value * factor, self.a_deriv * factor)
    }

    fn norm(&self) -> f64 {
        self.a_value.norm().max(self.a_deriv.norm())
    }

    pub fn is_finite(&self) -> bool {
        self.a_value.is_finite() && self.a_deriv.is_finite()
    }
}

/// Anything that can evaluate `A(x)` and `A'(x)`.
pub trait FieldEvaluator {
    fn field_at(&self, x: f64) -> FieldSample;

    /// Identity of the underlying solved state, when there is one.
    fn origin_id(&self) -> Option<u64> {
        None
    }
}

impl<F: Fn(f64) -> FieldSample> FieldEvaluator for F {
    fn field_at(&self, x: f64) -> FieldSample {
        self(x)
    }
}

/// Side from which the unit-amplitude wave is incident.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Incidence {
    #[default]
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Medium {
    /// `U > 0`, `κ = √U`.
    Oscillatory(f64),
    /// `U < 0`, `κ = i q` with `q = √-U`.
    Evanescent(f64),
    Flat,
}

impl Medium {
    fn classify(u: f64, flat_threshold: f64) -> Self {
        if u.abs() <= flat_threshold {
            Medium::Flat
        } else if u > 0.0 {
            Medium::Oscillatory(u.sqrt())
        } else {
            Medium::Evanescent((-u).sqrt())
        }
    }

    /// Real propagator over a signed displacement `d`:
    /// `(A, A')(x + d) = M(d) (A, A')(x)`.
    fn propagator(self, u: f64, d: f64) -> [[f64; 2]; 2] {
        match self {
            Medium::Oscillatory(k) => {
                let (s, c) = (k * d).sin_cos();
                [[c, s / k], [-k * s, c]]
            }
            Medium::Evanescent(q) => {
                let (s, c) = ((q * d).sinh(), (q * d).cosh());
                [[c, s / q], [q * s, c]]
            }
            Medium::Flat => [[1.0, d], [-u * d, 1.0]],
        }
    }
}

fn apply(m: &[[f64; 2]; 2], s: FieldSample) -> FieldSample {
    FieldSample::new(
        s.a_value * m[0][0] + s.a_deriv * m[0][1],
        s.a_value * m[1][0] + s.a_deriv * m[1][1],
    )
}

/// A solution of the wave equation on a whole profile, stored as
/// `(A, A')` at every breakpoint (or at `x = 0` for free space).
#[derive(Debug, Clone)]
pub struct Solution {
    profile: PotentialProfile,
    nodes: Vec<f64>,
    values: Vec<FieldSample>,
    flat_threshold: f64,
    id: u64,
}

impl Solution {
    fn anchors(profile: &PotentialProfile) -> Vec<f64> {
        if profile.is_free_space() {
            vec![0.0]
        } else {
            profile.breakpoints().to_vec()
        }
    }

    fn flat_threshold(profile: &PotentialProfile) -> f64 {
        FLAT_REL * profile.u_scale()
    }

    /// The solution through `(A, A')(x) = sample`, propagated outward.
    pub fn from_initial(profile: &PotentialProfile, x: f64, sample: FieldSample) -> Self {
        let nodes = Self::anchors(profile);
        let flat = Self::flat_threshold(profile);
        let mut values = vec![sample; nodes.len()];
        // index of the first node strictly to the right of x
        let right = nodes.partition_point(|&b| b <= x);
        // walk left from x; the region left of node i carries U(node i)
        let mut cur = sample;
        let mut pos = x;
        for i in (0..right).rev() {
            let u = profile.eval_u(nodes[i]);
            let medium = Medium::classify(u, flat);
            cur = apply(&medium.propagator(u, nodes[i] - pos), cur);
            pos = nodes[i];
            values[i] = cur;
        }
        let mut cur = sample;
        let mut pos = x;
        for (i, &node) in nodes.iter().enumerate().skip(right) {
            let u = profile.eval_u(pos);
            let medium = Medium::classify(u, flat);
            cur = apply(&medium.propagator(u, node - pos), cur);
            pos = node;
            values[i] = cur;
        }
        Self {
            profile: profile.clone(),
            nodes,
            values,
            flat_threshold: flat,
            id: next_id(),
        }
    }

    /// Linear combination `Σ cᵢ ψᵢ` of solutions on the same profile.
    pub fn superpose(terms: &[(&Solution, Complex64)]) -> Result<Self> {
        let (first, _) = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty superposition".into()))?;
        if terms.iter().any(|(s, _)| s.profile != first.profile) {
            return Err(Error::ProfileMismatch);
        }
        let values = (0..first.nodes.len())
            .map(|i| {
                terms.iter().fold(
                    FieldSample::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
                    |acc, (s, c)| {
                        let v = s.values[i];
                        FieldSample::new(acc.a_value + v.a_value * c, acc.a_deriv + v.a_deriv * c)
                    },
                )
            })
            .collect();
        Ok(Self {
            profile: first.profile.clone(),
            nodes: first.nodes.clone(),
            values,
            flat_threshold: first.flat_threshold,
            id: next_id(),
        })
    }

    pub fn profile(&self) -> &PotentialProfile {
        &self.profile
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// Node coordinates and the `(A, A')` stored there.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, FieldSample)> + '_ {
        self.nodes.iter().copied().zip(self.values.iter().copied())
    }

    /// `A(x)`, `A'(x)` evaluated exactly from the local solution.
    pub fn field_at(&self, x: f64) -> FieldSample {
        let n = self.nodes.len();
        let idx = self.nodes.partition_point(|&b| b <= x);
        if idx == 0 || idx == n {
            // asymptotic region: U > 0, propagate from the nearest node
            let node = if idx == 0 { 0 } else { n - 1 };
            let u = self.profile.eval_u(x);
            let medium = Medium::classify(u, self.flat_threshold);
            return apply(&medium.propagator(u, x - self.nodes[node]), self.values[node]);
        }
        let (x0, x1) = (self.nodes[idx - 1], self.nodes[idx]);
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        let u = self.profile.eval_u(x0);
        match Medium::classify(u, self.flat_threshold) {
            Medium::Evanescent(q) => {
                // A = α e^{-q(x-x0)} + β e^{q(x-x1)}: both exponentials ≤ 1
                let alpha = (v0.a_value - v0.a_deriv / q) * 0.5;
                let beta = (v1.a_value + v1.a_deriv / q) * 0.5;
                let decay = (-q * (x - x0)).exp();
                let grow = (q * (x - x1)).exp();
                FieldSample::new(
                    alpha * decay + beta * grow,
                    (beta * grow - alpha * decay) * q,
                )
            }
            medium => {
                let (base, v) = if x - x0 <= x1 - x { (x0, v0) } else { (x1, v1) };
                apply(&medium.propagator(u, x - base), v)
            }
        }
    }

    /// `J(x) = Im(A* A')`.
    pub fn current(&self, x: f64) -> f64 {
        self.field_at(x).current()
    }
}

impl FieldEvaluator for Solution {
    fn field_at(&self, x: f64) -> FieldSample {
        Solution::field_at(self, x)
    }

    fn origin_id(&self) -> Option<u64> {
        Some(self.id)
    }
}

/// Plane-wave (or linear, for `U = 0`) coefficients of one region.
///
/// For `U ≠ 0` the field is `a e^{iκ(x-x_ref)} + b e^{-iκ(x-x_ref)}` with
/// `κ = √U` (principal branch, `Im κ ≥ 0`); for `U = 0` it is
/// `a + b (x - x_ref)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionCoefficients {
    pub x_ref: f64,
    pub u_value: f64,
    pub kappa: Complex64,
    pub a: Complex64,
    pub b: Complex64,
}

/// A one-sided scattering state with unit incident amplitude.
///
/// Left incidence: `A = e^{ik_L x} + r e^{-ik_L x}` left of the scatterer and
/// `A = t e^{ik_R x}` right of it. Right incidence is the mirror image.
#[derive(Debug, Clone)]
pub struct ScatteringState {
    solution: Solution,
    incidence: Incidence,
    k_left: f64,
    k_right: f64,
    transmission: Complex64,
    reflection: Complex64,
}

/// Solves the scattering problem for unit incidence from `incidence`.
pub fn solve_scattering(profile: &PotentialProfile, incidence: Incidence) -> Result<ScatteringState> {
    let (u_l, u_r) = (profile.u_left(), profile.u_right());
    if u_l <= 0.0 {
        return Err(Error::NonPositiveAsymptote { side: "left", value: u_l });
    }
    if u_r <= 0.0 {
        return Err(Error::NonPositiveAsymptote { side: "right", value: u_r });
    }
    let k_left = u_l.sqrt();
    let k_right = u_r.sqrt();
    let nodes = Solution::anchors(profile);
    let flat = Solution::flat_threshold(profile);
    let n = nodes.len();

    // sweep from the transmission side, where the field is a single wave,
    // keeping node values bounded and tracking the log scale separately
    let mut scaled = vec![FieldSample::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); n];
    let mut log_scale = vec![0.0_f64; n];
    let order: Vec<usize> = match incidence {
        Incidence::Left => (0..n).rev().collect(),
        Incidence::Right => (0..n).collect(),
    };
    let (k_out, sign) = match incidence {
        Incidence::Left => (k_right, 1.0),
        Incidence::Right => (k_left, -1.0),
    };
    let start = order[0];
    let phase = (I * sign * k_out * nodes[start]).exp();
    scaled[start] = FieldSample::new(phase, I * sign * k_out * phase);
    for w in order.windows(2) {
        let (from, to) = (w[0], w[1]);
        let u = profile.eval_u(nodes[from.min(to)]);
        let medium = Medium::classify(u, flat);
        let d = nodes[to] - nodes[from];
        // thick evanescent slabs are crossed in steps of bounded growth
        let chunks = match medium {
            Medium::Evanescent(q) => ((q * d.abs()) / MAX_GROWTH_EXPONENT).ceil().max(1.0) as usize,
            _ => 1,
        };
        let step = medium.propagator(u, d / chunks as f64);
        let mut next = scaled[from];
        let mut log = log_scale[from];
        for _ in 0..chunks {
            next = apply(&step, next);
            let norm = next.norm();
            if norm > RESCALE_LIMIT {
                next = next.scale(Complex64::new(1.0 / norm, 0.0));
                log += norm.ln();
            }
        }
        scaled[to] = next;
        log_scale[to] = log;
    }

    // decompose at the incidence-side node into incident and reflected waves
    let end = *order.last().unwrap();
    let (k_in, x_end) = match incidence {
        Incidence::Left => (k_left, nodes[end]),
        Incidence::Right => (k_right, nodes[end]),
    };
    let v = scaled[end];
    let plus = (v.a_value + v.a_deriv / (I * k_in)) * 0.5;
    let minus = (v.a_value - v.a_deriv / (I * k_in)) * 0.5;
    // incident wave e^{±ik x}: amplitude of the ± component at the origin
    let (incident, reflected) = match incidence {
        Incidence::Left => (plus * (-I * k_in * x_end).exp(), minus * (I * k_in * x_end).exp()),
        Incidence::Right => (minus * (I * k_in * x_end).exp(), plus * (-I * k_in * x_end).exp()),
    };
    let log_end = log_scale[end];
    let transmission = Complex64::new((-log_end).exp(), 0.0) / incident;
    let reflection = reflected / incident;
    let values = scaled
        .iter()
        .zip(&log_scale)
        .map(|(s, &log)| s.scale(Complex64::new((log - log_end).exp(), 0.0) / incident))
        .collect();

    Ok(ScatteringState {
        solution: Solution {
            profile: profile.clone(),
            nodes,
            values,
            flat_threshold: flat,
            id: next_id(),
        },
        incidence,
        k_left,
        k_right,
        transmission,
        reflection,
    })
}

impl ScatteringState {
    pub fn solution(&self) -> &Solution {
        &self.solution
    }

    pub fn into_solution(self) -> Solution {
        self.solution
    }

    pub fn profile(&self) -> &PotentialProfile {
        self.solution.profile()
    }

    pub fn incidence(&self) -> Incidence {
        self.incidence
    }

    pub fn k_left(&self) -> f64 {
        self.k_left
    }

    pub fn k_right(&self) -> f64 {
        self.k_right
    }

    /// Asymptotic wavenumber on the incidence side.
    pub fn k_in(&self) -> f64 {
        match self.incidence {
            Incidence::Left => self.k_left,
            Incidence::Right => self.k_right,
        }
    }

    pub fn k_out(&self) -> f64 {
        match self.incidence {
            Incidence::Left => self.k_right,
            Incidence::Right => self.k_left,
        }
    }

    pub fn transmission(&self) -> Complex64 {
        self.transmission
    }

    pub fn reflection(&self) -> Complex64 {
        self.reflection
    }

    /// `|k_out |t|² + k_in |r|² - k_in| / k_in`.
    pub fn flux_residual(&self) -> f64 {
        let k_in = self.k_in();
        (self.k_out() * self.transmission.norm_sqr() + k_in * self.reflection.norm_sqr() - k_in).abs() / k_in
    }

    pub fn field_at(&self, x: f64) -> FieldSample {
        self.solution.field_at(x)
    }

    pub fn current(&self, x: f64) -> f64 {
        self.solution.current(x)
    }

    /// Coefficients of every region, left asymptote first.
    pub fn region_coefficients(&self) -> Vec<RegionCoefficients> {
        let sol = &self.solution;
        let n = sol.nodes.len();
        let mut out = Vec::with_capacity(n + 1);
        let mut push = |x_ref: f64, u: f64, v: FieldSample| {
            let coeffs = match Medium::classify(u, sol.flat_threshold) {
                Medium::Flat => RegionCoefficients {
                    x_ref,
                    u_value: u,
                    kappa: Complex64::new(0.0, 0.0),
                    a: v.a_value,
                    b: v.a_deriv,
                },
                _ => {
                    let kappa = Complex64::new(u, 0.0).sqrt();
                    RegionCoefficients {
                        x_ref,
                        u_value: u,
                        kappa,
                        a: (v.a_value + v.a_deriv / (I * kappa)) * 0.5,
                        b: (v.a_value - v.a_deriv / (I * kappa)) * 0.5,
                    }
                }
            };
            out.push(coeffs);
        };
        push(sol.nodes[0], self.profile().u_left(), sol.values[0]);
        for i in 0..n.saturating_sub(1) {
            push(sol.nodes[i], self.profile().eval_u(sol.nodes[i]), sol.values[i]);
        }
        if !self.profile().is_free_space() {
            push(sol.nodes[n - 1], self.profile().u_right(), sol.values[n - 1]);
        }
        out
    }
}

impl FieldEvaluator for ScatteringState {
    fn field_at(&self, x: f64) -> FieldSample {
        self.solution.field_at(x)
    }

    fn origin_id(&self) -> Option<u64> {
        Some(self.solution.id)
    }
}

/// Wronskian `A₁A₂' - A₁'A₂` of two fields at `x`.
pub fn wronskian(first: &impl FieldEvaluator, second: &impl FieldEvaluator, x: f64) -> Complex64 {
    let a = first.field_at(x);
    let b = second.field_at(x);
    a.a_value * b.a_deriv - a.a_deriv * b.a_value
}

/// Propagator of `(A, A')` across one cell of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellMatrix {
    pub entries: [[Complex64; 2]; 2],
    pub cell_start: f64,
    pub cell_length: f64,
}

impl CellMatrix {
    pub fn determinant(&self) -> Complex64 {
        let m = &self.entries;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn half_trace(&self) -> f64 {
        (0.5 * (self.entries[0][0] + self.entries[1][1])).re
    }

    pub fn apply(&self, s: FieldSample) -> FieldSample {
        let m = &self.entries;
        FieldSample::new(
            m[0][0] * s.a_value + m[0][1] * s.a_deriv,
            m[1][0] * s.a_value + m[1][1] * s.a_deriv,
        )
    }

    /// `self · other` (apply `other` first).
    pub fn compose(&self, other: &CellMatrix) -> CellMatrix {
        let (a, b) = (&self.entries, &other.entries);
        let mut entries = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        CellMatrix {
            entries,
            cell_start: other.cell_start,
            cell_length: self.cell_length + other.cell_length,
        }
    }
}

/// Transfer matrix mapping `(A, A')` at `cell.start` to `cell.end`.
pub fn unit_cell_transfer_matrix(profile: &PotentialProfile, cell: &Interval) -> Result<CellMatrix> {
    if !(cell.end > cell.start) || !cell.start.is_finite() || !cell.end.is_finite() {
        return Err(Error::DegenerateCell { start: cell.start, end: cell.end });
    }
    let flat = Solution::flat_threshold(profile);
    let mut cuts = vec![cell.start];
    cuts.extend(profile.breakpoints().iter().copied().filter(|&b| b > cell.start && b < cell.end));
    cuts.push(cell.end);
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    for w in cuts.windows(2) {
        let u = profile.eval_u(0.5 * (w[0] + w[1]));
        let p = Medium::classify(u, flat).propagator(u, w[1] - w[0]);
        m = [
            [p[0][0] * m[0][0] + p[0][1] * m[1][0], p[0][0] * m[0][1] + p[0][1] * m[1][1]],
            [p[1][0] * m[0][0] + p[1][1] * m[1][0], p[1][0] * m[0][1] + p[1][1] * m[1][1]],
        ];
    }
    let c = |v: f64| Complex64::new(v, 0.0);
    Ok(CellMatrix {
        entries: [[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]],
        cell_start: cell.start,
        cell_length: cell.width(),
    })
}

/// Outcome of the Bloch analysis of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlochOutcome {
    /// `|Tr M / 2| ≤ 1`: the eigenvalue `e^{iθ}` of the forward-propagating
    /// (`J ≥ 0`) Bloch wave, with its `(A, A')` at the cell start.
    Band {
        phase: f64,
        eigenvalue: Complex64,
        start: FieldSample,
    },
    /// `|Tr M / 2| > 1`: eigenvalues are real with moduli `|λ|` and `1/|λ|`.
    Gap { half_trace: f64, eigenvalue_modulus: f64 },
}

/// Eigen-analysis of a unimodular cell matrix.
pub fn bloch_state(cell: &CellMatrix) -> BlochOutcome {
    let h = cell.half_trace();
    if h.abs() > 1.0 {
        let root = (h * h - 1.0).sqrt();
        return BlochOutcome::Gap {
            half_trace: h,
            eigenvalue_modulus: h.abs() + root,
        };
    }
    let s = (1.0 - h * h).max(0.0).sqrt();
    let m = &cell.entries;
    let eigvec = |lambda: Complex64| {
        let v1 = (m[0][1], lambda - m[0][0]);
        let v2 = (lambda - m[1][1], m[1][0]);
        let n1 = v1.0.norm_sqr() + v1.1.norm_sqr();
        let n2 = v2.0.norm_sqr() + v2.1.norm_sqr();
        let (a, b, n) = if n1 >= n2 { (v1.0, v1.1, n1) } else { (v2.0, v2.1, n2) };
        if n == 0.0 {
            // M = ±I: any vector is an eigenvector; take a right-moving one
            FieldSample::new(Complex64::new(1.0, 0.0), I)
        } else {
            let n = n.sqrt();
            FieldSample::new(a / n, b / n)
        }
    };
    let plus = Complex64::new(h, s);
    let minus = Complex64::new(h, -s);
    let (vp, vm) = (eigvec(plus), eigvec(minus));
    let (eigenvalue, start) = if vp.current() >= vm.current() { (plus, vp) } else { (minus, vm) };
    BlochOutcome::Band {
        phase: eigenvalue.arg(),
        eigenvalue,
        start,
    }
}

/// The Bloch wave of `cell` continued over the whole profile.
pub fn bloch_solution(profile: &PotentialProfile, cell: &CellMatrix) -> Option<(Solution, Complex64)> {
    match bloch_state(cell) {
        BlochOutcome::Band { eigenvalue, start, .. } => {
            Some((Solution::from_initial(profile, cell.cell_start, start), eigenvalue))
        }
        BlochOutcome::Gap { .. } => None,
    }
}
