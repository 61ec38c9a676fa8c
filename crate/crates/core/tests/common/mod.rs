//! Independent oracles and fixture generators shared by the integration tests.
#![allow(dead_code)]

use locsym::detector::SymmetryKind;
use locsym::potential::{Convention, Landscape};
use locsym::{Interval, PotentialProfile, Slab, SymmetryTransform};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Width in `{1/8, ..., 1}`: sums of such widths are exact in binary.
pub fn dyadic_width(rng: &mut impl Rng) -> f64 {
    rng.random_range(1..=8) as f64 / 8.0
}

/// `(width, value)` runs.
pub type Block = Vec<(f64, f64)>;

pub fn random_block(rng: &mut impl Rng, lens: std::ops::RangeInclusive<usize>, values: (f64, f64)) -> Block {
    let len = rng.random_range(lens);
    (0..len)
        .map(|_| (dyadic_width(rng), rng.random_range(values.0..values.1)))
        .collect()
}

pub fn mirrored(block: &Block) -> Block {
    block.iter().rev().copied().collect()
}

/// Lays blocks end to end starting at `x0`; returns the slabs and the block
/// edges.
pub fn assemble(x0: f64, blocks: &[&Block]) -> (Vec<Slab>, Vec<f64>) {
    let mut x = x0;
    let mut slabs = Vec::new();
    let mut edges = vec![x0];
    for block in blocks {
        for &(w, v) in block.iter() {
            slabs.push(Slab::new(x, w, v));
            x += w;
        }
        edges.push(x);
    }
    (slabs, edges)
}

/// Closed-form rectangular barrier: background `U = k²` outside `[0, a]`,
/// `U = κ²` inside (κ complex below the barrier top). Left incidence,
/// `A = t e^{ikx}` for `x > a`.
pub fn barrier_closed_form(u_background: f64, u_barrier: f64, a: f64) -> (Complex64, Complex64) {
    let k = u_background.sqrt();
    let kappa = Complex64::new(u_barrier, 0.0).sqrt();
    let (s, c) = if kappa.norm() == 0.0 {
        (Complex64::new(a, 0.0), Complex64::new(1.0, 0.0))
    } else {
        ((kappa * a).sin() / kappa, (kappa * a).cos())
    };
    // s = sin(κa)/κ stays finite as κ -> 0
    let kappa_sq = Complex64::new(u_barrier, 0.0);
    let denom = c - I * (k * k + kappa_sq) * s / (2.0 * k);
    let t = (-I * k * a).exp() / denom;
    let r = I * (kappa_sq - k * k) * s / (2.0 * k) / denom;
    (t, r)
}

/// Classic RK4 for `A'' = -U A` on one constant-`U` interval.
fn rk4_segment(u: f64, mut y: [Complex64; 2], from: f64, to: f64, step: f64) -> [Complex64; 2] {
    let n = ((to - from).abs() / step).ceil().max(1.0) as usize;
    let h = (to - from) / n as f64;
    let f = |y: [Complex64; 2]| [y[1], -u * y[0]];
    for _ in 0..n {
        let k1 = f(y);
        let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
        y = [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
    }
    y
}

/// Fine-step RK4 scattering oracle for left incidence: integrates from the
/// right edge leftwards with `A = e^{ik_R x}`, then normalizes the incident
/// amplitude. Returns `(t, r, A(x) at each query point)`; queries are
/// evaluated by integrating from the right edge to each point.
pub fn rk4_scattering(profile: &PotentialProfile, queries: &[f64], step: f64) -> (Complex64, Complex64, Vec<Complex64>) {
    let b = profile.breakpoints();
    let (x_min, x_max) = (b[0], *b.last().unwrap());
    let (kl, kr) = (profile.u_left().sqrt(), profile.u_right().sqrt());
    let start = [(I * kr * x_max).exp(), I * kr * (I * kr * x_max).exp()];
    let integrate_to = |target: f64| -> [Complex64; 2] {
        let mut y = start;
        let mut x = x_max;
        if target >= x_max {
            return [(I * kr * target).exp(), I * kr * (I * kr * target).exp()];
        }
        // walk breakpoints right to left
        for &edge in b.iter().rev().skip(1) {
            let stop = edge.max(target);
            let u = profile.eval_u(0.5 * (stop + x));
            y = rk4_segment(u, y, x, stop, step);
            x = stop;
            if x <= target {
                return y;
            }
        }
        rk4_segment(profile.u_left(), y, x, target, step)
    };
    let left = integrate_to(x_min);
    // A = a e^{ik x} + b e^{-ik x} at x_min
    let e = (I * kl * x_min).exp();
    let a = 0.5 * (left[0] + left[1] / (I * kl)) / e;
    let bcoef = 0.5 * (left[0] - left[1] / (I * kl)) * e;
    let t = 1.0 / a;
    let r = bcoef / a;
    let values = queries
        .iter()
        .map(|&q| {
            if q < x_min {
                (I * kl * q).exp() + r * (-I * kl * q).exp()
            } else {
                integrate_to(q)[0] / a
            }
        })
        .collect();
    (t, r, values)
}

/// Kind of a planted symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantKind {
    NonGappedInversion,
    GappedInversion,
    NonGappedTranslation,
    GappedTranslation,
}

impl PlantKind {
    pub const ALL: [PlantKind; 4] = [
        PlantKind::NonGappedInversion,
        PlantKind::GappedInversion,
        PlantKind::NonGappedTranslation,
        PlantKind::GappedTranslation,
    ];

    pub fn expected(self) -> SymmetryKind {
        match self {
            PlantKind::NonGappedInversion | PlantKind::NonGappedTranslation => SymmetryKind::NonGapped,
            PlantKind::GappedInversion | PlantKind::GappedTranslation => SymmetryKind::Gapped,
        }
    }
}

/// A matter-wave landscape (`U = E - V`) with one constructed local symmetry
/// whose maximal domain is known exactly.
#[derive(Debug, Clone)]
pub struct Planted {
    pub kind: PlantKind,
    pub landscape: Landscape,
    pub transform: SymmetryTransform,
    pub domain: Interval,
}

/// Slab potentials `V` in `[-2, 5)`, background `V` in `[-1, 1)`: every
/// energy `E >= 1.5` is above both asymptotes.
pub const SLAB_V: (f64, f64) = (-2.0, 5.0);
pub const BACKGROUND_V: (f64, f64) = (-1.0, 1.0);

pub fn plant(kind: PlantKind, rng: &mut impl Rng) -> Planted {
    let left_bg = random_block(rng, 1..=2, SLAB_V);
    let right_bg = random_block(rng, 1..=2, SLAB_V);
    let x0 = -(rng.random_range(0..=16) as f64) / 8.0;
    let block = random_block(rng, 2..=3, SLAB_V);
    let gap = random_block(rng, 2..=3, SLAB_V);
    let (slabs, transform, domain) = match kind {
        PlantKind::NonGappedInversion => {
            let centre = random_block(rng, 0..=1, SLAB_V);
            let mirror = mirrored(&block);
            let (slabs, e) = assemble(x0, &[&left_bg, &block, &centre, &mirror, &right_bg]);
            let unit = Interval::new(e[1], e[4]);
            (slabs, SymmetryTransform::new(-1, e[1] + e[4]).unwrap(), unit)
        }
        PlantKind::GappedInversion => {
            let mirror = mirrored(&block);
            let (slabs, e) = assemble(x0, &[&left_bg, &block, &gap, &mirror, &right_bg]);
            (slabs, SymmetryTransform::new(-1, e[1] + e[4]).unwrap(), Interval::new(e[1], e[2]))
        }
        PlantKind::NonGappedTranslation => {
            let (slabs, e) = assemble(x0, &[&left_bg, &block, &block, &block, &right_bg]);
            let period = e[2] - e[1];
            (slabs, SymmetryTransform::translation(period), Interval::new(e[1], e[3]))
        }
        PlantKind::GappedTranslation => {
            let (slabs, e) = assemble(x0, &[&left_bg, &block, &gap, &block, &right_bg]);
            (slabs, SymmetryTransform::translation(e[3] - e[1]), Interval::new(e[1], e[2]))
        }
    };
    Planted {
        kind,
        landscape: Landscape {
            convention: Convention::Matter,
            slabs,
            left: rng.random_range(BACKGROUND_V.0..BACKGROUND_V.1),
            right: rng.random_range(BACKGROUND_V.0..BACKGROUND_V.1),
        },
        transform,
        domain,
    }
}

/// Random energies above both asymptotes.
pub fn energies(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(1.5..6.0)).collect()
}

/// A random contiguous `U` profile with positive asymptotes.
pub fn random_profile(rng: &mut impl Rng, max_slabs: usize) -> PotentialProfile {
    let block = random_block(rng, 1..=max_slabs, (-4.0, 6.0));
    let (slabs, _) = assemble(-(rng.random_range(0..=8) as f64) / 4.0, &[&block]);
    PotentialProfile::new(slabs, rng.random_range(0.3..4.0), rng.random_range(0.3..4.0)).unwrap()
}

/// Largest `|a - b|` relative to `scale`.
pub fn rel(a: Complex64, b: Complex64, scale: f64) -> f64 {
    (a - b).norm() / scale
}

/// PASS/FAIL line for the acceptance report.
pub fn report(id: &str, pass: bool, detail: impl std::fmt::Display) {
    println!("[{}] {id} {detail}", if pass { "PASS" } else { "FAIL" });
}
