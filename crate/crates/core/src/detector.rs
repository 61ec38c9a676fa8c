//! Local symmetry detection: structural enumeration of all inversion and
//! translation domains of a piecewise-constant profile, field-based
//! detection through the constancy of `Q` and `Q̃`, and complete local
//! symmetry (CLS) decompositions of the scatterer.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariants::{invariant_pair, InvariantPair, LocalInvariants, DEFAULT_SAMPLES};
use crate::potential::{symmetry_set, Domain, Interval, PotentialProfile, SymmetryTransform, COORD_EPS};
use crate::solver::{solve_scattering, Incidence, Solution};

/// `min_width` default, relative to the scatterer width.
pub const DEFAULT_MIN_WIDTH_REL: f64 = 1e-6;

/// Grid points per window in [`field_based_detect`].
pub const DETECTION_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryKind {
    /// The symmetry holds on the whole bounding box.
    Global,
    /// Source and image overlap or touch.
    NonGapped,
    /// Source and image are disjoint.
    Gapped,
}

/// One connected symmetry domain of a transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FindingComponent {
    /// Maximal connected component of the symmetry set (inside the box).
    pub domain: Interval,
    /// The part of `domain` whose points and images both lie in the
    /// scatterer region (all of `domain` for free space or global findings).
    pub core: Interval,
    /// `F(core)`.
    pub image: Interval,
    pub kind: SymmetryKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryFinding {
    pub transform: SymmetryTransform,
    pub components: Vec<FindingComponent>,
}

impl SymmetryFinding {
    pub fn widest(&self) -> f64 {
        self.components.iter().map(|c| c.core.width()).fold(0.0, f64::max)
    }
}

fn classify(profile: &PotentialProfile, transform: &SymmetryTransform, domain: Interval, bbox: &Interval) -> Option<FindingComponent> {
    let global = domain.contains_interval(bbox);
    let core = if global {
        domain
    } else {
        match profile.scatterer() {
            Some(s) => {
                let allowed = s.intersect(&transform.preimage_interval(&s))?;
                domain.intersect(&allowed)?
            }
            None => domain,
        }
    };
    let image = transform.image(&core);
    let kind = if global {
        SymmetryKind::Global
    } else if core.is_disjoint(&image) {
        SymmetryKind::Gapped
    } else {
        SymmetryKind::NonGapped
    };
    Some(FindingComponent {
        domain,
        core,
        image,
        kind,
    })
}

fn coord_eps(profile: &PotentialProfile) -> f64 {
    COORD_EPS * profile.breakpoints().iter().fold(1.0_f64, |a, b| a.max(b.abs()))
}

/// Every inversion center and translation length that maps a breakpoint
/// onto a breakpoint, deduplicated, without any filtering.
pub fn all_candidate_transforms(profile: &PotentialProfile) -> Result<Vec<SymmetryTransform>> {
    let b = profile.breakpoints();
    if b.is_empty() {
        return Err(Error::EmptyProfile);
    }
    let eps = coord_eps(profile);
    let mut inversions = Vec::new();
    let mut translations = Vec::new();
    for i in 0..b.len() {
        for j in i..b.len() {
            inversions.push(b[i] + b[j]);
            if j > i {
                translations.push(b[j] - b[i]);
            }
        }
    }
    let dedup = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v.dedup_by(|next, kept| (*next - *kept).abs() <= eps);
        v
    };
    let mut out: Vec<SymmetryTransform> = dedup(inversions)
        .into_iter()
        .map(|rho| SymmetryTransform::inversion(0.5 * rho))
        .collect();
    out.extend(dedup(translations).into_iter().map(SymmetryTransform::translation));
    Ok(out)
}

/// Components of one transform that carry structure: a breakpoint of `U`
/// strictly inside the maximal domain, and a core at least `min_width` wide.
fn structural_components(
    profile: &PotentialProfile,
    transform: &SymmetryTransform,
    tol_u: f64,
    min_width: f64,
    bbox: &Interval,
) -> Vec<FindingComponent> {
    symmetry_set(profile, transform, tol_u, bbox)
        .components()
        .iter()
        .filter(|c| !profile.is_constant_on(c))
        .filter_map(|&c| classify(profile, transform, c, bbox))
        .filter(|c| c.core.width() >= min_width)
        .collect()
}

pub fn default_min_width(profile: &PotentialProfile) -> f64 {
    profile.scatterer().map_or(0.0, |s| DEFAULT_MIN_WIDTH_REL * s.width())
}

/// Candidate transforms whose symmetry set has a non-trivial component of
/// width at least `min_width`.
///
/// For piecewise-constant `U`, the edges of `U` inside a symmetry domain must
/// map onto edges, so every transform with a structured domain is one of
/// `α = (bᵢ + bⱼ)/2` or `L = bⱼ - bᵢ`.
pub fn candidate_transforms(profile: &PotentialProfile, min_width: f64) -> Result<Vec<SymmetryTransform>> {
    let bbox = profile.bounding_box(None);
    let tol_u = profile.default_tol_u();
    Ok(all_candidate_transforms(profile)?
        .into_par_iter()
        .filter(|t| !structural_components(profile, t, tol_u, min_width, &bbox).is_empty())
        .collect())
}

/// All structured local symmetry domains of `profile`, widest first.
pub fn detect(profile: &PotentialProfile, tol_u: f64, min_width: f64) -> Vec<SymmetryFinding> {
    let Ok(candidates) = all_candidate_transforms(profile) else {
        return Vec::new();
    };
    let bbox = profile.bounding_box(None);
    let mut findings: Vec<SymmetryFinding> = candidates
        .into_par_iter()
        .filter_map(|transform| {
            let components = structural_components(profile, &transform, tol_u, min_width, &bbox);
            (!components.is_empty()).then_some(SymmetryFinding { transform, components })
        })
        .collect();
    sort_findings(&mut findings);
    findings
}

fn sort_findings(findings: &mut [SymmetryFinding]) {
    findings.sort_by(|a, b| {
        b.widest()
            .total_cmp(&a.widest())
            .then(a.transform.sigma().cmp(&b.transform.sigma()))
            .then(a.transform.rho().total_cmp(&b.transform.rho()))
    });
}

/// Symmetry domains revealed by the constancy of `Q(x)` and `Q̃(x)`.
///
/// Each candidate is sampled on a uniform grid over the bounding box; a
/// window of [`DETECTION_WINDOW`] consecutive points is constant when the
/// spread of both currents stays below `tol` times the largest term
/// magnitude seen on the grid. Runs of constant windows become components.
pub fn field_based_detect(
    field: &Solution,
    candidates: &[SymmetryTransform],
    grid_step: f64,
    tol: f64,
) -> Result<Vec<SymmetryFinding>> {
    let profile = field.profile();
    let bbox = profile.bounding_box(None);
    if !(grid_step > 0.0) || !grid_step.is_finite() {
        return Err(Error::InvalidArgument(format!("grid step {grid_step}")));
    }
    let steps = (bbox.width() / grid_step).ceil() as usize;
    if steps + 1 < DETECTION_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "grid step {grid_step} leaves fewer than {DETECTION_WINDOW} points"
        )));
    }
    // last point clamped to the box edge
    let xs: Vec<f64> = (0..=steps)
        .map(|i| (bbox.start + grid_step * i as f64).min(bbox.end))
        .collect();
    let mut findings: Vec<SymmetryFinding> = candidates
        .par_iter()
        .filter_map(|transform| {
            let samples: Vec<LocalInvariants> = xs.iter().map(|&x| LocalInvariants::at(field, transform, x)).collect();
            let scale = samples.iter().map(|s| s.term_scale).fold(0.0, f64::max);
            let limit = tol * scale;
            let window_ok: Vec<bool> = samples
                .windows(DETECTION_WINDOW)
                .map(|w| window_spread(w) <= limit)
                .collect();
            let mut components = Vec::new();
            let mut i = 0;
            while i < window_ok.len() {
                if !window_ok[i] {
                    i += 1;
                    continue;
                }
                let start = i;
                while i + 1 < window_ok.len() && window_ok[i + 1] {
                    i += 1;
                }
                let run = Interval::new(xs[start], xs[i + DETECTION_WINDOW - 1]);
                if let Some(c) = classify(profile, transform, run, &bbox) {
                    components.push(c);
                }
                i += 1;
            }
            (!components.is_empty()).then_some(SymmetryFinding {
                transform: *transform,
                components,
            })
        })
        .collect();
    sort_findings(&mut findings);
    Ok(findings)
}

fn window_spread(window: &[LocalInvariants]) -> f64 {
    let mut spread: f64 = 0.0;
    for a in window {
        for b in window {
            spread = spread.max((a.q - b.q).norm() + (a.q_tilde - b.q_tilde).norm());
        }
    }
    spread
}

/// One tile of a CLS decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClsPiece {
    /// The tile `[start, end]` of the scatterer.
    pub domain: Interval,
    pub transform: SymmetryTransform,
    /// Source region on which the currents are invariant (the whole tile
    /// for an inversion, the tile minus its last period for a translation).
    pub source: Interval,
    pub pair: InvariantPair,
}

/// Ordered cover of the scatterer by locally symmetric tiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClsDecomposition {
    pub region: Interval,
    pub pieces: Vec<ClsPiece>,
    pub covered: bool,
}

impl ClsDecomposition {
    fn piece_at(&self, x: f64) -> Option<&ClsPiece> {
        self.pieces.iter().find(|p| p.domain.contains(x))
    }

    /// Piecewise-constant `Q_c(x)`.
    pub fn q_c(&self, x: f64) -> Option<Complex64> {
        self.piece_at(x).map(|p| p.pair.q)
    }

    /// Piecewise-constant `Q̃_c(x)`.
    pub fn qtilde_c(&self, x: f64) -> Option<Complex64> {
        self.piece_at(x).map(|p| p.pair.q_tilde)
    }

    pub fn pairs(&self) -> Vec<InvariantPair> {
        self.pieces.iter().map(|p| p.pair.clone()).collect()
    }
}

/// Greedy left-to-right CLS cover with invariants from a left-incidence
/// scattering state of `profile`.
pub fn cls_decompose(profile: &PotentialProfile, tol_u: f64) -> Result<ClsDecomposition> {
    let state = solve_scattering(profile, Incidence::Left)?;
    cls_decompose_with(state.solution(), tol_u)
}

/// [`cls_decompose`] with invariants evaluated on a supplied field.
///
/// At each frontier the tile reaching farthest is chosen among inversions
/// `[f, 2α - f]` and translations `[f, e]` whose source `[f, e - L]` lies in
/// one symmetry component and is at least one period long. Tiles must
/// contain an edge of `U` in their interior; ties prefer inversions, then
/// smaller `|ρ|`.
pub fn cls_decompose_with(field: &Solution, tol_u: f64) -> Result<ClsDecomposition> {
    let profile = field.profile();
    let region = profile.scatterer().ok_or(Error::EmptyProfile)?;
    let eps = coord_eps(profile);
    let bbox = profile.bounding_box(None);
    let sets: Vec<(SymmetryTransform, Domain)> = all_candidate_transforms(profile)?
        .into_par_iter()
        .map(|t| {
            let set = symmetry_set(profile, &t, tol_u, &bbox);
            (t, set)
        })
        .collect();

    let mut pieces = Vec::new();
    let mut frontier = region.start;
    while frontier < region.end - eps {
        let mut best: Option<(f64, SymmetryTransform, Interval)> = None;
        for (t, set) in &sets {
            let Some((end, source)) = tile_from(t, set, frontier, region.end, eps) else {
                continue;
            };
            if end <= frontier + eps || profile.is_constant_on(&Interval::new(frontier, end)) {
                continue;
            }
            let better = match &best {
                None => true,
                Some((best_end, best_t, _)) => {
                    if (end - best_end).abs() > eps {
                        end > *best_end
                    } else if t.is_inversion() != best_t.is_inversion() {
                        t.is_inversion()
                    } else {
                        t.rho().abs() < best_t.rho().abs()
                    }
                }
            };
            if better {
                best = Some((end, *t, source));
            }
        }
        let Some((end, transform, source)) = best else {
            break;
        };
        let end = snap(profile, end, eps);
        let domain = Interval::new(frontier, end);
        let source = if transform.is_inversion() { domain } else { source };
        let pair = invariant_pair(field, &transform, &Domain::single(source), DEFAULT_SAMPLES)?;
        pieces.push(ClsPiece {
            domain,
            transform,
            source,
            pair,
        });
        frontier = end;
    }
    Ok(ClsDecomposition {
        region,
        covered: frontier >= region.end - eps,
        pieces,
    })
}

fn snap(profile: &PotentialProfile, x: f64, eps: f64) -> f64 {
    profile
        .breakpoints()
        .iter()
        .copied()
        .find(|b| (b - x).abs() <= eps)
        .unwrap_or(x)
}

/// Farthest tile end reachable from `frontier` with `transform`, and the
/// source region of that tile.
fn tile_from(transform: &SymmetryTransform, set: &Domain, frontier: f64, limit: f64, eps: f64) -> Option<(f64, Interval)> {
    if transform.is_inversion() {
        let alpha = transform.center();
        if alpha <= frontier + eps {
            return None;
        }
        let end = 2.0 * alpha - frontier;
        if end > limit + eps {
            return None;
        }
        let comp = set.component_containing(alpha)?;
        (comp.start <= frontier + eps && comp.end >= end - eps).then_some((end, Interval::new(frontier, end)))
    } else {
        let length = transform.rho();
        if length <= eps {
            return None;
        }
        let comp = set.component_containing(frontier)?;
        let source_end = comp.end.min(limit - length);
        (source_end >= frontier + length - eps).then_some((source_end + length, Interval::new(frontier, source_end)))
    }
}

/// Which form of the CLS magnitude constraint was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintMode {
    /// All pieces share σ: `|ratio - 1|` per adjacent pair, with
    /// `ratio = (|Qᵢ₊₁|² - |Q̃ᵢ₊₁|²) / (|Qᵢ|² - |Q̃ᵢ|²)`.
    AdjacentRatio,
    /// Mixed σ: relative sum-rule residual of each piece against the common
    /// `J²` (a ratio across different σ is not 1).
    PerPieceSumRule,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClsConstraintReport {
    pub mode: ConstraintMode,
    pub residuals: Vec<f64>,
}

impl ClsConstraintReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Magnitude constraint between the invariants of the pieces of a CLS
/// decomposition, all evaluated on the same state.
pub fn cls_constraint_check(pieces: &[InvariantPair]) -> Result<ClsConstraintReport> {
    if let Some(first) = pieces.first() {
        if pieces.iter().any(|p| p.state_id != first.state_id) {
            return Err(Error::MixedStates);
        }
    }
    let same_sigma = pieces.windows(2).all(|w| w[0].transform.sigma() == w[1].transform.sigma());
    if same_sigma {
        let residuals = pieces
            .windows(2)
            .map(|w| {
                let diff = |p: &InvariantPair| p.q.norm_sqr() - p.q_tilde.norm_sqr();
                (diff(&w[1]) / diff(&w[0]) - 1.0).abs()
            })
            .collect();
        Ok(ClsConstraintReport {
            mode: ConstraintMode::AdjacentRatio,
            residuals,
        })
    } else {
        Ok(ClsConstraintReport {
            mode: ConstraintMode::PerPieceSumRule,
            residuals: pieces.iter().map(InvariantPair::relative_sum_rule_residual).collect(),
        })
    }
}
