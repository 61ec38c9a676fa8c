use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use super::output::{write_csv, write_json};
use super::CliError;
use crate::detector::{self, ClsConstraintReport, ClsDecomposition, SymmetryFinding};
use crate::invariants::{self, InvariantPair, LocalInvariants};
use crate::potential::{symmetry_set, Domain, Interval, PotentialProfile, SymmetryTransform};
use crate::solver::{
    bloch_solution, bloch_state, solve_scattering, unit_cell_transfer_matrix, BlochOutcome,
    RegionCoefficients, ScatteringState,
};
use crate::Error;

/// Files written by one subcommand, in write order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    fn json(&mut self, dir: &Path, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let path = dir.join(name);
        write_json(&path, value).map_err(|e| CliError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn csv(&mut self, dir: &Path, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
        let path = dir.join(name);
        write_csv(&path, header, rows).map_err(|e| CliError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    version: u32,
    records: T,
}

pub(super) struct Context<'a> {
    pub config: &'a RunConfig,
    pub out: &'a Path,
}

impl Context<'_> {
    fn energies(&self) -> Vec<(usize, f64)> {
        self.config.energies().into_iter().enumerate().collect()
    }

    fn profile(&self, energy: f64) -> Result<PotentialProfile, CliError> {
        Ok(self.config.profile_at(energy)?)
    }

    fn tol_u(&self, profile: &PotentialProfile) -> f64 {
        self.config.tolerances.tol_u_rel * profile.u_scale()
    }

    fn min_width(&self, profile: &PotentialProfile) -> f64 {
        profile
            .scatterer()
            .map_or(0.0, |s| self.config.tolerances.min_width_rel * s.width())
    }

    fn bbox(&self, profile: &PotentialProfile) -> Interval {
        profile.bounding_box(self.config.tolerances.pad)
    }

    fn grid(&self, profile: &PotentialProfile) -> Vec<f64> {
        let b = self.bbox(profile);
        let n = self.config.tolerances.field_points;
        (0..n)
            .map(|i| if i + 1 == n { b.end } else { b.start + b.width() * i as f64 / (n - 1) as f64 })
            .collect()
    }

    /// Explicit transforms, or those detected on the profile at the first
    /// energy (symmetry domains of `V` or `n` do not depend on the energy).
    fn transforms(&self) -> Result<Vec<SymmetryTransform>, CliError> {
        if !self.config.transforms.is_empty() {
            return Ok(self.config.transforms());
        }
        let first = self.config.energies()[0];
        let profile = self.profile(first)?;
        Ok(detector::detect(&profile, self.tol_u(&profile), self.min_width(&profile))
            .into_iter()
            .map(|f| f.transform)
            .collect())
    }

    fn write_envelope(&self, summary: &mut RunSummary, command: &str, records: &impl Serialize) -> Result<(), CliError> {
        summary.json(
            self.out,
            &format!("{command}.json"),
            &Envelope {
                command,
                version: super::config::SCHEMA_VERSION,
                records,
            },
        )
    }

    fn solve(&self, profile: &PotentialProfile) -> Result<ScatteringState, CliError> {
        Ok(solve_scattering(profile, self.config.incidence)?)
    }
}

fn collect_ordered<T: Send>(
    energies: &[(usize, f64)],
    work: impl Fn(usize, f64) -> Result<T, CliError> + Sync,
) -> Result<Vec<T>, CliError> {
    energies.par_iter().map(|&(i, e)| work(i, e)).collect()
}

#[derive(Serialize)]
struct SolveRecord {
    index: usize,
    energy: f64,
    k_left: f64,
    k_right: f64,
    transmission: Complex64,
    reflection: Complex64,
    transmittance: f64,
    reflectance: f64,
    flux_residual: f64,
    regions: Vec<RegionCoefficients>,
    field_csv: String,
}

const FIELD_HEADER: [&str; 6] = ["x", "re_a", "im_a", "abs_a_sq", "u", "j"];

pub(super) fn run_solve(ctx: &Context) -> Result<RunSummary, CliError> {
    let energies = ctx.energies();
    let results = collect_ordered(&energies, |index, energy| {
        let profile = ctx.profile(energy)?;
        let state = ctx.solve(&profile)?;
        let rows: Vec<Vec<f64>> = ctx
            .grid(&profile)
            .into_iter()
            .map(|x| {
                let f = state.field_at(x);
                vec![x, f.a_value.re, f.a_value.im, f.a_value.norm_sqr(), profile.eval_u(x), f.current()]
            })
            .collect();
        let record = SolveRecord {
            index,
            energy,
            k_left: state.k_left(),
            k_right: state.k_right(),
            transmission: state.transmission(),
            reflection: state.reflection(),
            transmittance: state.k_out() / state.k_in() * state.transmission().norm_sqr(),
            reflectance: state.reflection().norm_sqr(),
            flux_residual: state.flux_residual(),
            regions: state.region_coefficients(),
            field_csv: format!("field_e{index:03}.csv"),
        };
        Ok((record, rows))
    })?;
    let mut summary = RunSummary::default();
    for (record, rows) in &results {
        summary.csv(ctx.out, &record.field_csv, &FIELD_HEADER, rows)?;
    }
    let records: Vec<&SolveRecord> = results.iter().map(|(r, _)| r).collect();
    ctx.write_envelope(&mut summary, "solve", &records)?;
    Ok(summary)
}

#[derive(Serialize)]
struct ComponentReport {
    component: Interval,
    image: Interval,
    pair: InvariantPair,
    relative_sum_rule_residual: f64,
    constant: bool,
}

#[derive(Serialize)]
struct TransformReport {
    transform: SymmetryTransform,
    components: Vec<ComponentReport>,
    field_csv: String,
}

#[derive(Serialize)]
struct InvariantsRecord {
    index: usize,
    energy: f64,
    transforms: Vec<TransformReport>,
}

const INVARIANTS_HEADER: [&str; 9] = ["x", "re_a", "im_a", "abs_a_sq", "u", "re_q", "im_q", "re_qt", "im_qt"];

fn component_pairs(
    ctx: &Context,
    field: &ScatteringState,
    transform: &SymmetryTransform,
) -> Result<Vec<(Interval, InvariantPair)>, CliError> {
    let profile = field.profile();
    let set = symmetry_set(profile, transform, ctx.tol_u(profile), &ctx.bbox(profile));
    set.components()
        .iter()
        .filter(|c| c.width() > 0.0)
        .map(|&c| {
            let pair = invariants::invariant_pair(field, transform, &Domain::single(c), ctx.config.tolerances.n_samples)?;
            Ok((c, pair))
        })
        .collect()
}

pub(super) fn run_invariants(ctx: &Context) -> Result<RunSummary, CliError> {
    let transforms = ctx.transforms()?;
    let tol = ctx.config.tolerances.constancy;
    let energies = ctx.energies();
    let results = collect_ordered(&energies, |index, energy| {
        let profile = ctx.profile(energy)?;
        let state = ctx.solve(&profile)?;
        let grid = ctx.grid(&profile);
        let mut reports = Vec::new();
        let mut tables = Vec::new();
        for (ti, t) in transforms.iter().enumerate() {
            let components = component_pairs(ctx, &state, t)?
                .into_iter()
                .map(|(c, pair)| ComponentReport {
                    component: c,
                    image: t.image(&c),
                    relative_sum_rule_residual: pair.relative_sum_rule_residual(),
                    constant: pair.is_constant(tol),
                    pair,
                })
                .collect();
            let rows: Vec<Vec<f64>> = grid
                .iter()
                .map(|&x| {
                    let f = state.field_at(x);
                    let li = LocalInvariants::at(&state, t, x);
                    vec![
                        x,
                        f.a_value.re,
                        f.a_value.im,
                        f.a_value.norm_sqr(),
                        profile.eval_u(x),
                        li.q.re,
                        li.q.im,
                        li.q_tilde.re,
                        li.q_tilde.im,
                    ]
                })
                .collect();
            let name = format!("invariants_e{index:03}_t{ti:02}.csv");
            reports.push(TransformReport {
                transform: *t,
                components,
                field_csv: name.clone(),
            });
            tables.push((name, rows));
        }
        Ok((
            InvariantsRecord {
                index,
                energy,
                transforms: reports,
            },
            tables,
        ))
    })?;
    let mut summary = RunSummary::default();
    for (_, tables) in &results {
        for (name, rows) in tables {
            summary.csv(ctx.out, name, &INVARIANTS_HEADER, rows)?;
        }
    }
    let records: Vec<&InvariantsRecord> = results.iter().map(|(r, _)| r).collect();
    ctx.write_envelope(&mut summary, "invariants", &records)?;
    Ok(summary)
}

#[derive(Serialize)]
struct DetectRecord {
    index: usize,
    energy: f64,
    tol_u: f64,
    min_width: f64,
    structural: Vec<SymmetryFinding>,
    field_based: Vec<SymmetryFinding>,
}

pub(super) fn run_detect(ctx: &Context) -> Result<RunSummary, CliError> {
    let energies = ctx.energies();
    let tolerances = &ctx.config.tolerances;
    let records = collect_ordered(&energies, |index, energy| {
        let profile = ctx.profile(energy)?;
        let tol_u = ctx.tol_u(&profile);
        let min_width = ctx.min_width(&profile);
        let structural = detector::detect(&profile, tol_u, min_width);
        let mut candidates: Vec<SymmetryTransform> = structural.iter().map(|f| f.transform).collect();
        for t in ctx.config.transforms() {
            if !candidates.contains(&t) {
                candidates.push(t);
            }
        }
        let state = ctx.solve(&profile)?;
        let field_based =
            detector::field_based_detect(state.solution(), &candidates, tolerances.grid_step, tolerances.field_tol)?;
        Ok(DetectRecord {
            index,
            energy,
            tol_u,
            min_width,
            structural,
            field_based,
        })
    })?;
    let mut summary = RunSummary::default();
    ctx.write_envelope(&mut summary, "detect", &records)?;
    Ok(summary)
}

#[derive(Serialize)]
struct DecomposeRecord {
    index: usize,
    energy: f64,
    decomposition: ClsDecomposition,
    constraint: ClsConstraintReport,
}

pub(super) fn run_decompose(ctx: &Context) -> Result<RunSummary, CliError> {
    let energies = ctx.energies();
    let records = collect_ordered(&energies, |index, energy| {
        let profile = ctx.profile(energy)?;
        let state = ctx.solve(&profile)?;
        let decomposition = detector::cls_decompose_with(state.solution(), ctx.tol_u(&profile))?;
        let constraint = detector::cls_constraint_check(&decomposition.pairs())?;
        Ok(DecomposeRecord {
            index,
            energy,
            decomposition,
            constraint,
        })
    })?;
    let mut summary = RunSummary::default();
    ctx.write_envelope(&mut summary, "decompose", &records)?;
    Ok(summary)
}

#[derive(Serialize)]
struct MapComponent {
    component: Interval,
    image: Interval,
    j: f64,
    zero_current: bool,
    points: usize,
    /// `max |predicted - A(F(x))|` over the points, relative to `max |A|`
    /// on the component and its image.
    max_residual: Option<f64>,
}

#[derive(Serialize)]
struct MapTransform {
    transform: SymmetryTransform,
    components: Vec<MapComponent>,
}

#[derive(Serialize)]
struct MapRecord {
    index: usize,
    energy: f64,
    max_residual: f64,
    zero_current: bool,
    transforms: Vec<MapTransform>,
}

pub(super) fn run_mapcheck(ctx: &Context) -> Result<RunSummary, CliError> {
    let transforms = ctx.transforms()?;
    let n = ctx.config.tolerances.n_samples;
    let energies = ctx.energies();
    let records = collect_ordered(&energies, |index, energy| {
        let profile = ctx.profile(energy)?;
        let state = ctx.solve(&profile)?;
        let mut reports = Vec::new();
        let (mut worst, mut any_zero) = (0.0_f64, false);
        for t in &transforms {
            let mut components = Vec::new();
            for (c, pair) in component_pairs(ctx, &state, t)? {
                let xs = c.sample_points(n);
                let field_scale = xs
                    .iter()
                    .flat_map(|&x| [state.field_at(x).a_value.norm(), state.field_at(t.apply(x)).a_value.norm()])
                    .fold(0.0, f64::max);
                let mut residual = Some(0.0_f64);
                for &x in &xs {
                    match invariants::map_field(&pair, &state.field_at(x)) {
                        Ok(predicted) => {
                            let r = (predicted - state.field_at(t.apply(x)).a_value).norm() / field_scale;
                            residual = residual.map(|m| m.max(r));
                        }
                        Err(Error::ZeroCurrent { .. }) => {
                            residual = None;
                            break;
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                match residual {
                    Some(r) => worst = worst.max(r),
                    None => any_zero = true,
                }
                components.push(MapComponent {
                    component: c,
                    image: t.image(&c),
                    j: pair.j,
                    zero_current: residual.is_none(),
                    points: xs.len(),
                    max_residual: residual,
                });
            }
            reports.push(MapTransform {
                transform: *t,
                components,
            });
        }
        Ok(MapRecord {
            index,
            energy,
            max_residual: worst,
            zero_current: any_zero,
            transforms: reports,
        })
    })?;
    let mut summary = RunSummary::default();
    ctx.write_envelope(&mut summary, "mapcheck", &records)?;
    if records.iter().any(|r| r.zero_current) {
        return Err(CliError::ZeroCurrentMapping(summary));
    }
    Ok(summary)
}

#[derive(Serialize)]
struct BandRecord {
    index: usize,
    energy: f64,
    cell: Interval,
    half_trace: f64,
    outcome: BlochOutcome,
    /// Invariants of the Bloch wave under the cell translation (band only).
    bloch_pair: Option<InvariantPair>,
    /// `arg(Q̃/J)` of `bloch_pair`.
    invariant_phase: Option<f64>,
}

pub(super) fn run_band(ctx: &Context) -> Result<RunSummary, CliError> {
    let band = ctx
        .config
        .band
        .ok_or_else(|| CliError::Usage("band: the `band` subcommand needs a [band] table".into()))?;
    let cell = Interval::new(band.cell_start, band.cell_end);
    let energies = ctx.energies();
    let n = ctx.config.tolerances.n_samples;
    let records = collect_ordered(&energies, |index, energy| {
        let profile = ctx.profile(energy)?;
        let matrix = unit_cell_transfer_matrix(&profile, &cell)?;
        let outcome = bloch_state(&matrix);
        let (bloch_pair, invariant_phase) = match bloch_solution(&profile, &matrix) {
            Some((solution, _)) => {
                let t = SymmetryTransform::translation(cell.width());
                let pair = invariants::invariant_pair(&solution, &t, &Domain::single(cell), n)?;
                let phase = (pair.q_tilde / pair.j).arg();
                (Some(pair), Some(phase))
            }
            None => (None, None),
        };
        Ok(BandRecord {
            index,
            energy,
            cell,
            half_trace: matrix.half_trace(),
            outcome,
            bloch_pair,
            invariant_phase,
        })
    })?;
    let mut summary = RunSummary::default();
    ctx.write_envelope(&mut summary, "band", &records)?;
    Ok(summary)
}

#[derive(Serialize)]
struct ScanDomain {
    transform: SymmetryTransform,
    domain: Interval,
    csv: String,
}

const SCAN_HEADER: [&str; 7] = ["energy", "re_q", "im_q", "re_qt", "im_qt", "j", "sum_rule_residual"];

/// `Q(E)`, `Q̃(E)` per symmetry domain; domains are taken from the profile at
/// the first energy.
pub(super) fn run_scan(ctx: &Context) -> Result<RunSummary, CliError> {
    let transforms = ctx.transforms()?;
    let first = ctx.profile(ctx.config.energies()[0])?;
    let mut domains = Vec::new();
    for (ti, t) in transforms.iter().enumerate() {
        let set = symmetry_set(&first, t, ctx.tol_u(&first), &ctx.bbox(&first));
        for (ci, c) in set.components().iter().filter(|c| c.width() > 0.0).enumerate() {
            domains.push(ScanDomain {
                transform: *t,
                domain: *c,
                csv: format!("scan_t{ti:02}_d{ci:02}.csv"),
            });
        }
    }
    let n = ctx.config.tolerances.n_samples;
    let energies = ctx.energies();
    let rows = collect_ordered(&energies, |_, energy| {
        let profile = ctx.profile(energy)?;
        let state = ctx.solve(&profile)?;
        domains
            .iter()
            .map(|d| {
                let pair = invariants::invariant_pair(&state, &d.transform, &Domain::single(d.domain), n)?;
                Ok(vec![
                    energy,
                    pair.q.re,
                    pair.q.im,
                    pair.q_tilde.re,
                    pair.q_tilde.im,
                    pair.j,
                    invariants::sum_rule_residual(&pair),
                ])
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let mut summary = RunSummary::default();
    for (di, d) in domains.iter().enumerate() {
        let table: Vec<Vec<f64>> = rows.iter().map(|per_energy| per_energy[di].clone()).collect();
        summary.csv(ctx.out, &d.csv, &SCAN_HEADER, &table)?;
    }
    ctx.write_envelope(&mut summary, "scan", &domains)?;
    Ok(summary)
}
