//! Seeded experiment sweeps. Channels run in parallel on the current rayon
//! pool; rows are sorted afterwards, so the pool size never changes output.

use rand::Rng;
use rayon::prelude::*;
use rsbeam_core::ao::{run_ao, run_rs_dominant, AoConfig, Design, DesignResult, ProblemKind, Scheme};
use rsbeam_core::dof::{constructive_scheme, dof_estimate, evaluate_scheme_rates, theorem1_predictions, zf_directions};
use rsbeam_core::model::{CMat, CVec, C64};
use rsbeam_core::uncertainty::{channel_rng, sample_channel, sample_error, ChannelInstance, ErrorMode, UncertaintyRegion};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::HarnessError;
use crate::output::{sort_rows, DofSummary, ResultRow, RowStatus, SchemeLabel};

/// True channels and unit-ball estimation errors of one channel draw; the
/// estimate at radius `δ` is `h − δ e`, so every radius shares the draw.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDraw {
    pub h_true: Vec<CVec>,
    pub unit_errors: Vec<CVec>,
}

impl ChannelDraw {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, k: usize, nt: usize) -> Self {
        let mut h_true = Vec::with_capacity(k);
        let mut unit_errors = Vec::with_capacity(k);
        for _ in 0..k {
            h_true.push(sample_channel(rng, nt));
            unit_errors.push(sample_error(rng, 1.0, ErrorMode::Interior, nt));
        }
        Self { h_true, unit_errors }
    }

    pub fn instances(&self, delta: f64) -> Vec<ChannelInstance> {
        self.h_true
            .iter()
            .zip(&self.unit_errors)
            .map(|(h, e)| ChannelInstance {
                h_true: h.clone(),
                region: UncertaintyRegion {
                    h_hat: h - e * C64::from(delta),
                    delta,
                },
            })
            .collect()
    }

    pub fn regions(&self, delta: f64) -> Vec<UncertaintyRegion> {
        self.instances(delta).into_iter().map(|i| i.region).collect()
    }
}

/// Channel `index` of an experiment.
pub fn channel_draw(config: &ExperimentConfig, index: usize) -> ChannelDraw {
    ChannelDraw::sample(&mut channel_rng(config.seed, index as u64), config.k, config.nt)
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub failed_solves: usize,
    pub total_solves: usize,
    pub dof: Vec<DofSummary>,
}

impl RunOutput {
    /// More than 10% failed solves.
    pub fn too_many_failures(&self) -> bool {
        self.failed_solves * 10 > self.total_solves
    }
}

struct Cell {
    rows: Vec<ResultRow>,
    failed: usize,
    total: usize,
}

fn failed(res: &Result<DesignResult, rsbeam_core::Error>) -> bool {
    match res {
        Ok(r) => r.solver_failures > 0,
        Err(_) => true,
    }
}

/// Row for a run that returned an error: the zero precoder for the rate
/// problem, no feasible point for the power problem.
fn error_row(config: &ExperimentConfig, channel: usize, snr: Option<f64>, delta: f64, scheme: SchemeLabel, kind: ProblemKind) -> ResultRow {
    let (status, objective) = match kind {
        ProblemKind::MaxMinRate { .. } => (RowStatus::IterationCap, 0.0),
        ProblemKind::MinPower { .. } => (RowStatus::Infeasible, f64::INFINITY),
    };
    ResultRow {
        experiment: config.experiment_id(),
        channel,
        seed: config.seed,
        snr_db: snr,
        delta,
        scheme,
        status,
        objective,
        rates: vec![0.0; config.k],
        common_rate: 0.0,
        iterations: 0,
        wall_time_ms: 0,
    }
}

/// NoRS, then RS warm-started from it, on one set of regions. With one
/// user only NoRS is run.
fn paired_runs(
    config: &ExperimentConfig,
    ao: &AoConfig,
    channel: usize,
    snr: Option<f64>,
    regions: &[UncertaintyRegion],
    kind: ProblemKind,
) -> Cell {
    let id = config.experiment_id();
    let delta = regions[0].delta;
    let row = |scheme, res: &Result<DesignResult, rsbeam_core::Error>| match res {
        Ok(r) => ResultRow::from_design(&id, channel, config.seed, snr, delta, scheme, r),
        Err(_) => error_row(config, channel, snr, delta, scheme, kind),
    };
    if config.k == 1 {
        // A single user has no common message to split off.
        let nors = Design::new(regions, config.sigma2, Scheme::NoRs).and_then(|d| run_ao(kind, &d, ao));
        return Cell {
            rows: vec![row(SchemeLabel::NoRS, &nors)],
            failed: failed(&nors) as usize,
            total: 1,
        };
    }
    let rs_design = match Design::new(regions, config.sigma2, Scheme::Rs) {
        Ok(d) => d,
        Err(_) => {
            return Cell {
                rows: vec![
                    error_row(config, channel, snr, delta, SchemeLabel::NoRS, kind),
                    error_row(config, channel, snr, delta, SchemeLabel::RS, kind),
                ],
                failed: 2,
                total: 2,
            }
        }
    };
    let nors = run_ao(kind, &rs_design.restrict_nors(), ao);
    let rs = match &nors {
        Ok(n) => run_rs_dominant(kind, &rs_design, n, ao),
        Err(_) => run_ao(kind, &rs_design, ao),
    };
    Cell {
        rows: vec![row(SchemeLabel::NoRS, &nors), row(SchemeLabel::RS, &rs)],
        failed: failed(&nors) as usize + failed(&rs) as usize,
        total: 2,
    }
}

fn collect(cells: Vec<Cell>) -> RunOutput {
    let mut out = RunOutput::default();
    for c in cells {
        out.rows.extend(c.rows);
        out.failed_solves += c.failed;
        out.total_solves += c.total;
    }
    sort_rows(&mut out.rows);
    out
}

fn expect_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<(), HarnessError> {
    config.check().map_err(|(_, message)| HarnessError::Config { line: None, message })?;
    if config.kind != kind {
        return Err(HarnessError::Config {
            line: None,
            message: format!("config kind is {:?}, expected {kind:?}", config.kind),
        });
    }
    Ok(())
}

/// Max-min rate of NoRS and of RS warm-started from NoRS, for every channel
/// and SNR point.
pub fn run_maxmin_sweep(config: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    expect_kind(config, ExperimentKind::MaxMinSweep)?;
    let ao = config.ao.to_ao_config();
    let cells: Vec<Cell> = (0..config.channels)
        .into_par_iter()
        .flat_map_iter(|ch| {
            let draw = channel_draw(config, ch);
            let ao = &ao;
            config.snr_db.iter().map(move |&snr| {
                let regions = draw.regions(config.delta_at(snr));
                paired_runs(config, ao, ch, Some(snr), &regions, ProblemKind::MaxMinRate { pt: config.pt(snr) })
            }).collect::<Vec<_>>()
        })
        .collect();
    Ok(collect(cells))
}

/// Minimum power meeting `target_rate` for NoRS and RS, for every channel
/// and radius of the grid.
pub fn run_power_feasibility(config: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    expect_kind(config, ExperimentKind::PowerFeasibility)?;
    let ao = config.ao.to_ao_config();
    let target = config.target_rate.expect("checked");
    let grid = config.delta_grid();
    let cells: Vec<Cell> = (0..config.channels)
        .into_par_iter()
        .flat_map_iter(|ch| {
            let draw = channel_draw(config, ch);
            let ao = &ao;
            grid.iter().map(move |&delta| {
                let regions = draw.regions(delta);
                paired_runs(config, ao, ch, None, &regions, ProblemKind::MinPower { target })
            }).collect::<Vec<_>>()
        })
        .collect();
    Ok(collect(cells))
}

fn full_rank(draw: &ChannelDraw, deltas: &[f64]) -> bool {
    deltas.iter().all(|&d| {
        let cols: Vec<CVec> = draw.regions(d).into_iter().map(|r| r.h_hat).collect();
        zf_directions(&CMat::from_columns(&cols)).is_ok()
    })
}

/// Constructive scheme (ZF private part at `P_t^α`, random common stream)
/// and its NoRS restriction, evaluated by sampled worst-case max-min rate;
/// slopes are fitted to the per-SNR means of the top SNR points.
pub fn run_dof_sweep(config: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    expect_kind(config, ExperimentKind::DofSweep)?;
    let alpha = match &config.delta {
        crate::config::DeltaSpec::Law(l) => l.alpha,
        _ => unreachable!("checked"),
    };
    let deltas: Vec<f64> = config.snr_db.iter().map(|&s| config.delta_at(s)).collect();
    let id = config.experiment_id();
    let per_channel: Vec<Vec<ResultRow>> = (0..config.channels)
        .into_par_iter()
        .map(|ch| {
            let mut rng = channel_rng(config.seed, ch as u64);
            let mut draw = ChannelDraw::sample(&mut rng, config.k, config.nt);
            while !full_rank(&draw, &deltas) {
                eprintln!("channel {ch}: rank-deficient estimate, resampling");
                draw = ChannelDraw::sample(&mut rng, config.k, config.nt);
            }
            let mut rows = Vec::new();
            for (i, (&snr, &delta)) in config.snr_db.iter().zip(&deltas).enumerate() {
                let inst = draw.instances(delta);
                let cols: Vec<CVec> = inst.iter().map(|x| x.region.h_hat.clone()).collect();
                let pt = config.pt(snr);
                // One common direction per channel, shared by all SNR points;
                // oracle samples get their own stream per point.
                let mut dir_rng = channel_rng(config.seed ^ 0xc0_ffee, ch as u64);
                let mut eval_rng = channel_rng(config.seed ^ 0x5eed_d0f5, (ch * config.snr_db.len() + i) as u64);
                let p = constructive_scheme(&CMat::from_columns(&cols), alpha, pt, &mut dir_rng).expect("full rank, Pt >= 1");
                for (scheme, p) in [(SchemeLabel::NoRS, p.without_common()), (SchemeLabel::ZfConstructive, p)] {
                    let (totals, common) = evaluate_scheme_rates(&p, &inst, config.sigma2, config.oracle_samples, &mut eval_rng);
                    rows.push(ResultRow {
                        experiment: id.clone(),
                        channel: ch,
                        seed: config.seed,
                        snr_db: Some(snr),
                        delta,
                        scheme,
                        status: RowStatus::Converged,
                        objective: totals.iter().cloned().fold(f64::INFINITY, f64::min),
                        rates: totals,
                        common_rate: common.max(0.0),
                        iterations: 0,
                        wall_time_ms: 0,
                    });
                }
            }
            rows
        })
        .collect();
    let mut out = RunOutput {
        rows: per_channel.into_iter().flatten().collect(),
        ..RunOutput::default()
    };
    sort_rows(&mut out.rows);
    let (d_nors, d_rs) = theorem1_predictions(config.k, alpha)?;
    let fitted = &config.snr_db[config.snr_db.len() - config.dof_fit_points..];
    for (scheme, predicted) in [(SchemeLabel::NoRS, d_nors), (SchemeLabel::ZfConstructive, d_rs)] {
        let points: Vec<(f64, f64)> = fitted
            .iter()
            .map(|&snr| {
                let v: Vec<f64> = out
                    .rows
                    .iter()
                    .filter(|r| r.scheme == scheme && r.snr_db == Some(snr))
                    .map(|r| r.objective)
                    .collect();
                (config.pt(snr), v.iter().sum::<f64>() / v.len() as f64)
            })
            .collect();
        let est = dof_estimate(&points)?;
        out.dof.push(DofSummary::new(scheme, &est, predicted));
    }
    Ok(out)
}

/// Dispatches on the configured kind.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    match config.kind {
        ExperimentKind::MaxMinSweep => run_maxmin_sweep(config),
        ExperimentKind::PowerFeasibility => run_power_feasibility(config),
        ExperimentKind::DofSweep => run_dof_sweep(config),
    }
}
