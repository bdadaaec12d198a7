use std::time::Instant;

use crate::aggregation::{self, MedianSettings};
use crate::calibration;
use crate::error::Result;
use crate::geometry::{self, ProductPoint, ScaleAlpha};
use crate::node_pca::{self, DataMatrix, NodeEstimate, ShardPolicy, SpikedModel};
use crate::robustness::{self, ContaminationSpec};
use crate::rng;

use super::config::{ExperimentConfig, ExperimentSpec, Method};
use super::gen_spiked;
use super::table::{ResultRow, ResultTable, TimingRow};

/// Clean data and node estimates for one replicate.
pub(super) struct Replicate {
    pub data: DataMatrix,
    pub nodes: Vec<NodeEstimate>,
    pub dropped: usize,
    pub ties: usize,
}

pub(super) fn clean_replicate(model: &SpikedModel, n: usize, k: usize, seed: u64, replicate: u64) -> Result<Replicate> {
    let data = gen_spiked(model, n, &mut rng::stream(seed, &[rng::tag("data"), replicate]));
    let policy = ShardPolicy::SeededPermutation(rng::derive_seed(seed, &[rng::tag("shard"), replicate]));
    let sharding = node_pca::shard(n, k, policy, model.r() + 1)?;
    let nodes = node_pca::node_estimates(&data, &sharding, model.r())?;
    let ties = nodes.iter().filter(|n| n.tie).count();
    Ok(Replicate { data, nodes, dropped: sharding.dropped, ties })
}

fn errors(estimate: &ProductPoint, truth: &ProductPoint) -> Result<(f64, f64)> {
    Ok((
        (&estimate.mu - &truth.mu).norm(),
        geometry::grassmann_distance(&estimate.subspace, &truth.subspace)?,
    ))
}

/// Row template plus method results for one replicate.
pub(super) fn evaluate_methods(
    methods: &[Method],
    rep: &Replicate,
    nodes: &[NodeEstimate],
    truth: &ProductPoint,
    epsilon: f64,
    seed: u64,
    template: &ResultRow,
) -> Result<Vec<(ResultRow, f64)>> {
    let settings = MedianSettings::default();
    let r = truth.r();
    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let start = Instant::now();
        let mut row = ResultRow { method: method.to_string(), ..template.clone() };
        let estimate = match method {
            Method::FullPca => aggregation::full_pca(&rep.data, r)?,
            Method::RandomSubset => {
                let mut g = rng::stream(seed, &[rng::tag("subset"), template.replicate]);
                aggregation::random_subset(nodes, &mut g)?
            }
            Method::ProjectorAverage => {
                let pa = aggregation::projector_average(nodes)?;
                row.ties = Some(pa.tie as u64);
                pa.estimate
            }
            Method::MomFixed(alpha) => {
                let scale = ScaleAlpha::new(alpha, epsilon)?;
                let res = aggregation::product_mom(nodes, scale, &settings)?;
                row.alpha = Some(scale.alpha());
                row.converged = Some(res.converged);
                res.estimate
            }
            Method::MomRpca => {
                let cal = calibration::calibrate_rpca(nodes, epsilon, &settings)?;
                let res = aggregation::product_mom(nodes, cal.alpha.scale, &settings)?;
                row.alpha = Some(cal.alpha.scale.alpha());
                row.s_mu = Some(cal.scales.s_mu);
                row.s_sub = Some(cal.scales.s_sub);
                row.tau_mu = Some(cal.scales.tau_mu);
                row.tau_sub = Some(cal.scales.tau_sub);
                row.converged = Some(res.converged);
                res.estimate
            }
        };
        let (me, se) = errors(&estimate, truth)?;
        row.mean_error = Some(me);
        row.subspace_error = Some(se);
        out.push((row, start.elapsed().as_secs_f64() * 1e3));
    }
    Ok(out)
}

fn collect(jobs: Vec<Result<Vec<(ResultRow, f64)>>>) -> Result<ResultTable> {
    let mut table = ResultTable::default();
    for job in jobs {
        for (row, ms) in job? {
            table.timings.push(TimingRow {
                experiment: row.experiment.clone(),
                sweep_value: row.sweep_value,
                secondary: row.secondary,
                replicate: row.replicate,
                method: row.method.clone(),
                runtime_ms: ms,
            });
            table.rows.push(row);
        }
    }
    Ok(table)
}

pub(super) fn run_eigengap_sweep(config: &ExperimentConfig) -> Result<ResultTable> {
    let ExperimentSpec::EigengapSweep { p, r, n, k, eigengaps, methods } = &config.experiment else {
        unreachable!("dispatched by kind")
    };
    let reps = config.replicates;
    let jobs = crate::par::map_indexed(eigengaps.len() * reps, |job| {
        let (gi, replicate) = (job / reps, (job % reps) as u64);
        let gap = eigengaps[gi];
        let model = SpikedModel::spiked(*p, *r, gap)?;
        let rep = clean_replicate(&model, *n, *k, config.seed, replicate)?;
        let template = ResultRow {
            experiment: "eigengap-sweep".into(),
            sweep: "eigengap".into(),
            sweep_value: gap,
            replicate,
            dropped: Some(rep.dropped as u64),
            ties: Some(rep.ties as u64),
            ..Default::default()
        };
        evaluate_methods(methods, &rep, &rep.nodes, &model.theta0(), config.epsilon, config.seed, &template)
    });
    collect(jobs)
}

pub(super) fn run_badnode_sweep(config: &ExperimentConfig) -> Result<ResultTable> {
    let (p, r, n, k, eigengap, kind, grid, fixed, shared, methods, by_fraction) = match &config.experiment {
        ExperimentSpec::BadnodeFraction { p, r, n, k, eigengap, contamination, severity, fractions, shared_direction, methods } => {
            (*p, *r, *n, *k, *eigengap, *contamination, fractions, *severity, *shared_direction, methods, true)
        }
        ExperimentSpec::BadnodeSeverity { p, r, n, k, eigengap, contamination, fraction, severities, shared_direction, methods } => {
            (*p, *r, *n, *k, *eigengap, *contamination, severities, *fraction, *shared_direction, methods, false)
        }
        _ => unreachable!("dispatched by kind"),
    };
    let experiment = config.experiment.name();
    let model = SpikedModel::spiked(p, r, eigengap)?;
    let truth = model.theta0();
    let reps = config.replicates;
    let jobs = crate::par::map_indexed(grid.len() * reps, |job| {
        let (gi, replicate) = (job / reps, (job % reps) as u64);
        let (fraction, severity) = if by_fraction { (grid[gi], fixed) } else { (fixed, grid[gi]) };
        let rep = clean_replicate(&model, n, k, config.seed, replicate)?;
        let spec = ContaminationSpec {
            kind,
            fraction,
            severity,
            seed: rng::derive_seed(config.seed, &[rng::tag("contaminate"), replicate]),
            shared_direction: shared,
        };
        let (nodes, bad) = robustness::contaminate(&rep.nodes, &spec)?;
        let template = ResultRow {
            experiment: experiment.into(),
            sweep: if by_fraction { "fraction" } else { "severity" }.into(),
            sweep_value: grid[gi],
            replicate,
            dropped: Some(rep.dropped as u64),
            ties: Some(rep.ties as u64),
            bad_nodes: Some(bad.len() as u64),
            ..Default::default()
        };
        evaluate_methods(methods, &rep, &nodes, &truth, config.epsilon, config.seed, &template)
    });
    collect(jobs)
}
