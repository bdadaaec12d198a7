use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use nalgebra::{DMatrix, DVector};
use serde_json::json;

use mompca::aggregation::{self, MedianSettings};
use mompca::calibration::{self, BlockScales, RiskCurve, RiskKind};
use mompca::covariance::{self, AlphaPolicy, Centering, GaussianProvider, SampleProvider};
use mompca::experiments::{self, ExperimentConfig};
use mompca::geometry::{self, Frame, ProductPoint, ScaleAlpha};
use mompca::io::{self, RunManifest};
use mompca::node_pca::{self, NodeEstimate, ShardPolicy};
use mompca::{rng, robustness, Error, Result};

use crate::Global;

#[derive(Args, Debug)]
pub struct NodePcaArgs {
    /// Comma- or tab-separated data, one observation per row.
    #[arg(long)]
    data: PathBuf,
    /// Number of nodes.
    #[arg(long)]
    k: usize,
    /// Subspace rank.
    #[arg(long)]
    r: usize,
    /// contiguous or permute (seeded row permutation).
    #[arg(long, default_value = "permute")]
    policy: String,
    /// Compute only this node's record.
    #[arg(long)]
    node_id: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EstimatesArgs {
    /// JSON-lines node estimates.
    #[arg(long)]
    estimates: PathBuf,
}

#[derive(Args, Debug)]
pub struct CovarianceArgs {
    #[arg(long, conflicts_with = "gamma_spec", required_unless_present = "gamma_spec")]
    estimates: Option<PathBuf>,
    /// spherical:d=5[,sigma2=1][,p=d] | block:p=..,r=..,mu=..,sub=.. | oracle:p=..,r=..,ratio=..,rho=..
    #[arg(long)]
    gamma_spec: Option<String>,
    /// Comma-separated alpha values.
    #[arg(long)]
    alpha_grid: Option<String>,
}

#[derive(Args, Debug)]
pub struct BootstrapArgs {
    #[arg(long)]
    estimates: PathBuf,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    /// fixed (alpha from --alpha-mode), fixed:<alpha> or recompute.
    #[arg(long, default_value = "fixed")]
    alpha_policy: String,
    /// Nominal coverage of the percentile intervals.
    #[arg(long, default_value_t = 0.9)]
    level: f64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum AlphaMode {
    Fixed(f64),
    Rpca,
    Optimal,
}

fn parse_fixed(text: &str) -> Option<f64> {
    text.strip_prefix("fixed:").and_then(|a| a.parse().ok())
}

fn alpha_mode(g: &Global) -> Result<AlphaMode> {
    match g.alpha_mode.as_str() {
        "rpca" => Ok(AlphaMode::Rpca),
        "optimal" => Ok(AlphaMode::Optimal),
        other => parse_fixed(other)
            .map(AlphaMode::Fixed)
            .ok_or_else(|| Error::Config(format!("--alpha-mode: expected fixed:<alpha>, rpca or optimal, got {other:?}"))),
    }
}

/// Selected scale plus whatever the selection produced along the way.
struct Selection {
    scale: ScaleAlpha,
    scales: Option<BlockScales>,
    degenerate: bool,
    curve: Option<RiskCurve>,
    plug_in_excluded: usize,
}

fn select_scale(g: &Global, nodes: &[NodeEstimate], settings: &MedianSettings) -> Result<Selection> {
    let mut sel = Selection { scale: ScaleAlpha::unit(), scales: None, degenerate: false, curve: None, plug_in_excluded: 0 };
    match alpha_mode(g)? {
        AlphaMode::Fixed(a) => sel.scale = ScaleAlpha::new(a, g.epsilon)?,
        AlphaMode::Rpca => {
            let cal = calibration::calibrate_rpca(nodes, g.epsilon, settings)?;
            sel.scale = cal.alpha.scale;
            sel.degenerate = cal.alpha.degenerate;
            sel.scales = Some(cal.scales);
        }
        AlphaMode::Optimal => {
            let prelim = aggregation::product_mom(nodes, ScaleAlpha::new(1.0, g.epsilon)?, settings)?.estimate;
            let (errors, excluded) = covariance::plug_in_errors(nodes, &prelim)?;
            let gamma = covariance::estimate_gamma(&errors)?;
            let provider = GaussianProvider::new(&gamma.matrix)?;
            let draws = provider.draw(g.mc_samples, &mut rng::stream(g.seed, &[rng::tag("optimal")]));
            let grid = calibration::alpha_grid(g.epsilon, g.grid_step)?;
            let p = prelim.p();
            let curve = calibration::alpha_star(
                |s| covariance::median_geometry(&draws, s, p, Centering::Zero, settings).map(|m| m.v),
                &RiskKind::Trace(None),
                &grid,
                g.epsilon,
            )?;
            sel.scale = curve.alpha_star;
            sel.curve = Some(curve);
            sel.plug_in_excluded = excluded;
        }
    }
    Ok(sel)
}

fn load(g: &Global, path: &Path, manifest: &mut RunManifest) -> Result<Vec<NodeEstimate>> {
    let loaded = io::read_records_file(path, g.reorthonormalize)?;
    io::ensure_consistent(&loaded.nodes)?;
    manifest.count("nodes", loaded.nodes.len() as u64);
    if !loaded.repaired.is_empty() {
        manifest.count("reorthonormalized", loaded.repaired.len() as u64);
        manifest.note(format!("QR-repaired bases for nodes {:?}", loaded.repaired));
    }
    Ok(loaded.nodes)
}

fn settings_hash_input(g: &Global, args: &impl std::fmt::Debug) -> String {
    format!(
        "{args:?}|seed={}|epsilon={}|alpha_mode={}|grid_step={}|mc_samples={}|strict={}|reorth={}",
        g.seed, g.epsilon, g.alpha_mode, g.grid_step, g.mc_samples, g.strict, g.reorthonormalize
    )
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes the main output to `--out` (plus manifest) or stdout.
fn emit(g: &Global, bytes: &[u8], manifest: RunManifest) -> Result<()> {
    match &g.out {
        Some(path) => {
            std::fs::write(path, bytes)?;
            manifest.finish(path)?;
        }
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

/// Secondary output next to `--out`, or stderr without one.
fn emit_sidecar(g: &Global, suffix: &str, bytes: &[u8]) -> Result<()> {
    match &g.out {
        Some(path) => std::fs::write(sidecar(path, suffix), bytes)?,
        None => std::io::stderr().lock().write_all(bytes)?,
    }
    Ok(())
}

fn pretty(value: &serde_json::Value) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn strict_check(g: &Global, converged: bool, what: &str) -> Result<()> {
    if g.strict && !converged {
        return Err(Error::Numerical(format!("{what} did not converge")));
    }
    Ok(())
}

pub fn node_pca(g: &Global, a: &NodePcaArgs) -> Result<()> {
    let mut manifest = RunManifest::start("node-pca", settings_hash_input(g, a).as_bytes(), Some(g.seed));
    let data = io::read_data_file(&a.data)?;
    let policy = match a.policy.as_str() {
        "contiguous" => ShardPolicy::Contiguous,
        "permute" => ShardPolicy::SeededPermutation(g.seed),
        other => return Err(Error::Config(format!("--policy: expected contiguous or permute, got {other:?}"))),
    };
    let sharding = node_pca::shard(data.n(), a.k, policy, a.r + 1)?;
    let nodes = match a.node_id {
        Some(k) if k >= a.k => return Err(Error::Config(format!("--node-id {k} is out of range for K={}", a.k))),
        Some(k) => vec![node_pca::node_estimate(&sharding.block(&data, k), a.r, k as i64)?],
        None => node_pca::node_estimates(&data, &sharding, a.r)?,
    };
    manifest.count("rows", data.n() as u64);
    manifest.count("dropped_rows", sharding.dropped as u64);
    manifest.count("ties", nodes.iter().filter(|n| n.tie).count() as u64);
    manifest.count("nodes", nodes.len() as u64);
    emit(g, io::records_to_string(&nodes)?.as_bytes(), manifest)
}

pub fn aggregate(g: &Global, a: &EstimatesArgs) -> Result<()> {
    let mut manifest = RunManifest::start("aggregate", settings_hash_input(g, a).as_bytes(), Some(g.seed));
    let nodes = load(g, &a.estimates, &mut manifest)?;
    let settings = MedianSettings::default();
    let sel = select_scale(g, &nodes, &settings)?;
    let res = aggregation::product_mom(&nodes, sel.scale, &settings)?;
    strict_check(g, res.converged, "aggregation")?;
    manifest.count("excluded", res.excluded as u64);
    manifest.count("cut_locus_events", res.cut_locus_events as u64);
    let b = nodes.iter().map(|n| n.b).sum();
    let out = NodeEstimate::from_point(-1, b, res.estimate.clone());
    let report = json!({
        "alpha_mode": g.alpha_mode,
        "alpha": sel.scale.alpha(),
        "epsilon": g.epsilon,
        "degenerate_calibration": sel.degenerate,
        "block_scales": sel.scales.map(scales_json),
        "objective": res.objective,
        "iterations": res.iterations,
        "converged": res.converged,
        "anchored": res.anchored,
        "excluded": res.excluded,
        "cut_locus_events": res.cut_locus_events,
        "nodes": nodes.len(),
    });
    emit_sidecar(g, ".report.json", &pretty(&report)?)?;
    emit(g, io::records_to_string(&[out])?.as_bytes(), manifest)
}

fn scales_json(s: BlockScales) -> serde_json::Value {
    json!({ "s_mu": s.s_mu, "s_sub": s.s_sub, "tau_mu": s.tau_mu, "tau_sub": s.tau_sub })
}

pub fn calibrate(g: &Global, a: &EstimatesArgs) -> Result<()> {
    let mut manifest = RunManifest::start("calibrate", settings_hash_input(g, a).as_bytes(), Some(g.seed));
    let nodes = load(g, &a.estimates, &mut manifest)?;
    let settings = MedianSettings::default();
    let sel = select_scale(g, &nodes, &settings)?;
    manifest.count("plug_in_excluded", sel.plug_in_excluded as u64);
    let curve = sel.curve.as_ref().map(|c| {
        json!({
            "weight": c.weight,
            "points": c.points,
            "skipped": c.skipped,
        })
    });
    let report = json!({
        "alpha_mode": g.alpha_mode,
        "alpha": sel.scale.alpha(),
        "epsilon": g.epsilon,
        "degenerate_calibration": sel.degenerate,
        "block_scales": sel.scales.map(scales_json),
        "risk_curve": curve,
    });
    emit(g, &pretty(&report)?, manifest)
}

fn spec_fields(body: &str) -> Result<BTreeMap<String, f64>> {
    body.split(',')
        .filter(|s| !s.is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--gamma-spec: expected key=value, got {kv:?}")))?;
            let v: f64 = v.parse().map_err(|_| Error::Config(format!("--gamma-spec: {k} is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

/// Parses a model covariance; returns `(Γ, p)` where `p` is the mean-block length.
fn gamma_from_spec(spec: &str) -> Result<(DMatrix<f64>, usize)> {
    let (kind, body) = spec.split_once(':').unwrap_or((spec, ""));
    let f = spec_fields(body)?;
    let get = |k: &str| f.get(k).copied().ok_or_else(|| Error::Config(format!("--gamma-spec {kind}: missing {k}")));
    let count = |k: &str| -> Result<usize> {
        let v = get(k)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::Config(format!("--gamma-spec {kind}: {k} must be a non-negative integer")));
        }
        Ok(v as usize)
    };
    match kind {
        "spherical" => {
            let d = count("d")?;
            let sigma2 = f.get("sigma2").copied().unwrap_or(1.0);
            let p = if f.contains_key("p") { count("p")? } else { d };
            if p > d {
                return Err(Error::Config("--gamma-spec spherical: p must not exceed d".into()));
            }
            Ok((DMatrix::identity(d, d) * sigma2, p))
        }
        "block" => {
            let (p, r) = (count("p")?, count("r")?);
            if r == 0 || r >= p {
                return Err(Error::Config("--gamma-spec block: need 1 <= r < p".into()));
            }
            let (mu, sub) = (get("mu")?, get("sub")?);
            let d = geometry::tangent_dim(p, r);
            Ok((DMatrix::from_fn(d, d, |i, j| if i != j { 0.0 } else if i < p { mu } else { sub }), p))
        }
        "oracle" => {
            let (p, r) = (count("p")?, count("r")?);
            Ok((experiments::oracle_gamma(p, r, get("ratio")?, get("rho")?).map_err(|e| Error::Config(e.to_string()))?, p))
        }
        other => Err(Error::Config(format!("--gamma-spec: unknown kind {other:?}"))),
    }
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("--alpha-grid: {s:?} is not a number"))))
        .collect()
}

pub fn covariance(g: &Global, a: &CovarianceArgs) -> Result<()> {
    let mut manifest = RunManifest::start("covariance", settings_hash_input(g, a).as_bytes(), Some(g.seed));
    let settings = MedianSettings::default();
    let (gamma, p, fallback) = match (&a.estimates, &a.gamma_spec) {
        (Some(path), _) => {
            let nodes = load(g, path, &mut manifest)?;
            let sel = select_scale(g, &nodes, &settings)?;
            let estimate = aggregation::product_mom(&nodes, sel.scale, &settings)?.estimate;
            let (errors, excluded) = covariance::plug_in_errors(&nodes, &estimate)?;
            manifest.count("plug_in_excluded", excluded as u64);
            let gamma = covariance::estimate_gamma(&errors)?;
            if gamma.singular {
                manifest.note("plug-in covariance is singular (fewer than d+1 nodes)");
            }
            (gamma.matrix, estimate.p(), vec![sel.scale.alpha()])
        }
        (None, Some(spec)) => {
            let (gamma, p) = gamma_from_spec(spec)?;
            let fallback = match alpha_mode(g)? {
                AlphaMode::Fixed(x) => vec![x],
                _ => calibration::alpha_grid(g.epsilon, g.grid_step)?,
            };
            (gamma, p, fallback)
        }
        (None, None) => return Err(Error::Config("need --estimates or --gamma-spec".into())),
    };
    let alphas = match &a.alpha_grid {
        Some(text) => parse_grid(text)?,
        None => fallback,
    };
    let provider = GaussianProvider::new(&gamma)?;
    let draws = provider.draw(g.mc_samples, &mut rng::stream(g.seed, &[rng::tag("covariance")]));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["alpha", "d", "mc_samples", "excluded", "trace_v", "trace_core", "c_factor", "min_eig_a"])
        .map_err(Error::from)?;
    for alpha in alphas {
        let scale = ScaleAlpha::new(alpha, g.epsilon)?;
        let m = covariance::median_geometry(&draws, scale, p, Centering::Zero, &settings)?;
        let weight = DVector::from_fn(m.d, |i, _| if i < p { scale.mean_weight() } else { scale.subspace_weight() });
        let y_trace: f64 = (0..m.d).map(|i| weight[i] * gamma[(i, i)]).sum();
        manifest.count("excluded_draws", m.excluded as u64);
        w.write_record(&[
            scale.alpha().to_string(),
            m.d.to_string(),
            m.mc_samples.to_string(),
            m.excluded.to_string(),
            m.v.trace().to_string(),
            m.core.trace().to_string(),
            (m.core.trace() / y_trace).to_string(),
            mompca::linalg::min_eigenvalue(&m.a).to_string(),
        ])
        .map_err(Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
    emit(g, &bytes, manifest)
}

pub fn bootstrap(g: &Global, a: &BootstrapArgs) -> Result<()> {
    let mut manifest = RunManifest::start("bootstrap", settings_hash_input(g, a).as_bytes(), Some(g.seed));
    let nodes = load(g, &a.estimates, &mut manifest)?;
    let settings = MedianSettings::default();
    let policy = match a.alpha_policy.as_str() {
        "recompute" => AlphaPolicy::Recompute { epsilon: g.epsilon },
        "fixed" => AlphaPolicy::Fixed(select_scale(g, &nodes, &settings)?.scale),
        other => AlphaPolicy::Fixed(ScaleAlpha::new(
            parse_fixed(other).ok_or_else(|| Error::Config(format!("--alpha-policy: unknown policy {other:?}")))?,
            g.epsilon,
        )?),
    };
    let res = covariance::node_bootstrap(&nodes, policy, a.reps, g.seed, a.level, &settings)?;
    manifest.count("replicates", res.deviations.len() as u64);
    manifest.count("dropped_replicates", res.dropped as u64);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["coordinate", "lo", "hi"]).map_err(Error::from)?;
    for (j, iv) in res.intervals.iter().enumerate() {
        w.write_record(&[j.to_string(), iv.lo.to_string(), iv.hi.to_string()]).map_err(Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;

    let d = res.deviations[0].len();
    let mut reps = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["replicate".to_string(), "alpha".to_string()];
    header.extend((0..d).map(|j| format!("dev_{j}")));
    reps.write_record(&header).map_err(Error::from)?;
    for (i, dev) in res.deviations.iter().enumerate() {
        let alpha = res.alphas.get(i).copied().unwrap_or(res.scale.alpha());
        let mut rec = vec![i.to_string(), alpha.to_string()];
        rec.extend(dev.iter().map(f64::to_string));
        reps.write_record(&rec).map_err(Error::from)?;
    }
    let rep_bytes = reps.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
    if g.out.is_some() {
        emit_sidecar(g, ".replicates.csv", &rep_bytes)?;
    }
    emit(g, &bytes, manifest)
}

pub fn simulate(g: &Global, a: &SimulateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config)?;
    let mut manifest = RunManifest::start("simulate", text.as_bytes(), None);
    let config = ExperimentConfig::from_toml(&text)?;
    manifest.seed = Some(config.seed);
    let table = experiments::run(&config)?;
    let sum = |f: fn(&experiments::ResultRow) -> Option<u64>| table.rows.iter().filter_map(f).sum::<u64>();
    manifest.count("rows", table.rows.len() as u64);
    manifest.count("dropped_rows", sum(|r| r.dropped));
    manifest.count("ties", sum(|r| r.ties));
    manifest.count("excluded", sum(|r| r.excluded));
    manifest.count("unconverged", table.rows.iter().filter(|r| r.converged == Some(false)).count() as u64);
    strict_check(g, !table.rows.iter().any(|r| r.converged == Some(false)), "an experiment median")?;
    let mut main = Vec::new();
    table.write_csv(&mut main)?;
    if g.out.is_some() {
        let mut summary = Vec::new();
        experiments::write_rows(&mut summary, &table.summary())?;
        emit_sidecar(g, ".summary.csv", &summary)?;
        let mut timing = Vec::new();
        table.write_timings(&mut timing)?;
        emit_sidecar(g, ".timing.csv", &timing)?;
    }
    emit(g, &main, manifest)
}

pub fn influence(g: &Global, a: &EstimatesArgs) -> Result<()> {
    let mut manifest = RunManifest::start("influence", settings_hash_input(g, a).as_bytes(), Some(g.seed));
    let nodes = load(g, &a.estimates, &mut manifest)?;
    let settings = MedianSettings::default();
    let sel = select_scale(g, &nodes, &settings)?;
    let estimate: ProductPoint = aggregation::product_mom(&nodes, sel.scale, &settings)?.estimate;
    let frame = Frame::new(estimate);
    let (c_mu, c_sub) = robustness::influence_constants(sel.scale);
    manifest.note(format!("alpha={} sup mean score={c_mu} sup subspace score={c_sub}", sel.scale.alpha()));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["node_id", "alpha", "h_norm", "mean_score", "subspace_score"]).map_err(Error::from)?;
    let mut excluded = 0u64;
    for node in &nodes {
        let (h, m, s) = match node_pca::node_error(node, &frame) {
            Ok(err) => {
                let h = geometry::h_norm(&err, sel.scale);
                match robustness::influence_score(&err, sel.scale) {
                    Ok(psi) => (h.to_string(), psi.w_mu.norm().to_string(), psi.w_sub.norm().to_string()),
                    Err(_) => (h.to_string(), String::new(), String::new()),
                }
            }
            Err(_) => {
                excluded += 1;
                (String::new(), String::new(), String::new())
            }
        };
        w.write_record(&[node.node_id.to_string(), sel.scale.alpha().to_string(), h, m, s]).map_err(Error::from)?;
    }
    manifest.count("excluded", excluded);
    let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
    emit(g, &bytes, manifest)
}
