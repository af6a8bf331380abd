//! Seeded Monte Carlo estimation of recovery error probabilities over
//! (lambda, n) grids, with Wilson confidence intervals, CSV persistence, and
//! canned reproductions of the decoding experiments.
//!
//! Trials are embarrassingly parallel: each trial's randomness is a pure
//! function of the base seed and the trial index, so results are identical
//! for any worker count.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::decoders::{Decoder, DecoderKind, PairStatistics};
use crate::ensembles::{self, GraphEnsemble};
use crate::error::{Error, Result};
use crate::model::TableCache;
use crate::rng::derive_seed;
use crate::sample::sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Exact,
    Approximate,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Exact => "exact",
            Criterion::Approximate => "approximate",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Criterion::Exact),
            "approximate" => Ok(Criterion::Approximate),
            other => Err(Error::Parse(format!(
                "unknown criterion {other:?} (expected exact or approximate)"
            ))),
        }
    }
}

/// Per-point trial configuration.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub decoder: DecoderKind,
    pub n: usize,
    pub trials: usize,
    pub q_max: usize,
    pub criterion: Criterion,
    pub base_seed: u64,
}

/// Empirical error estimate with a 95% Wilson confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub error_count: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci95_halfwidth: f64,
    pub runtime_seconds: f64,
}

const Z95: f64 = 1.959963984540054;

pub fn wilson_halfwidth(errors: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

impl ErrorEstimate {
    fn from_counts(errors: u64, trials: u64, runtime_seconds: f64) -> Self {
        ErrorEstimate {
            error_count: errors,
            trials,
            p_hat: if trials == 0 {
                0.0
            } else {
                errors as f64 / trials as f64
            },
            ci95_halfwidth: wilson_halfwidth(errors, trials),
            runtime_seconds,
        }
    }
}

/// Error counts under both criteria from one batch of paired trials. An
/// exact error is edit distance > 0; an approximate error is > q_max. The
/// approximate count never exceeds the exact count, trial by trial.
#[derive(Debug, Clone, Copy)]
pub struct TrialBatch {
    pub trials: u64,
    pub exact_errors: u64,
    pub approx_errors: u64,
    pub runtime_seconds: f64,
}

/// Runs `trials` independent decode trials: draw a member uniformly, sample
/// n rows, decode, and measure the edit distance to the truth.
pub fn run_batch(e: &GraphEnsemble, cfg: &TrialConfig) -> Result<TrialBatch> {
    let start = Instant::now();
    let cache = TableCache::new(e.lambda());
    let decoder = Decoder::prepare(cfg.decoder, e, &cache, cfg.q_max)?;
    // Warm the sampling tables for every member structure up front when the
    // family is small; otherwise they fill on first use under a lock.
    let (exact_errors, approx_errors) = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| -> Result<(u64, u64)> {
            let trial_seed = derive_seed(cfg.base_seed, &[t]);
            let truth = e.draw_index(derive_seed(trial_seed, &[0]))?;
            let model = e.member_model(truth, Some(&cache))?;
            let x = sample(&model, cfg.n, derive_seed(trial_seed, &[1]));
            let stats = PairStatistics::from_samples(&x);
            let decoded = decoder.decode(&stats);
            let dist = e.member_edit_distance(truth, decoded)?;
            Ok(((dist > 0) as u64, (dist > cfg.q_max) as u64))
        })
        .try_reduce(
            || (0, 0),
            |a, b| Ok((a.0 + b.0, a.1 + b.1)),
        )?;
    Ok(TrialBatch {
        trials: cfg.trials as u64,
        exact_errors,
        approx_errors,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs a batch and reports the estimate under the configured criterion.
pub fn run_trials(e: &GraphEnsemble, cfg: &TrialConfig) -> Result<ErrorEstimate> {
    let batch = run_batch(e, cfg)?;
    let errors = match cfg.criterion {
        Criterion::Exact => batch.exact_errors,
        Criterion::Approximate => batch.approx_errors,
    };
    Ok(ErrorEstimate::from_counts(
        errors,
        batch.trials,
        batch.runtime_seconds,
    ))
}

/// One CSV output row.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub family: String,
    pub params: String,
    pub decoder: DecoderKind,
    pub criterion: Criterion,
    pub lambda: f64,
    pub n: usize,
    pub q_max: usize,
    pub estimate: ErrorEstimate,
    pub base_seed: u64,
}

pub const CSV_HEADER: &str =
    "family,params,decoder,criterion,lambda,n,q_max,trials,errors,p_hat,ci95,base_seed,runtime_s";

impl SweepRow {
    /// The runtime column is zeroed unless timing output is requested, so
    /// that identical configurations produce byte-identical files.
    pub fn to_csv(&self, include_timing: bool) -> String {
        let runtime = if include_timing {
            format!("{:.3}", self.estimate.runtime_seconds)
        } else {
            "0.000".to_string()
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.family,
            self.params,
            self.decoder.name(),
            self.criterion.name(),
            self.lambda,
            self.n,
            self.q_max,
            self.estimate.trials,
            self.estimate.error_count,
            self.estimate.p_hat,
            self.estimate.ci95_halfwidth,
            self.base_seed,
            runtime,
        )
    }
}

/// Grid sweep configuration: one ensemble family swept over lambda and n.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
    pub ns: Vec<usize>,
    pub trials: usize,
    pub q_max: usize,
    pub criterion: Criterion,
    pub decoder: DecoderKind,
    pub base_seed: u64,
}

/// Runs the full grid. Point (li, ni) is seeded by
/// derive_seed(base_seed, [li, ni]), so the grid is restartable point-wise.
pub fn sweep(base: &GraphEnsemble, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(cfg.lambdas.len() * cfg.ns.len());
    for (li, &lambda) in cfg.lambdas.iter().enumerate() {
        let e = base.with_lambda(lambda)?;
        for (ni, &n) in cfg.ns.iter().enumerate() {
            let point_seed = derive_seed(cfg.base_seed, &[li as u64, ni as u64]);
            let tc = TrialConfig {
                decoder: cfg.decoder,
                n,
                trials: cfg.trials,
                q_max: cfg.q_max,
                criterion: cfg.criterion,
                base_seed: point_seed,
            };
            let estimate = run_trials(&e, &tc)?;
            rows.push(SweepRow {
                family: e.family().name().to_string(),
                params: e.descriptor(),
                decoder: cfg.decoder,
                criterion: cfg.criterion,
                lambda,
                n,
                q_max: cfg.q_max,
                estimate,
                base_seed: point_seed,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    Fig3,
    Fig4,
    Fig5,
}

impl FigureId {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fig3" => Ok(FigureId::Fig3),
            "fig4" => Ok(FigureId::Fig4),
            "fig5" => Ok(FigureId::Fig5),
            other => Err(Error::Parse(format!(
                "unknown figure {other:?} (expected fig3, fig4, fig5)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
        }
    }
}

/// The two curves of a figure reproduction: the approximate-recovery
/// ensemble and its exact-recovery counterpart, with decoders and q_max
/// fixed to the experiment's configuration.
pub struct FigureSetup {
    pub primary: GraphEnsemble,
    pub primary_decoder: DecoderKind,
    pub counterpart: GraphEnsemble,
    pub counterpart_decoder: DecoderKind,
    pub q_max: usize,
}

pub fn figure_setup(fig: FigureId, lambda: f64) -> Result<FigureSetup> {
    match fig {
        // Ensemble 1a at p = 100, alpha = 12, q_max = 3, against the
        // all-single-edge ensemble; both decode by agreement counting.
        FigureId::Fig3 => Ok(FigureSetup {
            primary: ensembles::ensemble1a(100, 12, lambda)?,
            primary_decoder: DecoderKind::Agreement,
            counterpart: ensembles::counterpart_single_edge(100, lambda)?,
            counterpart_decoder: DecoderKind::Agreement,
            q_max: 3,
        }),
        // Ensemble 3 at m = 4, alpha = 1 (brute force over 2^12 candidates)
        // against the 8-clique-minus-edge ensemble.
        FigureId::Fig4 => Ok(FigureSetup {
            primary: ensembles::ensemble3(8, 4, 1, lambda)?,
            primary_decoder: DecoderKind::Blockwise,
            counterpart: ensembles::counterpart_clique_minus_edge(8, 8, lambda)?,
            counterpart_decoder: DecoderKind::Ml,
            q_max: 3,
        }),
        // Ensemble 4 at eta1 = 4, eta2 = 3, m = 0, alpha = 2 (ML per 2^6
        // block) against 4 blocks of 8 disjoint paths.
        FigureId::Fig5 => Ok(FigureSetup {
            primary: ensembles::ensemble4(32, 4, 3, 0, 2, 2, lambda)?,
            primary_decoder: DecoderKind::Blockwise,
            counterpart: ensembles::counterpart_disjoint_paths(40, 4, 8, lambda)?,
            counterpart_decoder: DecoderKind::Ml,
            q_max: 3,
        }),
    }
}

/// Reproduces one figure: for each (lambda, n) grid point, runs the primary
/// ensemble once (emitting paired approximate- and exact-criterion rows from
/// the same trials) and the counterpart under exact recovery.
pub fn reproduce_figure(
    fig: FigureId,
    lambdas: &[f64],
    ns: &[usize],
    trials: usize,
    base_seed: u64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for (li, &lambda) in lambdas.iter().enumerate() {
        let setup = figure_setup(fig, lambda)?;
        for (ni, &n) in ns.iter().enumerate() {
            let primary_seed = derive_seed(base_seed, &[0, li as u64, ni as u64]);
            let batch = run_batch(
                &setup.primary,
                &TrialConfig {
                    decoder: setup.primary_decoder,
                    n,
                    trials,
                    q_max: setup.q_max,
                    criterion: Criterion::Approximate,
                    base_seed: primary_seed,
                },
            )?;
            for (criterion, errors) in [
                (Criterion::Approximate, batch.approx_errors),
                (Criterion::Exact, batch.exact_errors),
            ] {
                rows.push(SweepRow {
                    family: setup.primary.family().name().to_string(),
                    params: setup.primary.descriptor(),
                    decoder: setup.primary_decoder,
                    criterion,
                    lambda,
                    n,
                    q_max: match criterion {
                        Criterion::Approximate => setup.q_max,
                        Criterion::Exact => 0,
                    },
                    estimate: ErrorEstimate::from_counts(
                        errors,
                        batch.trials,
                        batch.runtime_seconds,
                    ),
                    base_seed: primary_seed,
                });
            }
            let counterpart_seed = derive_seed(base_seed, &[1, li as u64, ni as u64]);
            let est = run_trials(
                &setup.counterpart,
                &TrialConfig {
                    decoder: setup.counterpart_decoder,
                    n,
                    trials,
                    q_max: 0,
                    criterion: Criterion::Exact,
                    base_seed: counterpart_seed,
                },
            )?;
            rows.push(SweepRow {
                family: setup.counterpart.family().name().to_string(),
                params: setup.counterpart.descriptor(),
                decoder: setup.counterpart_decoder,
                criterion: Criterion::Exact,
                lambda,
                n,
                q_max: 0,
                estimate: est,
                base_seed: counterpart_seed,
            });
        }
    }
    Ok(rows)
}

/// Interpolated n at which a curve of (n, p_hat) points, sorted by n, first
/// crosses below `target`. Linear interpolation on log n between the
/// bracketing grid points; `n[0]` when the curve starts below the target;
/// None when it never crosses.
pub fn threshold_n(points: &[(usize, f64)], target: f64) -> Option<f64> {
    if points.is_empty() {
        return None;
    }
    if points[0].1 < target {
        return Some(points[0].0 as f64);
    }
    for w in points.windows(2) {
        let (n0, p0) = w[0];
        let (n1, p1) = w[1];
        if p0 >= target && p1 < target {
            let x0 = (n0 as f64).ln();
            let x1 = (n1 as f64).ln();
            let frac = (p0 - target) / (p0 - p1);
            return Some((x0 + frac * (x1 - x0)).exp());
        }
    }
    None
}

/// Renders rows to the full CSV file contents: `#`-prefixed configuration
/// echo lines, then the fixed header, then one line per row.
pub fn render_csv(echo: &str, rows: &[SweepRow], include_timing: bool) -> String {
    let mut out = String::new();
    for line in echo.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv(include_timing));
        out.push('\n');
    }
    out
}

/// Atomic write: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_family_never_errs() {
        let e = ensembles::counterpart_disjoint_paths(10, 1, 8, 0.5).unwrap();
        let cfg = TrialConfig {
            decoder: DecoderKind::Ml,
            n: 3,
            trials: 50,
            q_max: 0,
            criterion: Criterion::Exact,
            base_seed: 4,
        };
        let est = run_trials(&e, &cfg).unwrap();
        assert_eq!(est.error_count, 0);
        assert_eq!(est.p_hat, 0.0);
    }

    #[test]
    fn batch_is_deterministic() {
        let e = ensembles::ensemble1a(12, 3, 0.5).unwrap();
        let cfg = TrialConfig {
            decoder: DecoderKind::Agreement,
            n: 10,
            trials: 200,
            q_max: 1,
            criterion: Criterion::Approximate,
            base_seed: 99,
        };
        let a = run_batch(&e, &cfg).unwrap();
        let b = run_batch(&e, &cfg).unwrap();
        assert_eq!(a.exact_errors, b.exact_errors);
        assert_eq!(a.approx_errors, b.approx_errors);
        // Criterion ordering holds by construction.
        assert!(a.approx_errors <= a.exact_errors);
    }

    #[test]
    fn ml_is_consistent_at_large_n() {
        // Single-edge counterpart at strong coupling: with n = 2000 the ML
        // rule essentially never errs.
        let e = ensembles::counterpart_single_edge(100, 1.0).unwrap();
        let cfg = TrialConfig {
            decoder: DecoderKind::Agreement,
            n: 2000,
            trials: 500,
            q_max: 0,
            criterion: Criterion::Exact,
            base_seed: 21,
        };
        let est = run_trials(&e, &cfg).unwrap();
        assert!(est.p_hat <= 0.01, "error {p} too high", p = est.p_hat);
    }

    #[test]
    fn criterion_ordering_across_qmax() {
        let e = ensembles::ensemble2(6, 3, 2, 0.4).unwrap();
        let mut prev = u64::MAX;
        for q_max in 0..4usize {
            let cfg = TrialConfig {
                decoder: DecoderKind::Blockwise,
                n: 4,
                trials: 150,
                q_max,
                criterion: Criterion::Approximate,
                base_seed: 11,
            };
            let batch = run_batch(&e, &cfg).unwrap();
            assert!(batch.approx_errors <= prev);
            prev = batch.approx_errors;
        }
    }

    #[test]
    fn wilson_interval_sane() {
        assert_eq!(wilson_halfwidth(0, 0), 0.0);
        let hw = wilson_halfwidth(2500, 5000);
        assert!((hw - 0.0139).abs() < 0.001, "halfwidth {hw}");
        assert!(wilson_halfwidth(0, 5000) < 0.002);
    }

    #[test]
    fn sweep_row_count_and_seeding() {
        let e = ensembles::ensemble1a(8, 2, 0.5).unwrap();
        let cfg = SweepConfig {
            lambdas: vec![0.3, 0.6],
            ns: vec![2, 5, 9],
            trials: 20,
            q_max: 0,
            criterion: Criterion::Exact,
            decoder: DecoderKind::Agreement,
            base_seed: 7,
        };
        let rows = sweep(&e, &cfg).unwrap();
        assert_eq!(rows.len(), 6);
        // Point seeds depend on grid indices only.
        assert_eq!(rows[0].base_seed, derive_seed(7, &[0, 0]));
        assert_eq!(rows[4].base_seed, derive_seed(7, &[1, 1]));
        // Lambda is echoed in the descriptor.
        assert!(rows[0].params.contains("lambda=0.3"));
    }

    #[test]
    fn threshold_interpolation() {
        let pts = vec![(10, 0.8), (20, 0.4), (40, 0.05)];
        let t = threshold_n(&pts, 0.1).unwrap();
        assert!(t > 20.0 && t < 40.0);
        // Already below target at the first point.
        assert_eq!(threshold_n(&pts, 0.9).unwrap(), 10.0);
        // Never crosses.
        assert!(threshold_n(&pts, 0.01).is_none());
        // Exactly on a grid point interpolates to it.
        let t = threshold_n(&[(10, 0.5), (20, 0.1), (40, 0.01)], 0.1).unwrap();
        assert!((t - 20.0).abs() < 1e-9);
    }

    #[test]
    fn csv_rendering_shape() {
        let e = ensembles::ensemble1a(8, 2, 0.5).unwrap();
        let cfg = SweepConfig {
            lambdas: vec![0.5],
            ns: vec![3],
            trials: 10,
            q_max: 1,
            criterion: Criterion::Approximate,
            decoder: DecoderKind::Agreement,
            base_seed: 1,
        };
        let rows = sweep(&e, &cfg).unwrap();
        let text = render_csv("cmd simulate --x 1", &rows, false);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# cmd simulate --x 1");
        assert_eq!(lines[1], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("ens1a,family=ens1a p=8 alpha=2 lambda=0.5,agreement,approximate,0.5,3,1,10,"));
        assert!(lines[2].ends_with(",0.000"));
    }

    #[test]
    fn figure_setups_echo_experiment_parameters() {
        let f3 = figure_setup(FigureId::Fig3, 0.2).unwrap();
        assert_eq!(f3.primary.descriptor(), "family=ens1a p=100 alpha=12 lambda=0.2");
        assert_eq!(f3.q_max, 3);
        let f4 = figure_setup(FigureId::Fig4, 0.2).unwrap();
        assert_eq!(f4.primary.descriptor(), "family=ens3 p=8 m=4 alpha=1 lambda=0.2");
        assert_eq!(
            f4.counterpart.descriptor(),
            "family=cp_clique_minus_edge p=8 mprime=8 lambda=0.2"
        );
        let f5 = figure_setup(FigureId::Fig5, 0.2).unwrap();
        assert_eq!(
            f5.primary.descriptor(),
            "family=ens4 p=32 eta1=4 eta2=3 m=0 ell=2 alpha=2 lambda=0.2"
        );
        assert_eq!(
            f5.counterpart.descriptor(),
            "family=cp_disjoint_paths p=40 alpha=4 eta=8 lambda=0.2"
        );
    }
}
