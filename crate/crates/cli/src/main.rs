//! Command-line front end: bound evaluation, lemma verification, Monte
//! Carlo simulation sweeps, and canned experiment reproductions.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ising_select::bounds::{self, BoundQuery, BoundReport, TheoremId};
use ising_select::decoders::DecoderKind;
use ising_select::ensembles::GraphEnsemble;
use ising_select::harness::{self, Criterion, FigureId, SweepConfig};
use ising_select::verify::{run_verification, VerifyOptions};
use ising_select::Error;

/// Exit codes: 0 success, 2 flag or constraint error, 3 verification
/// failure, 4 resource cap.
const EXIT_FLAG: u8 = 2;
const EXIT_VERIFY: u8 = 3;
const EXIT_RESOURCE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "ising-select",
    version,
    about = "Ising model selection: sample-complexity bounds and decoding experiments",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate necessary-sample-size bounds over a parameter grid
    Bound(BoundArgs),
    /// Run the brute-force-vs-analytic verification suites
    Verify(VerifyArgs),
    /// Estimate decoding error probabilities over a (lambda, n) grid
    Simulate(SimulateArgs),
    /// Run a canned paired experiment (fig3, fig4, fig5)
    Reproduce(ReproduceArgs),
}

/// Grid syntax for numeric flags: a single value, a comma list
/// (`0.2,0.3,0.5`), or a range `start:stop:step` inclusive of start and
/// exclusive of stop.
fn parse_f64_grid(s: &str) -> Result<Vec<f64>, Error> {
    let bad = |why: &str| Error::Parse(format!("bad grid {s:?}: {why}"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("non-numeric value"))?;
        let (start, stop, step) = (nums[0], nums[1], nums[2]);
        if step <= 0.0 || stop < start {
            return Err(bad("need step > 0 and stop >= start"));
        }
        let mut out = Vec::new();
        let mut k = 0u64;
        loop {
            let v = start + k as f64 * step;
            if v >= stop - step * 1e-9 {
                break;
            }
            out.push(v);
            k += 1;
        }
        if out.is_empty() {
            return Err(bad("empty range"));
        }
        Ok(out)
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad("non-numeric value")))
            .collect()
    }
}

fn parse_usize_grid(s: &str) -> Result<Vec<usize>, Error> {
    parse_f64_grid(s)?
        .into_iter()
        .map(|v| {
            if v < 0.0 || v.fract() != 0.0 {
                Err(Error::Parse(format!(
                    "grid {s:?} must contain nonnegative integers"
                )))
            } else {
                Ok(v as usize)
            }
        })
        .collect()
}

#[derive(Args)]
struct BoundArgs {
    /// Theorem id (T1..T5); mutually exclusive with --family
    #[arg(long, conflicts_with = "family")]
    theorem: Option<String>,
    /// Fano ensemble family (ens1, ens1a, ens2, ens3, ens4)
    #[arg(long)]
    family: Option<String>,
    #[arg(long, default_value = "0")]
    p: String,
    #[arg(long, default_value = "0")]
    k: String,
    #[arg(long, default_value = "0")]
    d: String,
    #[arg(long, default_value = "0")]
    dprime: String,
    #[arg(long, default_value = "0")]
    eta: String,
    #[arg(long, default_value = "0")]
    gamma: String,
    #[arg(long, default_value = "0")]
    m: String,
    #[arg(long, default_value = "0")]
    c: String,
    #[arg(long, default_value = "0")]
    nu: String,
    /// Family parameters (family mode only)
    #[arg(long, default_value = "1")]
    alpha: String,
    #[arg(long, default_value = "2")]
    eta1: String,
    #[arg(long, default_value = "0")]
    eta2: String,
    #[arg(long, default_value = "2")]
    ell: String,
    /// Coupling grid
    #[arg(long)]
    lambda: String,
    /// Distortion fraction grid
    #[arg(long)]
    theta: String,
    /// Target error probability grid
    #[arg(long, default_value = "0")]
    delta: String,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Restrict to checks whose name contains this substring
    #[arg(long)]
    lemma: Option<String>,
    /// Structural size override for the clique/group checks
    #[arg(long)]
    m: Option<usize>,
    /// Coupling override (replaces the default grids)
    #[arg(long)]
    lambda: Option<f64>,
    /// Seed for the randomized-graph checks
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Ensemble family: ens1, ens1a, ens2, ens3, ens4, cp_single_edge,
    /// cp_clique_minus_edge, cp_disjoint_paths
    #[arg(long)]
    ensemble: String,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    alpha: usize,
    #[arg(long, default_value_t = 0)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    mprime: usize,
    #[arg(long, default_value_t = 0)]
    eta: usize,
    #[arg(long, default_value_t = 0)]
    eta1: usize,
    #[arg(long, default_value_t = 0)]
    eta2: usize,
    #[arg(long, default_value_t = 2)]
    ell: usize,
    /// Distortion budget for the approximate criterion
    #[arg(long, default_value_t = 0)]
    qmax: usize,
    /// Coupling grid
    #[arg(long)]
    lambda: String,
    /// Sample-size grid
    #[arg(long)]
    n: String,
    #[arg(long, default_value_t = 5000)]
    trials: usize,
    /// Decoder: ml, agreement, blockwise, approx-ml
    #[arg(long, default_value = "ml")]
    decoder: String,
    /// Recovery criterion: exact or approximate (default: approximate
    /// when --qmax > 0)
    #[arg(long)]
    criterion: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Emit measured runtimes in the CSV (breaks byte-reproducibility)
    #[arg(long, default_value_t = false)]
    timing: bool,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Experiment preset: fig3, fig4, fig5
    #[arg(long)]
    figure: String,
    #[arg(long)]
    lambda: String,
    #[arg(long)]
    n: String,
    #[arg(long, default_value_t = 5000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = false)]
    timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_workers();
    let result = match cli.cmd {
        Cmd::Bound(args) => cmd_bound(args),
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Reproduce(args) => cmd_reproduce(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::ResourceCap(_) => EXIT_RESOURCE,
                _ => EXIT_FLAG,
            };
            ExitCode::from(code)
        }
    }
}

/// Worker count from the WORKERS env var (default: logical CPUs).
fn init_workers() {
    if let Ok(raw) = std::env::var("WORKERS") {
        if let Ok(w) = raw.parse::<usize>() {
            if w >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(w)
                    .build_global();
            }
        }
    }
}

fn write_output(path: Option<&PathBuf>, contents: &str) -> Result<(), Error> {
    match path {
        Some(p) => harness::write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

const BOUND_HEADER: &str = "id,params,term1_name,term1_value,term1_asymptotic,\
term2_name,term2_value,term2_asymptotic,n_required,dominant_term,vacuous";

fn bound_row(id: &str, params: &str, report: &BoundReport) -> String {
    let t1 = &report.terms[0];
    let t2 = &report.terms[1];
    format!(
        "{id},{params},{},{},{},{},{},{},{},{},{}",
        t1.name,
        t1.value,
        t1.asymptotic,
        t2.name,
        t2.value,
        t2.asymptotic,
        report.n_required,
        report.dominant_term,
        report.vacuous
    )
}

/// Odometer over a list of named grids, yielding one index vector per point.
fn cartesian(grids: &[(&str, Vec<f64>)], mut visit: impl FnMut(&[f64]) -> Result<(), Error>) -> Result<(), Error> {
    let sizes: Vec<usize> = grids.iter().map(|(_, v)| v.len()).collect();
    let mut idx = vec![0usize; grids.len()];
    let mut point = vec![0.0; grids.len()];
    loop {
        for (slot, (&i, (_, vals))) in idx.iter().zip(grids).enumerate() {
            point[slot] = vals[i];
        }
        visit(&point)?;
        // Advance the odometer, least-significant slot last.
        let mut slot = grids.len();
        loop {
            if slot == 0 {
                return Ok(());
            }
            slot -= 1;
            idx[slot] += 1;
            if idx[slot] < sizes[slot] {
                break;
            }
            idx[slot] = 0;
        }
    }
}

fn cmd_bound(args: BoundArgs) -> Result<ExitCode, Error> {
    let mut rows = Vec::new();
    let echo = bound_echo(&args);

    if let Some(theorem) = &args.theorem {
        let id = TheoremId::parse(theorem)?;
        let grids: Vec<(&str, Vec<f64>)> = vec![
            ("p", parse_f64_grid(&args.p)?),
            ("k", parse_f64_grid(&args.k)?),
            ("c", parse_f64_grid(&args.c)?),
            ("nu", parse_f64_grid(&args.nu)?),
            ("d", parse_f64_grid(&args.d)?),
            ("dprime", parse_f64_grid(&args.dprime)?),
            ("eta", parse_f64_grid(&args.eta)?),
            ("gamma", parse_f64_grid(&args.gamma)?),
            ("m", parse_f64_grid(&args.m)?),
            ("lambda", parse_f64_grid(&args.lambda)?),
            ("theta", parse_f64_grid(&args.theta)?),
            ("delta", parse_f64_grid(&args.delta)?),
        ];
        cartesian(&grids, |v| {
            let q = BoundQuery {
                p: v[0] as usize,
                k: v[1] as usize,
                c: v[2],
                nu: v[3],
                d: v[4] as usize,
                d_prime: v[5] as usize,
                eta: v[6] as usize,
                gamma: v[7] as usize,
                m: v[8] as usize,
                lambda: v[9],
                theta: v[10],
                delta: v[11],
                q_max: 0,
            };
            let report = bounds::theorem_bound(id, &q)?;
            // k and q_max come from the echo: T2 derives k from (c, nu).
            let params = format!(
                "p={} k={} c={} nu={} d={} dprime={} eta={} gamma={} m={} lambda={} theta={} delta={} qmax={}",
                q.p, report.inputs_echo.k, q.c, q.nu, q.d, q.d_prime, q.eta, q.gamma, q.m,
                q.lambda, q.theta, q.delta, report.inputs_echo.q_max
            );
            rows.push(bound_row(id.name(), &params, &report));
            Ok(())
        })?;
    } else if let Some(family) = &args.family {
        let grids: Vec<(&str, Vec<f64>)> = vec![
            ("p", parse_f64_grid(&args.p)?),
            ("alpha", parse_f64_grid(&args.alpha)?),
            ("m", parse_f64_grid(&args.m)?),
            ("eta1", parse_f64_grid(&args.eta1)?),
            ("eta2", parse_f64_grid(&args.eta2)?),
            ("ell", parse_f64_grid(&args.ell)?),
            ("lambda", parse_f64_grid(&args.lambda)?),
            ("theta", parse_f64_grid(&args.theta)?),
            ("delta", parse_f64_grid(&args.delta)?),
        ];
        cartesian(&grids, |v| {
            let e = build_ensemble(
                family,
                v[0] as usize,
                v[1] as usize,
                v[2] as usize,
                0,
                0,
                v[3] as usize,
                v[4] as usize,
                v[5] as usize,
                v[6],
            )?;
            let (theta, delta) = (v[7], v[8]);
            let report = bounds::ensemble_condition(&e, theta, delta)?;
            let params = format!(
                "{} theta={theta} delta={delta} qmax={}",
                e.descriptor(),
                report.inputs_echo.q_max
            );
            rows.push(bound_row(family, &params, &report));
            Ok(())
        })?;
    } else {
        return Err(Error::Parse(
            "bound requires either --theorem or --family".into(),
        ));
    }

    let mut out = String::new();
    out.push_str(&format!("# {echo}\n"));
    out.push_str(BOUND_HEADER);
    out.push('\n');
    for r in &rows {
        out.push_str(r);
        out.push('\n');
    }
    write_output(args.out.as_ref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn bound_echo(args: &BoundArgs) -> String {
    let mut s = String::from("ising-select bound");
    if let Some(t) = &args.theorem {
        s.push_str(&format!(" --theorem {t}"));
    }
    if let Some(f) = &args.family {
        s.push_str(&format!(" --family {f}"));
    }
    s.push_str(&format!(
        " --p {} --k {} --d {} --dprime {} --eta {} --gamma {} --m {} --c {} --nu {} \
--alpha {} --eta1 {} --eta2 {} --ell {} --lambda {} --theta {} --delta {}",
        args.p, args.k, args.d, args.dprime, args.eta, args.gamma, args.m, args.c,
        args.nu, args.alpha, args.eta1, args.eta2, args.ell, args.lambda, args.theta,
        args.delta
    ));
    s
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, Error> {
    let opts = VerifyOptions {
        filter: args.lemma,
        m: args.m,
        lambda: args.lambda,
        seed: args.seed,
    };
    let reports = run_verification(&opts)?;
    if reports.is_empty() {
        eprintln!("error: no checks match the filter");
        return Ok(ExitCode::from(EXIT_FLAG));
    }
    let mut all_ok = true;
    for r in &reports {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        println!(
            "{status} {name:<34} max_violation={v:>12.3e} cases={c}",
            name = r.name,
            v = r.max_violation,
            c = r.cases
        );
        all_ok &= r.passed();
    }
    if all_ok {
        println!("verify: all {} checks passed", reports.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("verify: FAILURES present");
        Ok(ExitCode::from(EXIT_VERIFY))
    }
}

#[allow(clippy::too_many_arguments)]
fn build_ensemble(
    family: &str,
    p: usize,
    alpha: usize,
    m: usize,
    mprime: usize,
    eta: usize,
    eta1: usize,
    eta2: usize,
    ell: usize,
    lambda: f64,
) -> Result<GraphEnsemble, Error> {
    use ising_select::ensembles::*;
    match family {
        "ens1" => ensemble1(p, alpha, lambda),
        "ens1a" => ensemble1a(p, alpha, lambda),
        "ens2" => ensemble2(p, m, alpha, lambda),
        "ens3" => ensemble3(p, m, alpha, lambda),
        "ens4" => ensemble4(p, eta1, eta2, m, ell, alpha, lambda),
        "cp_single_edge" => counterpart_single_edge(p, lambda),
        "cp_clique_minus_edge" => counterpart_clique_minus_edge(p, mprime, lambda),
        "cp_disjoint_paths" => counterpart_disjoint_paths(p, alpha, eta, lambda),
        other => Err(Error::Parse(format!("unknown ensemble family {other:?}"))),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, Error> {
    let lambdas = parse_f64_grid(&args.lambda)?;
    let ns = parse_usize_grid(&args.n)?;
    let decoder = DecoderKind::parse(&args.decoder)?;
    let criterion = match &args.criterion {
        Some(c) => Criterion::parse(c)?,
        None => {
            if args.qmax > 0 {
                Criterion::Approximate
            } else {
                Criterion::Exact
            }
        }
    };
    if args.trials < 1 {
        return Err(Error::constraint("--trials must be at least 1"));
    }
    // Any valid coupling works for the template; sweep rebuilds per lambda.
    let base = build_ensemble(
        &args.ensemble,
        args.p,
        args.alpha,
        args.m,
        args.mprime,
        args.eta,
        args.eta1,
        args.eta2,
        args.ell,
        lambdas[0],
    )?;
    let cfg = SweepConfig {
        lambdas,
        ns,
        trials: args.trials,
        q_max: args.qmax,
        criterion,
        decoder,
        base_seed: args.seed,
    };
    let rows = harness::sweep(&base, &cfg)?;
    let echo = format!(
        "ising-select simulate --ensemble {} --p {} --alpha {} --m {} --mprime {} \
--eta {} --eta1 {} --eta2 {} --ell {} --qmax {} --lambda {} --n {} --trials {} \
--decoder {} --criterion {} --seed {}",
        args.ensemble,
        args.p,
        args.alpha,
        args.m,
        args.mprime,
        args.eta,
        args.eta1,
        args.eta2,
        args.ell,
        args.qmax,
        args.lambda,
        args.n,
        args.trials,
        decoder.name(),
        criterion.name(),
        args.seed
    );
    let contents = harness::render_csv(&echo, &rows, args.timing);
    harness::write_atomic(&args.out, &contents)?;
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<ExitCode, Error> {
    let fig = FigureId::parse(&args.figure)?;
    let lambdas = parse_f64_grid(&args.lambda)?;
    let ns = parse_usize_grid(&args.n)?;
    if args.trials < 1 {
        return Err(Error::constraint("--trials must be at least 1"));
    }
    let rows = harness::reproduce_figure(fig, &lambdas, &ns, args.trials, args.seed)?;
    let echo = format!(
        "ising-select reproduce --figure {} --lambda {} --n {} --trials {} --seed {}",
        fig.name(),
        args.lambda,
        args.n,
        args.trials,
        args.seed
    );
    let contents = harness::render_csv(&echo, &rows, args.timing);
    harness::write_atomic(&args.out, &contents)?;
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}
