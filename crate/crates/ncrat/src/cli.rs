//! Command line front end: regularity, stable boundedness, positivity and
//! the building blocks (parsing, evaluation, realizations, pencil
//! classification), with human-readable and JSON reports.
//!
//! Exit codes: 0 definite verdict, 2 input error, 3 no scalar center found,
//! 4 inconclusive. Identical seeds and flags produce byte-identical JSON.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::ellipticity::{
    classify, epsilon_bound, verify_certificate, ClassifyOptions, EllipticityCertificate, Verdict,
};
use crate::jsonio;
use crate::linalg::{self, Field, Matrix};
use crate::ncexpr::{
    eval_mp, eval_strict, find_scalar_center, format_expr, max_var_index, parse, EvalOptions,
    Outcome, RationalExpr,
};
use crate::pencil::{
    full_rank_sample, point_from_json, point_to_json, FullRankOptions, FullRankReport,
    LinearPencil,
};
use crate::positivity::{
    mp_counterexample, positively_elliptic_realization, sohs_decompose, strictly_positive,
    SohsOptions, StrictVerdict,
};
use crate::realization::{build, minimize, Realization};
use crate::sdp::LmiOptions;
use crate::{Error, Result};

const EXIT_OK: i32 = 0;
const EXIT_INPUT: i32 = 2;
const EXIT_NO_CENTER: i32 = 3;
const EXIT_INCONCLUSIVE: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "ncrat",
    about = "Regularity, stable boundedness and global positivity of noncommutative rational functions"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scalar field: r (real) or c (complex)
    #[arg(long, global = true, default_value = "r")]
    field: String,

    /// Numerical tolerance for verdicts (0 < tol <= 1e-2)
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol: f64,

    /// Seed for all randomized sub-procedures
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Word-length degree override for the sum-of-squares search
    #[arg(long, global = true)]
    degree: Option<usize>,

    /// Largest matrix size used by sampling cross-checks
    #[arg(long, global = true, default_value_t = 6)]
    max_size: usize,

    /// Emit the report as JSON on stdout
    #[arg(long, global = true)]
    json: bool,

    /// Worker threads for sampling cross-checks
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Write the certificate/artifact JSON to this path
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse an expression and print its normalized form
    Parse { expr: String },
    /// Evaluate an expression at a point (strictly, or --mp for Moore-Penrose)
    Eval {
        expr: String,
        point: PathBuf,
        #[arg(long)]
        mp: bool,
    },
    /// Build a linear systems realization
    Realize { expr: String },
    /// Minimize a realization (expression, or path to realization JSON)
    Minimize { input: String },
    /// Classify a pencil JSON file as stably elliptic / elliptic / not elliptic
    ClassifyPencil { pencil: PathBuf },
    /// Decide whether the expression is defined at every self-adjoint tuple
    Regular { expr: String },
    /// Decide stable boundedness
    StablyBounded { expr: String },
    /// Search for a sum-of-hermitian-squares certificate
    Sohs { expr: String },
    /// Decide strict positivity of a regular expression
    StrictlyPositive { expr: String },
    /// Extract a singular-point witness for a pencil JSON file
    Witness { pencil: PathBuf },
}

/// Run configuration shared by the commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub field: Field,
    pub tol: f64,
    pub seed: u64,
    pub degree: Option<usize>,
    pub max_size: usize,
    pub json: bool,
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub center_attempts: usize,
}

impl RunConfig {
    fn from_cli(cli: &Cli) -> Result<RunConfig> {
        if !(cli.tol > 0.0 && cli.tol <= 1e-2) {
            return Err(Error::Precondition(format!(
                "tolerance {} outside (0, 1e-2]",
                cli.tol
            )));
        }
        Ok(RunConfig {
            field: Field::from_str_tag(&cli.field)?,
            tol: cli.tol,
            seed: cli.seed,
            degree: cli.degree,
            max_size: cli.max_size.clamp(1, 12),
            json: cli.json,
            threads: cli.threads.max(1),
            out: cli.out.clone(),
            center_attempts: 200,
        })
    }

    fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions {
            tol: self.tol,
            lmi: LmiOptions::default(),
            ..ClassifyOptions::default()
        }
    }

    fn sohs_options(&self) -> SohsOptions {
        let mut opts = SohsOptions::default();
        opts.seed = self.seed;
        opts.basis.seed = self.seed ^ 0x5eed;
        opts.residual_sizes = (1..=self.max_size).collect();
        opts
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse { .. }
        | Error::VarOutOfRange { .. }
        | Error::Json(_)
        | Error::Io(_)
        | Error::DimensionMismatch(_)
        | Error::FieldMismatch(_) => EXIT_INPUT,
        Error::NoCenter { .. } => EXIT_NO_CENTER,
        _ => EXIT_INCONCLUSIVE,
    }
}

/// Entry point used by the `ncrat` binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let config = RunConfig::from_cli(cli)?;
    match &cli.command {
        Command::Parse { expr } => cmd_parse(expr, &config),
        Command::Eval { expr, point, mp } => cmd_eval(expr, point, *mp, &config),
        Command::Realize { expr } => cmd_realize(expr, &config),
        Command::Minimize { input } => cmd_minimize(input, &config),
        Command::ClassifyPencil { pencil } => cmd_classify_pencil(pencil, &config),
        Command::Regular { expr } => cmd_regular(expr, &config),
        Command::StablyBounded { expr } => cmd_stably_bounded(expr, &config),
        Command::Sohs { expr } => cmd_sohs(expr, &config),
        Command::StrictlyPositive { expr } => cmd_strictly_positive(expr, &config),
        Command::Witness { pencil } => cmd_witness(pencil, &config),
    }
}

fn parse_input(text: &str, config: &RunConfig) -> Result<RationalExpr> {
    // the variable count is inferred from the highest index used
    let probe = parse(text, usize::MAX >> 1, config.field)?;
    let g = max_var_index(&probe.root).max(1);
    RationalExpr::new(probe.root, g, config.field)
}

fn emit(report: Value, human: &[String], config: &RunConfig) {
    if config.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    } else {
        for line in human {
            println!("{line}");
        }
    }
}

fn write_out(artifact: &Value, config: &RunConfig) -> Result<()> {
    if let Some(path) = &config.out {
        std::fs::write(path, serde_json::to_string_pretty(artifact).expect("json"))?;
    }
    Ok(())
}

fn load_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Json(e.to_string()))
}

fn cmd_parse(expr: &str, config: &RunConfig) -> Result<i32> {
    let e = parse_input(expr, config)?;
    let q = e.subexpressions();
    let report = json!({
        "command": "parse",
        "input": expr,
        "normalized": e.format(),
        "nvars": e.nvars,
        "tau": e.tau(),
        "subexpressions": q.subexpression_count,
        "star_closure_size": q.len(),
    });
    emit(
        report.clone(),
        &[
            format!("normalized: {}", e.format()),
            format!("variables:  {}", e.nvars),
            format!("tau:        {}", e.tau()),
            format!(
                "sub-expressions: {} ({} with star closure)",
                q.subexpression_count,
                q.len()
            ),
        ],
        config,
    );
    write_out(&report, config)?;
    Ok(EXIT_OK)
}

fn matrix_report(m: &Matrix) -> Value {
    json!({
        "rows": m.rows(),
        "cols": m.cols(),
        "field": m.field().as_str(),
        "entries": jsonio::matrix_to_value(m),
    })
}

fn cmd_eval(expr: &str, point_path: &Path, mp: bool, config: &RunConfig) -> Result<i32> {
    let e = parse_input(expr, config)?;
    let point = point_from_json(&load_json(point_path)?)?;
    let opts = EvalOptions::default();
    if mp {
        let value = eval_mp(&e, &point, &opts)?;
        let report = json!({
            "command": "eval",
            "mode": "moore-penrose",
            "expression": e.format(),
            "value": matrix_report(&value),
        });
        emit(report.clone(), &[format_matrix_human(&value)], config);
        write_out(&report, config)?;
        return Ok(EXIT_OK);
    }
    match eval_strict(&e, &point, &opts)? {
        Outcome::Defined(value) => {
            let report = json!({
                "command": "eval",
                "mode": "strict",
                "expression": e.format(),
                "value": matrix_report(&value),
            });
            emit(report.clone(), &[format_matrix_human(&value)], config);
            write_out(&report, config)?;
            Ok(EXIT_OK)
        }
        Outcome::Undefined(at) => {
            let report = json!({
                "command": "eval",
                "mode": "strict",
                "expression": e.format(),
                "undefined_at": format_expr(&at),
            });
            emit(
                report.clone(),
                &[format!("undefined at {}", format_expr(&at))],
                config,
            );
            write_out(&report, config)?;
            Ok(EXIT_OK)
        }
    }
}

fn format_matrix_human(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols())
            .map(|j| {
                let z = m.get(i, j);
                if m.field() == Field::Real {
                    format!("{:+.6e}", z.re)
                } else {
                    format!("{:+.6e}{:+.6e}i", z.re, z.im)
                }
            })
            .collect();
        out.push_str(&row.join("  "));
        if i + 1 < m.rows() {
            out.push('\n');
        }
    }
    out
}

fn centered(e: &RationalExpr, config: &RunConfig) -> Result<Vec<f64>> {
    find_scalar_center(e, config.center_attempts, config.seed)
}

fn cmd_realize(expr: &str, config: &RunConfig) -> Result<i32> {
    let e = parse_input(expr, config)?;
    let center = centered(&e, config)?;
    let real = build(&e, &center)?;
    let artifact = real.to_json();
    let report = json!({
        "command": "realize",
        "expression": e.format(),
        "center": center,
        "size": real.size(),
        "realization": artifact,
    });
    emit(
        report.clone(),
        &[format!("realization size {} at center {:?}", real.size(), center)],
        config,
    );
    write_out(&artifact, config)?;
    Ok(EXIT_OK)
}

fn cmd_minimize(input: &str, config: &RunConfig) -> Result<i32> {
    let (original, source) = if Path::new(input).exists() {
        (
            Realization::from_json(&load_json(Path::new(input))?)?,
            input.to_string(),
        )
    } else {
        let e = parse_input(input, config)?;
        let center = centered(&e, config)?;
        (build(&e, &center)?, e.format())
    };
    let minimal = minimize(&original)?;
    let artifact = minimal.to_json();
    let report = json!({
        "command": "minimize",
        "input": source,
        "size_before": original.size(),
        "size_after": minimal.size(),
        "realization": artifact,
    });
    emit(
        report.clone(),
        &[format!(
            "minimized from size {} to {}",
            original.size(),
            minimal.size()
        )],
        config,
    );
    write_out(&artifact, config)?;
    Ok(EXIT_OK)
}

fn sampling_report(report: &FullRankReport) -> Value {
    json!({
        "samples": report.samples,
        "min_sigma": report.min_sigma,
        "min_sigma_normalized": report.min_sigma_normalized,
    })
}

/// Sampling cross-check split across worker threads by seed.
fn parallel_full_rank(
    pencil: &LinearPencil,
    config: &RunConfig,
) -> FullRankReport {
    let base = FullRankOptions {
        sizes: (1..=config.max_size).collect(),
        trials_per_size: 50,
        selfadjoint: true,
        seed: config.seed,
    };
    if config.threads <= 1 {
        return full_rank_sample(pencil, &base);
    }
    let chunk = (base.trials_per_size + config.threads - 1) / config.threads;
    let mut reports = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for t in 0..config.threads {
            let mut opts = base.clone();
            opts.trials_per_size = chunk;
            opts.seed = base.seed.wrapping_add(t as u64 * 0x9e37);
            let pencil_ref = &*pencil;
            handles.push(scope.spawn(move || full_rank_sample(pencil_ref, &opts)));
        }
        for h in handles {
            reports.push(h.join().expect("sampling thread"));
        }
    });
    let mut merged = FullRankReport {
        min_sigma: f64::INFINITY,
        min_sigma_normalized: f64::INFINITY,
        worst_point: None,
        samples: 0,
    };
    for r in reports {
        merged.samples += r.samples;
        if r.min_sigma < merged.min_sigma {
            merged.min_sigma = r.min_sigma;
            merged.worst_point = r.worst_point;
        }
        merged.min_sigma_normalized = merged.min_sigma_normalized.min(r.min_sigma_normalized);
    }
    merged
}

struct Pipeline {
    expr: RationalExpr,
    center: Vec<f64>,
    minimal: Realization,
    certificate: EllipticityCertificate,
}

/// parse → center → build → minimize → classify, with the emitted
/// certificate verified before anything is printed.
fn regularity_pipeline(expr: &str, config: &RunConfig) -> Result<Pipeline> {
    let e = parse_input(expr, config)?;
    let center = centered(&e, config)?;
    let minimal = minimize(&build(&e, &center)?)?;
    let certificate = classify(minimal.pencil(), &config.classify_options());
    if certificate.verdict != Verdict::Inconclusive {
        let check = verify_certificate(minimal.pencil(), &certificate, config.tol);
        if !check.ok {
            return Err(Error::NumericalFailure(format!(
                "certificate failed verification: {}",
                check.reason.unwrap_or_default()
            )));
        }
    }
    Ok(Pipeline {
        expr: e,
        center,
        minimal,
        certificate,
    })
}

fn cmd_regular(expr: &str, config: &RunConfig) -> Result<i32> {
    let p = regularity_pipeline(expr, config)?;
    let cert = &p.certificate;
    let (answer, code) = match cert.verdict {
        Verdict::StablyElliptic | Verdict::Elliptic => ("yes", EXIT_OK),
        Verdict::NotElliptic => ("no", EXIT_OK),
        Verdict::Inconclusive => ("inconclusive", EXIT_INCONCLUSIVE),
    };
    // a witness must lie outside the strict domain of the expression
    let witness_outside = cert.witness.as_ref().map(|w| {
        matches!(
            eval_strict(&p.expr, w, &EvalOptions::default()),
            Ok(Outcome::Undefined(_))
        )
    });
    let report = json!({
        "command": "regular",
        "expression": p.expr.format(),
        "nvars": p.expr.nvars,
        "center": p.center,
        "minimal_size": p.minimal.size(),
        "verdict": cert.verdict.as_str(),
        "regular": answer,
        "certificate": cert.to_json(),
        "witness_outside_domain": witness_outside,
        "seed": config.seed,
        "tol": config.tol,
    });
    let mut human = vec![
        format!("minimal realization size: {}", p.minimal.size()),
        format!("pencil classification:    {}", cert.verdict.as_str()),
        match cert.verdict {
            Verdict::StablyElliptic => "regular: yes (stably elliptic)".to_string(),
            Verdict::Elliptic => "regular: yes (elliptic, not stably)".to_string(),
            Verdict::NotElliptic => "regular: no".to_string(),
            Verdict::Inconclusive => format!(
                "regular: inconclusive ({})",
                cert.failure.clone().unwrap_or_default()
            ),
        },
    ];
    if let Some(outside) = witness_outside {
        human.push(format!(
            "singular witness {} the strict domain",
            if outside { "lies outside" } else { "was not excluded by" }
        ));
    }
    emit(report, &human, config);
    write_out(&cert.to_json(), config)?;
    Ok(code)
}

fn cmd_stably_bounded(expr: &str, config: &RunConfig) -> Result<i32> {
    let p = regularity_pipeline(expr, config)?;
    let cert = &p.certificate;
    let (verdict_line, code, bound) = match cert.verdict {
        Verdict::StablyElliptic => {
            let eps = cert
                .epsilon
                .or_else(|| epsilon_bound(&cert.chain[0].d_matrix, p.minimal.pencil()).ok())
                .unwrap_or(0.0);
            let eta = eps.sqrt();
            let coeff_sum: f64 = (1..=p.minimal.g())
                .map(|j| p.minimal.pencil().coeff(j).op_norm())
                .sum();
            let im_radius = if coeff_sum > 0.0 {
                0.5 * eta / coeff_sum
            } else {
                f64::INFINITY
            };
            let norm_bound =
                p.minimal.c().op_norm() * p.minimal.b().op_norm() * 2.0 / eta.max(1e-300);
            (
                "stably bounded: yes".to_string(),
                EXIT_OK,
                Some(json!({
                    "epsilon": eps,
                    "eta": eta,
                    "imaginary_radius": im_radius,
                    "norm_bound": norm_bound,
                })),
            )
        }
        Verdict::Elliptic => (
            "stably bounded: no (regular but unbounded on an imaginary neighborhood)".to_string(),
            EXIT_OK,
            None,
        ),
        Verdict::NotElliptic => (
            "stably bounded: no (not even regular)".to_string(),
            EXIT_OK,
            None,
        ),
        Verdict::Inconclusive => ("stably bounded: inconclusive".to_string(), EXIT_INCONCLUSIVE, None),
    };
    let report = json!({
        "command": "stably-bounded",
        "expression": p.expr.format(),
        "minimal_size": p.minimal.size(),
        "verdict": cert.verdict.as_str(),
        "bound": bound,
        "certificate": cert.to_json(),
        "seed": config.seed,
        "tol": config.tol,
    });
    let mut human = vec![
        format!("minimal realization size: {}", p.minimal.size()),
        format!("pencil classification:    {}", cert.verdict.as_str()),
        verdict_line,
    ];
    if let Some(b) = &report["bound"].as_object() {
        if let Some(eps) = b.get("epsilon").and_then(Value::as_f64) {
            human.push(format!("epsilon (L*L ⪰ εI):      {eps:.6e}"));
        }
        if let Some(nb) = b.get("norm_bound").and_then(Value::as_f64) {
            human.push(format!("norm bound:               {nb:.6e}"));
        }
    }
    emit(report, &human, config);
    write_out(&cert.to_json(), config)?;
    Ok(code)
}

fn cmd_classify_pencil(path: &Path, config: &RunConfig) -> Result<i32> {
    let pencil = LinearPencil::from_json(&load_json(path)?)?;
    let cert = classify(&pencil, &config.classify_options());
    if cert.verdict != Verdict::Inconclusive {
        let check = verify_certificate(&pencil, &cert, config.tol);
        if !check.ok {
            return Err(Error::NumericalFailure(format!(
                "certificate failed verification: {}",
                check.reason.unwrap_or_default()
            )));
        }
    }
    let sampling = parallel_full_rank(&pencil, config);
    let report = json!({
        "command": "classify-pencil",
        "pencil": { "d": pencil.d(), "e": pencil.e(), "g": pencil.g(), "field": pencil.field().as_str() },
        "verdict": cert.verdict.as_str(),
        "chain_length": cert.chain.len(),
        "epsilon": cert.epsilon,
        "witness": cert.witness.as_ref().map(point_to_json),
        "sampling": sampling_report(&sampling),
        "certificate": cert.to_json(),
        "seed": config.seed,
        "tol": config.tol,
    });
    let human = vec![
        format!(
            "pencil {}x{} in {} variables over {}",
            pencil.d(),
            pencil.e(),
            pencil.g(),
            pencil.field().as_str()
        ),
        format!("verdict: {} (chain length {})", cert.verdict.as_str(), cert.chain.len()),
        format!(
            "sampling cross-check: min σ = {:.3e} over {} samples",
            sampling.min_sigma, sampling.samples
        ),
    ];
    emit(report, &human, config);
    write_out(&cert.to_json(), config)?;
    Ok(if cert.verdict == Verdict::Inconclusive {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    })
}

fn cmd_sohs(expr: &str, config: &RunConfig) -> Result<i32> {
    let e = parse_input(expr, config)?;
    let center = centered(&e, config)?;
    let tau = e.tau();
    let degree = config
        .degree
        .unwrap_or_else(|| (2 * tau + 1).min(64) as usize);
    let opts = config.sohs_options();
    if let Some(cert) = sohs_decompose(&e, degree, &opts)? {
        let realization = positively_elliptic_realization(&cert, &e, &center)?;
        let real_cert = classify(realization.pencil(), &config.classify_options());
        let cert_json = json!({
            "k": cert.achieved_k,
            "requested_degree": degree,
            "basis": cert.basis.elements.iter().map(format_expr).collect::<Vec<_>>(),
            "G": matrix_report(&cert.gram),
            "squares": cert.squares.iter().map(format_expr).collect::<Vec<_>>(),
            "plan": {
                "kappa": cert.plan.kappa,
                "tau": cert.plan.tau,
                "degree": cert.plan.degree,
                "dim_v": cert.plan.dim_v,
                "paper_bound": cert.plan.paper_bound,
                "actual_sizes": cert.plan.actual_sizes,
                "samples_per_size": cert.plan.samples_per_size,
            },
            "residual": {
                "max": cert.residual.max_relative,
                "mean": cert.residual.mean_relative,
                "sizes": cert.residual.sizes,
            },
        });
        let report = json!({
            "command": "sohs",
            "expression": e.format(),
            "sohs": "yes",
            "squares": cert.squares.len(),
            "certificate": cert_json,
            "positively_elliptic_size": realization.size(),
            "realization_verdict": real_cert.verdict.as_str(),
            "seed": config.seed,
        });
        emit(
            report,
            &[
                format!("sum of hermitian squares: yes ({} squares, basis dim {}, k = {})",
                    cert.squares.len(), cert.basis.dim(), cert.achieved_k),
                format!("max relative residual:    {:.3e}", cert.residual.max_relative),
                format!(
                    "positively elliptic realization: size {} ({})",
                    realization.size(),
                    real_cert.verdict.as_str()
                ),
            ],
            config,
        );
        write_out(&cert_json, config)?;
        return Ok(EXIT_OK);
    }
    // no certificate: try to exhibit a Moore-Penrose counterexample
    if let Some(point) = mp_counterexample(&e, degree.min(4), config.tol, &opts)? {
        let value = eval_mp(&e, &point, &EvalOptions::default())?;
        let herm = value.hermitian_part();
        let eigs = linalg::hermitian_eig(&herm)?.eigenvalues;
        let report = json!({
            "command": "sohs",
            "expression": e.format(),
            "sohs": "no",
            "counterexample": point_to_json(&point),
            "mp_spectrum": eigs,
            "seed": config.seed,
        });
        emit(
            report.clone(),
            &[
                "sum of hermitian squares: no".to_string(),
                format!("counterexample of size {} found; spectrum {:?}", point.size(), eigs),
            ],
            config,
        );
        write_out(&point_to_json(&point), config)?;
        return Ok(EXIT_OK);
    }
    let report = json!({
        "command": "sohs",
        "expression": e.format(),
        "sohs": "inconclusive",
        "requested_degree": degree,
        "seed": config.seed,
    });
    emit(
        report,
        &[format!(
            "no certificate up to degree {degree} and no verified counterexample"
        )],
        config,
    );
    Ok(EXIT_INCONCLUSIVE)
}

fn cmd_strictly_positive(expr: &str, config: &RunConfig) -> Result<i32> {
    let e = parse_input(expr, config)?;
    let verdict = strictly_positive(&e, &config.classify_options())?;
    let (text, code) = match &verdict {
        StrictVerdict::StrictlyPositive => ("yes".to_string(), EXIT_OK),
        StrictVerdict::NotStrictlyPositive(why) => (format!("no ({why})"), EXIT_OK),
        StrictVerdict::Inconclusive(why) => (format!("inconclusive ({why})"), EXIT_INCONCLUSIVE),
    };
    let report = json!({
        "command": "strictly-positive",
        "expression": e.format(),
        "strictly_positive": match verdict {
            StrictVerdict::StrictlyPositive => "yes",
            StrictVerdict::NotStrictlyPositive(_) => "no",
            StrictVerdict::Inconclusive(_) => "inconclusive",
        },
        "detail": text.clone(),
        "seed": config.seed,
    });
    emit(report, &[format!("strictly positive: {text}")], config);
    Ok(code)
}

fn cmd_witness(path: &Path, config: &RunConfig) -> Result<i32> {
    let pencil = LinearPencil::from_json(&load_json(path)?)?;
    let cert = classify(&pencil, &config.classify_options());
    match (&cert.verdict, &cert.witness) {
        (Verdict::NotElliptic, Some(point)) => {
            let value = pencil.eval(point)?;
            let sigma = linalg::min_singular_value(&value);
            let artifact = point_to_json(point);
            let report = json!({
                "command": "witness",
                "verdict": cert.verdict.as_str(),
                "witness": artifact,
                "sigma_min": sigma,
            });
            emit(
                report,
                &[format!(
                    "witness of size {} with min σ(L(X)) = {sigma:.3e}",
                    point.size()
                )],
                config,
            );
            write_out(&artifact, config)?;
            Ok(EXIT_OK)
        }
        (Verdict::NotElliptic, None) => {
            emit(
                json!({ "command": "witness", "verdict": cert.verdict.as_str(), "witness": null }),
                &["pencil is not elliptic, but witness extraction failed".to_string()],
                config,
            );
            Ok(EXIT_INCONCLUSIVE)
        }
        _ => {
            emit(
                json!({ "command": "witness", "verdict": cert.verdict.as_str(), "witness": null }),
                &[format!(
                    "no witness: pencil classified {}",
                    cert.verdict.as_str()
                )],
                config,
            );
            Ok(if cert.verdict == Verdict::Inconclusive {
                EXIT_INCONCLUSIVE
            } else {
                EXIT_OK
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_bad_tolerance() {
        let cli = Cli::parse_from(["ncrat", "--tol", "0.5", "parse", "x1"]);
        assert!(RunConfig::from_cli(&cli).is_err());
    }

    #[test]
    fn infers_variable_count() {
        let cli = Cli::parse_from(["ncrat", "parse", "x1"]);
        let config = RunConfig::from_cli(&cli).unwrap();
        let e = parse_input("x2 * x7", &config).unwrap();
        assert_eq!(e.nvars, 7);
    }
}
