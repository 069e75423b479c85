use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use lpsym_core::actions::{
    o_matrix, resolve, sl_decompose, GroupAction, Lemma, Matrix, ShearQForm,
};
use lpsym_core::classify::{
    classify, expected_dimension, scan, SpecialCase, DEFAULT_ANSATZ_DEGREE,
};
use lpsym_core::exact::{fmt_rat, parse_rat, Rat};
use lpsym_core::geometry::{EllipsoidField, SharedField, DEFAULT_RADIUS};
use lpsym_core::verify::{
    adjudicate_shear_q, certify_action, certify_lemma, certify_resolution, default_eps, form_name,
    listed_symmetry, non_round_solution, ResidualReport, SamplePlan, Verdict,
};

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(
    name = "lpsym",
    version,
    about = "Lie symmetries of the projected L_p-Minkowski equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Record wall-clock time in the report.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Expect {
    Confirmed,
    Refuted,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Body {
    Round,
    NonRound,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LemmaId {
    Rotation,
    Scaling,
    Translation,
    ShearH,
    ShearQ,
}

#[derive(Subcommand)]
enum Command {
    /// Symmetry algebra at one exponent.
    Classify {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        p: String,
        #[arg(long, default_value_t = DEFAULT_ANSATZ_DEGREE)]
        ansatz_degree: usize,
    },
    /// Algebra dimension over a list or range of exponents.
    Scan {
        #[arg(long)]
        n: usize,
        /// Comma-separated exponents.
        #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["p_from", "p_to", "step"])]
        p: Option<String>,
        #[arg(long, allow_hyphen_values = true, requires_all = ["p_to", "step"])]
        p_from: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        p_to: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        step: Option<String>,
        #[arg(long, default_value_t = DEFAULT_ANSATZ_DEGREE)]
        ansatz_degree: usize,
    },
    /// Transport a solution under an action and measure the residual.
    Verify {
        #[command(flatten)]
        action: ActionArgs,
        #[arg(long, allow_hyphen_values = true)]
        p: String,
        #[command(flatten)]
        sample: SampleArgs,
        /// Expected verdict; defaults to whether the pair is a listed symmetry.
        #[arg(long, value_enum)]
        expect: Option<Expect>,
        #[arg(long, value_enum, default_value_t = Body::Round)]
        body: Body,
    },
    /// Body transformations realizing an action, checked end to end.
    Resolve {
        #[command(flatten)]
        action: ActionArgs,
        #[command(flatten)]
        sample: SampleArgs,
    },
    /// Rotation-diagonal-rotation factorization of a unimodular matrix.
    Decompose {
        /// Rows separated by ';', entries by ','.
        #[arg(long, allow_hyphen_values = true)]
        matrix: String,
    },
    /// Check a support-function identity on a seeded ellipsoid.
    Lemma {
        #[arg(value_enum)]
        id: LemmaId,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.5)]
        eps: f64,
        /// 1-based axis; `translation` also accepts n+1.
        #[arg(long, default_value_t = 1)]
        axis: usize,
        #[command(flatten)]
        sample: SampleArgs,
    },
}

#[derive(Args)]
struct ActionArgs {
    #[arg(long)]
    n: usize,
    /// One of g1..g9.
    #[arg(long)]
    action: String,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    /// 1-based axis.
    #[arg(long, default_value_t = 1)]
    axis: usize,
    /// Matrix for g1 or g6, rows separated by ';'.
    #[arg(long, allow_hyphen_values = true)]
    matrix: Option<String>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] lpsym_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Report {
    schema: u32,
    command: String,
    inputs: Value,
    results: Value,
    timing_ms: Option<f64>,
}

/// Output of one command: the report, its text form, and whether the
/// numerical outcome matched expectations.
struct Outcome {
    report: Report,
    text: String,
    matched: bool,
}

fn parse_matrix(s: &str) -> Result<Matrix, CliError> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|row| {
            row.split([',', ' '])
                .filter(|t| !t.is_empty())
                .map(|t| {
                    let r = parse_rat(t)?;
                    Ok(lpsym_core::exact::to_f64(&r))
                })
                .collect::<Result<Vec<f64>, lpsym_core::Error>>()
        })
        .collect::<Result<_, _>>()?;
    let k = rows.len();
    if k == 0 || rows.iter().any(|r| r.len() != k) {
        return Err(CliError::Usage(format!("matrix {s:?} is not square")));
    }
    Ok(rows)
}

fn axis0(axis: usize) -> Result<usize, CliError> {
    axis.checked_sub(1)
        .ok_or_else(|| CliError::Usage("axes are numbered from 1".into()))
}

fn build_action(args: &ActionArgs) -> Result<GroupAction, CliError> {
    let matrix = args.matrix.as_deref().map(parse_matrix).transpose()?;
    let eps = args.eps.unwrap_or_else(|| default_eps(&args.action));
    Ok(GroupAction::from_id(
        &args.action,
        args.n,
        axis0(args.axis)?,
        eps,
        matrix,
    )?)
}

fn plan(n: usize, s: &SampleArgs) -> Result<SamplePlan, CliError> {
    Ok(SamplePlan::new(n, s.radius, s.samples, s.seed)?)
}

fn fmt_matrix(m: &[Vec<f64>]) -> String {
    m.iter()
        .map(|r| {
            r.iter()
                .map(|v| format!("{v:>12.8}"))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn report_line(r: &ResidualReport) -> String {
    format!(
        "{}  max |r| = {:.3e}  mean |r| = {:.3e}  evaluated {}/{}  skipped {} ({:.1}%)  tol {:.0e}",
        r.verdict.as_str(),
        r.max_abs,
        r.mean_abs,
        r.evaluated,
        r.samples,
        r.skipped,
        100.0 * r.skip_fraction,
        r.tolerance
    )
}

fn exponent(p: &str) -> Result<Rat, CliError> {
    Ok(parse_rat(p)?)
}

fn cmd_classify(n: usize, p: &str, degree: usize) -> Result<Outcome, CliError> {
    let p = exponent(p)?;
    let basis = classify(n, &p, degree)?;
    let case = SpecialCase::of(n, &p);
    let generators: Vec<Value> = basis
        .generators
        .iter()
        .zip(&basis.tags)
        .map(|(g, t)| json!({"field": g.render(), "tag": t.as_str()}))
        .collect();
    let mut text = format!(
        "n = {n}, p = {} ({}), ansatz degree {degree}\ndimension {}\nlinear system: {} unknowns, {} rows, rank {}\n",
        fmt_rat(&p),
        case.as_str(),
        basis.dimension(),
        basis.stats.unknowns,
        basis.stats.rows,
        basis.stats.rank
    );
    for (g, t) in basis.generators.iter().zip(&basis.tags) {
        text.push_str(&format!("  [{:<20}] {}\n", t.as_str(), g.render()));
    }
    let report = Report {
        schema: SCHEMA,
        command: "classify".into(),
        inputs: json!({"n": n, "p": fmt_rat(&p), "ansatz_degree": degree}),
        results: json!({
            "dimension": basis.dimension(),
            "expected_dimension": expected_dimension(n, &p),
            "case": case,
            "generators": generators,
            "stats": basis.stats,
        }),
        timing_ms: None,
    };
    Ok(Outcome {
        report,
        text,
        matched: true,
    })
}

fn exponent_list(
    p: Option<&str>,
    from: Option<&str>,
    to: Option<&str>,
    step: Option<&str>,
) -> Result<Vec<Rat>, CliError> {
    if let Some(list) = p {
        return list.split(',').map(exponent).collect();
    }
    let (Some(from), Some(to), Some(step)) = (from, to, step) else {
        return Err(CliError::Usage(
            "give --p or all of --p-from, --p-to, --step".into(),
        ));
    };
    let (from, to, step) = (exponent(from)?, exponent(to)?, exponent(step)?);
    if step <= Rat::from_integer(0.into()) {
        return Err(CliError::Usage("step must be positive".into()));
    }
    if from > to {
        return Err(CliError::Usage(
            "empty range: --p-from exceeds --p-to".into(),
        ));
    }
    let mut out = Vec::new();
    let mut p = from;
    while p <= to {
        out.push(p.clone());
        p += &step;
    }
    Ok(out)
}

fn cmd_scan(n: usize, ps: Vec<Rat>, degree: usize) -> Result<Outcome, CliError> {
    let rows = scan(n, &ps, degree)?;
    let mut text = String::from("p,dimension,case,rows,rank\n");
    let mut table = Vec::new();
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_rat(&r.p),
            r.dimension,
            r.case.as_str(),
            r.stats.rows,
            r.stats.rank
        ));
        table.push(
            json!({"p": fmt_rat(&r.p), "dimension": r.dimension, "case": r.case, "stats": r.stats}),
        );
    }
    let report = Report {
        schema: SCHEMA,
        command: "scan".into(),
        inputs: json!({"n": n, "p": ps.iter().map(fmt_rat).collect::<Vec<_>>(), "ansatz_degree": degree}),
        results: json!({"rows": table}),
        timing_ms: None,
    };
    Ok(Outcome {
        report,
        text,
        matched: true,
    })
}

fn cmd_verify(
    args: &ActionArgs,
    p: &str,
    s: &SampleArgs,
    expect: Option<Expect>,
    body: Body,
) -> Result<Outcome, CliError> {
    let a = build_action(args)?;
    let p = exponent(p)?;
    let pl = plan(a.n(), s)?;
    let field: SharedField = match body {
        Body::Round => std::sync::Arc::new(EllipsoidField::unit_ball(a.n())),
        Body::NonRound => std::sync::Arc::new(non_round_solution(a.n(), &p).ok_or_else(|| {
            CliError::Usage(format!(
                "no non-round solution in the catalog for p = {}",
                fmt_rat(&p)
            ))
        })?),
    };
    let r = certify_action(&a, &p, field, &pl)?;
    let listed = listed_symmetry(a.id(), a.n(), &p);
    let expected = match expect {
        Some(Expect::Confirmed) => Verdict::SymmetryConfirmed,
        Some(Expect::Refuted) => Verdict::SymmetryRefuted,
        None if listed => Verdict::SymmetryConfirmed,
        None => Verdict::SymmetryRefuted,
    };
    let matched = r.verdict == expected;
    let text = format!(
        "{} on {} at n = {}, p = {}\n{}\nexpected {}: {}\n",
        a.id(),
        r.field.as_ref().map_or("?".into(), |f| f.id.clone()),
        a.n(),
        fmt_rat(&p),
        report_line(&r),
        expected.as_str(),
        if matched { "ok" } else { "MISMATCH" }
    );
    let report = Report {
        schema: SCHEMA,
        command: "verify".into(),
        inputs: json!({"action": a.params(), "p": fmt_rat(&p), "plan": pl, "body": match body { Body::Round => "round", Body::NonRound => "non-round" }}),
        results: json!({"report": r, "listed": listed, "expected": expected, "matched": matched}),
        timing_ms: None,
    };
    Ok(Outcome {
        report,
        text,
        matched,
    })
}

fn cmd_resolve(args: &ActionArgs, s: &SampleArgs) -> Result<Outcome, CliError> {
    let a = build_action(args)?;
    let pl = plan(a.n(), s)?;
    let transforms = resolve(&a)?;
    let ball = certify_resolution(&a, &EllipsoidField::unit_ball(a.n()), &pl)?;
    let body = certify_resolution(&a, &pl.body(), &pl)?;
    let mut matched = ball.confirmed() && body.confirmed();
    let mut text = format!("{} at n = {} resolves to:\n", a.id(), a.n());
    for t in &transforms {
        text.push_str(&format!("  {}\n", t.kind()));
        let detail = match t {
            lpsym_core::actions::BodyTransform::Scaling { factors } => format!("{factors:?}"),
            lpsym_core::actions::BodyTransform::Translation { vector } => format!("{vector:?}"),
            other => fmt_matrix(&other.linear().unwrap_or_default()),
        };
        for line in detail.lines() {
            text.push_str(&format!("    {line}\n"));
        }
    }
    text.push_str(&format!(
        "unit ball: {}\nellipsoid: {}\n",
        report_line(&ball),
        report_line(&body)
    ));
    let mut results = json!({"transforms": transforms, "unit_ball": ball, "ellipsoid": body});
    if let lpsym_core::actions::ActionKind::CentroProjective { axis, eps } = a.kind() {
        let adj = adjudicate_shear_q(*axis, *eps, &pl)?;
        text.push_str(&format!(
            "shear-q closed form, cross-axis: {}\nshear-q closed form, polar-axis: {}\nwinner: {} (implemented: {})\n",
            report_line(&adj.cross_axis),
            report_line(&adj.polar_axis),
            adj.winner,
            form_name(adj.implemented)
        ));
        matched &= adj.winner == form_name(adj.implemented);
        results["shear_q"] = serde_json::to_value(&adj)?;
    }
    let report = Report {
        schema: SCHEMA,
        command: "resolve".into(),
        inputs: json!({"action": a.params(), "plan": pl}),
        results,
        timing_ms: None,
    };
    Ok(Outcome {
        report,
        text,
        matched,
    })
}

fn cmd_decompose(matrix: &str) -> Result<Outcome, CliError> {
    let a = parse_matrix(matrix)?;
    let d = sl_decompose(&a)?;
    let err = lpsym_core::actions::max_abs_diff(&d.reconstruct(), &a);
    let text = format!(
        "P =\n{}\nlambda = {:?}\nQ =\n{}\nreconstruction error {:.3e}\n",
        fmt_matrix(&d.p),
        d.lambda,
        fmt_matrix(&d.q),
        err
    );
    let report = Report {
        schema: SCHEMA,
        command: "decompose".into(),
        inputs: json!({"matrix": a}),
        results: json!({"p": d.p, "lambda": d.lambda, "q": d.q, "reconstruction_error": err}),
        timing_ms: None,
    };
    Ok(Outcome {
        report,
        text,
        matched: true,
    })
}

fn cmd_lemma(
    id: LemmaId,
    n: usize,
    eps: f64,
    axis: usize,
    s: &SampleArgs,
) -> Result<Outcome, CliError> {
    let pl = plan(n, s)?;
    let axis = axis0(axis)?;
    let limit = if id == LemmaId::Translation { n + 1 } else { n };
    if axis >= limit {
        return Err(CliError::Usage(format!("axis {} out of range", axis + 1)));
    }
    let lemmas = match id {
        LemmaId::Rotation => vec![Lemma::Rotation(o_matrix(n, axis, eps))],
        LemmaId::Scaling => {
            let mut k = vec![1.0; n + 1];
            k[axis] = eps.exp();
            vec![Lemma::Scaling(k)]
        }
        LemmaId::Translation => {
            let mut b = vec![0.0; n + 1];
            b[axis] = eps;
            vec![Lemma::Translation(b)]
        }
        LemmaId::ShearH => vec![Lemma::ShearH { n, axis, eps }],
        LemmaId::ShearQ => [ShearQForm::CrossAxis, ShearQForm::PolarAxis]
            .into_iter()
            .map(|form| Lemma::ShearQ { n, axis, eps, form })
            .collect(),
    };
    let body = pl.body();
    let reports = lemmas
        .iter()
        .map(|l| certify_lemma(l, &body, &pl))
        .collect::<Result<Vec<_>, _>>()?;
    let matched = reports[0].confirmed();
    let mut text = format!(
        "{} identity on a seeded ellipsoid, n = {n}\n",
        lemmas[0].id()
    );
    for r in &reports {
        text.push_str(&format!("  {:<22} {}\n", r.subject, report_line(r)));
    }
    let report = Report {
        schema: SCHEMA,
        command: "lemma".into(),
        inputs: json!({"lemma": lemmas[0].id(), "n": n, "eps": eps, "axis": axis + 1, "plan": pl}),
        results: json!({"reports": reports}),
        timing_ms: None,
    };
    Ok(Outcome {
        report,
        text,
        matched,
    })
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Classify {
            n,
            p,
            ansatz_degree,
        } => cmd_classify(*n, p, *ansatz_degree),
        Command::Scan {
            n,
            p,
            p_from,
            p_to,
            step,
            ansatz_degree,
        } => {
            let ps = exponent_list(
                p.as_deref(),
                p_from.as_deref(),
                p_to.as_deref(),
                step.as_deref(),
            )?;
            cmd_scan(*n, ps, *ansatz_degree)
        }
        Command::Verify {
            action,
            p,
            sample,
            expect,
            body,
        } => cmd_verify(action, p, sample, *expect, *body),
        Command::Resolve { action, sample } => cmd_resolve(action, sample),
        Command::Decompose { matrix } => cmd_decompose(matrix),
        Command::Lemma {
            id,
            n,
            eps,
            axis,
            sample,
        } => cmd_lemma(*id, *n, *eps, *axis, sample),
    }
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<(), CliError> {
    let body = match cli.format {
        Format::Text => outcome.text.clone(),
        Format::Json => serde_json::to_string_pretty(&outcome.report)? + "\n",
    };
    match &cli.out {
        Some(path) => std::fs::write(path, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let result = run(&cli).and_then(|mut outcome| {
        if cli.timing {
            outcome.report.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        }
        emit(&cli, &outcome)?;
        Ok(outcome.matched)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_parsing() {
        assert_eq!(
            parse_matrix("1,1;0,1").unwrap(),
            vec![vec![1.0, 1.0], vec![0.0, 1.0]]
        );
        assert_eq!(
            parse_matrix("2 0; 0 1/2").unwrap(),
            vec![vec![2.0, 0.0], vec![0.0, 0.5]]
        );
        assert!(parse_matrix("1,2;3").is_err());
        assert!(parse_matrix("a,b;c,d").is_err());
    }

    #[test]
    fn report_round_trips() {
        let args = ActionArgs {
            n: 2,
            action: "g9".into(),
            eps: Some(0.3),
            axis: 2,
            matrix: None,
        };
        let sample = SampleArgs {
            samples: 64,
            radius: 5.0,
            seed: 3,
        };
        for outcome in [
            cmd_resolve(&args, &sample).unwrap(),
            cmd_classify(2, "-3", 3).unwrap(),
            cmd_decompose("1,1;0,1").unwrap(),
        ] {
            let text = serde_json::to_string_pretty(&outcome.report).unwrap();
            let back: Report = serde_json::from_str(&text).unwrap();
            assert_eq!(back, outcome.report);
            assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
        }
    }

    #[test]
    fn exponent_ranges() {
        let r = exponent_list(None, Some("-4"), Some("4"), Some("1")).unwrap();
        assert_eq!(r.len(), 9);
        assert_eq!(
            exponent_list(None, Some("2"), Some("2"), Some("1/3"))
                .unwrap()
                .len(),
            1
        );
        assert!(exponent_list(None, Some("0"), Some("1"), Some("0")).is_err());
        assert!(exponent_list(None, Some("2"), Some("1"), Some("1")).is_err());
        assert_eq!(
            exponent_list(Some("1/2,-3,0.25"), None, None, None)
                .unwrap()
                .len(),
            3
        );
    }
}
