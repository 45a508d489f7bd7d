use std::f64::consts::PI;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polydet::cone::{heat_kernel_cone, ConeKernelConfig, ConePoint};
use polydet::detlap::{chs_compare_same_angles, log_det_as, DetConfig, DetReport};
use polydet::elliptic::{det_tetrahedron_from_area, periods, tetrahedral_metric, torus_determinant, EllipticConfig};
use polydet::quad::{area, QuadratureConfig};
use polydet::regint::{hadamard_coth_coth_with_cutoff, hadamard_coth_over_sinh_sq_with_cutoff, IntegralConfig};
use polydet::verify::{gradient_report, run_suite, FdConfig, GradientReport};
use polydet::{Complex64, Error, PolyhedralMetric, VariationChannel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "polydet", version, about = "Determinants of Laplacians on polyhedral spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Output {
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Clone)]
struct Tolerances {
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    abs_tol: f64,
    #[arg(long, default_value_t = 24)]
    max_depth: usize,
}

impl Tolerances {
    fn quad(&self) -> QuadratureConfig {
        QuadratureConfig { rel_tol: self.rel_tol, abs_tol: self.abs_tol, max_depth: self.max_depth, ..Default::default() }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Determinant of the Laplacian of a metric
    Det {
        #[arg(long)]
        metric: PathBuf,
        #[command(flatten)]
        tol: Tolerances,
        #[command(flatten)]
        out: Output,
    },
    /// Total area of a metric
    Area {
        #[arg(long)]
        metric: PathBuf,
        #[command(flatten)]
        tol: Tolerances,
        #[command(flatten)]
        out: Output,
    },
    /// Analytic gradient along one channel against finite differences
    Grad {
        #[arg(long)]
        metric: PathBuf,
        /// `z:i`, `beta:i` or `C`
        #[arg(long)]
        channel: VariationChannel,
        #[arg(long)]
        richardson: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Log-ratio of determinants of two metrics with equal cone angles
    Compare {
        #[arg(long)]
        m1: PathBuf,
        #[arg(long)]
        m2: PathBuf,
        #[command(flatten)]
        tol: Tolerances,
        #[command(flatten)]
        out: Output,
    },
    #[command(subcommand)]
    Verify(Verify),
}

#[derive(Subcommand)]
enum Verify {
    /// Tetrahedron: determinant formula vs explicit formula vs torus relation
    Tetra {
        /// Four points `x,y;x,y;x,y;x,y`; defaults to the square {±1, ±i}
        #[arg(long, conflicts_with = "seed")]
        points: Option<String>,
        /// Draw four random points instead
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        tol: Tolerances,
        #[command(flatten)]
        out: Output,
    },
    /// Cone heat kernel against the plane and image sums
    Cone {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        pairs: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Every gradient channel against finite differences
    Fd {
        #[arg(long)]
        metric: PathBuf,
        #[arg(long)]
        richardson: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Stability of the two Hadamard finite parts under cutoff halving
    Hadamard {
        /// Comma-separated cone angles; defaults to a fixed sample
        #[arg(long, value_delimiter = ',')]
        beta: Vec<f64>,
        #[command(flatten)]
        out: Output,
    },
}

enum Failure {
    Lib(Error),
    Input(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn read_metric(path: &Path) -> Res<PolyhedralMetric> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(PolyhedralMetric::from_json(&text)?)
}

fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn print_csv<R: Serialize>(rows: &[R]) -> Res<()> {
    let mut w = csv::Writer::from_writer(std::io::stdout());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Input(e.to_string()))?;
    }
    w.flush().map_err(|e| Failure::Input(e.to_string()))?;
    Ok(())
}

fn print_human(pairs: &[(&str, String)]) {
    for (k, v) in pairs {
        println!("{k:<22}{v}");
    }
}

fn emit<T: Serialize, R: Serialize>(out: &Output, value: &T, rows: &[R], human: &[(&str, String)]) -> Res<()> {
    if out.json {
        print_json(value);
    } else if out.csv {
        print_csv(rows)?;
    } else {
        print_human(human);
    }
    Ok(())
}

#[derive(Serialize)]
struct DetRow {
    log_det: f64,
    log_det_over_area: f64,
    det: f64,
    area: f64,
    area_error: f64,
    w_term: f64,
    f_terms: String,
    reference_term: f64,
    prefactor: f64,
}

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn det_command(metric: &Path, tol: &Tolerances, out: &Output) -> Res<()> {
    let m = read_metric(metric)?;
    let cfg = DetConfig { quad: tol.quad(), integrals: IntegralConfig::default() };
    let r: DetReport = log_det_as(&m, &cfg)?;
    let row = DetRow {
        log_det: r.log_det,
        log_det_over_area: r.log_det_over_area,
        det: r.det(),
        area: r.area,
        area_error: r.area_error,
        w_term: r.w_term,
        f_terms: join(&r.f_terms),
        reference_term: r.reference_term,
        prefactor: r.prefactor,
    };
    let f: Vec<String> = r.f_terms.iter().map(|&x| g17(x)).collect();
    emit(
        out,
        &r,
        &[row],
        &[
            ("log det", g17(r.log_det)),
            ("det", g17(r.det())),
            ("log det / area", g17(r.log_det_over_area)),
            ("area", g17(r.area)),
            ("area error", g17(r.area_error)),
            ("W", g17(r.w_term)),
            ("F terms", f.join(" ")),
            ("reference", g17(r.reference_term)),
            ("prefactor", g17(r.prefactor)),
        ],
    )
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct AreaRow {
    area: f64,
    error_estimate: f64,
    cell_count: usize,
}

fn area_command(metric: &Path, tol: &Tolerances, out: &Output) -> Res<()> {
    let m = read_metric(metric)?;
    let r = area(&m, &tol.quad())?;
    let row = AreaRow { area: r.value, error_estimate: r.error_estimate, cell_count: r.cell_count };
    emit(
        out,
        &row,
        &[&row],
        &[("area", g17(r.value)), ("error estimate", g17(r.error_estimate)), ("cells", r.cell_count.to_string())],
    )
}

#[derive(Serialize)]
struct GradRow {
    channel: String,
    analytic_re: f64,
    analytic_im: f64,
    fd_re: f64,
    fd_im: f64,
    abs_err: f64,
    rel_err: f64,
}

impl From<&GradientReport> for GradRow {
    fn from(r: &GradientReport) -> Self {
        GradRow {
            channel: r.channel.to_string(),
            analytic_re: r.analytic.re,
            analytic_im: r.analytic.im,
            fd_re: r.finite_difference.re,
            fd_im: r.finite_difference.im,
            abs_err: r.abs_err,
            rel_err: r.rel_err,
        }
    }
}

fn complex_str(c: Complex64, channel: VariationChannel) -> String {
    match channel {
        VariationChannel::Position(_) => format!("{} {:+.16e}i", g17(c.re), c.im),
        _ => g17(c.re),
    }
}

fn print_reports_human(reps: &[GradientReport]) {
    println!("{:<10}{:<50}{:<50}{:<26}rel err", "channel", "analytic", "finite difference", "abs err");
    for r in reps {
        println!(
            "{:<10}{:<50}{:<50}{:<26}{}",
            r.channel.to_string(),
            complex_str(r.analytic, r.channel),
            complex_str(r.finite_difference, r.channel),
            g17(r.abs_err),
            g17(r.rel_err)
        );
    }
}

fn fd_config(richardson: bool) -> FdConfig {
    FdConfig { richardson, ..FdConfig::default() }
}

fn suite_tolerance(richardson: bool) -> f64 {
    if richardson {
        1e-7
    } else {
        1e-5
    }
}

fn grad_command(metric: &Path, channel: VariationChannel, richardson: bool, out: &Output) -> Res<()> {
    let m = read_metric(metric)?;
    let r = gradient_report(&m, channel, &IntegralConfig::default(), &fd_config(richardson))?;
    if out.json {
        print_json(&r);
    } else if out.csv {
        print_csv(&[GradRow::from(&r)])?;
    } else {
        print_reports_human(&[r]);
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CompareRow {
    log_ratio: f64,
}

fn compare_command(m1: &Path, m2: &Path, tol: &Tolerances, out: &Output) -> Res<()> {
    let a = read_metric(m1)?;
    let b = read_metric(m2)?;
    let v = chs_compare_same_angles(&a, &b, &tol.quad())?;
    let row = CompareRow { log_ratio: v };
    emit(out, &row, &[&row], &[("log det1/det2", g17(v))])
}

fn parse_points(s: &str) -> Res<[Complex64; 4]> {
    let pts: Vec<Complex64> = s
        .split(';')
        .map(|p| {
            let xy: Vec<f64> = p
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Failure::Input(format!("bad point {p:?}: {e}")))?;
            match xy[..] {
                [x, y] => Ok(Complex64::new(x, y)),
                _ => Err(Failure::Input(format!("bad point {p:?}: expected x,y"))),
            }
        })
        .collect::<Res<_>>()?;
    pts.try_into().map_err(|_| Failure::Input("expected exactly four points".into()))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TetraRow {
    points: String,
    det_formula: f64,
    det_explicit: f64,
    det_torus_sqrt: f64,
    formula_rel_err: f64,
    relation_rel_err: f64,
    pass: bool,
}

fn verify_tetra(points: Option<&str>, seed: Option<u64>, tol: &Tolerances, out: &Output) -> Res<()> {
    let z = match (points, seed) {
        (Some(p), _) => parse_points(p)?,
        (None, Some(s)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            std::array::from_fn(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
        }
        (None, None) => [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)],
    };
    let m = tetrahedral_metric(&z)?;
    let rep = log_det_as(&m, &DetConfig { quad: tol.quad(), integrals: IntegralConfig::default() })?;
    let explicit = det_tetrahedron_from_area(&z, rep.area);
    let torus = torus_determinant(&periods(&z, &EllipticConfig::default())?);
    let formula_rel_err = (rep.det() - explicit).abs() / explicit;
    let relation_rel_err = (explicit * explicit - torus).abs() / torus;
    let pass = formula_rel_err <= 1e-5 && relation_rel_err <= 1e-6;
    let row = TetraRow {
        points: join(&z.iter().map(|p| format!("{},{}", p.re, p.im)).collect::<Vec<_>>()),
        det_formula: rep.det(),
        det_explicit: explicit,
        det_torus_sqrt: torus.sqrt(),
        formula_rel_err,
        relation_rel_err,
        pass,
    };
    emit(
        out,
        &row,
        &[&row],
        &[
            ("points", row.points.clone()),
            ("det (formula)", g17(row.det_formula)),
            ("det (explicit)", g17(row.det_explicit)),
            ("sqrt torus det", g17(row.det_torus_sqrt)),
            ("formula rel err", g17(formula_rel_err)),
            ("relation rel err", g17(relation_rel_err)),
            ("verdict", if pass { "pass".into() } else { "fail".into() }),
        ],
    )?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check("tetrahedron check failed".into()))
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ConeRow {
    beta: f64,
    t: f64,
    max_abs_err: f64,
    tolerance: f64,
    pass: bool,
}

fn verify_cone(seed: u64, pairs: usize, out: &Output) -> Res<()> {
    let cfg = ConeKernelConfig::default();
    let plane = |t: f64, d2: f64| (-d2 / (4.0 * t)).exp() / (4.0 * PI * t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(f64, f64, f64, f64)> =
        (0..pairs).map(|_| (rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0), rng.gen(), rng.gen())).collect();
    let mut rows = Vec::new();
    for (n, tol) in [(1usize, 1e-10), (2, 1e-8), (3, 1e-8)] {
        let beta = 2.0 * PI / n as f64;
        for t in [0.1, 1.0] {
            let mut worst = 0.0f64;
            for &(r1, r2, u1, u2) in &samples {
                let p = ConePoint::new(r1, u1 * beta);
                let q = ConePoint::new(r2, u2 * beta);
                let zp = Complex64::from_polar(r1, p.phi);
                let images: f64 = (0..n)
                    .map(|k| plane(t, (zp - Complex64::from_polar(r2, q.phi + k as f64 * beta)).norm_sqr()))
                    .sum();
                worst = worst.max((heat_kernel_cone(beta, t, p, q, &cfg)? - images).abs());
            }
            rows.push(ConeRow { beta, t, max_abs_err: worst, tolerance: tol, pass: worst <= tol });
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    if out.json {
        print_json(&rows);
    } else if out.csv {
        print_csv(&rows)?;
    } else {
        println!("{:<26}{:<26}{:<26}verdict", "beta", "t", "max abs err");
        for r in &rows {
            println!("{:<26}{:<26}{:<26}{}", g17(r.beta), g17(r.t), g17(r.max_abs_err), if r.pass { "pass" } else { "fail" });
        }
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::Check("cone kernel check failed".into()))
    }
}

fn verify_fd(metric: &Path, richardson: bool, out: &Output) -> Res<()> {
    let m = read_metric(metric)?;
    let reps = run_suite(&m, &IntegralConfig::default(), &fd_config(richardson))?;
    if out.json {
        print_json(&reps);
    } else if out.csv {
        print_csv(&reps.iter().map(GradRow::from).collect::<Vec<_>>())?;
    } else {
        print_reports_human(&reps);
    }
    let tol = suite_tolerance(richardson);
    if reps.iter().all(|r| r.passes(tol)) {
        Ok(())
    } else {
        Err(Failure::Check(format!("some channel exceeds relative error {tol:e}")))
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct HadamardRow {
    beta: f64,
    coth_over_sinh_sq: f64,
    coth_coth: f64,
    coth_over_sinh_sq_quadratic: f64,
    coth_over_sinh_sq_log: f64,
    coth_coth_quadratic: f64,
    coth_coth_log: f64,
    halving_change: f64,
    pass: bool,
}

fn verify_hadamard(betas: &[f64], out: &Output) -> Res<()> {
    let betas = if betas.is_empty() { vec![0.8, PI, 4.0, 2.0 * PI, 9.5] } else { betas.to_vec() };
    let eps = IntegralConfig::default().cutoff;
    let mut rows = Vec::new();
    for &beta in &betas {
        let s = hadamard_coth_over_sinh_sq_with_cutoff(beta, eps)?;
        let s2 = hadamard_coth_over_sinh_sq_with_cutoff(beta, 0.5 * eps)?.finite_part;
        let c = hadamard_coth_coth_with_cutoff(beta, eps)?;
        let c2 = hadamard_coth_coth_with_cutoff(beta, 0.5 * eps)?.finite_part;
        let change = (s.finite_part - s2).abs().max((c.finite_part - c2).abs());
        rows.push(HadamardRow {
            beta,
            coth_over_sinh_sq: s.finite_part,
            coth_coth: c.finite_part,
            coth_over_sinh_sq_quadratic: s.subtracted_quadratic,
            coth_over_sinh_sq_log: s.subtracted_log,
            coth_coth_quadratic: c.subtracted_quadratic,
            coth_coth_log: c.subtracted_log,
            halving_change: change,
            pass: change < 1e-8,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    if out.json {
        print_json(&rows);
    } else if out.csv {
        print_csv(&rows)?;
    } else {
        println!("{:<26}{:<26}{:<26}{:<26}verdict", "beta", "coth/sinh^2", "coth coth", "halving change");
        for r in &rows {
            println!(
                "{:<26}{:<26}{:<26}{:<26}{}",
                g17(r.beta),
                g17(r.coth_over_sinh_sq),
                g17(r.coth_coth),
                g17(r.halving_change),
                if r.pass { "pass" } else { "fail" }
            );
        }
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::Check("finite parts depend on the cutoff".into()))
    }
}

fn dispatch(cli: Cli) -> Res<()> {
    match cli.command {
        Command::Det { metric, tol, out } => det_command(&metric, &tol, &out),
        Command::Area { metric, tol, out } => area_command(&metric, &tol, &out),
        Command::Grad { metric, channel, richardson, out } => grad_command(&metric, channel, richardson, &out),
        Command::Compare { m1, m2, tol, out } => compare_command(&m1, &m2, &tol, &out),
        Command::Verify(v) => match v {
            Verify::Tetra { points, seed, tol, out } => verify_tetra(points.as_deref(), seed, &tol, &out),
            Verify::Cone { seed, pairs, out } => verify_cone(seed, pairs, &out),
            Verify::Fd { metric, richardson, out } => verify_fd(&metric, richardson, &out),
            Verify::Hadamard { beta, out } => verify_hadamard(&beta, &out),
        },
    }
}

fn report_error(kind: &str, message: String) {
    eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("POLYDET_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                report_error("InvalidConfig", format!("POLYDET_THREADS must be a positive integer, got {n:?}"));
                return ExitCode::from(2);
            }
        }
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            report_error(e.kind(), e.to_string());
            ExitCode::from(if matches!(e, Error::ToleranceNotReached { .. }) { 3 } else { 2 })
        }
        Err(Failure::Input(m)) => {
            report_error("InvalidInput", m);
            ExitCode::from(2)
        }
        Err(Failure::Check(m)) => {
            eprintln!("{m}");
            ExitCode::from(1)
        }
    }
}
