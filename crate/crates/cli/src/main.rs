use clap::{Args, Parser, Subcommand};
use ndesym::classify::{classify, Generator, GeneratorKind, GeneratorStatus};
use ndesym::detsys::{canonical_constraints, determine, reduce_ansatz, DeterminingSystem};
use ndesym::flowverify::{rho_fn, verify_generator, FlowConfig};
use ndesym::funcs::FnBank;
use ndesym::nde::NdeSpec;
use ndesym::ndesolve::{integrate, InitialFunction};
use ndesym::prolong::InfinitesimalAnsatz;
use ndesym::suite::run_suite;
use ndesym::symexpr::{eval_numeric, parse, Env, NoFunctions};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ndesym", version, about = "Lie point symmetries of linear neutral delay equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify an equation and list its generators.
    Classify(Common),
    /// Print the determining system.
    Determine(DetermineArgs),
    /// Integrate by the method of steps; CSV t,x,xprime,xsecond.
    Integrate(Numeric),
    /// Classify, then check every generator on a numerical solution.
    Verify(VerifyArgs),
    /// One built-in instance per case plus the two worked examples.
    PaperSuite(SuiteArgs),
}

#[derive(Args)]
struct Common {
    /// Spec file (JSON).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    json: bool,
    /// Directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DetermineArgs {
    /// Spec file, or `generic` for arbitrary b, c, d, k.
    #[arg(long, default_value = "generic")]
    spec: String,
    /// omega of a specific ansatz; the generic one is used otherwise.
    #[arg(long, requires = "upsilon")]
    omega: Option<String>,
    #[arg(long, requires = "omega")]
    upsilon: Option<String>,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Numeric {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value = "sin(t)")]
    theta: String,
    /// End time; an expression such as 3*pi.
    #[arg(long = "T")]
    t_end: Option<String>,
    /// Steps per delay.
    #[arg(long, default_value_t = 64)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    num: Numeric,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long = "tol-inf", default_value_t = 1e-6)]
    tol_inf: f64,
    #[arg(long = "tol-fin", default_value_t = 1e-4)]
    tol_fin: f64,
    /// Initial function of the rho solution.
    #[arg(long = "rho-seed", default_value = "1")]
    rho_seed: String,
    /// Extra generator as `omega;upsilon`.
    #[arg(long = "generator")]
    generators: Vec<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SuiteArgs {
    /// Restrict to these scenarios (C1..C12, EX1, EX2).
    #[arg(long)]
    only: Vec<String>,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 64)]
    steps: usize,
    #[arg(long = "tol-inf", default_value_t = 1e-6)]
    tol_inf: f64,
    #[arg(long = "tol-fin", default_value_t = 1e-4)]
    tol_fin: f64,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Fail(u8, String);

type Res = Result<u8, Fail>;

fn malformed<E: std::fmt::Display>(e: E) -> Fail {
    Fail(1, e.to_string())
}

fn read_spec(path: &Path) -> Result<NdeSpec, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| Fail(1, format!("{}: {}", path.display(), e)))?;
    NdeSpec::from_json(&text).map_err(|e| Fail(1, format!("{}: {}", path.display(), e)))
}

fn write_out(dir: &Option<PathBuf>, name: &str, body: &str) -> Result<(), Fail> {
    if let Some(d) = dir {
        std::fs::create_dir_all(d).map_err(malformed)?;
        std::fs::write(d.join(name), body).map_err(malformed)?;
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap() + "\n"
}

fn end_time(spec: &NdeSpec, t: &Option<String>) -> Result<f64, Fail> {
    match t {
        None => Ok(spec.t0 + 4.0 * spec.r.value),
        Some(s) => {
            let e = parse(s).map_err(|e| Fail(1, format!("--T: {}", e)))?;
            eval_numeric(&e, &Env::<f64>::new(), &NoFunctions).map_err(|e| Fail(1, format!("--T: {}", e)))
        }
    }
}

fn cmd_classify(a: &Common) -> Res {
    let spec = read_spec(&a.spec)?;
    let r = classify(&spec).map_err(malformed)?;
    let json = pretty(&r.report());
    let text = r.render();
    write_out(&a.out, "classify.json", &json)?;
    write_out(&a.out, "classify.txt", &text)?;
    print!("{}", if a.json { json } else { text });
    Ok(r.exit_code() as u8)
}

fn cmd_determine(a: &DetermineArgs) -> Res {
    let spec = if a.spec == "generic" { NdeSpec::generic() } else { read_spec(Path::new(&a.spec))? };
    let systems: Vec<DeterminingSystem> = match (&a.omega, &a.upsilon) {
        (Some(w), Some(u)) => {
            let ans = InfinitesimalAnsatz::parse(w, u).map_err(malformed)?;
            vec![determine(&spec, &ans).map_err(malformed)?]
        }
        _ => {
            let split = determine(&spec, &InfinitesimalAnsatz::generic()).map_err(malformed)?;
            let reduced = reduce_ansatz(&split).map_err(malformed)?;
            let canonical = canonical_constraints(&reduced).map_err(malformed)?;
            vec![split, reduced, canonical]
        }
    };
    let json = pretty(&Value::Array(systems.iter().map(|s| s.report()).collect()));
    let text: String = systems.iter().map(|s| s.render()).collect::<Vec<_>>().join("\n");
    write_out(&a.out, "determine.json", &json)?;
    write_out(&a.out, "determine.txt", &text)?;
    print!("{}", if a.json { json } else { text });
    Ok(0)
}

fn cmd_integrate(a: &Numeric) -> Res {
    let spec = read_spec(&a.spec)?;
    let theta = InitialFunction::parse(&a.theta).map_err(malformed)?;
    let t_end = end_time(&spec, &a.t_end)?;
    let tr = integrate::<f64>(&spec, &theta, t_end, a.steps).map_err(malformed)?;
    let csv = tr.to_csv();
    match &a.out {
        Some(_) => write_out(&a.out, "trajectory.csv", &csv)?,
        None => print!("{}", csv),
    }
    Ok(0)
}

fn user_generator(text: &str) -> Result<Generator, Fail> {
    let (w, u) = text.split_once(';').ok_or_else(|| Fail(1, format!("--generator `{}`: expected omega;upsilon", text)))?;
    let ans = InfinitesimalAnsatz::parse(w, u).map_err(malformed)?;
    Ok(Generator {
        label: format!("user: ({}) d/dt + ({}) d/dx", w.trim(), u.trim()),
        omega: ans.omega,
        upsilon: ans.upsilon,
        kind: GeneratorKind::Closed,
        status: GeneratorStatus::Candidate("user supplied".into()),
        required: false,
        bank: FnBank::new(),
        check: None,
    })
}

fn cmd_verify(a: &VerifyArgs) -> Res {
    let spec = read_spec(&a.num.spec)?;
    let cls = classify(&spec).map_err(malformed)?;
    let work = &cls.reduced;
    let cfg = FlowConfig {
        delta: a.delta,
        steps_per_delay: a.num.steps,
        tol_inf: a.tol_inf,
        tol_fin: a.tol_fin,
        ..FlowConfig::default()
    };
    if !(cfg.tol_inf > 0.0 && cfg.tol_fin > 0.0 && cfg.delta.is_finite()) {
        return Err(Fail(1, "tolerances must be positive and delta finite".into()));
    }
    let theta = InitialFunction::parse(&a.num.theta).map_err(malformed)?;
    let t_end = end_time(work, &a.num.t_end)?;
    let delays = ((t_end - work.t0) / work.r.value).round().max(1.0) as usize;
    let tr = integrate::<f64>(work, &theta, t_end, a.num.steps).map_err(malformed)?;
    let rho = rho_fn(work, &a.rho_seed, delays + 2, a.num.steps).map_err(malformed)?;
    let mut gens = cls.generators.clone();
    for g in &a.generators {
        gens.push(user_generator(g)?);
    }
    let mut rows = Vec::new();
    let mut failed = false;
    let mut text = String::new();
    let builtin = cls.generators.len();
    for (i, g) in gens.iter().enumerate() {
        let rep = verify_generator(work, g, &tr, g.is_rho().then(|| rho.clone()), &cfg);
        let admitted = g.status.admitted();
        if (admitted || i >= builtin) && !rep.passed() {
            failed = true;
        }
        text += &format!(
            "{} {}  inf {:.2e}  fin {:.2e}  group {:.1e}/{:.1e}/{:.1e}{}\n",
            if rep.passed() { "PASS" } else { "FAIL" },
            g.label,
            rep.infinitesimal,
            rep.finite,
            rep.group.identity,
            rep.group.composition,
            rep.group.inverse,
            rep.error.as_ref().map(|e| format!("  ({})", e)).unwrap_or_default()
        );
        rows.push(json!({ "admitted": admitted, "passed": rep.passed(), "report": rep }));
    }
    let v = json!({ "case": cls.case.map(|c| c.name()), "generators": rows });
    write_out(&a.num.out, "verify.json", &pretty(&v))?;
    write_out(&a.num.out, "trajectory.csv", &tr.to_csv())?;
    print!("{}", if a.json { pretty(&v) } else { text });
    Ok(if cls.case.is_none() {
        2
    } else if failed || !cls.warnings.is_empty() {
        3
    } else {
        0
    })
}

fn cmd_suite(a: &SuiteArgs) -> Res {
    let cfg = FlowConfig { delta: a.delta, steps_per_delay: a.steps, tol_inf: a.tol_inf, tol_fin: a.tol_fin, ..FlowConfig::default() };
    let reps = run_suite(&a.only, &cfg).map_err(malformed)?;
    let header = "constants pinned to 1, r = 1 (r = pi for EX1 and C9, 2 pi for C7)";
    let v = json!({ "header": header, "config": cfg, "scenarios": reps });
    let mut text = format!("# {}\n", header);
    for r in &reps {
        text += &r.line();
        text += "\n";
    }
    let passed = reps.iter().filter(|r| r.passed()).count();
    text += &format!("{}/{} scenarios pass\n", passed, reps.len());
    write_out(&a.out, "suite.json", &pretty(&v))?;
    write_out(&a.out, "suite.txt", &text)?;
    print!("{}", if a.json { pretty(&v) } else { text });
    Ok(if passed == reps.len() { 0 } else { 3 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let out = match &cli.command {
        Command::Classify(a) => cmd_classify(a),
        Command::Determine(a) => cmd_determine(a),
        Command::Integrate(a) => cmd_integrate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::PaperSuite(a) => cmd_suite(a),
    };
    match out {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(code)
        }
    }
}
