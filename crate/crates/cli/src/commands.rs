use std::fmt::Write as _;
use std::path::Path;

use trimlevy::experiments::{ExperimentConfig, ExperimentKind, OutputPaths, Tolerances, INVERSION_CAP};
use trimlevy::limit_laws::{
    cdf_from_cf, limit_cf_joint, limit_cf_single, limit_cf_single_any, limit_laplace, Centering, JointBranch,
};
use trimlevy::measures::regular_variation_diagnostic;
use trimlevy::montecarlo::replicate;
use trimlevy::rng::mix64;
use trimlevy::samplers::{sample_ordered_jumps, sample_trimmed};
use trimlevy::{run_experiment, Error, LimitLawSpec, ModelKind, ModelSpec, Result};

use crate::{Args, Name};

const TAG_JUMPS: u64 = 0x5a;
const TAG_TRIMMED: u64 = 0x5b;
const DEFAULT_MC_SAMPLES: usize = 100_000;
const DEFAULT_EXPERIMENT_SAMPLES: usize = 10_000;

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Names of the flags present on the command line.
fn given(a: &Args) -> Vec<&'static str> {
    let flags = [
        ("model", a.model.is_some()),
        ("alpha", a.alpha.is_some()),
        ("a-plus", a.a_plus.is_some()),
        ("atoms", !a.atoms.is_empty()),
        ("drift", a.drift.is_some()),
        ("t", !a.t.is_empty()),
        ("r", a.r.is_some()),
        ("n", !a.n.is_empty()),
        ("count", a.count.is_some()),
        ("seed", a.seed.is_some()),
        ("theta", !a.theta.is_empty()),
        ("lambda", !a.lambda.is_empty()),
        ("eps", a.eps.is_some()),
        ("config", a.config.is_some()),
        ("out", a.out.is_some()),
        ("threads", a.threads.is_some()),
        ("x", !a.x.is_empty()),
        ("u", a.u.is_some()),
        ("y", a.y.is_some()),
    ];
    flags.iter().filter(|(_, set)| *set).map(|(name, _)| *name).collect()
}

const MODEL_FLAGS: [&str; 5] = ["model", "alpha", "a-plus", "atoms", "drift"];
const ALWAYS: [&str; 2] = ["out", "threads"];

fn allowed(name: Name) -> Vec<&'static str> {
    let own: &[&str] = match name {
        Name::SampleJumps => &["t", "count", "n", "seed"],
        Name::SampleTrimmed => &["t", "r", "count", "seed"],
        Name::LimitCf => &["alpha", "a-plus", "drift", "r", "n", "theta", "count", "seed"],
        Name::LimitLaplace => &["alpha", "r", "lambda"],
        Name::InvertCf => &["alpha", "a-plus", "drift", "r", "n", "x"],
        Name::Converge => &["config", "t", "r", "n", "count", "seed", "theta"],
        Name::LaplaceCheck => &["config", "t", "r", "count", "seed", "lambda"],
        Name::LargeTrim => &["config", "t", "r", "n", "count", "seed", "eps"],
        Name::Pd => &["config", "t", "r", "n", "count", "seed"],
        Name::RvDiag => &["t", "u", "y", "eps"],
    };
    let mut v: Vec<&str> = own.to_vec();
    v.extend(ALWAYS);
    if !matches!(name, Name::LimitCf | Name::LimitLaplace | Name::InvertCf) {
        v.extend(MODEL_FLAGS);
    }
    v
}

fn check_flags(name: Name, a: &Args) -> Result<()> {
    let scalars = [a.alpha, a.a_plus, a.drift, a.eps, a.u, a.y];
    let lists = [&a.t, &a.theta, &a.lambda, &a.x];
    if scalars.iter().flatten().chain(lists.into_iter().flatten()).any(|v| !v.is_finite()) {
        return Err(config_err("numeric flags must be finite"));
    }
    let ok = allowed(name);
    let stray: Vec<_> = given(a).into_iter().filter(|f| !ok.contains(f)).collect();
    if !stray.is_empty() {
        return Err(config_err(format!("flags not used by this subcommand: --{}", stray.join(", --"))));
    }
    if a.config.is_some() {
        let extra: Vec<_> = given(a).into_iter().filter(|f| !["config", "seed", "out", "threads"].contains(f)).collect();
        if !extra.is_empty() {
            return Err(config_err(format!("--config excludes --{}", extra.join(", --"))));
        }
    }
    Ok(())
}

/// Explicit seed, or one drawn from the clock and logged so the run can be repeated.
fn resolve_seed(a: &mut Args) -> u64 {
    if let Some(s) = a.seed {
        return s;
    }
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    let s = mix64(nanos ^ (std::process::id() as u64).rotate_left(32));
    log::info!("no --seed given; generated seed {s}");
    a.seed = Some(s);
    s
}

fn model_spec(a: &Args) -> Result<ModelSpec> {
    let name = a.model.as_deref().unwrap_or("stable");
    if name.trim_start().starts_with('{') {
        if a.alpha.is_some() || a.a_plus.is_some() || !a.atoms.is_empty() || a.drift.is_some() {
            return Err(config_err("an inline JSON model excludes --alpha, --a-plus, --atoms and --drift"));
        }
        return ModelSpec::from_json(name);
    }
    let kind = match name {
        "stable" | "pure_stable" => ModelKind::PureStable,
        "tempered" | "tempered_stable" => ModelKind::TemperedStable,
        "atomic" | "atomic_stable" => ModelKind::AtomicStable,
        "gamma" | "gamma_subordinator" => ModelKind::GammaSubordinator,
        other => return Err(config_err(format!("unknown model {other:?}"))),
    };
    let mut spec = ModelSpec::empty(kind);
    spec.alpha = a.alpha;
    spec.a_plus = a.a_plus;
    spec.drift = a.drift;
    for pair in &a.atoms {
        let (y, m) = pair
            .split_once(':')
            .ok_or_else(|| config_err(format!("atom {pair:?} is not location:mass")))?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| config_err(format!("bad number in atom {pair:?}")));
        spec.atoms.push((parse(y)?, parse(m)?));
    }
    Ok(spec)
}

fn limit_law(a: &Args) -> Result<LimitLawSpec> {
    let alpha = a.alpha.ok_or_else(|| config_err("--alpha is required"))?;
    let (r, n) = (a.r.unwrap_or(1), single_n(a)?);
    match a.drift {
        None => LimitLawSpec::new(alpha, a.a_plus.unwrap_or(1.0), r, n),
        Some(d) => {
            if d != 0.0 {
                return Err(config_err("limit laws take --drift 0 (subordinator centering) or no drift"));
            }
            LimitLawSpec::with_centering(alpha, a.a_plus.unwrap_or(1.0), r, n, Centering::Subordinator)
        }
    }
}

fn single_t(a: &Args) -> Result<f64> {
    match a.t.as_slice() {
        [] => Ok(1.0),
        [t] => Ok(*t),
        _ => Err(config_err("--t takes a single value here")),
    }
}

fn single_n(a: &Args) -> Result<usize> {
    match a.n.as_slice() {
        [] => Ok(1),
        [n] => Ok(*n),
        _ => Err(config_err("--n takes a single value here")),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Shortest round-trip form, switching to exponent notation for very large
/// or small magnitudes.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}_{i}")).collect()
}

pub fn dispatch(name: Name, mut args: Args) -> Result<()> {
    check_flags(name, &args)?;
    let uses_seed = allowed(name).contains(&"seed") && args.config.is_none();
    if uses_seed {
        resolve_seed(&mut args);
    }
    log::info!(
        "{} {}",
        serde_json::to_string(&name).unwrap_or_default(),
        serde_json::to_string(&args).unwrap_or_default()
    );
    let out = args.out.clone();
    let out = out.as_deref();
    match name {
        Name::SampleJumps => sample_jumps(&args, out),
        Name::SampleTrimmed => sample_trimmed_cmd(&args, out),
        Name::LimitCf => limit_cf(&args, out),
        Name::LimitLaplace => limit_laplace_cmd(&args, out),
        Name::InvertCf => invert_cf(&args, out),
        Name::Converge => experiment(ExperimentKind::Convergence, &args, out),
        Name::LaplaceCheck => experiment(ExperimentKind::SubordinatorLaplace, &args, out),
        Name::LargeTrim => experiment(ExperimentKind::LargeTrim, &args, out),
        Name::Pd => experiment(ExperimentKind::PdRatio, &args, out),
        Name::RvDiag => rv_diag(&args, out),
    }
}

fn sample_jumps(a: &Args, out: Option<&Path>) -> Result<()> {
    let model = model_spec(a)?.build()?;
    let (t, k, rows) = (single_t(a)?, a.count.unwrap_or(1), single_n(a)?);
    if k == 0 || rows == 0 {
        return Err(config_err("--count and --n must be positive"));
    }
    let seed = a.seed.unwrap_or_default();
    let draws = replicate(rows, seed, TAG_JUMPS, |rng| Ok(sample_ordered_jumps(&model, t, k, rng)?.jumps))?;
    let rows: Vec<Vec<String>> = draws.iter().map(|j| j.iter().map(|x| num(*x)).collect()).collect();
    emit(out, &csv(&names("jump", k), &rows))
}

fn sample_trimmed_cmd(a: &Args, out: Option<&Path>) -> Result<()> {
    let model = model_spec(a)?.build()?;
    let (t, r, count) = (single_t(a)?, a.r.unwrap_or(1), a.count.unwrap_or(1000));
    let seed = a.seed.unwrap_or_default();
    let draws = replicate(count, seed, TAG_TRIMMED, |rng| {
        let s = sample_trimmed(&model, t, r, 0, rng)?;
        let mut row = vec![num(s.trimmed_value)];
        row.extend(s.ordered.jumps[..r].iter().map(|x| num(*x)));
        Ok(row)
    })?;
    let mut header = vec!["trimmed".to_string()];
    header.extend(names("jump", r));
    emit(out, &csv(&header, &draws))
}

fn limit_cf(a: &Args, out: Option<&Path>) -> Result<()> {
    let law = limit_law(a)?;
    if a.theta.is_empty() {
        return Err(config_err("--theta is required"));
    }
    let samples = a.count.unwrap_or(DEFAULT_MC_SAMPLES);
    let seed = a.seed.unwrap_or_default();
    log::info!("theta0 = {}", law.theta0);
    let mut rows = Vec::new();
    for (i, &th) in a.theta.iter().enumerate() {
        let (z, se, method) = if th.abs() <= law.theta0 {
            (limit_cf_single(&law, th)?, 0.0, "closed")
        } else {
            let mut thetas = vec![0.0; law.n];
            thetas[law.n - 1] = th;
            let est = limit_cf_joint(&law, &thetas, JointBranch::Simulated, samples, mix64(seed ^ i as u64))?;
            (est.value(), est.std_error, "simulated")
        };
        rows.push(vec![num(th), num(z.re), num(z.im), num(se), method.to_string()]);
    }
    let header = ["theta", "re", "im", "std_error", "method"].map(String::from);
    emit(out, &csv(&header, &rows))
}

fn limit_laplace_cmd(a: &Args, out: Option<&Path>) -> Result<()> {
    let alpha = a.alpha.ok_or_else(|| config_err("--alpha is required"))?;
    if a.lambda.is_empty() {
        return Err(config_err("--lambda is required"));
    }
    let law = LimitLawSpec::subordinator(alpha, a.r.unwrap_or(1), 1)?;
    let mut rows = Vec::new();
    for &l in &a.lambda {
        if l < 0.0 {
            return Err(config_err("--lambda must be nonnegative"));
        }
        rows.push(vec![num(l), num(limit_laplace(&law, l)?)]);
    }
    emit(out, &csv(&["lambda".into(), "laplace".into()], &rows))
}

fn invert_cf(a: &Args, out: Option<&Path>) -> Result<()> {
    let law = limit_law(a)?;
    let xs = if a.x.is_empty() { (0..=100).map(|i| -5.0 + 0.1 * i as f64).collect() } else { a.x.clone() };
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err("--x must be strictly increasing"));
    }
    let inv = cdf_from_cf(|th| limit_cf_single_any(&law, th), &xs, INVERSION_CAP)?;
    log::info!("integration cap {}, truncation error {:.2e}", inv.cap, inv.truncation_error);
    let rows: Vec<Vec<String>> = inv.x.iter().zip(&inv.cdf).map(|(x, f)| vec![num(*x), num(*f)]).collect();
    emit(out, &csv(&["x".into(), "cdf".into()], &rows))
}

fn experiment(kind: ExperimentKind, a: &Args, out: Option<&Path>) -> Result<()> {
    let cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            if cfg.experiment != kind {
                return Err(config_err(format!("config describes {:?}, not {kind:?}", cfg.experiment)));
            }
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            cfg
        }
        None => config_from_flags(kind, a)?,
    };
    log::info!("resolved config {}", serde_json::to_string(&cfg)?);
    let report = run_experiment(&cfg)?;
    for f in &report.flags {
        let level = if f.pass { log::Level::Info } else { log::Level::Warn };
        log::log!(level, "{}: {} ({})", f.name, if f.pass { "pass" } else { "FAIL" }, f.detail);
    }
    match out {
        Some(p) => report.write_outputs(&OutputPaths {
            csv: Some(p.to_string_lossy().into_owned()),
            json: Some(p.with_extension("json").to_string_lossy().into_owned()),
        }),
        None if cfg.output != OutputPaths::default() => report.write_outputs(&cfg.output),
        None => {
            println!("{}", report.to_json()?);
            Ok(())
        }
    }
}

fn config_from_flags(kind: ExperimentKind, a: &Args) -> Result<ExperimentConfig> {
    if a.t.is_empty() {
        return Err(config_err("--t (a decreasing grid) or --config is required"));
    }
    let (n, n_grid) = match kind {
        ExperimentKind::LargeTrim => (1, a.n.clone()),
        _ => (single_n(a)?, Vec::new()),
    };
    let cfg = ExperimentConfig {
        experiment: kind,
        model: model_spec(a)?,
        r: a.r.unwrap_or(1),
        n,
        t_grid: a.t.clone(),
        sample_count: a.count.unwrap_or(DEFAULT_EXPERIMENT_SAMPLES),
        seed: a.seed.unwrap_or_default(),
        theta_grid: a.theta.clone(),
        lambda_grid: a.lambda.clone(),
        n_grid,
        eps: a.eps,
        tolerances: Tolerances::default(),
        output: OutputPaths::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn rv_diag(a: &Args, out: Option<&Path>) -> Result<()> {
    let model = model_spec(a)?.build()?;
    let grid = if a.t.is_empty() { (1..=6).map(|k| 10f64.powi(-k)).collect() } else { a.t.clone() };
    let d = regular_variation_diagnostic(&model, a.u.unwrap_or(2.0), a.y.unwrap_or(1.0), &grid, a.eps.unwrap_or(1e-2))?;
    if d.converged {
        log::info!("converged to {} within tolerance", d.limit);
    } else {
        log::warn!("last entry not within tolerance of the limit {}", d.limit);
    }
    let mut s = String::from("t,value,limit\n");
    for (t, v) in &d.rows {
        let _ = writeln!(s, "{},{},{}", num(*t), num(*v), num(d.limit));
    }
    emit(out, &s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_and_kinds_parse() {
        let a = Args {
            model: Some("atomic".into()),
            alpha: Some(0.8),
            atoms: vec!["1:0.5".into(), "2.5:0.1".into()],
            ..Args::default()
        };
        let spec = model_spec(&a).unwrap();
        assert_eq!(spec.kind, ModelKind::AtomicStable);
        assert_eq!(spec.atoms, vec![(1.0, 0.5), (2.5, 0.1)]);
        assert!(spec.build().unwrap().is_atom(2.5));
        let bad = Args { atoms: vec!["1-0.5".into()], ..a.clone() };
        assert!(model_spec(&bad).unwrap_err().is_config_error());
        let inline = Args { model: Some(r#"{"kind":"gamma_subordinator","shape":2.0}"#.into()), ..Args::default() };
        assert_eq!(model_spec(&inline).unwrap().kind, ModelKind::GammaSubordinator);
    }

    #[test]
    fn stray_flags_are_rejected() {
        let a = Args { lambda: vec![1.0], alpha: Some(0.5), ..Args::default() };
        assert!(check_flags(Name::LimitLaplace, &a).is_ok());
        assert!(check_flags(Name::SampleJumps, &a).is_err());
        let nan = Args { x: vec![f64::NAN], ..Args::default() };
        assert!(check_flags(Name::InvertCf, &nan).is_err());
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0, 1e300, 5.5e-10, -3.25] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1e300), "1e300");
    }
}
