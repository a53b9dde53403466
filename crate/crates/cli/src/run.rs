use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use tamed_geometry::flow::{
    check_trajectory, count_ends, find_critical_points, integrate_flow, level_set_gamma, write_trajectory_csv,
};
use tamed_geometry::immersion::{describe, BUILTIN_NAMES};
use tamed_geometry::oracle::{barta_sandwich, corollary_check, lambda1_dirichlet, unit_disc, DiscreteDirichletProblem};
use tamed_geometry::properness::certify;
use tamed_geometry::sampled::SampledSubmanifold;
use tamed_geometry::spectral::{lemma2_check, radial_eigenvalue_tol, tone_upper_bound, BISECTION_TOL};
use tamed_geometry::tamedness::{analyze, default_radii, TamednessReport};
use tamed_geometry::Error;

use crate::config::{parse_list, parse_resolution, RunConfig, DEFAULT_RESOLUTION};
use crate::{Command, Flags, Format};

pub enum Failure {
    /// Bad flags, config or input; exit 1.
    Usage(String),
    /// A certificate or precondition of the theory failed; exit 2.
    Violated(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotTamed(_) | Error::Level(_) => Failure::Violated(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

/// Flags merged over the optional config file.
struct Ctx {
    cfg: Option<RunConfig>,
    radii: Option<Vec<f64>>,
    c: Option<f64>,
    big_r: Option<f64>,
    l: Option<usize>,
    mu: Option<f64>,
    m: Option<usize>,
    r0: Option<f64>,
    resolution: Option<Vec<usize>>,
    output: Option<PathBuf>,
    format: Format,
    step: f64,
    t_max: Option<f64>,
    seeds: usize,
    end_radii: Option<Vec<f64>>,
    tol: f64,
}

impl Ctx {
    fn new(flags: &Flags) -> Result<Self, Failure> {
        let cfg = match &flags.config {
            Some(p) => Some(RunConfig::load(p).map_err(Failure::Usage)?),
            None => None,
        };
        let a = cfg.as_ref().map(|c| c.analysis.clone()).unwrap_or_default();
        let list = |s: &Option<String>| s.as_deref().map(parse_list).transpose().map_err(Failure::Usage);
        let c = flags.c.or(a.c);
        if let Some(c) = c {
            if !(c > 0.0 && c < 1.0) {
                return Err(Failure::Usage(format!("--c must lie in (0, 1), got {c}")));
            }
        }
        let format = match flags.format {
            Some(f) => f,
            None => match cfg.as_ref().and_then(|c| c.output.format.as_deref()) {
                Some("csv") => Format::Csv,
                _ => Format::Json,
            },
        };
        let resolution = match &flags.resolution {
            Some(s) => Some(parse_resolution(s).map_err(Failure::Usage)?),
            None => cfg.as_ref().and_then(|c| c.resolution.clone()),
        };
        Ok(Self {
            radii: list(&flags.radii)?.or(a.radii),
            c,
            big_r: flags.big_r.or(a.big_r),
            l: flags.l.or(a.l),
            mu: flags.mu.or(a.mu),
            m: flags.m,
            r0: flags.r0,
            resolution,
            output: flags.output.clone().or_else(|| cfg.as_ref().and_then(|c| c.output.dir.clone()).map(PathBuf::from)),
            format,
            step: flags.step.or(a.step).unwrap_or(0.05),
            t_max: flags.t_max.or(a.t_max),
            seeds: flags.seeds.or(a.seeds).unwrap_or(16),
            end_radii: list(&flags.end_radii)?.or(a.end_radii),
            tol: flags.tol.or(a.tol).unwrap_or(BISECTION_TOL),
            cfg,
        })
    }

    fn sampled(&self) -> Result<SampledSubmanifold, Failure> {
        let cfg = self.cfg.as_ref().ok_or_else(|| Failure::Usage("this subcommand needs --config".into()))?;
        let chart = cfg.chart()?;
        let res = self.resolution.clone().unwrap_or_else(|| DEFAULT_RESOLUTION[..chart.dim()].to_vec());
        if res.len() != chart.dim() {
            return Err(Failure::Usage(format!("resolution {res:?} does not match chart dimension {}", chart.dim())));
        }
        Ok(SampledSubmanifold::new(&chart, &res)?)
    }

    fn tamedness(&self, s: &SampledSubmanifold) -> Result<TamednessReport, Failure> {
        let radii = self.radii.clone().unwrap_or_else(|| default_radii(s));
        Ok(analyze(s, &radii, self.c)?)
    }

    /// Prints the JSON report (or the first table for CSV without an output
    /// directory) and writes files under `--output`.
    fn emit(&self, name: &str, report: &Value, tables: &[(String, String)]) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(report).map_err(|e| Failure::Usage(e.to_string()))?;
        if let Some(dir) = &self.output {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
            write(&dir.join(format!("{name}.json")), &text)?;
            if self.format == Format::Csv {
                for (file, body) in tables {
                    write(&dir.join(file), body)?;
                }
            }
        }
        let body = match (self.format, &self.output, tables.first()) {
            (Format::Csv, None, Some((_, body))) => body.clone(),
            _ => text + "\n",
        };
        let mut out = std::io::stdout().lock();
        match out.write_all(body.as_bytes()).and_then(|_| out.flush()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Usage(format!("cannot write report: {e}"))),
            _ => Ok(()),
        }
    }
}

fn write(path: &Path, body: &str) -> Result<(), Failure> {
    std::fs::write(path, body).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

pub fn dispatch(command: Command, flags: &Flags) -> Outcome {
    let ctx = Ctx::new(flags)?;
    match command {
        Command::Catalog => catalog(&ctx),
        Command::Tamedness => tamedness(&ctx),
        Command::Properness => properness(&ctx),
        Command::Flow => flow(&ctx),
        Command::Spectral => spectral(&ctx),
        Command::Oracle => oracle(&ctx),
        Command::VerifyAll => verify_all(&ctx),
    }
}

fn catalog(ctx: &Ctx) -> Outcome {
    let entries: Vec<Value> =
        BUILTIN_NAMES.iter().map(|n| json!({ "name": n, "description": describe(n).unwrap_or("") })).collect();
    ctx.emit("catalog", &json!({ "builtins": entries }), &[])?;
    Ok(true)
}

fn vertex_table(s: &SampledSubmanifold) -> Result<String, Failure> {
    let mut buf = Vec::new();
    s.write_csv(&mut buf)?;
    Ok(String::from_utf8_lossy(&buf).into_owned())
}

fn tamedness(ctx: &Ctx) -> Outcome {
    let s = ctx.sampled()?;
    let report = ctx.tamedness(&s)?;
    let table = if ctx.format == Format::Csv { vec![("vertices.csv".into(), vertex_table(&s)?)] } else { vec![] };
    ctx.emit("tamedness", &to_value(&report), &table)?;
    Ok(true)
}

fn require_tamed(report: &TamednessReport) -> Result<(), Failure> {
    if report.tamed {
        Ok(())
    } else {
        Err(Failure::Violated(format!(
            "immersion is not tamed: a(M) estimate {} ({:?}, divergent = {})",
            report.a_estimate, report.status, report.divergent
        )))
    }
}

fn properness(ctx: &Ctx) -> Outcome {
    let s = ctx.sampled()?;
    let report = ctx.tamedness(&s)?;
    require_tamed(&report)?;
    let cert = certify(&s, &report)?;
    ctx.emit("properness", &to_value(&cert), &[])?;
    Ok(cert.proper)
}

struct FlowRun {
    summary: Value,
    tables: Vec<(String, String)>,
    ok: bool,
}

fn run_flow(ctx: &Ctx, s: &SampledSubmanifold, report: &TamednessReport) -> Result<FlowRun, Failure> {
    let c = report.c.expect("tamed report carries c");
    let r0 = report.extrinsic_r0.expect("tamed report carries r0");
    let level = level_set_gamma(s, r0)?;
    let max_rho = (0..s.len()).filter(|&v| !s.on_boundary(v)).map(|v| s.rho_n()[v]).fold(0.0, f64::max);
    let t_max = ctx.t_max.unwrap_or((0.6 * max_rho - r0).max(ctx.step));
    let stride = (level.seeds.len() / ctx.seeds.max(1)).max(1);
    let mut trajectories = Vec::new();
    let mut tables = Vec::new();
    let mut ok = level.regular;
    for (k, seed) in level.seeds.iter().step_by(stride).take(ctx.seeds).enumerate() {
        let traj = integrate_flow(s.chart(), seed, c, t_max, ctx.step)?;
        let check = check_trajectory(&traj)?;
        ok &= check.holds;
        if ctx.format == Format::Csv {
            let mut buf = Vec::new();
            write_trajectory_csv(&traj, &mut buf)?;
            tables.push((format!("trajectory_{k:03}.csv"), String::from_utf8_lossy(&buf).into_owned()));
        }
        trajectories.push(json!({
            "seed": traj.seed,
            "termination": to_value(&traj.termination),
            "final_time": traj.times.last(),
            "check": to_value(&check),
        }));
    }
    let critical = find_critical_points(s)?;
    let crit_inside = critical.iter().all(|p| p.rho_n < r0);
    let end_radii = ctx.end_radii.clone().unwrap_or_else(|| vec![0.4 * max_rho, 0.6 * max_rho, 0.8 * max_rho]);
    let ends = count_ends(s, &end_radii)?;
    ok &= crit_inside && ends.stable;
    let summary = json!({
        "c": c,
        "r0": r0,
        "step": ctx.step,
        "t_max": t_max,
        "level_set": { "seeds": level.seeds.len(), "regular": level.regular, "min_band_psi": level.min_band_psi },
        "trajectories": trajectories,
        "critical_points": {
            "count": critical.len(),
            "max_rho_n": critical.iter().map(|p| p.rho_n).fold(f64::NEG_INFINITY, f64::max),
            "all_inside_r0": crit_inside,
        },
        "ends": to_value(&ends),
        "ok": ok,
    });
    Ok(FlowRun { summary, tables, ok })
}

fn flow(ctx: &Ctx) -> Outcome {
    let s = ctx.sampled()?;
    let report = ctx.tamedness(&s)?;
    require_tamed(&report)?;
    let run = run_flow(ctx, &s, &report)?;
    ctx.emit("flow", &run.summary, &run.tables)?;
    Ok(run.ok)
}

fn spectral(ctx: &Ctx) -> Outcome {
    let l = ctx.l.unwrap_or(2);
    let mu = ctx.mu.unwrap_or(0.0);
    let big_r = ctx.big_r.unwrap_or(1.0);
    let sol = radial_eigenvalue_tol(l, mu, big_r, ctx.tol)?;
    let lemma = lemma2_check(&sol);
    let residual = sol.ode_residual();
    let residual_ok = residual <= 1e-8 * (1.0 + sol.lambda);
    let mut report = json!({
        "l": l,
        "mu": mu,
        "R": big_r,
        "lambda1": sol.lambda,
        "nodes": sol.t.len(),
        "v_at_R": sol.v.last(),
        "ode_residual": residual,
        "lemma2": to_value(&lemma),
    });
    if let (Some(m), Some(c)) = (ctx.m, ctx.c) {
        let tb = tone_upper_bound(m, c, mu, ctx.r0.unwrap_or(1.0))?;
        report["tone_bound"] = to_value(&tb);
    }
    let mut buf = Vec::new();
    sol.write_csv(&mut buf).map_err(|e| Failure::Usage(e.to_string()))?;
    ctx.emit("spectral", &report, &[("radial.csv".into(), String::from_utf8_lossy(&buf).into_owned())])?;
    Ok(lemma.holds && residual_ok)
}

/// Default ball radius for the oracle comparison.
fn default_ball_radius(s: &SampledSubmanifold, r0: f64) -> f64 {
    let max_rho = (0..s.len()).filter(|&v| !s.on_boundary(v)).map(|v| s.rho_n()[v]).fold(0.0, f64::max);
    (0.4 * max_rho).max(2.0 * r0)
}

fn oracle(ctx: &Ctx) -> Outcome {
    if ctx.cfg.is_none() {
        let n = ctx.resolution.as_ref().map_or(200, |r| r[0]);
        let problem = DiscreteDirichletProblem::new(&unit_disc(n)?, None)?;
        let eig = lambda1_dirichlet(&problem)?;
        let f = problem.sample(|x| 1.0 - x[0] * x[0] - x[1] * x[1]);
        let (lo, hi) = barta_sandwich(&problem, &f)?;
        let (elo, ehi) = barta_sandwich(&problem, &eig.vector)?;
        let shooting = radial_eigenvalue_tol(2, 0.0, 1.0, ctx.tol)?.lambda;
        let ok = lo <= eig.lambda && eig.lambda <= hi && (ehi - elo) <= 2e-6;
        let report = json!({
            "domain": "unit_disc",
            "resolution": n,
            "unknowns": problem.len(),
            "lambda1": eig.lambda,
            "residual": eig.residual,
            "iterations": eig.iterations,
            "shooting_lambda1": shooting,
            "relative_difference": (eig.lambda - shooting).abs() / shooting,
            "barta_one_minus_r2": [lo, hi],
            "barta_eigenvector": [elo, ehi],
            "ok": ok,
        });
        if let (Some(dir), Format::Csv) = (&ctx.output, ctx.format) {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(e.to_string()))?;
            let k = std::fs::File::create(dir.join("stiffness.mtx")).map_err(|e| Failure::Usage(e.to_string()))?;
            let m = std::fs::File::create(dir.join("mass.mtx")).map_err(|e| Failure::Usage(e.to_string()))?;
            problem.write_matrix_market(k, m).map_err(|e| Failure::Usage(e.to_string()))?;
        }
        ctx.emit("oracle", &report, &[])?;
        return Ok(ok);
    }
    let s = ctx.sampled()?;
    let report = ctx.tamedness(&s)?;
    require_tamed(&report)?;
    let rep = run_corollary(ctx, &s, &report)?;
    ctx.emit("oracle", &to_value(&rep), &[])?;
    Ok(rep.holds)
}

fn run_corollary(
    ctx: &Ctx,
    s: &SampledSubmanifold,
    report: &TamednessReport,
) -> Result<tamed_geometry::oracle::CorollaryReport, Failure> {
    let c = report.c.expect("tamed report carries c");
    let r0 = report.extrinsic_r0.expect("tamed report carries r0");
    let big_r = ctx.big_r.unwrap_or_else(|| default_ball_radius(s, r0));
    Ok(corollary_check(s, c, r0, big_r)?)
}

fn verify_all(ctx: &Ctx) -> Outcome {
    let s = ctx.sampled()?;
    let report = ctx.tamedness(&s)?;
    if !report.tamed {
        let out = json!({ "tamedness": to_value(&report), "ok": false });
        ctx.emit("verify_all", &out, &[])?;
        return Err(Failure::Violated(format!(
            "immersion is not tamed: a(M) estimate {} ({:?}, divergent = {})",
            report.a_estimate, report.status, report.divergent
        )));
    }
    let cert = certify(&s, &report)?;
    let flow = run_flow(ctx, &s, &report)?;
    let c = report.c.expect("tamed report carries c");
    let r0 = report.extrinsic_r0.expect("tamed report carries r0");
    let tone = tone_upper_bound(s.chart().dim(), c, s.chart().ambient().kappa(), r0)?;
    let corollary = run_corollary(ctx, &s, &report)?;
    let ok = cert.proper && flow.ok && corollary.holds;
    let out = json!({
        "tamedness": to_value(&report),
        "properness": to_value(&cert),
        "flow": flow.summary,
        "tone_bound": to_value(&tone),
        "corollary": to_value(&corollary),
        "ok": ok,
    });
    ctx.emit("verify_all", &out, &flow.tables)?;
    Ok(ok)
}
