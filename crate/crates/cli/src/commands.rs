use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use haarfact::diagnostics::{rademacher_pairing_decay, sandwich_and_monotone_suite, weak_null_certificate};
use haarfact::dyadic::{haar, interval_of, DyadicInterval};
use haarfact::factorize::{factor_identity as run_identity, factor_through, FactorError, FactorOptions, IdentityParams};
use haarfact::faithful::{build_adapted, certificates_csv, BuildError, BuildOutcome, BuildParams};
use haarfact::operator::{self, write_dense, LinearOperator, CATALOGUE};
use haarfact::rng::{stream, stream_id};
use haarfact::{RiNormSpec, StepFunction};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Config;
use crate::{Diagnose, NormArgs, RunArgs, ZooCommand};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub status: &'static str,
    pub reason: String,
}

fn usage(e: impl Display) -> Failure {
    Failure { code: 1, status: "usage", reason: e.to_string() }
}

fn io_error(e: impl Display) -> Failure {
    Failure { code: 1, status: "io-error", reason: e.to_string() }
}

fn from_build(e: BuildError) -> Failure {
    match e {
        BuildError::Failed(report) => Failure { code: 2, status: "builder-failure", reason: report.to_string() },
        e @ BuildError::NoLargeDiagonal { .. } => Failure { code: 3, status: "no-large-diagonal", reason: e.to_string() },
        BuildError::Invalid(e) => usage(e),
    }
}

fn from_factor(e: FactorError) -> Failure {
    match e {
        e @ FactorError::Refused { .. } => Failure { code: 4, status: "refused", reason: e.to_string() },
        e @ FactorError::NoLargeDiagonal { .. } => Failure { code: 3, status: "no-large-diagonal", reason: e.to_string() },
        FactorError::Build(b) => from_build(b),
        FactorError::Invalid(e) => usage(e),
    }
}

#[derive(Serialize)]
struct Timing {
    stage: &'static str,
    seconds: f64,
}

#[derive(Serialize)]
struct RunRecord {
    command: &'static str,
    version: &'static str,
    config: Config,
    seed: u64,
    probes: usize,
    timings: Vec<Timing>,
    exit_status: u8,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(skip_serializing_if = "serde_json::Map::is_empty", flatten)]
    sections: serde_json::Map<String, Value>,
}

struct Run {
    out: PathBuf,
    record: RunRecord,
}

impl Run {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let v = f();
        self.record.timings.push(Timing { stage, seconds: start.elapsed().as_secs_f64() });
        v
    }

    fn section(&mut self, key: &str, value: impl Serialize) {
        self.record.sections.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| io_error(format!("{}: {e}", path.display())))
    }

    fn spec(&self) -> Result<RiNormSpec, Failure> {
        self.record.config.space.parse().map_err(usage)
    }

    fn operator(&mut self) -> Result<LinearOperator, Failure> {
        let cfg = self.record.config.clone();
        self.time("operator", || operator::zoo(&cfg.operator, cfg.resolution, cfg.seed)).map_err(usage)
    }

    fn build(&mut self, t: &LinearOperator, spec: &RiNormSpec) -> Result<BuildOutcome, Failure> {
        let cfg = &self.record.config;
        let params = BuildParams {
            delta: cfg.delta,
            eta: cfg.eta,
            restarts: cfg.restarts,
            seed: cfg.seed,
            target_entries: None,
        };
        let result = self.time("build", || build_adapted(t, spec, &params));
        match result {
            Ok(outcome) => {
                self.record_build(&outcome)?;
                Ok(outcome)
            }
            Err(e) => {
                if let BuildError::Failed(report) = &e {
                    self.section("failure", report);
                }
                Err(from_build(e))
            }
        }
    }

    fn record_build(&mut self, outcome: &BuildOutcome) -> Result<(), Failure> {
        self.write("system.json", &serde_json::to_string_pretty(&outcome.system).expect("serializable"))?;
        self.write("certificates.csv", &certificates_csv(&outcome.certificates))?;
        self.section(
            "build",
            json!({
                "j": outcome.system.len(),
                "grand_sum": outcome.grand_sum,
                "eta": outcome.eta,
                "dual_certificate": outcome.dual_certificate,
                "stop": outcome.stop,
                "certificates": outcome.certificates,
            }),
        );
        Ok(())
    }
}

fn resolve(args: &RunArgs) -> Result<Config, Failure> {
    let mut cfg = match &args.config {
        Some(path) => Config::from_file(path).map_err(|e| usage(format!("{e:#}")))?,
        None => Config::default(),
    };
    if let Some(v) = &args.space {
        cfg.space = v.clone();
    }
    if let Some(v) = &args.operator {
        cfg.operator = v.clone();
    }
    if let Some(v) = args.delta {
        cfg.delta = v;
    }
    if let Some(v) = args.eta {
        cfg.eta = v;
    }
    if let Some(v) = args.resolution {
        cfg.resolution = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.restarts {
        cfg.restarts = v;
    }
    Ok(cfg)
}

/// Runs `body` with a fresh record and always writes `run.json`, including on failure.
fn execute(
    command: &'static str,
    args: &RunArgs,
    body: impl FnOnce(&mut Run) -> Result<String, Failure>,
) -> Result<String, Failure> {
    let config = resolve(args)?;
    fs::create_dir_all(&args.out).map_err(|e| io_error(format!("{}: {e}", args.out.display())))?;
    let mut run = Run {
        out: args.out.clone(),
        record: RunRecord {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed: config.seed,
            config,
            probes: args.probes,
            timings: Vec::new(),
            exit_status: 0,
            status: "ok",
            reason: None,
            sections: serde_json::Map::new(),
        },
    };
    let result = body(&mut run);
    if let Err(f) = &result {
        run.record.exit_status = f.code;
        run.record.status = f.status;
        run.record.reason = Some(f.reason.clone());
    }
    run.write("run.json", &serde_json::to_string_pretty(&run.record).expect("serializable"))?;
    result
}

pub fn fhs_build(args: &RunArgs) -> Result<String, Failure> {
    execute("fhs-build", args, |run| {
        let spec = run.spec()?;
        let t = run.operator()?;
        let outcome = run.build(&t, &spec)?;
        Ok(format!(" J={} grand_sum={:e}", outcome.system.len(), outcome.grand_sum))
    })
}

pub fn factorize(args: &RunArgs) -> Result<String, Failure> {
    execute("factorize", args, |run| {
        let spec = run.spec()?;
        let t = run.operator()?;
        let outcome = run.build(&t, &spec)?;
        let cfg = &run.record.config;
        let opts = FactorOptions { probes: args.probes, seed: cfg.seed, eta: Some(cfg.eta), ..FactorOptions::default() };
        let result = run.time("factorize", || factor_through(&t, &outcome.system, &spec, &opts)).map_err(usage)?;
        run.section("factorization", &result);
        Ok(format!(" J={} certified_err={:e} probe_err={:e}", result.j, result.certified_err, result.probe_err))
    })
}

pub fn factor_identity(args: &RunArgs) -> Result<String, Failure> {
    execute("factor-identity", args, |run| {
        let spec = run.spec()?;
        let t = run.operator()?;
        let cfg = &run.record.config;
        let params = IdentityParams {
            delta: cfg.delta,
            eta: cfg.eta,
            restarts: cfg.restarts,
            seed: cfg.seed,
            probes: args.probes,
            ..IdentityParams::default()
        };
        let out = run.time("factor-identity", || run_identity(&t, &spec, &params)).map_err(from_factor)?;
        run.record_build(&out.build)?;
        run.section("identity", &out);
        Ok(format!(
            " J={} residual_bound={:e} residual_probe={:e}",
            out.factorization.j, out.residual_bound, out.residual_probe
        ))
    })
}

fn read_step(path: &Path) -> Result<StepFunction, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_error(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn norm(args: &NormArgs) -> Result<String, Failure> {
    let spec: RiNormSpec = args.space.parse().map_err(usage)?;
    let f = read_step(&args.input)?;
    emit(&format!("{}\n", spec.norm(&f)));
    if args.dual {
        let d = spec.dual_norm(&f);
        emit(&format!("{} {}\n", d.value, serde_json::to_string(&d.certificate).expect("serializable").trim_matches('"')));
    }
    Ok(String::new())
}

fn parse_set(s: &str) -> Result<Vec<DyadicInterval>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (l, o) = p.split_once(':').ok_or_else(|| usage(format!("`{p}` is not level:offset")))?;
            let level = l.trim().parse().map_err(|e| usage(format!("{p}: {e}")))?;
            let offset = o.trim().parse().map_err(|e| usage(format!("{p}: {e}")))?;
            DyadicInterval::new(level, offset).map_err(usage)
        })
        .collect()
}

/// Writes to stdout; a closed pipe (`| head`) ends output quietly.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(value: &impl Serialize) {
    emit(&format!("{}\n", serde_json::to_string_pretty(value).expect("serializable")));
}

pub fn diagnose(d: &Diagnose) -> Result<String, Failure> {
    match d {
        Diagnose::Decay { resolution, haar: j, input, set, from, to, seed, out } => {
            let g = match (j, input) {
                (Some(j), _) => haar(interval_of(*j).map_err(usage)?, *resolution).map_err(usage)?,
                (None, Some(path)) => read_step(path)?,
                (None, None) => {
                    let mut rng = stream(*seed, stream_id(0x60, *resolution as u64, 0, 0));
                    let values = (0..1usize << resolution.min(&24)).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    StepFunction::new(*resolution, values).map_err(usage)?
                }
            };
            let set = parse_set(set)?;
            let k = set.iter().map(|i| i.level()).max().unwrap_or(0);
            let lo = from.unwrap_or(k + 1);
            let hi = to.unwrap_or(g.resolution().saturating_sub(1));
            let table = rademacher_pairing_decay(&g, &set, *seed, lo..=hi).map_err(usage)?;
            let csv = table.to_csv();
            match out {
                Some(path) => fs::write(path, &csv).map_err(|e| io_error(format!("{}: {e}", path.display())))?,
                None => emit(&csv),
            }
            Ok(format!(" rows={}", table.rows.len()))
        }
        Diagnose::WeakNull { space, from, to, budget, seed } => {
            let spec: RiNormSpec = space.parse().map_err(usage)?;
            let cert = weak_null_certificate(&spec, *from, *to, *budget, *seed).map_err(usage)?;
            print_json(&cert);
            Ok(format!(" value={:e}", cert.value))
        }
        Diagnose::Sandwich { space, resolution, trials, seed } => {
            let spec: RiNormSpec = space.parse().map_err(usage)?;
            let report = sandwich_and_monotone_suite(&spec, *resolution, *trials, *seed).map_err(usage)?;
            print_json(&report);
            Ok(format!(
                " sandwich_violations={} monotone_violations={}",
                report.sandwich_violations, report.monotone_violations
            ))
        }
    }
}

pub fn zoo(z: &ZooCommand) -> Result<String, Failure> {
    match z {
        ZooCommand::List => {
            for e in CATALOGUE {
                emit(&format!("{}\t{}\t{}\n", e.name, e.params, e.summary));
            }
            Ok(format!(" entries={}", CATALOGUE.len()))
        }
        ZooCommand::Dump { operator, resolution, seed, out } => {
            let t = operator::zoo(operator, *resolution, *seed).map_err(usage)?;
            let file = fs::File::create(out).map_err(|e| io_error(format!("{}: {e}", out.display())))?;
            write_dense(&t, std::io::BufWriter::new(file)).map_err(usage)?;
            Ok(format!(" file={}", out.display()))
        }
    }
}
