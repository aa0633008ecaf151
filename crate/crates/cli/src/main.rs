use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hairlab::escape::{check_r_independence, classify, run_orbit, DEFAULT_HORIZON, DEFAULT_L_MAX};
use hairlab::functions::{check_semiconjugacy, criterion_halfplane, max_modulus_curve, FamilyKind, FunctionFamily};
use hairlab::hairs::{certify_hair_fast, head_start_order, trace_hair, HeadStart};
use hairlab::logtransform::{omega_domination_radius, verify_omega_domination, LogModel};
use hairlab::tractlab::{build_unit_sequences, verify_ahlfors, verify_plan, AhlforsModel, SequencePlan};
use hairlab::{Complex, HairError};
use hairlab_cli::{default_palette, parse_address, parse_complex, parse_kind, render, RenderJob};
use serde::Serialize;
use serde_json::{json, Value};

const VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "hairlab", version, about = "Escaping sets, hairs and slow-escape tracts")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct FamilyArgs {
    #[arg(long, default_value = "exp", value_parser = parse_kind)]
    family: FamilyKind,
    #[arg(long, default_value = "0.2", value_parser = parse_complex)]
    lambda: Complex,
    #[arg(long, default_value_t = 2)]
    m: u32,
}

impl FamilyArgs {
    fn build(&self) -> Result<FunctionFamily, HairError> {
        FunctionFamily::new(self.family, self.lambda, self.m)
    }
}

#[derive(Args, Clone)]
struct ClassArgs {
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: usize,
    #[arg(long = "R", default_value_t = 5.0)]
    r: f64,
    #[arg(long, default_value_t = DEFAULT_L_MAX)]
    lmax: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Iterate one point, lifting to log coordinates when needed.
    Orbit {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long, value_parser = parse_complex)]
        z0: Complex,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: usize,
        #[arg(long = "R", default_value_t = 5.0)]
        r: f64,
        #[arg(long, default_value_t = DEFAULT_L_MAX)]
        lmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Escaping, zip rate and fast level of one point.
    Classify {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long, value_parser = parse_complex)]
        z0: Complex,
        #[command(flatten)]
        class: ClassArgs,
        /// Also classify with this second radius and compare.
        #[arg(long = "R2")]
        r2: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify every pixel of a window; writes PNG and CSV.
    Render {
        #[command(flatten)]
        fam: FamilyArgs,
        /// re_min,re_max,im_min,im_max
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-2.0, 8.0, -4.0, 4.0])]
        window: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        width: u32,
        #[arg(long, default_value_t = 200)]
        height: u32,
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Trace a hair of λe^z and classify its points.
    Hair {
        #[arg(long, default_value = "0.2", value_parser = parse_complex)]
        lambda: Complex,
        #[arg(long, default_value = "0", value_parser = parse_address)]
        address: hairlab::logtransform::Address,
        #[arg(long, default_value_t = 0.0)]
        t_min: f64,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 64)]
        points: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long = "R", default_value_t = 5.0)]
        r: f64,
        #[arg(long, default_value_t = 15)]
        horizon: usize,
        #[arg(long, default_value_t = DEFAULT_L_MAX)]
        lmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Linear head-start order of two log-coordinate points.
    Headstart {
        #[arg(long, default_value = "0.2", value_parser = parse_complex)]
        lambda: Complex,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        w: Complex,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        zeta: Complex,
        #[arg(long = "K", default_value_t = 2.0)]
        k: f64,
        #[arg(long = "M", default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximum modulus on circles.
    Maxmod {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check e^{-z} semiconjugates f to the star map.
    Semiconj {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Tract(TractCmd),
    /// Distortion bound between two real parts.
    Ahlfors {
        #[arg(long, default_value = "strip")]
        model: String,
        /// Sequence plan supplying the tract for `--model tract`.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Radius R with Ω^n(r) <= ω^n(R)/s.
    Omega {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TractCmd {
    /// Construct the sequence plan with δ = η = θ = 1.
    Build {
        #[arg(long, default_value_t = 2)]
        stages: usize,
        #[arg(long, default_value_t = 1e-6)]
        quad_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify a plan file.
    Verify {
        plan: PathBuf,
        #[arg(long, default_value_t = 6)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Verification,
}

impl From<HairError> for Failure {
    fn from(e: HairError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, body: &T) -> Result<(), Failure> {
    let mut v = serde_json::to_value(body).map_err(|e| Failure::Usage(e.to_string()))?;
    let doc = match v.as_object_mut() {
        Some(map) => {
            let mut m = serde_json::Map::new();
            m.insert("version".into(), json!(VERSION));
            m.extend(std::mem::take(map));
            Value::Object(m)
        }
        None => json!({ "version": VERSION, "result": v }),
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Usage(e.to_string()))?;
    s.push('\n');
    emit(out, s.as_bytes())
}

fn verdict(holds: bool) -> Result<(), Failure> {
    if holds {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn threads() -> Option<usize> {
    std::env::var("HAIRLAB_THREADS").ok().and_then(|s| s.parse().ok())
}

fn load_plan(p: &Path) -> Result<SequencePlan, Failure> {
    Ok(SequencePlan::from_json(&fs::read_to_string(p)?)?)
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Orbit { fam, z0, horizon, r, lmax, out } => {
            let orbit = run_orbit(&fam.build()?, z0, horizon)?;
            // inadmissible R leaves the orbit unclassified
            let orbit = match orbit.clone().classified(r, lmax) {
                Ok(o) => o,
                Err(HairError::InadmissibleR(_)) => orbit,
                Err(e) => return Err(e.into()),
            };
            emit_json(&out, &orbit)
        }
        Cmd::Classify { fam, z0, class, r2, out } => {
            let orbit = run_orbit(&fam.build()?, z0, class.horizon)?;
            let v = classify(&orbit, class.r, class.lmax)?;
            match r2 {
                None => emit_json(&out, &v),
                Some(r2) => {
                    let rep = check_r_independence(&orbit, class.r, r2, class.lmax)?;
                    let holds = rep.verdicts_agree && rep.levels_within_shift;
                    emit_json(&out, &json!({ "verdict": v, "r_independence": rep, "holds": holds }))?;
                    verdict(holds)
                }
            }
        }
        Cmd::Render { fam, window, width, height, class, out, csv } => {
            if window.len() != 4 {
                return Err(Failure::Usage("--window takes re_min,re_max,im_min,im_max".into()));
            }
            let job = RenderJob {
                family: fam.build()?,
                window: (window[0], window[1], window[2], window[3]),
                pixels: (width, height),
                horizon: class.horizon,
                r: class.r,
                l_max: class.lmax,
                palette: default_palette(),
            };
            let img = render(&job, threads())?;
            fs::write(&out, img.png(&job.palette).map_err(|e| Failure::Usage(e.to_string()))?)?;
            let csv_path = csv.unwrap_or_else(|| out.with_extension("csv"));
            fs::write(csv_path, img.csv().map_err(|e| Failure::Usage(e.to_string()))?)?;
            let summary = json!({ "counts": img.counts(), "nesting_violations": img.nesting_violations() });
            emit_json(&None, &summary)?;
            verdict(img.nesting_violations() == 0)
        }
        Cmd::Hair { lambda, address, t_min, t_max, points, tol, r, horizon, lmax, out, report } => {
            let family = FunctionFamily::new(FamilyKind::ExpFamily, lambda, 1)?;
            let trace = trace_hair(&family, &address, t_min..=t_max, points, tol)?;
            let rep = certify_hair_fast(&trace, r, horizon, lmax)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Failure::Usage(e.to_string());
            w.write_record(["t", "re", "im", "fast_level"]).map_err(io)?;
            for row in &rep.rows {
                let level = row.verdict.fast_level.level().map(|l| l.to_string()).unwrap_or_default();
                w.write_record([row.t.to_string(), row.z.re.to_string(), row.z.im.to_string(), level]).map_err(io)?;
            }
            emit(&out, &w.into_inner().map_err(|e| Failure::Usage(e.to_string()))?)?;
            if let Some(p) = report {
                emit_json(&Some(p), &json!({ "trace": trace, "report": rep }))?;
            }
            Ok(())
        }
        Cmd::Headstart { lambda, w, zeta, k, m, n_max, out } => {
            let family = FunctionFamily::new(FamilyKind::ExpFamily, lambda, 1)?;
            let res: HeadStart = head_start_order(&LogModel::explicit_exp(&family)?, w, zeta, k, m, n_max)?;
            emit_json(&out, &res)
        }
        Cmd::Maxmod { fam, r, out } => emit_json(&out, &max_modulus_curve(&fam.build()?, &r)?),
        Cmd::Semiconj { fam, samples, seed, tol, out } => {
            let f = fam.build()?;
            let g = FunctionFamily::star(f.m, f.lambda)?;
            let rep = check_semiconjugacy(&f, &g, Complex::new(-1.0, 0.0), samples, seed)?;
            let halfplane = criterion_halfplane(f.m, f.lambda);
            let holds = rep.max_residual < tol;
            emit_json(&out, &json!({ "report": rep, "criterion_halfplane": halfplane, "tol": tol, "holds": holds }))?;
            verdict(holds)
        }
        Cmd::Tract(TractCmd::Build { stages, quad_tol, out }) => {
            let plan = build_unit_sequences(stages, quad_tol)?;
            emit(&out, plan.to_json().as_bytes())
        }
        Cmd::Tract(TractCmd::Verify { plan, horizon, out }) => {
            let rep = verify_plan(&load_plan(&plan)?, horizon)?;
            emit_json(&out, &rep)?;
            verdict(rep.holds)
        }
        Cmd::Ahlfors { model, plan, a, b, out } => {
            let model = match (model.as_str(), plan) {
                ("strip", _) => AhlforsModel::Strip,
                ("tract", Some(p)) => {
                    let plan = load_plan(&p)?;
                    AhlforsModel::Tract { tract: plan.tract()?, quad_tol: plan.quad_tol }
                }
                ("tract", None) => return Err(Failure::Usage("--model tract needs --plan".into())),
                (m, _) => return Err(Failure::Usage(format!("unknown model {m:?} (strip, tract)"))),
            };
            let rep = verify_ahlfors(&model, a, b)?;
            emit_json(&out, &rep)?;
            verdict(rep.holds)
        }
        Cmd::Omega { eps, delta, r, n, out } => {
            let big_r = omega_domination_radius(eps, delta, r)?;
            let holds = verify_omega_domination(eps, delta, r, big_r, n);
            emit_json(&out, &json!({ "eps": eps, "delta": delta, "r": r, "R": big_r, "n": n, "holds": holds }))?;
            verdict(holds)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
