use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use clarklab::cauchy::EVAL_GUARD;
use clarklab::charfn::{CharFnEvaluator, ThetaMethod};
use clarklab::clark::{assemble_clark, phi_direct};
use clarklab::linalg::op_norm;
use clarklab::measure::FiberFunction;
use clarklab::model::{theta_coefficients_auto, ModelSpace};
use clarklab::perturbation::GammaDefects;
use clarklab::scenario::Scenario;
use clarklab::taylor::TaylorRep;
use clarklab::verify::{run_suite, Suite};
use clarklab::{CMatrix, CVector, ClarkError, C64};
use serde_json::json;

#[derive(Parser)]
#[command(name = "clarklab", version, about = "Clark operator numerical lab")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Check the isometry condition and star-cyclicity of a scenario.
    Validate { scenario: PathBuf },
    /// Evaluate the characteristic function at a set of points and write CSV.
    Charfn {
        scenario: PathBuf,
        /// `ray:<turns>:<count>`, `grid:<count>`, `circle:<count>:<radius>` or `list:<re>,<im>;...`
        #[arg(long)]
        points: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a verification suite and print (or write) the JSON report.
    Verify {
        scenario: PathBuf,
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply the adjoint Clark operator to atom values, or recover atom
    /// values from power-series coefficients.
    Clark {
        scenario: PathBuf,
        /// CSV with `atom,component,re,im` (adjoint) or `power,component,re,im` (direct).
        #[arg(long)]
        f: PathBuf,
        #[arg(long, value_enum)]
        direction: Direction,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Adjoint,
    Direct,
}

/// Input problems exit with 2, failed checks with 1.
enum Failure {
    Input(anyhow::Error),
    Check(anyhow::Error),
}

impl From<ClarkError> for Failure {
    fn from(e: ClarkError) -> Self {
        match e {
            ClarkError::Parse { .. } | ClarkError::InvalidMeasure(_) | ClarkError::DimensionMismatch(_) => {
                Failure::Input(e.into())
            }
            other => Failure::Check(other.into()),
        }
    }
}

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Commands::Validate { scenario } => cmd_validate(&scenario),
        Commands::Charfn { scenario, points, out } => cmd_charfn(&scenario, &points, &out),
        Commands::Verify { scenario, suite, seed, out } => cmd_verify(&scenario, &suite, seed, out.as_deref()),
        Commands::Clark { scenario, f, direction } => cmd_clark(&scenario, &f, direction),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(input)?;
    Scenario::from_json(&text).with_context(|| format!("parsing {}", path.display())).map_err(input)
}

fn cmd_validate(path: &Path) -> Result<bool, Failure> {
    let s = load(path)?;
    let report = s.measure.validate();
    let cyc = s.measure.star_cyclic_check();
    let pass = report.pass && cyc.cyclic;
    let out = json!({ "scenario": s.name, "validation": report, "star_cyclic": cyc, "pass": pass });
    println!("{}", serde_json::to_string_pretty(&out).map_err(input)?);
    Ok(pass)
}

fn parse_points(spec: &str) -> anyhow::Result<Vec<C64>> {
    let (kind, rest) = spec.split_once(':').ok_or_else(|| anyhow!("point spec `{spec}` has no kind prefix"))?;
    let num = |s: &str| s.trim().parse::<f64>().with_context(|| format!("bad number `{s}`"));
    let parts: Vec<&str> = rest.split(':').collect();
    Ok(match (kind, parts.as_slice()) {
        ("ray", [turns, count]) => {
            let xi = C64::from_polar(1.0, std::f64::consts::TAU * num(turns)?);
            (1..=num(count)? as i32).map(|k| xi * (1.0 - 0.5f64.powi(k))).collect()
        }
        ("grid", [count]) => {
            let n = num(count)? as usize;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n).map(|k| C64::from_polar(0.95 * ((k as f64 + 0.5) / n as f64).sqrt(), k as f64 * golden)).collect()
        }
        ("circle", [count, radius]) => {
            let n = num(count)? as usize;
            let r = num(radius)?;
            (0..n).map(|k| C64::from_polar(r, std::f64::consts::TAU * (k as f64 + 0.5) / n as f64)).collect()
        }
        ("list", _) => rest
            .split(';')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                let (re, im) = p.split_once(',').ok_or_else(|| anyhow!("point `{p}` is not `re,im`"))?;
                Ok(C64::new(num(re)?, num(im)?))
            })
            .collect::<anyhow::Result<_>>()?,
        _ => return Err(anyhow!("unrecognized point spec `{spec}`")),
    })
}

fn cmd_charfn(path: &Path, spec: &str, out: &Path) -> Result<bool, Failure> {
    let s = load(path)?;
    let points = parse_points(spec).map_err(input)?;
    let ev = CharFnEvaluator::new(&s.measure, &s.gamma)?;
    let d = s.d();
    let mut w = csv::Writer::from_path(out).with_context(|| format!("creating {}", out.display())).map_err(input)?;
    let mut header = vec!["z_re".to_string(), "z_im".into(), "method".into()];
    for r in 0..d {
        for c in 0..d {
            header.push(format!("theta_{r}{c}_re"));
            header.push(format!("theta_{r}{c}_im"));
        }
    }
    header.extend(["delta_norm".into(), "cross_residual".into(), "status".into()]);
    w.write_record(&header).map_err(input)?;
    let width = header.len();
    for z in points {
        let mut row = vec![z.re.to_string(), z.im.to_string(), "cauchy".to_string()];
        let (_, dist) = s.measure.nearest_atom(z);
        let eval = if dist < EVAL_GUARD {
            Err(ClarkError::TooCloseToAtom { z: z.to_string(), atom: s.measure.nearest_atom(z).0, dist })
        } else {
            ev.theta(z, ThetaMethod::Cauchy).and_then(|th| Ok((th, op_norm(&ev.delta(z)?))))
        };
        match eval {
            Ok((th, dn)) => {
                for r in 0..d {
                    for c in 0..d {
                        row.push(th[(r, c)].re.to_string());
                        row.push(th[(r, c)].im.to_string());
                    }
                }
                row.push(dn.to_string());
                let cross = match ev.theta(z, ThetaMethod::Resolvent) {
                    Ok(tr) => op_norm(&(tr - &th)).to_string(),
                    Err(_) => String::new(),
                };
                row.push(cross);
                row.push("ok".into());
            }
            Err(e) => {
                row.resize(width - 1, String::new());
                row.push(match e {
                    ClarkError::TooCloseToAtom { .. } => "too_close_to_atom".into(),
                    other => format!("error: {other}"),
                });
            }
        }
        w.write_record(&row).map_err(input)?;
    }
    w.flush().map_err(input)?;
    Ok(true)
}

fn cmd_verify(path: &Path, suite: &str, seed: u64, out: Option<&Path>) -> Result<bool, Failure> {
    let s = load(path)?;
    let suite: Suite = suite.parse().map_err(input)?;
    let report = run_suite(&s, suite, seed).map_err(|e| Failure::Check(anyhow!("{}: {e}", s.name)))?;
    let text = serde_json::to_string_pretty(&report).map_err(input)?;
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())).map_err(input)?,
        None => println!("{text}"),
    }
    for f in report.failures() {
        eprintln!("FAIL {}: residual {:e} > {:e}", f.check_id, f.residual, f.tolerance);
    }
    Ok(report.pass)
}

/// Rows of `(index, component, re, im)` from a CSV with a header line.
fn read_entries(path: &Path) -> anyhow::Result<Vec<(usize, usize, C64)>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| rec.get(k).ok_or_else(|| anyhow!("row {}: expected 4 columns", i + 2));
        let idx = field(0)?.parse::<usize>().with_context(|| format!("row {}", i + 2))?;
        let comp = field(1)?.parse::<usize>().with_context(|| format!("row {}", i + 2))?;
        let re = field(2)?.parse::<f64>().with_context(|| format!("row {}", i + 2))?;
        let im = field(3)?.parse::<f64>().with_context(|| format!("row {}", i + 2))?;
        out.push((idx, comp, C64::new(re, im)));
    }
    Ok(out)
}

fn cmd_clark(path: &Path, f_path: &Path, direction: Direction) -> Result<bool, Failure> {
    let s = load(path)?;
    let entries = read_entries(f_path).map_err(input)?;
    let ev = CharFnEvaluator::new(&s.measure, &s.gamma)?;
    let th = theta_coefficients_auto(&ev)?;
    let ms = ModelSpace::build(th, &GammaDefects::new(&s.gamma)?, s.n())?;
    let pair = assemble_clark(&ev, &ms)?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    match direction {
        Direction::Adjoint => {
            let mut f = FiberFunction::zeros(&s.measure);
            for (atom, comp, v) in entries {
                let slot = f
                    .values
                    .get_mut(atom)
                    .and_then(|a| a.get_mut(comp))
                    .ok_or_else(|| input(anyhow!("no fiber coordinate ({atom}, {comp})")))?;
                *slot = v;
            }
            let x = f.to_embedded(&s.measure);
            let img = pair.images.mul_right(&CMatrix::from_column_slice(s.n(), 1, x.as_slice()));
            let last = img.coeffs().iter().rposition(|c| c.norm() > 1e-13).unwrap_or(0);
            w.write_record(["power", "component", "re", "im"]).map_err(input)?;
            for (k, c) in img.coeffs().iter().enumerate().take(last + 1) {
                for l in 0..s.d() {
                    let v = c[(l, 0)];
                    w.write_record([k.to_string(), l.to_string(), v.re.to_string(), v.im.to_string()]).map_err(input)?;
                }
            }
        }
        Direction::Direct => {
            let k = ms.theta.degree();
            let mut coeffs = vec![CMatrix::zeros(s.d(), 1); k + 1];
            for (p, comp, v) in entries {
                if p > k || comp >= s.d() {
                    return Err(input(anyhow!("coefficient ({p}, {comp}) out of range")));
                }
                coeffs[p][(comp, 0)] = v;
            }
            let h = TaylorRep::new(coeffs);
            let off = ms.membership_residual(&h);
            if off > 1e-6 {
                eprintln!("warning: input is {off:.3e} away from the model space");
            }
            let rec = phi_direct(&ev, &h)?;
            let f = FiberFunction::from_embedded(&s.measure, &CVector::from_column_slice(rec.values.as_slice()));
            w.write_record(["atom", "component", "re", "im"]).map_err(input)?;
            for (j, v) in f.values.iter().enumerate() {
                for (c, x) in v.iter().enumerate() {
                    w.write_record([j.to_string(), c.to_string(), x.re.to_string(), x.im.to_string()]).map_err(input)?;
                }
            }
        }
    }
    w.flush().map_err(input)?;
    Ok(true)
}
