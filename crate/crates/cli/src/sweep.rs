use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use tripwave::config::{is_known_key, parse_decimal};
use tripwave::{Config, Error};

use crate::args::SweepArgs;
use crate::commands::{dispatch, load_config, Outcome, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Lin,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub spacing: Spacing,
}

impl Axis {
    /// `key:min:max:n:lin|log`. The key `s` is the wave speed flag.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let bad = |why: &str| Error::Config(format!("axis `{text}`: {why}"));
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 5 {
            return Err(bad("expected key:min:max:n:lin|log"));
        }
        let key = parts[0].trim();
        if key != "s" && (!is_known_key(key) || key == "scenario") {
            return Err(bad("not a numeric config key"));
        }
        let min = parse_decimal(parts[1].trim()).map_err(|e| bad(&e))?;
        let max = parse_decimal(parts[2].trim()).map_err(|e| bad(&e))?;
        let n: usize = parts[3].trim().parse().map_err(|_| bad("n must be a positive integer"))?;
        if n == 0 {
            return Err(bad("n must be at least 1"));
        }
        let spacing = match parts[4].trim() {
            "lin" => Spacing::Lin,
            "log" => Spacing::Log,
            _ => return Err(bad("spacing must be lin or log")),
        };
        if spacing == Spacing::Log && (min <= 0.0 || max <= 0.0) {
            return Err(bad("log spacing needs positive bounds"));
        }
        Ok(Axis {
            key: key.to_string(),
            min,
            max,
            n,
            spacing,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.min];
        }
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Lin => self.min + t * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

/// Cartesian product, last axis varying fastest.
pub fn grid(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for ax in axes {
        let vals = ax.values();
        points = points
            .into_iter()
            .flat_map(|p| {
                vals.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub index: usize,
    pub values: Vec<f64>,
    pub outcome: Status,
    pub headline: Option<f64>,
    pub path: PathBuf,
}

/// `--jobs`, then `TRIPWAVE_JOBS`, then the number of processors.
pub fn job_count(flag: Option<usize>) -> usize {
    flag.or_else(|| std::env::var("TRIPWAVE_JOBS").ok()?.trim().parse().ok())
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
        .max(1)
}

fn run_point(base: &Config, a: &SweepArgs, axes: &[Axis], index: usize, values: &[f64]) -> RunRecord {
    let dir = a.out.join(format!("point_{index:04}"));
    let mut record = RunRecord {
        index,
        values: values.to_vec(),
        outcome: Status::Error,
        headline: None,
        path: dir.clone(),
    };
    let mut cfg = base.clone();
    let mut argv = vec![a.command.clone()];
    for (ax, &v) in axes.iter().zip(values) {
        if ax.key == "s" {
            argv.push("--s".into());
            argv.push(format!("{v:?}"));
        } else if cfg.set(&ax.key, v).is_err() {
            return record;
        }
    }
    let cfg_path = dir.join("config.cfg");
    if fs::create_dir_all(&dir).is_err() || fs::write(&cfg_path, cfg.to_text()).is_err() {
        return record;
    }
    argv.extend([
        "--config".into(),
        cfg_path.display().to_string(),
        "--out".into(),
        dir.display().to_string(),
    ]);
    argv.extend(a.rest.iter().cloned());
    let mut out = Vec::new();
    let mut err = Vec::new();
    let Outcome { status, headline } = dispatch(&argv, &mut out, &mut err);
    let _ = fs::write(dir.join("stdout.txt"), &out);
    if !err.is_empty() {
        let _ = fs::write(dir.join("stderr.txt"), &err);
    }
    record.outcome = status;
    record.headline = headline;
    record
}

pub fn write_summary(path: &Path, axes: &[Axis], records: &[RunRecord]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write!(f, "index")?;
    for ax in axes {
        write!(f, ",{}", ax.key)?;
    }
    writeln!(f, ",outcome,headline,path")?;
    for r in records {
        write!(f, "{}", r.index)?;
        for v in &r.values {
            write!(f, ",{v:.12e}")?;
        }
        let headline = r.headline.map_or_else(String::new, |h| format!("{h:.12e}"));
        let rel = r.path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        writeln!(f, ",{},{headline},{rel}", r.outcome.name())?;
    }
    f.flush()
}

pub fn run(a: &SweepArgs, out: &mut dyn Write) -> Result<Outcome, Error> {
    if a.command == "sweep" {
        return Err(Error::Config("a sweep cannot run another sweep".into()));
    }
    let axes = a.axis.iter().map(|t| Axis::parse(t)).collect::<Result<Vec<_>, _>>()?;
    for (i, ax) in axes.iter().enumerate() {
        if axes[..i].iter().any(|b| b.key == ax.key) {
            return Err(Error::Config(format!("axis `{}` given twice", ax.key)));
        }
    }
    let base = load_config(&a.config)?;
    fs::create_dir_all(&a.out)?;
    let points = grid(&axes);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(job_count(a.jobs))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut records: Vec<RunRecord> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(i, v)| run_point(&base, a, &axes, i, v))
            .collect()
    });
    records.sort_by_key(|r| r.index);
    write_summary(&a.out.join("summary.csv"), &axes, &records)?;
    for name in ["pass", "fail", "hypothesis-violated", "error"] {
        let n = records.iter().filter(|r| r.outcome.name() == name).count();
        writeln!(out, "{name} {n}")?;
    }
    writeln!(out, "summary {}", a.out.join("summary.csv").display())?;
    Ok(Outcome {
        status: Status::Pass,
        headline: Some(records.len() as f64),
    })
}
