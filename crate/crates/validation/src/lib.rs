//! Helpers for the acceptance run: shipped configurations and the verdict table.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use tripwave::pde::SimConfig;
use tripwave::{Config, Params};

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.cfg"))
}

pub fn preset(name: &str) -> tripwave::Result<(Config, Params)> {
    let cfg = Config::load(&config_path(name))?;
    let p = Params::from_config(&cfg)?;
    Ok((cfg, p))
}

pub fn sim_preset(name: &str) -> tripwave::Result<(Params, SimConfig)> {
    let (cfg, p) = preset(name)?;
    Ok((p, SimConfig::from_config(&cfg, None)?))
}

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Verdict {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {} ({:.2} s): {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// Run `f`, time it and turn errors into a failing verdict.
pub fn check<F>(id: u32, title: &'static str, f: F) -> Verdict
where
    F: FnOnce() -> tripwave::Result<(bool, String)>,
{
    let t = Instant::now();
    let (pass, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let v = Verdict {
        id,
        title,
        pass,
        detail,
        elapsed: t.elapsed(),
    };
    println!("{}", v.line());
    v
}
