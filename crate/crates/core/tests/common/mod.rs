use std::path::PathBuf;

use tripwave::{Config, Params};

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.cfg"))
}

pub fn preset(name: &str) -> (Config, Params) {
    let cfg = Config::load(&config_path(name)).expect("shipped config loads");
    let p = Params::from_config(&cfg).expect("shipped config is valid");
    (cfg, p)
}
