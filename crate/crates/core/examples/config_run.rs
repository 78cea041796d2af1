//! Drives a run from a key = value configuration, as the command-line tool
//! does, and writes CSV and SVG files.
//!
//! cargo run --release --example config_run -- [OUT_DIR]

use qthermo::cli::{self, RunConfig, Session};

const CONFIG: &str = "
# short trajectory at a lower temperature
temp = 0.1
alpha = 0.3
t_end = 20
svg = true
";

fn main() -> qthermo::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.apply_text(CONFIG)?;
    cfg.out_dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "out/config_run".into())
        .into();
    let mut session = Session::new(cfg)?;
    for path in cli::run_trajectory(&mut session)?
        .into_iter()
        .chain(cli::dump_kernels(&mut session)?)
    {
        println!("wrote {}", path.display());
    }
    Ok(())
}
