use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use cred_core::env::osm::{convert_osm, LatLon};
use cred_core::env::save_environment;
use cred_core::harness::{
    csv_rows, read_json, run_experiment, run_suite, summarize, write_csv, write_suite_outputs, ExperimentConfig,
    SuiteConfig, SuiteOutput,
};
use cred_core::EnvironmentSpec;

fn config_dir(path: &Path) -> Option<&Path> {
    path.parent().filter(|p| !p.as_os_str().is_empty())
}

/// `cred run`: one cell; writes `results.csv`, `summary.json` and the
/// per-iteration log with queries.
pub fn run(config_path: &Path, seed: Option<u64>, out: &Path) -> anyhow::Result<()> {
    let mut config: ExperimentConfig =
        read_json(config_path).with_context(|| format!("reading {}", config_path.display()))?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let logs = run_experiment(&config, config_dir(config_path))?;
    std::fs::create_dir_all(out)?;
    let rows = csv_rows(&config, &logs);
    write_csv(out.join("results.csv"), &rows)?;
    let summary = summarize(&rows, config.iterations, Vec::new());
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    std::fs::write(out.join("iterations.json"), serde_json::to_string(&logs)?)?;
    log::info!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

/// `cred suite`: all cells; output directory defaults to `results/`
/// beside the config.
pub fn suite(config_path: &Path, out: Option<PathBuf>) -> anyhow::Result<SuiteOutput> {
    let config: SuiteConfig = read_json(config_path).with_context(|| format!("reading {}", config_path.display()))?;
    let output = run_suite(&config, config_dir(config_path))?;
    let out = out.unwrap_or_else(|| config_dir(config_path).unwrap_or(Path::new(".")).join("results"));
    write_suite_outputs(&out, &output)?;
    if !output.summary.failures.is_empty() {
        log::warn!("{} cell(s) failed; see summary.json", output.summary.failures.len());
    }
    for c in &output.summary.conditions {
        let fmt = |m: Option<cred_core::harness::MeanStd>| match m {
            Some(m) => format!("{:.3} ± {:.3}", m.mean, m.std),
            None => "n/a".into(),
        };
        println!(
            "{:7} reward_diff {:>18}  policy_acc {:>14}  jaccard {:>14}  info_gain {:>14}",
            c.condition,
            fmt(c.reward_diff),
            fmt(c.policy_acc),
            fmt(c.jaccard),
            fmt(c.info_gain)
        );
    }
    Ok(output)
}

pub fn convert(input: &Path, radius: f64, center: &str, out: &Path) -> anyhow::Result<()> {
    if !(radius > 0.0) {
        bail!("radius must be positive");
    }
    let center: LatLon = center.parse()?;
    let xml = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let graph = convert_osm(&xml, center, radius)?;
    let env = EnvironmentSpec::graph(graph);
    save_environment(out, &env)?;
    log::info!("wrote graph with {} states to {}", env.num_states(), out.display());
    Ok(())
}
