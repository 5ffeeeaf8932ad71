use std::path::PathBuf;

use rase::{run_bench, run_grid, BenchConfig};

use crate::manifest::{write_atomic, RunManifest};
use crate::Failure;

#[derive(clap::Args)]
pub struct Args {
    /// JSON config: example, replications, methods, quantiles, master_seed
    /// and an optional grid. With a grid only the grid tables are written.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Threads; 0 uses every core. Overrides the config.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
}

pub fn run(args: Args, argv: Vec<String>) -> Result<(), Failure> {
    let path = args.config.as_ref().ok_or_else(|| Failure::missing("--config"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("--config: cannot read {}: {e}", path.display())))?;
    let mut cfg = BenchConfig::from_json(&text)?;
    // RASE_SEED stands in for a master seed the config leaves out.
    let has_seed = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .is_some_and(|v| v.get("master_seed").is_some());
    if !has_seed {
        if let Ok(raw) = std::env::var("RASE_SEED") {
            cfg.master_seed = raw
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("RASE_SEED: expected a non-negative integer, got `{raw}`")))?;
        }
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }

    let mut manifest = RunManifest::start("bench", argv, cfg.master_seed);
    std::fs::create_dir_all(&args.out_dir)?;
    let dir = &args.out_dir;
    let mut outputs = Vec::new();
    let mut emit = |name: &str, body: String| -> Result<(), Failure> {
        let p = dir.join(name);
        write_atomic(&p, body.as_bytes())?;
        outputs.push(p);
        Ok(())
    };

    if cfg.grid.is_some() {
        let grid = run_grid(&cfg)?;
        let text = grid.to_csv();
        print!("{text}");
        emit("grid.csv", text)?;
        let json = serde_json::to_string_pretty(&grid).map_err(|e| Failure::from(rase::Error::from(e)))?;
        emit("grid.json", json + "\n")?;
    } else {
        let table = run_bench(&cfg)?;
        let text = table.to_text();
        print!("{text}");
        emit("mms.txt", text)?;
        emit("mms.csv", table.to_csv())?;
        emit("mms.json", table.to_json()? + "\n")?;
    }

    let manifest_path = dir.join("manifest.json");
    manifest.config = serde_json::to_value(&cfg).map_err(|e| Failure::from(rase::Error::from(e)))?;
    outputs.push(manifest_path.clone());
    manifest.outputs = outputs;
    manifest.finish(&manifest_path)?;
    Ok(())
}
