use std::path::PathBuf;

use rase::data::Task;
use rase::io::write_csv;
use rase::{ExampleId, ExampleSpec};
use serde::Serialize;

use crate::manifest::{sibling, write_atomic, RunManifest};
use crate::Failure;

#[derive(clap::Args)]
pub struct Args {
    /// ex1, ex2, ex3, ex4, ex5, ex6 or ex8.
    #[arg(long)]
    example: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, env = "RASE_SEED")]
    seed: Option<u64>,
    /// Dataset CSV to write; `<stem>.json` holds the metadata.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Metadata that the CSV cannot carry.
#[derive(Serialize)]
struct Sidecar {
    example: ExampleId,
    n: usize,
    p: usize,
    seed: u64,
    task: Task,
    response: &'static str,
    /// 1-based positions of the true signals among the feature columns.
    signal_set: Vec<usize>,
}

pub fn run(args: Args, argv: Vec<String>) -> Result<(), Failure> {
    let name = args.example.as_deref().ok_or_else(|| Failure::missing("--example"))?;
    let id = ExampleId::parse(name)
        .ok_or_else(|| Failure::usage(format!("--example: unknown example `{name}` (ex1-ex6, ex8)")))?;
    let seed = args.seed.ok_or_else(|| Failure::missing("--seed"))?;
    let out = args.out.clone().ok_or_else(|| Failure::missing("--out"))?;

    let mut manifest = RunManifest::start("simulate", argv, seed);
    let spec = ExampleSpec {
        n: args.n,
        p: args.p,
        ..ExampleSpec::new(id, seed)
    };
    let labeled = spec.generate()?;
    let (n, p) = spec.shape();

    let mut csv = Vec::new();
    write_csv(&labeled.data, &mut csv)?;
    write_atomic(&out, &csv)?;

    let sidecar = Sidecar {
        example: id,
        n,
        p,
        seed,
        task: labeled.data.task(),
        response: "y",
        signal_set: labeled.signal_set.iter().map(|j| j + 1).collect(),
    };
    let sidecar_path = sibling(&out, "json");
    let mut text = serde_json::to_string_pretty(&sidecar).map_err(|e| Failure::from(rase::Error::from(e)))?;
    text.push('\n');
    write_atomic(&sidecar_path, text.as_bytes())?;

    let manifest_path = sibling(&out, "manifest.json");
    manifest.config = serde_json::to_value(&sidecar).map_err(|e| Failure::from(rase::Error::from(e)))?;
    manifest.outputs = vec![out.clone(), sidecar_path.clone(), manifest_path.clone()];
    manifest.finish(&manifest_path)?;
    println!("wrote {} ({n} rows, {p} features) and {}", out.display(), sidecar_path.display());
    Ok(())
}
