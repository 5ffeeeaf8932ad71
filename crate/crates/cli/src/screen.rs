use std::fmt::Write as _;
use std::path::PathBuf;

use rase::io::{read_csv_path, TaskKind};
use rase::{screen, CriterionSpec, RaseConfig};

use crate::manifest::{sibling, write_atomic, RunManifest};
use crate::Failure;

#[derive(clap::Args)]
pub struct Args {
    /// CSV file with a header row.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Name of the response column.
    #[arg(long)]
    response: Option<String>,
    /// regression or classification.
    #[arg(long)]
    task: Option<String>,
    /// bic, ebic, glm-bic, glm-ebic, knn or svm.
    #[arg(long)]
    criterion: Option<String>,
    /// Number of groups (winning subspaces).
    #[arg(long)]
    b1: Option<usize>,
    /// Subspaces drawn per group.
    #[arg(long)]
    b2: Option<usize>,
    /// Largest subspace size.
    #[arg(long)]
    d_max: Option<usize>,
    /// Re-weighting rounds after the first pass.
    #[arg(long, default_value_t = 0)]
    iterations: usize,
    /// Weight floor constant of the re-weighting rule.
    #[arg(long)]
    c0: Option<f64>,
    /// eBIC penalty strength.
    #[arg(long)]
    gamma: Option<f64>,
    /// Neighbours for the knn criterion.
    #[arg(long)]
    k: Option<usize>,
    /// Mark the top N features as selected.
    #[arg(long, conflicts_with = "alpha")]
    select: Option<usize>,
    /// Mark the top floor(alpha * d_max) features as selected.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, env = "RASE_SEED", default_value_t = 0)]
    seed: u64,
    /// Center and scale every feature column first.
    #[arg(long)]
    standardize: bool,
    /// Ranking CSV to write; the manifest goes next to it.
    #[arg(long, default_value = "ranking.csv")]
    out: PathBuf,
    /// Threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

fn criterion(args: &Args) -> Result<CriterionSpec, Failure> {
    let name = args.criterion.as_deref().ok_or_else(|| Failure::missing("--criterion"))?;
    let mut spec = CriterionSpec::from_name(name).ok_or_else(|| {
        Failure::usage(format!("--criterion: unknown criterion `{name}` (bic, ebic, glm-bic, glm-ebic, knn, svm)"))
    })?;
    match (&mut spec, args.gamma) {
        (CriterionSpec::LinearEbic { gamma } | CriterionSpec::GlmEbic { gamma }, Some(v)) => *gamma = v,
        (_, Some(_)) => return Err(Failure::usage("--gamma: only the eBIC criteria take gamma")),
        _ => {}
    }
    match (&mut spec, args.k) {
        (CriterionSpec::KnnLoo { k }, Some(v)) => *k = v,
        (_, Some(_)) => return Err(Failure::usage("--k: only the knn criterion takes k")),
        _ => {}
    }
    Ok(spec)
}

pub fn run(args: Args, argv: Vec<String>) -> Result<(), Failure> {
    let data_path = args.data.clone().ok_or_else(|| Failure::missing("--data"))?;
    let response = args.response.clone().ok_or_else(|| Failure::missing("--response"))?;
    let task_name = args.task.as_deref().ok_or_else(|| Failure::missing("--task"))?;
    let task = TaskKind::parse(task_name)
        .ok_or_else(|| Failure::usage(format!("--task: expected regression or classification, got `{task_name}`")))?;
    let spec = criterion(&args)?;
    if let Some(alpha) = args.alpha {
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Failure::usage(format!("--alpha: must exceed 1, got {alpha}")));
        }
    }

    let mut manifest = RunManifest::start("screen", argv, args.seed);
    let mut data = read_csv_path(&data_path, &response, task)?;
    if args.standardize {
        data = data.standardize();
    }
    let mut cfg = RaseConfig {
        b1: args.b1.unwrap_or(RaseConfig::default().b1),
        b2: args.b2,
        d_max: args.d_max,
        iterations: args.iterations,
        n_select: args.select,
        seed: args.seed,
        workers: args.workers,
        ..RaseConfig::new(spec)
    };
    if let Some(c0) = args.c0 {
        cfg.c0 = c0;
    }
    if let Some(alpha) = args.alpha {
        let d_max = cfg.resolve(data.n(), data.p())?.d_max;
        cfg.n_select = Some(((alpha * d_max as f64).floor() as usize).clamp(1, data.p()));
    }
    let result = screen(&data, &cfg)?;

    let mut selected = vec![false; data.p()];
    for &j in &result.selected {
        selected[j] = true;
    }
    let mut csv = String::from("rank,feature_name,eta_hat,selected\n");
    for (rank, &j) in result.ranking.iter().enumerate() {
        let _ = writeln!(csv, "{},{},{},{}", rank + 1, data.feature_name(j), result.eta_hat[j], selected[j]);
    }
    write_atomic(&args.out, csv.as_bytes())?;

    println!("{:>5}  {:<24} {:>8}", "rank", "feature", "eta_hat");
    for (rank, &j) in result.selected.iter().enumerate() {
        println!("{:>5}  {:<24} {:>8.4}", rank + 1, data.feature_name(j), result.eta_hat[j]);
    }
    for w in &result.diagnostics.warnings {
        eprintln!("warning: {}", serde_json::to_string(w).unwrap_or_default());
    }

    let manifest_path = sibling(&args.out, "manifest.json");
    manifest.config = serde_json::json!({
        "data": data_path,
        "response": response,
        "task": task,
        "standardize": args.standardize,
        "screening": result.diagnostics.config,
        "workers": args.workers,
    });
    manifest.outputs = vec![args.out.clone(), manifest_path.clone()];
    manifest.finish(&manifest_path)?;
    Ok(())
}
