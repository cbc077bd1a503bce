//! Experiment configuration: command-line flags, an optional JSON config
//! file, and per-kind parameter defaults, merged so that the config file
//! overrides flags and flags override defaults.

use std::path::PathBuf;

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Flags shared by every experiment subcommand. Values from the config file
/// take precedence over these.
#[derive(Args, Debug)]
pub struct RunArgs {
    /// JSON experiment configuration; its entries override the other flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Random seed when the config file does not set one.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,

    /// Output directory when the config file does not set one.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Top-level layout of a config file. `parameters` is typed per experiment
/// kind; unknown keys are rejected at every level.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile<P> {
    kind: Option<String>,
    seed: Option<u64>,
    #[serde(default)]
    paths: Paths,
    parameters: Option<P>,
}

/// Input and output locations named by the config file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

/// A fully merged invocation, every default filled in.
pub struct Resolved<P> {
    pub kind: &'static str,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub parameters: P,
}

/// Merges defaults, flags, and the config file for one subcommand.
/// Errors are config errors: unreadable or malformed file (JSON errors keep
/// their line and column), a `kind` naming a different subcommand, or no
/// seed from either source.
pub fn resolve<P>(kind: &'static str, args: &RunArgs) -> Result<Resolved<P>, String>
where
    P: DeserializeOwned + Default,
{
    let file: Option<ConfigFile<P>> = match &args.config {
        None => None,
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            Some(
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?,
            )
        }
    };
    if let Some(declared) = file.as_ref().and_then(|f| f.kind.as_deref()) {
        if declared != kind {
            return Err(format!(
                "config file declares kind {declared:?} but the {kind} subcommand was invoked"
            ));
        }
    }
    let (file_seed, file_paths, file_params) = match file {
        Some(f) => (f.seed, f.paths, f.parameters),
        None => (None, Paths::default(), None),
    };
    let Some(seed) = file_seed.or(args.seed) else {
        return Err("seed is required: pass --seed or set \"seed\" in the config file".into());
    };
    let out_dir = file_paths
        .output
        .or_else(|| args.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Resolved {
        kind,
        seed,
        input: file_paths.input,
        out_dir,
        parameters: file_params.unwrap_or_default(),
    })
}

/// Parameters for `discrete-mle`: draw `n` coarse cells from the ground
/// truth `probs` under a half-singleton, half-merged partition law, then fit
/// by maximum likelihood at `checkpoints` evenly spaced sample sizes.
#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscreteMleParams {
    pub n: usize,
    pub probs: Vec<f64>,
    pub checkpoints: usize,
}

impl Default for DiscreteMleParams {
    fn default() -> Self {
        Self {
            n: 100_000,
            probs: vec![0.5, 0.3, 0.2],
            checkpoints: 10,
        }
    }
}

/// Parameters for `sq-query`: answer one statistical query on the built-in
/// four-context, three-label instance. `None` caps keep the library's
/// defaults; `dataset_size` replays a recorded dataset of that size instead
/// of drawing fresh samples, so a query needing more draws exhausts the
/// budget.
#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SqQueryParams {
    pub tau: f64,
    pub delta: f64,
    pub alpha: f64,
    pub n1_cap: Option<usize>,
    pub n2_cap: Option<usize>,
    pub dataset_size: Option<usize>,
}

impl Default for SqQueryParams {
    fn default() -> Self {
        Self {
            tau: 0.1,
            delta: 0.1,
            alpha: 0.5,
            n1_cap: None,
            n2_cap: None,
            dataset_size: None,
        }
    }
}

/// Parameters for `coarse-logreg`: train a softmax model from coarse labels
/// against a seeded synthetic ground truth, and a fine-label baseline on the
/// same schedule for comparison.
#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoarseLogregParams {
    pub n: usize,
    pub k: usize,
    pub steps: usize,
    pub lr: f64,
    pub tau: f64,
    pub delta: f64,
    pub alpha: f64,
    pub feature_bound: f64,
    pub n1_cap: Option<usize>,
    pub n2_cap: Option<usize>,
    pub fine_n: usize,
    pub test_n: usize,
}

impl Default for CoarseLogregParams {
    fn default() -> Self {
        Self {
            n: 2,
            k: 3,
            steps: 30,
            lr: 2.0,
            tau: 0.05,
            delta: 0.1,
            alpha: 0.5,
            feature_bound: 1.0,
            n1_cap: Some(2_000),
            n2_cap: Some(20_000),
            fine_n: 20_000,
            test_n: 2_000,
        }
    }
}

/// Parameters for `gaussian-mean`: observe `n_observations` coarse cells of
/// a Gaussian with mean `mu_star` and recover the mean by stochastic
/// gradient ascent. The partition comes from `paths.input` when set,
/// otherwise from `partition` (`halfline`, `voronoi`, or `relu`).
#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianMeanParams {
    pub partition: String,
    pub threshold: f64,
    pub sites: Option<Vec<Vec<f64>>>,
    pub dim: usize,
    pub mu_star: Option<Vec<f64>>,
    pub n_observations: usize,
    pub mc_samples: usize,
    pub step0: f64,
    pub iters: usize,
    pub averaging: bool,
    pub min_cell_hits: usize,
}

impl Default for GaussianMeanParams {
    fn default() -> Self {
        Self {
            partition: "halfline".into(),
            threshold: 0.0,
            sites: None,
            dim: 2,
            mu_star: None,
            n_observations: 400,
            mc_samples: 2_000,
            step0: 1.0,
            iters: 2_000,
            averaging: true,
            min_cell_hits: 20,
        }
    }
}

/// Parameters for `maxcut-demo`: reduce a graph (`paths.input` edge list, or
/// a built-in 4-cycle) to a coarse Gaussian instance, check the sampler
/// frequencies over `n_samples` draws, and round a witness mean perturbed by
/// uniform `noise` back to a cut.
#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaxcutDemoParams {
    pub opt: Option<f64>,
    pub n_samples: usize,
    pub noise: f64,
}

impl Default for MaxcutDemoParams {
    fn default() -> Self {
        Self {
            opt: None,
            n_samples: 100_000,
            noise: 0.0,
        }
    }
}

/// Parameters for `alpha-diag`. `mode` is `discrete` (information
/// preservation of a label partition law over `k` labels, probed along
/// `trials` directions) or `geometric` (worst-case uncut Gaussian mass over
/// `n_hyperplanes` random hyperplanes for a convex partition, built exactly
/// as in `gaussian-mean`).
#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlphaDiagParams {
    pub mode: String,
    pub k: usize,
    pub trials: usize,
    pub partition: String,
    pub threshold: f64,
    pub sites: Option<Vec<Vec<f64>>>,
    pub dim: usize,
    pub mu_star: Option<Vec<f64>>,
    pub n_hyperplanes: usize,
    pub mc_samples: usize,
    pub min_cell_hits: usize,
}

impl Default for AlphaDiagParams {
    fn default() -> Self {
        Self {
            mode: "discrete".into(),
            k: 3,
            trials: 64,
            partition: "voronoi".into(),
            threshold: 0.0,
            sites: None,
            dim: 2,
            mu_star: None,
            n_hyperplanes: 50,
            mc_samples: 2_000,
            min_cell_hits: 20,
        }
    }
}
