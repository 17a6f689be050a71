use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use idcor::baselines::BaselineMethod;
use idcor::data::ShuffleMode;
use idcor::estimators::{
    Estimator, MleAggregation, MleParams, TwoNNParams, DEFAULT_EIGEN_TOLERANCE,
};
use idcor::synth::{BaseDistribution, Scenario, TrigCase};

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "idcor",
    version,
    about = "Intrinsic-dimension correlation between paired datasets"
)]
pub struct Cli {
    /// Seed for every random draw (permutations, subsampling, generators, weights).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,

    /// Keep a seeded random subset of N rows (the same rows in every input).
    #[arg(long, global = true)]
    pub sample: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Estimate the intrinsic dimension of one dataset.
    Id(IdArgs),
    /// IdCor between two row-aligned datasets, with a permutation p-value.
    Corr(CorrArgs),
    /// A reference similarity index between two datasets.
    Baseline(BaselineArgs),
    /// Generate a synthetic dataset or pair.
    Synth(SynthArgs),
    /// Pairwise correlation matrix over several datasets.
    Matrix(MatrixArgs),
    /// Shuffle the rows of a dataset, fully or within label groups.
    Shuffle(ShuffleArgs),
    /// Push a dataset through a random LeakyReLU network.
    Mlp(MlpArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Id(_) => "id",
            Command::Corr(_) => "corr",
            Command::Baseline(_) => "baseline",
            Command::Synth(_) => "synth",
            Command::Matrix(_) => "matrix",
            Command::Shuffle(_) => "shuffle",
            Command::Mlp(_) => "mlp",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorName {
    Twonn,
    Mle,
    Pca,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    InverseMean,
    Mean,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimatorArgs {
    #[arg(long, value_enum, default_value_t = EstimatorName::Twonn)]
    pub estimator: EstimatorName,
    /// MLE neighbor count.
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    /// MLE pooling of per-point estimates.
    #[arg(long, value_enum, default_value_t = Aggregation::InverseMean)]
    pub aggregation: Aggregation,
    /// TwoNN fraction of largest ratios left out of the fit.
    #[arg(long, default_value_t = 0.1)]
    pub discard: f64,
    /// PCA relative eigenvalue cutoff.
    #[arg(long, default_value_t = DEFAULT_EIGEN_TOLERANCE)]
    pub tolerance: f64,
}

impl EstimatorArgs {
    pub fn estimator(&self) -> Estimator {
        match self.estimator {
            EstimatorName::Twonn => Estimator::Twonn(TwoNNParams {
                discard_fraction: self.discard,
            }),
            EstimatorName::Mle => Estimator::Mle(MleParams {
                k: self.k,
                aggregation: match self.aggregation {
                    Aggregation::InverseMean => MleAggregation::InverseMean,
                    Aggregation::Mean => MleAggregation::Mean,
                },
            }),
            EstimatorName::Pca => Estimator::Pca {
                eigen_tolerance: self.tolerance,
            },
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    /// The first CSV row is a header (auto-detected when neither flag is given).
    #[arg(long, conflicts_with = "no_header")]
    pub header: bool,
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct IdArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub csv: InputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CorrArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    /// Permutations for the p-value; 0 skips the test.
    #[arg(long, default_value_t = idcor::metric::DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    /// Include every permuted joint estimate in the report.
    #[arg(long)]
    pub keep_samples: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub csv: InputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineName {
    Dcor,
    CkaLinear,
    CkaRbf,
    Cca,
    Svcca,
}

#[derive(Debug, Args, Serialize)]
pub struct BaselineFlags {
    /// RBF bandwidth as a multiple of the median pairwise distance.
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth: f64,
    /// SVCCA fraction of variance kept by the SVD step.
    #[arg(long, default_value_t = 0.99)]
    pub variance_kept: f64,
}

impl BaselineFlags {
    pub fn method(&self, name: BaselineName) -> BaselineMethod {
        match name {
            BaselineName::Dcor => BaselineMethod::Dcor,
            BaselineName::CkaLinear => BaselineMethod::CkaLinear,
            BaselineName::CkaRbf => BaselineMethod::CkaRbf {
                bandwidth_multiplier: self.bandwidth,
            },
            BaselineName::Cca => BaselineMethod::Cca,
            BaselineName::Svcca => BaselineMethod::Svcca {
                variance_kept: self.variance_kept,
            },
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BaselineArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long, value_enum)]
    pub method: BaselineName,
    #[command(flatten)]
    #[serde(flatten)]
    pub flags: BaselineFlags,
    #[command(flatten)]
    #[serde(flatten)]
    pub csv: InputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dataset {
    Linear,
    Random,
    Spiral,
    #[value(name = "trig4d-a")]
    Trig4dA,
    #[value(name = "trig4d-b")]
    Trig4dB,
    #[value(name = "trig4d-c")]
    Trig4dC,
    Cylinder,
    RotatedGaussian,
    Clusters,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dist {
    Gaussian,
    Uniform,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub dataset: Dataset,
    #[arg(long, default_value_t = idcor::synth::DEFAULT_N)]
    pub n: usize,
    /// Base distribution of the trig4d scenarios.
    #[arg(long, value_enum, default_value_t = Dist::Gaussian)]
    pub dist: Dist,
    /// Gaussian noise added to the second trig4d dataset.
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
    /// Spiral turns.
    #[arg(long, default_value_t = 3.0)]
    pub turns: f64,
    /// Rotated-Gaussian intrinsic dimension.
    #[arg(long, default_value_t = 3)]
    pub d_intrinsic: usize,
    /// Rotated-Gaussian embedding dimension.
    #[arg(long, default_value_t = 10)]
    pub d_embed: usize,
    /// Cluster count for the clusters scenario.
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long)]
    pub out_x: PathBuf,
    #[arg(long)]
    pub out_y: Option<PathBuf>,
    /// Write npy files as 32-bit floats.
    #[arg(long)]
    pub f32: bool,
}

impl SynthArgs {
    pub fn scenario(&self) -> Scenario {
        let base = match self.dist {
            Dist::Gaussian => BaseDistribution::Gaussian,
            Dist::Uniform => BaseDistribution::Uniform,
        };
        let trig = |case| Scenario::Trig4d {
            case,
            base,
            noise_sigma: self.noise_sigma,
        };
        match self.dataset {
            Dataset::Linear => Scenario::Linear2d,
            Dataset::Random => Scenario::Random2d,
            Dataset::Spiral => Scenario::Spiral2d { turns: self.turns },
            Dataset::Trig4dA => trig(TrigCase::A),
            Dataset::Trig4dB => trig(TrigCase::B),
            Dataset::Trig4dC => trig(TrigCase::C),
            Dataset::Cylinder => Scenario::Cylinder3d,
            Dataset::RotatedGaussian => Scenario::RotatedGaussian {
                d_intrinsic: self.d_intrinsic,
                d_embed: self.d_embed,
                shared: None,
            },
            Dataset::Clusters => Scenario::Clusters {
                classes: self.classes,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixMethodName {
    Idcor,
    Dcor,
    CkaLinear,
    CkaRbf,
    Cca,
    Svcca,
}

#[derive(Debug, Args, Serialize)]
pub struct MatrixArgs {
    /// Input files or glob patterns; labels are the file stems.
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<String>,
    #[arg(long, value_enum, default_value_t = MatrixMethodName::Idcor)]
    pub method: MatrixMethodName,
    /// Permutations per cell (IdCor only); 0 skips p-values.
    #[arg(long, default_value_t = 0)]
    pub permutations: usize,
    /// Also render the matrix as an SVG heatmap.
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub flags: BaselineFlags,
    #[command(flatten)]
    #[serde(flatten)]
    pub csv: InputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShuffleModeName {
    Full,
    Class,
}

impl From<ShuffleModeName> for ShuffleMode {
    fn from(m: ShuffleModeName) -> Self {
        match m {
            ShuffleModeName::Full => ShuffleMode::Full,
            ShuffleModeName::Class => ShuffleMode::ClassPreserving,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ShuffleArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// CSV column (name or 0-based index) with integer class labels.
    #[arg(long)]
    pub labels_col: Option<String>,
    #[arg(long, value_enum, default_value_t = ShuffleModeName::Full)]
    pub mode: ShuffleModeName,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub csv: InputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct MlpArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 15)]
    pub layers: usize,
    #[arg(long, default_value_t = 784)]
    pub width: usize,
    /// LeakyReLU slope on the negative side; 1 makes the network linear.
    #[arg(long, default_value_t = 0.01)]
    pub slope: f64,
    /// Zero-pad narrower inputs up to the network width.
    #[arg(long)]
    pub pad: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub csv: InputArgs,
}
