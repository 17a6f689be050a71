mod args;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde::Serialize;

use idcor::data::{mlp_transform, sample_row_indices, shuffle_permutation, MlpSpec};
use idcor::error::ErrorClass;
use idcor::io::{
    emit_heatmap, load_matrix, save_matrix, CommandRecord, Dtype, HeaderMode, LoadOptions,
    ReportDocument, ReportResults, SaveOptions,
};
use idcor::metric::{correlate_matrix, idcor as idcor_pair, permutation_test, MatrixMethod};
use idcor::synth::{describe, generate, ScenarioSpec};
use idcor::{DataMatrix, Error, Result, RngSeed};

use args::*;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(match e.class() {
                ErrorClass::Input => 2,
                ErrorClass::Numeric => 3,
                ErrorClass::Pairing => 4,
            })
        }
    }
}

/// Wall-clock milliseconds per stage.
struct Stages {
    last: Instant,
    ms: BTreeMap<String, f64>,
}

impl Stages {
    fn new() -> Self {
        Stages {
            last: Instant::now(),
            ms: BTreeMap::new(),
        }
    }

    fn mark(&mut self, stage: &str) {
        let now = Instant::now();
        *self.ms.entry(stage.to_string()).or_default() +=
            now.duration_since(self.last).as_secs_f64() * 1e3;
        self.last = now;
    }
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    let mut stages = Stages::new();
    let results = match &cli.command {
        Command::Id(a) => {
            let x = load(&a.input, &a.csv, None)?;
            let x = subsample(cli, vec![x])?.remove(0);
            stages.mark("load");
            let est = a.estimator.estimator().estimate(&x)?;
            stages.mark("compute");
            ReportResults::Id(est)
        }
        Command::Corr(a) => {
            let x = load(&a.x, &a.csv, None)?;
            let y = load(&a.y, &a.csv, None)?;
            check_rows(&[(&a.x, &x), (&a.y, &y)])?;
            let mut xy = subsample(cli, vec![x, y])?;
            let (y, x) = (xy.pop().unwrap(), xy.pop().unwrap());
            stages.mark("load");
            let est = a.estimator.estimator();
            let mut report = if a.permutations > 0 {
                permutation_test(&x, &y, a.permutations, RngSeed(cli.seed), &est)?
            } else {
                idcor_pair(&x, &y, &est)?
            };
            if !a.keep_samples {
                report.permutation_joint_ids = None;
            }
            stages.mark("compute");
            ReportResults::Correlation(report)
        }
        Command::Baseline(a) => {
            let x = load(&a.x, &a.csv, None)?;
            let y = load(&a.y, &a.csv, None)?;
            check_rows(&[(&a.x, &x), (&a.y, &y)])?;
            let mut xy = subsample(cli, vec![x, y])?;
            let (y, x) = (xy.pop().unwrap(), xy.pop().unwrap());
            stages.mark("load");
            let r = a.flags.method(a.method).compute(&x, &y)?;
            stages.mark("compute");
            ReportResults::Baseline(r)
        }
        Command::Synth(a) => synth(cli, a, &mut stages)?,
        Command::Matrix(a) => matrix(cli, a, &mut stages)?,
        Command::Shuffle(a) => shuffle(cli, a, &mut stages)?,
        Command::Mlp(a) => mlp(cli, a, &mut stages)?,
    };

    let mut doc = ReportDocument::new(command_record(cli)?, results);
    doc.timing.stages_ms = stages.ms;
    let text = match cli.format {
        ReportFormat::Json => doc.to_json()? + "\n",
        ReportFormat::Csv => results_csv(&doc.results),
    };
    match &cli.output {
        Some(path) => std::fs::write(path, &text).map_err(io_err(path))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(io_err(Path::new("<stdout>")))?,
    }
    Ok(())
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn render(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Null => "none".into(),
        other => other.to_string(),
    }
}

/// Every flag, defaults included, rendered as strings.
fn command_record(cli: &Cli) -> Result<CommandRecord> {
    let mut flags = BTreeMap::new();
    if let serde_json::Value::Object(top) = serde_json::to_value(cli)? {
        for (k, v) in top {
            match (k.as_str(), v) {
                ("command", serde_json::Value::Object(sub)) => {
                    for (k, v) in sub {
                        flags.insert(k.replace('_', "-"), render(&v));
                    }
                }
                (_, v) => {
                    flags.insert(k.replace('_', "-"), render(&v));
                }
            }
        }
    }
    Ok(CommandRecord {
        name: cli.command.name().into(),
        flags,
    })
}

fn load(path: &Path, csv: &InputArgs, label_column: Option<&str>) -> Result<DataMatrix> {
    let header = match (csv.header, csv.no_header) {
        (true, _) => HeaderMode::Present,
        (_, true) => HeaderMode::Absent,
        _ => HeaderMode::Auto,
    };
    load_matrix(
        path,
        &LoadOptions {
            header,
            label_column: label_column.map(|c| c.parse().unwrap()),
            ..Default::default()
        },
    )
}

fn check_rows(inputs: &[(&Path, &DataMatrix)]) -> Result<()> {
    let (p0, m0) = inputs[0];
    for &(p, m) in &inputs[1..] {
        if m.n_rows() != m0.n_rows() {
            return Err(Error::RowMismatch {
                left: p0.display().to_string(),
                left_rows: m0.n_rows(),
                right: p.display().to_string(),
                right_rows: m.n_rows(),
            });
        }
    }
    Ok(())
}

/// Applies `--sample` to already row-aligned inputs, keeping the same rows in each.
fn subsample(cli: &Cli, inputs: Vec<DataMatrix>) -> Result<Vec<DataMatrix>> {
    match cli.sample {
        Some(n) if n < inputs[0].n_rows() => {
            let idx = sample_row_indices(inputs[0].n_rows(), n, RngSeed(cli.seed))?;
            inputs.iter().map(|m| m.select_rows(&idx)).collect()
        }
        _ => Ok(inputs),
    }
}

fn save(x: &DataMatrix, path: &Path, f32: bool) -> Result<()> {
    save_matrix(
        x,
        path,
        &SaveOptions {
            dtype: if f32 { Dtype::F32 } else { Dtype::F64 },
            ..Default::default()
        },
    )
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn synth(cli: &Cli, a: &SynthArgs, stages: &mut Stages) -> Result<ReportResults> {
    let spec = ScenarioSpec {
        scenario: a.scenario(),
        n: a.n,
        seed: RngSeed(cli.seed),
    };
    let g = generate(&spec)?;
    let mut parts = vec![g.x];
    parts.extend(g.y);
    let mut parts = subsample(cli, parts)?;
    stages.mark("compute");

    let y = (parts.len() == 2).then(|| parts.pop().unwrap());
    let x = parts.pop().unwrap();
    let mut paths = vec![];
    save(&x, &a.out_x, a.f32)?;
    paths.push(path_string(&a.out_x));
    match (y, &a.out_y) {
        (Some(y), Some(out_y)) => {
            save(&y, out_y, a.f32)?;
            paths.push(path_string(out_y));
        }
        (Some(_), None) => {
            return Err(Error::InvalidParameter(format!(
                "{} produces a pair of datasets; pass --out-y",
                spec.scenario.name()
            )))
        }
        (None, Some(_)) => {
            return Err(Error::InvalidParameter(format!(
                "{} produces a single dataset; drop --out-y",
                spec.scenario.name()
            )))
        }
        (None, None) => {}
    }
    let sidecar = a.out_x.with_extension("describe.txt");
    std::fs::write(&sidecar, describe(&spec)).map_err(io_err(&sidecar))?;
    paths.push(path_string(&sidecar));
    stages.mark("write");
    Ok(ReportResults::Files { paths })
}

fn expand_inputs(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut out = vec![];
    for p in patterns {
        if !p.contains(['*', '?', '[']) {
            out.push(PathBuf::from(p));
            continue;
        }
        let mut hits: Vec<PathBuf> = glob::glob(p)
            .map_err(|e| Error::InvalidParameter(format!("bad pattern {p:?}: {e}")))?
            .filter_map(|r| r.ok())
            .collect();
        if hits.is_empty() {
            return Err(Error::InvalidParameter(format!("{p:?} matches no files")));
        }
        hits.sort();
        out.extend(hits);
    }
    if out.len() < 2 {
        return Err(Error::InvalidParameter(
            "matrix needs at least two inputs".into(),
        ));
    }
    Ok(out)
}

fn matrix(cli: &Cli, a: &MatrixArgs, stages: &mut Stages) -> Result<ReportResults> {
    let paths = expand_inputs(&a.inputs)?;
    let mats = paths
        .iter()
        .map(|p| load(p, &a.csv, None))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(&Path, &DataMatrix)> = paths.iter().map(PathBuf::as_path).zip(&mats).collect();
    check_rows(&pairs)?;
    let mats = subsample(cli, mats)?;
    let datasets: Vec<(String, DataMatrix)> = paths
        .iter()
        .map(|p| {
            p.file_stem()
                .map_or_else(|| path_string(p), |s| s.to_string_lossy().into_owned())
        })
        .zip(mats)
        .collect();
    stages.mark("load");

    let baseline = |name| MatrixMethod::Baseline {
        method: a.flags.method(name),
    };
    let method = match a.method {
        MatrixMethodName::Idcor => MatrixMethod::Idcor {
            estimator: a.estimator.estimator(),
            permutations: a.permutations,
            seed: RngSeed(cli.seed),
        },
        MatrixMethodName::Dcor => baseline(BaselineName::Dcor),
        MatrixMethodName::CkaLinear => baseline(BaselineName::CkaLinear),
        MatrixMethodName::CkaRbf => baseline(BaselineName::CkaRbf),
        MatrixMethodName::Cca => baseline(BaselineName::Cca),
        MatrixMethodName::Svcca => baseline(BaselineName::Svcca),
    };
    let m = correlate_matrix(&datasets, &method)?;
    stages.mark("compute");
    if let Some(h) = &a.heatmap {
        emit_heatmap(&m, h)?;
        stages.mark("write");
    }
    Ok(ReportResults::Matrix(m))
}

#[derive(Serialize)]
struct PermutationSidecar<'a> {
    mode: ShuffleModeName,
    seed: u64,
    /// Output row `i` is input row `permutation[i]`.
    permutation: &'a [usize],
}

fn shuffle(cli: &Cli, a: &ShuffleArgs, stages: &mut Stages) -> Result<ReportResults> {
    let x = load(&a.input, &a.csv, a.labels_col.as_deref())?;
    let x = subsample(cli, vec![x])?.remove(0);
    stages.mark("load");
    let perm = shuffle_permutation(x.n_rows(), x.labels(), a.mode.into(), RngSeed(cli.seed))?;
    let out = x.select_rows(&perm)?;
    stages.mark("compute");
    save(&out, &a.out, false)?;
    let sidecar = a.out.with_extension("perm.json");
    let text = serde_json::to_string_pretty(&PermutationSidecar {
        mode: a.mode,
        seed: cli.seed,
        permutation: &perm,
    })?;
    std::fs::write(&sidecar, text + "\n").map_err(io_err(&sidecar))?;
    stages.mark("write");
    Ok(ReportResults::Files {
        paths: vec![path_string(&a.out), path_string(&sidecar)],
    })
}

fn mlp(cli: &Cli, a: &MlpArgs, stages: &mut Stages) -> Result<ReportResults> {
    let x = load(&a.input, &a.csv, None)?;
    let mut x = subsample(cli, vec![x])?.remove(0);
    if a.pad && x.n_cols() < a.width {
        x = x.zero_padded(a.width)?;
    }
    stages.mark("load");
    let spec = MlpSpec {
        layers: a.layers,
        width: a.width,
        slope: a.slope,
        weight_seed: RngSeed(cli.seed),
    };
    let out = mlp_transform(&x, &spec)?;
    stages.mark("compute");
    save(&out, &a.out, false)?;
    stages.mark("write");
    Ok(ReportResults::Files {
        paths: vec![path_string(&a.out)],
    })
}

/// Flat CSV rendering of the results, for spreadsheets and shell pipelines.
fn results_csv(r: &ReportResults) -> String {
    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    match r {
        ReportResults::Id(e) => format!(
            "estimator,value,n_used,excluded_duplicates\n{},{},{},{}\n",
            serde_json::to_value(e.estimator).map_or_else(|_| String::new(), |v| render(&v)),
            e.value,
            e.n_used,
            e.diagnostics.excluded_duplicates
        ),
        ReportResults::Correlation(c) => format!(
            "rho,id_x,id_y,id_joint,p_value,n_permutations\n{},{},{},{},{},{}\n",
            c.rho,
            c.id_x.value,
            c.id_y.value,
            c.id_joint.value,
            opt(c.p_value),
            c.n_permutations
        ),
        ReportResults::Baseline(b) => {
            format!("method,value\n{},{}\n", b.method.name(), b.value)
        }
        ReportResults::Matrix(m) => {
            let mut s = format!("label,{}\n", m.labels.join(","));
            for (i, row) in m.rho.iter().enumerate() {
                let cells: Vec<String> = row.iter().map(f64::to_string).collect();
                s += &format!("{},{}\n", m.labels[i], cells.join(","));
            }
            if let Some(p) = &m.p {
                s += &format!("p_label,{}\n", m.labels.join(","));
                for (i, row) in p.iter().enumerate() {
                    let cells: Vec<String> = row.iter().map(|v| opt(*v)).collect();
                    s += &format!("{},{}\n", m.labels[i], cells.join(","));
                }
            }
            s
        }
        ReportResults::Files { paths } => {
            let mut s = String::from("path\n");
            for p in paths {
                s += p;
                s.push('\n');
            }
            s
        }
    }
}
