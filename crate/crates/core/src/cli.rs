//! Command-line driver: `synth`, `evaluate` and `report`.
//!
//! Exit codes are 0 on success, 1 on runtime or I/O failure and 2 on usage
//! or configuration errors.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::baselines::BaselineSpec;
use crate::data::{
    load_benchmark, load_benchmark_with, load_sequences, save_benchmark, save_report, similarity_from_sequences,
    synth_generate, SynthConfig, TargetBenchmark,
};
use crate::error::Error;
use crate::eval::{loo_orphan, summary_table, supervised_bounds, EvaluationReport, ProtocolConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cpscreen", version, about = "Orphan-target affinity prediction by corresponding projections")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "CPSCREEN_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic benchmark (ligand table and similarity matrix).
    Synth { config: PathBuf },
    /// Run the leave-one-out orphan protocol and write one report per method.
    Evaluate { config: PathBuf },
    /// Print a comparison table of report files.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

/// Configuration of `synth`: the generator settings plus output locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthRunConfig {
    pub n_targets: usize,
    pub m_ligands: usize,
    pub dim: usize,
    pub noise_sd: f64,
    pub similarity_decay: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "default_ligand_file")]
    pub ligand_file: String,
    #[serde(default = "default_similarity_file")]
    pub similarity_file: String,
}

fn default_ligand_file() -> String {
    "ligands.tsv".into()
}

fn default_similarity_file() -> String {
    "similarity.csv".into()
}

impl SynthRunConfig {
    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            n_targets: self.n_targets,
            m_ligands: self.m_ligands,
            dim: self.dim,
            noise_sd: self.noise_sd,
            similarity_decay: self.similarity_decay,
            seed: self.seed,
        }
    }
}

/// Configuration of `evaluate`. Relative paths resolve against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ligands: PathBuf,
    /// Similarity matrix; when absent, k-mer similarities of `sequences` are used.
    #[serde(default)]
    pub similarity: Option<PathBuf>,
    /// FASTA file of target sequences.
    #[serde(default)]
    pub sequences: Option<PathBuf>,
    #[serde(default = "default_kmer")]
    pub kmer: usize,
    pub output_dir: PathBuf,
    pub methods: Vec<BaselineSpec>,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    /// Training fractions of the supervised upper bounds; none by default.
    #[serde(default)]
    pub supervised_fractions: Vec<f64>,
}

fn default_kmer() -> usize {
    3
}

/// Failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_RUNTIME, message: e.to_string() }
    }
}

/// Runs the tool on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be >= 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(Failure::runtime)?;
    pool.install(|| match cli.command {
        Command::Synth { config } => cmd_synth(&config),
        Command::Evaluate { config } => cmd_evaluate(&config),
        Command::Report { files } => cmd_report(&files),
    })
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn require_dir(dir: &Path) -> Result<(), Failure> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Failure::runtime(format!("output directory {} does not exist", dir.display())))
    }
}

fn cmd_synth(config_path: &Path) -> Result<(), Failure> {
    let cfg: SynthRunConfig = read_config(config_path)?;
    let synth = cfg.synth_config();
    synth.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let out = resolve(&config_dir(config_path), &cfg.output_dir);
    require_dir(&out)?;
    let bench = synth_generate(&synth).map_err(Failure::runtime)?;
    let (lp, sp) = (out.join(&cfg.ligand_file), out.join(&cfg.similarity_file));
    save_benchmark(&bench, &lp, &sp).map_err(Failure::runtime)?;
    println!("wrote {} and {}", lp.display(), sp.display());
    Ok(())
}

fn load_inputs(cfg: &RunConfig, base: &Path) -> Result<TargetBenchmark, Failure> {
    let ligands = resolve(base, &cfg.ligands);
    match (&cfg.similarity, &cfg.sequences) {
        (Some(sim), _) => load_benchmark(&ligands, &resolve(base, sim)).map_err(Failure::runtime),
        (None, Some(seqs)) => {
            let sequences = load_sequences(&resolve(base, seqs)).map_err(Failure::runtime)?;
            let sim = similarity_from_sequences(&sequences, cfg.kmer).map_err(Failure::runtime)?;
            let mut bench = load_benchmark_with(&ligands, sim).map_err(Failure::runtime)?;
            let by_id: HashMap<_, _> = sequences.into_iter().collect();
            for t in &mut bench.targets {
                t.sequence = by_id.get(&t.id).cloned();
            }
            Ok(bench)
        }
        (None, None) => Err(Failure::usage("config needs either \"similarity\" or \"sequences\"")),
    }
}

/// File name of a method's report, e.g. `avg_clo_3.json`.
pub fn report_file_name(method: &str) -> String {
    let mut name: String = method
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect();
    while name.ends_with('_') {
        name.pop();
    }
    format!("{name}.json")
}

fn cmd_evaluate(config_path: &Path) -> Result<(), Failure> {
    let cfg: RunConfig = read_config(config_path)?;
    cfg.protocol.validate().map_err(|e| Failure::usage(e.to_string()))?;
    if cfg.methods.is_empty() && cfg.supervised_fractions.is_empty() {
        return Err(Failure::usage("config lists no methods"));
    }
    let base = config_dir(config_path);
    let out = resolve(&base, &cfg.output_dir);
    require_dir(&out)?;
    let bench = load_inputs(&cfg, &base)?;

    let (bounds, orphan): (Vec<BaselineSpec>, Vec<BaselineSpec>) =
        cfg.methods.iter().partition(|m| matches!(m, BaselineSpec::SupervisedFraction(_)));
    let mut fractions: Vec<f64> = bounds
        .iter()
        .filter_map(|m| match m {
            BaselineSpec::SupervisedFraction(f) => Some(*f),
            _ => None,
        })
        .collect();
    fractions.extend(&cfg.supervised_fractions);

    let mut reports = Vec::new();
    if !orphan.is_empty() {
        reports.extend(loo_orphan(&bench, &orphan, &cfg.protocol).map_err(Failure::runtime)?);
    }
    if !fractions.is_empty() {
        reports.extend(supervised_bounds(&bench, &fractions, &cfg.protocol).map_err(Failure::runtime)?);
    }
    for r in &reports {
        save_report(r, &out.join(report_file_name(&r.method))).map_err(Failure::runtime)?;
    }
    let summary = render_summary(&reports);
    let summary_path = out.join("summary.txt");
    std::fs::write(&summary_path, &summary).map_err(|e| Failure::runtime(Error::io(&summary_path, e)))?;
    print!("{summary}");
    Ok(())
}

fn render_summary(reports: &[EvaluationReport]) -> String {
    let mut out = summary_table(reports);
    for r in reports.iter().filter(|r| !r.failures.is_empty()) {
        let first = &r.failures[0];
        let _ = writeln!(
            out,
            "{}: {} failed cells (first: target {} draw {}: {})",
            r.method,
            r.failures.len(),
            first.target_id,
            first.draw,
            first.message
        );
    }
    out
}

/// Renames repeated method names to `name [2]`, `name [3]`, ….
pub fn disambiguate(reports: &mut [EvaluationReport]) {
    let mut seen: HashMap<String, usize> = HashMap::new();
    for r in reports.iter_mut() {
        let n = seen.entry(r.method.clone()).or_insert(0);
        *n += 1;
        if *n > 1 {
            r.method = format!("{} [{n}]", r.method);
        }
    }
}

fn cmd_report(files: &[PathBuf]) -> Result<(), Failure> {
    let mut reports = files
        .iter()
        .map(|p| crate::data::load_report(p))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::runtime)?;
    disambiguate(&mut reports);
    print!("{}", summary_table(&reports));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{Aggregate, TargetResult};

    fn report(method: &str) -> EvaluationReport {
        EvaluationReport {
            method: method.into(),
            per_target: vec![TargetResult { target_id: "a".into(), per_draw_rmse: vec![1.0], mean: 1.0, median: 1.0 }],
            aggregate: Some(Aggregate { median: 1.0, mean: 1.0 }),
            failures: vec![],
        }
    }

    #[test]
    fn file_names() {
        assert_eq!(report_file_name("avg_clo(3)"), "avg_clo_3.json");
        assert_eq!(report_file_name("cp"), "cp.json");
        assert_eq!(report_file_name("supervised_fraction(0.05)"), "supervised_fraction_0.05.json");
    }

    #[test]
    fn duplicate_methods_get_suffixes() {
        let mut r = vec![report("cp"), report("avg"), report("cp")];
        disambiguate(&mut r);
        let names: Vec<_> = r.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(names, ["cp", "avg", "cp [2]"]);
    }

    #[test]
    fn argument_parsing() {
        assert!(Cli::try_parse_from(["cpscreen"]).is_err());
        assert!(Cli::try_parse_from(["cpscreen", "report"]).is_err());
        assert!(Cli::try_parse_from(["cpscreen", "frobnicate"]).is_err());
        let cli = Cli::try_parse_from(["cpscreen", "report", "a.json", "--threads", "3"]).unwrap();
        assert_eq!(cli.threads, Some(3));
        let missing = execute(Cli::try_parse_from(["cpscreen", "evaluate", "/nonexistent/config.json"]).unwrap());
        assert_eq!(missing.unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn config_parsing() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"ligands": "l.tsv", "similarity": "s.csv", "output_dir": "out",
                "methods": ["cp", "avg_clo(3)"], "protocol": {"n_draws": 2, "seed": 9}}"#,
        )
        .unwrap();
        assert_eq!(cfg.methods, vec![BaselineSpec::Cp, BaselineSpec::AvgClo(3)]);
        assert_eq!(cfg.protocol.n_draws, 2);
        assert_eq!(cfg.protocol.ligands_per_draw, 240);
        let err = serde_json::from_str::<RunConfig>(
            r#"{"ligands": "l.tsv", "output_dir": "out", "methods": ["cp", "bogus"]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }
}
