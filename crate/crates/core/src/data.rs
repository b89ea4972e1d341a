//! Benchmark ingestion, persistence and synthetic generation.
//!
//! Ligand table: tab-separated, one header line with the columns
//! `target_id`, `ligand_id`, `label` and `fingerprint`, e.g. the row
//! `P1 L1 6.3 0,17,240` with tabs between the fields.
//!
//! The fingerprint column lists active bit indices in increasing order; an
//! empty field is an empty fingerprint. The similarity matrix is a CSV file
//! with header `id,<id_1>,…,<id_n>` and one row per id.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::EvaluationReport;
use crate::kernels::FeatureVector;
use crate::numerics::Matrix;
use crate::svr::LabelledDataset;

pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    ids: Vec<String>,
    values: Matrix,
    index: HashMap<String, usize>,
}

impl SimilarityMatrix {
    /// Validates symmetry, a positive diagonal and non-negative entries.
    pub fn new(ids: Vec<String>, values: Matrix) -> Result<Self> {
        let n = ids.len();
        if values.shape() != (n, n) {
            return Err(Error::Validation(format!(
                "similarity matrix is {}x{} for {n} ids",
                values.nrows(),
                values.ncols()
            )));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate similarity id {id:?}")));
            }
        }
        for i in 0..n {
            if !(values[(i, i)] > 0.0) || !values[(i, i)].is_finite() {
                return Err(Error::Validation(format!("diagonal entry of {:?} must be positive", ids[i])));
            }
            for j in 0..n {
                let v = values[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Validation(format!(
                        "entry ({:?}, {:?}) must be finite and non-negative, got {v}",
                        ids[i], ids[j]
                    )));
                }
                if (v - values[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::Validation(format!(
                        "matrix is not symmetric at ({:?}, {:?}): {v} vs {}",
                        ids[i],
                        ids[j],
                        values[(j, i)]
                    )));
                }
            }
        }
        Ok(SimilarityMatrix { ids, values, index })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, a: &str, b: &str) -> Result<f64> {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => Ok(self.values[(i, j)]),
            (None, _) => Err(Error::invalid(format!("no similarity entry for {a:?}"))),
            (_, None) => Err(Error::invalid(format!("no similarity entry for {b:?}"))),
        }
    }

    /// Submatrix over `ids`, in the given order.
    pub fn restrict(&self, ids: &[&str]) -> Result<Matrix> {
        let idx = ids
            .iter()
            .map(|id| self.index_of(id).ok_or_else(|| Error::invalid(format!("no similarity entry for {id:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Matrix::from_fn(idx.len(), idx.len(), |a, b| self.values[(idx[a], idx[b])]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub id: String,
    pub ligand_ids: Vec<String>,
    pub dataset: LabelledDataset,
    pub sequence: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetBenchmark {
    pub targets: Vec<Target>,
    pub similarity: SimilarityMatrix,
}

impl TargetBenchmark {
    pub fn new(targets: Vec<Target>, similarity: SimilarityMatrix) -> Result<Self> {
        let mut seen = HashSet::new();
        for t in &targets {
            if !seen.insert(t.id.as_str()) {
                return Err(Error::Validation(format!("duplicate target id {:?}", t.id)));
            }
            if similarity.index_of(&t.id).is_none() {
                return Err(Error::Validation(format!("target {:?} is missing from the similarity matrix", t.id)));
            }
            if t.ligand_ids.len() != t.dataset.len() {
                return Err(Error::Validation(format!("target {:?} has mismatched ligand ids", t.id)));
            }
        }
        Ok(TargetBenchmark { targets, similarity })
    }

    pub fn ids(&self) -> Vec<&str> {
        self.targets.iter().map(|t| t.id.as_str()).collect()
    }

    pub fn target(&self, id: &str) -> Option<&Target> {
        self.targets.iter().find(|t| t.id == id)
    }
}

fn parse_fingerprint(field: &str) -> std::result::Result<FeatureVector, String> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(FeatureVector::Sparse(Vec::new()));
    }
    let bits = field
        .split(',')
        .map(|s| s.trim().parse::<u32>().map_err(|e| format!("bad fingerprint index {s:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    FeatureVector::sparse(bits).map_err(|e| e.to_string())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse { path: path.display().to_string(), line, message: format!("{kind:?}") },
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn load_similarity(path: &Path) -> Result<SimilarityMatrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(open(path)?);
    let parse = |line: u64, message: String| Error::Parse { path: path.display().to_string(), line, message };
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_error(path, e))?,
        None => return Err(parse(1, "empty similarity file".into())),
    };
    if header.get(0).map(str::trim) != Some("id") {
        return Err(parse(1, "header must start with \"id\"".into()));
    }
    let ids: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let n = ids.len();
    let mut values = Matrix::zeros(n, n);
    let mut row = 0;
    for rec in records {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if row >= n {
            return Err(parse(line, format!("more than {n} data rows")));
        }
        if rec.len() != n + 1 {
            return Err(parse(line, format!("expected {} fields, got {}", n + 1, rec.len())));
        }
        if rec[0].trim() != ids[row] {
            return Err(parse(line, format!("row id {:?} does not match column id {:?}", rec[0].trim(), ids[row])));
        }
        for j in 0..n {
            values[(row, j)] = rec[j + 1]
                .trim()
                .parse::<f64>()
                .map_err(|e| parse(line, format!("bad value {:?}: {e}", &rec[j + 1])))?;
        }
        row += 1;
    }
    if row != n {
        return Err(parse(row as u64 + 1, format!("expected {n} data rows, got {row}")));
    }
    SimilarityMatrix::new(ids, values)
}

/// Target id with its ligand ids, inputs and labels.
type LigandGroup = (String, Vec<String>, Vec<FeatureVector>, Vec<f64>);

/// Ligand rows grouped by target, in order of first appearance.
fn load_ligands(path: &Path) -> Result<Vec<LigandGroup>> {
    let mut reader = csv::ReaderBuilder::new().delimiter(b'\t').has_headers(true).from_reader(open(path)?);
    let parse = |line: u64, message: String| Error::Parse { path: path.display().to_string(), line, message };
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected = ["target_id", "ligand_id", "label", "fingerprint"];
    if header.len() != 4 || header.iter().zip(expected).any(|(a, b)| a.trim() != b) {
        return Err(parse(1, format!("header must be {}", expected.join("\\t"))));
    }
    let mut groups: Vec<LigandGroup> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let target = rec[0].trim().to_string();
        if target.is_empty() {
            return Err(parse(line, "empty target id".into()));
        }
        let label: f64 = rec[2].trim().parse().map_err(|e| parse(line, format!("bad label {:?}: {e}", &rec[2])))?;
        if !label.is_finite() {
            return Err(parse(line, format!("label {label} is not finite")));
        }
        let fp = parse_fingerprint(&rec[3]).map_err(|m| parse(line, m))?;
        let i = *slot.entry(target.clone()).or_insert_with(|| {
            groups.push((target, Vec::new(), Vec::new(), Vec::new()));
            groups.len() - 1
        });
        groups[i].1.push(rec[1].trim().to_string());
        groups[i].2.push(fp);
        groups[i].3.push(label);
    }
    Ok(groups)
}

pub fn load_benchmark(ligand_path: &Path, similarity_path: &Path) -> Result<TargetBenchmark> {
    load_benchmark_with(ligand_path, load_similarity(similarity_path)?)
}

/// Loads the ligand table against an already constructed similarity matrix.
pub fn load_benchmark_with(ligand_path: &Path, similarity: SimilarityMatrix) -> Result<TargetBenchmark> {
    let mut targets = Vec::new();
    for (id, ligand_ids, inputs, labels) in load_ligands(ligand_path)? {
        if similarity.index_of(&id).is_none() {
            return Err(Error::Validation(format!(
                "ligand table references target {id:?}, which is not in the similarity matrix"
            )));
        }
        targets.push(Target { id, ligand_ids, dataset: LabelledDataset::new(inputs, labels)?, sequence: None });
    }
    TargetBenchmark::new(targets, similarity)
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

pub fn save_similarity(sim: &SimilarityMatrix, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let err = write_err(path);
    let mut line = String::from("id");
    for id in &sim.ids {
        line.push(',');
        line.push_str(id);
    }
    writeln!(w, "{line}").map_err(&err)?;
    for (i, id) in sim.ids.iter().enumerate() {
        let mut line = id.clone();
        for j in 0..sim.ids.len() {
            line.push_str(&format!(",{}", sim.values[(i, j)]));
        }
        writeln!(w, "{line}").map_err(&err)?;
    }
    w.flush().map_err(&err)
}

/// Writes the ligand table and similarity matrix. Only sparse fingerprints
/// can be stored.
pub fn save_benchmark(bench: &TargetBenchmark, ligand_path: &Path, similarity_path: &Path) -> Result<()> {
    let mut w = create(ligand_path)?;
    let err = write_err(ligand_path);
    writeln!(w, "target_id\tligand_id\tlabel\tfingerprint").map_err(&err)?;
    for t in &bench.targets {
        for ((lid, x), y) in t.ligand_ids.iter().zip(&t.dataset.inputs).zip(&t.dataset.labels) {
            let FeatureVector::Sparse(bits) = x else {
                return Err(Error::invalid("only sparse fingerprints can be written to a ligand table"));
            };
            let fp: Vec<String> = bits.iter().map(u32::to_string).collect();
            writeln!(w, "{}\t{}\t{}\t{}", t.id, lid, y, fp.join(",")).map_err(&err)?;
        }
    }
    w.flush().map_err(&err)?;
    save_similarity(&bench.similarity, similarity_path)
}

/// Reads `>id` / sequence records from a FASTA file.
pub fn load_sequences(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out: Vec<(String, String)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(id) = line.strip_prefix('>') {
            out.push((id.split_whitespace().next().unwrap_or("").to_string(), String::new()));
        } else if !line.is_empty() {
            match out.last_mut() {
                Some((_, seq)) => seq.push_str(line),
                None => {
                    return Err(Error::Parse {
                        path: path.display().to_string(),
                        line: n as u64 + 1,
                        message: "sequence data before the first header".into(),
                    })
                }
            }
        }
    }
    Ok(out)
}

/// Cosine similarity of k-mer count vectors; 0 when either sequence is
/// shorter than `k`.
pub fn kmer_similarity(seq_a: &str, seq_b: &str, k: usize) -> f64 {
    fn counts(s: &str, k: usize) -> HashMap<&[u8], f64> {
        let mut m = HashMap::new();
        if k > 0 && s.len() >= k {
            for w in s.as_bytes().windows(k) {
                *m.entry(w).or_insert(0.0) += 1.0;
            }
        }
        m
    }
    let (a, b) = (counts(seq_a, k), counts(seq_b, k));
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let dot: f64 = a.iter().filter_map(|(w, x)| b.get(w).map(|y| x * y)).sum();
    let na: f64 = a.values().map(|x| x * x).sum();
    let nb: f64 = b.values().map(|x| x * x).sum();
    (dot / (na.sqrt() * nb.sqrt())).min(1.0)
}

/// Similarity matrix from k-mer cosine similarity of the given sequences.
pub fn similarity_from_sequences(sequences: &[(String, String)], k: usize) -> Result<SimilarityMatrix> {
    let n = sequences.len();
    let values = Matrix::from_fn(n, n, |i, j| kmer_similarity(&sequences[i].1, &sequences[j].1, k));
    SimilarityMatrix::new(sequences.iter().map(|(id, _)| id.clone()).collect(), values)
}

/// How the orphan's similarities are rescaled before use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Scale the orphan-to-supervised row to sum 1; self-similarities raw.
    #[default]
    OrphanRow,
    /// Scale every row over the supervised columns to sum 1, self-similarities included.
    WholeRow,
}

/// Orphan similarities and self-similarities over `supervised`, in order.
pub fn normalize_for_orphan_over(
    sim: &SimilarityMatrix,
    orphan_id: &str,
    supervised: &[&str],
    mode: Normalization,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let o = sim.index_of(orphan_id).ok_or_else(|| Error::invalid(format!("unknown orphan id {orphan_id:?}")))?;
    let idx = supervised
        .iter()
        .map(|id| {
            let i = sim.index_of(id).ok_or_else(|| Error::invalid(format!("unknown target id {id:?}")))?;
            if i == o {
                return Err(Error::invalid("the orphan cannot be one of its own supervised targets"));
            }
            Ok(i)
        })
        .collect::<Result<Vec<_>>>()?;
    if idx.is_empty() {
        return Err(Error::invalid("at least one supervised target is required"));
    }
    let row_mass = |r: usize| idx.iter().map(|&j| sim.values[(r, j)]).sum::<f64>();
    let mass = row_mass(o);
    if !(mass > 0.0) {
        return Err(Error::Degenerate(format!("orphan {orphan_id:?} has zero similarity to every supervised target")));
    }
    let orphan_sims = idx.iter().map(|&i| sim.values[(o, i)] / mass).collect();
    let self_sims = match mode {
        Normalization::OrphanRow => idx.iter().map(|&i| sim.values[(i, i)]).collect(),
        Normalization::WholeRow => idx.iter().map(|&i| sim.values[(i, i)] / row_mass(i)).collect(),
    };
    Ok((orphan_sims, self_sims))
}

/// [`normalize_for_orphan_over`] with every other id of the matrix as a
/// supervised target and the default normalization.
pub fn normalize_for_orphan(sim: &SimilarityMatrix, orphan_id: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let others: Vec<&str> = sim.ids.iter().map(String::as_str).filter(|id| *id != orphan_id).collect();
    normalize_for_orphan_over(sim, orphan_id, &others, Normalization::OrphanRow)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_targets: usize,
    pub m_ligands: usize,
    /// Number of fingerprint bits.
    pub dim: usize,
    pub noise_sd: f64,
    pub similarity_decay: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_targets == 0 || self.m_ligands == 0 || self.dim == 0 {
            return Err(Error::invalid("n_targets, m_ligands and dim must be >= 1"));
        }
        if self.dim > u32::MAX as usize {
            return Err(Error::invalid("dim exceeds the fingerprint index range"));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(Error::invalid(format!("noise_sd must be >= 0, got {}", self.noise_sd)));
        }
        if !(self.similarity_decay > 0.0) || !self.similarity_decay.is_finite() {
            return Err(Error::invalid(format!("similarity_decay must be > 0, got {}", self.similarity_decay)));
        }
        Ok(())
    }
}

/// Latent positions and ground-truth weight vectors of a synthetic benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    pub positions: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
}

/// Synthetic benchmark with targets on a latent line `[0, n_targets]`.
///
/// Every coordinate of the ground-truth weight function is an independent
/// Ornstein-Uhlenbeck process along the line whose correlation at distance
/// `Δ` is `exp(-decay·Δ)`, the same as the target similarity. Weight vectors
/// of nearby targets are therefore nearly parallel. Target `i` is scaled to
/// norm `1 / S_i`, where `S_i` is its similarity mass to all other targets,
/// so that projecting a target onto its neighbours reproduces the normalized
/// similarities in expectation. Ligands are random fingerprints with every
/// bit active with probability one half.
pub fn synth_generate(config: &SynthConfig) -> Result<TargetBenchmark> {
    Ok(synth_generate_with_truth(config)?.0)
}

pub fn synth_generate_with_truth(config: &SynthConfig) -> Result<(TargetBenchmark, SynthTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let positions: Vec<f64> = (0..config.n_targets).map(|_| rng.random_range(0.0..config.n_targets as f64)).collect();
    synth_generate_at(config, &positions, &mut rng)
}

/// Synthetic benchmark at explicit latent positions.
pub fn synth_generate_at_positions(config: &SynthConfig, positions: &[f64]) -> Result<(TargetBenchmark, SynthTruth)> {
    config.validate()?;
    if positions.len() != config.n_targets || positions.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("need one finite latent position per target"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    synth_generate_at(config, positions, &mut rng)
}

fn synth_generate_at(config: &SynthConfig, positions: &[f64], rng: &mut ChaCha8Rng) -> Result<(TargetBenchmark, SynthTruth)> {
    let n = config.n_targets;
    let d = config.dim;
    let sim = Matrix::from_fn(n, n, |i, j| (-config.similarity_decay * (positions[i] - positions[j]).abs()).exp());

    // exact OU transitions between consecutive sorted positions
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| positions[a].total_cmp(&positions[b]).then(a.cmp(&b)));
    let mut raw = vec![vec![0.0; d]; n];
    let mut state: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    let mut prev = positions[order[0]];
    for &t in &order {
        let a = (-config.similarity_decay * (positions[t] - prev)).exp();
        let s = (1.0 - a * a).max(0.0).sqrt();
        for z in state.iter_mut() {
            let xi: f64 = StandardNormal.sample(rng);
            *z = a * *z + s * xi;
        }
        raw[t].clone_from(&state);
        prev = positions[t];
    }
    let weights: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mass: f64 = (0..n).filter(|&j| j != i).map(|j| sim[(i, j)]).sum();
            let scale = if n == 1 { 1.0 } else { 1.0 / mass };
            let norm = raw[i].iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            raw[i].iter().map(|v| v * scale / norm).collect()
        })
        .collect();

    let ids: Vec<String> = (0..n).map(|i| format!("T{i}")).collect();
    let mut targets = Vec::with_capacity(n);
    for (i, id) in ids.iter().enumerate() {
        let mut inputs = Vec::with_capacity(config.m_ligands);
        let mut labels = Vec::with_capacity(config.m_ligands);
        for _ in 0..config.m_ligands {
            let bits: Vec<u32> = (0..d as u32).filter(|_| rng.random_bool(0.5)).collect();
            let x = FeatureVector::Sparse(bits);
            let noise: f64 = StandardNormal.sample(rng);
            labels.push(x.dot_dense(&weights[i])? + config.noise_sd * noise);
            inputs.push(x);
        }
        targets.push(Target {
            id: id.clone(),
            ligand_ids: (0..config.m_ligands).map(|j| format!("{id}_L{j}")).collect(),
            dataset: LabelledDataset::new(inputs, labels)?,
            sequence: None,
        });
    }
    let bench = TargetBenchmark::new(targets, SimilarityMatrix::new(ids, sim)?)?;
    Ok((bench, SynthTruth { positions: positions.to_vec(), weights }))
}

pub fn save_report(report: &EvaluationReport, path: &Path) -> Result<()> {
    report.validate()?;
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w).map_err(write_err(path))?;
    w.flush().map_err(write_err(path))
}

pub fn load_report(path: &Path) -> Result<EvaluationReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report: EvaluationReport = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    report.validate()?;
    Ok(report)
}
