//! Command-line orchestration: file formats, the subcommand driver and the
//! golden-directory verifier.
//!
//! Every command is deterministic; output files are written atomically
//! (temp file plus rename). Exit codes: 0 success, 1 validation error,
//! 2 indeterminate spectral convergence.

use crate::cohomology::{self, AbGroup};
use crate::fan::{self, CyclicQuotientType, Fan, FanError, ResolutionRecord};
use crate::heisenberg::{self, HeisenbergError};
use crate::lattice::{integer_kernel, smith_form, IntMatrix};
use crate::motivic::MotivicError;
use crate::spectral::{self, DegreeStatus, SpectralError};
use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Malformed { path: String, message: String },
    #[error("indeterminate convergence: {0}")]
    Indeterminate(String),
    #[error(transparent)]
    Fan(#[from] FanError),
    #[error(transparent)]
    Cohomology(#[from] cohomology::CohomologyError),
    #[error(transparent)]
    Motivic(#[from] MotivicError),
    #[error(transparent)]
    Heisenberg(#[from] HeisenbergError),
    #[error("{0}")]
    Validation(String),
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Indeterminate { .. } => CliError::Indeterminate(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

/// Output flavor for the tabular commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// One invocation of the tool.
#[derive(Debug, Clone)]
pub enum Command {
    Resolve {
        quotient: CyclicQuotientType,
    },
    FanCheck {
        input: PathBuf,
    },
    Betti {
        input: PathBuf,
    },
    D1Matrix {
        input: PathBuf,
        col: i64,
        row: i64,
    },
    Spectral {
        input: PathBuf,
        copies: usize,
        max_degree: usize,
    },
    CartanLeray {
        p: u64,
        max_k: i64,
    },
    Heisenberg {
        p: u64,
    },
    Verify {
        golden: PathBuf,
        fresh: PathBuf,
    },
}

/// A validated run configuration. The seed is reserved: no algorithm in
/// the pipeline consumes randomness.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
    pub seed: Option<u64>,
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Atomic write: temp file in the same directory, then rename.
fn write_artifact(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let target = dir.join(name);
    let temp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&temp, content).map_err(|e| CliError::Io {
        path: temp.display().to_string(),
        message: e.to_string(),
    })?;
    std::fs::rename(&temp, &target).map_err(|e| CliError::Io {
        path: target.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(target)
}

fn load_fan(path: &Path) -> Result<Fan, CliError> {
    let text = read_file(path)?;
    Fan::from_json(&text).map_err(|e| CliError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Accepts either a resolution record or, for already-resolved data, a
/// plain fan with no exceptional rays.
fn load_record(path: &Path) -> Result<ResolutionRecord, CliError> {
    let text = read_file(path)?;
    if let Ok(record) = ResolutionRecord::from_json(&text) {
        return Ok(record);
    }
    Err(CliError::Malformed {
        path: path.display().to_string(),
        message: ResolutionRecord::from_json(&text)
            .err()
            .map(|e| e.to_string())
            .unwrap_or_default(),
    })
}

fn group_json(g: &AbGroup) -> Value {
    json!({
        "rank": g.free_rank,
        "torsion": g.torsion.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
    })
}

fn spectral_page_json(
    page: &spectral::SpectralPage,
    csv_files: &BTreeMap<(i64, i64), String>,
) -> Value {
    let entries: Vec<Value> = page
        .entries
        .iter()
        .map(|(&(col, row), entry)| {
            let mut v = json!({
                "col": col,
                "row": row,
                "rank": entry.group.free_rank,
                "torsion": entry.group.torsion.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            });
            if let Some(basis) = &entry.basis {
                v["basis"] = Value::Array(
                    basis
                        .iter()
                        .map(|b| Value::String(b.label(page.exceptional())))
                        .collect(),
                );
            }
            v
        })
        .collect();
    let differentials: Vec<Value> = page
        .differentials
        .iter()
        .map(|(&(col, row), map)| {
            json!({
                "from": [col, row],
                "to": [col + 1, row],
                "rows": map.matrix.rows(),
                "cols": map.matrix.cols(),
                "csv": csv_files.get(&(col, row)).cloned().unwrap_or_default(),
            })
        })
        .collect();
    json!({
        "page": page.page_index,
        "columns": [page.column_range.0, page.column_range.1],
        "rows": [page.row_range.0, page.row_range.1],
        "entries": entries,
        "differentials": differentials,
    })
}

fn run_resolve(
    quotient: &CyclicQuotientType,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let germ = fan::quotient_cone(quotient)?;
    let record = fan::resolve_fan(&germ)?;
    let mut artifacts = Vec::new();
    artifacts.push(write_artifact(
        out,
        "resolved_fan.json",
        &record.resolved.to_json(),
    )?);
    artifacts.push(write_artifact(out, "resolution.json", &record.to_json())?);
    println!(
        "resolved {quotient}: {} rays, {} maximal cones, {} exceptional",
        record.resolved.rays().len(),
        record.resolved.maximal_cones().len(),
        record.exceptional_count()
    );
    Ok(artifacts)
}

fn run_fan_check(input: &Path, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let f = load_fan(input)?;
    let simplicial = f.maximal_cones().iter().all(|c| fan::is_simplicial(&f, c));
    let smooth = match fan::is_smooth_fan(&f) {
        Ok(v) => json!(v),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let complete = match fan::is_complete(&f) {
        Ok(v) => json!(v),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let report = json!({
        "dim": f.dim(),
        "rays": f.rays().len(),
        "maximal_cones": f.maximal_cones().len(),
        "simplicial": simplicial,
        "smooth": smooth,
        "complete": complete,
    });
    println!("{report}");
    Ok(vec![write_artifact(
        out,
        "fan_check.json",
        &serde_json::to_string_pretty(&report).unwrap(),
    )?])
}

fn run_betti(input: &Path, out: &Path, format: OutputFormat) -> Result<Vec<PathBuf>, CliError> {
    let f = load_fan(input)?;
    let betti = cohomology::betti_numbers(&f)?;
    match format {
        OutputFormat::Json => {
            let mut degrees = serde_json::Map::new();
            for d in 0..=2 * f.dim() {
                degrees.insert(d.to_string(), group_json(&betti.degree(d)));
            }
            let doc = json!({ "dim": f.dim(), "degrees": degrees });
            println!("{doc}");
            Ok(vec![write_artifact(
                out,
                "betti.json",
                &serde_json::to_string_pretty(&doc).unwrap(),
            )?])
        }
        OutputFormat::Csv => {
            let mut text = String::from("degree,rank\n");
            for d in 0..=2 * f.dim() {
                text.push_str(&format!("{d},{}\n", betti.rank(d)));
            }
            print!("{text}");
            Ok(vec![write_artifact(out, "betti.csv", &text)?])
        }
    }
}

fn run_d1_matrix(
    input: &Path,
    col: i64,
    row: i64,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let record = load_record(input)?;
    let page = spectral::build_e1(&record)?;
    let map = spectral::d1_map(&page, (col, row))?;
    let name = format!("d1_{}_{row}.csv", -col);
    println!(
        "d1 at (col {col}, row {row}): {} x {}",
        map.matrix.rows(),
        map.matrix.cols()
    );
    Ok(vec![write_artifact(out, &name, &map.to_labeled_csv())?])
}

fn run_spectral(
    input: &Path,
    copies: usize,
    max_degree: usize,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let record = load_record(input)?;
    let page = spectral::build_e1(&record)?;
    let mut artifacts = Vec::new();
    let mut csv_files = BTreeMap::new();
    for (&(col, row), map) in &page.differentials {
        let name = format!("d1_{}_{row}.csv", -col);
        artifacts.push(write_artifact(out, &name, &map.to_labeled_csv())?);
        csv_files.insert((col, row), name);
    }
    let page_doc = spectral_page_json(&page, &csv_files);
    artifacts.push(write_artifact(
        out,
        "spectral_page1.json",
        &serde_json::to_string_pretty(&page_doc).unwrap(),
    )?);
    let report = spectral::convergence_report(&record, max_degree, copies)?;
    let mut degrees = serde_json::Map::new();
    let mut indeterminate = false;
    for (d, status) in &report.degrees {
        let value = match status {
            DegreeStatus::Determined(g) => {
                let mut v = group_json(g);
                v["status"] = json!("determined");
                v
            }
            DegreeStatus::Indeterminate(reason) => {
                indeterminate = true;
                json!({ "status": "indeterminate", "reason": reason })
            }
        };
        degrees.insert(d.to_string(), value);
    }
    let doc = json!({ "copies": copies, "degrees": degrees });
    println!("{doc}");
    artifacts.push(write_artifact(
        out,
        "convergence.json",
        &serde_json::to_string_pretty(&doc).unwrap(),
    )?);
    if indeterminate {
        return Err(CliError::Indeterminate(
            "one or more degrees could not be certified".into(),
        ));
    }
    Ok(artifacts)
}

fn run_cartan_leray(
    p: u64,
    max_k: i64,
    out: &Path,
    format: OutputFormat,
) -> Result<Vec<PathBuf>, CliError> {
    let limit = 2 * p as i64 - 2;
    if max_k >= limit {
        return Err(CliError::Validation(format!(
            "max k {max_k} outside the validated range 0..{limit}"
        )));
    }
    let mut table: Vec<(i64, AbGroup)> = Vec::new();
    for k in 0..=max_k {
        table.push((k, spectral::cartan_leray_open(p, k)?));
    }
    match format {
        OutputFormat::Json => {
            let mut degrees = serde_json::Map::new();
            for (k, g) in &table {
                degrees.insert(k.to_string(), group_json(g));
            }
            let doc = json!({ "p": p, "degrees": degrees });
            println!("{doc}");
            Ok(vec![write_artifact(
                out,
                "cartan_leray.json",
                &serde_json::to_string_pretty(&doc).unwrap(),
            )?])
        }
        OutputFormat::Csv => {
            let mut text = String::from("k,rank,torsion\n");
            for (k, g) in &table {
                let torsion: Vec<String> = g.torsion.iter().map(|t| t.to_string()).collect();
                text.push_str(&format!("{k},{},{}\n", g.free_rank, torsion.join(" ")));
            }
            print!("{text}");
            Ok(vec![write_artifact(out, "cartan_leray.csv", &text)?])
        }
    }
}

fn run_heisenberg(p: u64, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let analysis = heisenberg::analyze(p)?;
    let mut artifacts = Vec::new();
    // singular locus dump
    let points: Vec<Value> = analysis
        .locus
        .iter()
        .map(|s| {
            json!({
                "subgroup": s.subgroup.to_string(),
                "local_type": s.local_type.to_string(),
                "fixed_points": s.fixed_points.len(),
                "pseudo_reflections_trivial": s.pseudo_reflections_trivial,
            })
        })
        .collect();
    let locus_doc = json!({ "p": p, "singular_points": points });
    artifacts.push(write_artifact(
        out,
        "singular_locus.json",
        &serde_json::to_string_pretty(&locus_doc).unwrap(),
    )?);
    let report_json = analysis.report.to_json_string();
    println!("{report_json}");
    artifacts.push(write_artifact(out, "ekedahl_report.json", &report_json)?);
    Ok(artifacts)
}

/// How two artifacts with the same name compare.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileDiff {
    Identical,
    /// Same matrix invariants (dimensions, rank, Smith diagonal, kernel
    /// rank) under a permuted or re-signed basis.
    Equivalent,
    Different(String),
    MissingInGolden,
    MissingInFresh,
}

/// Structural comparison of two artifact directories. JSON files compare
/// as parsed values; CSV matrices compare by basis-independent invariants.
pub fn verify(golden: &Path, fresh: &Path) -> Result<BTreeMap<String, FileDiff>, CliError> {
    let list = |dir: &Path| -> Result<BTreeMap<String, PathBuf>, CliError> {
        let mut out = BTreeMap::new();
        let entries = std::fs::read_dir(dir).map_err(|e| CliError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        for entry in entries {
            let entry = entry.map_err(|e| CliError::Io {
                path: dir.display().to_string(),
                message: e.to_string(),
            })?;
            if entry.path().is_file() {
                out.insert(entry.file_name().to_string_lossy().into_owned(), entry.path());
            }
        }
        Ok(out)
    };
    let golden_files = list(golden)?;
    let fresh_files = list(fresh)?;
    let mut report = BTreeMap::new();
    for (name, path) in &golden_files {
        match fresh_files.get(name) {
            None => {
                report.insert(name.clone(), FileDiff::MissingInFresh);
            }
            Some(other) => {
                report.insert(name.clone(), compare_files(path, other)?);
            }
        }
    }
    for name in fresh_files.keys() {
        if !golden_files.contains_key(name) {
            report.insert(name.clone(), FileDiff::MissingInGolden);
        }
    }
    Ok(report)
}

fn compare_files(golden: &Path, fresh: &Path) -> Result<FileDiff, CliError> {
    let a = read_file(golden)?;
    let b = read_file(fresh)?;
    if a == b {
        return Ok(FileDiff::Identical);
    }
    let is_json = golden.extension().is_some_and(|e| e == "json");
    if is_json {
        let va: Value = serde_json::from_str(&a).map_err(|e| CliError::Malformed {
            path: golden.display().to_string(),
            message: e.to_string(),
        })?;
        let vb: Value = serde_json::from_str(&b).map_err(|e| CliError::Malformed {
            path: fresh.display().to_string(),
            message: e.to_string(),
        })?;
        return Ok(if va == vb {
            FileDiff::Identical
        } else {
            FileDiff::Different("json values differ".into())
        });
    }
    // CSV: compare matrix invariants, ignoring labels and basis order
    let ma = csv_matrix(&a, golden)?;
    let mb = csv_matrix(&b, fresh)?;
    if ma.rows() != mb.rows() || ma.cols() != mb.cols() {
        return Ok(FileDiff::Different(format!(
            "dimensions {}x{} vs {}x{}",
            ma.rows(),
            ma.cols(),
            mb.rows(),
            mb.cols()
        )));
    }
    let invariants = |m: &IntMatrix| {
        let snf = smith_form(m);
        let diag: Vec<BigInt> = snf.diagonal.into_iter().filter(|d| !d.is_zero() && d != &BigInt::from(1)).collect();
        (m.rank(), diag, integer_kernel(m).cols())
    };
    if invariants(&ma) == invariants(&mb) {
        Ok(FileDiff::Equivalent)
    } else {
        Ok(FileDiff::Different(
            "matrix invariants (rank, Smith diagonal, kernel rank) differ".into(),
        ))
    }
}

/// Reads a CSV matrix, tolerating a label header line and a label column.
fn csv_matrix(text: &str, path: &Path) -> Result<IntMatrix, CliError> {
    let numeric = |field: &str| field.trim().parse::<BigInt>().ok();
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.iter().all(|f| numeric(f).is_some()) {
            rows.push(fields.iter().map(|f| numeric(f).unwrap()).collect());
        } else if fields.len() > 1 && fields[1..].iter().all(|f| numeric(f).is_some()) {
            // leading label column
            rows.push(fields[1..].iter().map(|f| numeric(f).unwrap()).collect());
        } else {
            // header line of labels
            continue;
        }
    }
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(CliError::Malformed {
            path: path.display().to_string(),
            message: "not a rectangular integer csv".into(),
        });
    }
    Ok(IntMatrix::from_rows(rows))
}

fn run_verify(golden: &Path, fresh: &Path) -> Result<Vec<PathBuf>, CliError> {
    let report = verify(golden, fresh)?;
    let mut substantive = false;
    for (name, diff) in &report {
        let line = match diff {
            FileDiff::Identical => format!("{name}: identical"),
            FileDiff::Equivalent => format!("{name}: equivalent (matrix invariants match)"),
            FileDiff::Different(why) => {
                substantive = true;
                format!("{name}: DIFFERENT ({why})")
            }
            FileDiff::MissingInFresh => {
                substantive = true;
                format!("{name}: missing in fresh directory")
            }
            FileDiff::MissingInGolden => {
                substantive = true;
                format!("{name}: missing in golden directory")
            }
        };
        println!("{line}");
    }
    if substantive {
        Err(CliError::Validation("directories differ".into()))
    } else {
        println!("directories agree");
        Ok(Vec::new())
    }
}

/// Runs one command; the returned artifacts were written atomically.
pub fn execute(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let out = &config.output_dir;
    match &config.command {
        Command::Resolve { quotient } => run_resolve(quotient, out),
        Command::FanCheck { input } => run_fan_check(input, out),
        Command::Betti { input } => run_betti(input, out, config.format),
        Command::D1Matrix { input, col, row } => run_d1_matrix(input, *col, *row, out),
        Command::Spectral {
            input,
            copies,
            max_degree,
        } => run_spectral(input, *copies, *max_degree, out),
        Command::CartanLeray { p, max_k } => run_cartan_leray(*p, *max_k, out, config.format),
        Command::Heisenberg { p } => run_heisenberg(*p, out),
        Command::Verify { golden, fresh } => run_verify(golden, fresh),
    }
}

/// Exit status of a finished run, per the documented code contract.
pub fn exit_code(result: &Result<Vec<PathBuf>, CliError>) -> i32 {
    match result {
        Ok(_) => 0,
        Err(CliError::Indeterminate(_)) => 2,
        Err(_) => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    #[test]
    fn quotient_type_parsing() {
        let t = CyclicQuotientType::from_str("1/5(1,2,3,4)").unwrap();
        assert_eq!(t.order(), 5);
        assert_eq!(t.weights(), &[1, 2, 3, 4]);
        assert!(CyclicQuotientType::from_str("5(1,2)").is_err());
        assert!(CyclicQuotientType::from_str("1/4(2,2)").is_err());
    }

    #[test]
    fn resolve_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig {
            command: Command::Resolve {
                quotient: CyclicQuotientType::from_str("1/3(1,1)").unwrap(),
            },
            output_dir: dir.path().to_path_buf(),
            format: OutputFormat::Json,
            seed: None,
        };
        let artifacts = execute(&config).unwrap();
        assert_eq!(artifacts.len(), 2);
        let record =
            ResolutionRecord::from_json(&std::fs::read_to_string(dir.path().join("resolution.json")).unwrap())
                .unwrap();
        assert_eq!(record.exceptional_count(), 1);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        for dir in [&dir1, &dir2] {
            let config = RunConfig {
                command: Command::Resolve {
                    quotient: CyclicQuotientType::from_str("1/5(1,2,3,4)").unwrap(),
                },
                output_dir: dir.path().to_path_buf(),
                format: OutputFormat::Json,
                seed: None,
            };
            execute(&config).unwrap();
        }
        for name in ["resolved_fan.json", "resolution.json"] {
            let a = std::fs::read(dir1.path().join(name)).unwrap();
            let b = std::fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between runs");
        }
    }

    #[test]
    fn verify_spots_substantive_changes() {
        let golden = tempfile::tempdir().unwrap();
        let fresh = tempfile::tempdir().unwrap();
        // identical json
        std::fs::write(golden.path().join("a.json"), "{\"x\": 1}").unwrap();
        std::fs::write(fresh.path().join("a.json"), "{ \"x\" : 1 }").unwrap();
        // column-permuted matrix: equivalent
        std::fs::write(golden.path().join("m.csv"), "1,0\n0,2\n").unwrap();
        std::fs::write(fresh.path().join("m.csv"), "0,1\n2,0\n").unwrap();
        let report = verify(golden.path(), fresh.path()).unwrap();
        assert_eq!(report["a.json"], FileDiff::Identical);
        assert_eq!(report["m.csv"], FileDiff::Equivalent);

        // an entry change that alters the kernel rank is substantive
        std::fs::write(fresh.path().join("m.csv"), "1,0\n0,0\n").unwrap();
        let report = verify(golden.path(), fresh.path()).unwrap();
        assert!(matches!(report["m.csv"], FileDiff::Different(_)));

        // missing files are reported individually
        std::fs::write(golden.path().join("only.json"), "{}").unwrap();
        let report = verify(golden.path(), fresh.path()).unwrap();
        assert_eq!(report["only.json"], FileDiff::MissingInFresh);
    }

    #[test]
    fn malformed_json_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, "{\"dim\": 2, \"rays\": [[1,0], [0").unwrap();
        let config = RunConfig {
            command: Command::Betti { input: bad },
            output_dir: dir.path().to_path_buf(),
            format: OutputFormat::Json,
            seed: None,
        };
        let result = execute(&config);
        assert_eq!(exit_code(&result), 1);
        let message = result.unwrap_err().to_string();
        assert!(message.contains("line"), "diagnostics carry a position: {message}");
    }

    #[test]
    fn labeled_csv_parses_without_labels() {
        let text = "h1,h2\nrow1,1,2\nrow2,3,4\n";
        let m = csv_matrix(text, Path::new("t.csv")).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.cols(), 2);
    }
}
