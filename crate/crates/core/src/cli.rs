//! `histcoord` command line: validate, extract, evaluate, convert, stats, attach.
//!
//! Exit codes: 0 success, 1 findings (invalid entries, unmatched ids),
//! 2 I/O or usage errors.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::codec::flatten_geometry;
use crate::dataset::{
    compute_stats, load_dataset_with, select_same_precision, summarize_selection, DatasetError,
    DatasetFile, DatasetStats, KeyMap, Loaded, SelectionSummary,
};
use crate::extractor::{extract_entry, ExtractionRuleSet};
use crate::geodesy::{
    attach_regions, convert_geometry, convert_point, resolve_meridian, MeridianOffsetTable,
    RegionSet,
};
use crate::metrics::{evaluate_pairs, EvalPair, EvalReport};
use crate::model::{MeridianRef, PrecisionLevel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "histcoord",
    version,
    about = "Coordinates in historical gazetteer entries"
)]
pub struct Cli {
    /// Extraction rules file (TOML).
    #[arg(long, global = true, env = "HISTCOORD_RULES")]
    pub rules: Option<PathBuf>,
    /// Use the rounded 17.66 Ferro offset instead of the exact one.
    #[arg(long, global = true)]
    pub rounded_offset: bool,
    /// Override or add a meridian offset: NAME=DEG, degrees west of Greenwich
    /// (negative for east), subtracted from that meridian's longitudes.
    #[arg(long = "meridian-offset", global = true, value_name = "NAME=DEG")]
    pub meridian_offsets: Vec<String>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, short = 'j', global = true)]
    pub jobs: Option<usize>,
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Accept another key name for an entry field: FIELD=NAME.
    #[arg(long = "key-alias", global = true, value_name = "FIELD=NAME")]
    pub key_aliases: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every annotation of a dataset.
    Validate { dataset: PathBuf },
    /// Detect and extract coordinates from entry texts; writes JSON lines.
    Extract {
        entries: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Score predictions (JSON lines) against a gold dataset.
    Evaluate {
        gold: PathBuf,
        predictions: PathBuf,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Convert annotations to modern decimal degrees; writes JSON lines.
    Convert {
        dataset: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Composition of a dataset by type and precision.
    Stats {
        dataset: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Attach same-precision points to regions and report precision shares.
    Attach {
        dataset: PathBuf,
        /// GeoJSON FeatureCollection of region polygons.
        regions: PathBuf,
        /// Feature property holding the region label.
        #[arg(long, default_value = "name")]
        label_prop: String,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn error(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_ERROR,
            message: message.into(),
        }
    }

    fn findings(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_FINDINGS,
            message: message.into(),
        }
    }
}

type Outcome = Result<i32, Failure>;

struct Context<'a> {
    cli: &'a Cli,
    pool: Option<rayon::ThreadPool>,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Runs a parsed command line, writing to the given streams; returns the exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut ctx = Context {
        cli,
        pool: None,
        out,
        err,
    };
    let outcome = ctx.dispatch();
    match outcome {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(ctx.err, "error: {}", f.message);
            f.code
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::error(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| io_failure(path, e))
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn parse_pair(raw: &str, what: &str) -> Result<(String, String), Failure> {
    raw.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .filter(|(k, v)| !k.is_empty() && !v.is_empty())
        .ok_or_else(|| Failure::error(format!("expected {what}, got '{raw}'")))
}

impl Context<'_> {
    fn dispatch(&mut self) -> Outcome {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cli.jobs.unwrap_or(0))
            .build()
            .map_err(|e| Failure::error(format!("thread pool: {e}")))?;
        self.pool = Some(pool);
        match &self.cli.command {
            Command::Validate { dataset } => self.validate(dataset),
            Command::Extract { entries, output } => self.extract(entries, output.as_deref()),
            Command::Evaluate {
                gold,
                predictions,
                report,
            } => self.evaluate(gold, predictions, report.as_deref()),
            Command::Convert { dataset, output } => self.convert(dataset, output.as_deref()),
            Command::Stats { dataset, report } => self.stats(dataset, report.as_deref()),
            Command::Attach {
                dataset,
                regions,
                label_prop,
                report,
            } => self.attach(dataset, regions, label_prop, report.as_deref()),
        }
    }

    fn pool(&self) -> &rayon::ThreadPool {
        self.pool.as_ref().expect("pool built before dispatch")
    }

    fn key_map(&self) -> Result<KeyMap, Failure> {
        let mut keys = KeyMap::default();
        for raw in &self.cli.key_aliases {
            let (field, name) = parse_pair(raw, "FIELD=NAME")?;
            keys.alias(&field, &name).map_err(Failure::error)?;
        }
        Ok(keys)
    }

    fn offsets(&self) -> Result<MeridianOffsetTable, Failure> {
        let mut table = if self.cli.rounded_offset {
            MeridianOffsetTable::rounded()
        } else {
            MeridianOffsetTable::exact()
        };
        for raw in &self.cli.meridian_offsets {
            let (name, deg) = parse_pair(raw, "NAME=DEG")?;
            let deg: f64 = deg
                .parse()
                .ok()
                .filter(|d: &f64| d.is_finite())
                .ok_or_else(|| Failure::error(format!("invalid offset in '{raw}'")))?;
            table.set(MeridianRef::from_label(&name), deg);
        }
        Ok(table)
    }

    fn rules(&self) -> Result<ExtractionRuleSet, Failure> {
        match &self.cli.rules {
            None => Ok(ExtractionRuleSet::default()),
            Some(path) => ExtractionRuleSet::load(path)
                .map_err(|e| Failure::error(format!("{}: {e}", path.display()))),
        }
    }

    fn load(&mut self, path: &Path) -> Result<Loaded, Failure> {
        let loaded =
            load_dataset_with(path, &self.key_map()?).map_err(|e| Failure::error(e.to_string()))?;
        if !loaded.diagnostics.is_empty() {
            log::warn!(
                "{}: {} annotation(s) could not be decoded; run validate for details",
                path.display(),
                loaded.diagnostics.len()
            );
        }
        Ok(loaded)
    }

    fn emit_lines(&mut self, output: Option<&Path>, lines: &[String]) -> Result<(), Failure> {
        let mut body = String::new();
        for line in lines {
            body.push_str(line);
            body.push('\n');
        }
        match output {
            Some(path) => write_file(path, &body),
            None => self
                .out
                .write_all(body.as_bytes())
                .map_err(|e| Failure::error(e.to_string())),
        }
    }

    fn print(&mut self, text: &str) -> Result<(), Failure> {
        self.out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::error(e.to_string()))
    }

    fn validate(&mut self, path: &Path) -> Outcome {
        let loaded = match load_dataset_with(path, &self.key_map()?) {
            Ok(l) => l,
            Err(e @ DatasetError::File { .. }) => return Err(Failure::error(e.to_string())),
            Err(e) => return Err(Failure::findings(e.to_string())),
        };
        let n = loaded.dataset.len();
        match self.cli.format {
            Format::Json => {
                let report = json!({"entries": n, "diagnostics": loaded.diagnostics});
                self.print(&pretty(&report))?;
            }
            Format::Table => {
                for d in &loaded.diagnostics {
                    self.print(&format!("{}\t{}\t{}\n", d.entry_id, d.kind, d.detail))?;
                }
                self.print(&format!(
                    "{n} entries, {} invalid annotation(s)\n",
                    loaded.diagnostics.len()
                ))?;
            }
        }
        Ok(if loaded.diagnostics.is_empty() {
            EXIT_OK
        } else {
            EXIT_FINDINGS
        })
    }

    fn extract(&mut self, path: &Path, output: Option<&Path>) -> Outcome {
        let rules = self.rules()?;
        let loaded = self.load(path)?;
        let lines: Vec<String> = self.pool().install(|| {
            loaded
                .dataset
                .entries()
                .par_iter()
                .map(|entry| {
                    let x = extract_entry(entry, &rules);
                    json!({
                        "id": entry.id,
                        "has_coordinates": x.has_coordinates,
                        "prediction": x.geometry.as_ref().map(flatten_geometry),
                        "meridians": x.meridians.iter().map(MeridianRef::label).collect::<Vec<_>>(),
                        "diagnostics": x.diagnostics,
                    })
                    .to_string()
                })
                .collect()
        });
        self.emit_lines(output, &lines)?;
        Ok(EXIT_OK)
    }

    fn evaluate(
        &mut self,
        gold_path: &Path,
        pred_path: &Path,
        report_path: Option<&Path>,
    ) -> Outcome {
        let gold = self.load(gold_path)?.dataset;
        let predictions = read_predictions(pred_path)?;
        let known: BTreeSet<&str> = gold.entries().iter().map(|e| e.id.as_str()).collect();
        let orphans: Vec<&str> = predictions
            .keys()
            .map(String::as_str)
            .filter(|id| !known.contains(id))
            .collect();
        if !orphans.is_empty() {
            return Err(Failure::findings(format!(
                "UnmatchedIdError: {} prediction id(s) not in gold: {}",
                orphans.len(),
                orphans.join(", ")
            )));
        }
        let pairs: Vec<EvalPair> = gold
            .entries()
            .iter()
            .filter_map(|e| {
                let g = e.coordinates.as_ref()?;
                let pred = predictions.get(&e.id).cloned().flatten();
                Some(EvalPair::new(&e.id, flatten_geometry(g), pred))
            })
            .collect();
        let report = evaluate_pairs(&pairs).map_err(|e| Failure::error(e.to_string()))?;
        if let Some(p) = report_path {
            write_file(p, &pretty(&report))?;
        }
        let text = match self.cli.format {
            Format::Json => pretty(&report),
            Format::Table => eval_table(&report),
        };
        self.print(&text)?;
        Ok(EXIT_OK)
    }

    fn convert(&mut self, path: &Path, output: Option<&Path>) -> Outcome {
        let table = self.offsets()?;
        let loaded = self.load(path)?;
        let records: Vec<(bool, String)> = self.pool().install(|| {
            loaded
            .dataset
            .entries()
            .par_iter()
            .filter_map(|e| {
                let g = e.coordinates.as_ref()?;
                let record = match convert_geometry(g, &e.meridians, &table) {
                    Ok(c) => (true, json!({"id": e.id, "status": "converted", "geometry": c})),
                    Err(err) => (
                        false,
                        json!({"id": e.id, "status": "unconvertible", "reason": err.to_string(), "geometry": null}),
                    ),
                };
                Some((record.0, record.1.to_string()))
            })
            .collect()
        });
        let failed = records.iter().filter(|(ok, _)| !ok).count();
        let lines: Vec<String> = records.into_iter().map(|(_, l)| l).collect();
        self.emit_lines(output, &lines)?;
        let _ = writeln!(
            self.err,
            "{} converted, {failed} unconvertible",
            lines.len() - failed
        );
        Ok(EXIT_OK)
    }

    fn stats(&mut self, path: &Path, report_path: Option<&Path>) -> Outcome {
        let dataset = self.load(path)?.dataset;
        let stats = self.pool().install(|| compute_stats(&dataset));
        let selection = summarize_selection(&select_same_precision(&dataset));
        let report = json!({"stats": stats, "selection": selection});
        if let Some(p) = report_path {
            write_file(p, &pretty(&report))?;
        }
        let text = match self.cli.format {
            Format::Json => pretty(&report),
            Format::Table => stats_table(&stats, &selection),
        };
        self.print(&text)?;
        Ok(EXIT_OK)
    }

    fn attach(
        &mut self,
        path: &Path,
        regions_path: &Path,
        label_prop: &str,
        report_path: Option<&Path>,
    ) -> Outcome {
        let table = self.offsets()?;
        let raw = std::fs::read_to_string(regions_path).map_err(|e| io_failure(regions_path, e))?;
        let value: Value = serde_json::from_str(&raw)
            .map_err(|e| Failure::error(format!("{}: {e}", regions_path.display())))?;
        let regions = RegionSet::from_geojson(&value, label_prop)
            .map_err(|e| Failure::error(e.to_string()))?;
        let dataset = self.load(path)?.dataset;
        let report = attach_report(&dataset, &regions, &table).map_err(Failure::error)?;
        if let Some(p) = report_path {
            write_file(p, &pretty(&report))?;
        }
        let text = match self.cli.format {
            Format::Json => pretty(&report),
            Format::Table => attach_table(&report),
        };
        self.print(&text)?;
        Ok(EXIT_OK)
    }
}

/// Prediction lines: `{"id": .., "prediction": "..." | null, "absent": bool}`.
fn read_predictions(path: &Path) -> Result<BTreeMap<String, Option<String>>, Failure> {
    let raw = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let mut out = BTreeMap::new();
    for (n, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Failure::error(format!("{}:{}: {msg}", path.display(), n + 1));
        let v: Value = serde_json::from_str(line).map_err(|e| bad(&e.to_string()))?;
        let id = match v.get("id").or_else(|| v.get("entry_id")) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(x)) => x.to_string(),
            _ => return Err(bad("missing id")),
        };
        let absent = v.get("absent").and_then(Value::as_bool).unwrap_or(false);
        let pred = match v.get("prediction").or_else(|| v.get("predicted")) {
            _ if absent => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Null) | None => None,
            Some(_) => return Err(bad("prediction must be a string or null")),
        };
        if out.insert(id.clone(), pred).is_some() {
            return Err(bad(&format!("duplicate id '{id}'")));
        }
    }
    Ok(out)
}

fn eval_table(r: &EvalReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("support      {}\n", r.support));
    s.push_str(&format!(
        "EM           {:.4} ({}/{})\n",
        r.em, r.exact_matches, r.support
    ));
    s.push_str(&format!(
        "CER (micro)  {:.4} ({}/{})\n",
        r.cer_micro, r.tally.edits, r.tally.reference_chars
    ));
    for (name, subset) in [("points", r.points), ("others", r.others)] {
        if let Some(x) = subset {
            s.push_str(&format!(
                "{name:<12} support {:>5}  EM {:.4}  CER {:.4}\n",
                x.support, x.em, x.cer_micro
            ));
        }
    }
    if !r.breakdown.is_empty() {
        s.push_str("\nlatitude  longitude  support  EM\n");
        for ((lat, lon), cell) in &r.breakdown {
            s.push_str(&format!(
                "{:<9} {:<10} {:>7}  {:.4}\n",
                lat.as_str(),
                lon.as_str(),
                cell.support,
                cell.em()
            ));
        }
    }
    s
}

fn stats_table(st: &DatasetStats, sel: &SelectionSummary) -> String {
    let rows = [
        ("Well-formed points", st.well_formed_points),
        ("Incomplete points", st.incomplete_points),
        ("  latitude only", st.latitude_only),
        ("  longitude only", st.longitude_only),
        ("Surfaces", st.surfaces),
        ("Polygonal chains", st.poly_chains),
        ("Subentries", st.sub_entries),
        ("Multiple sources", st.multi_sources),
        ("Miscellaneous", st.misc),
        ("Coordinate-bearing entries", st.coordinate_bearing()),
        ("Entries with a named meridian", st.meridian_entries),
        ("Entries in file", st.entries),
    ];
    let mut s = String::new();
    for (label, n) in rows {
        s.push_str(&format!("{label:<32}{n:>7}\n"));
    }
    s.push_str("\nlat \\ lon      D     DM    DMS\n");
    for lat in PrecisionLevel::ALL {
        s.push_str(&format!("{:<8}", lat.as_str()));
        for lon in PrecisionLevel::ALL {
            s.push_str(&format!("{:>7}", st.cell(lat, lon)));
        }
        s.push('\n');
    }
    s.push_str(&format!("\nsame-precision points: {}\n", sel.selected));
    for level in PrecisionLevel::ALL {
        s.push_str(&format!(
            "  {:<4}{:>6}  {:>5.1}%\n",
            level.as_str(),
            sel.counts.get(&level).copied().unwrap_or(0),
            100.0 * sel.shares.get(&level).copied().unwrap_or(0.0)
        ));
    }
    s
}

/// Per-label precision counts of the attached same-precision points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelShares {
    pub label: String,
    pub points: usize,
    pub counts: BTreeMap<PrecisionLevel, usize>,
    pub shares: BTreeMap<PrecisionLevel, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttachReport {
    pub selected: usize,
    pub attached: usize,
    pub skipped: Vec<Value>,
    pub labels: Vec<LabelShares>,
}

pub fn attach_report(
    ds: &DatasetFile,
    regions: &RegionSet,
    table: &MeridianOffsetTable,
) -> Result<AttachReport, String> {
    let selection = select_same_precision(ds);
    let mut points = Vec::new();
    let mut levels = Vec::new();
    let mut skipped = Vec::new();
    for (entry, level) in &selection {
        let p = entry
            .coordinates
            .as_ref()
            .and_then(|g| g.as_point())
            .expect("selection holds points");
        let converted =
            resolve_meridian(&entry.meridians).and_then(|m| convert_point(p, &m, table));
        match converted.map(|c| c.complete()) {
            Ok(Some(mp)) => {
                points.push(mp);
                levels.push(*level);
            }
            Ok(None) => {
                skipped.push(json!({"id": entry.id, "reason": "incomplete after conversion"}))
            }
            Err(e) => skipped.push(json!({"id": entry.id, "reason": e.to_string()})),
        }
    }
    let attachments = attach_regions(&points, regions).map_err(|e| e.to_string())?;
    let mut per_label: BTreeMap<String, BTreeMap<PrecisionLevel, usize>> = BTreeMap::new();
    for (a, level) in attachments.iter().zip(&levels) {
        *per_label
            .entry(a.label.clone())
            .or_insert_with(|| PrecisionLevel::ALL.iter().map(|&l| (l, 0)).collect())
            .entry(*level)
            .or_default() += 1;
    }
    let labels = per_label
        .into_iter()
        .map(|(label, counts)| {
            let points: usize = counts.values().sum();
            let shares = counts
                .iter()
                .map(|(&l, &c)| (l, c as f64 / points as f64))
                .collect();
            LabelShares {
                label,
                points,
                counts,
                shares,
            }
        })
        .collect();
    Ok(AttachReport {
        selected: selection.len(),
        attached: attachments.len(),
        skipped,
        labels,
    })
}

fn attach_table(r: &AttachReport) -> String {
    let mut s = format!(
        "{} same-precision points, {} attached\n\n",
        r.selected, r.attached
    );
    s.push_str("label                   points      D%     DM%    DMS%\n");
    for l in &r.labels {
        let pct = |level| 100.0 * l.shares.get(&level).copied().unwrap_or(0.0);
        s.push_str(&format!(
            "{:<22}{:>8}{:>8.1}{:>8.1}{:>8.1}\n",
            l.label,
            l.points,
            pct(PrecisionLevel::D),
            pct(PrecisionLevel::DM),
            pct(PrecisionLevel::DMS)
        ));
    }
    s
}
