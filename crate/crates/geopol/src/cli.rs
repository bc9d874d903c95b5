//! Operator-facing command line: ETL, point queries, request evaluation,
//! explanation, and policy validation.
//!
//! All paths and dataset specs come from a flat key-value config file
//! (see [`CliConfig`]); relative paths resolve against the config file's
//! directory. Exit status: 0 success, 1 input error, 2 internal error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::geometry::{parse_wkt, Geometry};
use crate::pipeline::{decision_document, evaluate_request, explain, parse_request};
use crate::policy::{parse_policy_doc, validate_policy_set, PolicySet};
use crate::relations::infer_relations;
use crate::shapefile::{load_dataset, FieldMapping};
use crate::store::{
    build_store, load_ntriples, serialize_ntriples, DatasetInput, FeatureStore, Timestamp,
};

const DEFAULT_CONFIG: &str = "geopol.cfg";
const CONFIG_ENV: &str = "GEOPOL_CONFIG";

#[derive(Parser)]
#[command(
    name = "geopol",
    version,
    about = "Shapefile ETL, spatial queries, and location-sensitive policy decisions"
)]
struct Cli {
    /// Config file (default: $GEOPOL_CONFIG, then ./geopol.cfg)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest the configured shapefile datasets and write the N-Triples store
    Etl {
        /// ETL timestamp (RFC 3339); overrides the config `at` key
        #[arg(long, value_name = "TIMESTAMP")]
        at: Option<String>,
    },
    /// Print the spatial relations of a WKT point against the store
    Query {
        #[arg(long, value_name = "WKT")]
        point: String,
    },
    /// Evaluate request documents and print one decision document each
    Evaluate {
        #[arg(long, required = true, value_name = "FILE")]
        request: Vec<PathBuf>,
    },
    /// Print the explanation trace for request documents
    Explain {
        #[arg(long, required = true, value_name = "FILE")]
        request: Vec<PathBuf>,
    },
    /// Check the policy against the store and print a validation report
    Validate,
}

enum CliError {
    /// Bad arguments, config, or data files.
    Input(String),
    /// Failures on our side of the contract, e.g. writing output.
    Internal(String),
}

fn input(message: impl Into<String>) -> CliError {
    CliError::Input(message.into())
}

/// Dataset spec assembled from `dataset.<name>.*` config keys.
#[derive(Default)]
struct DatasetSpec {
    shp: Option<PathBuf>,
    dbf: Option<PathBuf>,
    base_iri: Option<String>,
    id_field: Option<String>,
    name_field: Option<String>,
    label: Option<String>,
}

/// Flat key-value config:
///
/// ```text
/// store  = store.nt
/// policy = policy.pol
/// at     = 2024-01-01T00:00:00Z          # optional default for etl --at
/// dataset.states.shp        = states.shp
/// dataset.states.dbf        = states.dbf
/// dataset.states.base_iri   = http://example.org/states/
/// dataset.states.id_field   = GEOID
/// dataset.states.name_field = NAME
/// dataset.states.label      = states.shp # optional
/// ```
pub struct CliConfig {
    store: Option<PathBuf>,
    policy: Option<PathBuf>,
    at: Option<String>,
    datasets: BTreeMap<String, DatasetSpec>,
}

impl CliConfig {
    /// Parse config text; relative paths are joined onto `dir`.
    fn parse(dir: &Path, text: &str, origin: &str) -> Result<CliConfig, CliError> {
        let mut config = CliConfig {
            store: None,
            policy: None,
            at: None,
            datasets: BTreeMap::new(),
        };
        let mut seen = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| input(format!("{origin}:{line_no}: {message}"));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(bad(format!("empty value for `{key}`")));
            }
            if seen.insert(key.to_string(), line_no).is_some() {
                return Err(bad(format!("duplicate key `{key}`")));
            }
            match key {
                "store" => config.store = Some(dir.join(value)),
                "policy" => config.policy = Some(dir.join(value)),
                "at" => config.at = Some(value.to_string()),
                _ => {
                    let rest = key
                        .strip_prefix("dataset.")
                        .ok_or_else(|| bad(format!("unknown key `{key}`")))?;
                    let (name, field) = rest
                        .split_once('.')
                        .ok_or_else(|| bad(format!("expected `dataset.<name>.<field>`, found `{key}`")))?;
                    if name.is_empty() {
                        return Err(bad(format!("empty dataset name in `{key}`")));
                    }
                    let spec = config.datasets.entry(name.to_string()).or_default();
                    match field {
                        "shp" => spec.shp = Some(dir.join(value)),
                        "dbf" => spec.dbf = Some(dir.join(value)),
                        "base_iri" => spec.base_iri = Some(value.to_string()),
                        "id_field" => spec.id_field = Some(value.to_string()),
                        "name_field" => spec.name_field = Some(value.to_string()),
                        "label" => spec.label = Some(value.to_string()),
                        _ => return Err(bad(format!("unknown dataset field `{field}`"))),
                    }
                }
            }
        }
        Ok(config)
    }

    fn store_path(&self) -> Result<&Path, CliError> {
        self.store
            .as_deref()
            .ok_or_else(|| input("config has no `store` key"))
    }

    fn policy_path(&self) -> Result<&Path, CliError> {
        self.policy
            .as_deref()
            .ok_or_else(|| input("config has no `policy` key"))
    }
}

fn load_config(flag: Option<PathBuf>) -> Result<CliConfig, CliError> {
    let path = flag
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CONFIG));
    let text = fs::read_to_string(&path)
        .map_err(|e| input(format!("config {}: {e}", path.display())))?;
    let dir = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    CliConfig::parse(&dir, &text, &path.display().to_string())
}

fn read_file(path: &Path, what: &str) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| input(format!("{what} {}: {e}", path.display())))
}

fn read_text(path: &Path, what: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| input(format!("{what} {}: {e}", path.display())))
}

fn load_store(config: &CliConfig) -> Result<FeatureStore, CliError> {
    let path = config.store_path()?;
    let text = read_text(path, "store")?;
    load_ntriples(&text).map_err(|e| input(format!("store {}: {e}", path.display())))
}

fn load_policy(config: &CliConfig) -> Result<PolicySet, CliError> {
    let path = config.policy_path()?;
    let text = read_text(path, "policy")?;
    parse_policy_doc(&text)
        .map_err(|e| input(format!("policy {}: {}: {e}", path.display(), e.code())))
}

/// Load policy and store together, refusing to evaluate against a store
/// the policy does not validate against.
fn load_validated(config: &CliConfig) -> Result<(FeatureStore, PolicySet), CliError> {
    let store = load_store(config)?;
    let ps = load_policy(config)?;
    let report = validate_policy_set(&ps, &store);
    if report.has_errors() {
        return Err(input(format!(
            "policy does not validate against the store:\n{report}"
        )));
    }
    Ok((store, ps))
}

fn etl(config: &CliConfig, at: Option<String>, out: &mut String) -> Result<i32, CliError> {
    let at = at
        .or_else(|| config.at.clone())
        .ok_or_else(|| input("no ETL timestamp: pass --at or set `at` in the config"))?;
    let at = Timestamp::parse(&at).map_err(|e| input(e.to_string()))?;
    if config.datasets.is_empty() {
        return Err(input("config declares no datasets"));
    }

    let mut inputs = Vec::new();
    for (name, spec) in &config.datasets {
        let missing = |field: &str| input(format!("dataset.{name}.{field} is not configured"));
        let shp_path = spec.shp.as_ref().ok_or_else(|| missing("shp"))?;
        let dbf_path = spec.dbf.as_ref().ok_or_else(|| missing("dbf"))?;
        let mapping = FieldMapping {
            id_field: spec.id_field.clone().ok_or_else(|| missing("id_field"))?,
            name_field: spec.name_field.clone().ok_or_else(|| missing("name_field"))?,
        };
        let base_iri = spec.base_iri.clone().ok_or_else(|| missing("base_iri"))?;
        let shp = read_file(shp_path, "shapefile")?;
        let dbf = read_file(dbf_path, "attribute table")?;
        let raw = load_dataset(&shp, &dbf, &mapping)
            .map_err(|e| input(format!("dataset {name}: {e}")))?;
        let label = spec.label.clone().unwrap_or_else(|| {
            shp_path
                .file_name()
                .map_or_else(|| name.clone(), |f| f.to_string_lossy().into_owned())
        });
        inputs.push(DatasetInput {
            raw,
            base_iri,
            label,
        });
    }

    let store = build_store(inputs, &at).map_err(|e| input(e.to_string()))?;
    let text = serialize_ntriples(&store);
    let path = config.store_path()?;
    write_atomically(path, text.as_bytes())?;

    for info in store.datasets() {
        let features = store.features().filter(|f| f.dataset == info.iri).count();
        out.push_str(&format!(
            "dataset <{}>: {} features, {} skipped\n",
            info.iri,
            features,
            info.skipped.len()
        ));
    }
    out.push_str(&format!(
        "wrote {} ({} triples)\n",
        path.display(),
        text.lines().count()
    ));
    Ok(0)
}

/// Write via a sibling temp file and rename, so a failure never leaves a
/// partial store behind.
fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_os_string();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let fail = |e: std::io::Error| CliError::Internal(format!("writing {}: {e}", path.display()));
    fs::write(&tmp, bytes).map_err(fail)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        fail(e)
    })
}

fn query(config: &CliConfig, point_wkt: &str, out: &mut String) -> Result<i32, CliError> {
    let store = load_store(config)?;
    let point = match parse_wkt(point_wkt) {
        Ok(Geometry::Point(p)) => p,
        Ok(_) => return Err(input("--point must be a WKT POINT")),
        Err(e) => return Err(input(format!("--point: {e}"))),
    };
    // distance facts exist only for the policy's distance targets
    let targets = match &config.policy {
        Some(_) => load_policy(config)?.distance_targets(),
        None => Default::default(),
    };
    let facts = infer_relations(point, &store, &targets, "urn:query:location")
        .map_err(|e| input(e.to_string()))?;
    if facts.within.is_empty() && facts.distances_km.is_empty() {
        out.push_str("no relations\n");
        return Ok(0);
    }
    for iri in &facts.within {
        out.push_str(&format!("within <{iri}>\n"));
    }
    for (iri, km) in &facts.distances_km {
        out.push_str(&format!("distance <{iri}> {} km\n", (km * 1e6).round() / 1e6));
    }
    Ok(0)
}

fn evaluate(
    config: &CliConfig,
    requests: &[PathBuf],
    render_explanation: bool,
    out: &mut String,
) -> Result<i32, CliError> {
    let (store, ps) = load_validated(config)?;
    for path in requests {
        let text = read_text(path, "request")?;
        let req = parse_request(&text)
            .map_err(|e| input(format!("request {}: {e}", path.display())))?;
        let decision = evaluate_request(&req, &store, &ps)
            .map_err(|e| input(format!("request {}: {e}", path.display())))?;
        out.push_str(&if render_explanation {
            explain(&decision)
        } else {
            decision_document(&decision)
        });
    }
    Ok(0)
}

fn validate(config: &CliConfig, out: &mut String) -> Result<i32, CliError> {
    let store = load_store(config)?;
    let path = config.policy_path()?;
    let text = read_text(path, "policy")?;
    // parse failures are part of the report, not a usage error
    let ps = match parse_policy_doc(&text) {
        Ok(ps) => ps,
        Err(e) => {
            out.push_str(&format!("error: {}: {e}\n", e.code()));
            return Ok(1);
        }
    };
    let report = validate_policy_set(&ps, &store);
    out.push_str(&report.to_string());
    Ok(if report.has_errors() { 1 } else { 0 })
}

fn dispatch(cli: Cli, out: &mut String) -> Result<i32, CliError> {
    let config = load_config(cli.config)?;
    match cli.command {
        Command::Etl { at } => etl(&config, at, out),
        Command::Query { point } => query(&config, &point, out),
        Command::Evaluate { request } => evaluate(&config, &request, false, out),
        Command::Explain { request } => evaluate(&config, &request, true, out),
        Command::Validate => validate(&config, out),
    }
}

/// Run the CLI over `args` (first element is the program name). Returns
/// the process exit code: 0 success, 1 input error, 2 internal error.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return 1;
        }
    };
    let mut out = String::new();
    let code = match dispatch(cli, &mut out) {
        Ok(code) => code,
        Err(CliError::Input(message)) => {
            let _ = writeln!(stderr, "error: {message}");
            return 1;
        }
        Err(CliError::Internal(message)) => {
            let _ = writeln!(stderr, "internal error: {message}");
            return 2;
        }
    };
    if stdout.write_all(out.as_bytes()).is_err() {
        return 2;
    }
    code
}
