//! `pvroof`: extract rooftop PV installation characteristics from
//! geolocalized polygons, and prepare / evaluate the side inputs.
//!
//! Exit codes: 0 on success, 1 for configuration or usage problems, 2 for
//! input data errors (including extraction runs that produced error rows).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use pvroof_core::error::Error as CoreError;
use pvroof_core::geojson::parse_polygons;
use pvroof_core::lut::{build_lut, LutBounds};
use pvroof_core::metrics::benchmark_report;
use pvroof_core::pipeline::{extract_all, ExtractionConfig, OutputFormat, Resources};
use pvroof_core::registry::AuxRegistry;
use pvroof_core::{capacity, hough};

const EXIT_USAGE: i32 = 1;
const EXIT_DATA: i32 = 2;

#[derive(Parser)]
#[command(
    name = "pvroof",
    version,
    about = "Rooftop PV characteristics extraction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract characteristics for every polygon in a GeoJSON file.
    Extract {
        /// GeoJSON FeatureCollection of PV polygons (EPSG:4326).
        #[arg(long)]
        polygons: PathBuf,
        /// Extraction config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output registry path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "geojson")]
        format: Format,
        /// Worker threads for the extraction fan-out.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Directory for per-polygon Hough debug output (edge-map PGM and
        /// detected-line CSV); only used with the hough azimuth method.
        #[arg(long)]
        hough_debug_dir: Option<PathBuf>,
    },
    /// Build the tilt look-up table from an auxiliary registry CSV.
    BuildLut {
        /// Registry CSV with header `id,lat,lon,tilt,azimuth,surface,kwp`.
        #[arg(long)]
        aux: PathBuf,
        /// Longitude x latitude cell counts, e.g. `50x50`.
        #[arg(long, default_value = "50x50")]
        grid: String,
        /// Surface category count.
        #[arg(long, default_value_t = 4)]
        categories: usize,
        /// Grid bounds as `W,S,E,N` degrees.
        #[arg(long)]
        bounds: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a surface-to-capacity model from an auxiliary registry CSV.
    FitCapacity {
        #[arg(long)]
        aux: PathBuf,
        #[arg(long, value_enum)]
        kind: ModelKind,
        /// Cluster count for the clustered kind.
        #[arg(long, default_value_t = 4)]
        clusters: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a prediction CSV against a truth CSV (both `id,value`).
    Benchmark {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, value_enum)]
        quantity: Quantity,
        /// Compass convention of the truth azimuths; `south` recodes them
        /// to the 0 = North convention before scoring.
        #[arg(long, value_enum, default_value = "north")]
        azimuth_zero: AzimuthZero,
        /// Method name shown in the report (default: pred file stem).
        #[arg(long)]
        method_name: Option<String>,
        /// Also write the machine-readable report CSV here.
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Geojson,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Linear,
    Clustered,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Quantity {
    Tilt,
    Azimuth,
    Surface,
    Capacity,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum AzimuthZero {
    North,
    South,
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(_) => CliError::usage(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e.to_string())
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PVROOF_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Extract {
            polygons,
            config,
            out,
            format,
            workers,
            hough_debug_dir,
        } => cmd_extract(
            &polygons,
            &config,
            &out,
            format,
            workers,
            hough_debug_dir.as_deref(),
        ),
        Command::BuildLut {
            aux,
            grid,
            categories,
            bounds,
            out,
        } => cmd_build_lut(&aux, &grid, categories, &bounds, &out),
        Command::FitCapacity {
            aux,
            kind,
            clusters,
            out,
        } => cmd_fit_capacity(&aux, kind, clusters, &out),
        Command::Benchmark {
            pred,
            truth,
            quantity,
            azimuth_zero,
            method_name,
            out_csv,
        } => cmd_benchmark(
            &pred,
            &truth,
            quantity,
            azimuth_zero,
            method_name.as_deref(),
            out_csv.as_deref(),
        ),
    }
}

fn cmd_extract(
    polygons_path: &Path,
    config_path: &Path,
    out_path: &Path,
    format: Format,
    workers: usize,
    hough_debug_dir: Option<&Path>,
) -> Result<i32, CliError> {
    let config_text = std::fs::read_to_string(config_path).map_err(|e| {
        CliError::usage(format!("cannot read config {}: {e}", config_path.display()))
    })?;
    let config = ExtractionConfig::from_json(&config_text)
        .map_err(|e| CliError::usage(format!("invalid config: {e}")))?;
    config.validate()?;
    let resources = Resources::load(&config)?;

    let file = File::open(polygons_path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", polygons_path.display())))?;
    let parsed = parse_polygons(BufReader::new(file))?;
    if parsed.interior_rings_ignored > 0 {
        log::warn!(
            "ignored {} interior ring(s); holes are not modeled",
            parsed.interior_rings_ignored
        );
    }
    for skipped in &parsed.skipped {
        log::warn!("skipped feature `{}`: {}", skipped.id, skipped.reason);
    }

    if let Some(dir) = hough_debug_dir {
        write_hough_debug(dir, &parsed.polygons, &config)?;
    }

    let output = extract_all(&parsed.polygons, &config, &resources, workers)?;
    let format = match format {
        Format::Geojson => OutputFormat::GeoJson,
        Format::Csv => OutputFormat::Csv,
    };
    pvroof_core::pipeline::write_registry(out_path, format, &parsed.polygons, &output.records)?;

    eprintln!(
        "ok={} degraded={} error={}",
        output.summary.ok, output.summary.degraded, output.summary.error
    );
    Ok(if output.summary.error == 0 {
        0
    } else {
        EXIT_DATA
    })
}

/// Edge maps and detected lines for visual inspection, one pair of files
/// per polygon.
fn write_hough_debug(
    dir: &Path,
    polygons: &[pvroof_core::PVPolygon],
    config: &ExtractionConfig,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    for polygon in polygons {
        let Ok(mask) = hough::rasterize_mask(polygon, config.hough.pixel_size_m) else {
            continue;
        };
        let edges = hough::edge_map(&mask, &config.hough);
        let safe_id: String = polygon
            .id()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        let pgm = File::create(dir.join(format!("{safe_id}_edges.pgm")))?;
        hough::write_pgm(&edges, pgm)?;
        let segments = hough::detect_segments(&edges, &config.hough);
        let csv = File::create(dir.join(format!("{safe_id}_lines.csv")))?;
        hough::write_lines_csv(&segments, csv)?;
    }
    Ok(())
}

fn cmd_build_lut(
    aux_path: &Path,
    grid: &str,
    categories: usize,
    bounds: &str,
    out_path: &Path,
) -> Result<i32, CliError> {
    let (k, l) = parse_grid(grid)?;
    let bounds = parse_bounds(bounds)?;
    let aux = load_registry(aux_path)?;
    let (lut, report) = build_lut(&aux, k, l, categories, bounds)?;
    std::fs::write(out_path, lut.to_json())?;
    eprintln!(
        "observed={} interpolated={} dropped_outside={} empty_categories={:?}",
        report.observed_cells,
        report.interpolated_cells,
        report.dropped_outside,
        report.empty_categories
    );
    Ok(0)
}

fn cmd_fit_capacity(
    aux_path: &Path,
    kind: ModelKind,
    clusters: usize,
    out_path: &Path,
) -> Result<i32, CliError> {
    let aux = load_registry(aux_path)?;
    let model = match kind {
        ModelKind::Linear => capacity::fit_linear(&aux)?,
        ModelKind::Clustered => capacity::fit_clustered(&aux, clusters)?,
    };
    std::fs::write(out_path, model.to_json())?;
    Ok(0)
}

fn cmd_benchmark(
    pred_path: &Path,
    truth_path: &Path,
    quantity: Quantity,
    azimuth_zero: AzimuthZero,
    method_name: Option<&str>,
    out_csv: Option<&Path>,
) -> Result<i32, CliError> {
    let pred = load_values(pred_path)?;
    let truth = load_values(truth_path)?;

    let missing_in_truth: Vec<&String> =
        pred.keys().filter(|id| !truth.contains_key(*id)).collect();
    let missing_in_pred: Vec<&String> = truth.keys().filter(|id| !pred.contains_key(*id)).collect();
    if !missing_in_truth.is_empty() || !missing_in_pred.is_empty() {
        let sample: Vec<String> = missing_in_truth
            .iter()
            .chain(missing_in_pred.iter())
            .take(5)
            .map(|s| s.to_string())
            .collect();
        return Err(CliError::data(format!(
            "id mismatch between prediction and truth; first missing ids: {}",
            sample.join(", ")
        )));
    }

    let circular = quantity == Quantity::Azimuth;
    let mape = matches!(quantity, Quantity::Surface | Quantity::Capacity);
    let mut pred_values = Vec::with_capacity(pred.len());
    let mut truth_values = Vec::with_capacity(truth.len());
    for (id, p) in &pred {
        let mut t = truth[id];
        if circular && azimuth_zero == AzimuthZero::South {
            t = pvroof_core::angles::normalize_azimuth(t + 180.0);
        }
        pred_values.push(*p);
        truth_values.push(t);
    }

    let name = method_name.map(str::to_string).unwrap_or_else(|| {
        pred_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "method".into())
    });
    let quantity_label = match quantity {
        Quantity::Tilt => "tilt",
        Quantity::Azimuth => "azimuth",
        Quantity::Surface => "surface",
        Quantity::Capacity => "capacity",
    };
    let table = benchmark_report(
        quantity_label,
        circular,
        mape,
        &[(name, pred_values, truth_values)],
    )?;
    print!("{}", table.to_text());
    if let Some(path) = out_csv {
        std::fs::write(path, table.to_csv())?;
    }
    Ok(0)
}

fn load_registry(path: &Path) -> Result<AuxRegistry, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    Ok(AuxRegistry::load_csv(BufReader::new(file))?)
}

/// `id,value` CSV, insertion-ordered by id.
fn load_values(path: &Path) -> Result<BTreeMap<String, f64>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut out = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        if record.len() < 2 {
            return Err(CliError::data(format!(
                "{}: row {} needs `id,value`",
                path.display(),
                i + 1
            )));
        }
        let value: f64 = record[1].parse().map_err(|_| {
            CliError::data(format!(
                "{}: row {}: invalid value `{}`",
                path.display(),
                i + 1,
                &record[1]
            ))
        })?;
        out.insert(record[0].to_string(), value);
    }
    if out.is_empty() {
        return Err(CliError::data(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}

fn parse_grid(grid: &str) -> Result<(usize, usize), CliError> {
    let parts: Vec<&str> = grid.split('x').collect();
    if parts.len() != 2 {
        return Err(CliError::usage(format!(
            "--grid expects `KxL`, got `{grid}`"
        )));
    }
    let k = parts[0]
        .parse()
        .map_err(|_| CliError::usage(format!("invalid grid dimension `{}`", parts[0])))?;
    let l = parts[1]
        .parse()
        .map_err(|_| CliError::usage(format!("invalid grid dimension `{}`", parts[1])))?;
    Ok((k, l))
}

fn parse_bounds(bounds: &str) -> Result<LutBounds, CliError> {
    let parts: Vec<&str> = bounds.split(',').collect();
    if parts.len() != 4 {
        return Err(CliError::usage(format!(
            "--bounds expects `W,S,E,N`, got `{bounds}`"
        )));
    }
    let mut values = [0.0f64; 4];
    for (i, part) in parts.iter().enumerate() {
        values[i] = part
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("invalid bound `{part}`")))?;
    }
    Ok(LutBounds::new(values[0], values[1], values[2], values[3])?)
}
