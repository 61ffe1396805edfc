//! The `confint` command line.
//!
//! Every subcommand reads its statistics either from a CSV file (`--input`
//! with `--y`, `--x`, `--w`) or directly from `--stats-json`. JSON results are
//! rendered by the same functions the HTTP service uses.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use confint_core::api::{
    self, IntervalQuery, RegionQuery, SearchOptions, SurfaceQuery, DEFAULT_RESOLUTION,
};
use confint_core::export::{self, Format};
use confint_core::identify::MIN_WITNESS_ROWS;
use confint_core::{
    construct_witness, ConfoundingInterval, Direction, Error, ErrorKind, Geometry, OutlierRule,
    PrepareOptions, PrepareReport, RangeFilter, Roles, SufficientStats,
};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_BOUNDS: u8 = 4;

/// Default directory for `report` and for relative `--output` paths.
pub const OUTPUT_DIR_ENV: &str = "CONFINT_OUTPUT_DIR";

const DEFAULT_WITNESS_ROWS: usize = 100;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    message: String,
    clap: Option<clap::Error>,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
            clap: None,
        }
    }

    /// Wraps a core error, prefixed with the flag or column it concerns.
    fn core(context: &str, e: Error) -> Self {
        let code = match (&e, e.kind()) {
            (Error::NonNumeric { .. }, _) => EXIT_DATA,
            (_, ErrorKind::Input) => EXIT_USAGE,
            (_, ErrorKind::Data) => EXIT_DATA,
            (_, ErrorKind::Bounds) => EXIT_BOUNDS,
        };
        Self {
            code,
            message: format!("{context}: {e}"),
            clap: None,
        }
    }

    fn with_suffix(mut self, suffix: &str) -> Self {
        self.message.push_str(suffix);
        self
    }

    pub fn message(&self) -> String {
        match &self.clap {
            Some(e) => e.to_string(),
            None => self.message.clone(),
        }
    }

    /// Prints the error to stderr.
    pub fn report(&self) {
        match &self.clap {
            Some(e) => {
                let _ = e.print();
            }
            None => eprintln!("error: {}", self.message),
        }
    }
}

fn io_error(context: impl std::fmt::Display, e: std::io::Error) -> CliError {
    CliError::usage(format!("{context}: {e}"))
}

#[derive(Parser)]
#[command(
    name = "confint",
    version,
    about = "Confounding intervals for a regression slope"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the sufficient statistics as JSON.
    Stats(StatsCmd),
    /// Print the confounding interval for one pair of bounds as JSON.
    Interval(IntervalCmd),
    /// Tabulate the interval over a grid of bounds.
    Surface(SurfaceCmd),
    /// Bounds that guarantee an effect beyond a threshold.
    Region(RegionCmd),
    /// Write confounder vectors that attain an interval endpoint, as CSV.
    Witness(WitnessCmd),
    /// Run everything and write the results into a directory.
    Report(ReportCmd),
}

#[derive(Args)]
struct Source {
    /// Sufficient statistics as inline JSON or `@path`.
    #[arg(long, value_name = "JSON|@FILE", conflicts_with = "input")]
    stats_json: Option<String>,
    /// CSV file with a header row.
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Outcome column.
    #[arg(long, value_name = "COLUMN")]
    y: Option<String>,
    /// Treatment column.
    #[arg(long, value_name = "COLUMN")]
    x: Option<String>,
    /// Measured covariate columns (comma separated or repeated).
    #[arg(long, value_name = "COLUMN", value_delimiter = ',')]
    w: Vec<String>,
    #[arg(long, value_name = "UNIT")]
    y_unit: Option<String>,
    #[arg(long, value_name = "UNIT")]
    x_unit: Option<String>,
    /// Drop rows whose treatment exceeds Q3 + MULT * IQR.
    #[arg(long, value_name = "MULT")]
    outlier_iqr: Option<f64>,
    /// Also drop rows below Q1 - MULT * IQR.
    #[arg(long, requires = "outlier_iqr")]
    outlier_two_sided: bool,
    /// Keep rows with COLUMN in [MIN, MAX]; either bound may be empty.
    #[arg(long, value_name = "COLUMN:MIN:MAX", allow_hyphen_values = true)]
    filter: Vec<RangeFilter>,
}

struct Loaded {
    stats: SufficientStats,
    report: Option<PrepareReport>,
    label: String,
}

impl Source {
    fn load(&self) -> Result<Loaded, CliError> {
        if let Some(arg) = &self.stats_json {
            let text = match arg.strip_prefix('@') {
                Some(path) => std::fs::read_to_string(path)
                    .map_err(|e| io_error(format!("--stats-json {path}"), e))?,
                None => arg.clone(),
            };
            let stats: SufficientStats = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("--stats-json: {e}")))?;
            return Ok(Loaded {
                stats,
                report: None,
                label: "summary statistics".into(),
            });
        }
        let Some(path) = &self.input else {
            return Err(CliError::usage(
                "statistics are required: pass --stats-json, or --input with --y and --x",
            ));
        };
        let (Some(y), Some(x)) = (&self.y, &self.x) else {
            return Err(CliError::usage("--input needs both --y and --x"));
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| io_error(format!("--input {}", path.display()), e))?;
        let roles = Roles {
            y: y.clone(),
            x: x.clone(),
            w: self.w.clone(),
            y_unit: self.y_unit.clone(),
            x_unit: self.x_unit.clone(),
        };
        let options = PrepareOptions {
            outlier: self.outlier_iqr.map(|m| OutlierRule {
                multiplier: m,
                two_sided: self.outlier_two_sided,
            }),
            filters: self.filter.clone(),
        };
        let (stats, report) = api::stats_from_csv(&text, &roles, &options).map_err(|e| {
            let context = match &e {
                Error::MissingColumn(c)
                | Error::NonNumeric { column: c, .. }
                | Error::Collinear { column: c } => role_flag(&roles, &self.filter, c),
                _ => format!("--input {}", path.display()),
            };
            CliError::core(&context, e)
        })?;
        let mut label = format!("{} ~ {}", roles.y, roles.x);
        if !roles.w.is_empty() {
            let _ = write!(label, " | {}", roles.w.join(", "));
        }
        Ok(Loaded {
            stats,
            report: Some(report),
            label,
        })
    }
}

/// The flag through which `column` entered the analysis.
fn role_flag(roles: &Roles, filters: &[RangeFilter], column: &str) -> String {
    if column == roles.y {
        "--y".into()
    } else if column == roles.x {
        "--x".into()
    } else if roles.w.iter().any(|w| w == column) {
        "--w".into()
    } else if filters.iter().any(|f| f.column == column) {
        "--filter".into()
    } else {
        format!("column '{column}'")
    }
}

#[derive(Args)]
struct Bounds {
    /// Upper bound on R^2 of x regressed on (w, u).
    #[arg(long)]
    bx: f64,
    /// Upper bound on R^2 of y regressed on (w, u).
    #[arg(long)]
    by: f64,
}

#[derive(Args)]
struct Search {
    /// Lower bound on the correlation of the fitted vectors (default -1).
    #[arg(long, allow_negative_numbers = true)]
    rho_f_lo: Option<f64>,
    /// Upper bound on the correlation of the fitted vectors (default 1).
    #[arg(long, allow_negative_numbers = true)]
    rho_f_hi: Option<f64>,
    /// `box` searches the full parameter box; `realizable` keeps only
    /// points some confounder attains.
    #[arg(long)]
    geometry: Option<Geometry>,
    /// Grid points per axis before refinement.
    #[arg(long)]
    grid_points: Option<usize>,
}

impl Search {
    fn options(&self, default_geometry: Geometry) -> SearchOptions {
        let rho_f_bounds = (self.rho_f_lo.is_some() || self.rho_f_hi.is_some())
            .then(|| [self.rho_f_lo.unwrap_or(-1.0), self.rho_f_hi.unwrap_or(1.0)]);
        SearchOptions {
            rho_f_bounds,
            geometry: self.geometry.unwrap_or(default_geometry),
            grid_points: self.grid_points,
        }
    }
}

#[derive(Args)]
struct Output {
    /// Write to FILE instead of stdout.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Side {
    Lower,
    Upper,
}

#[derive(Args)]
struct StatsCmd {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct IntervalCmd {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    bounds: Bounds,
    #[command(flatten)]
    search: Search,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct GridArgs {
    /// Grid points per bounds axis.
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct SurfaceCmd {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    search: Search,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct RegionCmd {
    #[command(flatten)]
    source: Source,
    /// Effect threshold.
    #[arg(long, allow_negative_numbers = true)]
    beta_star: f64,
    /// `below`: the interval must lie at or below beta*; `above`: at or above.
    #[arg(long, default_value = "below")]
    direction: Direction,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    search: Search,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct WitnessCmd {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    bounds: Bounds,
    #[arg(long, value_enum)]
    side: Side,
    /// Rows to generate (default: the dataset size, or 100 with --stats-json).
    #[arg(long)]
    n: Option<usize>,
    /// Search settings; the geometry defaults to `realizable` here, since
    /// only realizable endpoints have witnesses.
    #[command(flatten)]
    search: Search,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ReportCmd {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    bounds: Bounds,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
    /// Threshold for the region; skipped when absent.
    #[arg(long, allow_negative_numbers = true)]
    beta_star: Option<f64>,
    #[arg(long, default_value = "below")]
    direction: Direction,
    #[command(flatten)]
    search: Search,
    /// Directory to write into.
    #[arg(long, value_name = "DIR", env = OUTPUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the command and writes its
/// primary output to `out`.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{}", e.render());
            return Ok(());
        }
        Err(e) => {
            return Err(CliError {
                code: EXIT_USAGE,
                message: String::new(),
                clap: Some(e),
            })
        }
    };
    match cli.command {
        Command::Stats(c) => stats(c, out),
        Command::Interval(c) => interval(c, out),
        Command::Surface(c) => surface(c, out),
        Command::Region(c) => region(c, out),
        Command::Witness(c) => witness(c, out),
        Command::Report(c) => report(c, out),
    }
}

/// Resolves `--output`: relative paths land in `$CONFINT_OUTPUT_DIR` when set.
fn output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| io_error(parent.display(), e))?;
    }
    std::fs::write(path, text).map_err(|e| io_error(path.display(), e))
}

fn emit(output: &Output, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match &output.output {
        Some(path) => write_file(&output_path(path), text),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| io_error("stdout", e)),
    }
}

fn bounds_error(e: Error) -> CliError {
    let context = match e.kind() {
        ErrorKind::Bounds => "--bx/--by",
        _ => "search",
    };
    CliError::core(context, e)
}

fn search_error(e: Error) -> CliError {
    match e {
        Error::InfeasibleBounds(_) => bounds_error(e),
        Error::Input(ref m) if m.contains("resolution") => CliError::core("--resolution", e),
        Error::Input(ref m) if m.contains("grid") => CliError::core("--grid-points", e),
        Error::Input(ref m) if m.contains("rho_f") => CliError::core("--rho-f-lo/--rho-f-hi", e),
        Error::Input(ref m) if m.contains("beta_star") => CliError::core("--beta-star", e),
        _ => CliError::core("stats", e),
    }
}

fn describe_report(r: &PrepareReport) -> String {
    let mut s = format!(
        "rows read {}, dropped {} with missing values, {} by filters, {} as outliers; n = {}",
        r.rows_read, r.dropped_missing, r.dropped_range, r.dropped_outliers, r.n
    );
    if let Some(t) = r.outlier_upper {
        let _ = write!(s, " (upper outlier threshold {t})");
    }
    s
}

fn stats(c: StatsCmd, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = c.source.load()?;
    if let Some(r) = &loaded.report {
        eprintln!("{}", describe_report(r));
    }
    emit(&c.output, &api::render_stats(&loaded.stats), out)
}

fn interval(c: IntervalCmd, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = c.source.load()?;
    let q = IntervalQuery {
        bx: c.bounds.bx,
        by: c.bounds.by,
        search: c.search.options(Geometry::Box),
    };
    let text = api::render_interval(&loaded.stats, &q).map_err(search_error)?;
    emit(&c.output, &text, out)
}

fn surface(c: SurfaceCmd, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = c.source.load()?;
    let q = SurfaceQuery {
        resolution: c.grid.resolution,
        search: c.search.options(Geometry::Box),
    };
    let grid = api::run_surface(&loaded.stats, &q).map_err(search_error)?;
    emit(
        &c.output,
        &export::surface_to_string(&grid, c.grid.format.into()),
        out,
    )
}

fn region(c: RegionCmd, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = c.source.load()?;
    let q = RegionQuery {
        beta_star: c.beta_star,
        direction: c.direction,
        surface: SurfaceQuery {
            resolution: c.grid.resolution,
            search: c.search.options(Geometry::Box),
        },
    };
    let region = api::run_region(&loaded.stats, &q).map_err(search_error)?;
    emit(
        &c.output,
        &export::region_to_string(&region, c.grid.format.into()),
        out,
    )
}

fn endpoint(ci: &ConfoundingInterval, side: Side) -> (f64, confint_core::AdjustmentPoint) {
    match side {
        Side::Lower => (ci.lower, ci.lower_witness),
        Side::Upper => (ci.upper, ci.upper_witness),
    }
}

fn witness(c: WitnessCmd, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = c.source.load()?;
    let n =
        c.n.or(loaded.report.as_ref().map(|r| r.n))
            .unwrap_or(DEFAULT_WITNESS_ROWS);
    if n < MIN_WITNESS_ROWS {
        return Err(CliError::usage(format!(
            "--n: need at least {MIN_WITNESS_ROWS} rows, got {n}"
        )));
    }
    let q = IntervalQuery {
        bx: c.bounds.bx,
        by: c.bounds.by,
        search: c.search.options(Geometry::Realizable),
    };
    let ci = api::run_interval(&loaded.stats, &q).map_err(search_error)?;
    let (value, point) = endpoint(&ci, c.side);
    let w = construct_witness(&loaded.stats, &point, n).map_err(|e| {
        let hint = if q.search.geometry == Geometry::Box {
            " (box endpoints need not be realizable; try --geometry realizable)"
        } else {
            ""
        };
        CliError::core("--side", e).with_suffix(hint)
    })?;
    eprintln!(
        "endpoint {value} at rx = {}, ry = {}, rho_f = {}; regression on the witness gives {}",
        point.rx, point.ry, point.rho_f, w.achieved_beta
    );
    emit(&c.output, &export::witness_to_csv(&w), out)
}

fn report(c: ReportCmd, out: &mut dyn Write) -> Result<(), CliError> {
    let dir = c.out_dir.clone().ok_or_else(|| {
        CliError::usage(format!("--out-dir is required (or set {OUTPUT_DIR_ENV})"))
    })?;
    let loaded = c.source.load()?;
    let stats = loaded.stats;
    let options = c.search.options(Geometry::Box);
    let iq = IntervalQuery {
        bx: c.bounds.bx,
        by: c.bounds.by,
        search: options,
    };
    let ci = api::run_interval(&stats, &iq).map_err(search_error)?;
    let sq = SurfaceQuery {
        resolution: c.resolution,
        search: options,
    };
    let grid = api::run_surface(&stats, &sq).map_err(search_error)?;

    let mut files = vec![
        ("stats.json", api::render_stats(&stats)),
        ("interval.json", export::to_json(&ci)),
        (
            "surface.json",
            export::surface_to_string(&grid, Format::Json),
        ),
        ("surface.csv", export::surface_to_string(&grid, Format::Csv)),
    ];

    let mut summary = String::new();
    let s = &mut summary;
    let _ = writeln!(s, "Confounding-interval report");
    let _ = writeln!(s, "model: {}", loaded.label);
    if let Some(r) = &loaded.report {
        let _ = writeln!(s, "data: {}", describe_report(r));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "sufficient statistics");
    let _ = writeln!(s, "  sd_ratio         {}", stats.sd_ratio);
    let _ = writeln!(s, "  rho_xy           {}", stats.rho_xy);
    let _ = writeln!(s, "  r2_wx            {}", stats.r2_wx);
    let _ = writeln!(s, "  r2_wy            {}", stats.r2_wy);
    let _ = writeln!(s, "  beta_xy_given_w  {}", stats.beta_xy_given_w);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "bounds (bx, by) = ({}, {}), transformed ({:.4}, {:.4})",
        ci.bx, ci.by, ci.method.tbx, ci.method.tby
    );
    let _ = writeln!(s, "interval [L, U] = [{:.4}, {:.4}]", ci.lower, ci.upper);
    let _ = writeln!(
        s,
        "sign identified: {}",
        if ci.sign_identified() { "yes" } else { "no" }
    );
    let _ = writeln!(
        s,
        "geometry {}; endpoints realizable by a confounder: lower {}, upper {}",
        ci.method.geometry,
        if ci.method.lower_realizable {
            "yes"
        } else {
            "no"
        },
        if ci.method.upper_realizable {
            "yes"
        } else {
            "no"
        },
    );
    let (nx, ny) = grid.shape();
    let _ = writeln!(
        s,
        "surface: {nx} x {ny} grid up to {}",
        grid.bx_axis[nx - 1]
    );

    if let Some(beta_star) = c.beta_star {
        let region =
            confint_core::threshold_region(&grid, beta_star, c.direction).map_err(search_error)?;
        let inside = region.mask.iter().flatten().filter(|&&m| m).count();
        let here = region.contains(grid.nearest(ci.bx, ci.by));
        let _ = writeln!(
            s,
            "region beta* = {beta_star} ({}): {inside} of {} cells; nearest cell to (bx, by) {}",
            c.direction,
            nx * ny,
            if here { "inside" } else { "outside" }
        );
        files.push((
            "region.json",
            export::region_to_string(&region, Format::Json),
        ));
        files.push(("region.csv", export::region_to_string(&region, Format::Csv)));
    }

    // Box endpoints may not be attained by any confounder; those witnesses
    // come from the realizable interval instead.
    let n = loaded.report.as_ref().map_or(DEFAULT_WITNESS_ROWS, |r| r.n);
    let mut realizable = None;
    for (side, name) in [
        (Side::Lower, "witness_lower.csv"),
        (Side::Upper, "witness_upper.csv"),
    ] {
        let attained = match side {
            Side::Lower => ci.method.lower_realizable,
            Side::Upper => ci.method.upper_realizable,
        };
        let (value, point, note) = if attained {
            let (v, p) = endpoint(&ci, side);
            (v, p, "")
        } else {
            if realizable.is_none() {
                let rq = IntervalQuery {
                    search: SearchOptions {
                        geometry: Geometry::Realizable,
                        ..options
                    },
                    ..iq
                };
                realizable = Some(api::run_interval(&stats, &rq).map_err(search_error)?);
            }
            let (v, p) = endpoint(realizable.as_ref().expect("computed above"), side);
            (
                v,
                p,
                " (endpoint not realizable; sharp realizable endpoint used)",
            )
        };
        match construct_witness(&stats, &point, n) {
            Ok(w) => {
                let _ = writeln!(
                    s,
                    "{name}: {n} rows for endpoint {value:.4}{note}, slope on witness {:.4}",
                    w.achieved_beta
                );
                files.push((name, export::witness_to_csv(&w)));
            }
            Err(e) => {
                let _ = writeln!(s, "{name}: not written ({e})");
            }
        }
    }
    files.push(("summary.txt", summary.clone()));

    for (name, text) in &files {
        write_file(&dir.join(name), text)?;
    }
    out.write_all(summary.as_bytes())
        .map_err(|e| io_error("stdout", e))
}
