use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use darcyflow::config::{load_config, ConfigFile, LoadedConfig};
use darcyflow::discretization::{residual_history, residual_report};
use darcyflow::facies::{self, CorrLen};
use darcyflow::io::{metrics, plot, tensor, write_atomic};
use darcyflow::wells::{production_series, read_production_csv, write_production_csv};
use darcyflow::{simulator, units, validate_config, Error, FieldSeries, Phase};
use serde_json::{json, Value};

/// Two-phase oil/water reservoir simulator.
#[derive(Parser, Debug)]
#[command(name = "darcyflow", version)]
struct Cli {
    /// Run configuration (TOML). Built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Facies seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write facies realizations for consecutive seeds.
    Generate {
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Run the simulation and write the field series.
    Simulate,
    /// Physics loss and per-step residual norms of a field series.
    Residual {
        #[arg(long)]
        series: PathBuf,
        /// Rock directory; defaults to the series directory when it holds
        /// rock files, else the configuration.
        #[arg(long)]
        rock: Option<PathBuf>,
        /// Also write per-cell residual tensors (kg/(m3 s)) to the output directory.
        #[arg(long)]
        residual_out: bool,
    },
    /// Production CSV for a field series.
    Wells {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        rock: Option<PathBuf>,
    },
    /// MAE and MSE between two field series.
    Metrics {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Heatmap of one layer of a series, or per-well curves from a production CSV.
    Plot {
        #[arg(long, conflicts_with = "production", required_unless_present = "production")]
        series: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Quantity::Pressure)]
        quantity: Quantity,
        /// Time slice.
        #[arg(long, default_value_t = 0)]
        step: usize,
        /// Layer `k`.
        #[arg(long, default_value_t = 0)]
        layer: usize,
        #[arg(long)]
        production: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Quantity {
    Pressure,
    SatW,
}

type CliResult<T> = std::result::Result<T, Error>;

fn provenance(cli: &Cli, command: &str, loaded: Option<&LoadedConfig>) -> CliResult<Value> {
    let (config_toml, config_si) = match loaded {
        Some(l) => (Value::String(l.file.to_toml()?), l.echo.clone()),
        None => (Value::Null, Value::Null),
    };
    Ok(json!({
        "tool": "darcyflow",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "argv": std::env::args().collect::<Vec<_>>(),
        "seed": loaded.map(|l| l.file.rock.seed).or(cli.seed),
        "config_path": cli.config.as_ref().map(|p| p.display().to_string()),
        "config_toml": config_toml,
        "config_si": config_si,
    }))
}

fn load(cli: &Cli) -> CliResult<LoadedConfig> {
    match &cli.config {
        Some(path) => load_config(path, cli.seed),
        None => {
            let mut file = ConfigFile::default();
            if let Some(s) = cli.seed {
                file.rock.seed = s;
            }
            file.resolve(Path::new("."))
        }
    }
}

fn out_dir(cli: &Cli) -> CliResult<&Path> {
    cli.out
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("this command needs --out <DIR>".into()))
}

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let text = serde_json::to_vec_pretty(value).expect("JSON values always serialize");
    write_atomic(path, &text)
}

/// Replaces the configured rock with `--rock`, or with rock files stored next
/// to the series.
fn apply_rock(loaded: &mut LoadedConfig, rock: Option<&Path>, series: &Path) -> CliResult<Option<PathBuf>> {
    let dir = match rock {
        Some(d) => Some(d.to_path_buf()),
        None if series.join(tensor::PERM_FILE).exists() => Some(series.to_path_buf()),
        None => None,
    };
    if let Some(d) = &dir {
        loaded.sim.rock = tensor::read_rock(d, &loaded.sim.grid)?;
        validate_config(&loaded.sim).into_result()?;
    }
    Ok(dir)
}

fn generate(cli: &Cli, count: usize) -> CliResult<Value> {
    let loaded = load(cli)?;
    let out = out_dir(cli)?;
    let r = &loaded.file.rock;
    let corr = CorrLen { x: r.corr_len_m[0], y: r.corr_len_m[1], z: r.corr_len_m[2] };
    let prov = provenance(cli, "generate", Some(&loaded))?;
    let mut written = Vec::new();
    for (seed, rock) in facies::generate_dataset(r.seed, count, loaded.sim.grid, corr, r.sand_fraction)? {
        let dir = out.join(format!("seed_{seed}"));
        let mut p = prov.clone();
        p["seed"] = json!(seed);
        tensor::write_rock(&dir, &loaded.sim.grid, &rock, &p)?;
        written.push(json!({ "seed": seed, "dir": dir, "sand_fraction": facies::sand_fraction_of(&rock) }));
    }
    write_json(&out.join("provenance.json"), &prov)?;
    Ok(json!({ "realizations": written }))
}

fn simulate(cli: &Cli) -> CliResult<Value> {
    let loaded = load(cli)?;
    let out = out_dir(cli)?;
    let cfg = &loaded.sim;
    let n = cfg.n_steps;
    let dt_days = units::s_to_days(cfg.dt);
    let (series, reports) = simulator::simulate_observed(cfg, |m, rep| {
        eprintln!("step {m}/{n} t={:.2} d: {rep}", m as f64 * dt_days);
    })?;
    let prov = provenance(cli, "simulate", Some(&loaded))?;
    tensor::write_series(out, &series, &prov)?;
    tensor::write_rock(out, &cfg.grid, &cfg.rock, &prov)?;
    write_json(&out.join("reports.json"), &json!(reports))?;
    write_json(&out.join("provenance.json"), &prov)?;
    let iters: usize = reports.iter().map(|r| r.newton_iters).sum();
    Ok(json!({ "steps": reports.len(), "newton_iters": iters, "out": out }))
}

fn residual(cli: &Cli, series_dir: &Path, rock: Option<&Path>, residual_out: bool) -> CliResult<Value> {
    let mut loaded = load(cli)?;
    let rock_dir = apply_rock(&mut loaded, rock, series_dir)?;
    let series = tensor::read_series(series_dir)?;
    let report = residual_report(&series, &loaded.sim)?;
    let mut result = json!(report);
    result["series"] = json!(series_dir);
    result["rock"] = json!(rock_dir);
    if let Some(out) = &cli.out {
        let mut prov = provenance(cli, "residual", Some(&loaded))?;
        prov["series"] = json!(series_dir);
        prov["rock"] = json!(rock_dir);
        if residual_out {
            let history = residual_history(&series, &loaded.sim)?;
            let [nz, ny, nx] = series.shape;
            let dims = [history.len(), nz, ny, nx];
            for (p, phase) in Phase::BOTH.into_iter().enumerate() {
                let data: Vec<f64> = history.iter().flat_map(|h| h[p].values.iter().copied()).collect();
                let header = tensor::TensorHeader::series(dims, &format!("residual_{}", phase.name()), "kg/(m3 s)", prov.clone());
                tensor::write_tensor(&out.join(format!("residual_{}.bin", phase.name())), &data, &header)?;
            }
        }
        write_json(&out.join("residual.json"), &result)?;
        write_json(&out.join("provenance.json"), &prov)?;
    } else if residual_out {
        return Err(Error::InvalidArgument("--residual-out needs --out <DIR>".into()));
    }
    Ok(result)
}

fn wells_cmd(cli: &Cli, series_dir: &Path, rock: Option<&Path>) -> CliResult<Value> {
    let mut loaded = load(cli)?;
    apply_rock(&mut loaded, rock, series_dir)?;
    let series = tensor::read_series(series_dir)?;
    let table = production_series(&series, &loaded.sim)?;
    let rows = table.rows();
    match &cli.out {
        Some(out) => {
            let mut buf = Vec::new();
            write_production_csv(&rows, &mut buf)?;
            write_atomic(&out.join("production.csv"), &buf)?;
            let mut prov = provenance(cli, "wells", Some(&loaded))?;
            prov["series"] = json!(series_dir);
            write_json(&out.join("provenance.json"), &prov)?;
            Ok(json!({ "rows": rows.len(), "csv": out.join("production.csv") }))
        }
        None => {
            write_production_csv(&rows, std::io::stdout().lock())?;
            Ok(Value::Null)
        }
    }
}

fn metrics_cmd(cli: &Cli, a: &Path, b: &Path) -> CliResult<Value> {
    let sa = tensor::read_series(a)?;
    let sb = tensor::read_series(b)?;
    let m = metrics::compare_series(&sa, &sb)?;
    let result = json!({ "a": a, "b": b, "pressure": m.pressure, "sat_w": m.sat_w });
    if let Some(out) = &cli.out {
        write_json(&out.join("metrics.json"), &result)?;
        write_json(&out.join("provenance.json"), &provenance(cli, "metrics", None)?)?;
    }
    Ok(result)
}

fn series_layer(series: &FieldSeries, quantity: Quantity, step: usize, layer: usize) -> CliResult<Vec<f64>> {
    let [nz, ny, nx] = series.shape;
    if step >= series.n_slices() {
        return Err(Error::OutOfRange(format!("step {step} outside 0..{}", series.n_slices())));
    }
    if layer >= nz {
        return Err(Error::OutOfRange(format!("layer {layer} outside 0..{nz}")));
    }
    let snap = series.slice(step);
    let field = match quantity {
        Quantity::Pressure => snap.pressure,
        Quantity::SatW => snap.sat_w,
    };
    let start = layer * ny * nx;
    Ok(field[start..start + ny * nx].to_vec())
}

fn plot_cmd(
    cli: &Cli,
    series: Option<&Path>,
    quantity: Quantity,
    step: usize,
    layer: usize,
    production: Option<&Path>,
) -> CliResult<Value> {
    let out = out_dir(cli)?;
    if let Some(csv) = production {
        let rows = read_production_csv(csv)?;
        let mut wells: Vec<String> = rows.iter().map(|r| r.well.clone()).collect();
        wells.dedup();
        let mut files = Vec::new();
        for w in wells {
            let mine: Vec<_> = rows.iter().filter(|r| r.well == w).cloned().collect();
            let path = out.join(format!("curves_{w}.csv"));
            plot::emit_curves(&mine, &path)?;
            files.push(path);
        }
        return Ok(json!({ "curves": files }));
    }
    let dir = series.expect("clap enforces --series or --production");
    let s = tensor::read_series(dir)?;
    let values = series_layer(&s, quantity, step, layer)?;
    let (name, units) = match quantity {
        Quantity::Pressure => ("pressure", "Pa"),
        Quantity::SatW => ("sat_w", "1"),
    };
    let path = out.join(format!("{name}_t{step}_k{layer}.ppm"));
    let info = plot::emit_heatmap(&values, s.shape[2], s.shape[1], name, units, &path)?;
    Ok(json!({ "image": path, "info": info }))
}

fn run(cli: &Cli) -> CliResult<Value> {
    if let Some(out) = &cli.out {
        fs::create_dir_all(out)?;
    }
    match &cli.command {
        Command::Generate { count } => generate(cli, *count),
        Command::Simulate => simulate(cli),
        Command::Residual { series, rock, residual_out } => residual(cli, series, rock.as_deref(), *residual_out),
        Command::Wells { series, rock } => wells_cmd(cli, series, rock.as_deref()),
        Command::Metrics { a, b } => metrics_cmd(cli, a, b),
        Command::Plot { series, quantity, step, layer, production } => {
            plot_cmd(cli, series.as_deref(), *quantity, *step, *layer, production.as_deref())
        }
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    let line = json!({ "error": { "kind": kind, "message": message.replace('\n', " ") } });
    eprintln!("{line}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
            return fail("usage", first.trim_start_matches("error: "), 2);
        }
    };
    match run(&cli) {
        Ok(Value::Null) => ExitCode::SUCCESS,
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), &e.to_string(), 1),
    }
}
