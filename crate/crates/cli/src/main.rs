use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use gasketlab::harmonic::solve_renormalization;
use gasketlab::integrate::HalfPlaneEngine;
use gasketlab::io::{fmt17, MvnRecord};
use gasketlab::meanvalue::{
    base_cell_at, cb_constant, convergence_experiment, mvn_sequence, solve_mvn, tmap, TestFunction,
};
use gasketlab::{Address, Error, Fractal, PcfDescriptor};

const CACHE_ENV: &str = "GASKETLAB_CACHE";

#[derive(Parser, Debug)]
#[command(name = "gasketlab", version, about = "Mean value neighborhoods on gasket-type fractals")]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct RunConfig {
    /// Built-in name (sg, hexagasket, sg3) or path to a descriptor JSON file
    #[arg(long, global = true, default_value = "sg")]
    fractal: String,
    /// Residual tolerance for neighborhood solves
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Series truncation for c_B, or mesh depth for the convergence table
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Cache directory; GASKETLAB_CACHE is used when absent
    #[arg(long, global = true)]
    #[serde(skip)]
    cache: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, Serialize)]
struct PointArgs {
    /// Address word as a digit string
    #[arg(long, default_value = "")]
    word: String,
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..3))]
    vertex: u8,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Summary of a fractal: maps, renormalization factor, weights, neighborhood types
    Info {
        /// Overrides --fractal
        name: Option<String>,
    },
    /// Coefficient map T(c) on a grid over cutoffs with a zero coordinate
    Tmap {
        /// Neighborhood type id
        #[arg(long = "type", default_value_t = 0)]
        type_id: usize,
        /// Grid steps per unit
        #[arg(long, default_value_t = 4)]
        grid: usize,
        /// A single cutoff `c0,c1,c2` instead of a grid
        #[arg(long, allow_hyphen_values = true)]
        c: Option<String>,
    },
    /// Mean value neighborhood of a point at level k
    Solve {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long)]
        k: usize,
    },
    /// c_B over a range of levels with the band check
    Cb {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// Ratios (M_B(u) - u(x)) / c_B over a range of levels
    Converge {
        #[command(flatten)]
        point: PointArgs,
        /// `v`, `harmonic:a,b,c` or `green:a,b,c`
        #[arg(long, default_value = "green:1,0,0")]
        u: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        kmax: Option<usize>,
    },
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(Error::NotConverged { .. }) => 1,
            Some(Error::Io(_)) => 1,
            Some(_) => 2,
            None if error.downcast_ref::<std::io::Error>().is_some() => 1,
            None => 2,
        };
        Failure { code, error }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = &cli.config;
    if cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(anyhow::anyhow!("--tol must be positive").into());
    }
    let name = match &cli.command {
        Command::Info { name: Some(n) } => n.as_str(),
        _ => cfg.fractal.as_str(),
    };
    let fractal = load_fractal(name)?;
    let cache = cfg.cache.clone().or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from));
    let key = cache_key(&fractal, cli)?;
    let cached = match &cache {
        Some(dir) => read_cache(dir, &key),
        None => None,
    };
    let output = match cached {
        Some(text) => text,
        None => {
            let text = execute(&fractal, cfg, &cli.command)?;
            if let Some(dir) = &cache {
                write_cache(dir, &key, &text)?;
            }
            text
        }
    };
    match &cfg.out {
        Some(path) => fs::write(path, &output).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{output}"),
    }
    Ok(())
}

fn load_fractal(name: &str) -> anyhow::Result<Fractal> {
    if matches!(name, "sg" | "hexagasket" | "sg3") {
        return Ok(Fractal::builtin(name)?);
    }
    let path = Path::new(name);
    if !path.is_file() {
        return Err(Error::UnknownFractal(name.to_string()).into());
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Fractal::new(PcfDescriptor::from_json(&text)?)?)
}

#[derive(Serialize)]
struct KeyInput<'a> {
    version: &'a str,
    descriptor: &'a PcfDescriptor,
    config: &'a RunConfig,
    command: &'a Command,
}

fn cache_key(fractal: &Fractal, cli: &Cli) -> anyhow::Result<String> {
    let input = KeyInput {
        version: env!("CARGO_PKG_VERSION"),
        descriptor: fractal.descriptor(),
        config: &cli.config,
        command: &cli.command,
    };
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(&input)?)))
}

fn read_cache(dir: &Path, key: &str) -> Option<String> {
    fs::read_to_string(dir.join(format!("{key}.out"))).ok()
}

fn write_cache(dir: &Path, key: &str, text: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating cache {}", dir.display()))?;
    let tmp = dir.join(format!("{key}.tmp"));
    fs::write(&tmp, text)?;
    fs::rename(&tmp, dir.join(format!("{key}.out")))?;
    Ok(())
}

fn parse_point(fractal: &Fractal, p: &PointArgs) -> anyhow::Result<Address> {
    let word = gasketlab::fractal::parse_word(&p.word)
        .ok_or_else(|| Error::InvalidAddress(format!("`{}` is not a digit string", p.word)))?;
    Ok(fractal.address(&word, p.vertex as usize)?)
}

fn parse_triple(s: &str) -> anyhow::Result<[f64; 3]> {
    let parts: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => bail!("expected three comma-separated numbers, got `{s}`"),
    }
}

fn parse_test_function(s: &str) -> anyhow::Result<TestFunction> {
    match s.split_once(':') {
        None if s == "v" => Ok(TestFunction::V),
        Some(("harmonic", t)) => Ok(TestFunction::Harmonic(parse_triple(t)?)),
        Some(("green", t)) => Ok(TestFunction::GreenOfHarmonic(parse_triple(t)?)),
        _ => Err(Error::InvalidArgument(format!("unknown function `{s}`")).into()),
    }
}

/// Rows of a table, rendered as CSV or as a JSON array of objects.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Bool(bool),
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    fn render(&self, format: Format) -> anyhow::Result<String> {
        match format {
            Format::Csv => {
                let mut out = self.header.join(",") + "\n";
                for row in &self.rows {
                    let cells: Vec<String> = row
                        .iter()
                        .map(|c| match c {
                            Cell::Num(x) => fmt17(*x),
                            Cell::Int(n) => n.to_string(),
                            Cell::Text(s) => s.clone(),
                            Cell::Bool(b) => b.to_string(),
                        })
                        .collect();
                    out += &cells.join(",");
                    out.push('\n');
                }
                Ok(out)
            }
            Format::Json => {
                let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|row| {
                        self.header
                            .iter()
                            .zip(row)
                            .map(|(h, c)| {
                                let v = match c {
                                    Cell::Num(x) => serde_json::json!(x),
                                    Cell::Int(n) => serde_json::json!(n),
                                    Cell::Text(s) => serde_json::json!(s),
                                    Cell::Bool(b) => serde_json::json!(b),
                                };
                                (h.to_string(), v)
                            })
                            .collect()
                    })
                    .collect();
                Ok(serde_json::to_string_pretty(&rows)? + "\n")
            }
        }
    }
}

fn execute(fractal: &Fractal, cfg: &RunConfig, command: &Command) -> anyhow::Result<String> {
    match command {
        Command::Info { .. } => info(fractal, cfg.format),
        Command::Tmap { type_id, grid, c } => tmap_table(fractal, *type_id, *grid, c.as_deref().map(parse_triple).transpose()?).and_then(|t| t.render(cfg.format)),
        Command::Solve { point, k } => solve(fractal, cfg, point, *k),
        Command::Cb { point, k, kmax } => cb_table(fractal, cfg, point, *k, kmax.unwrap_or(*k)).and_then(|t| t.render(cfg.format)),
        Command::Converge { point, u, k, kmax } => {
            converge_table(fractal, cfg, point, u, *k, kmax.unwrap_or(*k + 3)).and_then(|t| t.render(cfg.format))
        }
    }
}

fn info(fractal: &Fractal, format: Format) -> anyhow::Result<String> {
    let r = solve_renormalization(fractal)?;
    let mut t = Table::new(&["name", "maps", "r", "mu", "types"]);
    t.rows.push(vec![
        Cell::Text(fractal.name().to_string()),
        Cell::Int(fractal.n_maps()),
        Cell::Num(r),
        Cell::Num(fractal.descriptor().measure_weight()),
        Cell::Int(fractal.neighborhood_types().len()),
    ]);
    t.render(format)
}

fn tmap_table(fractal: &Fractal, type_id: usize, grid: usize, single: Option<[f64; 3]>) -> anyhow::Result<Table> {
    let ty = fractal
        .neighborhood_types()
        .get(type_id)
        .ok_or_else(|| Error::InvalidArgument(format!("type {type_id} does not exist")))?;
    let points: Vec<[f64; 3]> = match single {
        Some(c) => vec![c],
        None => {
            if grid == 0 {
                return Err(Error::InvalidArgument("--grid must be positive".into()).into());
            }
            let mut pts = Vec::new();
            for i in 0..=grid {
                for j in 0..=grid {
                    for k in 0..=grid {
                        let idx = [i, j, k];
                        let ok = idx.contains(&0) && (0..3).all(|s| ty.l[s] > 0 || idx[s] == 0);
                        if ok {
                            pts.push(idx.map(|n| n as f64 / grid as f64));
                        }
                    }
                }
            }
            pts
        }
    };
    let mut engine = HalfPlaneEngine::new(fractal);
    let mut t = Table::new(&["c0", "c1", "c2", "a0", "a1", "a2", "width"]);
    for c in points {
        let a = tmap(&mut engine, ty.l, c, 1e-6)?;
        let m = a.mid();
        t.rows.push(vec![
            Cell::Num(c[0]),
            Cell::Num(c[1]),
            Cell::Num(c[2]),
            Cell::Num(m[0]),
            Cell::Num(m[1]),
            Cell::Num(m[2]),
            Cell::Num(a.width()),
        ]);
    }
    Ok(t)
}

fn solve(fractal: &Fractal, cfg: &RunConfig, point: &PointArgs, k: usize) -> anyhow::Result<String> {
    let x = parse_point(fractal, point)?;
    let mut engine = HalfPlaneEngine::new(fractal);
    let mvn = solve_mvn(&mut engine, &x, &base_cell_at(fractal, &x, k), cfg.tol)?;
    let cb = if fractal.is_sg() {
        Some(cb_constant(&mut engine, &mvn, cfg.depth.unwrap_or(k + 10))?)
    } else {
        None
    };
    let rec = MvnRecord::new(fractal, &mvn, cb);
    match cfg.format {
        Format::Json => Ok(rec.to_json()? + "\n"),
        Format::Csv => {
            let mut t = Table::new(&[
                "fractal", "word", "vertex", "k", "c0", "c1", "c2", "a0", "a1", "a2", "residual", "cb_lo", "cb_hi",
            ]);
            let (lo, hi) = rec.cb.map_or((f64::NAN, f64::NAN), |c| (c.lo, c.hi));
            t.rows.push(vec![
                Cell::Text(rec.fractal),
                Cell::Text(rec.word),
                Cell::Int(rec.vertex),
                Cell::Int(rec.k),
                Cell::Num(rec.c[0]),
                Cell::Num(rec.c[1]),
                Cell::Num(rec.c[2]),
                Cell::Num(rec.a_target[0]),
                Cell::Num(rec.a_target[1]),
                Cell::Num(rec.a_target[2]),
                Cell::Num(rec.residual),
                Cell::Num(lo),
                Cell::Num(hi),
            ]);
            t.render(Format::Csv)
        }
    }
}

fn cb_table(fractal: &Fractal, cfg: &RunConfig, point: &PointArgs, k: usize, kmax: usize) -> anyhow::Result<Table> {
    fractal.require_sg("c_B")?;
    let x = parse_point(fractal, point)?;
    let mut engine = HalfPlaneEngine::new(fractal);
    let mut t = Table::new(&["k", "c0", "c1", "c2", "residual", "cb_lo", "cb_hi", "scaled_lo", "scaled_hi", "in_band"]);
    for mvn in mvn_sequence(&mut engine, &x, k..=kmax, cfg.tol)? {
        let level = mvn.spec.base_cell.level();
        let cb = cb_constant(&mut engine, &mvn, cfg.depth.unwrap_or(level + 10).max(level + 6))?;
        let s = 5f64.powi(level as i32);
        let in_band = cb.lo * s >= 7.0 / 1350.0 && cb.hi * s <= 25.0 / 12.0;
        t.rows.push(vec![
            Cell::Int(level),
            Cell::Num(mvn.spec.c[0]),
            Cell::Num(mvn.spec.c[1]),
            Cell::Num(mvn.spec.c[2]),
            Cell::Num(mvn.residual),
            Cell::Num(cb.lo),
            Cell::Num(cb.hi),
            Cell::Num(cb.lo * s),
            Cell::Num(cb.hi * s),
            Cell::Bool(in_band),
        ]);
    }
    Ok(t)
}

fn converge_table(
    fractal: &Fractal,
    cfg: &RunConfig,
    point: &PointArgs,
    u: &str,
    k: usize,
    kmax: usize,
) -> anyhow::Result<Table> {
    let x = parse_point(fractal, point)?;
    let u = parse_test_function(u)?;
    let rows = convergence_experiment(fractal, u, &x, k..=kmax, cfg.depth.unwrap_or(9), cfg.tol)?;
    let mut t = Table::new(&[
        "k", "c0", "c1", "c2", "residual", "cb_lo", "cb_hi", "num_lo", "num_hi", "ratio_lo", "ratio_hi",
    ]);
    for r in rows {
        t.rows.push(vec![
            Cell::Int(r.k),
            Cell::Num(r.spec.c[0]),
            Cell::Num(r.spec.c[1]),
            Cell::Num(r.spec.c[2]),
            Cell::Num(r.residual),
            Cell::Num(r.cb.lo),
            Cell::Num(r.cb.hi),
            Cell::Num(r.numerator.lo),
            Cell::Num(r.numerator.hi),
            Cell::Num(r.ratio.lo),
            Cell::Num(r.ratio.hi),
        ]);
    }
    Ok(t)
}
