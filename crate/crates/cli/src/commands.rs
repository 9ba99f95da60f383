use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use orlicz_pv::hjb::{
    cir_dt_bound, monotone_dt_bound, read_field_csv, solve, solve_cir_numeric, write_field_csv, GradientScheme,
    Recording,
};
use orlicz_pv::mc::{estimate_objective, simulate_paths, write_paths_csv, DistortionMode, PolicyMode, SimConfig};
use orlicz_pv::meteo::{fit_transition_lsq_with, ingest_cloud_csv, ingest_irradiance_csv, FitOptions};
use orlicz_pv::oracle::exact_value;
use orlicz_pv::{Battery, Cir, Cloud, Error, Influx, Irradiance, Lattice, Orlicz, Penalty, Problem, Scheme, Solution, Target};

use crate::config::{ConfigError, RunConfig};

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_FIT: u8 = 2;
pub const EXIT_UNSTABLE: u8 = 3;
pub const EXIT_BLOWUP: u8 = 4;
pub const EXIT_VALIDATION: u8 = 5;

pub const ECHO_FILE: &str = "resolved_config.cfg";

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::input(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::StepTooLarge { .. } => EXIT_UNSTABLE,
            Error::BlowUp { .. } | Error::Positivity { .. } => EXIT_BLOWUP,
            _ => EXIT_INPUT,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn num(v: f64) -> String {
    format!("{v:.8e}")
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = out.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn prepare_out(out: &Path, cfg: &RunConfig) -> Outcome {
    fs::create_dir_all(out).map_err(|e| Failure::input(format!("cannot create {}: {e}", out.display())))?;
    fs::write(out.join(ECHO_FILE), cfg.echo())?;
    Ok(())
}

fn problem(cfg: &RunConfig) -> Result<Problem, Failure> {
    let cloud = Cloud { r: cfg.f64("meteo", "r")?, a: cfg.f64("meteo", "a")?, sigma: cfg.f64("meteo", "sigma")? };
    let irradiance = match cfg.choice("irradiance", "mode", &["builtin", "table"])? {
        "builtin" => Irradiance::Builtin {
            latitude: cfg.f64("irradiance", "latitude")?,
            tilt: cfg.f64("irradiance", "tilt")?,
            azimuth: cfg.f64("irradiance", "azimuth")?,
        },
        _ => {
            let path = cfg.raw("irradiance", "table");
            if path.is_empty() {
                return Err(Failure::input("irradiance.table: a file is required when mode = table"));
            }
            Irradiance::External { table: ingest_irradiance_csv(path)? }
        }
    };
    let influx = Influx { eps_a: cfg.f64("influx", "eps_a")?, f0: cfg.f64("influx", "f0")?, f1: cfg.f64("influx", "f1")? };
    let battery = Battery { capacity: cfg.f64("battery", "capacity")?, discharge_cap: cfg.f64("battery", "discharge_cap")?, influx };
    let penalty = Penalty { w1: cfg.f64("penalty", "w1")?, w2: cfg.f64("penalty", "w2")? };
    let schedule = cfg.pairs("target", "schedule")?;
    let target = if schedule.is_empty() {
        Target::Constant(cfg.f64("target", "lambda")?)
    } else {
        Target::Piecewise(schedule)
    };
    let orlicz = match cfg.choice("risk", "orlicz", &["power", "identity", "exponential", "custom"])? {
        "power" => Orlicz::power(cfg.f64("risk", "power")?),
        "identity" => Ok(Orlicz::Identity),
        "exponential" => Orlicz::scaled_exponential(cfg.f64("risk", "mu")?),
        _ => Orlicz::custom(cfg.f64("risk", "phi1")?, cfg.f64("risk", "phi2")?),
    }?;
    let spec = Problem { cloud, battery, penalty, target, irradiance, orlicz, eta: cfg.f64("risk", "eta")? };
    spec.validate()?;
    Ok(spec)
}

fn lattice(cfg: &RunConfig, spec: &Problem) -> Result<Lattice, Failure> {
    let dt = cfg.f64("grid", "dt")?;
    let horizon = cfg.f64("grid", "horizon")?;
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(Failure::input("grid.dt and grid.horizon must be positive"));
    }
    let nt = ((horizon / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok(Lattice::new(
        nt,
        cfg.usize("grid", "nx")?,
        cfg.usize("grid", "ny")?,
        cfg.f64("grid", "t0")?,
        horizon,
        spec.battery.capacity,
    )?)
}

fn scheme(cfg: &RunConfig, record: Recording) -> Result<Scheme, Failure> {
    let gradient = match cfg.choice("scheme", "gradient", &["godunov", "central"])? {
        "godunov" => GradientScheme::Godunov,
        _ => GradientScheme::Central,
    };
    Ok(Scheme {
        gradient,
        eps_guard: cfg.f64("scheme", "eps_guard")?,
        record,
        enforce_step_bound: !cfg.bool("scheme", "allow_unstable")?,
    })
}

/// Refuses steps above the monotone bound unless overridden.
fn check_step(spec: &Problem, grid: &Lattice, options: &Scheme) -> Outcome {
    let bound = monotone_dt_bound(spec, grid);
    if options.enforce_step_bound && grid.dt() > bound {
        return Err(Failure {
            code: EXIT_UNSTABLE,
            message: format!(
                "time step {:e} exceeds the monotone bound {bound:e}; refine grid.dt or pass --allow-unstable",
                grid.dt()
            ),
        });
    }
    Ok(())
}

pub fn fit(cfg: &RunConfig, out: &Path) -> Outcome {
    let path = cfg.raw("fit", "cloud_csv");
    if path.is_empty() {
        return Err(Failure::input("fit.cloud_csv: a cloud-cover file is required"));
    }
    let init = Cloud { r: cfg.f64("fit", "init_r")?, a: cfg.f64("fit", "init_a")?, sigma: cfg.f64("fit", "init_sigma")? };
    let opts = FitOptions {
        n_bins: cfg.usize("fit", "n_bins")?,
        n_cells: cfg.usize("fit", "n_cells")?,
        max_iter: cfg.usize("fit", "max_iter")?,
        rel_tol: cfg.f64("fit", "rel_tol")?,
        ..FitOptions::default()
    };
    let series = ingest_cloud_csv(path)?;
    let report = fit_transition_lsq_with(&series, init, &opts)?;
    prepare_out(out, cfg)?;
    let mut w = create(out, "fit_report.csv")?;
    writeln!(w, "param,value,init,residual")?;
    let p = report.params;
    for (name, v, i) in [("r", p.r, init.r), ("a", p.a, init.a), ("sigma", p.sigma, init.sigma)] {
        writeln!(w, "{name},{},{},{}", num(v), num(i), num(report.residual))?;
    }
    w.flush()?;
    println!(
        "fitted r = {:.6}, a = {:.6}, sigma = {:.6} after {} iterations (residual {:.3e})",
        p.r, p.a, p.sigma, report.iterations, report.residual
    );
    if !report.converged {
        let mut why = Vec::new();
        if let Some(note) = &report.note {
            why.push(note.clone());
        }
        if !report.at_bound.is_empty() {
            why.push(format!("at search bound: {}", report.at_bound.join(", ")));
        }
        if why.is_empty() {
            why.push("iteration limit reached".into());
        }
        return Err(Failure { code: EXIT_FIT, message: format!("fit did not converge ({})", why.join("; ")) });
    }
    Ok(())
}

pub fn solve_cmd(cfg: &RunConfig, out: &Path) -> Outcome {
    let spec = problem(cfg)?;
    let grid = lattice(cfg, &spec)?;
    let mut slices = cfg.f64_list("output", "slices")?;
    if slices.is_empty() {
        slices = vec![grid.t0, grid.t0 + grid.horizon];
    }
    let end = grid.t0 + grid.horizon;
    if let Some(bad) = slices.iter().find(|&&t| t < grid.t0 - 1e-9 || t > end + 1e-9) {
        return Err(Failure::input(format!("output.slices: time {bad} outside [{}, {end}]", grid.t0)));
    }
    let probes = cfg.pairs("output", "probes")?;
    let full = cfg.bool("output", "full_history")?;
    let record = if full { Recording::Full } else { Recording::Times(slices.clone()) };
    let options = scheme(cfg, record)?;
    check_step(&spec, &grid, &options)?;
    let sol = solve(&spec, &grid, &options)?;

    prepare_out(out, cfg)?;
    let mut positions: Vec<usize> = slices.iter().map(|&t| sol.nearest_position(t)).collect();
    positions.dedup();
    for &pos in &positions {
        let name = format!("field_t{:.6}.csv", sol.time(pos));
        let mut w = create(out, &name)?;
        write_field_csv(&sol, &[pos], &mut w)?;
        w.flush()?;
    }
    if full {
        let mut w = create(out, "field_history.csv")?;
        write_field_csv(&sol, &[], &mut w)?;
        w.flush()?;
    }
    write_summary(&sol, &probes, out)?;
    println!(
        "solved {} steps on a {}x{} grid; psi in [{:.6e}, {:.6e}]",
        grid.nt,
        grid.nx,
        grid.ny,
        sol.psi_min(),
        sol.psi_max()
    );
    Ok(())
}

fn write_summary(sol: &Solution, probes: &[(f64, f64)], out: &Path) -> Outcome {
    let mut w = create(out, "summary.csv")?;
    writeln!(w, "quantity,t,x,y,value")?;
    writeln!(w, "psi_min,,,,{}", num(sol.psi_min()))?;
    writeln!(w, "psi_max,,,,{}", num(sol.psi_max()))?;
    let t0 = sol.time(0);
    for &(x, y) in probes {
        writeln!(w, "psi,{},{},{},{}", num(t0), num(x), num(y), num(sol.psi_at(t0, x, y)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn validate_cir(cfg: &RunConfig, out: &Path) -> Outcome {
    let cir = Cir {
        a: cfg.f64("cir", "a")?,
        r: cfg.f64("cir", "r")?,
        sigma: cfg.f64("cir", "sigma")?,
        p: cfg.f64("cir", "p")?,
        eta_prime: cfg.f64("cir", "eta_prime")?,
        horizon: cfg.f64("cir", "horizon")?,
    };
    cir.validate()?;
    let x_max = cfg.f64("cir", "x_max")?;
    let nx = cfg.usize("cir", "nx")?;
    if nx < 2 || !(x_max > 0.0) {
        return Err(Failure::input("cir.nx must be at least 2 and cir.x_max positive"));
    }
    let nt = (cir.horizon / cir_dt_bound(&cir, x_max, nx)).ceil().max(1.0) as usize;
    let sol = solve_cir_numeric(&cir, x_max, nx, nt)?;

    prepare_out(out, cfg)?;
    let mut w = create(out, "cir_validation.csv")?;
    writeln!(w, "x,numeric,exact,rel_error")?;
    let mut worst: f64 = 0.0;
    for (k, t) in [0.0, 0.5 * cir.horizon].into_iter().enumerate() {
        let layer = sol.layer_at(t);
        for (j, &v) in layer.iter().enumerate() {
            let x = sol.x(j);
            let exact = exact_value(&cir, t, x)?;
            let rel = (v - exact).abs() / exact;
            if k == 0 {
                writeln!(w, "{},{},{},{}", num(x), num(v), num(exact), num(rel))?;
            }
            if (0.5..=2.0).contains(&x) {
                worst = worst.max(rel);
            }
        }
    }
    w.flush()?;
    println!("max relative error on [0.5, 2] at t = 0 and T/2: {worst:.3e}");
    if worst >= 0.01 {
        return Err(Failure {
            code: EXIT_VALIDATION,
            message: format!("relative error {worst:.3e} exceeds 1%"),
        });
    }
    Ok(())
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Outcome {
    let spec = problem(cfg)?;
    let grid = lattice(cfg, &spec)?;
    let fields_path = cfg.raw("simulate", "fields");
    let sol = if fields_path.is_empty() {
        let every = cfg.usize("simulate", "record_every")?;
        let record = if every <= 1 { Recording::Full } else { Recording::Every(every) };
        let options = scheme(cfg, record)?;
        check_step(&spec, &grid, &options)?;
        solve(&spec, &grid, &options)?
    } else {
        let file = File::open(fields_path)
            .map_err(|e| Failure::input(format!("simulate.fields: cannot open {fields_path}: {e}")))?;
        read_field_csv(&grid, BufReader::new(file))
            .map_err(|e| Failure::input(format!("simulate.fields: {e}")))?
    };
    let policy = match cfg.choice("simulate", "policy", &["tabulated", "constant"])? {
        "tabulated" => PolicyMode::Tabulated,
        _ => PolicyMode::Constant(cfg.f64("simulate", "constant_u")?),
    };
    let distortion = match cfg.choice("simulate", "distortion", &["none", "tabulated"])? {
        "none" => DistortionMode::None,
        _ => DistortionMode::Tabulated,
    };
    let export = cfg.bool("simulate", "export_paths")?;
    let sim = SimConfig {
        n_paths: cfg.usize("simulate", "n_paths")?,
        dt: cfg.f64("simulate", "dt")?,
        seed: cfg.u64("simulate", "seed")?,
        t_start: cfg.opt_f64("simulate", "t_start")?.unwrap_or(grid.t0),
        horizon: cfg.opt_f64("simulate", "horizon")?.unwrap_or(grid.horizon),
        record_stride: if export { cfg.usize("simulate", "path_stride")? } else { 0 },
        distortion,
        policy,
    };
    let (x0, y0) = (cfg.f64("simulate", "x0")?, cfg.f64("simulate", "y0")?);
    let bundle = simulate_paths(&spec, Some(&sol), &sim, x0, y0)?;
    let (mean, se) = estimate_objective(&bundle);
    let pde = sol.psi_at(sim.t_start, x0, y0);

    prepare_out(out, cfg)?;
    let mut w = create(out, "mc_report.csv")?;
    writeln!(w, "mean,std_error,pde_value,ratio")?;
    writeln!(w, "{},{},{},{}", num(mean), num(se), num(pde), num(mean / pde))?;
    w.flush()?;
    if export {
        let mut w = create(out, "paths.csv")?;
        write_paths_csv(&bundle, &mut w)?;
        w.flush()?;
    }
    println!("Monte Carlo {mean:.6e} +- {se:.2e} against PDE {pde:.6e}");
    Ok(())
}

/// Loads the configuration and applies command-line overrides.
pub fn load_config(
    path: &Path,
    seed: Option<u64>,
    slices: Option<&str>,
    allow_unstable: bool,
) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(seed) = seed {
        cfg.set("simulate", "seed", seed.to_string());
    }
    if let Some(list) = slices {
        crate::config::parse_list(list).map_err(|bad| Failure::input(format!("--slices: '{bad}' is not a number")))?;
        cfg.set("output", "slices", list.trim());
    }
    if allow_unstable {
        cfg.set("scheme", "allow_unstable", "true");
    }
    Ok(cfg)
}

pub fn default_out() -> PathBuf {
    PathBuf::from("out")
}
