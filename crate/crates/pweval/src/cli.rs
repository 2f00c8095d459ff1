//! Command-line front end: dataset emission (CSV/JSON), table and figure
//! reproduction, and access to every solver in the crate.
//!
//! Exit codes: 0 on success, 1 on domain or contract errors, 2 on
//! convergence failures, 64 on usage errors.

use crate::bounds::{self, BoundRecord};
use crate::convolve::{self, Bessel4Variant};
use crate::error::{PwError, Result};
use crate::extremal::{self, SearchOpts, ZeroSequence};
use crate::prolate;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// Format with 12 significant digits.
fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Parser, Debug)]
#[command(
    name = "pweval",
    about = "Bounds and extremal search for point evaluation in Paley-Wiener spaces",
    version
)]
struct Cli {
    /// Thread count hint for the data-parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep the best lower/upper bounds over a p grid and emit CSV.
    Bounds(BoundsArgs),
    /// Principal concentration eigenvalue: single c, the reference table, or
    /// inversion.
    Prolate(ProlateArgs),
    /// Two-sided bracket for the p -> 0 limit constant.
    C0,
    /// Search for the extremal zero set at one p and emit JSON.
    Extremal(ExtremalArgs),
    /// Origin representation identity on a zero set.
    RepCheck(RepCheckArgs),
    /// Half-power kernel bound on a zero set.
    Kplus(KplusArgs),
    /// Sign-function upper bound at p = 1 on a zero set.
    HbUpper(HbUpperArgs),
    /// Gap certificate constants (A, B).
    Certificate(CertificateArgs),
    /// Triple self-convolution experiment; emits the sampled curve as CSV.
    Convolve(ConvolveArgs),
    /// Emit both bound curves and a plot script.
    Figure1(Figure1Args),
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long, value_name = "F")]
    p_min: f64,
    #[arg(long, value_name = "F")]
    p_max: f64,
    #[arg(long, value_name = "F")]
    step: f64,
    /// Comma-separated method filter (e.g. fp-test,korevaar-h2).
    #[arg(long, value_name = "LIST")]
    methods: Option<String>,
    /// Output path; '-' writes to stdout.
    #[arg(long, value_name = "PATH")]
    out: String,
}

#[derive(Args, Debug)]
struct ProlateArgs {
    /// Evaluate lambda0 at this time-bandwidth parameter.
    #[arg(long, value_name = "F", conflicts_with_all = ["table", "invert"])]
    c: Option<f64>,
    /// Reproduce the four reference rows.
    #[arg(long, conflicts_with = "invert")]
    table: bool,
    /// Find c with lambda0(c) equal to this target.
    #[arg(long, value_name = "F")]
    invert: Option<f64>,
    #[arg(long, value_name = "N", default_value_t = prolate::DEFAULT_NODES)]
    nodes: usize,
}

#[derive(Args, Debug)]
struct ExtremalArgs {
    #[arg(long, value_name = "F")]
    p: f64,
    #[arg(long, value_name = "N")]
    n_zeros: usize,
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "N", default_value_t = 6000)]
    max_iter: usize,
    /// Output path; '-' writes to stdout.
    #[arg(long, value_name = "PATH")]
    out: String,
}

#[derive(Args, Debug)]
struct RepCheckArgs {
    #[arg(long, value_name = "F")]
    q: f64,
    #[arg(long, conflicts_with = "zeros")]
    lattice: bool,
    #[arg(long, value_name = "PATH")]
    zeros: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KplusArgs {
    #[arg(long, value_name = "F")]
    p: f64,
    #[arg(long, conflicts_with = "zeros")]
    lattice: bool,
    #[arg(long, value_name = "PATH")]
    zeros: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HbUpperArgs {
    #[arg(long, value_name = "PATH")]
    zeros: PathBuf,
}

#[derive(Args, Debug)]
struct CertificateArgs {
    #[arg(long, value_name = "F")]
    p: f64,
    #[arg(long, value_name = "F")]
    delta0: f64,
    #[arg(long, value_name = "F")]
    gamma: f64,
    #[arg(long, value_name = "F")]
    delta: f64,
}

#[derive(Args, Debug)]
struct ConvolveArgs {
    #[arg(long, value_enum, value_name = "V")]
    variant: VariantArg,
    #[arg(long, value_name = "N", default_value_t = 8192)]
    grid: usize,
    /// Output path for the xi,value curve; '-' writes to stdout.
    #[arg(long, value_name = "PATH")]
    out: String,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum VariantArg {
    Paper,
    Normalized,
}

#[derive(Args, Debug)]
struct Figure1Args {
    /// Directory receiving the two CSV curves and the plot script.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, value_name = "F", default_value_t = 0.01)]
    step: f64,
}

/// Versioned JSON layout for serialized search results.
#[derive(Debug, Serialize, Deserialize)]
pub struct SearchJson {
    pub schema: u32,
    pub p: f64,
    pub n: usize,
    pub alpha: f64,
    pub t: Vec<f64>,
    pub norm: f64,
    pub lower_bound: f64,
    pub residuals: Vec<f64>,
    pub diagnostics: serde_json::Value,
    pub iterations: usize,
    pub converged: bool,
}

/// Parse and execute; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // clap prints its own help/version with success status
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(cli.cmd) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Prolate(a) => cmd_prolate(a),
        Command::C0 => cmd_c0(),
        Command::Extremal(a) => cmd_extremal(a),
        Command::RepCheck(a) => {
            let zs = load_zeros(a.lattice, a.zeros.as_deref())?;
            let v = extremal::representation_check(&zs, a.q)?;
            println!("rep-check q={} value={}", a.q, fmt12(v));
            Ok(())
        }
        Command::Kplus(a) => {
            let zs = load_zeros(a.lattice, a.zeros.as_deref())?;
            let v = extremal::kplus_bound(a.p, &zs)?;
            println!(
                "kplus p={} conditional-upper-bound={}",
                a.p,
                fmt12(v)
            );
            Ok(())
        }
        Command::HbUpper(a) => {
            let zs = load_zeros(false, Some(&a.zeros))?;
            let r = extremal::hb_upper_p1(&zs)?;
            println!(
                "hb-upper value={} norm-recip={} window={} err={}",
                fmt12(r.value),
                fmt12(r.norm_recip),
                fmt12(r.window_term),
                fmt12(r.error_estimate)
            );
            Ok(())
        }
        Command::Certificate(a) => {
            let (ca, cb) = extremal::separation_certificate(a.p, a.delta0, a.gamma, a.delta)?;
            println!(
                "certificate p={} delta0={} gamma={} delta={} A={} B={}",
                a.p,
                a.delta0,
                a.gamma,
                a.delta,
                fmt12(ca),
                fmt12(cb)
            );
            Ok(())
        }
        Command::Convolve(a) => cmd_convolve(a),
        Command::Figure1(a) => cmd_figure1(a),
    }
}

fn write_output(path: &str, content: &str) -> Result<()> {
    if path == "-" {
        print!("{content}");
        Ok(())
    } else {
        fs::write(path, content)
            .map_err(|e| PwError::Contract(format!("cannot write {path}: {e}")))
    }
}

fn records_to_csv(records: &[BoundRecord]) -> String {
    let mut s = String::from("p,side,method,value,err\n");
    for r in records {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt12(r.p),
            r.side,
            r.method,
            fmt12(r.value),
            fmt12(r.err)
        ));
    }
    s
}

fn cmd_bounds(a: BoundsArgs) -> Result<()> {
    if !(a.step > 0.0) || !(a.p_min <= a.p_max) {
        return Err(PwError::Contract(
            "need p-min <= p-max and a positive step".into(),
        ));
    }
    let mut grid = Vec::new();
    let mut p = a.p_min;
    while p <= a.p_max + 1e-12 {
        grid.push(p);
        p += a.step;
    }
    let mut rows = bounds::sweep(&grid)?;
    if let Some(filter) = &a.methods {
        let allow: Vec<&str> = filter.split(',').map(str::trim).collect();
        rows.retain(|r| allow.contains(&r.method.as_str()));
    }
    write_output(&a.out, &records_to_csv(&rows))
}

fn cmd_prolate(a: ProlateArgs) -> Result<()> {
    if a.table {
        for (label, c) in [
            ("2pi/3", 2.0 * PI / 3.0),
            ("2", 2.0),
            ("3pi/5", 3.0 * PI / 5.0),
            ("1.080420803046 pi/4", 1.080420803046 * PI / 4.0),
        ] {
            let r = prolate::lambda0(c, a.nodes)?;
            println!(
                "c = {label:<22} lambda0 = {}  (grid {}, richardson {})",
                fmt12(r.lambda0),
                r.grid_size,
                fmt12(r.richardson_error)
            );
        }
        return Ok(());
    }
    if let Some(target) = a.invert {
        let c = prolate::c_for_lambda(target)?;
        println!("lambda0({}) = {}  =>  c = {}", fmt12(c), fmt12(target), fmt12(c));
        return Ok(());
    }
    let c = a
        .c
        .ok_or_else(|| PwError::Contract("pass one of --c, --table, --invert".into()))?;
    let r = prolate::lambda0(c, a.nodes)?;
    let warn = if r.resolution_warning {
        "  [resolution warning: grid may be too coarse for this c]"
    } else {
        ""
    };
    println!(
        "lambda0 = {}  (c = {}, grid {}, richardson {}){warn}",
        fmt12(r.lambda0),
        fmt12(r.c),
        r.grid_size,
        fmt12(r.richardson_error)
    );
    Ok(())
}

fn cmd_c0() -> Result<()> {
    let (gamma_star, lo) = bounds::c0_lower_opt()?;
    let (q_star, hi) = bounds::c0_upper_opt()?;
    println!("c0 lower bound = {}  at gamma* = {}", fmt12(lo), fmt12(gamma_star));
    println!("c0 upper bound = {}  at q*     = {}", fmt12(hi), fmt12(q_star));
    Ok(())
}

fn search_to_json(r: &extremal::ExtremalSearchResult) -> SearchJson {
    let diag = extremal::separation_diagnostics(&r.zeros, r.p);
    SearchJson {
        schema: 1,
        p: r.p,
        n: r.zeros.n_free(),
        alpha: r.zeros.alpha(),
        t: r.zeros.free_zeros().to_vec(),
        norm: r.norm_p_p,
        lower_bound: r.lower_bound,
        residuals: r.residuals.clone(),
        diagnostics: serde_json::to_value(diag).unwrap_or(serde_json::Value::Null),
        iterations: r.iterations,
        converged: r.converged,
    }
}

fn cmd_extremal(a: ExtremalArgs) -> Result<()> {
    let opts = SearchOpts {
        max_evals: a.max_iter,
        seed: a.seed,
        ..Default::default()
    };
    let r = extremal::minimize_norm(a.p, a.n_zeros, None, &opts)?;
    let json = serde_json::to_string_pretty(&search_to_json(&r))
        .map_err(|e| PwError::Construction(format!("serialization failed: {e}")))?;
    write_output(&a.out, &(json + "\n"))?;
    if a.out != "-" {
        println!(
            "p={} n={} lower_bound={} residual_max={} converged={}",
            a.p,
            a.n_zeros,
            fmt12(r.lower_bound),
            fmt12(r.ortho_residual_max),
            r.converged
        );
    }
    Ok(())
}

fn load_zeros(lattice: bool, path: Option<&Path>) -> Result<ZeroSequence> {
    if lattice {
        return Ok(ZeroSequence::integer_lattice());
    }
    let path = path.ok_or_else(|| PwError::Contract("pass --lattice or --zeros PATH".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| PwError::Contract(format!("cannot read {}: {e}", path.display())))?;
    let parsed: SearchJson = serde_json::from_str(&text)
        .map_err(|e| PwError::Contract(format!("bad zero-set JSON: {e}")))?;
    if parsed.schema != 1 {
        return Err(PwError::Contract(format!(
            "unsupported schema {}",
            parsed.schema
        )));
    }
    ZeroSequence::new(parsed.t, parsed.alpha)
}

fn cmd_convolve(a: ConvolveArgs) -> Result<()> {
    let variant = match a.variant {
        VariantArg::Paper => Bessel4Variant::Paper,
        VariantArg::Normalized => Bessel4Variant::Normalized,
    };
    let rep = convolve::bessel4_experiment(variant, a.grid)?;
    let mut csv = String::from("xi,value\n");
    let c = &rep.curve;
    for i in 0..=2 * c.m {
        let xi = (i as f64 - c.m as f64) * c.grid_step;
        let v = c.samples[i];
        if v.is_finite() {
            csv.push_str(&format!("{},{}\n", fmt12(xi), fmt12(v)));
        }
    }
    write_output(&a.out, &csv)?;
    if a.out != "-" {
        println!(
            "variant={:?} grid={} max|C2-1|={} mean={} C2(0)={}",
            rep.variant,
            rep.grid_points,
            fmt12(rep.max_abs_dev),
            fmt12(rep.mean_abs_dev),
            fmt12(rep.value_at_zero)
        );
    }
    Ok(())
}

fn cmd_figure1(a: Figure1Args) -> Result<()> {
    fs::create_dir_all(&a.out)
        .map_err(|e| PwError::Contract(format!("cannot create {}: {e}", a.out.display())))?;
    let mut blue = String::from("p,value\n");
    let mut p = 1.0;
    let mut blue_grid = Vec::new();
    while p <= 4.0 + 1e-9 {
        blue_grid.push(p);
        p += a.step;
    }
    use rayon::prelude::*;
    let blue_rows: Result<Vec<(f64, f64)>> = blue_grid
        .par_iter()
        .map(|&p| bounds::lower_sweep_fp(p).map(|r| (p, r.value)))
        .collect();
    for (p, v) in blue_rows? {
        blue.push_str(&format!("{},{}\n", fmt12(p), fmt12(v)));
    }
    let mut red = String::from("p,value\n");
    let mut red_grid = Vec::new();
    let mut p = 2.0;
    while p <= 4.0 + 1e-9 {
        red_grid.push(p);
        p += a.step;
    }
    let red_rows: Result<Vec<(f64, f64)>> = red_grid
        .par_iter()
        .map(|&p| bounds::korevaar_upper(p).map(|r| (p, r.value)))
        .collect();
    for (p, v) in red_rows? {
        red.push_str(&format!("{},{}\n", fmt12(p), fmt12(v)));
    }
    let lower_path = a.out.join("fp_lower.csv");
    let upper_path = a.out.join("korevaar_upper.csv");
    fs::write(&lower_path, blue)
        .and_then(|_| fs::write(&upper_path, red))
        .map_err(|e| PwError::Contract(format!("cannot write curves: {e}")))?;
    let script = r#"#!/usr/bin/env python3
"""Plot the two bound curves emitted next to this script."""
import csv
import matplotlib.pyplot as plt

def load(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return [float(r["p"]) for r in rows], [float(r["value"]) for r in rows]

pl, vl = load("fp_lower.csv")
pu, vu = load("korevaar_upper.csv")
plt.plot(pl, vl, color="blue", label="lower bound (profile test)")
plt.plot(pu, vu, color="red", label="upper bound")
plt.plot([1, 4], [0.5, 2.0], color="gray", alpha=0.5, label="p/2")
plt.xlabel("p")
plt.ylabel("bound")
plt.legend()
plt.tight_layout()
plt.savefig("figure1.png", dpi=160)
print("wrote figure1.png")
"#;
    fs::write(a.out.join("plot.py"), script)
        .map_err(|e| PwError::Contract(format!("cannot write plot script: {e}")))?;
    let mut stdout = std::io::stdout();
    let _ = writeln!(
        stdout,
        "wrote {}, {}, and plot.py",
        lower_path.display(),
        upper_path.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_error_is_64() {
        assert_eq!(run(["pweval", "--no-such-flag"]), 64);
        assert_eq!(run(["pweval", "bounds"]), 64); // missing required args
    }

    #[test]
    fn domain_error_is_1() {
        assert_eq!(
            run(["pweval", "certificate", "--p", "1.0", "--delta0", "0.6", "--gamma", "0.7", "--delta", "0.6"]),
            1
        );
    }

    #[test]
    fn prolate_single_runs() {
        assert_eq!(run(["pweval", "prolate", "--c", "2", "--nodes", "64"]), 0);
    }

    #[test]
    fn bounds_csv_to_stdout() {
        assert_eq!(
            run([
                "pweval", "bounds", "--p-min", "2.0", "--p-max", "2.0", "--step", "0.5", "--out",
                "-"
            ]),
            0
        );
    }
}
