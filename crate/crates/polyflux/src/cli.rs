//! Batch front end: JSON run configs in, CSV/JSON artifacts out.
//!
//! Commands: `conjugate`, `solve`, `discrete`, `mollify`, `verify`,
//! `stochastic`. Every artifact embeds the hash of the fully resolved
//! configuration (CSV files as a leading `#` comment line, JSON mirrors as
//! a field), and identical configs byte-reproduce all numeric output.

use crate::initial_data::InitialData;
use crate::mollify;
use crate::pwl_convex::PwlConvex;
use crate::stochastic::{self, PathConfig};
use crate::variational::{self, linspace, Kernel, MinimizerKind, SearchConfig, SolutionField};
use crate::verify;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fs;
use std::path::Path;

pub const COMMANDS: &[&str] = &[
    "conjugate",
    "solve",
    "discrete",
    "mollify",
    "verify",
    "stochastic",
];

/// Exit codes: success, asserted-check failure, usage/config error.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSpec {
    pub breaks: Vec<f64>,
    pub slopes: Vec<f64>,
    #[serde(default)]
    pub anchor: f64,
    #[serde(default)]
    pub relaxed: bool,
}

impl FluxSpec {
    pub fn build(&self) -> Result<PwlConvex> {
        if self.relaxed {
            PwlConvex::new_relaxed(self.breaks.clone(), self.slopes.clone(), self.anchor)
        } else {
            PwlConvex::new(self.breaks.clone(), self.slopes.clone(), self.anchor)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Quadratic {
        coeff: f64,
        window: [f64; 2],
    },
    Zero {
        window: [f64; 2],
    },
    NegSquareInterval {
        a: f64,
        b: f64,
        stiffness: f64,
    },
    PiecewiseConstant {
        jumps: Vec<f64>,
        values: Vec<f64>,
    },
    Brownian {
        start: f64,
        end: f64,
        step: f64,
        seed: Option<u64>,
    },
}

impl DataSpec {
    pub fn build(&self, master_seed: u64) -> Result<InitialData> {
        match self {
            DataSpec::Quadratic { coeff, window } => {
                InitialData::quadratic(*coeff, (window[0], window[1]))
            }
            DataSpec::Zero { window } => InitialData::zero((window[0], window[1])),
            DataSpec::NegSquareInterval { a, b, stiffness } => {
                InitialData::neg_square_on_interval(*a, *b, *stiffness)
            }
            DataSpec::PiecewiseConstant { jumps, values } => {
                InitialData::piecewise_constant(jumps.clone(), values.clone())
            }
            DataSpec::Brownian {
                start,
                end,
                step,
                seed,
            } => InitialData::sample_brownian(*start, *end, *step, seed.unwrap_or(master_seed)),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    /// Time levels; commands that need a single time use the first entry.
    pub t: Vec<f64>,
}

impl GridSpec {
    pub fn x_grid(&self) -> Result<Vec<f64>> {
        if self.points < 2 || !(self.x_min < self.x_max) {
            return Err(Error::Config(
                "grid: need points >= 2 and x_min < x_max".into(),
            ));
        }
        Ok(linspace(self.x_min, self.x_max, self.points))
    }

    fn first_t(&self) -> Result<f64> {
        self.t
            .first()
            .copied()
            .ok_or_else(|| Error::Config("grid.t: need at least one time level".into()))
    }
}

fn default_m() -> usize {
    1024
}
fn default_eta() -> f64 {
    1e-9
}
fn default_golden() -> f64 {
    1e-12
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_golden")]
    pub golden_tol: f64,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            m: default_m(),
            eta: default_eta(),
            golden_tol: default_golden(),
        }
    }
}

impl SearchSpec {
    pub fn to_config(&self) -> SearchConfig {
        SearchConfig {
            samples_per_segment: self.m,
            tie_rel: self.eta,
            golden_tol: self.golden_tol,
            ..SearchConfig::default()
        }
    }
}

fn default_n_paths() -> usize {
    4096
}
fn default_step() -> f64 {
    0.01
}
fn default_margin() -> f64 {
    0.1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticSpec {
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_margin")]
    pub margin_frac: f64,
}

impl Default for StochasticSpec {
    fn default() -> Self {
        StochasticSpec {
            n_paths: default_n_paths(),
            step: default_step(),
            margin_frac: default_margin(),
        }
    }
}

fn default_fd_h() -> f64 {
    1e-3
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Solution field CSV (as written by `solve` or `discrete`) to check.
    pub field_csv: String,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_fd_h")]
    pub fd_h: f64,
}

fn default_epsilons() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}
fn default_delta_mode() -> String {
    "eps_squared".into()
}
fn default_widths() -> [f64; 2] {
    [1.0, 2.0]
}

/// Fully resolved run configuration; echoed into every artifact.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<String>,
    pub flux: FluxSpec,
    #[serde(default)]
    pub data: Option<DataSpec>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub search: SearchSpec,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_widths")]
    pub blend_width_factors: [f64; 2],
    /// Superlinearization weight rule for the mollification harness; only
    /// `eps_squared` is supported there (the library API accepts arbitrary
    /// delta via `MollifiedFlux::with_delta`).
    #[serde(default = "default_delta_mode")]
    pub delta_mode: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stochastic: Option<StochasticSpec>,
    #[serde(default)]
    pub verify: Option<VerifySpec>,
}

/// Parse and validate a JSON run configuration. Schema violations and
/// semantic errors (non-convex flux, unsorted jumps) are reported with the
/// offending key.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
    cfg.flux
        .build()
        .map_err(|e| Error::Config(format!("flux: {e}")))?;
    if let Some(d) = &cfg.data {
        d.build(cfg.seed)
            .map_err(|e| Error::Config(format!("data: {e}")))?;
    }
    if let Some(g) = &cfg.grid {
        g.x_grid()?;
    }
    if cfg.delta_mode != "eps_squared" {
        return Err(Error::Config(format!(
            "delta_mode: unsupported value '{}' (the harness pins eps_squared)",
            cfg.delta_mode
        )));
    }
    Ok(cfg)
}

/// FNV-1a hash of the canonical JSON of the resolved config.
pub fn config_hash(cfg: &RunConfig) -> String {
    let text = serde_json::to_string(cfg).expect("config is serializable");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn json_artifact(
    path: &Path,
    hash: &str,
    cfg: &RunConfig,
    payload: serde_json::Value,
) -> Result<()> {
    let doc = json!({
        "config_hash": hash,
        "config": cfg,
        "result": payload,
    });
    write_text(path, &serde_json::to_string_pretty(&doc)?)
}

/// Parse a solution-field CSV produced by `solve`/`discrete`.
pub fn parse_field_csv(text: &str, t: f64) -> Result<SolutionField> {
    let mut x = Vec::new();
    let mut u = Vec::new();
    let mut w = Vec::new();
    let mut y = Vec::new();
    let mut kinds = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("x,") {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::Config(format!("field csv: bad row '{line}'")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("field csv: bad number '{s}'")))
        };
        x.push(parse(cols[0])?);
        u.push(parse(cols[1])?);
        w.push(parse(cols[2])?);
        y.push(parse(cols[3])?);
        kinds.push(match cols[4] {
            "vertex_of_l" => MinimizerKind::VertexOfL,
            "flat_segment" => MinimizerKind::FlatSegment,
            "vertex_of_g" => MinimizerKind::VertexOfG,
            "coincident" => MinimizerKind::Coincident,
            other => return Err(Error::Config(format!("field csv: unknown kind '{other}'"))),
        });
    }
    if x.len() < 2 {
        return Err(Error::Config("field csv: need at least two rows".into()));
    }
    Ok(SolutionField {
        x_grid: x,
        t,
        u_values: u,
        w_values: w,
        y_star_values: y,
        kinds,
    })
}

fn require_data(cfg: &RunConfig) -> Result<InitialData> {
    cfg.data
        .as_ref()
        .ok_or_else(|| Error::Config("data: required for this command".into()))?
        .build(cfg.seed)
}

fn require_grid(cfg: &RunConfig) -> Result<&GridSpec> {
    cfg.grid
        .as_ref()
        .ok_or_else(|| Error::Config("grid: required for this command".into()))
}

/// Run one command, writing artifacts under `out_dir`. Returns the process
/// exit code (0 success, 1 when an asserted check fails).
pub fn execute(cfg: &RunConfig, command: &str, out_dir: &Path) -> Result<i32> {
    if !COMMANDS.contains(&command) {
        return Err(Error::Config(format!(
            "unknown command '{command}' (expected one of {COMMANDS:?})"
        )));
    }
    let mut resolved = cfg.clone();
    resolved.command = Some(command.to_string());
    let hash = config_hash(&resolved);
    let flux = resolved.flux.build()?;
    let comment = format!("config={hash}");

    match command {
        "conjugate" => {
            let l = flux.conjugate();
            let mut csv = format!("# {comment}\np,L\n");
            for (p, v) in l.breaks().iter().zip(l.values_at_breaks()) {
                csv.push_str(&format!("{p:.16e},{v:.16e}\n"));
            }
            write_text(&out_dir.join("conjugate.csv"), &csv)?;
            json_artifact(
                &out_dir.join("conjugate.json"),
                &hash,
                &resolved,
                json!({ "conjugate": l, "flux": flux }),
            )?;
            Ok(EXIT_OK)
        }
        "solve" => {
            let data = require_data(&resolved)?;
            let grid = require_grid(&resolved)?;
            let xs = grid.x_grid()?;
            let search = resolved.search.to_config();
            let kernel = Kernel::Sharp(flux.conjugate());
            let mut fields = Vec::new();
            for (i, &t) in grid.t.iter().enumerate() {
                let field = variational::solve_field(&kernel, &data, &xs, t, &search)?;
                let mut buf = Vec::new();
                field.write_csv(&mut buf, Some(&comment))?;
                write_text(
                    &out_dir.join(format!("solve_t{i}.csv")),
                    &String::from_utf8(buf).expect("csv is utf8"),
                )?;
                fields.push(field);
            }
            json_artifact(
                &out_dir.join("solve.json"),
                &hash,
                &resolved,
                json!({ "fields": fields }),
            )?;
            Ok(EXIT_OK)
        }
        "discrete" => {
            let data = require_data(&resolved)?;
            let pcd = data.as_piecewise_constant().ok_or_else(|| {
                Error::Config("data: discrete needs piecewise_constant data".into())
            })?;
            let grid = require_grid(&resolved)?;
            let xs = grid.x_grid()?;
            let search = resolved.search.to_config();
            let kernel = Kernel::Sharp(flux.conjugate());
            let matched = pcd.matches_breaks(flux.breaks());
            let mut fields = Vec::new();
            let mut all_in_breaks = true;
            for (i, &t) in grid.t.iter().enumerate() {
                let field = variational::solve_field(&kernel, &data, &xs, t, &search)?;
                all_in_breaks &= field
                    .w_values
                    .iter()
                    .all(|w| flux.breaks().iter().any(|c| c == w));
                let mut buf = Vec::new();
                field.write_csv(&mut buf, Some(&comment))?;
                write_text(
                    &out_dir.join(format!("discrete_t{i}.csv")),
                    &String::from_utf8(buf).expect("csv is utf8"),
                )?;
                fields.push(field);
            }
            let mut distinct: Vec<f64> = fields
                .iter()
                .flat_map(|f| f.w_values.iter().copied())
                .collect();
            distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
            distinct.dedup();
            json_artifact(
                &out_dir.join("discrete.json"),
                &hash,
                &resolved,
                json!({
                    "fields": fields,
                    "range_report": {
                        "matched_data": matched,
                        "all_values_in_break_set": all_in_breaks,
                        "distinct_values": distinct,
                    }
                }),
            )?;
            Ok(if matched && !all_in_breaks {
                EXIT_CHECK_FAILED
            } else {
                EXIT_OK
            })
        }
        "mollify" => {
            let data = require_data(&resolved)?;
            let grid = require_grid(&resolved)?;
            let xs = grid.x_grid()?;
            let t = grid.first_t()?;
            let search = resolved.search.to_config();
            let report =
                mollify::convergence_study(&flux, &data, &xs, t, &resolved.epsilons, &search)?;
            let agreement = mollify::limiting_uniqueness_check(
                &flux,
                &data,
                &xs,
                t,
                &resolved.epsilons,
                (
                    resolved.blend_width_factors[0],
                    resolved.blend_width_factors[1],
                ),
                &search,
            )?;
            let mut buf = Vec::new();
            report.write_csv(&mut buf, Some(&comment))?;
            write_text(
                &out_dir.join("mollify.csv"),
                &String::from_utf8(buf).expect("csv is utf8"),
            )?;
            json_artifact(
                &out_dir.join("mollify.json"),
                &hash,
                &resolved,
                json!({ "convergence": report, "family_agreement": agreement }),
            )?;
            Ok(EXIT_OK)
        }
        "verify" => {
            let spec = resolved
                .verify
                .as_ref()
                .ok_or_else(|| Error::Config("verify: section required".into()))?
                .clone();
            let data = require_data(&resolved)?;
            let grid = require_grid(&resolved)?;
            let t = grid.first_t()?;
            let search = resolved.search.to_config();
            let kernel = Kernel::Sharp(flux.conjugate());
            let text = fs::read_to_string(&spec.field_csv)?;
            let field = parse_field_csv(&text, t)?;

            let mut reports = Vec::new();
            reports.push(verify::monotonicity_check(&field, spec.eta));
            reports.push(consistency_check(&kernel, &data, &field, &search)?);
            reports.push(verify::tv_bound_check(&field, &data));
            let (x0, x1) = (field.x_grid[0], *field.x_grid.last().unwrap());
            let xm = 0.5 * (x0 + x1);
            let x_pairs = [(x0, xm, t), (xm, x1, t)];
            let t_pairs = [(xm, 0.0, t), (x0, 0.5 * t, t)];
            reports.push(verify::lipschitz_bounds_check(
                &kernel, &data, &x_pairs, &t_pairs, &search,
            )?);
            let flags = field.shock_flags();
            let points: Vec<(f64, f64)> = field
                .x_grid
                .iter()
                .zip(&flags)
                .filter(|&(_, &f)| !f)
                .step_by((field.x_grid.len() / 8).max(1))
                .map(|(&x, _)| (x, t))
                .collect();
            let fe = |q: f64| flux.eval(q);
            let hj = verify::hj_residual(&kernel, &data, &fe, &points, spec.fd_h, &search)?;
            let hj_bound = 10.0 * spec.fd_h;
            let hj_worst = hj
                .iter()
                .filter(|s| !s.skipped)
                .map(|s| s.residual)
                .fold(0.0f64, f64::max);
            reports.push(verify::VerifyReport {
                name: "hj_residual".into(),
                passed: Some(hj_worst <= hj_bound),
                measured: Some(hj_worst),
                tolerance: Some(hj_bound),
                params: format!("h={}, points={}", spec.fd_h, points.len()),
            });
            reports.push(verify::VerifyReport {
                name: "entropy_constant".into(),
                passed: None,
                measured: Some(verify::entropy_constant(&field, &[spec.fd_h * 10.0, 0.25])),
                tolerance: None,
                params: "report-only for sharp polygonal flux".into(),
            });

            let failed = reports.iter().any(|r| r.passed == Some(false));
            json_artifact(
                &out_dir.join("verify.json"),
                &hash,
                &resolved,
                serde_json::to_value(&reports)?,
            )?;
            Ok(if failed { EXIT_CHECK_FAILED } else { EXIT_OK })
        }
        "stochastic" => {
            let grid = require_grid(&resolved)?;
            let xs = grid.x_grid()?;
            let t = grid.first_t()?;
            let spec = resolved.stochastic.clone().unwrap_or_default();
            let search = resolved.search.to_config();
            let path_cfg = PathConfig {
                step: spec.step,
                margin_frac: spec.margin_frac,
                window: None,
            };
            let stats = stochastic::ensemble_run(
                &flux,
                &path_cfg,
                &xs,
                t,
                spec.n_paths,
                resolved.seed,
                &search,
            )?;
            let profile = stochastic::variance_profile(&stats);
            let mut buf = Vec::new();
            stats.write_csv(&mut buf, Some(&comment))?;
            write_text(
                &out_dir.join("stochastic.csv"),
                &String::from_utf8(buf).expect("csv is utf8"),
            )?;
            json_artifact(
                &out_dir.join("stochastic.json"),
                &hash,
                &resolved,
                json!({ "stats": stats, "variance_profile": profile }),
            )?;
            Ok(if stats.monotone_violations == 0 {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            })
        }
        _ => unreachable!("command list is checked above"),
    }
}

/// The field file must reproduce the solver's own values at its grid.
fn consistency_check(
    kernel: &Kernel,
    data: &InitialData,
    field: &SolutionField,
    search: &SearchConfig,
) -> Result<verify::VerifyReport> {
    let mut worst = 0.0f64;
    let stride = (field.x_grid.len() / 64).max(1);
    for i in (0..field.x_grid.len()).step_by(stride) {
        let x = field.x_grid[i];
        let r = variational::greatest_minimizer(kernel, data, x, field.t, search)?;
        let w = variational::eval_w(kernel, data, x, field.t, search)?;
        worst = worst
            .max((r.q_min - field.u_values[i]).abs() / (1.0 + r.q_min.abs()))
            .max((w - field.w_values[i]).abs() / (1.0 + w.abs()))
            .max((r.y_star - field.y_star_values[i]).abs() / (1.0 + r.y_star.abs()));
    }
    Ok(verify::VerifyReport {
        name: "field_consistency".into(),
        passed: Some(worst <= 1e-6),
        measured: Some(worst),
        tolerance: Some(1e-6),
        params: format!("stride={stride}"),
    })
}
