//! Scenario runner: TOML config -> solves -> CSV artifacts.
//!
//! Config sections: [problem] (class or raw coefficient matrices, L, T, tier),
//! [data] (named profiles or sample files), [grid], [solver], [outputs].
//! Field CSV: `# kdv-bvp field v1` header, columns x,t,u, t-major rows,
//! 17 significant digits. Report CSV columns:
//! report_kind,key,value,grid_level,stable_flag.

use serde::Deserialize;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::boundary::{validate_tier, BoundaryClass, BoundaryData, ClassId};
use crate::error::{KdvError, Result};
use crate::grid::{Field, Grid};
use crate::linear::{solve_linear, SolverOptions};
use crate::nonlinear::{solve_kdv, PicardOptions};
use crate::norms::{kato_report, kato_two_grid, x_data_norm};
use crate::oracle::{solve_fd, OracleMode};
use crate::profiles;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub problem: ProblemSection,
    pub data: DataSection,
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    pub outputs: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub class: Option<u8>,
    pub a: Option<[[f64; 3]; 3]>,
    pub b: Option<[[f64; 3]; 3]>,
    pub length: f64,
    pub horizon: f64,
    #[serde(default)]
    pub tier: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default = "default_profile")]
    pub initial: String,
    #[serde(default)]
    pub initial_params: profiles::Params,
    pub initial_file: Option<PathBuf>,
    #[serde(default = "default_profile")]
    pub h1: String,
    #[serde(default)]
    pub h1_params: profiles::Params,
    pub h1_file: Option<PathBuf>,
    #[serde(default = "default_profile")]
    pub h2: String,
    #[serde(default)]
    pub h2_params: profiles::Params,
    pub h2_file: Option<PathBuf>,
    #[serde(default = "default_profile")]
    pub h3: String,
    #[serde(default)]
    pub h3_params: profiles::Params,
    pub h3_file: Option<PathBuf>,
}

fn default_profile() -> String {
    "zero".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub nt: usize,
    pub pad_override: Option<f64>,
    pub pad_cap: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// linear | nonlinear | oracle-linear | oracle-nonlinear | compare-linear | compare-nonlinear
    pub kind: Option<String>,
    pub tol: Option<f64>,
    pub r_limit: Option<f64>,
    pub max_windows: Option<usize>,
    pub compare_levels: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    #[serde(default = "default_true")]
    pub field: bool,
    #[serde(default = "default_true")]
    pub report: bool,
}

fn default_true() -> bool {
    true
}

pub struct ScenarioOutcome {
    pub files: Vec<PathBuf>,
    pub checks_passed: bool,
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| KdvError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| KdvError::ConfigInvalid(e.to_string()))
}

fn build_class(p: &ProblemSection) -> Result<BoundaryClass> {
    match (p.class, p.a, p.b) {
        (Some(k), None, None) => Ok(BoundaryClass::principal_only(ClassId::from_index(k)?)),
        (None, Some(a), Some(b)) => BoundaryClass::from_matrices(a, b),
        (Some(k), Some(a), Some(b)) => {
            let cls = BoundaryClass::from_matrices(a, b)?;
            if cls.id.index() != k {
                return Err(KdvError::ConfigInvalid(format!(
                    "matrices classify as class {}, config says {}",
                    cls.id.index(),
                    k
                )));
            }
            Ok(cls)
        }
        _ => Err(KdvError::ConfigInvalid(
            "[problem] needs either `class` or both `a` and `b` matrices".into(),
        )),
    }
}

fn load_samples(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| KdvError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
    let vals: Vec<f64> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<f64>()
                .map_err(|e| KdvError::ConfigInvalid(format!("{}: bad sample '{l}': {e}", path.display())))
        })
        .collect::<Result<_>>()?;
    if vals.len() != expected {
        return Err(KdvError::ConfigInvalid(format!(
            "{}: expected {expected} samples, found {}",
            path.display(),
            vals.len()
        )));
    }
    Ok(vals)
}

fn build_data(cfg: &Config, grid: &Grid, cls: &BoundaryClass) -> Result<(Vec<f64>, BoundaryData)> {
    let d = &cfg.data;
    let phi = match &d.initial_file {
        Some(p) => load_samples(p, grid.nx)?,
        None => profiles::space_profile(&d.initial, &d.initial_params, grid.nx, grid.length)?,
    };
    let slot = |name: &str, params: &profiles::Params, file: &Option<PathBuf>| -> Result<Vec<f64>> {
        match file {
            Some(p) => load_samples(p, grid.nt),
            None => profiles::time_profile(name, params, grid.nt, grid.horizon),
        }
    };
    let h = [
        slot(&d.h1, &d.h1_params, &d.h1_file)?,
        slot(&d.h2, &d.h2_params, &d.h2_file)?,
        slot(&d.h3, &d.h3_params, &d.h3_file)?,
    ];
    let tier = validate_tier(cfg.problem.tier)?;
    let hvec = BoundaryData::new(cls.id, h, grid.horizon, tier)?;
    Ok((phi, hvec))
}

fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_field_csv(path: &Path, field: &Field) -> Result<()> {
    let g = &field.grid;
    let mut out = String::with_capacity(g.nx * g.nt * 60);
    out.push_str("# kdv-bvp field v1\n");
    out.push_str("x,t,u\n");
    for n in 0..g.nt {
        let t = g.t(n);
        for i in 0..g.nx {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", g.x(i), t, field[(i, n)]));
        }
    }
    atomic_write(path, &out)
}

pub struct ReportRow {
    pub kind: String,
    pub key: String,
    pub value: f64,
    pub grid_level: usize,
    pub stable: Option<bool>,
}

pub fn write_report_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut out = String::from("report_kind,key,value,grid_level,stable_flag\n");
    for r in rows {
        let flag = match r.stable {
            None => "",
            Some(true) => "1",
            Some(false) => "0",
        };
        out.push_str(&format!("{},{},{:.16e},{},{}\n", r.kind, r.key, r.value, r.grid_level, flag));
    }
    atomic_write(path, &out)
}

/// Execute a scenario config; `check_mode` turns comparison regressions into
/// a failed outcome (exit code 4 at the CLI).
pub fn run_scenario(config_path: &Path, check_mode: bool) -> Result<ScenarioOutcome> {
    let cfg = load_config(config_path)?;
    let cls = build_class(&cfg.problem)?;
    let grid = Grid::new(cfg.problem.length, cfg.problem.horizon, cfg.grid.nx, cfg.grid.nt)?;
    let (phi, hvec) = build_data(&cfg, &grid, &cls)?;
    std::fs::create_dir_all(&cfg.outputs.directory)?;

    let mut sopts = SolverOptions::default();
    if let Some(p) = cfg.grid.pad_override {
        sopts.pad.override_pad = Some(p);
    }
    if let Some(c) = cfg.grid.pad_cap {
        sopts.pad.cap = c;
    }
    if let Some(r) = cfg.solver.r_limit {
        sopts.wbdr.r_limit = r;
    }

    let kind = cfg.solver.kind.as_deref().unwrap_or("linear");
    let mut rows: Vec<ReportRow> = Vec::new();
    let mut files = Vec::new();
    let mut checks_passed = true;

    let mut emit_field = |name: &str, field: &Field, files: &mut Vec<PathBuf>| -> Result<()> {
        if cfg.outputs.field {
            let path = cfg.outputs.directory.join(name);
            write_field_csv(&path, field)?;
            files.push(path);
        }
        Ok(())
    };

    match kind {
        "linear" | "oracle-linear" => {
            let field = if kind == "linear" {
                let (v, rep) = solve_linear(cls.id, &phi, None, &hvec, &grid, &sopts)?;
                for (slot, r) in rep.boundary_residual.iter().enumerate() {
                    rows.push(ReportRow {
                        kind: "boundary_residual".into(),
                        key: format!("slot{}", slot + 1),
                        value: *r,
                        grid_level: 0,
                        stable: None,
                    });
                }
                rows.push(ReportRow {
                    kind: "solver".into(),
                    key: "ray_nodes".into(),
                    value: rep.ray_nodes as f64,
                    grid_level: 0,
                    stable: None,
                });
                v
            } else {
                solve_fd(&cls, &phi, &hvec, None, &grid, OracleMode::Linear)?
            };
            let data_norm = x_data_norm(&phi, grid.length, &hvec);
            let kato = kato_report(&field, data_norm.max(1e-300), cfg.problem.tier);
            for (r, c) in &kato.smoothing {
                rows.push(ReportRow {
                    kind: "kato".into(),
                    key: format!("c_est_r{r}"),
                    value: *c,
                    grid_level: 0,
                    stable: None,
                });
            }
            rows.push(ReportRow {
                kind: "norm".into(),
                key: "z".into(),
                value: kato.z_norm,
                grid_level: 0,
                stable: None,
            });
            emit_field("field.csv", &field, &mut files)?;
        }
        "nonlinear" | "oracle-nonlinear" => {
            let field = if kind == "nonlinear" {
                let mut popts = PicardOptions::default();
                if let Some(t) = cfg.solver.tol {
                    popts.tol = t;
                }
                if let Some(w) = cfg.solver.max_windows {
                    popts.max_windows = w;
                }
                popts.solver = sopts.clone();
                let (u, rep, pic) = solve_kdv(&cls, &phi, &hvec, &grid, &popts)?;
                for (i, w) in pic.windows.iter().enumerate() {
                    rows.push(ReportRow {
                        kind: "picard".into(),
                        key: format!("window{i}_contraction"),
                        value: w.contraction,
                        grid_level: 0,
                        stable: None,
                    });
                    rows.push(ReportRow {
                        kind: "picard".into(),
                        key: format!("window{i}_iterations"),
                        value: w.iterations as f64,
                        grid_level: 0,
                        stable: None,
                    });
                }
                for (slot, r) in rep.boundary_residual.iter().enumerate() {
                    rows.push(ReportRow {
                        kind: "boundary_residual".into(),
                        key: format!("slot{}", slot + 1),
                        value: *r,
                        grid_level: 0,
                        stable: None,
                    });
                }
                u
            } else {
                solve_fd(&cls, &phi, &hvec, None, &grid, OracleMode::Nonlinear)?
            };
            emit_field("field.csv", &field, &mut files)?;
        }
        "compare-linear" | "compare-nonlinear" => {
            let levels = cfg.solver.compare_levels.unwrap_or(3);
            let mut prev_diff = None;
            let mut kato_prev = None;
            for level in 0..levels {
                let s = 1usize << level;
                let g = Grid::new(
                    grid.length,
                    grid.horizon,
                    (grid.nx - 1) * s + 1,
                    (grid.nt - 1) * s + 1,
                )?;
                let (phi_l, hvec_l) = build_data(&cfg, &g, &cls)?;
                let (rep_field, oracle_field) = if kind == "compare-linear" {
                    let (v, _) = solve_linear(cls.id, &phi_l, None, &hvec_l, &g, &sopts)?;
                    let o = solve_fd(&cls, &phi_l, &hvec_l, None, &g, OracleMode::Linear)?;
                    (v, o)
                } else {
                    let mut popts = PicardOptions::default();
                    popts.solver = sopts.clone();
                    if let Some(t) = cfg.solver.tol {
                        popts.tol = t;
                    }
                    let (u, _, _) = solve_kdv(&cls, &phi_l, &hvec_l, &g, &popts)?;
                    let o = solve_fd(&cls, &phi_l, &hvec_l, None, &g, OracleMode::Nonlinear)?;
                    (u, o)
                };
                let diff = rep_field.axpy(-1.0, &oracle_field).l2_space_time();
                rows.push(ReportRow {
                    kind: "compare".into(),
                    key: "l2_diff".into(),
                    value: diff,
                    grid_level: level,
                    stable: None,
                });
                if let Some(p) = prev_diff {
                    let ratio: f64 = diff / p;
                    rows.push(ReportRow {
                        kind: "compare".into(),
                        key: "ratio".into(),
                        value: ratio,
                        grid_level: level,
                        stable: Some(ratio <= 0.4),
                    });
                    if check_mode && ratio > 0.4 {
                        checks_passed = false;
                    }
                }
                prev_diff = Some(diff);
                let data_norm = x_data_norm(&phi_l, g.length, &hvec_l).max(1e-300);
                let mut kat = kato_report(&rep_field, data_norm, cfg.problem.tier);
                if let Some(prev) = &kato_prev {
                    kato_two_grid(prev, &mut kat);
                }
                rows.push(ReportRow {
                    kind: "kato".into(),
                    key: "c_est".into(),
                    value: kat.c_est,
                    grid_level: level,
                    stable: kat.stable,
                });
                if check_mode && kat.stable == Some(false) {
                    checks_passed = false;
                }
                kato_prev = Some(kat);
                if level == 0 {
                    emit_field("field_level0.csv", &rep_field, &mut files)?;
                }
            }
        }
        other => {
            return Err(KdvError::ConfigInvalid(format!(
                "unknown solver kind '{other}' (expected linear|nonlinear|oracle-linear|oracle-nonlinear|compare-linear|compare-nonlinear)"
            )))
        }
    }

    if cfg.outputs.report {
        let path = cfg.outputs.directory.join("report.csv");
        write_report_csv(&path, &rows)?;
        files.push(path);
    }
    Ok(ScenarioOutcome { files, checks_passed })
}

/// Human-readable description of the four boundary classes (golden-stable).
pub fn list_classes() -> String {
    let mut out = String::new();
    for k in ClassId::all() {
        let idx = k.index();
        let hyp = k.hypotheses().join("),(");
        out.push_str(&format!("class {idx}  [hypotheses ({hyp})]\n"));
        let triple = match k {
            ClassId::K1 => ["v(0,t)", "v(L,t)", "v_x(L,t) + a30 v(0,t) + b30 v(L,t)"],
            ClassId::K2 => [
                "v(0,t)",
                "v_x(L,t) + a30 v(0,t) + b30 v(L,t)",
                "v_xx(L,t) + sum_j a2j d^j v(0,t) + b2j d^j v(L,t)",
            ],
            ClassId::K3 => [
                "v_xx(0,t) + sum_j a1j d^j v(0,t) + b1j d^j v(L,t)",
                "v(L,t)",
                "v_x(L,t) + a30 v(0,t) + b30 v(L,t)",
            ],
            ClassId::K4 => [
                "v_xx(0,t) + sum_j a1j d^j v(0,t) + b1j d^j v(L,t)",
                "v_x(L,t) + a30 v(0,t) + b30 v(L,t)",
                "v_xx(L,t) + sum_j a2j d^j v(0,t) + b2j d^j v(L,t)",
            ],
        };
        for (slot, t) in triple.iter().enumerate() {
            out.push_str(&format!("  h{}: {t}\n", slot + 1));
        }
        out.push_str(&format!(
            "  damping delta = {}, slot exponents at tier s: {}\n\n",
            k.delta(),
            match k {
                ClassId::K1 => "((s+1)/3, (s+1)/3, s/3)",
                ClassId::K2 => "((s+1)/3, s/3, (s-1)/3)",
                ClassId::K3 => "((s-1)/3, (s+1)/3, s/3)",
                ClassId::K4 => "((s-1)/3, (s-1)/3, s/3)",
            }
        ));
    }
    out
}

pub fn list_classes_json() -> String {
    let mut entries = Vec::new();
    for k in ClassId::all() {
        let sig = k.sigma_exponents(0.0);
        let hyp = k.hypotheses();
        entries.push(format!(
            "{{\"class\":{},\"hypotheses\":[\"{}\",\"{}\",\"{}\"],\"delta\":{},\"sigma_s0\":[{},{},{}]}}",
            k.index(),
            hyp[0],
            hyp[1],
            hyp[2],
            k.delta(),
            sig[0],
            sig[1],
            sig[2]
        ));
    }
    format!("[{}]\n", entries.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_listing_is_stable() {
        let text = list_classes();
        assert!(text.contains("class 1  [hypotheses (A1),(B1),(C)]"));
        assert!(text.contains("class 4  [hypotheses (A2),(B2),(C)]"));
        assert_eq!(text.matches("damping delta").count(), 4);
        let json = list_classes_json();
        assert!(json.starts_with('['));
        assert!(json.contains("\"class\":3"));
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let bad = r#"
            [problem]
            class = 1
            length = 1.0
            horizon = 0.1
            [data]
            [grid]
            nx = 16
            nt = 16
            [outputs]
            directory = "out"
        "#;
        let err = toml::from_str::<Config>(bad).unwrap_err().to_string();
        assert!(err.contains("class"), "error should name the key: {err}");
    }

    #[test]
    fn config_requires_class_or_matrices() {
        let cfg = Config {
            problem: ProblemSection {
                class: None,
                a: None,
                b: None,
                length: 1.0,
                horizon: 0.1,
                tier: 0.0,
            },
            data: toml::from_str("").unwrap(),
            grid: GridSection { nx: 16, nt: 16, pad_override: None, pad_cap: None },
            solver: SolverSection::default(),
            outputs: OutputSection { directory: "out".into(), field: true, report: true },
        };
        assert!(matches!(build_class(&cfg.problem), Err(KdvError::ConfigInvalid(_))));
    }
}
