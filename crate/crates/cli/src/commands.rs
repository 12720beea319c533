use std::path::{Path, PathBuf};

use ringred::balance::{asymptotic_d, solve_balance, sweep_csv};
use ringred::continuum::{compare_discrete, convergence_csv};
use ringred::energy::{scan_csv, scan_f, FixedPointOptions};
use ringred::groundstate::{derive_constants, solve_ground_state, GroundStateProfile, ModelConstants, PsiLaw, PsiMode};
use ringred::io::write_atomic;
use ringred::reduced_linear::{build_t, ReducedOperator};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    BalanceSweepConfig, ContinuumConfig, EnergyScanConfig, GroundStateConfig, ProfileSpec, SpectrumConfig,
};
use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct Ctx {
    pub out: PathBuf,
    pub format: Format,
}

impl Ctx {
    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
        std::fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        write_atomic(&path, bytes)?;
        Ok(path)
    }

    /// Writes the main table of a command in the selected format.
    fn write_table<T: Serialize>(&self, stem: &str, csv: String, rows: &T) -> Result<PathBuf, Failure> {
        match self.format {
            Format::Csv => self.write(&format!("{stem}.csv"), csv.as_bytes()),
            Format::Json => {
                let text = serde_json::to_string_pretty(rows).map_err(|e| Failure::numerical(e.to_string()))?;
                self.write(&format!("{stem}.json"), text.as_bytes())
            }
        }
    }
}

fn print_summary(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("summary serializes"));
}

pub struct LoadedProfile {
    pub profile: GroundStateProfile,
    pub constants: ModelConstants,
    pub cached: bool,
    pub key: String,
}

/// Loads the profile for `spec` from `cache_dir`, solving and storing it on
/// a miss. Fresh solves are reloaded from disk so that cold and warm runs
/// see the same numbers.
pub fn load_profile(spec: &ProfileSpec, cache_dir: &Path) -> Result<LoadedProfile, Failure> {
    let key = spec.cache_key();
    let hit = cache_dir.join(format!("{key}.csv")).exists() && cache_dir.join(format!("{key}.json")).exists();
    if !hit {
        let profile = solve_ground_state(spec.dim, spec.p, spec.r_max, spec.tol)?;
        let constants = derive_constants(&profile, spec.a)?;
        profile.save(cache_dir, &key, Some(constants))?;
    }
    let (profile, header) = GroundStateProfile::load(cache_dir, &key)?;
    let same = header.dim == spec.dim && header.p == spec.p && header.r_max == spec.r_max;
    if !same || header.shooting_tol != spec.tol {
        return Err(Failure::numerical(format!("cached profile {key} does not match the requested parameters")));
    }
    let constants = match header.constants {
        Some(c) if c.a == spec.a => c,
        _ => derive_constants(&profile, spec.a)?,
    };
    Ok(LoadedProfile { profile, constants, cached: hit, key })
}

fn cache_dir(ctx: &Ctx, configured: &Option<PathBuf>) -> PathBuf {
    configured.clone().unwrap_or_else(|| ctx.out.join("cache"))
}

fn psi_law(mode: PsiMode, lp: &LoadedProfile) -> Result<PsiLaw, Failure> {
    Ok(PsiLaw::for_mode(mode, &lp.profile, &lp.constants, 2.0, 70.0)?)
}

pub fn ground_state(ctx: &Ctx, cfg: GroundStateConfig) -> Result<(), Failure> {
    let lp = load_profile(&cfg.ground_state, &cache_dir(ctx, &cfg.cache_dir))?;
    lp.profile.save(&ctx.out, "profile", Some(lp.constants))?;
    let diag = lp.profile.diagnostics();
    print_summary(&json!({
        "w0": lp.profile.w0(),
        "c_Np": lp.profile.c_np,
        "constants": lp.constants,
        "max_residual": diag.max_residual,
        "cached": lp.cached,
        "cache_key": lp.key,
    }));
    Ok(())
}

pub fn balance_sweep(ctx: &Ctx, cfg: BalanceSweepConfig) -> Result<(), Failure> {
    if cfg.k.is_empty() {
        return Err(Failure::validation("K list is empty"));
    }
    let lp = load_profile(&cfg.ground_state, &cache_dir(ctx, &cfg.cache_dir))?;
    let law = psi_law(cfg.mode, &lp)?;
    let rows = cfg
        .k
        .iter()
        .map(|&k| solve_balance(k, cfg.m, &lp.constants, &law))
        .collect::<Result<Vec<_>, _>>()?;
    let dim = lp.profile.dim;
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|b| {
            let mut v = serde_json::to_value(b).expect("row serializes");
            v["asymptotic_d"] = json!(asymptotic_d(b.k, b.m, dim));
            v
        })
        .collect();
    let path = ctx.write_table("balance", sweep_csv(&rows, dim), &json_rows)?;
    let worst = rows.iter().map(|b| b.residual_rel.abs()).fold(0.0, f64::max);
    print_summary(&json!({ "rows": rows.len(), "max_residual_rel": worst, "table": path }));
    Ok(())
}

pub fn spectrum(ctx: &Ctx, cfg: SpectrumConfig) -> Result<(), Failure> {
    let op = match cfg.dhat {
        Some(dhat) => ReducedOperator::with_size(cfg.k, dhat, cfg.m)?,
        None => {
            if cfg.k < 8 {
                return Err(Failure::validation(format!("K = {} below 8 needs an explicit dhat", cfg.k)));
            }
            let lp = load_profile(&cfg.ground_state, &cache_dir(ctx, &cfg.cache_dir))?;
            let law = psi_law(cfg.mode, &lp)?;
            let b = solve_balance(cfg.k, cfg.m, &lp.constants, &law)?;
            build_t(cfg.k, b.dhat, cfg.m)?
        }
    };
    let spec = op.spectrum();
    let path = ctx.write_table("spectrum", spec.to_csv(), &spec.rows)?;
    let (z, n, p) = spec.inertia();
    let line = format!("{z} zero, {n} negative, {p} positive");
    print_summary(&json!({ "K": cfg.k, "dhat": op.dhat, "inertia": line, "table": path }));
    let k = cfg.k;
    if (z, n, p) != (1, k - 1, k) {
        return Err(Failure::numerical(format!(
            "inertia is ({z}, {n}, {p}), expected (1, {}, {k})",
            k - 1
        )));
    }
    Ok(())
}

pub fn compare_continuum(ctx: &Ctx, cfg: ContinuumConfig) -> Result<(), Failure> {
    cfg.phi.validate()?;
    cfg.varphi.validate()?;
    if cfg.k.is_empty() {
        return Err(Failure::validation("K list is empty"));
    }
    let mut ks = cfg.k.clone();
    ks.sort_unstable();
    let rows = ks
        .iter()
        .map(|&k| compare_discrete(k, |t| cfg.phi.eval(t), |t| cfg.varphi.eval(t), cfg.m, cfg.dhat))
        .collect::<Result<Vec<_>, _>>()?;
    let mut prev: Option<f64> = None;
    let summary_rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            let e = r.sup_err_f.max(r.sup_err_g);
            let ratio = prev.map(|p| e / p);
            prev = Some(e);
            json!({ "K": r.k, "sup_err_f": r.sup_err_f, "sup_err_g": r.sup_err_g, "ratio": ratio })
        })
        .collect();
    let path = ctx.write_table("convergence", convergence_csv(&rows), &summary_rows)?;
    let last_ratio = summary_rows.last().and_then(|r| r["ratio"].as_f64());
    print_summary(&json!({ "rows": rows.len(), "last_ratio": last_ratio, "table": path }));
    Ok(())
}

pub fn energy_scan(ctx: &Ctx, cfg: EnergyScanConfig) -> Result<(), Failure> {
    cfg.potential.validate()?;
    if cfg.potential.v_inf != 1.0 {
        return Err(Failure::validation("the reduced model is normalised to V_inf = 1"));
    }
    let spec = ProfileSpec { a: cfg.potential.a, ..cfg.ground_state };
    let lp = load_profile(&spec, &cache_dir(ctx, &cfg.cache_dir))?;
    let law = psi_law(cfg.mode, &lp)?;
    let bal = solve_balance(cfg.k, cfg.potential.m, &lp.constants, &law)?;
    let opts = FixedPointOptions { max_iter: cfg.max_iter, tol: cfg.tol, force: cfg.force };
    let scan = scan_f(cfg.k, &cfg.potential, &bal, &lp.constants, &lp.profile, &law, cfg.n_alpha, opts)?;
    let table = ctx.write_table("scan", scan_csv(&scan), &scan.rows)?;
    let extrema = json!({
        "flat": scan.flat,
        "relative_spread": scan.relative_spread,
        "variable_spread": scan.variable_spread,
        "extrema": scan.extrema,
    });
    let ext_path = ctx.write("extrema.json", serde_json::to_string_pretty(&extrema).expect("json").as_bytes())?;
    let unconverged = scan.rows.iter().filter(|r| !r.converged).count();
    print_summary(&json!({
        "K": cfg.k,
        "R": bal.r,
        "d": bal.d,
        "flat": scan.flat,
        "extrema": scan.extrema.len(),
        "unconverged_angles": unconverged,
        "table": table,
        "extrema_file": ext_path,
    }));
    Ok(())
}
