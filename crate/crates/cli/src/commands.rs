use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use massosc::entanglement::{entanglement_trace, write_entanglement_csv};
use massosc::evolution::proper_time;
use massosc::export::num;
use massosc::feasibility::{check_constraints, scan, write_scan_csv, FeasibilityReport, ScanAxis, Verdict};
use massosc::observables::{
    oscillation_wavelength, simulate_events, survival_curve, write_curve_csv, write_events_csv,
    EventPlan, LinearGrid,
};
use massosc::power::{required_events, PowerOptions, PowerOutcome};
use massosc::{Constants, Exec, Extended, ScanGrid, Setup};
use serde_json::json;

use crate::manifest::{self, RunManifest};
use crate::{config, Command, Common, Format, UsageError};

pub const EXIT_MARGINAL: u8 = 3;
pub const EXIT_INFEASIBLE: u8 = 4;
pub const EXIT_NOT_RESOLVABLE: u8 = 5;

struct Ctx {
    setup: Setup,
    consts: Constants,
    exec: Exec,
    format: Format,
}

/// Bytes to emit plus the exit code.
struct Produced {
    data: Vec<u8>,
    code: u8,
}

impl Produced {
    fn ok(data: Vec<u8>) -> Self {
        Self { data, code: 0 }
    }
}

fn decimal(flag: &str, s: &str) -> anyhow::Result<Extended> {
    Extended::from_decimal_str(s)
        .map_err(|_| UsageError(format!("--{flag}: not a decimal number: {s:?}")).into())
}

fn json_bytes<T: serde::Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

pub fn run(command: Command) -> anyhow::Result<u8> {
    let start = Instant::now();
    let (common, seed, name, default_format) = match &command {
        Command::Curve { common, .. } => (common, None, "curve", Format::Csv),
        Command::Entangle { common, .. } => (common, None, "entangle", Format::Csv),
        Command::Check { common } => (common, None, "check", Format::Json),
        Command::Scan { common, .. } => (common, None, "scan", Format::Csv),
        Command::Events { common, seed, .. } => (common, Some(*seed), "events", Format::Csv),
        Command::Power { common, seed, .. } => (common, Some(*seed), "power", Format::Json),
    };
    let common: Common = common.clone();
    let setup = config::load(&common.config, &common.overrides)?;
    let ctx = Ctx {
        setup,
        consts: if common.no_gravity {
            Constants::without_gravity()
        } else {
            Constants::CODATA2018
        },
        exec: if common.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        },
        format: common.format.unwrap_or(default_format),
    };

    let produced = match command {
        Command::Curve {
            l_min, l_max, points, ..
        } => curve(&ctx, l_min, l_max, points)?,
        Command::Entangle {
            tau_min, tau_max, points, ..
        } => entangle(&ctx, &tau_min, tau_max, points)?,
        Command::Check { .. } => check(&ctx)?,
        Command::Scan { axes, .. } => scan_grid(&ctx, &axes)?,
        Command::Events {
            seed,
            bins,
            pairs,
            affected_fraction,
            model,
            ..
        } => {
            let mut plan = EventPlan::detector_bins(&ctx.setup.experiment, bins, pairs, seed);
            plan.affected_fraction = affected_fraction;
            plan.model = model.into();
            events(&ctx, &plan)?
        }
        Command::Power {
            seed,
            confidence,
            trials,
            power,
            baseline_m,
            max_n,
            model,
            ..
        } => {
            let opts = PowerOptions {
                trials,
                power,
                max_n,
                baseline: baseline_m.map(|s| decimal("baseline-m", &s)).transpose()?,
                model: model.into(),
                exec: ctx.exec,
            };
            power_estimate(&ctx, confidence, seed, &opts)?
        }
    };

    let mut outputs: Vec<PathBuf> = Vec::new();
    match &common.out {
        Some(path) => {
            std::fs::write(path, &produced.data)
                .with_context(|| format!("writing {}", path.display()))?;
            outputs.push(path.clone());
        }
        None => std::io::stdout().write_all(&produced.data)?,
    }
    let manifest_path = common
        .manifest
        .clone()
        .or_else(|| common.out.as_deref().map(manifest::path_for));
    if let Some(path) = manifest_path {
        let mut m = RunManifest::new(&common.config, name, seed);
        m.outputs = outputs;
        m.exit_code = produced.code;
        m.write(&path, start.elapsed())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(produced.code)
}

fn curve(ctx: &Ctx, l_min: Option<String>, l_max: Option<String>, points: usize) -> anyhow::Result<Produced> {
    let (spec, cfg) = (&ctx.setup.particle, &ctx.setup.experiment);
    let lo = match l_min {
        Some(s) => decimal("l-min", &s)?,
        None => Extended::exact(cfg.baseline),
    };
    let hi = match l_max {
        Some(s) => decimal("l-max", &s)?,
        None => &lo + &Extended::exact(10.0 * oscillation_wavelength(&ctx.consts, spec, cfg.gamma)),
    };
    let grid = LinearGrid::span(lo, hi, points)?;
    let rows = survival_curve(&ctx.consts, spec, cfg, &grid, ctx.exec)?;
    let mut data = Vec::new();
    match ctx.format {
        Format::Csv => write_curve_csv(&mut data, &rows)?,
        Format::Json => {
            let v: Vec<_> = rows
                .iter()
                .map(|p| {
                    json!({
                        "L_m": p.baseline_m,
                        "P_isolated": p.p_isolated,
                        "P_paper_pair": p.p_shifted_pair,
                        "P_joint": p.p_joint,
                        "P_marginal": p.p_marginal,
                    })
                })
                .collect();
            data = json_bytes(&v)?;
        }
    }
    Ok(Produced::ok(data))
}

fn entangle(ctx: &Ctx, tau_min: &str, tau_max: Option<String>, points: usize) -> anyhow::Result<Produced> {
    let (spec, cfg) = (&ctx.setup.particle, &ctx.setup.experiment);
    let lo = decimal("tau-min", tau_min)?;
    let hi = match tau_max {
        Some(s) => decimal("tau-max", &s)?,
        None => proper_time(&ctx.consts, cfg)?,
    };
    let grid = LinearGrid::span(lo, hi, points)?;
    let rows = entanglement_trace(&ctx.consts, spec, cfg, &grid, ctx.exec)?;
    let mut data = Vec::new();
    match ctx.format {
        Format::Csv => write_entanglement_csv(&mut data, &rows)?,
        Format::Json => {
            let v: Vec<_> = rows
                .iter()
                .map(|p| {
                    json!({
                        "tau_s": p.tau_s,
                        "L_m": p.baseline_m,
                        "concurrence": p.concurrence,
                        "negativity": p.negativity,
                        "entropy_bits": p.entropy_bits,
                        "phi_E_reduced_rad": p.phi_e_reduced_rad,
                    })
                })
                .collect();
            data = json_bytes(&v)?;
        }
    }
    Ok(Produced::ok(data))
}

fn describe(r: &FeasibilityReport) -> String {
    let mut s = String::new();
    for c in r.constraints() {
        s += &format!(
            "{:<26} {:>12.4e} < {:<12.4e} margin {:>10.4e}  {:?}\n",
            c.name, c.lhs, c.rhs, c.margin, c.status
        );
    }
    s += &format!(
        "lambda = {:.6e} m, Phi = {:.6e} rad, Phi_G = {:.6e} rad, phi_E = {:.6e} rad\n",
        r.lambda_m, r.phi_rad, r.phi_g_rad, r.phi_e_rad
    );
    s += &format!("note: {}\nverdict: {:?}\n", r.note, r.verdict());
    s
}

fn check(ctx: &Ctx) -> anyhow::Result<Produced> {
    let r = check_constraints(&ctx.consts, &ctx.setup.particle, &ctx.setup.experiment)?;
    eprint!("{}", describe(&r));
    let data = match ctx.format {
        Format::Json => json_bytes(&json!({ "report": &r, "verdict": r.verdict() }))?,
        Format::Csv => {
            let mut d = b"constraint,lhs,rhs,margin,pass,status\n".to_vec();
            for c in r.constraints() {
                writeln!(
                    d,
                    "{},{},{},{},{},{}",
                    c.name,
                    num(c.lhs),
                    num(c.rhs),
                    num(c.margin),
                    c.pass,
                    serde_json::to_value(c.status)?.as_str().unwrap_or_default()
                )?;
            }
            d
        }
    };
    let code = match r.verdict() {
        Verdict::Feasible => 0,
        Verdict::Marginal => EXIT_MARGINAL,
        Verdict::Infeasible => EXIT_INFEASIBLE,
    };
    Ok(Produced { data, code })
}

fn scan_grid(ctx: &Ctx, axes: &[String]) -> anyhow::Result<Produced> {
    let axes = axes.iter().map(|a| ScanAxis::parse(a)).collect::<Result<Vec<_>, _>>()?;
    let grid = ScanGrid::new(axes)?;
    let rows = scan(&ctx.consts, &ctx.setup.particle, &ctx.setup.experiment, &grid, ctx.exec)?;
    let data = match ctx.format {
        Format::Csv => {
            let mut d = Vec::new();
            write_scan_csv(&mut d, &rows)?;
            d
        }
        Format::Json => json_bytes(&rows)?,
    };
    Ok(Produced::ok(data))
}

fn events(ctx: &Ctx, plan: &EventPlan) -> anyhow::Result<Produced> {
    let rows = simulate_events(&ctx.consts, &ctx.setup.particle, &ctx.setup.experiment, plan, ctx.exec)?;
    let data = match ctx.format {
        Format::Csv => {
            let mut d = Vec::new();
            write_events_csv(&mut d, &rows)?;
            d
        }
        Format::Json => json_bytes(&rows)?,
    };
    Ok(Produced::ok(data))
}

fn power_estimate(ctx: &Ctx, confidence: f64, seed: u64, opts: &PowerOptions) -> anyhow::Result<Produced> {
    let outcome = required_events(
        &ctx.consts,
        &ctx.setup.particle,
        &ctx.setup.experiment,
        confidence,
        seed,
        opts,
    )?;
    let code = match &outcome {
        PowerOutcome::Resolved(_) => 0,
        PowerOutcome::NotResolvable { reason, .. } => {
            eprintln!("not resolvable: {reason}");
            EXIT_NOT_RESOLVABLE
        }
    };
    let data = match ctx.format {
        Format::Json => json_bytes(&outcome)?,
        Format::Csv => {
            let mut d = b"status,n_required,confidence,phase_resolution_rad,trials,power\n".to_vec();
            match &outcome {
                PowerOutcome::Resolved(e) => writeln!(
                    d,
                    "resolved,{},{},{},{},{}",
                    e.n_required,
                    num(e.confidence),
                    num(e.phase_resolution_rad),
                    e.trials,
                    num(e.power)
                )?,
                PowerOutcome::NotResolvable { phase_resolution_rad, .. } => writeln!(
                    d,
                    "not_resolvable,,{},{},{},",
                    num(confidence),
                    num(*phase_resolution_rad),
                    opts.trials
                )?,
            }
            d
        }
    };
    Ok(Produced { data, code })
}
