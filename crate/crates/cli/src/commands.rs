use std::fs;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use hslice_core::cube::{verify_cover, CoverOptions, CubeError, NumericMode, WiggleOptions};
use hslice_core::decompose::{decompose, verify_decomposition, ConstantsSpec, DecompConstants};
use hslice_core::gen::generate;
use hslice_core::io::{
    collection_to_json, cover_report_json, parse_collection, parse_matrix, parse_vector,
    write_breakdown_csv, write_lab_csv, IoError,
};
use hslice_core::lab::{check_hyperplane_claims, run_case_file, LabError, McConfig, Verdict};
use hslice_core::scales::{brute_max_scales, greedy_scales};
use hslice_core::witness::{
    close_type_breakdown, end_to_end_witness, prepare, BreakdownConfig, ParamSpec, WitnessConfig,
    WitnessError, WitnessStatus,
};
use hslice_core::EstimateReport;

use crate::output::Artifacts;
use crate::{Cli, Command, Global};

const BUNDLED_CASES: &str = include_str!("../cases/default.json");
const BRUTE_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Fail,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Self::Success => 0,
            Self::Fail => 1,
        }
    }

    fn from_fail(fail: bool) -> Self {
        if fail {
            Self::Fail
        } else {
            Self::Success
        }
    }
}

/// 3 for enumeration-cap violations anywhere in the error chain, 2 otherwise.
pub fn error_code(err: &anyhow::Error) -> u8 {
    let over_cap = |c: &CubeError| matches!(c, CubeError::OverCap { .. });
    let capped = err.chain().any(|e| {
        e.downcast_ref::<CubeError>().is_some_and(over_cap)
            || matches!(e.downcast_ref::<WitnessError>(), Some(WitnessError::Cube(c)) if over_cap(c))
            || matches!(e.downcast_ref::<IoError>(), Some(IoError::Cube(c)) if over_cap(c))
            || matches!(e.downcast_ref::<LabError>(), Some(LabError::OverCap { .. }))
    });
    if capped {
        3
    } else {
        2
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.workers)
        .build()
        .context("starting worker pool")?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let g = &cli.global;
    match &cli.command {
        Command::Verify {
            mode,
            unsliced_limit,
        } => verify(g, mode.as_deref(), *unsliced_limit),
        Command::Witness { breakdown, claims } => witness(g, *breakdown, *claims),
        Command::Decompose => decompose_cmd(g),
        Command::Scales { delta, brute } => scales(g, *delta, *brute),
        Command::Lab => lab(g),
        Command::Gen { kind, n, k } => {
            let c = generate(*kind, *n, *k, g.seed)?;
            let mut out = Artifacts::create(&g.output)?;
            out.json("collection.json", &collection_to_json(&c))?;
            out.finish(
                "gen",
                g,
                json!({ "kind": kind.to_string(), "n": n, "k": k }),
            )?;
            println!("{} hyperplanes in dimension {n}", c.len());
            Ok(Outcome::Success)
        }
    }
}

fn read_input(g: &Global) -> Result<String> {
    let path = g
        .input
        .as_ref()
        .ok_or_else(|| anyhow!("--input is required"))?;
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn verify(g: &Global, mode: Option<&str>, unsliced_limit: usize) -> Result<Outcome> {
    let mode = match mode {
        None => None,
        Some("exact") => Some(NumericMode::Exact),
        Some("float") => Some(NumericMode::Float),
        Some(other) => bail!("unknown mode `{other}`"),
    };
    let c = parse_collection(&read_input(g)?, mode)?;
    let opts = CoverOptions {
        cap: g.cap,
        unsliced_limit,
        ..CoverOptions::default()
    };
    let r = verify_cover(&c, &opts)?;
    let mut out = Artifacts::create(&g.output)?;
    let mut report = cover_report_json(&r);
    report["seed"] = json!(g.seed);
    out.json("report.json", &report)?;
    out.with_writer("unsliced.csv", |w| {
        Ok(hslice_core::io::write_unsliced_csv(&r, w)?)
    })?;
    out.finish("verify", g, json!({ "unsliced_limit": unsliced_limit }))?;
    println!("{}/{} sliced", r.sliced_edges, r.total_edges);
    Ok(Outcome::Success)
}

fn witness(g: &Global, breakdown: bool, claims: bool) -> Result<Outcome> {
    let c = parse_collection(&read_input(g)?, None)?;
    let params: ParamSpec = g.params.parse()?;
    let constants: ConstantsSpec = g.constants.parse()?;
    let cfg = WitnessConfig {
        seed: g.seed,
        budget: g.budget,
        params,
        constants,
        wiggle: WiggleOptions {
            cap: g.cap,
            ..WitnessConfig::default().wiggle
        },
    };
    let result = end_to_end_witness(&c, &cfg)?;
    let mut out = Artifacts::create(&g.output)?;
    let mut report = json!({
        "seed": g.seed,
        "params": g.params,
        "constants": g.constants,
        "result": result,
    });
    let mut fail = false;

    if (breakdown || claims) && !c.is_empty() {
        let prepared = prepare(&c, &cfg)?;
        let w = result
            .w
            .clone()
            .unwrap_or_else(|| vec![1; prepared.n2.len()]);
        if breakdown && prepared.v.rows() > 0 {
            let bc = BreakdownConfig {
                trials: g.trials,
                seed: g.seed,
                ..BreakdownConfig::default()
            };
            let b = close_type_breakdown(&prepared.v, &prepared.lambda(&w), &prepared.params, &bc)?;
            fail |= b.rows.iter().any(|r| r.fails());
            out.with_writer("breakdown.csv", |f| Ok(write_breakdown_csv(&b, f)?))?;
            report["breakdown"] = json!(b);
        }
        if claims && prepared.v.rows() > 0 {
            if let Some(x) = &result.point {
                let inst = prepared.claim_instance(x, &w);
                let r = check_hyperplane_claims(&inst, &McConfig::new(g.trials, g.seed))?;
                fail |= any_fail(&r);
                out.with_writer("claims.csv", |f| Ok(write_lab_csv(&r, f)?))?;
                report["claims"] = json!(r);
            }
        }
    }

    out.json("report.json", &report)?;
    if let Some(e) = &result.edge {
        out.with_writer("edge.csv", |f| {
            use std::io::Write;
            writeln!(f, "base_bits_hex,flip_index")?;
            writeln!(f, "{},{}", e.base().to_hex(), e.flip())?;
            Ok(())
        })?;
    }
    out.finish(
        "witness",
        g,
        json!({ "breakdown": breakdown, "claims": claims }),
    )?;
    match (result.status, &result.edge) {
        (WitnessStatus::Found, Some(e)) => println!(
            "found edge base={} flip={} after {} attempts",
            e.base().to_hex(),
            e.flip(),
            result.attempts
        ),
        _ => println!("exhausted after {} attempts", result.attempts),
    }
    Ok(Outcome::from_fail(fail))
}

fn decompose_cmd(g: &Global) -> Result<Outcome> {
    let a = parse_matrix(&read_input(g)?)?;
    let spec: ConstantsSpec = g.constants.parse()?;
    let constants = DecompConstants::resolve(&spec, a.rows(), a.cols())?;
    let r = decompose(&a, &constants)?;
    let v = verify_decomposition(&a, &r, &constants);
    let mut out = Artifacts::create(&g.output)?;
    out.json(
        "report.json",
        &json!({ "seed": g.seed, "constants": g.constants, "result": r, "verification": v }),
    )?;
    out.finish("decompose", g, json!({}))?;
    println!(
        "|K1|={} |K2|={} |N1|={} |N2|={} iterations={} verification {}",
        r.k1.len(),
        r.k2.len(),
        r.n1.len(),
        r.n2.len(),
        r.iterations,
        if v.passed() { "passed" } else { "FAILED" }
    );
    Ok(Outcome::from_fail(!v.passed()))
}

fn scales(g: &Global, delta: f64, brute: bool) -> Result<Outcome> {
    let v = parse_vector(&read_input(g)?)?;
    let (count, cert) = greedy_scales(&v, delta)?;
    let best = if brute {
        if v.len() > BRUTE_LIMIT {
            bail!(
                "--brute supports at most {BRUTE_LIMIT} entries, got {}",
                v.len()
            );
        }
        Some(brute_max_scales(&v, delta)?)
    } else {
        None
    };
    let mut out = Artifacts::create(&g.output)?;
    out.json(
        "report.json",
        &json!({ "seed": g.seed, "delta": delta, "scales": count, "certificate": cert, "brute": best }),
    )?;
    out.finish("scales", g, json!({ "delta": delta, "brute": brute }))?;
    match best {
        Some(b) => println!("{count} scales of size >= {delta} (optimum {b})"),
        None => println!("{count} scales of size >= {delta}"),
    }
    Ok(Outcome::Success)
}

fn any_fail(r: &[EstimateReport]) -> bool {
    r.iter().any(|r| r.verdict == Verdict::Fail)
}

fn lab(g: &Global) -> Result<Outcome> {
    let text = match &g.input {
        Some(_) => read_input(g)?,
        None => BUNDLED_CASES.to_string(),
    };
    let reports = run_case_file(&text, &McConfig::new(g.trials, g.seed))?;
    let mut out = Artifacts::create(&g.output)?;
    out.with_writer("lab.csv", |f| Ok(write_lab_csv(&reports, f)?))?;
    out.json(
        "report.json",
        &json!({ "seed": g.seed, "trials": g.trials, "reports": reports }),
    )?;
    out.finish("lab", g, json!({ "bundled_cases": g.input.is_none() }))?;
    let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
    println!(
        "{} checks: {} pass, {} vacuous, {} fail",
        reports.len(),
        count(Verdict::Pass),
        count(Verdict::Vacuous),
        count(Verdict::Fail)
    );
    Ok(Outcome::from_fail(any_fail(&reports)))
}
