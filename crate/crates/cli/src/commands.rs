use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use arqkey::analysis::{
    avg_transmissions, key_rate, optimize_rate, p_out, tradeoff_sweep, Objective, SearchBox,
    DEFAULT_K_CAP,
};
use arqkey::coset::{eve_posterior_support, posterior_is_uniform};
use arqkey::fec::{
    fig4_experiment, is_unimodal, ConvCodeSpec, ExperimentConfig, LinkConfig, PacketSpec,
    MIN_TRIALS,
};
use arqkey::protocol::trace_io::{
    inconsistent_frames, read_trace, write_exchange, write_trace_header, TraceError, TraceHeader,
};
use arqkey::protocol::{
    run_exchanges, stats_from_summaries, ExchangeRun, ExchangeStats, ExchangeSummary,
};
use arqkey::{db_to_linear, ChannelSpec, OperatingPoint, ProtocolParams};
use serde_json::{json, Map, Value};

use crate::report::{Cell, Report};
use crate::settings::{DecisionArg, Flag, FloatList, GenieArg, PunctureArg, SchemeList, Settings};
use crate::{
    CapacityArgs, CliError, Common, FecArgs, OutageArgs, Outcome, ReplayArgs, SimulateArgs,
};

/// Exchanges simulated per batch; bounds memory when traces are kept.
const CHUNK: u64 = 4096;
/// Widest payload for which every exchange's posterior is enumerated.
const EXACT_BLINDING_WIDTH: usize = 12;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn meta(command: &str, common: &Common, config: Value) -> Value {
    json!({
        "tool": "arqkey",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": common.seed,
        "config": config,
    })
}

fn range(a: f64, step: f64, b: f64) -> FloatList {
    format!("{a}:{step}:{b}")
        .parse()
        .expect("valid built-in range")
}

fn ok(report: Report) -> Result<Outcome, CliError> {
    Ok(Outcome {
        report,
        status: Ok(()),
    })
}

pub(crate) fn capacity(
    common: &Common,
    s: &Settings,
    a: &CapacityArgs,
) -> Result<Outcome, CliError> {
    let snr_db: FloatList = s.get("snr-db", a.snr_db.as_deref(), range(0.0, 2.0, 40.0))?;
    let rc: FloatList = s.get("rc", a.rc.as_deref(), FloatList(vec![0.0, 3.0, 7.0]))?;
    let r0_max: f64 = s.get("r0-max", a.r0_max.as_deref(), 25.0)?;
    let r0_steps: usize = s.get("r0-steps", a.r0_steps.as_deref(), 500)?;
    s.finish()?;
    if let Some(bad) = rc.0.iter().find(|&&r| r < 0.0) {
        return Err(usage(format!("rc must be nonnegative, got {bad}")));
    }
    let search = SearchBox {
        r0_max,
        r0_steps,
        ..SearchBox::default()
    };
    let config = json!({"snr_db": snr_db, "rc": rc, "r0_max": r0_max, "r0_steps": r0_steps});
    let mut report = Report::new(
        meta("capacity", common, config),
        vec![
            "snr_db",
            "rc",
            "cs",
            "cs_argmax_r0",
            "cs_argmax_power",
            "ce",
            "ce_argmax_r0",
            "ce_argmax_power",
        ],
    );
    for &snr in &snr_db.0 {
        let p = db_to_linear(snr);
        let cs = optimize_rate(Objective::Cs, p, 0.0, &search).map_err(usage)?;
        for &r in &rc.0 {
            let ce = optimize_rate(Objective::Ce, p, r, &search).map_err(usage)?;
            report.push(vec![
                snr.into(),
                r.into(),
                cs.value.into(),
                cs.argmax_r0.into(),
                cs.argmax_power.into(),
                ce.value.into(),
                ce.argmax_r0.into(),
                ce.argmax_power.into(),
            ]);
        }
    }
    ok(report)
}

pub(crate) fn outage(common: &Common, s: &Settings, a: &OutageArgs) -> Result<Outcome, CliError> {
    let r0: FloatList = s.get("r0", a.r0.as_deref(), FloatList(vec![4.0, 6.0, 7.0, 8.0]))?;
    let rc: FloatList = s.get("rc", a.rc.as_deref(), FloatList(vec![2.0]))?;
    let snr_db: f64 = s.get("snr-db", a.snr_db.as_deref(), 30.0)?;
    let target: f64 = s.get("target", a.target.as_deref(), 1e-6)?;
    let k_cap: u32 = s.get("k-cap", a.k_cap.as_deref(), DEFAULT_K_CAP)?;
    s.finish()?;
    if !snr_db.is_finite() {
        return Err(usage(format!("snr-db must be finite, got {snr_db}")));
    }
    let power = db_to_linear(snr_db);
    let config = json!({"r0": r0, "rc": rc, "snr_db": snr_db, "target": target, "k_cap": k_cap});
    let mut report = Report::new(
        meta("outage", common, config),
        vec![
            "rc",
            "r0",
            "snr_db",
            "k",
            "key_rate",
            "p_out",
            "log_p_out",
            "feasible",
            "reached_target",
        ],
    );
    let mut at_target = Vec::new();
    for &r in &rc.0 {
        for curve in tradeoff_sweep(r, power, &r0.0, target, k_cap).map_err(usage)? {
            for pt in &curve.points {
                report.push(vec![
                    r.into(),
                    curve.r0.into(),
                    snr_db.into(),
                    u64::from(pt.k).into(),
                    pt.key_rate.into(),
                    pt.p_out.into(),
                    pt.log_p_out.into(),
                    curve.feasible.into(),
                    curve.reached_target.into(),
                ]);
            }
            let hit = curve.first_meeting(target);
            at_target.push(json!({
                "rc": r,
                "r0": curve.r0,
                "feasible": curve.feasible,
                "k": hit.map(|p| p.k),
                "key_rate": hit.map(|p| p.key_rate),
                "p_out": hit.map(|p| p.p_out),
            }));
        }
    }
    report
        .extra
        .insert("at_target".into(), Value::Array(at_target));
    ok(report)
}

/// Exact check of Eve's posterior on every completed exchange.
struct Blinding {
    width: usize,
    checked: u64,
    violations: u64,
}

impl Blinding {
    fn new(width: usize) -> Self {
        Self {
            width,
            checked: 0,
            violations: 0,
        }
    }

    fn observe(&mut self, run: &ExchangeRun) {
        if !run.completed || self.width > EXACT_BLINDING_WIDTH {
            return;
        }
        let view = run.trace.eve_view();
        let support = eve_posterior_support(&view).expect("parts share the payload width");
        let ok = if run.trace.eve_full_intercept {
            support == 1
        } else {
            support == 1 << self.width && posterior_is_uniform(&view).expect("checked width")
        };
        self.checked += 1;
        self.violations += u64::from(!ok);
    }

    fn json(&self) -> Value {
        if self.width > EXACT_BLINDING_WIDTH {
            json!({"checked": 0, "violations": 0, "skipped": format!("payload width {} > {EXACT_BLINDING_WIDTH}", self.width)})
        } else {
            json!({"checked": self.checked, "violations": self.violations})
        }
    }
}

fn z_score(empirical: f64, std_err: f64, reference: f64) -> f64 {
    let d = empirical - reference;
    if d == 0.0 {
        0.0
    } else {
        d / std_err
    }
}

/// Empirical statistics against the closed forms at the trace's gains.
fn protocol_report(
    meta: Value,
    params: &ProtocolParams,
    spec: &ChannelSpec,
    stats: &ExchangeStats,
    blinding: &Blinding,
) -> (Report, f64) {
    let pt = params.point;
    let bob = OperatingPoint {
        power: pt.power * spec.mean_gain_bob(),
        ..pt
    };
    let eve = OperatingPoint {
        power: pt.power * spec.mean_gain_eve(),
        ..pt
    };
    let rows = [
        ("outage", stats.outage, stats.outage_std_err, p_out(&eve)),
        (
            "key_throughput",
            stats.throughput,
            stats.throughput_std_err,
            key_rate(&bob),
        ),
        (
            "mean_transmissions",
            stats.mean_frames,
            stats.mean_frames_std_err,
            avg_transmissions(&bob),
        ),
    ];
    let mut report = Report::new(
        meta,
        vec!["metric", "empirical", "std_err", "closed_form", "z_score"],
    );
    let mut worst = 0.0f64;
    for (name, e, se, cf) in rows {
        let z = z_score(e, se, cf);
        if stats.completed > 0 {
            worst = worst.max(z.abs());
        }
        report.push(vec![
            Cell::S(name.into()),
            e.into(),
            se.into(),
            cf.into(),
            z.into(),
        ]);
    }
    report.extra.insert(
        "counts".into(),
        json!({
            "exchanges": stats.exchanges,
            "completed": stats.completed,
            "incomplete": stats.incomplete,
            "key_mismatches": stats.key_mismatches,
        }),
    );
    report.extra.insert("blinding".into(), blinding.json());
    (report, worst)
}

fn protocol_status(stats: &ExchangeStats, blinding: &Blinding) -> Result<(), CliError> {
    if stats.completed == 0 {
        return Err(CliError::Infeasible(format!(
            "none of {} exchanges completed within max_frames",
            stats.exchanges
        )));
    }
    if stats.key_mismatches > 0 {
        return Err(CliError::Verification(format!(
            "{} key mismatches",
            stats.key_mismatches
        )));
    }
    if blinding.violations > 0 {
        return Err(CliError::Verification(format!(
            "{} exchanges leak key information to Eve",
            blinding.violations
        )));
    }
    Ok(())
}

fn io_err(path: &std::path::Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn simulate(
    common: &Common,
    s: &Settings,
    a: &SimulateArgs,
) -> Result<Outcome, CliError> {
    let r0: f64 = s.get("r0", a.r0.as_deref(), 4.0)?;
    let rc: f64 = s.get("rc", a.rc.as_deref(), 2.0)?;
    let snr_db: f64 = s.get("snr-db", a.snr_db.as_deref(), 30.0)?;
    let k: u32 = s.get("k", a.k.as_deref(), 10)?;
    let exchanges: u64 = s.get("exchanges", a.exchanges.as_deref(), 10_000)?;
    let payload_bits: usize = s.get(
        "payload-bits",
        a.payload_bits.as_deref(),
        arqkey::protocol::DEFAULT_PAYLOAD_BITS,
    )?;
    let max_frames: Option<u64> = s.optional("max-frames", a.max_frames.as_deref())?;
    let mean_gain_bob: f64 = s.get("mean-gain-bob", a.mean_gain_bob.as_deref(), 1.0)?;
    let mean_gain_eve: f64 = s.get("mean-gain-eve", a.mean_gain_eve.as_deref(), 1.0)?;
    let trace: Option<PathBuf> = match &a.trace {
        Some(p) => {
            s.optional::<PathBuf>("trace", None)?;
            Some(p.clone())
        }
        None => s.optional("trace", None)?,
    };
    let check = s.get("check", a.check.then_some("true"), Flag(false))?.0;
    s.finish()?;

    if !snr_db.is_finite() {
        return Err(usage(format!("snr-db must be finite, got {snr_db}")));
    }
    if exchanges == 0 {
        return Err(usage("exchanges must be at least 1"));
    }
    let power = db_to_linear(snr_db);
    let point = OperatingPoint::new(r0, rc, power, k).map_err(usage)?;
    let mut params = ProtocolParams::new(point, common.seed).with_payload_bits(payload_bits);
    if let Some(m) = max_frames {
        params = params.with_max_frames(m);
    }
    params.validate().map_err(usage)?;
    let spec = ChannelSpec::rayleigh(mean_gain_bob, mean_gain_eve, power).map_err(usage)?;

    let config = json!({
        "r0": r0, "rc": rc, "snr_db": snr_db, "k": k, "exchanges": exchanges,
        "payload_bits": payload_bits, "max_frames": params.max_frames,
        "mean_gain_bob": mean_gain_bob, "mean_gain_eve": mean_gain_eve,
        "trace": trace, "check": check,
    });

    let mut writer = match &trace {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(io_err(p))?);
            write_trace_header(&mut w, &TraceHeader::new(&params, &spec)).map_err(io_err(p))?;
            Some((p, w))
        }
        None => None,
    };
    let mut summaries = Vec::with_capacity(exchanges as usize);
    let mut blinding = Blinding::new(payload_bits);
    let mut start = 0;
    while start < exchanges {
        let end = (start + CHUNK).min(exchanges);
        let runs = run_exchanges(&params, &spec, start..end).map_err(usage)?;
        for (i, run) in runs.iter().enumerate() {
            if let Some((p, w)) = writer.as_mut() {
                write_exchange(w, start + i as u64, &run.trace).map_err(io_err(p))?;
            }
            summaries.push(ExchangeSummary::of(&run.trace, run.completed));
            blinding.observe(run);
        }
        start = end;
    }
    if let Some((p, mut w)) = writer {
        w.flush().map_err(io_err(p))?;
    }

    let stats = stats_from_summaries(&params, &summaries);
    let (report, worst_z) = protocol_report(
        meta("simulate", common, config),
        &params,
        &spec,
        &stats,
        &blinding,
    );
    let mut status = protocol_status(&stats, &blinding);
    if status.is_ok() && check && worst_z > 3.0 {
        status = Err(CliError::Verification(format!(
            "|z| = {worst_z:.2} exceeds 3"
        )));
    }
    Ok(Outcome { report, status })
}

pub(crate) fn replay(common: &Common, s: &Settings, a: &ReplayArgs) -> Result<Outcome, CliError> {
    let path: Option<PathBuf> = match &a.trace {
        Some(p) => {
            s.optional::<PathBuf>("trace", None)?;
            Some(p.clone())
        }
        None => s.optional("trace", None)?,
    };
    s.finish()?;
    let path = path.ok_or_else(|| usage("replay needs --trace <file>"))?;
    let file = File::open(&path).map_err(io_err(&path))?;
    let trace = read_trace(BufReader::new(file)).map_err(|e| match e {
        TraceError::Io(source) => CliError::Io {
            path: path.clone(),
            source,
        },
        parse => CliError::Io {
            path: path.clone(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, parse.to_string()),
        },
    })?;
    let h = trace.header;
    let spec = ChannelSpec::rayleigh(h.mean_gain_bob, h.mean_gain_eve, h.params.point.power)
        .map_err(usage)?;
    let runs = trace.runs();
    let mut blinding = Blinding::new(h.params.payload_bits);
    let summaries: Vec<ExchangeSummary> = runs
        .iter()
        .map(|r| {
            blinding.observe(r);
            ExchangeSummary::of(&r.trace, r.completed)
        })
        .collect();
    let stats = stats_from_summaries(&h.params, &summaries);
    let bad = inconsistent_frames(&trace);

    let pt = h.params.point;
    let config = json!({
        "trace": path,
        "header": {
            "r0": pt.r0, "rc": pt.rc, "power": pt.power, "k": pt.k,
            "payload_bits": h.params.payload_bits, "max_frames": h.params.max_frames,
            "seed": h.params.seed, "mean_gain_bob": h.mean_gain_bob, "mean_gain_eve": h.mean_gain_eve,
        },
    });
    let (mut report, _) = protocol_report(
        meta("replay", common, config),
        &h.params,
        &spec,
        &stats,
        &blinding,
    );
    let listed: Vec<Value> = bad
        .iter()
        .take(20)
        .map(|&(e, f)| json!({"exchange": e, "frame": f}))
        .collect();
    let mut check = Map::new();
    check.insert("inconsistent_frames".into(), Value::from(bad.len()));
    check.insert("first_inconsistent".into(), Value::Array(listed));
    report
        .extra
        .insert("threshold_check".into(), Value::Object(check));

    let status = if !bad.is_empty() {
        Err(CliError::Verification(format!(
            "{} frames disagree with the recorded thresholds",
            bad.len()
        )))
    } else {
        protocol_status(&stats, &blinding)
    };
    Ok(Outcome { report, status })
}

fn default_schemes() -> SchemeList {
    "uncoded-bpsk-240,uncoded-bpsk-480,coded-bpsk-240,coded-bpsk-480,coded-qpsk-240,coded-qpsk-480"
        .parse()
        .expect("valid built-in schemes")
}

pub(crate) fn fec(common: &Common, s: &Settings, a: &FecArgs) -> Result<Outcome, CliError> {
    let schemes: SchemeList = s.get("schemes", a.schemes.as_deref(), default_schemes())?;
    let snr_db: FloatList = s.get("snr-db", a.snr_db.as_deref(), range(-20.0, 5.0, 40.0))?;
    let trials: u64 = s.get("trials", a.trials.as_deref(), MIN_TRIALS)?;
    let target: f64 = s.get("target", a.target.as_deref(), 1e-10)?;
    let budget: usize = s.get("genie-budget", a.genie_budget.as_deref(), 50)?;
    let genie_raw: String = s.get("genie", a.genie.as_deref(), "post".to_string())?;
    let decision_raw: String = s.get("decision", a.decision.as_deref(), "soft".to_string())?;
    let puncture_raw: String = s.get("puncture", a.puncture.as_deref(), "1/2".to_string())?;
    s.finish()?;
    let genie: GenieArg = genie_raw
        .parse()
        .map_err(|e| usage(format!("--genie: {e}")))?;
    let decision: DecisionArg = decision_raw
        .parse()
        .map_err(|e| usage(format!("--decision: {e}")))?;
    let puncture: PunctureArg = puncture_raw
        .parse()
        .map_err(|e| usage(format!("--puncture: {e}")))?;
    if trials < MIN_TRIALS {
        return Err(usage(format!(
            "trials must be at least {MIN_TRIALS}, got {trials}"
        )));
    }

    let cfg = ExperimentConfig {
        code: ConvCodeSpec::k7().punctured(puncture.0),
        link: LinkConfig {
            genie_budget: budget,
            genie_mode: genie.0,
            decision: decision.0,
        },
        trials_per_point: trials,
        target,
        seed: common.seed,
    };
    let config = json!({
        "schemes": schemes, "snr_db": snr_db, "trials": trials, "target": target,
        "genie_budget": budget, "genie": genie_raw, "decision": decision_raw, "puncture": puncture_raw,
    });
    let points = fig4_experiment(&schemes.0, &snr_db.0, &cfg).map_err(usage)?;

    let mut report = Report::new(
        meta("fec", common, config),
        vec![
            "scheme",
            "snr_db",
            "trials",
            "p",
            "q",
            "k_star",
            "r0_eff",
            "key_rate",
            "key_rate_std_err",
            "infeasible",
        ],
    );
    for p in &points {
        report.push(vec![
            Cell::S(p.scheme.clone()),
            p.snr_db.into(),
            p.trials.into(),
            p.p.into(),
            p.q.into(),
            p.k_star.into(),
            p.r0_eff.into(),
            p.key_rate.into(),
            p.key_rate_std_err.into(),
            p.infeasible.into(),
        ]);
    }
    let shapes: Vec<Value> = schemes
        .0
        .iter()
        .map(|sch: &PacketSpec| {
            let name = sch.to_string();
            let (v, e): (Vec<f64>, Vec<f64>) = points
                .iter()
                .filter(|p| p.scheme == name)
                .map(|p| (p.key_rate, p.key_rate_std_err))
                .unzip();
            json!({"scheme": name, "unimodal_2sigma": is_unimodal(&v, &e, 2.0)})
        })
        .collect();
    report.extra.insert("shape".into(), Value::Array(shapes));
    let status = if points.iter().all(|p| p.infeasible) {
        Err(CliError::Infeasible(
            "every point has Eve succeeding on all sampled packets".into(),
        ))
    } else {
        Ok(())
    };
    Ok(Outcome { report, status })
}
