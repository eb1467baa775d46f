use std::io::Write;

use finicode_core::codebook::{construct_family, family_invariants_report, FamilyReport, MARKER};
use finicode_core::coder::{compare_round_trip, Code, CodedWindow, Status, Window, UNKNOWN};
use finicode_core::matching::{iterate_matchings, verify_ladder, ClassRow, LadderCheck, LadderStop, TupleAlphabet};
use finicode_core::stats::{
    info_walk_experiment, markov_sigma2, markov_sigma2_batch_means, tail_experiment, theorem1_constant,
    truncated_moment_curve, Estimate, MarkovChainSpec, MatrixInput, MomentCurve, Sampler, TailConfig, TailReport,
    WalkConfig, WalkReport,
};
use finicode_core::{DyadicPolynomial, DyadicRational, Error as CoreError, ProbabilityVector};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, MAX_DEPTH};
use crate::error::CliError;
use crate::io::{read_window, Emitter, Report};

/// Batch-means cross-check of the Markov variance: batches × steps per batch.
const MARKOV_BATCHES: u64 = 200;
const MARKOV_BATCH_LEN: u64 = 5_000;
/// Mismatch positions listed per round-trip window.
const LISTED_MISMATCHES: usize = 20;

fn warn(msg: &str) {
    eprintln!("warning: {msg}");
}

fn depth(config: &ExperimentConfig) -> (usize, usize) {
    let requested = config.depth.unwrap_or(3);
    if requested > MAX_DEPTH {
        warn(&format!("depth {requested} exceeds the cap {MAX_DEPTH}; truncated"));
    }
    (requested, requested.min(MAX_DEPTH))
}

#[derive(Serialize)]
struct Coefficient {
    degree: u32,
    value: String,
}

fn table(p: &DyadicPolynomial) -> Vec<Coefficient> {
    p.terms().map(|(degree, c)| Coefficient { degree, value: c.to_string() }).collect()
}

/// Exact values rendered as fractions.
#[derive(Serialize)]
struct Summary {
    entropy_p: String,
    entropy_q: String,
    variance_p: String,
    variance_q: String,
    t: String,
}

#[derive(Serialize)]
struct VectorsResult {
    n: u32,
    depth_requested: usize,
    depth: usize,
    holds: bool,
    summary: Summary,
    p: ProbabilityVector,
    q: ProbabilityVector,
    gamma: Vec<Coefficient>,
    delta: Vec<Coefficient>,
    warnings: Vec<String>,
    report: FamilyReport,
}

impl Report for VectorsResult {
    fn write_csv<W: Write>(&self, out: &mut csv::Writer<W>) -> Result<(), CliError> {
        out.write_record(["table", "key", "value"])?;
        let s = &self.summary;
        for (k, v) in [
            ("entropy_p", &s.entropy_p),
            ("entropy_q", &s.entropy_q),
            ("variance_p", &s.variance_p),
            ("variance_q", &s.variance_q),
            ("t", &s.t),
        ] {
            out.write_record(["summary", k, v])?;
        }
        out.write_record(["summary", "holds", &self.holds.to_string()])?;
        for (name, pv) in [("p", &self.p), ("q", &self.q)] {
            for (sym, prob) in pv.iter() {
                out.write_record([name, &sym.to_string(), &prob.to_string()])?;
            }
        }
        for (name, rows) in [("gamma", &self.gamma), ("delta", &self.delta)] {
            for c in rows {
                out.write_record([name, &c.degree.to_string(), &c.value])?;
            }
        }
        Ok(())
    }
}

pub fn vectors(config: &ExperimentConfig, emitter: &Emitter) -> Result<(), CliError> {
    let n = config.n.unwrap_or(2);
    let (depth_requested, depth) = depth(config);
    let fam = construct_family(n)?;
    let report = family_invariants_report(&fam, depth)?;
    let mut warnings = Vec::new();
    if report.variance_p != report.variance_q {
        warnings.push(format!(
            "informational variances differ ({} vs {}): every finitary isomorphism has E(N ∧ n) of order √n or more",
            report.variance_p, report.variance_q
        ));
    }
    warnings.iter().for_each(|w| warn(w));
    let holds = report.holds();
    let result = VectorsResult {
        n,
        depth_requested,
        depth,
        holds,
        summary: Summary {
            entropy_p: report.entropy_p.to_string(),
            entropy_q: report.entropy_q.to_string(),
            variance_p: report.variance_p.to_string(),
            variance_q: report.variance_q.to_string(),
            t: report.t.to_string(),
        },
        p: fam.p.clone(),
        q: fam.q.clone(),
        gamma: table(&fam.gamma),
        delta: table(&fam.delta),
        warnings,
        report,
    };
    emitter.emit(&result)?;
    if !holds {
        return Err(CliError::Identity(format!("family identities fail for n = {n}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct LevelSummary {
    level: usize,
    mass_reduction: DyadicRational,
    mass_reduction_display: String,
    reduction_is_t: bool,
    classes: Vec<ClassRow>,
}

#[derive(Serialize)]
struct MatchingsResult {
    n: u32,
    depth_requested: usize,
    depth: usize,
    truncated: bool,
    t: String,
    holds: bool,
    levels: Vec<LevelSummary>,
    stop: Option<LadderStop>,
    ladder: LadderCheck,
}

impl Report for MatchingsResult {
    fn write_csv<W: Write>(&self, out: &mut csv::Writer<W>) -> Result<(), CliError> {
        out.write_record(["level", "degree", "source", "target", "matched", "mass_reduction"])?;
        for level in &self.levels {
            for c in &level.classes {
                out.write_record([
                    level.level.to_string(),
                    c.degree.to_string(),
                    c.source.to_string(),
                    c.target.to_string(),
                    c.matched.to_string(),
                    level.mass_reduction_display.clone(),
                ])?;
            }
        }
        Ok(())
    }
}

pub fn matchings(config: &ExperimentConfig, emitter: &Emitter) -> Result<(), CliError> {
    let n = config.n.unwrap_or(2);
    let (depth_requested, depth) = depth(config);
    let fam = construct_family(n)?;
    let ladder = iterate_matchings(&TupleAlphabet::base(&fam.r)?, &TupleAlphabet::base(&fam.s)?, depth, 0);
    let levels: Vec<LevelSummary> = ladder
        .matchings
        .into_iter()
        .map(|m| LevelSummary {
            level: m.level,
            mass_reduction_display: m.mass_reduction.to_string(),
            reduction_is_t: m.mass_reduction == fam.t,
            mass_reduction: m.mass_reduction,
            classes: m.classes,
        })
        .collect();
    let check = verify_ladder(&fam.gamma, &fam.delta, &fam.t, depth);
    let holds = check.holds && levels.iter().all(|l| l.reduction_is_t);
    let result = MatchingsResult {
        n,
        depth_requested,
        depth,
        truncated: depth < depth_requested,
        t: fam.t.to_string(),
        holds,
        levels,
        stop: ladder.stop,
        ladder: check,
    };
    emitter.emit(&result)?;
    if !holds {
        return Err(CliError::Identity(format!("ladder identities fail for n = {n}")));
    }
    Ok(())
}

/// The input window: a file if given, else a sample of the side being read.
fn input_window(config: &ExperimentConfig, pv: &ProbabilityVector) -> Result<Window, CliError> {
    match &config.input {
        Some(path) => read_window(path, config.lo),
        None => {
            let h = config.half_width.unwrap_or(10_000) as i64;
            let lo = config.lo.unwrap_or(-h);
            Ok(Sampler::new(pv)?.window(config.seed.unwrap_or(0), 0, lo, lo + 2 * h))
        }
    }
}

#[derive(Serialize)]
struct TransduceResult {
    code: String,
    direction: &'static str,
    positions: usize,
    determined: usize,
    censored: usize,
    input: Window,
    coded: CodedWindow,
}

fn symbol_text(s: u32) -> String {
    if s == UNKNOWN {
        "?".into()
    } else {
        s.to_string()
    }
}

impl Report for TransduceResult {
    fn write_csv<W: Write>(&self, out: &mut csv::Writer<W>) -> Result<(), CliError> {
        out.write_record(["position", "input", "output", "status", "step", "radius"])?;
        for (i, status) in self.coded.status.iter().enumerate() {
            let (name, step, radius) = match status {
                Status::Determined { step, radius } => ("determined", step.to_string(), radius.to_string()),
                Status::Censored => ("censored", String::new(), String::new()),
            };
            out.write_record([
                self.coded.output.position(i).to_string(),
                symbol_text(self.input.symbols[i]),
                symbol_text(self.coded.output.symbols[i]),
                name.to_string(),
                step,
                radius,
            ])?;
        }
        Ok(())
    }
}

pub fn transduce(config: &ExperimentConfig, emitter: &Emitter, decode: bool) -> Result<(), CliError> {
    let code = config.build_code()?;
    let (read, direction) = if decode { (code.target(), "decode") } else { (code.source(), "encode") };
    let input = input_window(config, read)?;
    let coded = if decode { code.decode(&input)? } else { code.encode(&input)? };
    if let Some(level) = coded.ladder_unavailable {
        warn(&format!("ladder level {level} unavailable; affected positions left censored"));
    }
    let determined = coded.determined_count();
    let result = TransduceResult {
        code: code.name(),
        direction,
        positions: input.len(),
        determined,
        censored: input.len() - determined,
        input,
        coded,
    };
    emitter.emit(&result)
}

#[derive(Serialize)]
struct RoundTripWindow {
    trial: u64,
    positions: usize,
    encoded_determined: usize,
    mutually_determined: usize,
    mismatches: usize,
    first_mismatches: Vec<i64>,
    /// Markers of the input stay markers through both passes.
    markers_preserved: bool,
}

#[derive(Serialize)]
struct RoundTripResult {
    code: String,
    half_width: Option<u64>,
    seed: Option<u64>,
    total_mutually_determined: usize,
    total_mismatches: usize,
    windows: Vec<RoundTripWindow>,
}

impl Report for RoundTripResult {
    fn write_csv<W: Write>(&self, out: &mut csv::Writer<W>) -> Result<(), CliError> {
        out.write_record([
            "trial",
            "positions",
            "encoded_determined",
            "mutually_determined",
            "mismatches",
            "markers_preserved",
        ])?;
        for w in &self.windows {
            out.write_record([
                w.trial.to_string(),
                w.positions.to_string(),
                w.encoded_determined.to_string(),
                w.mutually_determined.to_string(),
                w.mismatches.to_string(),
                w.markers_preserved.to_string(),
            ])?;
        }
        Ok(())
    }
}

fn round_trip_window(code: &Code, trial: u64, input: &Window) -> Result<RoundTripWindow, CliError> {
    let encoded = code.encode(input)?;
    let decoded = code.decode(&encoded.output)?;
    let rt = compare_round_trip(input, &encoded, &decoded);
    let markers_preserved = match code {
        Code::Meshalkin { .. } => true,
        Code::Phi(_) => input.symbols.iter().enumerate().all(|(i, s)| {
            (*s == MARKER) == (encoded.output.symbols[i] == MARKER)
                && (*s == MARKER) == (decoded.output.symbols[i] == MARKER)
        }),
    };
    Ok(RoundTripWindow {
        trial,
        positions: rt.positions,
        encoded_determined: encoded.determined_count(),
        mutually_determined: rt.mutually_determined,
        mismatches: rt.mismatches.len(),
        first_mismatches: rt.mismatches.into_iter().take(LISTED_MISMATCHES).collect(),
        markers_preserved,
    })
}

pub fn roundtrip(config: &ExperimentConfig, emitter: &Emitter) -> Result<(), CliError> {
    let code = config.build_code()?;
    let windows = match &config.input {
        Some(path) => vec![round_trip_window(&code, 0, &read_window(path, config.lo)?)?],
        None => {
            let sampler = Sampler::new(code.source())?;
            let h = config.half_width.unwrap_or(10_000) as i64;
            let seed = config.seed.unwrap_or(0);
            (0..config.windows.unwrap_or(1))
                .map(|t| round_trip_window(&code, t, &sampler.window(seed, t, -h, h)))
                .collect::<Result<_, _>>()?
        }
    };
    let sampled = config.input.is_none();
    let result = RoundTripResult {
        code: code.name(),
        half_width: config.half_width.filter(|_| sampled),
        seed: config.seed.filter(|_| sampled),
        total_mutually_determined: windows.iter().map(|w| w.mutually_determined).sum(),
        total_mismatches: windows.iter().map(|w| w.mismatches).sum(),
        windows,
    };
    emitter.emit(&result)?;
    if result.total_mismatches > 0 {
        return Err(CliError::Identity(format!("{} round-trip mismatches", result.total_mismatches)));
    }
    if !result.windows.iter().all(|w| w.markers_preserved) {
        return Err(CliError::Identity("marker positions changed".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct TailsResult {
    report: TailReport,
    /// Lower bound on `liminf E(N ∧ n)/√n` for this pair of vectors.
    lower_bound_constant: f64,
    moment_curve: Option<MomentCurve>,
    coverage_error: Option<String>,
}

impl Report for TailsResult {
    fn write_csv<W: Write>(&self, out: &mut csv::Writer<W>) -> Result<(), CliError> {
        out.write_record(["n", "survival_lo", "survival_hi", "trunc_moment", "stderr"])?;
        for (s, t) in self.report.survival.iter().zip(&self.report.truncated) {
            out.write_record([
                s.n.to_string(),
                s.lo.to_string(),
                s.hi.to_string(),
                t.mean.to_string(),
                t.stderr.to_string(),
            ])?;
        }
        Ok(())
    }
}

pub fn tails(config: &ExperimentConfig, emitter: &Emitter) -> Result<(), CliError> {
    let code = config.build_code()?;
    let mut tc =
        TailConfig::new(config.trials.unwrap_or(10_000), config.half_width.unwrap_or(10_000), config.seed.unwrap_or(0));
    if let Some(t) = &config.thresholds {
        tc.thresholds = t.clone();
    }
    if let Some(t) = &config.thetas {
        tc.thetas = t.clone();
    }
    if let Some(r) = config.fit_range {
        tc.fit_range = r;
    }
    let report = tail_experiment(&code, &tc)?;
    let bound = theorem1_constant(code.source(), code.target())?;
    let (moment_curve, coverage) = match truncated_moment_curve(&report, bound) {
        Ok(c) => (Some(c), None),
        Err(e @ CoreError::InsufficientCoverage { .. }) => (None, Some(e)),
        Err(e) => return Err(e.into()),
    };
    if report.fitted_exponent.is_none() {
        warn("too few resolved thresholds in the fit range; no exponent fitted");
    }
    let result = TailsResult {
        report,
        lower_bound_constant: bound,
        moment_curve,
        coverage_error: coverage.as_ref().map(|e| e.to_string()),
    };
    emitter.emit(&result)?;
    match coverage {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

impl Report for WalkReport {
    fn write_csv<W: Write>(&self, out: &mut csv::Writer<W>) -> Result<(), CliError> {
        for p in &self.points {
            out.serialize(p)?;
        }
        Ok(())
    }
}

pub fn walk(config: &ExperimentConfig, emitter: &Emitter) -> Result<(), CliError> {
    let code = config.build_code()?;
    let wc = WalkConfig::new(
        config.trials.unwrap_or(10_000),
        config.half_width.unwrap_or(10_000),
        config.seed.unwrap_or(0),
        config.n_list.clone().unwrap_or_else(|| vec![100, 1_000]),
    );
    let report = info_walk_experiment(&code, &wc)?;
    for p in report.points.iter().filter(|p| !p.coding_bound_holds) {
        warn(&format!("coding bound exceeded at n = {} beyond three standard errors", p.n));
    }
    emitter.emit(&report)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixFile {
    Full(MatrixInput),
    Bare(Vec<Vec<f64>>),
}

#[derive(Serialize)]
struct MarkovResult {
    /// Where the transition matrix came from.
    source: String,
    chain: MarkovChainSpec,
    entropy: f64,
    sigma2: Estimate,
    batch_means: Estimate,
}

impl Report for MarkovResult {
    fn write_csv<W: Write>(&self, out: &mut csv::Writer<W>) -> Result<(), CliError> {
        out.write_record(["quantity", "value", "stderr"])?;
        out.write_record(["entropy", &self.entropy.to_string(), "0"])?;
        for e in [&self.sigma2, &self.batch_means] {
            out.write_record([format!("sigma2_{}", e.method), e.value.to_string(), e.stderr.to_string()])?;
        }
        Ok(())
    }
}

pub fn markov(config: &ExperimentConfig, emitter: &Emitter) -> Result<(), CliError> {
    let (chain, source) = match &config.matrix {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let file: MatrixFile = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: not a transition matrix: {e}", path.display())))?;
            let input = match file {
                MatrixFile::Full(m) => m,
                MatrixFile::Bare(matrix) => MatrixInput { matrix, regeneration_state: None },
            };
            (MarkovChainSpec::from_input(input)?, path.display().to_string())
        }
        None => {
            // i.i.d. chain on the source vector of the selected code
            let code = config.build_code()?;
            let source = format!("identical rows of the {} source vector", code.name());
            (MarkovChainSpec::identical_rows(code.source())?, source)
        }
    };
    let seed = config.seed.unwrap_or(0);
    let sigma2 = markov_sigma2(&chain, config.blocks.unwrap_or(100_000), seed)?;
    let batch_means = markov_sigma2_batch_means(&chain, MARKOV_BATCHES, MARKOV_BATCH_LEN, seed)?;
    let result = MarkovResult { source, entropy: chain.entropy, chain, sigma2, batch_means };
    emitter.emit(&result)
}
