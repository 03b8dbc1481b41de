//! Seeded batch certification.
//!
//! Every trial is identified by `(inequality id, base seed, trial index)`.
//! The index fixes the weight, dimension and map kind through a mixed-radix
//! layout; a per-trial seed drives instance generation. Records carry the
//! per-trial seed and the layout values, so a record replays without the
//! run configuration.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::apps::{
    concavity_reverse, default_eps_schedule, epsilon_regularized_mean, holder_reverse, tsallis_reverse,
    tsallis_superadditivity,
};
use crate::error::{Error, Result};
use crate::hm::{hm_classic, hm_mixed_chain, hm_reverse_simple, hm_self_reverse, hm_two_map_chain, UnitVector};
use crate::matspd::{random_hpd_with, random_psd_singular, Field, HpdMatrix, SlackReport, DEFAULT_TOL, MAX_DIM};
use crate::posmaps::{ando_check, ando_reverse_bound, ando_reverse_bound_n2, random_map, MapKind};
use crate::refinements::{kittaneh_chain, sababheh_lower, sababheh_upper, zhao_lower_n2, zhao_upper_n2};
use crate::scalar_young::{DEFAULT_TERMS, MAX_TERMS};

/// Resampling budget when a generated map image is numerically singular.
const MAX_ATTEMPTS: usize = 16;

macro_rules! ids {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// Registered inequality families.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum InequalityId { $($variant),* }

        impl InequalityId {
            pub const ALL: &'static [InequalityId] = &[$(InequalityId::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(InequalityId::$variant => $name),* }
            }
        }
    };
}

ids! {
    Kitt => "kitt",
    ZhaoLower => "zhao_lower",
    ZhaoUpper => "zhao_upper",
    SabLower => "sab_lower",
    SabUpper => "sab_upper",
    Ando => "ando",
    AndoRev => "ando_rev",
    AndoRevN2 => "ando_rev_n2",
    HmClassic => "hm_classic",
    HmTwoMap => "hm_two_map",
    HmMixed => "hm_mixed",
    HmSelf => "hm_self",
    HmSimple => "hm_simple",
    HolderRev => "holder_rev",
    ConcavityRev => "concavity_rev",
    TsallisSuper => "tsallis_super",
    TsallisRev => "tsallis_rev",
    EpsLimit => "eps_limit",
}

impl InequalityId {
    /// Whether trials of this id draw a positive map.
    pub fn uses_map(self) -> bool {
        use InequalityId::*;
        matches!(self, Ando | AndoRev | AndoRevN2 | HmTwoMap | HmMixed | HmSelf)
    }

    /// Whether the map must be unital.
    fn needs_unital(self) -> bool {
        use InequalityId::*;
        matches!(self, HmTwoMap | HmMixed | HmSelf)
    }

    /// Whether the weight must lie in the open interval.
    fn open_weight(self) -> bool {
        use InequalityId::*;
        !matches!(self, Kitt | SabLower | SabUpper | Ando | AndoRev | HmClassic | EpsLimit)
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InequalityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.iter().copied().find(|id| id.name() == s).ok_or_else(|| Error::UnknownInequality(s.to_owned()))
    }
}

/// How trial weights are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TMode {
    /// `{0.05, 0.10, ..., 0.95}`, which contains the `r0` kinks.
    DefaultGrid,
    /// `k` equally spaced interior points `i / (k + 1)`.
    Grid(usize),
    /// Uniform on `(0, 1)`.
    Uniform,
}

impl TMode {
    pub fn values(&self) -> Vec<f64> {
        match self {
            TMode::DefaultGrid => {
                let mut g: Vec<f64> = (1..=19).map(|i| i as f64 / 20.0).collect();
                for kink in [0.25, 0.5, 0.75] {
                    if !g.contains(&kink) {
                        g.push(kink);
                    }
                }
                g
            }
            TMode::Grid(k) => (1..=*k).map(|i| i as f64 / (*k + 1) as f64).collect(),
            TMode::Uniform => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub inequality_ids: Vec<InequalityId>,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub t_mode: TMode,
    pub n_terms: usize,
    pub cond_cap: f64,
    pub tol: f64,
    pub map_kinds: Vec<MapKind>,
    pub field: Field,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inequality_ids: InequalityId::ALL.to_vec(),
            dims: vec![2, 3, 4, 8],
            trials: 100,
            seed: 0,
            t_mode: TMode::DefaultGrid,
            n_terms: DEFAULT_TERMS,
            cond_cap: 1e4,
            tol: DEFAULT_TOL,
            map_kinds: MapKind::ALL.to_vec(),
            field: Field::Complex,
            output_path: None,
            format: OutputFormat::Jsonl,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if self.inequality_ids.is_empty() {
            return Err(Error::domain("no inequality ids selected"));
        }
        if self.dims.is_empty() || self.dims.iter().any(|&d| d == 0 || d > MAX_DIM) {
            return Err(Error::domain(format!("dims must be a nonempty subset of 1..={MAX_DIM}")));
        }
        if self.map_kinds.is_empty() {
            return Err(Error::domain("no map kinds selected"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 || !self.tol.is_finite() {
            return Err(Error::domain("tol must be positive"));
        }
        if self.cond_cap.is_nan() || self.cond_cap < 1.0 || !self.cond_cap.is_finite() {
            return Err(Error::domain("cond_cap must be at least 1"));
        }
        if self.n_terms == 0 || self.n_terms > MAX_TERMS {
            return Err(Error::domain(format!("N must lie in 1..={MAX_TERMS}")));
        }
        if matches!(self.t_mode, TMode::Grid(0)) {
            return Err(Error::domain("t grid needs at least one point"));
        }
        Ok(())
    }

    /// Fixes weight, dimension, map kind and seed of one trial.
    pub fn trial_spec(&self, id: InequalityId, trial: usize) -> TrialSpec {
        let seed = trial_seed(self.seed, id, trial);
        let mut idx = trial;
        let map_kind = if id.uses_map() {
            let k = self.map_kinds[idx % self.map_kinds.len()];
            idx /= self.map_kinds.len();
            Some(k)
        } else {
            None
        };
        let t = match self.t_mode {
            TMode::Uniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ T_STREAM);
                rng.random_range(f64::EPSILON..1.0)
            }
            _ => {
                let grid = self.t_mode.values();
                let v = grid[idx % grid.len()];
                idx /= grid.len();
                v
            }
        };
        let dim = self.dims[idx % self.dims.len()];
        TrialSpec {
            id,
            seed,
            base_seed: self.seed,
            trial,
            dim,
            t,
            n_terms: self.n_terms,
            cond_cap: self.cond_cap,
            tol: self.tol,
            map_kind,
            field: self.field,
        }
    }
}

const T_STREAM: u64 = 0x005E_ED0F_77EE_D5EE;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed; independent of scheduling.
pub fn trial_seed(base: u64, id: InequalityId, trial: usize) -> u64 {
    let id_index = InequalityId::ALL.iter().position(|&x| x == id).expect("registered id") as u64;
    splitmix64(splitmix64(base ^ splitmix64(id_index + 1)).wrapping_add(trial as u64))
}

/// Everything needed to evaluate one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub id: InequalityId,
    pub seed: u64,
    pub base_seed: u64,
    pub trial: usize,
    pub dim: usize,
    pub t: f64,
    pub n_terms: usize,
    pub cond_cap: f64,
    pub tol: f64,
    pub map_kind: Option<MapKind>,
    pub field: Field,
}

/// One line of the output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub inequality_id: String,
    pub seed: u64,
    pub base_seed: u64,
    pub trial: usize,
    pub dim: usize,
    pub t: f64,
    #[serde(rename = "N")]
    pub n_terms: usize,
    /// Slack of the worst certified side, in its own units.
    pub slack: f64,
    pub scale: f64,
    pub passed: bool,
    /// Which side `slack` belongs to.
    pub side: String,
    pub map_kind: Option<MapKind>,
    pub cond_cap: f64,
    pub tol: f64,
    pub field: Field,
    /// Worst relative slack among sides that are recorded but not asserted.
    pub unasserted_slack: Option<f64>,
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn relative_slack(&self) -> f64 {
        if self.scale > 0.0 {
            self.slack / self.scale
        } else {
            self.slack
        }
    }

    /// Rebuilds the trial from the record alone.
    pub fn spec(&self) -> Result<TrialSpec> {
        let id: InequalityId = self.inequality_id.parse()?;
        if self.dim == 0 || self.dim > MAX_DIM || self.n_terms == 0 || self.n_terms > MAX_TERMS {
            return Err(Error::MalformedRecord(format!("dim {} / N {} out of range", self.dim, self.n_terms)));
        }
        if id.uses_map() != self.map_kind.is_some() {
            return Err(Error::MalformedRecord(format!("map kind {:?} does not fit id {id}", self.map_kind)));
        }
        if !(0.0..=1.0).contains(&self.t) {
            return Err(Error::MalformedRecord(format!("weight {} outside [0, 1]", self.t)));
        }
        Ok(TrialSpec {
            id,
            seed: self.seed,
            base_seed: self.base_seed,
            trial: self.trial,
            dim: self.dim,
            t: self.t,
            n_terms: self.n_terms,
            cond_cap: self.cond_cap,
            tol: self.tol,
            map_kind: self.map_kind,
            field: self.field,
        })
    }
}

/// Reports produced by one evaluation.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub asserted: Vec<SlackReport>,
    pub unasserted: Vec<SlackReport>,
    /// A failed non-Loewner condition (such as non-convergence).
    pub extra_failure: Option<String>,
}

impl Outcome {
    fn asserted(reports: impl IntoIterator<Item = SlackReport>) -> Self {
        Self { asserted: reports.into_iter().collect(), ..Self::default() }
    }
}

fn hpd(rng: &mut ChaCha8Rng, s: &TrialSpec, n: usize) -> HpdMatrix {
    random_hpd_with(rng, n, s.cond_cap, s.field)
}

fn hpd_list(rng: &mut ChaCha8Rng, s: &TrialSpec) -> (Vec<HpdMatrix>, Vec<HpdMatrix>) {
    let count = rng.random_range(1..=3);
    let a = (0..count).map(|_| hpd(rng, s, s.dim)).collect();
    let b = (0..count).map(|_| hpd(rng, s, s.dim)).collect();
    (a, b)
}

fn evaluate_once(s: &TrialSpec, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    use InequalityId::*;
    let (t, n, terms) = (s.t, s.dim, s.n_terms);
    let map_for = |rng: &mut ChaCha8Rng| {
        let kind = s.map_kind.ok_or_else(|| Error::domain("trial needs a map kind"))?;
        let unital = s.id.needs_unital() || rng.random_bool(0.5);
        Ok::<_, Error>(random_map(rng, kind, n, unital, s.field))
    };
    Ok(match s.id {
        Kitt => {
            let ch = kittaneh_chain(&hpd(rng, s, n), &hpd(rng, s, n), t)?;
            Outcome::asserted([ch.lower_report, ch.upper_report])
        }
        ZhaoLower => Outcome::asserted([zhao_lower_n2(&hpd(rng, s, n), &hpd(rng, s, n), t)?.report]),
        ZhaoUpper => Outcome::asserted([zhao_upper_n2(&hpd(rng, s, n), &hpd(rng, s, n), t)?.report]),
        SabLower => Outcome::asserted([sababheh_lower(&hpd(rng, s, n), &hpd(rng, s, n), t, terms)?.report]),
        SabUpper => Outcome::asserted([sababheh_upper(&hpd(rng, s, n), &hpd(rng, s, n), t, terms)?.report]),
        Ando | AndoRev | AndoRevN2 => {
            let map = map_for(rng)?;
            let (a, b) = (hpd(rng, s, map.input_dim()), hpd(rng, s, map.input_dim()));
            match s.id {
                Ando => Outcome::asserted([ando_check(&map, &a, &b, t)?]),
                AndoRev => Outcome::asserted([ando_reverse_bound(&map, &a, &b, t, terms)?.report]),
                _ => {
                    let r = ando_reverse_bound_n2(&map, &a, &b, t)?;
                    Outcome::asserted([r.tight_report, r.loose_report])
                }
            }
        }
        HmClassic => {
            let t_mat = hpd(rng, s, n);
            Outcome::asserted([hm_classic(&t_mat, &UnitVector::random(rng, n, s.field), t)?])
        }
        HmTwoMap | HmMixed => {
            let phi = map_for(rng)?;
            let psi = map_for(rng)?;
            let a = hpd(rng, s, phi.input_dim());
            let b = hpd(rng, s, psi.input_dim());
            let x = UnitVector::random(rng, n, s.field);
            let ch = if s.id == HmTwoMap {
                hm_two_map_chain(&phi, &psi, &a, &b, &x, t)?
            } else {
                hm_mixed_chain(&phi, &psi, &a, &b, &x, t)?
            };
            Outcome::asserted([ch.lower_report, ch.upper_report])
        }
        HmSelf => {
            let phi = map_for(rng)?;
            let a = hpd(rng, s, phi.input_dim());
            let ch = hm_self_reverse(&phi, &a, &UnitVector::random(rng, n, s.field), t)?;
            Outcome::asserted([ch.lower_report, ch.upper_report])
        }
        HmSimple => {
            let t_mat = hpd(rng, s, n);
            let r = hm_reverse_simple(&t_mat, &UnitVector::random(rng, n, s.field), t.min(1.0 - t))?;
            if r.loose_applicable {
                Outcome::asserted([r.tight_report, r.loose_report])
            } else {
                Outcome { asserted: vec![r.tight_report], unasserted: vec![r.loose_report], extra_failure: None }
            }
        }
        HolderRev => {
            let (a, b) = hpd_list(rng, s);
            let r = holder_reverse(&a, &b, t)?;
            Outcome::asserted([r.report, r.holder_report])
        }
        ConcavityRev => {
            let count = rng.random_range(1..=3);
            let raw: Vec<f64> = (0..count).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let head: f64 = weights[1..].iter().sum();
            weights[0] = 1.0 - head;
            let ts: Vec<_> = (0..count).map(|_| hpd(rng, s, n)).collect();
            let r = concavity_reverse(&weights, &ts, t)?;
            Outcome::asserted([r.report, r.concavity_report])
        }
        TsallisSuper => {
            let (a, b) = hpd_list(rng, s);
            Outcome::asserted([tsallis_superadditivity(&a, &b, t)?])
        }
        TsallisRev => {
            let (a, b) = hpd_list(rng, s);
            Outcome::asserted([tsallis_reverse(&a, &b, t)?.report])
        }
        EpsLimit => {
            let a = hpd(rng, s, n);
            let b = random_psd_singular(rng, n, 1, s.cond_cap, s.field);
            let (_, rep) = epsilon_regularized_mean(&a, &b, t, &default_eps_schedule(&a, &b))?;
            let worst = rep.worst(t, n);
            Outcome {
                asserted: vec![SlackReport { passed: worst.slack >= -worst.tol * worst.scale, ..worst }],
                unasserted: Vec::new(),
                extra_failure: (!rep.converged).then(|| "successive differences not decreasing".to_owned()),
            }
        }
    })
}

/// Evaluates a trial, resampling when a map image is numerically singular.
pub fn evaluate(s: &TrialSpec) -> Result<Outcome> {
    if s.id.open_weight() && !(s.t > 0.0 && s.t < 1.0) {
        return Err(Error::domain(format!("{} needs 0 < t < 1, got {}", s.id, s.t)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut last = None;
    for _ in 0..MAX_ATTEMPTS {
        match evaluate_once(s, &mut rng) {
            Err(e @ Error::IllConditioned { .. }) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

fn worst_of(reports: &[SlackReport]) -> Option<&SlackReport> {
    reports.iter().min_by(|x, y| x.relative_slack().total_cmp(&y.relative_slack()))
}

/// Evaluates a trial and condenses it into a record.
pub fn run_trial(s: &TrialSpec) -> TrialRecord {
    let mut rec = TrialRecord {
        inequality_id: s.id.name().to_owned(),
        seed: s.seed,
        base_seed: s.base_seed,
        trial: s.trial,
        dim: s.dim,
        t: s.t,
        n_terms: s.n_terms,
        slack: 0.0,
        scale: 0.0,
        passed: false,
        side: String::new(),
        map_kind: s.map_kind,
        cond_cap: s.cond_cap,
        tol: s.tol,
        field: s.field,
        unasserted_slack: None,
        error: None,
    };
    match evaluate(s) {
        Ok(out) => {
            let asserted: Vec<SlackReport> = out.asserted.into_iter().map(|r| r.with_tol(s.tol)).collect();
            if let Some(w) = worst_of(&asserted) {
                rec.slack = w.slack;
                rec.scale = w.scale;
                rec.side = format!("{} <= {}", w.lhs_id, w.rhs_id);
            }
            rec.passed = asserted.iter().all(|r| r.passed) && out.extra_failure.is_none();
            rec.unasserted_slack = worst_of(&out.unasserted).map(SlackReport::relative_slack);
            rec.error = out.extra_failure;
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Scheduling of independent trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Data-parallel when the `parallel` feature is enabled.
    #[default]
    Parallel,
    Sequential,
}

fn map_trials(specs: &[TrialSpec], exec: Execution) -> Vec<TrialRecord> {
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel {
        use rayon::prelude::*;
        return specs.par_iter().map(run_trial).collect();
    }
    let _ = exec;
    specs.iter().map(run_trial).collect()
}

/// Per-id statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdSummary {
    pub inequality_id: String,
    pub trials: usize,
    pub failures: usize,
    /// Minimum relative slack.
    pub min_slack: f64,
    pub min_slack_seed: u64,
    pub median_slack: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub per_id: Vec<IdSummary>,
}

impl RunSummary {
    pub fn failures(&self) -> usize {
        self.per_id.iter().map(|s| s.failures).sum()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<14} {:>7} {:>8} {:>12} {:>20} {:>12} {:>9}",
            "id", "trials", "failures", "min_slack", "min_slack_seed", "median", "time_s"
        )?;
        for s in &self.per_id {
            writeln!(
                f,
                "{:<14} {:>7} {:>8} {:>12.4e} {:>20} {:>12.4e} {:>9.3}",
                s.inequality_id, s.trials, s.failures, s.min_slack, s.min_slack_seed, s.median_slack, s.wall_time
            )?;
        }
        Ok(())
    }
}

fn summarize(id: InequalityId, records: &[TrialRecord], wall_time: f64) -> IdSummary {
    let mut rel: Vec<f64> = records.iter().filter(|r| r.error.is_none() || r.passed).map(|r| r.relative_slack()).collect();
    rel.sort_by(f64::total_cmp);
    let worst = records.iter().min_by(|a, b| a.relative_slack().total_cmp(&b.relative_slack()));
    IdSummary {
        inequality_id: id.name().to_owned(),
        trials: records.len(),
        failures: records.iter().filter(|r| !r.passed).count(),
        min_slack: rel.first().copied().unwrap_or(f64::NAN),
        min_slack_seed: worst.map_or(0, |r| r.seed),
        median_slack: if rel.is_empty() { f64::NAN } else { rel[rel.len() / 2] },
        wall_time,
    }
}

/// Runs every trial without writing output.
pub fn run_records(config: &RunConfig, exec: Execution) -> Result<(Vec<TrialRecord>, RunSummary)> {
    config.validate()?;
    let mut records = Vec::with_capacity(config.trials * config.inequality_ids.len());
    let mut per_id = Vec::with_capacity(config.inequality_ids.len());
    for &id in &config.inequality_ids {
        let start = Instant::now();
        let specs: Vec<TrialSpec> = (0..config.trials).map(|i| config.trial_spec(id, i)).collect();
        let recs = map_trials(&specs, exec);
        per_id.push(summarize(id, &recs, start.elapsed().as_secs_f64()));
        records.extend(recs);
    }
    Ok((records, RunSummary { per_id }))
}

pub fn write_records(records: &[TrialRecord], out: impl Write, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Jsonl => {
            let mut w = BufWriter::new(out);
            for r in records {
                serde_json::to_writer(&mut w, r)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Runs the configuration and writes records to `output_path`, if any.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    let file = config.output_path.as_ref().map(File::create).transpose()?;
    let (records, summary) = run_records(config, Execution::Parallel)?;
    if let Some(file) = file {
        write_records(&records, file, config.format)?;
    }
    Ok(summary)
}

/// Reads a JSONL record file.
pub fn read_records(text: &str) -> Result<Vec<TrialRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::MalformedRecord(e.to_string())))
        .collect()
}

/// Re-evaluates a record; the returned report carries the recomputed worst
/// slack and the record's seed.
pub fn replay(record: &TrialRecord) -> Result<SlackReport> {
    let spec = record.spec()?;
    let rec = run_trial(&spec);
    if let Some(e) = rec.error.filter(|_| !rec.passed && rec.scale == 0.0) {
        return Err(Error::MalformedRecord(format!("trial no longer evaluates: {e}")));
    }
    let mut report = SlackReport::new(rec.slack, rec.scale, rec.tol)
        .labeled(&rec.inequality_id, "", &rec.side)
        .at(rec.t, rec.dim)
        .with_seed(rec.seed);
    report.passed = rec.passed;
    Ok(report)
}

/// Whether a replayed slack reproduces the recorded one within `rel_tol`.
pub fn replay_matches(record: &TrialRecord, replayed: &SlackReport, rel_tol: f64) -> bool {
    let denom = record.slack.abs().max(replayed.slack.abs()).max(f64::MIN_POSITIVE);
    record.slack == replayed.slack || (record.slack - replayed.slack).abs() <= rel_tol * denom
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(ids: &[InequalityId], trials: usize) -> RunConfig {
        RunConfig { inequality_ids: ids.to_vec(), dims: vec![2, 3], trials, seed: 7, ..RunConfig::default() }
    }

    #[test]
    fn ids_round_trip() {
        for &id in InequalityId::ALL {
            assert_eq!(id.name().parse::<InequalityId>().unwrap(), id);
        }
        assert_eq!(InequalityId::ALL.len(), 18);
        assert!(matches!("nope".parse::<InequalityId>(), Err(Error::UnknownInequality(_))));
    }

    #[test]
    fn default_grid_contains_kinks() {
        let g = TMode::DefaultGrid.values();
        assert_eq!(g.len(), 19);
        for k in [0.25, 0.5, 0.75] {
            assert!(g.contains(&k));
        }
        assert_eq!(TMode::Grid(3).values(), vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn validation() {
        assert!(small(&[InequalityId::Kitt], 0).validate().is_err());
        let mut c = small(&[InequalityId::Kitt], 1);
        c.dims = vec![65];
        assert!(c.validate().is_err());
        c.dims = vec![2];
        c.tol = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn layout_covers_all_combinations() {
        let c = RunConfig { trials: 6 * 19 * 4, ..RunConfig::default() };
        let mut seen = std::collections::HashSet::new();
        for i in 0..c.trials {
            let s = c.trial_spec(InequalityId::Ando, i);
            seen.insert((s.map_kind, (s.t * 100.0) as i64, s.dim));
        }
        assert_eq!(seen.len(), 6 * 19 * 4);
    }

    #[test]
    fn seeds_differ_across_ids_and_trials() {
        let a = trial_seed(1, InequalityId::Kitt, 0);
        assert_ne!(a, trial_seed(1, InequalityId::Kitt, 1));
        assert_ne!(a, trial_seed(1, InequalityId::ZhaoLower, 0));
        assert_ne!(a, trial_seed(2, InequalityId::Kitt, 0));
    }

    #[test]
    fn every_id_runs_clean() {
        let (records, summary) = run_records(&small(InequalityId::ALL, 12), Execution::Parallel).unwrap();
        assert_eq!(records.len(), 12 * 18);
        for r in &records {
            assert!(r.passed, "{r:?}");
        }
        assert!(summary.passed(), "{summary}");
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let c = small(&[InequalityId::AndoRev, InequalityId::HmSelf], 10);
        let (p, _) = run_records(&c, Execution::Parallel).unwrap();
        let (s, _) = run_records(&c, Execution::Sequential).unwrap();
        assert_eq!(p, s);
    }

    #[test]
    fn replay_reproduces() {
        let (records, _) = run_records(&small(&[InequalityId::Kitt, InequalityId::EpsLimit], 5), Execution::Sequential).unwrap();
        for r in &records {
            let rep = replay(r).unwrap();
            assert!(replay_matches(r, &rep, 1e-14));
            assert_eq!(rep.passed, r.passed);
        }
        let mut altered = records[0].clone();
        altered.seed ^= 1;
        assert_ne!(replay(&altered).unwrap().slack, records[0].slack);
    }

    #[test]
    fn malformed_records_rejected() {
        let (records, _) = run_records(&small(&[InequalityId::Ando], 1), Execution::Sequential).unwrap();
        let mut r = records[0].clone();
        r.map_kind = None;
        assert!(matches!(replay(&r), Err(Error::MalformedRecord(_))));
        let mut r = records[0].clone();
        r.inequality_id = "bogus".into();
        assert!(replay(&r).is_err());
        assert!(read_records("{not json}").is_err());
    }
}
