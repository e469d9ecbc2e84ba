//! Seeded race simulation and the shared event-log file format.
//!
//! Every random draw comes from its own ChaCha8 stream whose 64-bit seed is
//! a SplitMix64 hash of `(seed, bib, node id, lap, stream)`. Lap times are
//! `Normal(mean, stddev)` samples (`rand_distr`, ziggurat method), rounded to
//! milliseconds and clamped to at least 1000 ms. Stream 0 is the lap time,
//! stream 1 decides whether a duplicate read follows the crossing and how long
//! after (uniform 1000..=5000 ms). True crossing times therefore do not depend
//! on the duplicate-read probability.

mod oracle;

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CompetitionModel, InvalidModel, NodeKind};
use crate::runtime::TimingEvent;

pub use oracle::results_oracle;

/// Distribution of one lap of a node, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pace {
    pub mean_ms: f64,
    pub stddev_ms: f64,
}

impl Pace {
    pub const fn new(mean_ms: f64, stddev_ms: f64) -> Self {
        Pace { mean_ms, stddev_ms }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Paces {
    pub swim: Pace,
    pub bike: Pace,
    pub run: Pace,
    pub ta1: Pace,
    pub ta2: Pace,
}

impl Default for Paces {
    fn default() -> Self {
        Paces {
            swim: Pace::new(900_000.0, 90_000.0),
            bike: Pace::new(900_000.0, 60_000.0),
            run: Pace::new(600_000.0, 60_000.0),
            ta1: Pace::new(120_000.0, 20_000.0),
            ta2: Pace::new(120_000.0, 20_000.0),
        }
    }
}

impl Paces {
    pub fn get(&self, kind: NodeKind) -> Pace {
        match kind {
            NodeKind::Swim => self.swim,
            NodeKind::Bike => self.bike,
            NodeKind::Run => self.run,
            NodeKind::TransitionArea1 => self.ta1,
            NodeKind::TransitionArea2 => self.ta2,
        }
    }

    pub fn set(&mut self, kind: NodeKind, pace: Pace) {
        match kind {
            NodeKind::Swim => self.swim = pace,
            NodeKind::Bike => self.bike = pace,
            NodeKind::Run => self.run = pace,
            NodeKind::TransitionArea1 => self.ta1 = pace,
            NodeKind::TransitionArea2 => self.ta2 = pace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    /// Bibs `1..=competitors` take part.
    pub competitors: u32,
    pub paces: Paces,
    /// Probability of a repeated read 1-5 s after each true crossing.
    pub duplicate_probability: Option<f64>,
}

impl SimConfig {
    pub fn new(seed: u64, competitors: u32) -> Self {
        SimConfig {
            seed,
            competitors,
            paces: Paces::default(),
            duplicate_probability: None,
        }
    }

    pub fn roster(&self) -> Vec<u32> {
        (1..=self.competitors).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Invalid(#[from] InvalidModel),
    #[error("model has no nodes to simulate")]
    EmptyPath,
    #[error("invalid simulation config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    pub events: Vec<TimingEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct LogParseError {
    pub line: usize,
    pub message: String,
}

impl EventLog {
    /// `ts_ms;bib;mp;agent` lines with a header comment.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# ts_ms;bib;mp;agent\n");
        for e in &self.events {
            writeln!(out, "{}", format_line(e)).unwrap();
        }
        out
    }

    /// Reads the line format. `#` starts a comment; blank lines are skipped.
    /// Events are stably sorted by timestamp and then numbered in that order.
    pub fn parse(text: &str) -> Result<EventLog, LogParseError> {
        let mut events = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| LogParseError {
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split(';').map(str::trim).collect();
            let [ts, bib, mp, agent] = fields.as_slice() else {
                return Err(err(format!("expected 4 `;`-separated fields, found {}", fields.len())));
            };
            let num = |name: &str, s: &str| {
                s.parse::<u64>()
                    .map_err(|_| err(format!("{name} `{s}` is not a non-negative integer")))
            };
            let small = |name: &str, s: &str| {
                let n = num(name, s)?;
                u32::try_from(n).map_err(|_| err(format!("{name} `{s}` is out of range")))
            };
            events.push(TimingEvent {
                timestamp: num("timestamp", ts)?,
                competitor: small("bib", bib)?,
                mp: small("mp", mp)?,
                agent: small("agent", agent)?,
                seq: 0,
            });
        }
        events.sort_by_key(|e| e.timestamp);
        for (seq, e) in events.iter_mut().enumerate() {
            e.seq = seq as u64;
        }
        Ok(EventLog { events })
    }
}

pub fn format_line(e: &TimingEvent) -> String {
    format!("{};{};{};{}", e.timestamp, e.competitor, e.mp, e.agent)
}

/// Sidecar description of a simulated log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub competition: String,
    pub seed: u64,
    pub competitors: u32,
    pub paces: Paces,
    pub duplicate_probability: Option<f64>,
    pub events: usize,
}

impl Manifest {
    pub fn new(model: &CompetitionModel, config: &SimConfig, log: &EventLog) -> Self {
        Manifest {
            competition: model.name.clone(),
            seed: config.seed,
            competitors: config.competitors,
            paces: config.paces,
            duplicate_probability: config.duplicate_probability,
            events: log.events.len(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn draw_rng(parts: [u64; 5]) -> ChaCha8Rng {
    let seed = parts
        .into_iter()
        .fold(0u64, |h, p| splitmix64(h ^ splitmix64(p)));
    ChaCha8Rng::seed_from_u64(seed)
}

const MIN_LAP_MS: i64 = 1000;
const STREAM_LAP: u64 = 0;
const STREAM_DUPLICATE: u64 = 1;

pub fn simulate(model: &CompetitionModel, config: &SimConfig) -> Result<EventLog, SimError> {
    let path = model.ordering()?;
    if path.is_empty() {
        return Err(SimError::EmptyPath);
    }
    if config.competitors == 0 {
        return Err(SimError::Config("competitors must be at least 1".into()));
    }
    let noise = config.duplicate_probability.unwrap_or(0.0);
    if !(0.0..=1.0).contains(&noise) {
        return Err(SimError::Config(format!(
            "duplicate probability {noise} is outside [0, 1]"
        )));
    }
    let mut distributions = Vec::with_capacity(path.len());
    for id in &path {
        let node = model.node(*id).expect("path nodes exist");
        let pace = config.paces.get(node.kind);
        if pace.mean_ms.is_nan() || pace.mean_ms <= 0.0 || pace.stddev_ms.is_nan() || pace.stddev_ms < 0.0 {
            return Err(SimError::Config(format!(
                "pace for {} needs mean > 0 and stddev >= 0",
                node.kind
            )));
        }
        let normal = Normal::new(pace.mean_ms, pace.stddev_ms)
            .map_err(|e| SimError::Config(e.to_string()))?;
        let agent = model.binding_of(*id).expect("valid nodes are bound");
        distributions.push((node, normal, agent));
    }

    let start_agent = distributions[0].2;
    let mut pending = vec![TimingEvent {
        timestamp: 0,
        competitor: 0,
        mp: 0,
        agent: start_agent.0,
        seq: 0,
    }];
    for bib in 1..=config.competitors {
        let mut t: u64 = 0;
        for (mp, (node, normal, agent)) in (1u32..).zip(&distributions) {
            for lap in 1..=node.laps {
                let key = |stream| [config.seed, bib as u64, node.id.0 as u64, lap as u64, stream];
                let sample = normal.sample(&mut draw_rng(key(STREAM_LAP)));
                t += (sample.round() as i64).max(MIN_LAP_MS) as u64;
                let crossing = TimingEvent {
                    timestamp: t,
                    competitor: bib,
                    mp,
                    agent: agent.0,
                    seq: 0,
                };
                pending.push(crossing);
                if noise > 0.0 {
                    let mut rng = draw_rng(key(STREAM_DUPLICATE));
                    if rng.random_bool(noise) {
                        let delay: u64 = rng.random_range(1000..=5000);
                        pending.push(TimingEvent {
                            timestamp: t + delay,
                            ..crossing
                        });
                    }
                }
            }
        }
    }

    // Stable: equal timestamps keep generation order.
    pending.sort_by_key(|e| e.timestamp);
    for (seq, e) in pending.iter_mut().enumerate() {
        e.seq = seq as u64;
    }
    Ok(EventLog { events: pending })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{load, OLYMPIC_SOURCE};

    fn olympic() -> CompetitionModel {
        load(OLYMPIC_SOURCE).unwrap()
    }

    #[test]
    fn deterministic_for_equal_inputs() {
        let config = SimConfig::new(42, 10);
        let a = simulate(&olympic(), &config).unwrap().to_text();
        let b = simulate(&olympic(), &config).unwrap().to_text();
        assert_eq!(a, b);
        let c = simulate(&olympic(), &SimConfig::new(43, 10)).unwrap().to_text();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_variance_accumulates_laps() {
        let model = load("competition \"Z\"; agent 1 auto \"a\"; swim s laps 2 agent 1;").unwrap();
        let mut config = SimConfig::new(7, 1);
        config.paces.swim = Pace::new(900_000.0, 0.0);
        let log = simulate(&model, &config).unwrap();
        let crossings: Vec<_> = log
            .events
            .iter()
            .filter(|e| e.mp == 1)
            .map(|e| e.timestamp)
            .collect();
        assert_eq!(crossings, vec![900_000, 1_800_000]);
        assert_eq!(log.events[0], TimingEvent { timestamp: 0, competitor: 0, mp: 0, agent: 1, seq: 0 });
    }

    #[test]
    fn olympic_has_eleven_crossings_per_bib() {
        let log = simulate(&olympic(), &SimConfig::new(42, 50)).unwrap();
        for bib in 1..=50 {
            let n = log.events.iter().filter(|e| e.competitor == bib).count();
            assert_eq!(n, 2 + 1 + 4 + 1 + 3, "bib {bib}");
        }
        assert_eq!(log.events.len(), 1 + 50 * 11);
        assert!(log
            .events
            .windows(2)
            .all(|w| (w[0].timestamp, w[0].seq) < (w[1].timestamp, w[1].seq)));
    }

    #[test]
    fn laps_are_clamped() {
        let model = load("competition \"Z\"; agent 1 auto \"a\"; run r laps 3 agent 1;").unwrap();
        let mut config = SimConfig::new(1, 5);
        config.paces.run = Pace::new(10.0, 5.0);
        let log = simulate(&model, &config).unwrap();
        for bib in 1..=5 {
            let times: Vec<_> = log.events.iter().filter(|e| e.competitor == bib).map(|e| e.timestamp).collect();
            assert_eq!(times, vec![1000, 2000, 3000]);
        }
    }

    #[test]
    fn duplicates_follow_true_crossings() {
        let mut noisy = SimConfig::new(42, 20);
        noisy.duplicate_probability = Some(0.3);
        let clean = simulate(&olympic(), &SimConfig::new(42, 20)).unwrap();
        let dirty = simulate(&olympic(), &noisy).unwrap();
        assert!(dirty.events.len() > clean.events.len());
        // Every clean crossing is still present with the same timestamp.
        for e in &clean.events {
            assert!(dirty.events.iter().any(|d| (d.timestamp, d.competitor, d.mp) == (e.timestamp, e.competitor, e.mp)));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            simulate(&CompetitionModel::new("E"), &SimConfig::new(1, 1)),
            Err(SimError::EmptyPath)
        );
        assert!(matches!(simulate(&olympic(), &SimConfig::new(1, 0)), Err(SimError::Config(_))));
        let mut c = SimConfig::new(1, 1);
        c.duplicate_probability = Some(1.5);
        assert!(matches!(simulate(&olympic(), &c), Err(SimError::Config(_))));
        let mut c = SimConfig::new(1, 1);
        c.paces.bike = Pace::new(0.0, 1.0);
        assert!(matches!(simulate(&olympic(), &c), Err(SimError::Config(_))));
    }

    #[test]
    fn log_text_round_trip_and_errors() {
        let log = simulate(&olympic(), &SimConfig::new(3, 4)).unwrap();
        assert_eq!(EventLog::parse(&log.to_text()).unwrap(), log);

        let parsed = EventLog::parse("# c\n\n5;1;2;3 # server-stamped\n").unwrap();
        assert_eq!(
            parsed.events,
            vec![TimingEvent { timestamp: 5, competitor: 1, mp: 2, agent: 3, seq: 0 }]
        );
        assert_eq!(EventLog::parse("1;2;3").unwrap_err().line, 1);
        assert_eq!(EventLog::parse("\n1;2;x;4").unwrap_err().line, 2);
        assert!(EventLog::parse("-1;2;3;4").is_err());
        assert!(EventLog::parse("1;99999999999;3;4").is_err());
    }

    #[test]
    fn parse_orders_by_timestamp_then_input() {
        let parsed = EventLog::parse("9;1;1;1\n3;2;1;1\n9;3;1;1\n").unwrap();
        let order: Vec<(u32, u64)> = parsed.events.iter().map(|e| (e.competitor, e.seq)).collect();
        assert_eq!(order, vec![(2, 0), (1, 1), (3, 2)]);
    }
}
