//! Deterministic replay of timing events through compiled programs.
//!
//! A [`RaceState`] is the left fold of [`RaceState::apply_event`] over an
//! event log. Measuring place 0 is the start signal: it sets `Start` of the
//! first path node and runs no rules. Any other place runs its program
//! against the competitor's variable store, one rule after the other.
//!
//! Events are processed strictly in arrival order (`seq`). A crossing at the
//! same place within the debounce window of the last accepted one is rejected
//! as a repeated read.

mod results;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{Action, CompiledProgram, Guard, Value, Variable};
use crate::model::AgentId;

pub use results::{format_duration, tabulate, ResultRow, ResultsTable, Standing, Status};

pub const DEFAULT_DEBOUNCE_MS: u64 = 30_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimingEvent {
    /// Milliseconds since the race epoch.
    pub timestamp: u64,
    /// Bib number; 0 addresses every competitor (start signal only).
    pub competitor: u32,
    /// Measuring place; 0 is the start signal.
    pub mp: u32,
    pub agent: u32,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaceConfig {
    pub debounce_ms: u64,
    pub epoch: String,
}

impl Default for RaceConfig {
    fn default() -> Self {
        RaceConfig {
            debounce_ms: DEFAULT_DEBOUNCE_MS,
            epoch: "race start".into(),
        }
    }
}

impl RaceConfig {
    pub fn with_debounce(debounce_ms: u64) -> Self {
        RaceConfig {
            debounce_ms,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompetitorState {
    pub bib: u32,
    /// One slot per entry of the program's variable table.
    pub values: Vec<Value>,
    /// Timestamp of the last accepted event per measuring place.
    pub last_accepted: BTreeMap<u32, u64>,
    last_timestamp: Option<u64>,
}

/// One variable change caused by an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Effect {
    pub bib: u32,
    pub var: Variable,
    pub old: Value,
    pub new: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rejection {
    Debounced,
    NotStarted,
    BroadcastNotAllowed,
    /// The event failed a precondition; see the matching [`EventError`].
    Invalid,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rejection::Debounced => "Debounced",
            Rejection::NotStarted => "NotStarted",
            Rejection::BroadcastNotAllowed => "BroadcastNotAllowed",
            Rejection::Invalid => "Invalid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error, Serialize, Deserialize)]
pub enum EventError {
    #[error("UnknownBib: bib {0} is not on the roster")]
    UnknownBib(u32),
    #[error("UnknownMp: measuring place {0} does not exist")]
    UnknownMp(u32),
    #[error("UnknownAgent: agent {0} is not in the model")]
    UnknownAgent(u32),
    #[error("SeqNotIncreasing: seq {seq} does not follow {last}")]
    SeqNotIncreasing { seq: u64, last: u64 },
}

impl EventError {
    pub fn code(&self) -> &'static str {
        match self {
            EventError::UnknownBib(_) => "UnknownBib",
            EventError::UnknownMp(_) => "UnknownMp",
            EventError::UnknownAgent(_) => "UnknownAgent",
            EventError::SeqNotIncreasing { .. } => "SeqNotIncreasing",
        }
    }
}

/// Outcome of an event that passed its preconditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Disposition {
    Accepted(Vec<Effect>),
    Rejected(Rejection),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptedEvent {
    pub event: TimingEvent,
    pub effects: Vec<Effect>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedEvent {
    pub event: TimingEvent,
    pub reason: Rejection,
    pub error: Option<EventError>,
}

/// Accepted event whose timestamp precedes the competitor's previous one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderWarning {
    pub seq: u64,
    pub bib: u32,
    pub timestamp: u64,
    pub previous: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InitError {
    #[error("EmptyRoster: a race needs at least one competitor")]
    EmptyRoster,
    #[error("DuplicateBib: bib {0} appears twice in the roster")]
    DuplicateBib(u32),
    #[error("InvalidBib: bib 0 is reserved for broadcasts")]
    InvalidBib,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Init(#[from] InitError),
    #[error("event #{seq}: {error}")]
    Event { seq: u64, error: EventError },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaceState {
    pub program: Arc<CompiledProgram>,
    pub config: RaceConfig,
    pub roster: BTreeSet<u32>,
    pub competitors: BTreeMap<u32, CompetitorState>,
    pub accepted: Vec<AcceptedEvent>,
    pub rejected: Vec<RejectedEvent>,
    pub warnings: Vec<OrderWarning>,
    last_seq: Option<u64>,
}

/// Creates the state of a race before any event.
pub fn init_race(
    program: impl Into<Arc<CompiledProgram>>,
    roster: &[u32],
    config: RaceConfig,
) -> Result<RaceState, InitError> {
    let program = program.into();
    if roster.is_empty() {
        return Err(InitError::EmptyRoster);
    }
    let mut bibs = BTreeSet::new();
    for &bib in roster {
        if bib == 0 {
            return Err(InitError::InvalidBib);
        }
        if !bibs.insert(bib) {
            return Err(InitError::DuplicateBib(bib));
        }
    }
    let initial: Vec<Value> = program.variables.iter().map(|(_, v)| *v).collect();
    let competitors = bibs
        .iter()
        .map(|&bib| {
            (
                bib,
                CompetitorState {
                    bib,
                    values: initial.clone(),
                    last_accepted: BTreeMap::new(),
                    last_timestamp: None,
                },
            )
        })
        .collect();
    Ok(RaceState {
        program,
        config,
        roster: bibs,
        competitors,
        accepted: Vec::new(),
        rejected: Vec::new(),
        warnings: Vec::new(),
        last_seq: None,
    })
}

/// Folds `events` in order over a fresh race.
pub fn replay(
    program: impl Into<Arc<CompiledProgram>>,
    roster: &[u32],
    config: RaceConfig,
    events: &[TimingEvent],
) -> Result<RaceState, ReplayError> {
    let mut state = init_race(program, roster, config)?;
    for event in events {
        state.apply_event(*event).map_err(|error| ReplayError::Event {
            seq: event.seq,
            error,
        })?;
    }
    Ok(state)
}

impl CompetitorState {
    fn get(&self, program: &CompiledProgram, var: Variable) -> Value {
        self.values[program.slot(var).expect("compiled variables have slots")]
    }

    pub fn value(&self, program: &CompiledProgram, var: Variable) -> Option<Value> {
        program.slot(var).map(|i| self.values[i])
    }

    fn eval(&self, program: &CompiledProgram, guard: &Guard) -> bool {
        match guard {
            Guard::True => true,
            Guard::Cmp { var, op, value } => {
                let n = self.get(program, *var).count().unwrap_or(0);
                op.holds(n as i64, *value)
            }
            Guard::IsSet(var) => self.get(program, *var).time().is_some(),
            Guard::IsUnset(var) => self.get(program, *var).time().is_none(),
            Guard::And(parts) => parts.iter().all(|g| self.eval(program, g)),
        }
    }

    /// Applies one action. `Start`/`Finish` are write-once and `Laps` stops at zero.
    fn exec(&mut self, program: &CompiledProgram, action: Action, timestamp: u64) -> Option<Effect> {
        let var = action.target();
        let slot = program.slot(var)?;
        let old = self.values[slot];
        let new = match (action, old) {
            (Action::Upd(_), Value::Time(None)) => Value::Time(Some(timestamp)),
            (Action::Dec(_), Value::Count(n)) if n > 0 => Value::Count(n - 1),
            _ => return None,
        };
        self.values[slot] = new;
        Some(Effect {
            bib: self.bib,
            var,
            old,
            new,
        })
    }
}

impl RaceState {
    fn first_start(&self) -> Option<Variable> {
        self.program.path.first().map(|n| Variable::Start(n.id))
    }

    /// Applies one event. Debounced, not-started and misaddressed events are
    /// recorded as rejections; precondition failures are recorded too and
    /// returned as errors.
    pub fn apply_event(&mut self, event: TimingEvent) -> Result<Disposition, EventError> {
        match self.check(&event) {
            Ok(()) => {}
            Err(error) => {
                self.rejected.push(RejectedEvent {
                    event,
                    reason: Rejection::Invalid,
                    error: Some(error),
                });
                return Err(error);
            }
        }
        self.last_seq = Some(event.seq);

        let disposition = if event.mp == 0 {
            self.start_signal(&event)
        } else if event.competitor == 0 {
            Disposition::Rejected(Rejection::BroadcastNotAllowed)
        } else {
            self.crossing(&event)
        };
        match &disposition {
            Disposition::Accepted(effects) => self.accepted.push(AcceptedEvent {
                event,
                effects: effects.clone(),
            }),
            Disposition::Rejected(reason) => self.rejected.push(RejectedEvent {
                event,
                reason: *reason,
                error: None,
            }),
        }
        Ok(disposition)
    }

    fn check(&self, event: &TimingEvent) -> Result<(), EventError> {
        if let Some(last) = self.last_seq {
            if event.seq <= last {
                return Err(EventError::SeqNotIncreasing {
                    seq: event.seq,
                    last,
                });
            }
        }
        if !self.program.agents.contains(&AgentId(event.agent)) {
            return Err(EventError::UnknownAgent(event.agent));
        }
        if event.mp as usize > self.program.node_count() {
            return Err(EventError::UnknownMp(event.mp));
        }
        if event.competitor != 0 && !self.roster.contains(&event.competitor) {
            return Err(EventError::UnknownBib(event.competitor));
        }
        Ok(())
    }

    fn note_order(&mut self, bib: u32, event: &TimingEvent) {
        let state = self.competitors.get_mut(&bib).expect("roster bib");
        if let Some(previous) = state.last_timestamp {
            if event.timestamp < previous {
                self.warnings.push(OrderWarning {
                    seq: event.seq,
                    bib,
                    timestamp: event.timestamp,
                    previous,
                });
            }
        }
        state.last_timestamp = Some(event.timestamp);
    }

    fn start_signal(&mut self, event: &TimingEvent) -> Disposition {
        let targets: Vec<u32> = if event.competitor == 0 {
            self.roster.iter().copied().collect()
        } else {
            vec![event.competitor]
        };
        let mut effects = Vec::new();
        let start = self.first_start();
        for bib in targets {
            self.note_order(bib, event);
            if let Some(var) = start {
                let program = Arc::clone(&self.program);
                let state = self.competitors.get_mut(&bib).expect("roster bib");
                effects.extend(state.exec(&program, Action::Upd(var), event.timestamp));
            }
        }
        Disposition::Accepted(effects)
    }

    fn crossing(&mut self, event: &TimingEvent) -> Disposition {
        let program = Arc::clone(&self.program);
        let window = self.config.debounce_ms;
        let start = self.first_start().expect("mp >= 1 implies a non-empty path");
        let state = self.competitors.get_mut(&event.competitor).expect("roster bib");

        if let Some(last) = state.last_accepted.get(&event.mp) {
            if event.timestamp.abs_diff(*last) < window {
                return Disposition::Rejected(Rejection::Debounced);
            }
        }
        if state.get(&program, start).time().is_none() {
            return Disposition::Rejected(Rejection::NotStarted);
        }

        state.last_accepted.insert(event.mp, event.timestamp);
        let block = &program.programs[&event.mp];
        let mut effects = Vec::new();
        for rule in &block.rules {
            if state.eval(&program, &rule.guard) {
                effects.extend(state.exec(&program, rule.action, event.timestamp));
            }
        }
        self.note_order(event.competitor, event);
        Disposition::Accepted(effects)
    }

    /// Path-ordered times of one competitor.
    pub fn standing(&self, bib: u32) -> Option<Standing> {
        let state = self.competitors.get(&bib)?;
        let program = &self.program;
        let mut standing = Standing {
            bib,
            starts: Vec::with_capacity(program.node_count()),
            finishes: Vec::with_capacity(program.node_count()),
            laps_left: Vec::with_capacity(program.node_count()),
        };
        for node in &program.path {
            standing.starts.push(state.get(program, Variable::Start(node.id)).time());
            standing.finishes.push(state.get(program, Variable::Finish(node.id)).time());
            standing
                .laps_left
                .push(state.get(program, Variable::Laps(node.id)).count().unwrap_or(0));
        }
        Some(standing)
    }

    pub fn results(&self) -> ResultsTable {
        let standings: Vec<Standing> = self
            .roster
            .iter()
            .filter_map(|bib| self.standing(*bib))
            .collect();
        tabulate(
            &self.program.name,
            self.program.path.iter().map(|n| n.name.clone()).collect(),
            &standings,
        )
    }
}
