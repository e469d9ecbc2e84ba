use std::collections::{BTreeMap, BTreeSet};

use crate::model::{CompetitionModel, InvalidModel};
use crate::runtime::{tabulate, RaceConfig, ResultsTable, Standing};

use super::EventLog;

#[derive(Default)]
struct Tally {
    started: Option<u64>,
    /// Accepted crossing times per measuring place.
    crossings: BTreeMap<u32, Vec<u64>>,
}

/// Results by direct counting, without compiling the model.
///
/// Crossings are debounced per (bib, place) against the last accepted one and
/// ignored before the competitor's start signal. Node `k` finishes at its
/// `laps_k`-th accepted crossing and the next node starts at that instant.
/// Events the runtime would refuse (unknown bib, place or agent, broadcast
/// crossings) are skipped.
pub fn results_oracle(
    model: &CompetitionModel,
    events: &EventLog,
    roster: &[u32],
    config: &RaceConfig,
) -> Result<ResultsTable, InvalidModel> {
    let path = model.ordering()?;
    let laps: Vec<u32> = path.iter().map(|id| model.node(*id).unwrap().laps).collect();
    let agents: BTreeSet<u32> = model.agents.iter().map(|a| a.id.0).collect();
    let mut tallies: BTreeMap<u32, Tally> = roster.iter().map(|b| (*b, Tally::default())).collect();

    for e in &events.events {
        if !agents.contains(&e.agent) || e.mp as usize > path.len() {
            continue;
        }
        if e.mp == 0 {
            for (bib, tally) in tallies.iter_mut() {
                if (e.competitor == 0 || e.competitor == *bib) && tally.started.is_none() {
                    tally.started = Some(e.timestamp);
                }
            }
            continue;
        }
        let Some(tally) = tallies.get_mut(&e.competitor) else {
            continue;
        };
        let seen = tally.crossings.entry(e.mp).or_default();
        if let Some(last) = seen.last() {
            if e.timestamp.abs_diff(*last) < config.debounce_ms {
                continue;
            }
        }
        if tally.started.is_none() {
            continue;
        }
        seen.push(e.timestamp);
    }

    let standings: Vec<Standing> = tallies
        .into_iter()
        .map(|(bib, tally)| {
            let mut starts = Vec::with_capacity(path.len());
            let mut finishes = Vec::with_capacity(path.len());
            let mut laps_left = Vec::with_capacity(path.len());
            let mut start = tally.started;
            for (k, need) in laps.iter().enumerate() {
                let seen = tally.crossings.get(&(k as u32 + 1)).map_or(&[][..], Vec::as_slice);
                let finish = seen.get(*need as usize - 1).copied();
                starts.push(start);
                finishes.push(finish);
                laps_left.push(need.saturating_sub(seen.len() as u32));
                start = finish;
            }
            Standing {
                bib,
                starts,
                finishes,
                laps_left,
            }
        })
        .collect();

    Ok(tabulate(
        &model.name,
        path.iter().map(|id| model.node(*id).unwrap().name.clone()).collect(),
        &standings,
    ))
}
