//! Results tables: segment times, totals, status and ranking.
//!
//! Both the rule-executing runtime and the counting oracle reduce a race to a
//! list of [`Standing`]s and share [`tabulate`] for the final table.

use std::cmp::Reverse;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Finished,
    OnCourse,
    NotStarted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRow {
    pub rank: Option<u32>,
    pub bib: u32,
    pub status: Status,
    /// `Finish(K) - Start(K)` per path node, in ms.
    pub segments: Vec<Option<i64>>,
    /// `Finish(last) - Start(first)`, in ms.
    pub total: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub competition: String,
    /// Node names in path order; one segment column each.
    pub nodes: Vec<String>,
    pub rows: Vec<ResultRow>,
}

/// Per-competitor times along the path, however they were obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Standing {
    pub bib: u32,
    pub starts: Vec<Option<u64>>,
    pub finishes: Vec<Option<u64>>,
    pub laps_left: Vec<u32>,
}

impl Standing {
    fn completed(&self) -> usize {
        self.finishes.iter().filter(|f| f.is_some()).count()
    }

    /// Laps still to go at the first unfinished node.
    fn laps_in_current(&self) -> u32 {
        self.finishes
            .iter()
            .position(Option::is_none)
            .map_or(0, |k| self.laps_left[k])
    }
}

fn diff(finish: Option<u64>, start: Option<u64>) -> Option<i64> {
    Some(finish? as i64 - start? as i64)
}

/// Builds the ranked table. Finished rows come first by total (ties share a
/// rank, the next rank skips), then competitors on course by progress, then
/// those that never started. Remaining ties are broken by bib.
pub fn tabulate(competition: &str, nodes: Vec<String>, standings: &[Standing]) -> ResultsTable {
    let mut finished = Vec::new();
    let mut on_course = Vec::new();
    let mut not_started = Vec::new();

    for s in standings {
        let segments: Vec<Option<i64>> = s
            .finishes
            .iter()
            .zip(&s.starts)
            .map(|(f, st)| diff(*f, *st))
            .collect();
        let total = diff(
            s.finishes.last().copied().flatten(),
            s.starts.first().copied().flatten(),
        );
        let status = if total.is_some() {
            Status::Finished
        } else if s.starts.first().copied().flatten().is_none() {
            Status::NotStarted
        } else {
            Status::OnCourse
        };
        let row = ResultRow {
            rank: None,
            bib: s.bib,
            status,
            segments,
            total,
        };
        match status {
            Status::Finished => finished.push(row),
            Status::OnCourse => on_course.push((s, row)),
            Status::NotStarted => not_started.push(row),
        }
    }

    finished.sort_by_key(|r| (r.total, r.bib));
    let mut prev_total = None;
    let mut rank = 0;
    for (i, row) in finished.iter_mut().enumerate() {
        if row.total != prev_total {
            rank = i as u32 + 1;
            prev_total = row.total;
        }
        row.rank = Some(rank);
    }
    on_course.sort_by_key(|(s, r)| (Reverse(s.completed()), s.laps_in_current(), r.bib));
    not_started.sort_by_key(|r| r.bib);

    let mut rows = finished;
    rows.extend(on_course.into_iter().map(|(_, r)| r));
    rows.extend(not_started);
    ResultsTable {
        competition: competition.to_string(),
        nodes,
        rows,
    }
}

/// `h:mm:ss.mmm`.
pub fn format_duration(ms: i64) -> String {
    let sign = if ms < 0 { "-" } else { "" };
    let ms = ms.unsigned_abs();
    format!(
        "{sign}{}:{:02}:{:02}.{:03}",
        ms / 3_600_000,
        ms / 60_000 % 60,
        ms / 1000 % 60,
        ms % 1000
    )
}

impl ResultsTable {
    pub fn row(&self, bib: u32) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.bib == bib)
    }

    /// Fixed-width text rendering, one line per competitor.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        write!(out, "{:>4}  {:>6}  {:<10}", "rank", "bib", "status").unwrap();
        for name in &self.nodes {
            write!(out, "  {:>12}", truncate(name, 12)).unwrap();
        }
        writeln!(out, "  {:>12}", "total").unwrap();
        let cell = |v: Option<i64>| v.map_or_else(|| "-".to_string(), format_duration);
        for row in &self.rows {
            let rank = row.rank.map_or_else(|| "-".to_string(), |r| r.to_string());
            let status = match row.status {
                Status::Finished => "Finished",
                Status::OnCourse => "OnCourse",
                Status::NotStarted => "NotStarted",
            };
            write!(out, "{rank:>4}  {:>6}  {status:<10}", row.bib).unwrap();
            for seg in &row.segments {
                write!(out, "  {:>12}", cell(*seg)).unwrap();
            }
            writeln!(out, "  {:>12}", cell(row.total)).unwrap();
        }
        out
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}
