//! Acceptance checks, one line per criterion. Runs the real binary and, for
//! the cross-surface check, a real server on a loopback port.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use serde_json::{json, Value};

use easytime::compiler::{compile, Variable};
use easytime::dsl;
use easytime::model::{from_exchange, to_exchange};
use easytime::runtime::{replay, RaceConfig, ResultsTable, Status};
use easytime::simulator::{results_oracle, simulate, EventLog, SimConfig};
use easytime::strategies::{canonical_model, valid_model};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn easytime(args: &[&str]) -> Result<Output, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_easytime"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "`easytime {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let strategy = (
        valid_model().prop_filter("needs a node", |m| !m.nodes.is_empty()),
        1u32..=50,
        any::<u64>(),
    );
    runner(200)
        .run(&strategy, |(model, competitors, seed)| {
            let config = SimConfig::new(seed, competitors);
            let log = simulate(&model, &config).unwrap();
            let roster = config.roster();
            let oracle = results_oracle(&model, &log, &roster, &RaceConfig::default()).unwrap();
            let runtime = replay(compile(&model).unwrap(), &roster, RaceConfig::default(), &log.events)
                .unwrap()
                .results();
            prop_assert_eq!(runtime, oracle);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("200 cases in {:.2}s", elapsed.as_secs_f64()))
}

fn olympic_end_to_end() -> Check {
    let model = dsl::load(&read(&models().join("olympic.et"))?).map_err(|e| e.to_string())?;
    let program = compile(&model).map_err(|e| e.to_string())?;
    ensure(program.rule_count() == 14, || format!("{} rules", program.rule_count()))?;
    let config = SimConfig::new(42, 50);
    let log = simulate(&model, &config).map_err(|e| e.to_string())?;
    let state = replay(program, &config.roster(), RaceConfig::default(), &log.events).map_err(|e| e.to_string())?;
    let table = state.results();
    ensure(table.rows.len() == 50, || format!("{} rows", table.rows.len()))?;
    for row in &table.rows {
        ensure(row.status == Status::Finished, || format!("bib {} is {:?}", row.bib, row.status))?;
        let sum: i64 = row.segments.iter().map(|s| s.unwrap_or(0)).sum();
        ensure(Some(sum) == row.total, || format!("bib {}: segments sum to {sum}, total {:?}", row.bib, row.total))?;
    }
    let program = &state.program;
    for (bib, competitor) in &state.competitors {
        let time = |v| competitor.value(program, v).and_then(|v| v.time());
        let mut previous_finish = None;
        for node in &program.path {
            let (start, finish) = (time(Variable::Start(node.id)), time(Variable::Finish(node.id)));
            let (Some(start), Some(finish)) = (start, finish) else {
                return Err(format!("bib {bib}: {} has unset times", node.name));
            };
            ensure(start <= finish, || format!("bib {bib}: {} ends before it starts", node.name))?;
            if let Some(prev) = previous_finish {
                ensure(prev == start, || format!("bib {bib}: gap before {}", node.name))?;
            }
            previous_finish = Some(finish);
        }
    }
    Ok("14 rules, 50 finishers, telescoping and chain hold".into())
}

fn dsl_round_trip() -> Check {
    runner(200)
        .run(&canonical_model(1..=6, 1..=5), |model| {
            let text = dsl::format(&model).unwrap();
            prop_assert_eq!(dsl::load(&text).unwrap(), model);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("200 models".into())
}

fn exchange_round_trip() -> Check {
    runner(200)
        .run(&valid_model(), |model| {
            prop_assert_eq!(from_exchange(&to_exchange(&model)).unwrap(), model);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let doc = read(&models().join("olympic.json"))?;
    let model = from_exchange(&doc).map_err(|e| e.to_string())?;
    ensure(to_exchange(&model) == doc, || "olympic.json does not re-serialize byte-exact".into())?;
    Ok("200 models plus the bundled document".into())
}

fn cli_convert_round_trip() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for name in ["olympic", "duathlon"] {
        let source = models().join(format!("{name}.et"));
        let json = dir.path().join(format!("{name}.json"));
        let back = dir.path().join(format!("{name}.et"));
        easytime(&["convert", p(&source), "--to", "exchange", "--out", p(&json)])?;
        easytime(&["convert", p(&json), "--to", "dsl", "--out", p(&back)])?;
        let canonical = easytime(&["fmt", "--stdout", p(&source)])?.stdout;
        ensure(read(&back)?.as_bytes() == canonical.as_slice(), || format!("{name}: differs from fmt output"))?;
    }
    Ok("olympic and duathlon byte-exact".into())
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let model = models().join("olympic.et");
    let mut runs = Vec::new();
    for run in 0..2 {
        let log = dir.path().join(format!("run{run}.log"));
        let results = dir.path().join(format!("run{run}.json"));
        let listing = easytime(&["compile", p(&model)])?.stdout;
        easytime(&["simulate", p(&model), "--seed", "42", "--competitors", "50", "--noise", "0.2", "--out", p(&log)])?;
        let table = easytime(&["replay", p(&model), "--events", p(&log), "--results-out", p(&results)])?.stdout;
        let manifest = read(&dir.path().join(format!("run{run}.log.manifest.json")))?;
        runs.push((listing, read(&log)?, manifest, table, read(&results)?));
    }
    let (a, b) = (&runs[0], &runs[1]);
    ensure(a.0 == b.0, || "compile output differs".into())?;
    ensure(a.1 == b.1 && a.2 == b.2, || "simulate output differs".into())?;
    ensure(a.3 == b.3 && a.4 == b.4, || "replay output differs".into())?;
    Ok("compile, simulate and replay byte-identical".into())
}

fn debounce() -> Check {
    let model = dsl::load(&read(&models().join("olympic.et"))?).map_err(|e| e.to_string())?;
    let clean = SimConfig::new(42, 50);
    let mut noisy = clean.clone();
    noisy.duplicate_probability = Some(0.3);
    let clean_log = simulate(&model, &clean).map_err(|e| e.to_string())?;
    let noisy_log = simulate(&model, &noisy).map_err(|e| e.to_string())?;
    let extra = noisy_log.events.len() - clean_log.events.len();
    ensure(extra > 0, || "noise produced no duplicates".into())?;
    let program = compile(&model).map_err(|e| e.to_string())?;
    let run = |log: &EventLog| {
        replay(program.clone(), &clean.roster(), RaceConfig::with_debounce(30_000), &log.events).map(|s| s.results())
    };
    let (a, b) = (run(&clean_log), run(&noisy_log));
    ensure(a.is_ok() && a == b, || "noisy results differ from the clean run".into())?;
    Ok(format!("{extra} duplicate reads absorbed"))
}

struct Server {
    child: Child,
    addr: String,
    _dir: tempfile::TempDir,
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

const TOKEN: &str = "acceptance-token";

fn start_server() -> Result<Server, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut child = Command::new(env!("CARGO_BIN_EXE_easytime"))
        .args(["serve", "--addr", "127.0.0.1:0"])
        .env("EASYTIME_TOKEN", TOKEN)
        .env("EASYTIME_DATA_DIR", dir.path())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| e.to_string())?;
    let stderr = child.stderr.take().unwrap();
    let mut lines = BufReader::new(stderr).lines();
    let addr = loop {
        match lines.next() {
            Some(Ok(line)) => {
                if let Some(addr) = line.strip_prefix("listening on http://") {
                    break addr.to_string();
                }
            }
            _ => {
                let _ = child.kill();
                return Err("server exited before listening".into());
            }
        }
    };
    std::thread::spawn(move || lines.for_each(drop));
    Ok(Server { child, addr, _dir: dir })
}

impl Server {
    fn request(&self, method: &str, path: &str, body: &str) -> Result<(u16, String), String> {
        let mut stream = TcpStream::connect(&self.addr).map_err(|e| e.to_string())?;
        let request = format!(
            "{method} {path} HTTP/1.1\r\nHost: {}\r\nAuthorization: Bearer {TOKEN}\r\n\
             Content-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            self.addr,
            body.len()
        );
        stream.write_all(request.as_bytes()).map_err(|e| e.to_string())?;
        let mut raw = String::new();
        stream.read_to_string(&mut raw).map_err(|e| e.to_string())?;
        let (head, body) = raw.split_once("\r\n\r\n").ok_or("malformed response")?;
        let status = head
            .split_whitespace()
            .nth(1)
            .and_then(|s| s.parse().ok())
            .ok_or("malformed status line")?;
        Ok((status, body.to_string()))
    }

    fn json(&self, method: &str, path: &str, body: &str) -> Result<(u16, Value), String> {
        let (status, text) = self.request(method, path, body)?;
        let value = serde_json::from_str(&text).map_err(|e| format!("{method} {path}: {e}: {text}"))?;
        Ok((status, value))
    }
}

fn cross_surface() -> Check {
    let server = start_server()?;

    let mut fixtures = 0;
    let mut entries: Vec<_> = std::fs::read_dir(models().join("invalid"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for path in entries {
        let code = path.file_stem().unwrap().to_str().unwrap().to_string();
        let (status, body) = server.json("POST", "/models", &read(&path)?)?;
        let codes: Vec<&str> = body["report"]["errors"]
            .as_array()
            .map(|a| a.iter().filter_map(|f| f["code"].as_str()).collect())
            .unwrap_or_default();
        ensure(status == 422 && codes.contains(&code.as_str()), || {
            format!("{code}: got {status} {body}")
        })?;
        fixtures += 1;
    }

    let model_path = models().join("olympic.json");
    let (status, body) = server.json("POST", "/models", &read(&model_path)?)?;
    ensure(status == 201, || format!("model create: {status} {body}"))?;
    let model_id = body["id"].as_str().unwrap().to_string();
    let roster: Vec<u32> = (1..=50).collect();
    let (status, body) = server.json("POST", "/races", &json!({"model_id": model_id, "roster": roster}).to_string())?;
    ensure(status == 201, || format!("race create: {status} {body}"))?;
    let race = body["id"].as_str().unwrap().to_string();
    let (status, _) = server.json("POST", &format!("/races/{race}/start"), "")?;
    ensure(status == 200, || format!("start: {status}"))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let log_path = dir.path().join("seed42.log");
    easytime(&["simulate", p(&model_path), "--seed", "42", "--competitors", "50", "--out", p(&log_path)])?;
    let log = EventLog::parse(&read(&log_path)?).map_err(|e| e.message)?;
    for e in &log.events {
        let body = json!({"ts_ms": e.timestamp, "bib": e.competitor, "mp": e.mp, "agent": e.agent});
        let (status, reply) = server.json("POST", &format!("/races/{race}/events"), &body.to_string())?;
        ensure(status == 200 && reply["seq"] == e.seq, || format!("event {}: {status} {reply}", e.seq))?;
    }
    let (status, live) = server.json("GET", &format!("/races/{race}/results"), "")?;
    ensure(status == 200, || format!("results: {status}"))?;

    let results_path = dir.path().join("offline.json");
    easytime(&["replay", p(&model_path), "--events", p(&log_path), "--results-out", p(&results_path)])?;
    let offline: Value = serde_json::from_str(&read(&results_path)?).map_err(|e| e.to_string())?;
    ensure(live == offline, || "live results differ from offline replay".into())?;
    let table: ResultsTable = serde_json::from_value(live).map_err(|e| e.to_string())?;
    ensure(table.rows.iter().all(|r| r.status == Status::Finished), || "not everyone finished".into())?;
    Ok(format!("{} events posted, {fixtures} invalid fixtures rejected", log.events.len()))
}

fn main() {
    let checks: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("olympic end-to-end", olympic_end_to_end),
        ("round-trip (a) dsl", dsl_round_trip),
        ("round-trip (b) exchange", exchange_round_trip),
        ("round-trip (c) cli convert", cli_convert_round_trip),
        ("determinism", determinism),
        ("debounce", debounce),
        ("server/cli cross-surface", cross_surface),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
